//! Deterministic corridor simulator of the arm-equipped tracked robot.
//!
//! The robot is a rigid body of length [`SimConfig::robot_length`] whose
//! front sits at `x` cm along the corridor. Terrain is a 1-D height profile
//! of box obstacles and an ascending stair; pitch follows the support under
//! the front and rear halves of the body. Falls are discrete
//! (upright / fallen-left / fallen-right) and only the matching recovery arm
//! primitive rights the robot.
//!
//! Time advances in integer physics ticks of [`PHYSICS_DT`] seconds.

mod scenario;
mod sensors;

pub use scenario::{Obstacle, Perturbation, PerturbationKind, ScenarioSpec, Slip, Stair};
pub use sensors::{read_sensors, SensorConfig, SensorFrame, SensorSuite, Session};

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::domain::{ArmPrimitive, MotorCommand};

pub const PHYSICS_DT: f64 = 0.01;
/// Physics ticks per second.
pub const TICKS_PER_SECOND: u64 = 100;
/// Physics ticks per 10 Hz control tick.
pub const TICKS_PER_CONTROL: u64 = 10;

/// Model parameters. Defaults reproduce the timing table of the physical
/// robot: 1.0 s arm moves, 2.0 s failure recovery, 5.0 s delivery, 90° of
/// steering in 2.1 s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Full-speed forward velocity on flat ground, cm/s.
    pub base_speed: f64,
    /// Yaw rate under full differential drive (-1, 1), deg/s.
    pub yaw_rate: f64,
    pub robot_length: f64,
    /// Faces up to this height are climbed without the arm.
    pub h_small: f64,
    /// Faces up to this height are climbed with the arm held back.
    pub h_assist: f64,
    /// Speed factor while on uneven terrain without arm support.
    pub rough_speed_factor: f64,
    /// Speed factor while on uneven terrain with the arm back.
    pub climb_speed_factor: f64,
    /// Nose-up pitch while pressed against an unclimbable face, degrees.
    pub contact_pitch: f64,
    pub roll_fall_threshold: f64,
    /// Roll reported while lying on a side.
    pub fallen_roll: f64,
    pub arm_move_duration: f64,
    pub recovery_duration: f64,
    pub delivery_duration: f64,
    /// A delivery counts when it completes with the front this close to the wall, cm.
    pub delivery_range: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            base_speed: 20.0,
            yaw_rate: 90.0 / 2.1,
            robot_length: 20.0,
            h_small: 4.0,
            h_assist: 12.0,
            rough_speed_factor: 0.5,
            climb_speed_factor: 0.75,
            contact_pitch: 18.0,
            roll_fall_threshold: 60.0,
            fallen_roll: 90.0,
            arm_move_duration: 1.0,
            recovery_duration: 2.0,
            delivery_duration: 5.0,
            delivery_range: 20.0,
        }
    }
}

impl SimConfig {
    pub fn primitive_duration(&self, p: ArmPrimitive) -> f64 {
        match p {
            ArmPrimitive::Middle | ArmPrimitive::Back => self.arm_move_duration,
            ArmPrimitive::RecoverLeft | ArmPrimitive::RecoverRight => self.recovery_duration,
            ArmPrimitive::Delivery => self.delivery_duration,
        }
    }

    pub fn max_primitive_duration(&self) -> f64 {
        self.arm_move_duration
            .max(self.recovery_duration)
            .max(self.delivery_duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallen {
    None,
    Left,
    Right,
}

/// An arm primitive in progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmMotion {
    pub target: ArmPrimitive,
    pub start_tick: u64,
    pub until_tick: u64,
}

/// Full simulator state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub tick: u64,
    /// Front of the robot, cm from the start line.
    pub x: f64,
    pub lateral: f64,
    /// Unwrapped heading error, degrees; positive is clockwise (to the right).
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub fallen: Fallen,
    pub arm_pose: ArmPrimitive,
    pub arm_motion: Option<ArmMotion>,
    /// Pressed against a face the robot cannot climb in its current pose.
    pub contact: bool,
    /// Part of the body is on uneven terrain.
    pub on_feature: bool,
    /// Heading drift rate while on the current feature, deg/s.
    pub slip_drift: f64,
    pub falls: u32,
    pub recoveries: u32,
    pub deliveries: u32,
    next_perturbation: usize,
    rng: ChaCha8Rng,
}

impl SimState {
    pub fn t(&self) -> f64 {
        self.tick as f64 * PHYSICS_DT
    }

    /// Time at which the current arm primitive ends (the current time when idle).
    pub fn arm_busy_until(&self) -> f64 {
        self.arm_motion
            .map_or(self.t(), |m| m.until_tick as f64 * PHYSICS_DT)
    }

    pub fn arm_busy(&self) -> bool {
        self.arm_motion.is_some()
    }

    /// Pose-only view used for fixed-point comparisons.
    pub fn pose(&self) -> (f64, f64, f64, f64, f64, f64, Fallen, ArmPrimitive) {
        (
            self.x,
            self.lateral,
            self.yaw,
            self.pitch,
            self.roll,
            self.slip_drift,
            self.fallen,
            self.arm_pose,
        )
    }
}

/// A scenario bound to model parameters, with perturbations sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub spec: ScenarioSpec,
    pub config: SimConfig,
    schedule: Vec<Perturbation>,
}

impl World {
    /// `spec` must already be validated.
    pub fn new(spec: ScenarioSpec, config: SimConfig) -> Self {
        let mut schedule = spec.perturbations.clone();
        schedule.sort_by(|a, b| a.time.total_cmp(&b.time));
        World {
            spec,
            config,
            schedule,
        }
    }

    /// Noise-free front range along the heading to the nearest surface
    /// higher than `sonar_height` above the robot's base, capped at `max_range`.
    pub fn true_range(&self, s: &SimState, sonar_height: f64, max_range: f64) -> f64 {
        let cos = libm::cos(s.yaw.to_radians());
        if cos < libm::cos(60f64.to_radians()) {
            return max_range;
        }
        let base = self.spec.max_height(s.x - self.config.robot_length, s.x);
        let mut ahead = self.spec.wall_position - s.x;
        for (face, top) in self.spec.faces() {
            if face > s.x && top - base > sonar_height {
                ahead = ahead.min(face - s.x);
            }
        }
        (ahead.max(0.0) / cos).min(max_range)
    }

    pub fn wall_distance(&self, s: &SimState) -> f64 {
        self.spec.wall_position - s.x
    }
}

/// Initial state: at the start line, level, arm middle, upright.
pub fn sim_init(world: &World) -> SimState {
    let mut s = SimState {
        tick: 0,
        x: 0.0,
        lateral: 0.0,
        yaw: 0.0,
        pitch: 0.0,
        roll: 0.0,
        fallen: Fallen::None,
        arm_pose: ArmPrimitive::Middle,
        arm_motion: None,
        contact: false,
        on_feature: false,
        slip_drift: 0.0,
        falls: 0,
        recoveries: 0,
        deliveries: 0,
        next_perturbation: 0,
        rng: ChaCha8Rng::seed_from_u64(world.spec.seed),
    };
    update_attitude(world, &mut s);
    s
}

/// Apply one disturbance immediately.
pub fn apply_perturbation(world: &World, s: &mut SimState, kind: PerturbationKind, magnitude: f64) {
    let cfg = &world.config;
    match kind {
        PerturbationKind::YawKick => s.yaw += magnitude,
        PerturbationKind::PushLeft | PerturbationKind::PushRight => {
            if s.fallen != Fallen::None {
                return;
            }
            let left = kind == PerturbationKind::PushLeft;
            s.fallen = if left { Fallen::Left } else { Fallen::Right };
            s.roll = if left {
                -cfg.fallen_roll
            } else {
                cfg.fallen_roll
            };
            s.yaw += if left { -magnitude } else { magnitude };
            s.pitch = 0.0;
            s.contact = false;
            s.falls += 1;
        }
    }
}

fn ticks(seconds: f64) -> u64 {
    libm::round(seconds * TICKS_PER_SECOND as f64) as u64
}

/// Advance one physics tick under the given track and arm commands.
pub fn sim_step(world: &World, s: &mut SimState, motors: MotorCommand, arm: ArmPrimitive) {
    fire_perturbations(world, s);
    start_arm_primitive(world, s, arm);
    drive(world, s, motors);
    s.tick += 1;
    finish_arm_primitive(world, s);
    update_attitude(world, s);
}

fn fire_perturbations(world: &World, s: &mut SimState) {
    while let Some(p) = world.schedule.get(s.next_perturbation) {
        if ticks(p.time) > s.tick {
            break;
        }
        s.next_perturbation += 1;
        apply_perturbation(world, s, p.kind, p.magnitude);
    }
}

fn start_arm_primitive(world: &World, s: &mut SimState, arm: ArmPrimitive) {
    if s.arm_motion.is_some() {
        return;
    }
    let starts = match arm {
        ArmPrimitive::RecoverLeft | ArmPrimitive::RecoverRight => true,
        target => target != s.arm_pose,
    };
    if starts {
        s.arm_motion = Some(ArmMotion {
            target: arm,
            start_tick: s.tick,
            until_tick: s.tick + ticks(world.config.primitive_duration(arm)),
        });
    }
}

fn finish_arm_primitive(world: &World, s: &mut SimState) {
    let Some(m) = s.arm_motion else { return };
    if s.tick < m.until_tick {
        return;
    }
    s.arm_motion = None;
    match m.target {
        ArmPrimitive::RecoverLeft | ArmPrimitive::RecoverRight => {
            let matches = matches!(
                (m.target, s.fallen),
                (ArmPrimitive::RecoverLeft, Fallen::Left)
                    | (ArmPrimitive::RecoverRight, Fallen::Right)
            );
            if matches {
                s.fallen = Fallen::None;
                s.roll = 0.0;
                s.recoveries += 1;
            }
            s.arm_pose = ArmPrimitive::Middle;
        }
        ArmPrimitive::Delivery => {
            s.arm_pose = ArmPrimitive::Delivery;
            if world.wall_distance(s) <= world.config.delivery_range && s.fallen == Fallen::None {
                s.deliveries += 1;
            }
        }
        target => s.arm_pose = target,
    }
}

fn drive(world: &World, s: &mut SimState, motors: MotorCommand) {
    if s.fallen != Fallen::None {
        return;
    }
    let cfg = &world.config;
    let spec = &world.spec;
    let body = cfg.robot_length;
    let forward = (motors.v_l as f64 + motors.v_r as f64) / 2.0;
    let turn = (motors.v_l as f64 - motors.v_r as f64) / 2.0;

    let uneven = spec.uneven(s.x - body, s.x);
    if uneven && !s.on_feature && spec.slip.enabled {
        let scale = spec.slip.yaw_drift_scale;
        s.slip_drift = if scale > 0.0 {
            Uniform::new_inclusive(-scale, scale)
                .expect("finite bound")
                .sample(&mut s.rng)
        } else {
            0.0
        };
    }
    if !uneven {
        s.slip_drift = 0.0;
    }
    s.on_feature = uneven;

    let mut speed = cfg.base_speed * forward;
    if uneven {
        speed *= if s.arm_pose == ArmPrimitive::Back {
            cfg.climb_speed_factor
        } else {
            cfg.rough_speed_factor
        };
        if spec.slip.enabled && forward != 0.0 && spec.slip.speed_loss > 0.0 {
            let u: f64 = Uniform::new(0.0, 1.0)
                .expect("finite bound")
                .sample(&mut s.rng);
            speed *= 1.0 - spec.slip.speed_loss * u;
        }
    }

    s.yaw += cfg.yaw_rate * turn * PHYSICS_DT;
    if uneven && forward != 0.0 {
        s.yaw += s.slip_drift * PHYSICS_DT;
    }

    if speed == 0.0 {
        return;
    }
    let yaw = s.yaw.to_radians();
    let dx = speed * libm::cos(yaw) * PHYSICS_DT;
    let base = spec.max_height(s.x - body, s.x);
    let mut nx = s.x + dx;
    if dx > 0.0 {
        let step = spec.max_height(s.x, nx) - base;
        let climbable =
            step <= cfg.h_small || (step <= cfg.h_assist && s.arm_pose == ArmPrimitive::Back);
        if !climbable {
            return;
        }
        nx = nx.min(spec.wall_position);
    } else if dx < 0.0 {
        let rear = s.x - body;
        let step = spec.max_height(rear + dx, rear) - base;
        if step > cfg.h_assist {
            return;
        }
        nx = nx.max(0.0);
    }
    let moved = nx - s.x;
    s.x = nx.min(spec.corridor_length);
    s.lateral += speed * libm::sin(yaw) * PHYSICS_DT * (moved / dx);
}

/// Recompute pitch, contact, and recovery roll from geometry.
fn update_attitude(world: &World, s: &mut SimState) {
    let cfg = &world.config;
    let spec = &world.spec;
    if let Some(m) = s.arm_motion {
        // the body rolls back toward the fall threshold, then drops level on completion
        let progress = (s.tick - m.start_tick) as f64 / (m.until_tick - m.start_tick).max(1) as f64;
        let lifted = cfg.fallen_roll - (cfg.fallen_roll - cfg.roll_fall_threshold) * progress;
        match (m.target, s.fallen) {
            (ArmPrimitive::RecoverLeft, Fallen::Left) => s.roll = -lifted,
            (ArmPrimitive::RecoverRight, Fallen::Right) => s.roll = lifted,
            _ => {}
        }
    }
    if s.fallen != Fallen::None {
        s.pitch = 0.0;
        s.contact = false;
        return;
    }
    let half = cfg.robot_length / 2.0;
    let front = spec.max_height(s.x - half, s.x);
    let rear = spec.max_height(s.x - cfg.robot_length, s.x - half);
    let base = spec.max_height(s.x - cfg.robot_length, s.x);
    let face = spec.max_height(s.x, s.x + 0.5) - base;
    let climbable =
        face <= cfg.h_small || (face <= cfg.h_assist && s.arm_pose == ArmPrimitive::Back);
    s.contact = !climbable && s.x < spec.wall_position;
    s.pitch = libm::atan2(front - rear, cfg.robot_length).to_degrees();
    if s.contact {
        s.pitch += cfg.contact_pitch;
    }
}

#[cfg(test)]
mod tests;
