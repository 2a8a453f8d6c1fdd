use super::{ActionSource, ControllerKind, SourceStep};
use crate::domain::{ActionTriple, ArmPrimitive, Observation};
use crate::sim::{Fallen, SimState, World};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertConfig {
    pub controller: ControllerKind,
    /// Heading error tolerated before steering, degrees.
    pub yaw_tol: f64,
    /// Wall range that ends the forward phase, cm.
    pub wall_threshold: f64,
    /// Stop at the wall before reversing, control ticks (mobility only).
    pub wall_stop_ticks: usize,
    /// Idle ticks before the first move.
    pub lead_in_ticks: usize,
    /// Idle ticks appended once the script is done.
    pub tail_ticks: usize,
    /// End the script (after the tail) once the front passes this position
    /// with the arm in the middle and nothing pending.
    pub stop_at_x: Option<f64>,
}

impl ExpertConfig {
    pub fn mobility() -> Self {
        ExpertConfig {
            controller: ControllerKind::Mobility,
            yaw_tol: 5.0,
            wall_threshold: 15.0,
            wall_stop_ticks: 4,
            lead_in_ticks: 1,
            tail_ticks: 1,
            stop_at_x: None,
        }
    }

    pub fn manipulation() -> Self {
        ExpertConfig {
            controller: ControllerKind::Manipulation,
            tail_ticks: 10,
            ..Self::mobility()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpertPhase {
    LeadIn(usize),
    Forward,
    WallStop(usize),
    Reverse,
    Deliver,
    Retract,
    Tail(usize),
    Done,
}

/// Deterministic privileged-state demonstrator.
///
/// Mobility script: drive forward; on contact with a face the robot cannot
/// climb, put the arm back and drive over, retracting once the body is level;
/// recover from a fall with the matching primitive; steer in place whenever
/// the heading error exceeds `yaw_tol`; stop at the wall for
/// `wall_stop_ticks`, then reverse to the start line. The manipulation script
/// replaces the wall stop with a delivery and arm retraction.
#[derive(Debug, Clone)]
pub struct ScriptedExpert {
    pub config: ExpertConfig,
    phase: ExpertPhase,
}

const fn act(u_a: i8, u_s: i8, u_m: i8) -> ActionTriple {
    ActionTriple::new_unchecked(u_a, u_s, u_m)
}

const IDLE: ActionTriple = ActionTriple::IDLE;
const FORWARD: ActionTriple = act(0, 0, 1);
const BACKWARD: ActionTriple = act(0, 0, -1);
const ARM_BACK: ActionTriple = act(1, 0, 0);
const CLIMB: ActionTriple = act(1, 0, 1);
const DELIVER: ActionTriple = act(4, 0, 0);

impl ScriptedExpert {
    pub fn new(config: ExpertConfig) -> Self {
        let phase = if config.lead_in_ticks > 0 {
            ExpertPhase::LeadIn(config.lead_in_ticks)
        } else {
            ExpertPhase::Forward
        };
        ScriptedExpert { config, phase }
    }

    pub fn phase(&self) -> ExpertPhase {
        self.phase
    }

    /// One decision. Returns `None` once the script is over.
    pub fn decide(&mut self, s: &SimState, w: &World) -> Option<ActionTriple> {
        loop {
            match self.phase {
                ExpertPhase::LeadIn(n) => {
                    if n > 0 {
                        self.phase = ExpertPhase::LeadIn(n - 1);
                        return Some(IDLE);
                    }
                    self.phase = ExpertPhase::Forward;
                }
                ExpertPhase::Tail(n) => {
                    if n > 0 {
                        self.phase = ExpertPhase::Tail(n - 1);
                        return Some(IDLE);
                    }
                    self.phase = ExpertPhase::Done;
                }
                ExpertPhase::Done => return None,
                _ => break,
            }
        }

        if let Some(a) = self.reflex(s, w) {
            return Some(a);
        }

        match self.phase {
            ExpertPhase::Forward => {
                if let Some(a) = self.steer(s) {
                    return Some(a);
                }
                if self.config.stop_at_x.is_some_and(|x| s.x >= x) {
                    return Some(self.finish());
                }
                if w.wall_distance(s) < self.config.wall_threshold {
                    return Some(match self.config.controller {
                        ControllerKind::Mobility => {
                            self.phase = ExpertPhase::WallStop(1);
                            IDLE
                        }
                        ControllerKind::Manipulation => {
                            self.phase = ExpertPhase::Deliver;
                            DELIVER
                        }
                    });
                }
                Some(FORWARD)
            }
            ExpertPhase::WallStop(n) => {
                if n < self.config.wall_stop_ticks {
                    self.phase = ExpertPhase::WallStop(n + 1);
                    return Some(IDLE);
                }
                self.phase = ExpertPhase::Reverse;
                Some(self.reverse(s))
            }
            ExpertPhase::Reverse => Some(self.reverse(s)),
            ExpertPhase::Deliver => {
                if s.arm_pose == ArmPrimitive::Delivery {
                    self.phase = ExpertPhase::Retract;
                    return Some(IDLE);
                }
                Some(DELIVER)
            }
            ExpertPhase::Retract => Some(self.finish()),
            _ => unreachable!("handled above"),
        }
    }

    fn finish(&mut self) -> ActionTriple {
        self.phase = ExpertPhase::Tail(self.config.tail_ticks.saturating_sub(1));
        IDLE
    }

    /// Responses that preempt the phase script: falls, running primitives,
    /// and the arm-assisted climb.
    fn reflex(&mut self, s: &SimState, w: &World) -> Option<ActionTriple> {
        match s.fallen {
            Fallen::Left => return Some(act(2, 0, 0)),
            Fallen::Right => return Some(act(3, 0, 0)),
            Fallen::None => {}
        }
        if let Some(m) = s.arm_motion {
            return Some(act(m.target.channel(), 0, 0));
        }
        if self.phase == ExpertPhase::Forward {
            if s.contact && s.arm_pose != ArmPrimitive::Back {
                return Some(ARM_BACK);
            }
            if s.arm_pose == ArmPrimitive::Back {
                return Some(if Self::needs_arm(s, w) { CLIMB } else { IDLE });
            }
        }
        if s.arm_pose != ArmPrimitive::Middle && self.phase != ExpertPhase::Deliver {
            return Some(IDLE);
        }
        None
    }

    /// Body over a height change, or nose at a face that needs the arm.
    fn needs_arm(s: &SimState, w: &World) -> bool {
        let body = w.config.robot_length;
        let base = w.spec.max_height(s.x - body, s.x);
        let face = w.spec.max_height(s.x, s.x + 1.0) - base;
        w.spec.uneven(s.x - body, s.x) || face > w.config.h_small
    }

    fn steer(&self, s: &SimState) -> Option<ActionTriple> {
        if s.yaw > self.config.yaw_tol {
            Some(act(0, -1, 0))
        } else if s.yaw < -self.config.yaw_tol {
            Some(act(0, 1, 0))
        } else {
            None
        }
    }

    fn reverse(&mut self, s: &SimState) -> ActionTriple {
        if let Some(a) = self.steer(s) {
            return a;
        }
        if s.x <= 0.0 {
            return self.finish();
        }
        BACKWARD
    }
}

impl ActionSource for ScriptedExpert {
    fn next_action(&mut self, _: &Observation, state: &SimState, world: &World) -> SourceStep {
        match self.decide(state, world) {
            Some(a) => SourceStep::Act(a),
            None => SourceStep::Finished,
        }
    }
}
