use super::*;
use crate::domain::{ActionTriple, MotorCommand};
use crate::signal::{align_to_control_rate, ImuStreams};
use alloc::vec;
use alloc::vec::Vec;

fn world(spec: ScenarioSpec) -> World {
    spec.validate().unwrap();
    World::new(spec, SimConfig::default())
}

fn run(w: &World, s: &mut SimState, motors: MotorCommand, arm: ArmPrimitive, seconds: f64) {
    for _ in 0..ticks(seconds) {
        sim_step(w, s, motors, arm);
    }
}

const FWD: MotorCommand = MotorCommand { v_l: 1, v_r: 1 };
const BACK: MotorCommand = MotorCommand { v_l: -1, v_r: -1 };

fn bump(position: f64, height: f64) -> ScenarioSpec {
    let mut spec = ScenarioSpec::corridor(300.0);
    spec.obstacles = vec![Obstacle {
        position,
        height,
        length: 10.0,
    }];
    spec
}

#[test]
fn init_is_level_and_deterministic() {
    let w = world(ScenarioSpec::corridor(300.0));
    let a = sim_init(&w);
    assert_eq!((a.x, a.yaw, a.pitch, a.roll), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(a.fallen, Fallen::None);
    assert_eq!(a.arm_pose, ArmPrimitive::Middle);
    assert_eq!(a, sim_init(&w));

    let mut spec = ScenarioSpec::corridor(300.0);
    spec.seed = 1;
    let b = sim_init(&world(spec));
    assert_eq!(a.pose(), b.pose());
}

#[test]
fn straight_drive_covers_base_speed() {
    let w = world(ScenarioSpec::corridor(300.0));
    let mut s = sim_init(&w);
    run(&w, &mut s, FWD, ArmPrimitive::Middle, 1.0);
    assert!((s.x - 20.0).abs() < 1e-9, "x = {}", s.x);
    assert_eq!(s.yaw, 0.0);
}

#[test]
fn spin_left_decreases_yaw_in_place() {
    let w = world(ScenarioSpec::corridor(300.0));
    let mut s = sim_init(&w);
    run(
        &w,
        &mut s,
        MotorCommand { v_l: -1, v_r: 1 },
        ArmPrimitive::Middle,
        1.0,
    );
    assert!(s.yaw < -40.0);
    assert_eq!(s.x, 0.0);
    // 90 degrees take 2.1 s
    let mut s = sim_init(&w);
    run(
        &w,
        &mut s,
        MotorCommand { v_l: 1, v_r: -1 },
        ArmPrimitive::Middle,
        2.1,
    );
    assert!((s.yaw - 90.0).abs() < 1e-6);
}

#[test]
fn arm_back_takes_one_second_and_ignores_commands() {
    let w = world(ScenarioSpec::corridor(300.0));
    let mut s = sim_init(&w);
    sim_step(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Back);
    assert!((s.arm_busy_until() - 1.0).abs() < 1e-12);
    // a competing command while busy changes nothing
    run(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Delivery, 0.98);
    assert_eq!(s.arm_pose, ArmPrimitive::Middle);
    sim_step(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Delivery);
    assert!((s.t() - 1.0).abs() < 1e-12);
    assert_eq!(s.arm_pose, ArmPrimitive::Back);
    assert!(!s.arm_busy());
}

#[test]
fn primitive_durations_follow_the_timing_table() {
    let w = world(ScenarioSpec::corridor(300.0));
    for (cmd, secs) in [
        (ArmPrimitive::Back, 1.0),
        (ArmPrimitive::RecoverLeft, 2.0),
        (ArmPrimitive::Delivery, 5.0),
    ] {
        let mut s = sim_init(&w);
        sim_step(&w, &mut s, MotorCommand::STOP, cmd);
        assert!((s.arm_busy_until() - secs).abs() < 1e-12, "{cmd:?}");
    }
}

#[test]
fn perturbation_examples() {
    let w = world(ScenarioSpec::corridor(300.0));
    let mut s = sim_init(&w);
    apply_perturbation(&w, &mut s, PerturbationKind::PushLeft, 30.0);
    assert_eq!(s.fallen, Fallen::Left);
    assert!(s.roll <= -w.config.roll_fall_threshold);
    assert_eq!(s.yaw, -30.0);
    let before = s.clone();
    apply_perturbation(&w, &mut s, PerturbationKind::PushRight, 30.0);
    assert_eq!(s, before);

    let mut s = sim_init(&w);
    apply_perturbation(&w, &mut s, PerturbationKind::YawKick, 45.0);
    assert_eq!(s.yaw, 45.0);
}

#[test]
fn fallen_robot_needs_matching_recovery() {
    let mut spec = ScenarioSpec::corridor(300.0);
    spec.perturbations = vec![Perturbation {
        time: 0.5,
        kind: PerturbationKind::PushRight,
        magnitude: 20.0,
    }];
    let w = world(spec);
    let mut s = sim_init(&w);
    run(&w, &mut s, FWD, ArmPrimitive::Middle, 1.0);
    assert_eq!(s.fallen, Fallen::Right);
    let x = s.x;
    run(&w, &mut s, FWD, ArmPrimitive::Middle, 1.0);
    assert_eq!(s.x, x, "no translation while fallen");

    // wrong side: primitive runs, robot stays down
    run(
        &w,
        &mut s,
        MotorCommand::STOP,
        ArmPrimitive::RecoverLeft,
        2.0,
    );
    assert_eq!(s.fallen, Fallen::Right);
    assert!(s.roll >= w.config.roll_fall_threshold);

    sim_step(&w, &mut s, MotorCommand::STOP, ArmPrimitive::RecoverRight);
    for _ in 0..198 {
        sim_step(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Middle);
        assert_eq!(s.fallen, Fallen::Right);
        assert!(s.roll >= w.config.roll_fall_threshold);
    }
    sim_step(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Middle);
    assert_eq!(s.fallen, Fallen::None);
    assert_eq!(s.roll, 0.0);
    assert_eq!(s.yaw, 20.0, "heading offset survives recovery");
    assert_eq!((s.falls, s.recoveries), (1, 1));
}

#[test]
fn small_obstacle_passes_without_arm() {
    let w = world(bump(40.0, 3.0));
    let mut s = sim_init(&w);
    let mut max_pitch: f64 = 0.0;
    let mut min_pitch: f64 = 0.0;
    for _ in 0..600 {
        sim_step(&w, &mut s, FWD, ArmPrimitive::Middle);
        max_pitch = max_pitch.max(s.pitch);
        min_pitch = min_pitch.min(s.pitch);
    }
    assert!(s.x > 80.0);
    assert!(max_pitch > 5.0 && min_pitch < -5.0);
}

#[test]
fn assisted_obstacle_needs_arm_back() {
    let w = world(bump(40.0, 10.0));
    let mut s = sim_init(&w);
    run(&w, &mut s, FWD, ArmPrimitive::Middle, 4.0);
    assert!(s.x < 40.0 && s.x > 39.0, "blocked at the face, x = {}", s.x);
    assert!(s.contact);
    assert!((s.pitch - w.config.contact_pitch).abs() < 1e-9);
    run(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Back, 1.0);
    assert_eq!(s.arm_pose, ArmPrimitive::Back);
    run(&w, &mut s, FWD, ArmPrimitive::Back, 4.0);
    assert!(s.x > 80.0, "x = {}", s.x);
}

#[test]
fn tall_obstacle_is_impassable() {
    let w = world(bump(40.0, 15.0));
    let mut s = sim_init(&w);
    run(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Back, 1.0);
    run(&w, &mut s, FWD, ArmPrimitive::Back, 6.0);
    assert!(s.x < 40.0);
}

#[test]
fn stair_requires_arm_and_raises_the_base() {
    let mut spec = ScenarioSpec::corridor(300.0);
    spec.stair = Some(Stair {
        position: 40.0,
        n_steps: 3,
        step_height: 8.0,
        step_depth: 25.0,
    });
    let w = world(spec);
    let mut s = sim_init(&w);
    run(&w, &mut s, FWD, ArmPrimitive::Middle, 3.0);
    assert!(s.x < 40.0);
    run(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Back, 1.0);
    run(&w, &mut s, FWD, ArmPrimitive::Back, 10.0);
    assert!(s.x > 140.0, "x = {}", s.x);
    assert!(w.spec.height_at(s.x - w.config.robot_length) == 24.0);
    // reversing back down needs no arm
    run(&w, &mut s, MotorCommand::STOP, ArmPrimitive::Middle, 1.0);
    run(&w, &mut s, BACK, ArmPrimitive::Middle, 15.0);
    assert_eq!(s.x, 0.0);
}

#[test]
fn sonar_examples() {
    let w = world(ScenarioSpec::corridor(300.0));
    let mut s = sim_init(&w);
    s.x = 200.0;
    assert!((w.true_range(&s, 25.0, 500.0) - 100.0).abs() < 1e-9);

    let w = world(bump(50.0, 10.0));
    let s = sim_init(&w);
    assert!((w.true_range(&s, 25.0, 500.0) - 300.0).abs() < 1e-9);
}

#[test]
fn sonar_is_monotone_driving_at_the_wall() {
    let w = world(ScenarioSpec::corridor(300.0));
    let mut s = sim_init(&w);
    let mut last = w.true_range(&s, 25.0, 500.0);
    for _ in 0..2000 {
        sim_step(&w, &mut s, FWD, ArmPrimitive::Middle);
        let r = w.true_range(&s, 25.0, 500.0);
        assert!(r <= last);
        last = r;
    }
    assert_eq!(s.x, 300.0);
}

#[test]
fn idle_is_a_fixed_point() {
    let mut spec = bump(40.0, 10.0);
    spec.slip = Slip {
        enabled: true,
        yaw_drift_scale: 5.0,
        speed_loss: 0.3,
    };
    let w = world(spec);
    let mut s = sim_init(&w);
    run(&w, &mut s, FWD, ArmPrimitive::Middle, 1.0);
    let idle = ActionTriple::IDLE;
    let pose = s.pose();
    run(&w, &mut s, idle.motors(), idle.arm(), 5.0);
    assert_eq!(s.pose(), pose);
}

#[test]
fn trajectories_are_bit_identical() {
    let mut spec = bump(40.0, 3.0);
    spec.slip = Slip {
        enabled: true,
        yaw_drift_scale: 5.0,
        speed_loss: 0.3,
    };
    spec.perturbations = vec![Perturbation {
        time: 4.0,
        kind: PerturbationKind::YawKick,
        magnitude: 30.0,
    }];
    let w = world(spec);
    let go = || {
        let mut s = sim_init(&w);
        let mut traj = vec![];
        for i in 0..800 {
            let m = if i % 300 < 200 {
                FWD
            } else {
                MotorCommand { v_l: 1, v_r: 0 }
            };
            sim_step(&w, &mut s, m, ArmPrimitive::Middle);
            traj.push(s.clone());
        }
        traj
    };
    assert_eq!(go(), go());
}

#[test]
fn sensors_match_truth_without_noise() {
    let w = world(ScenarioSpec::corridor(300.0));
    let mut sess = Session::new(w, SensorConfig::noiseless()).unwrap();
    sess.state.x = 0.0;
    let o = sess.observe().unwrap();
    assert_eq!(o.distance, 300.0);
    assert_eq!((o.yaw, o.pitch, o.roll), (0.0, 0.0, 0.0));
    for _ in 0..5 {
        sess.step_control(ActionTriple::new(0, 0, 1).unwrap());
    }
    let o = sess.observe().unwrap();
    assert!((o.distance - 290.0).abs() < 1e-9);
}

#[test]
fn session_observations_equal_aligned_sensor_log() {
    let mut spec = bump(40.0, 3.0);
    spec.perturbations = vec![Perturbation {
        time: 1.23,
        kind: PerturbationKind::YawKick,
        magnitude: 30.0,
    }];
    let w = world(spec);
    let mut sess = Session::new(w.clone(), SensorConfig::default()).unwrap();
    let mut states = vec![sess.state.clone()];
    let mut observed = vec![sess.observe().unwrap()];
    let act = ActionTriple::new(0, 1, 1).unwrap();
    for _ in 0..30 {
        for _ in 0..TICKS_PER_CONTROL {
            sim_step(&sess.world, &mut sess.state, act.motors(), act.arm());
            sess.sensors.sample_through(&sess.world, &sess.state);
            states.push(sess.state.clone());
        }
        observed.push(sess.observe().unwrap());
    }
    let frame = read_sensors(&w, &states, SensorConfig::default()).unwrap();
    assert_eq!(frame.yaw.len(), 91);
    assert_eq!(frame.sonar.len(), 61);
    let aligned = align_to_control_rate(
        ImuStreams {
            yaw: &frame.yaw,
            pitch: &frame.pitch,
            roll: &frame.roll,
        },
        &frame.sonar,
    )
    .unwrap();
    let aligned: Vec<_> = aligned.into_iter().map(|o| o.quantized()).collect();
    assert_eq!(aligned, observed);
}
