//! Standard courses, their scripted demonstrations, and seeded evaluation
//! variants.
//!
//! The mobility training demo is assembled the way a human operator would:
//! one long run over the full course (obstacles, a fall, the stair, the wall
//! and the drive back), followed by short skill runs for falls on both sides,
//! heading corrections, and obstacles of other sizes, and a few complete
//! runs over shuffled layouts. Every piece is trimmed to its idle ends and
//! merged.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Uniform};

use crate::demo::{
    merge, record_demo, trim, ActionSource, ControllerKind, CreatedBy, Demonstration, ExpertConfig,
    RecordOptions, ScriptedExpert,
};
use crate::domain::is_idle;
use crate::error::{Error, Result};
use crate::sim::{
    Obstacle, Perturbation, PerturbationKind, ScenarioSpec, SensorConfig, Session, SimConfig, Slip,
    Stair, World,
};

pub const WALL: f64 = 400.0;

fn slip() -> Slip {
    Slip {
        enabled: true,
        yaw_drift_scale: 6.0,
        speed_loss: 0.3,
    }
}

fn push(time: f64, kind: PerturbationKind, magnitude: f64) -> Perturbation {
    Perturbation {
        time,
        kind,
        magnitude,
    }
}

/// The full course: a small and a large obstacle, a push to the left, a
/// three-step stair and the wall.
pub fn demo_course(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        corridor_length: WALL,
        obstacles: vec![
            Obstacle {
                position: 60.0,
                height: 3.0,
                length: 8.0,
            },
            Obstacle {
                position: 100.0,
                height: 10.0,
                length: 12.0,
            },
            Obstacle {
                position: 150.0,
                height: 4.0,
                length: 10.0,
            },
        ],
        stair: Some(Stair {
            position: 220.0,
            n_steps: 3,
            step_height: 8.0,
            step_depth: 25.0,
        }),
        wall_position: WALL,
        perturbations: vec![
            push(12.0, PerturbationKind::PushLeft, 20.0),
            push(16.5, PerturbationKind::PushRight, 25.0),
        ],
        slip: slip(),
        seed,
    }
}

/// Flat run with one fall to each side.
pub fn fall_course(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        perturbations: vec![
            push(1.5, PerturbationKind::PushLeft, 35.0),
            push(8.0, PerturbationKind::PushRight, 15.0),
        ],
        seed,
        ..ScenarioSpec::corridor(WALL)
    }
}

/// Flat run with repeated heading kicks of both signs.
pub fn yaw_course(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        perturbations: vec![
            push(1.0, PerturbationKind::YawKick, 30.0),
            push(4.0, PerturbationKind::YawKick, -45.0),
            push(7.5, PerturbationKind::YawKick, 20.0),
            push(10.5, PerturbationKind::YawKick, -25.0),
            push(13.0, PerturbationKind::YawKick, 55.0),
        ],
        seed,
        ..ScenarioSpec::corridor(WALL)
    }
}

/// Obstacles of assorted heights and lengths with slip, and a shallower stair.
pub fn obstacle_course(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        corridor_length: WALL,
        obstacles: vec![
            Obstacle {
                position: 30.0,
                height: 2.0,
                length: 15.0,
            },
            Obstacle {
                position: 70.0,
                height: 12.0,
                length: 8.0,
            },
            Obstacle {
                position: 110.0,
                height: 4.0,
                length: 20.0,
            },
            Obstacle {
                position: 160.0,
                height: 7.0,
                length: 15.0,
            },
        ],
        stair: Some(Stair {
            position: 220.0,
            n_steps: 3,
            step_height: 6.0,
            step_depth: 30.0,
        }),
        wall_position: WALL,
        perturbations: vec![],
        slip: slip(),
        seed,
    }
}

/// Flat approach to a wall at `wall` cm for the delivery demo.
pub fn manipulation_course(wall: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        seed,
        ..ScenarioSpec::corridor(wall)
    }
}

/// Held-out layout: the demo course shape with shuffled obstacle sizes and
/// positions, stair geometry, fall side and perturbation times.
pub fn variant(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let mut u = |lo: f64, hi: f64| {
        Uniform::new_inclusive(lo, hi)
            .expect("finite bounds")
            .sample(&mut rng)
    };
    let small = |h: f64, l: f64| Obstacle {
        position: 0.0,
        height: h,
        length: l,
    };
    let mut obstacles = vec![
        small(u(1.5, 4.0), u(6.0, 18.0)),
        small(u(6.0, 12.0), u(8.0, 14.0)),
        small(u(1.5, 4.0), u(6.0, 18.0)),
    ];
    // large obstacle first or second
    if u(0.0, 1.0) < 0.5 {
        obstacles.swap(0, 1);
    }
    let mut at = u(50.0, 75.0);
    for o in &mut obstacles {
        o.position = libm::round(at);
        at = o.end() + u(30.0, 45.0);
    }
    let stair_at = libm::round(at.max(200.0) + u(0.0, 20.0));
    let stair = Stair {
        position: stair_at,
        n_steps: 3,
        step_height: u(6.0, 8.0),
        step_depth: u(24.0, 30.0),
    };
    let side = if u(0.0, 1.0) < 0.5 {
        PerturbationKind::PushLeft
    } else {
        PerturbationKind::PushRight
    };
    let push_t = u(3.5, 5.5);
    let kick = if u(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 } * u(20.0, 45.0);
    ScenarioSpec {
        corridor_length: WALL,
        obstacles,
        stair: Some(stair),
        wall_position: WALL,
        perturbations: vec![
            push(push_t, side, u(10.0, 35.0)),
            push(push_t + u(6.0, 8.0), PerturbationKind::YawKick, kick),
        ],
        slip: slip(),
        seed,
    }
}

/// Run the scripted expert on `spec` and record what it does.
pub fn record_expert(
    spec: ScenarioSpec,
    expert: ExpertConfig,
    sensors: SensorConfig,
) -> Result<Demonstration> {
    record_with(spec, &mut ScriptedExpert::new(expert), expert, sensors)
}

fn record_with<S: ActionSource>(
    spec: ScenarioSpec,
    source: &mut S,
    expert: ExpertConfig,
    sensors: SensorConfig,
) -> Result<Demonstration> {
    spec.validate()?;
    let mut session = Session::new(World::new(spec, SimConfig::default()), sensors)?;
    let opts = RecordOptions {
        max_ticks: 6000,
        controller: expert.controller,
        created_by: CreatedBy::Scripted,
    };
    let demo = record_demo(&mut session, source, opts)?;
    if !demo.meta.complete || demo.len() == opts.max_ticks {
        return Err(Error::Size("scripted run did not finish".into()));
    }
    Ok(demo)
}

/// Trim to the span between the first and last idle records.
fn idle_span(d: &Demonstration) -> Result<Demonstration> {
    let first = d.records.iter().position(|r| is_idle(r.action));
    let last = d.records.iter().rposition(|r| is_idle(r.action));
    match (first, last) {
        (Some(a), Some(b)) if a < b => trim(d, d.records[a].t, d.records[b].t),
        _ => Err(Error::Size("segment has no idle span".into())),
    }
}

/// Full expert runs on shuffled layouts added to the mobility demo.
pub const PRACTICE_RUNS: u64 = 4;

/// Seeds of the practice layouts. They are drawn far from the small seeds
/// used for evaluation so the two sets never share a layout.
pub fn practice_seed(seed: u64, i: u64) -> u64 {
    0x7000_0000 + seed * 1000 + i
}

/// Merged mobility demonstration for window length `m`.
///
/// The first segment opens with `m - 1` idle ticks so the first complete
/// window is a robot at rest labelled with its first move.
pub fn mobility_demo(m: usize, seed: u64) -> Result<Demonstration> {
    let sensors = SensorConfig::default();
    let base = ExpertConfig::mobility();
    let main = ExpertConfig {
        lead_in_ticks: m.saturating_sub(1).max(1),
        ..base
    };
    let skill = |stop: f64| ExpertConfig {
        stop_at_x: Some(stop),
        ..base
    };
    let mut parts = vec![
        record_expert(demo_course(seed), main, sensors)?,
        record_expert(fall_course(seed + 1), skill(120.0), sensors)?,
        record_expert(yaw_course(seed + 2), skill(200.0), sensors)?,
        record_expert(obstacle_course(seed + 3), skill(330.0), sensors)?,
    ];
    for i in 0..PRACTICE_RUNS {
        parts.push(record_expert(
            variant(practice_seed(seed, i)),
            base,
            sensors,
        )?);
    }
    let trimmed: Vec<Demonstration> = parts.iter().map(idle_span).collect::<Result<_>>()?;
    merge(&trimmed)
}

/// Two deliveries from different approach distances.
pub fn manipulation_demo(m: usize, seed: u64) -> Result<Demonstration> {
    let sensors = SensorConfig::default();
    let first = ExpertConfig {
        lead_in_ticks: m.saturating_sub(1).max(1),
        ..ExpertConfig::manipulation()
    };
    let parts = [
        record_expert(manipulation_course(110.0, seed), first, sensors)?,
        record_expert(
            manipulation_course(160.0, seed + 1),
            ExpertConfig::manipulation(),
            sensors,
        )?,
    ];
    let trimmed: Vec<Demonstration> = parts.iter().map(idle_span).collect::<Result<_>>()?;
    merge(&trimmed)
}

/// Demo for the given controller with its default window.
pub fn standard_demo(kind: ControllerKind, seed: u64) -> Result<Demonstration> {
    match kind {
        ControllerKind::Mobility => mobility_demo(kind.default_window(), seed),
        ControllerKind::Manipulation => manipulation_demo(kind.default_window(), seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::encode_action;
    use alloc::collections::BTreeSet;

    #[test]
    fn courses_validate() {
        for s in [
            demo_course(1),
            fall_course(1),
            yaw_course(1),
            obstacle_course(1),
            manipulation_course(110.0, 1),
        ] {
            s.validate().unwrap();
        }
        for seed in 0..50 {
            variant(seed).validate().unwrap();
        }
    }

    #[test]
    fn variants_differ_by_seed() {
        assert_ne!(variant(1), variant(2));
        assert_eq!(variant(3), variant(3));
    }

    #[test]
    fn mobility_demo_covers_the_skills() {
        let d = mobility_demo(25, 1).unwrap();
        d.validate().unwrap();
        assert!(d.duration() >= 120.0, "{} s", d.duration());
        assert!(d.records[..24].iter().all(|r| is_idle(r.action)));
        assert!(!is_idle(d.records[24].action));
        let ids: BTreeSet<usize> = d
            .records
            .iter()
            .map(|r| encode_action(r.action).index())
            .collect();
        assert_eq!(
            ids.into_iter().collect::<Vec<_>>(),
            vec![1, 3, 4, 5, 7, 13, 14, 22, 31]
        );
    }

    #[test]
    fn manipulation_demo_delivers() {
        let d = manipulation_demo(55, 1).unwrap();
        d.validate().unwrap();
        let ids: BTreeSet<usize> = d
            .records
            .iter()
            .map(|r| encode_action(r.action).index())
            .collect();
        assert_eq!(ids.into_iter().collect::<Vec<_>>(), vec![4, 5, 40]);
    }

    #[test]
    fn expert_completes_every_variant() {
        for seed in 0..10 {
            let spec = variant(seed);
            let mut session = Session::new(
                World::new(spec, SimConfig::default()),
                SensorConfig::default(),
            )
            .unwrap();
            let mut e = ScriptedExpert::new(ExpertConfig::mobility());
            let opts = RecordOptions {
                max_ticks: 6000,
                controller: ControllerKind::Mobility,
                created_by: CreatedBy::Scripted,
            };
            let d = record_demo(&mut session, &mut e, opts).unwrap();
            assert!(d.len() < 6000, "seed {seed}");
            assert_eq!(session.state.x, 0.0);
            assert_eq!(session.state.falls, session.state.recoveries);
        }
    }
}
