//! The 10 Hz closed loop: a shared observation history, the
//! mobility/manipulation mode switch, and one network query per tick.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::demo::{
    grid_time, ControllerKind, CreatedBy, DemoMeta, DemoRecord, Demonstration, Rates, SourceSpan,
    DEMO_FORMAT_VERSION,
};
use crate::domain::{decode_action, ActionId, ActionTriple, Observation};
use crate::error::{Error, Result};
use crate::net::{argmax, NetworkCheckpoint};
use crate::sim::{SensorConfig, Session, World};

/// Most recent observations, oldest first.
#[derive(Debug, Clone)]
pub struct ObservationBuffer {
    cap: usize,
    buf: VecDeque<[f64; 4]>,
}

impl ObservationBuffer {
    pub fn new(cap: usize) -> Self {
        ObservationBuffer {
            cap,
            buf: VecDeque::with_capacity(cap),
        }
    }

    pub fn push(&mut self, obs: Observation) {
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(obs.to_array());
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// The last `m` observations, or `None` until that many have arrived.
    pub fn window(&self, m: usize) -> Option<Vec<[f64; 4]>> {
        if m == 0 || self.buf.len() < m {
            return None;
        }
        Some(self.buf.iter().skip(self.buf.len() - m).copied().collect())
    }
}

/// Most likely primitive for one window; ties resolve to the lowest id.
pub fn infer_action(ckpt: &NetworkCheckpoint, window: &[[f64; 4]]) -> Result<ActionId> {
    Ok(argmax(&ckpt.logits(window)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Mobility,
    Manipulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub mode: Mode,
    /// When manipulation hands back to mobility; set only in manipulation.
    pub manipulation_deadline: Option<f64>,
    /// Consecutive ticks with the front range below the wall threshold.
    pub wall_streak: u32,
}

impl Default for ModeState {
    fn default() -> Self {
        ModeState {
            mode: Mode::Mobility,
            manipulation_deadline: None,
            wall_streak: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub control_hz: f64,
    pub m_mobility: usize,
    pub m_manipulation: usize,
    pub wall_threshold: f64,
    pub wall_streak_required: u32,
    pub manipulation_duration: f64,
    /// Episode time limit, seconds.
    pub time_limit: f64,
    /// Front position counting as back at the start line, cm.
    pub return_margin: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            control_hz: 10.0,
            m_mobility: 25,
            m_manipulation: 55,
            wall_threshold: 15.0,
            wall_streak_required: 3,
            manipulation_duration: 7.0,
            time_limit: 180.0,
            return_margin: 5.0,
        }
    }
}

/// Mobility hands over when the run of consecutive close readings reaches
/// `wall_streak_required`; manipulation hands back when its timer runs out.
/// The streak survives the hand-back, so the robot has to leave the wall
/// before another hand-over can happen.
pub fn update_mode(state: ModeState, obs: &Observation, cfg: &LoopConfig, t: f64) -> ModeState {
    match state.mode {
        Mode::Mobility => {
            let streak = if obs.distance < cfg.wall_threshold {
                state.wall_streak.saturating_add(1)
            } else {
                0
            };
            if streak == cfg.wall_streak_required {
                ModeState {
                    mode: Mode::Manipulation,
                    manipulation_deadline: Some(t + cfg.manipulation_duration),
                    wall_streak: streak,
                }
            } else {
                ModeState {
                    wall_streak: streak,
                    ..state
                }
            }
        }
        Mode::Manipulation => match state.manipulation_deadline {
            Some(d) if t < d => state,
            _ => ModeState {
                wall_streak: state.wall_streak,
                ..ModeState::default()
            },
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub obs: Observation,
    pub u_a: i8,
    pub u_s: i8,
    pub u_m: i8,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario_digest: alloc::string::String,
    pub seed: u64,
    pub delivered: bool,
    pub returned: bool,
    pub falls: u32,
    pub recoveries: u32,
    /// Absolute heading error at the end, degrees.
    pub final_yaw_error: f64,
    pub final_x: f64,
    pub ticks: u64,
    pub mobility_queries: u64,
    pub manipulation_queries: u64,
    pub trace: Vec<TraceRecord>,
}

impl EpisodeResult {
    pub const MAX_FINAL_YAW: f64 = 15.0;

    /// Delivered, back at the start, every fall recovered, heading within 15°.
    pub fn success(&self) -> bool {
        self.delivered
            && self.returned
            && self.falls == self.recoveries
            && self.final_yaw_error < Self::MAX_FINAL_YAW
    }

    /// The trace as a demonstration of the given controller's ticks, or of
    /// every tick when `kind` is `None`.
    pub fn to_demo(&self, kind: Option<ControllerKind>) -> Result<Demonstration> {
        let keep = |r: &&TraceRecord| match kind {
            None => true,
            Some(ControllerKind::Mobility) => r.mode == Mode::Mobility,
            Some(ControllerKind::Manipulation) => r.mode == Mode::Manipulation,
        };
        let records: Vec<DemoRecord> = self
            .trace
            .iter()
            .filter(keep)
            .enumerate()
            .map(|(k, r)| {
                Ok(DemoRecord {
                    t: grid_time(k),
                    obs: r.obs,
                    action: ActionTriple::new(r.u_a, r.u_s, r.u_m)?,
                })
            })
            .collect::<Result<_>>()?;
        if records.is_empty() {
            return Err(Error::Size("no trace records for that controller".into()));
        }
        let created_by = CreatedBy::Scripted;
        let meta = DemoMeta {
            version: DEMO_FORMAT_VERSION,
            controller: kind.unwrap_or(ControllerKind::Mobility),
            created_by,
            scenario_digest: self.scenario_digest.clone(),
            seed: self.seed,
            rates: Rates::default(),
            complete: true,
            sources: alloc::vec![SourceSpan {
                scenario_digest: self.scenario_digest.clone(),
                seed: self.seed,
                created_by,
                start: 0,
                len: records.len(),
            }],
        };
        Ok(Demonstration { meta, records })
    }
}

/// Drive `world` with the two networks until the robot is back at the start
/// after a delivery, or the time limit passes.
pub fn run_closed_loop(
    world: World,
    sensors: SensorConfig,
    mobility: &NetworkCheckpoint,
    manipulation: &NetworkCheckpoint,
    cfg: &LoopConfig,
) -> Result<EpisodeResult> {
    for (name, ck, m) in [
        ("mobility", mobility, cfg.m_mobility),
        ("manipulation", manipulation, cfg.m_manipulation),
    ] {
        if ck.shape().m != m {
            return Err(Error::Shape(format!(
                "{name} network window is {}, loop expects {m}",
                ck.shape().m
            )));
        }
    }
    let digest = world.spec.digest();
    let seed = world.spec.seed;
    let mut session = Session::new(world, sensors)?;
    let mut buffer = ObservationBuffer::new(cfg.m_mobility.max(cfg.m_manipulation));
    let mut mode = ModeState::default();
    let mut trace = Vec::new();
    let (mut mob_q, mut man_q) = (0u64, 0u64);
    let max_ticks = libm::round(cfg.time_limit * cfg.control_hz) as u64;
    let mut returned = false;

    for k in 0..max_ticks {
        let t = k as f64 / cfg.control_hz;
        let obs = session.observe().ok_or(Error::Alignment("sensors"))?;
        buffer.push(obs);
        mode = update_mode(mode, &obs, cfg, t);
        let (net, m) = match mode.mode {
            Mode::Mobility => (mobility, cfg.m_mobility),
            Mode::Manipulation => (manipulation, cfg.m_manipulation),
        };
        let action = match buffer.window(m) {
            Some(w) => {
                match mode.mode {
                    Mode::Mobility => mob_q += 1,
                    Mode::Manipulation => man_q += 1,
                }
                decode_action(infer_action(net, &w)?)
            }
            None => ActionTriple::IDLE,
        };
        trace.push(TraceRecord {
            t,
            obs,
            u_a: action.u_a(),
            u_s: action.u_s(),
            u_m: action.u_m(),
            mode: mode.mode,
        });
        session.step_control(action);
        if session.state.deliveries > 0 && session.state.x <= cfg.return_margin {
            returned = true;
            break;
        }
    }

    let s = &session.state;
    Ok(EpisodeResult {
        scenario_digest: digest,
        seed,
        delivered: s.deliveries > 0,
        returned,
        falls: s.falls,
        recoveries: s.recoveries,
        final_yaw_error: libm::fabs(s.yaw),
        final_x: s.x,
        ticks: trace.len() as u64,
        mobility_queries: mob_q,
        manipulation_queries: man_q,
        trace,
    })
}
