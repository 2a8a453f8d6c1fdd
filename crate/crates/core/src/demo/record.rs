use alloc::vec;
use alloc::vec::Vec;

use super::{
    grid_time, ControllerKind, CreatedBy, DemoMeta, DemoRecord, Demonstration, Rates, SourceSpan,
    DEMO_FORMAT_VERSION,
};
use crate::domain::{ActionTriple, Observation};
use crate::error::{Error, Result};
use crate::sim::{Session, SimState, World};

/// What an action source returns for one control tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceStep {
    Act(ActionTriple),
    /// The demonstration is over.
    Finished,
    /// The source went away (for example a teleop client disconnect).
    Disconnected,
}

/// Supplies one action per 10 Hz control tick.
///
/// `state` is the privileged simulator view; sources that stand in for a
/// human may use it, learned controllers never see it.
pub trait ActionSource {
    fn next_action(&mut self, obs: &Observation, state: &SimState, world: &World) -> SourceStep;
}

/// Always idle.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdleSource;

impl ActionSource for IdleSource {
    fn next_action(&mut self, _: &Observation, _: &SimState, _: &World) -> SourceStep {
        SourceStep::Act(ActionTriple::IDLE)
    }
}

/// Replays a fixed action list, then reports `Finished`.
#[derive(Debug, Clone)]
pub struct Feed {
    actions: Vec<ActionTriple>,
    next: usize,
}

impl Feed {
    pub fn new(actions: Vec<ActionTriple>) -> Self {
        Feed { actions, next: 0 }
    }

    pub fn repeat(action: ActionTriple, n: usize) -> Self {
        Feed::new(vec![action; n])
    }
}

impl ActionSource for Feed {
    fn next_action(&mut self, _: &Observation, _: &SimState, _: &World) -> SourceStep {
        match self.actions.get(self.next) {
            Some(a) => {
                self.next += 1;
                SourceStep::Act(*a)
            }
            None => SourceStep::Finished,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordOptions {
    /// Upper bound on the number of records (control ticks).
    pub max_ticks: usize,
    pub controller: ControllerKind,
    pub created_by: CreatedBy,
}

/// Run `session` under `source`, pairing each tick's aligned observation with
/// the action commanded at that tick.
pub fn record_demo<S: ActionSource + ?Sized>(
    session: &mut Session,
    source: &mut S,
    opts: RecordOptions,
) -> Result<Demonstration> {
    let mut records = Vec::new();
    let mut complete = true;
    for k in 0..opts.max_ticks {
        let obs = session.observe().ok_or(Error::Alignment("sensors"))?;
        match source.next_action(&obs, &session.state, &session.world) {
            SourceStep::Act(action) => {
                records.push(DemoRecord {
                    t: grid_time(k),
                    obs,
                    action,
                });
                session.step_control(action);
            }
            SourceStep::Finished => break,
            SourceStep::Disconnected => {
                complete = false;
                break;
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Size("session ended before the first record".into()));
    }
    let spec = &session.world.spec;
    let digest = spec.digest();
    let meta = DemoMeta {
        version: DEMO_FORMAT_VERSION,
        controller: opts.controller,
        created_by: opts.created_by,
        scenario_digest: digest.clone(),
        seed: spec.seed,
        rates: Rates::default(),
        complete,
        sources: vec![SourceSpan {
            scenario_digest: digest,
            seed: spec.seed,
            created_by: opts.created_by,
            start: 0,
            len: records.len(),
        }],
    };
    Ok(Demonstration { meta, records })
}
