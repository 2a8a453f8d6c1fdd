//! Demonstrations: recording, the idle-boundary trim/merge editor, and
//! windowed dataset construction.

mod dataset;
mod edit;
mod expert;
mod record;

pub use dataset::{class_weights, window, ClassWeights, Sample, WindowedDataset};
pub use edit::{merge, trim};
pub use expert::{ExpertConfig, ExpertPhase, ScriptedExpert};
pub use record::{record_demo, ActionSource, Feed, IdleSource, RecordOptions, SourceStep};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{is_idle, ActionTriple, Observation};
use crate::error::{Error, Result};
use crate::signal::{CONTROL_HZ, IMU_HZ, SONAR_HZ};

pub const DEMO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Mobility,
    Manipulation,
}

impl ControllerKind {
    /// Default window length in control ticks: 2.5 s for mobility, 5.5 s for
    /// manipulation.
    pub fn default_window(self) -> usize {
        match self {
            ControllerKind::Mobility => 25,
            ControllerKind::Manipulation => 55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreatedBy {
    Scripted,
    Teleop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub imu_hz: f64,
    pub sonar_hz: f64,
    pub control_hz: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            imu_hz: IMU_HZ,
            sonar_hz: SONAR_HZ,
            control_hz: CONTROL_HZ,
        }
    }
}

/// Where a run of records came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub scenario_digest: String,
    pub seed: u64,
    pub created_by: CreatedBy,
    /// First record index within the original recording.
    pub start: usize,
    pub len: usize,
}

impl SourceSpan {
    fn continues(&self, next: &SourceSpan) -> bool {
        self.scenario_digest == next.scenario_digest
            && self.seed == next.seed
            && self.created_by == next.created_by
            && self.start + self.len == next.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoMeta {
    pub version: u32,
    pub controller: ControllerKind,
    pub created_by: CreatedBy,
    pub scenario_digest: String,
    pub seed: u64,
    pub rates: Rates,
    /// False when the action source ended the session early.
    pub complete: bool,
    pub sources: Vec<SourceSpan>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoRecord {
    /// Seconds from the start of the demonstration, on the 0.1 s grid.
    pub t: f64,
    pub obs: Observation,
    pub action: ActionTriple,
}

/// Control tick index of time `t`, if `t` lies on the 10 Hz grid.
pub fn grid_index(t: f64) -> Option<usize> {
    let k = libm::round(t * CONTROL_HZ);
    if k >= 0.0 && libm::fabs(t * CONTROL_HZ - k) < 1e-6 {
        Some(k as usize)
    } else {
        None
    }
}

/// Time of control tick `k`.
pub fn grid_time(k: usize) -> f64 {
    k as f64 / CONTROL_HZ
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub meta: DemoMeta,
    pub records: Vec<DemoRecord>,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn duration(&self) -> f64 {
        grid_time(self.records.len())
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        self.records.iter().map(|r| r.obs)
    }

    /// Check the format invariants: non-empty, timestamps `k/10` for record `k`,
    /// valid observations.
    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Size("demonstration has no records".into()));
        }
        for (k, r) in self.records.iter().enumerate() {
            if grid_index(r.t) != Some(k) {
                return Err(Error::Range(alloc::format!(
                    "record {k} has timestamp {} instead of {:.1}",
                    r.t,
                    grid_time(k)
                )));
            }
            r.obs.validate()?;
        }
        Ok(())
    }

    /// Timestamps of records whose action is not idle but sit on the demo
    /// boundary (first or last record).
    pub fn boundary_violations(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if let Some(f) = self.records.first() {
            if !is_idle(f.action) {
                v.push(f.t);
            }
        }
        if self.records.len() > 1 {
            let l = self.records.last().expect("non-empty");
            if !is_idle(l.action) {
                v.push(l.t);
            }
        }
        v
    }
}
