//! JSON result documents for training and rollouts.

use std::path::Path;

use serde::{Deserialize, Serialize};
use trackbc_core::controller::EpisodeResult;
use trackbc_core::net::TrainReport;

use crate::{fsio, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub episodes: Vec<EpisodeResult>,
    pub successes: usize,
    pub total: usize,
}

impl RolloutSummary {
    pub fn new(episodes: Vec<EpisodeResult>) -> Self {
        let successes = episodes.iter().filter(|e| e.success()).count();
        RolloutSummary {
            total: episodes.len(),
            successes,
            episodes,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fsio::atomic_write(path, to_json(value).as_bytes())
}

pub fn read_rollout(path: &Path) -> Result<RolloutSummary> {
    let text = fsio::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

pub fn read_train_report(path: &Path) -> Result<TrainReport> {
    let text = fsio::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}
