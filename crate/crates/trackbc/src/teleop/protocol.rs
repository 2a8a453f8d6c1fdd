//! Teleop wire messages. Every frame is one JSON object with a `type` tag.

use serde::{Deserialize, Serialize};
use trackbc_core::controller::Mode;
use trackbc_core::domain::ArmPrimitive;
use trackbc_core::sim::{Fallen, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Action { u_a: i8, u_s: i8, u_m: i8 },
    Save { name: String },
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub t: f64,
    pub x: f64,
    pub lateral: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    /// Sonar range as the robot sensed it.
    pub distance: f64,
    pub fallen: Fallen,
    pub arm_pose: ArmPrimitive,
    pub mode: Mode,
    pub recording: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(StateFrame),
    Scenario(ScenarioSpec),
    Saved {
        path: String,
    },
    /// A client frame could not be used. The session keeps running.
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }
}

pub fn parse_client(text: &str) -> Result<ClientMessage, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}
