use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A box-shaped obstacle spanning the corridor width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    /// Near face, cm from the start line.
    pub position: f64,
    pub height: f64,
    pub length: f64,
}

impl Obstacle {
    pub fn end(&self) -> f64 {
        self.position + self.length
    }
}

/// An ascending staircase. The top tread continues as a platform up to the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stair {
    pub position: f64,
    pub n_steps: u32,
    pub step_height: f64,
    pub step_depth: f64,
}

impl Stair {
    /// Position of the face of the highest step.
    pub fn last_face(&self) -> f64 {
        self.position + (self.n_steps.saturating_sub(1)) as f64 * self.step_depth
    }

    pub fn top_height(&self) -> f64 {
        self.n_steps as f64 * self.step_height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    PushLeft,
    PushRight,
    YawKick,
}

/// A scheduled disturbance. For pushes, `magnitude` is the heading offset
/// the fall leaves behind (degrees, applied toward the fall side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub time: f64,
    pub kind: PerturbationKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slip {
    pub enabled: bool,
    /// Bound of the heading drift rate drawn on mounting a feature, deg/s.
    pub yaw_drift_scale: f64,
    /// Upper bound of the per-tick fractional speed loss on features.
    pub speed_loss: f64,
}

impl Default for Slip {
    fn default() -> Self {
        Slip {
            enabled: false,
            yaw_drift_scale: 0.0,
            speed_loss: 0.0,
        }
    }
}

/// Declarative description of one corridor course.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub corridor_length: f64,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub stair: Option<Stair>,
    pub wall_position: f64,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    #[serde(default)]
    pub slip: Slip,
    #[serde(default)]
    pub seed: u64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Scenario(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ScenarioSpec {
    /// Empty corridor ending in a wall.
    pub fn corridor(wall_position: f64) -> Self {
        ScenarioSpec {
            corridor_length: wall_position,
            obstacles: Vec::new(),
            stair: None,
            wall_position,
            perturbations: Vec::new(),
            slip: Slip::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("corridor_length", self.corridor_length)?;
        positive("wall_position", self.wall_position)?;
        if self.wall_position > self.corridor_length {
            return Err(Error::Scenario(format!(
                "wall_position {} beyond corridor_length {}",
                self.wall_position, self.corridor_length
            )));
        }
        let mut prev_end = 0.0_f64;
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.position.is_finite() && o.position >= 0.0) {
                return Err(Error::Scenario(format!(
                    "obstacles[{i}].position must be >= 0"
                )));
            }
            positive(&format!("obstacles[{i}].height"), o.height)?;
            positive(&format!("obstacles[{i}].length"), o.length)?;
            if i > 0 && o.position < self.obstacles[i - 1].position {
                return Err(Error::Scenario(format!(
                    "obstacles[{i}] is not sorted by position"
                )));
            }
            if i > 0 && o.position < prev_end {
                return Err(Error::Scenario(format!(
                    "obstacles[{}] and obstacles[{i}] overlap",
                    i - 1
                )));
            }
            prev_end = o.end();
        }
        let mut features_end = prev_end;
        if let Some(s) = &self.stair {
            positive("stair.position", s.position)?;
            positive("stair.step_height", s.step_height)?;
            positive("stair.step_depth", s.step_depth)?;
            if s.n_steps == 0 {
                return Err(Error::Scenario("stair.n_steps must be at least 1".into()));
            }
            if s.position < prev_end {
                return Err(Error::Scenario("stair overlaps the last obstacle".into()));
            }
            features_end = s.position + s.n_steps as f64 * s.step_depth;
        }
        if self.wall_position < features_end {
            return Err(Error::Scenario(format!(
                "wall_position {} is not beyond all features (end at {features_end})",
                self.wall_position
            )));
        }
        for (i, p) in self.perturbations.iter().enumerate() {
            if !(p.time.is_finite() && p.time >= 0.0) {
                return Err(Error::Scenario(format!(
                    "perturbations[{i}].time must be >= 0"
                )));
            }
            if !p.magnitude.is_finite() {
                return Err(Error::Scenario(format!(
                    "perturbations[{i}].magnitude must be finite"
                )));
            }
        }
        let sl = &self.slip;
        if !(sl.yaw_drift_scale.is_finite() && sl.yaw_drift_scale >= 0.0) {
            return Err(Error::Scenario("slip.yaw_drift_scale must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&sl.speed_loss) {
            return Err(Error::Scenario("slip.speed_loss must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        let hash = Sha256::digest(&bytes);
        let mut s = String::with_capacity(64);
        for b in hash {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Terrain height at corridor position `p` (cm). The wall is not terrain.
    pub fn height_at(&self, p: f64) -> f64 {
        if p < 0.0 {
            return 0.0;
        }
        if let Some(s) = &self.stair {
            if p >= s.position {
                let i = libm::floor((p - s.position) / s.step_depth) as i64;
                let step = (i + 1).min(s.n_steps as i64);
                return step as f64 * s.step_height;
            }
        }
        for o in &self.obstacles {
            if p >= o.position && p < o.end() {
                return o.height;
            }
        }
        0.0
    }

    /// Highest terrain over the closed interval `[a, b]`.
    pub fn max_height(&self, a: f64, b: f64) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let mut h = self.height_at(a).max(self.height_at(b));
        for o in &self.obstacles {
            if o.position <= b && o.end() > a {
                h = h.max(o.height);
            }
        }
        if let Some(s) = &self.stair {
            if s.position <= b {
                h = h.max(self.height_at(b));
            }
        }
        h
    }

    /// Whether the terrain is non-constant over `[a, b]`.
    pub fn uneven(&self, a: f64, b: f64) -> bool {
        let lo = self.height_at(a);
        if self.max_height(a, b) != lo || self.height_at(b) != lo {
            return true;
        }
        // a dip below `lo` is impossible on this terrain except between features
        self.obstacles
            .iter()
            .any(|o| (o.position > a && o.position <= b) || (o.end() > a && o.end() <= b))
            || self.stair.is_some_and(|s| {
                (0..s.n_steps).any(|i| {
                    let f = s.position + i as f64 * s.step_depth;
                    f > a && f <= b
                })
            })
    }

    /// Obstacles and stair faces ordered by position, as `(face, top height)`.
    pub fn faces(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self
            .obstacles
            .iter()
            .map(|o| (o.position, o.height))
            .collect();
        if let Some(s) = &self.stair {
            for i in 0..s.n_steps {
                v.push((
                    s.position + i as f64 * s.step_depth,
                    (i + 1) as f64 * s.step_height,
                ));
            }
        }
        v
    }
}
