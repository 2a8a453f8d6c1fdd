use std::path::{Path, PathBuf};

use trackbc_core::controller::{update_mode, LoopConfig, ModeState};
use trackbc_core::demo::{
    grid_time, ControllerKind, CreatedBy, DemoMeta, DemoRecord, Demonstration, Rates, SourceSpan,
    DEMO_FORMAT_VERSION,
};
use trackbc_core::domain::{ActionTriple, Observation};
use trackbc_core::sim::{ScenarioSpec, SensorConfig, Session, SimConfig, World};

use super::protocol::StateFrame;
use crate::{demo_file, Error, Result};

/// One live simulator driven by a remote operator, recording every tick.
pub struct TeleopSession {
    spec: ScenarioSpec,
    kind: ControllerKind,
    out_dir: PathBuf,
    sim: Session,
    mode: ModeState,
    loop_cfg: LoopConfig,
    records: Vec<DemoRecord>,
    obs: Observation,
}

/// Keep only characters that are safe in a file name.
pub fn sanitize_name(name: &str) -> String {
    let s: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-'))
        .collect();
    if s.is_empty() {
        "demo".into()
    } else {
        s
    }
}

impl TeleopSession {
    pub fn new(spec: ScenarioSpec, kind: ControllerKind, out_dir: &Path) -> Result<Self> {
        spec.validate()?;
        let sensors = SensorConfig::default();
        let sim = Session::new(World::new(spec.clone(), SimConfig::default()), sensors)?;
        let obs = sim
            .observe()
            .ok_or(trackbc_core::Error::Alignment("sensors"))?;
        Ok(TeleopSession {
            spec,
            kind,
            out_dir: out_dir.to_path_buf(),
            sim,
            mode: ModeState::default(),
            loop_cfg: LoopConfig::default(),
            records: Vec::new(),
            obs,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Advance one control tick. `None` means no command arrived this tick,
    /// which is the idle action.
    pub fn tick(&mut self, action: Option<ActionTriple>) -> StateFrame {
        let action = action.unwrap_or(ActionTriple::IDLE);
        let k = self.records.len();
        let t = grid_time(k);
        self.mode = update_mode(self.mode, &self.obs, &self.loop_cfg, t);
        self.records.push(DemoRecord {
            t,
            obs: self.obs,
            action,
        });
        self.sim.step_control(action);
        if let Some(o) = self.sim.observe() {
            self.obs = o;
        }
        self.frame()
    }

    pub fn frame(&self) -> StateFrame {
        let s = &self.sim.state;
        StateFrame {
            t: grid_time(self.records.len()),
            x: s.x,
            lateral: s.lateral,
            yaw: s.yaw,
            pitch: s.pitch,
            roll: s.roll,
            distance: self.obs.distance,
            fallen: s.fallen,
            arm_pose: s.arm_pose,
            mode: self.mode.mode,
            recording: true,
        }
    }

    /// Start the course over and drop the recording.
    pub fn reset(&mut self) -> Result<()> {
        *self = TeleopSession::new(self.spec.clone(), self.kind, &self.out_dir)?;
        Ok(())
    }

    pub fn demonstration(&self, complete: bool) -> Result<Demonstration> {
        let digest = self.spec.digest();
        let meta = DemoMeta {
            version: DEMO_FORMAT_VERSION,
            controller: self.kind,
            created_by: CreatedBy::Teleop,
            scenario_digest: digest.clone(),
            seed: self.spec.seed,
            rates: Rates::default(),
            complete,
            sources: vec![SourceSpan {
                scenario_digest: digest,
                seed: self.spec.seed,
                created_by: CreatedBy::Teleop,
                start: 0,
                len: self.records.len(),
            }],
        };
        let demo = Demonstration {
            meta,
            records: self.records.clone(),
        };
        demo.validate()?;
        Ok(demo)
    }

    /// Write the recording so far to `<out_dir>/<name>.demo`. Recording
    /// carries on afterwards.
    pub fn save(&self, name: &str, complete: bool) -> Result<PathBuf> {
        if self.records.is_empty() {
            return Err(Error::Core(trackbc_core::Error::Size(
                "nothing recorded yet".into(),
            )));
        }
        let path = self.out_dir.join(format!("{}.demo", sanitize_name(name)));
        demo_file::write_demo(&path, &self.demonstration(complete)?)?;
        Ok(path)
    }
}
