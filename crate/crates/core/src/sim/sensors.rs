use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{sim_init, sim_step, SimState, World, TICKS_PER_CONTROL};
use crate::domain::{ActionTriple, Observation};
use crate::error::Result;
use crate::signal::{design_lowpass, LowPass, TimedSample, DEFAULT_IMU_CUTOFF_HZ, IMU_HZ};

/// Sensor noise stream is decorrelated from the physics stream.
const SENSOR_SEED_SALT: u64 = 0x5eb5_0a11_d15c_0de5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Standard deviation of IMU angle noise, degrees. Zero disables noise.
    pub imu_noise: f64,
    /// Standard deviation of sonar noise, cm.
    pub sonar_noise: f64,
    /// Surfaces must rise this far above the robot base to return an echo, cm.
    pub sonar_height: f64,
    pub sonar_max_range: f64,
    pub imu_cutoff_hz: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            imu_noise: 0.5,
            sonar_noise: 1.0,
            sonar_height: 25.0,
            sonar_max_range: 500.0,
            imu_cutoff_hz: DEFAULT_IMU_CUTOFF_HZ,
        }
    }
}

impl SensorConfig {
    pub fn noiseless() -> Self {
        SensorConfig {
            imu_noise: 0.0,
            sonar_noise: 0.0,
            ..Self::default()
        }
    }
}

/// Raw sensor streams over an interval: filtered IMU at 30 Hz, sonar at 20 Hz.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SensorFrame {
    pub yaw: Vec<TimedSample>,
    pub pitch: Vec<TimedSample>,
    pub roll: Vec<TimedSample>,
    pub sonar: Vec<TimedSample>,
}

/// Streaming IMU/sonar sampler.
///
/// IMU sample `j` is nominally taken at `j/30` s, sonar sample `j` at `j/20` s;
/// each reads the latest physics state at or before its nominal time.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    config: SensorConfig,
    rng: ChaCha8Rng,
    filters: [LowPass; 3],
    next_imu: u64,
    next_sonar: u64,
    imu: Option<[f64; 3]>,
    sonar: Option<f64>,
    log: Option<SensorFrame>,
}

impl SensorSuite {
    pub fn new(config: SensorConfig, seed: u64) -> Result<Self> {
        let coeffs = design_lowpass(config.imu_cutoff_hz, IMU_HZ)?;
        Ok(SensorSuite {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed ^ SENSOR_SEED_SALT),
            filters: [LowPass::new(coeffs); 3],
            next_imu: 0,
            next_sonar: 0,
            imu: None,
            sonar: None,
            log: None,
        })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    /// Keep every emitted sample for later inspection.
    pub fn enable_log(&mut self) {
        self.log = Some(SensorFrame::default());
    }

    pub fn take_log(&mut self) -> Option<SensorFrame> {
        self.log.take()
    }

    fn noise(&mut self, std: f64) -> f64 {
        if std > 0.0 {
            Normal::new(0.0, std)
                .expect("positive std")
                .sample(&mut self.rng)
        } else {
            0.0
        }
    }

    /// Emit every sample whose nominal time falls before the next physics
    /// tick, reading `state` (the latest state at or before those times).
    pub fn sample_through(&mut self, world: &World, state: &SimState) {
        let tick = state.tick;
        // IMU: j/30 < (tick+1)/100  <=>  10j < 3(tick+1)
        while 10 * self.next_imu < 3 * (tick + 1) {
            let t = self.next_imu as f64 / IMU_HZ;
            let raw = [state.yaw, state.pitch, state.roll];
            let mut out = [0.0; 3];
            for (i, v) in raw.into_iter().enumerate() {
                let noisy = v + self.noise(self.config.imu_noise);
                out[i] = self.filters[i].step(noisy);
            }
            if let Some(log) = &mut self.log {
                log.yaw.push(TimedSample { t, value: out[0] });
                log.pitch.push(TimedSample { t, value: out[1] });
                log.roll.push(TimedSample { t, value: out[2] });
            }
            self.imu = Some(out);
            self.next_imu += 1;
        }
        // sonar: j/20 < (tick+1)/100  <=>  5j <= tick
        while 5 * self.next_sonar <= tick {
            let t = self.next_sonar as f64 / 20.0;
            let range =
                world.true_range(state, self.config.sonar_height, self.config.sonar_max_range);
            let d = (range + self.noise(self.config.sonar_noise))
                .clamp(0.0, self.config.sonar_max_range);
            if let Some(log) = &mut self.log {
                log.sonar.push(TimedSample { t, value: d });
            }
            self.sonar = Some(d);
            self.next_sonar += 1;
        }
    }

    /// Latest held sample of every stream, once all have reported.
    pub fn observation(&self) -> Option<Observation> {
        let [yaw, pitch, roll] = self.imu?;
        Some(Observation {
            yaw,
            pitch,
            roll,
            distance: self.sonar?,
        })
    }
}

/// Sample a physics trajectory (one state per consecutive tick, as produced
/// by repeated [`sim_step`]) into raw sensor streams.
pub fn read_sensors(
    world: &World,
    states: &[SimState],
    config: SensorConfig,
) -> Result<SensorFrame> {
    let mut suite = SensorSuite::new(config, world.spec.seed)?;
    suite.enable_log();
    for s in states {
        suite.sample_through(world, s);
    }
    Ok(suite.take_log().unwrap_or_default())
}

/// A running simulation with its sensors, stepped at the 10 Hz control rate.
#[derive(Debug, Clone)]
pub struct Session {
    pub world: World,
    pub state: SimState,
    pub sensors: SensorSuite,
}

impl Session {
    pub fn new(world: World, sensor_config: SensorConfig) -> Result<Self> {
        let state = sim_init(&world);
        let mut sensors = SensorSuite::new(sensor_config, world.spec.seed)?;
        sensors.sample_through(&world, &state);
        Ok(Session {
            world,
            state,
            sensors,
        })
    }

    /// Aligned observation at the current control tick, at sensor resolution.
    pub fn observe(&self) -> Option<Observation> {
        self.sensors.observation().map(Observation::quantized)
    }

    /// Hold `action` for one control period (10 physics ticks).
    pub fn step_control(&mut self, action: ActionTriple) {
        let motors = action.motors();
        let arm = action.arm();
        for _ in 0..TICKS_PER_CONTROL {
            sim_step(&self.world, &mut self.state, motors, arm);
            self.sensors.sample_through(&self.world, &self.state);
        }
    }

    pub fn t(&self) -> f64 {
        self.state.t()
    }
}
