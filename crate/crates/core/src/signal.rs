//! Sensor conditioning: first-order low-pass filtering and alignment of the
//! 30 Hz IMU and 20 Hz sonar streams onto the 10 Hz control grid.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::domain::Observation;
use crate::error::{Error, Result};

/// Control loop rate in Hz.
pub const CONTROL_HZ: f64 = 10.0;
pub const IMU_HZ: f64 = 30.0;
pub const SONAR_HZ: f64 = 20.0;
/// Default IMU cutoff. At 30 Hz sampling this is the Nyquist frequency, so
/// [`design_lowpass`] returns the identity filter.
pub const DEFAULT_IMU_CUTOFF_HZ: f64 = 15.0;

/// Slack for comparing sample times against tick times.
const TIME_EPS: f64 = 1e-9;

/// Coefficients of `y[n] = b0*x[n] + b1*x[n-1] - a1*y[n-1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub a1: f64,
}

impl FilterCoeffs {
    pub const IDENTITY: FilterCoeffs = FilterCoeffs {
        b0: 1.0,
        b1: 0.0,
        a1: 0.0,
    };
}

/// First-order Butterworth low-pass via the prewarped bilinear transform.
///
/// A cutoff at or above Nyquist has no realizable first-order response; it
/// yields the identity filter.
pub fn design_lowpass(fc: f64, fs: f64) -> Result<FilterCoeffs> {
    if !(fc > 0.0 && fc.is_finite()) || !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "frequencies must be positive and finite (fc={fc}, fs={fs})"
        )));
    }
    if fc >= fs / 2.0 {
        return Ok(FilterCoeffs::IDENTITY);
    }
    let k = libm::tan(PI * fc / fs);
    let b = k / (1.0 + k);
    Ok(FilterCoeffs {
        b0: b,
        b1: b,
        a1: (k - 1.0) / (k + 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterState {
    pub prev_input: f64,
    pub prev_output: f64,
}

pub fn filter_step(state: FilterState, x: f64, c: &FilterCoeffs) -> (FilterState, f64) {
    let y = c.b0 * x + c.b1 * state.prev_input - c.a1 * state.prev_output;
    (
        FilterState {
            prev_input: x,
            prev_output: y,
        },
        y,
    )
}

/// A filter with its state, for streaming use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    pub coeffs: FilterCoeffs,
    pub state: FilterState,
}

impl LowPass {
    pub fn new(coeffs: FilterCoeffs) -> Self {
        LowPass {
            coeffs,
            state: FilterState::default(),
        }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let (s, y) = filter_step(self.state, x, &self.coeffs);
        self.state = s;
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    /// Seconds since stream start.
    pub t: f64,
    pub value: f64,
}

/// Zero-order hold over one time-sorted stream: yields the latest sample at
/// or before a query time, consuming the stream monotonically.
#[derive(Debug, Clone)]
struct Hold<'a> {
    samples: &'a [TimedSample],
    next: usize,
    current: Option<TimedSample>,
}

impl<'a> Hold<'a> {
    fn new(samples: &'a [TimedSample]) -> Self {
        Hold {
            samples,
            next: 0,
            current: None,
        }
    }

    fn at(&mut self, t: f64) -> Option<TimedSample> {
        while let Some(s) = self.samples.get(self.next) {
            if s.t <= t + TIME_EPS {
                self.current = Some(*s);
                self.next += 1;
            } else {
                break;
            }
        }
        self.current
    }

    fn last_time(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }
}

/// Already-filtered IMU channels, each a time-sorted stream.
#[derive(Debug, Clone, Copy)]
pub struct ImuStreams<'a> {
    pub yaw: &'a [TimedSample],
    pub pitch: &'a [TimedSample],
    pub roll: &'a [TimedSample],
}

fn check_sorted(name: &'static str, s: &[TimedSample]) -> Result<()> {
    for w in s.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(Error::InvalidArgument(alloc::format!(
                "stream `{name}` is not strictly increasing at t={}",
                w[1].t
            )));
        }
    }
    if s.first().is_some_and(|f| f.t < 0.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "stream `{name}` starts before 0"
        )));
    }
    Ok(())
}

/// Resample the IMU and sonar streams onto the 10 Hz control grid by zero-order
/// hold. Ticks run at `k/10` s up to the last sample of the shortest stream.
/// Ticks before every stream has delivered its first sample are skipped
/// (warmup); a stream with no samples at all is an alignment error.
pub fn align_to_control_rate(
    imu: ImuStreams<'_>,
    sonar: &[TimedSample],
) -> Result<Vec<Observation>> {
    let named: [(&'static str, &[TimedSample]); 4] = [
        ("yaw", imu.yaw),
        ("pitch", imu.pitch),
        ("roll", imu.roll),
        ("sonar", sonar),
    ];
    for (name, s) in named {
        check_sorted(name, s)?;
        if s.is_empty() {
            return Err(Error::Alignment(name));
        }
    }
    let mut holds = named.map(|(_, s)| Hold::new(s));
    let end = holds
        .iter()
        .filter_map(Hold::last_time)
        .fold(f64::INFINITY, f64::min);

    let mut out = Vec::new();
    let mut k: u64 = 0;
    loop {
        let t = k as f64 / CONTROL_HZ;
        if t > end + TIME_EPS {
            break;
        }
        let held = holds.each_mut().map(|h| h.at(t));
        k += 1;
        if held.iter().any(Option::is_none) {
            continue;
        }
        let v = held.map(|s| s.map_or(0.0, |s| s.value));
        out.push(Observation {
            yaw: v[0],
            pitch: v[1],
            roll: v[2],
            distance: v[3].max(0.0),
        });
    }
    Ok(out)
}
