//! Control vocabulary shared by every other module: the three control
//! channels, the 45-way motion-primitive index, track mixing, and the
//! observation record fed to the networks.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of motion primitives (5 arm x 3 steering x 3 movement).
pub const NUM_ACTIONS: usize = 45;

/// Arm motion primitive selected by the arm channel `u_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmPrimitive {
    Middle,
    Back,
    RecoverLeft,
    RecoverRight,
    Delivery,
}

impl ArmPrimitive {
    pub const ALL: [ArmPrimitive; 5] = [
        ArmPrimitive::Middle,
        ArmPrimitive::Back,
        ArmPrimitive::RecoverLeft,
        ArmPrimitive::RecoverRight,
        ArmPrimitive::Delivery,
    ];

    pub fn from_channel(u_a: i8) -> Result<Self> {
        match u_a {
            0 => Ok(ArmPrimitive::Middle),
            1 => Ok(ArmPrimitive::Back),
            2 => Ok(ArmPrimitive::RecoverLeft),
            3 => Ok(ArmPrimitive::RecoverRight),
            4 => Ok(ArmPrimitive::Delivery),
            v => Err(Error::Domain {
                channel: "u_a",
                value: v as i64,
            }),
        }
    }

    pub fn channel(self) -> i8 {
        match self {
            ArmPrimitive::Middle => 0,
            ArmPrimitive::Back => 1,
            ArmPrimitive::RecoverLeft => 2,
            ArmPrimitive::RecoverRight => 3,
            ArmPrimitive::Delivery => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArmPrimitive::Middle => "middle",
            ArmPrimitive::Back => "back",
            ArmPrimitive::RecoverLeft => "recover_left",
            ArmPrimitive::RecoverRight => "recover_right",
            ArmPrimitive::Delivery => "delivery",
        }
    }
}

/// The three-channel control command `(u_a, u_s, u_m)`.
///
/// `u_a` in 0..=4 selects the arm primitive, `u_s` in -1..=1 steers
/// (left, idle, right) and `u_m` in -1..=1 moves (backward, stop, forward).
/// Construct through [`ActionTriple::new`] so the ranges always hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionTriple {
    u_a: i8,
    u_s: i8,
    u_m: i8,
}

impl ActionTriple {
    pub const IDLE: ActionTriple = ActionTriple {
        u_a: 0,
        u_s: 0,
        u_m: 0,
    };

    pub fn new(u_a: i8, u_s: i8, u_m: i8) -> Result<Self> {
        if !(0..=4).contains(&u_a) {
            return Err(Error::Domain {
                channel: "u_a",
                value: u_a as i64,
            });
        }
        if !(-1..=1).contains(&u_s) {
            return Err(Error::Domain {
                channel: "u_s",
                value: u_s as i64,
            });
        }
        if !(-1..=1).contains(&u_m) {
            return Err(Error::Domain {
                channel: "u_m",
                value: u_m as i64,
            });
        }
        Ok(ActionTriple { u_a, u_s, u_m })
    }

    /// Infallible constructor for literals known to be in range.
    pub(crate) const fn new_unchecked(u_a: i8, u_s: i8, u_m: i8) -> Self {
        ActionTriple { u_a, u_s, u_m }
    }

    pub fn u_a(self) -> i8 {
        self.u_a
    }

    pub fn u_s(self) -> i8 {
        self.u_s
    }

    pub fn u_m(self) -> i8 {
        self.u_m
    }

    pub fn arm(self) -> ArmPrimitive {
        ArmPrimitive::from_channel(self.u_a).expect("validated on construction")
    }

    /// Left/right track command for this triple.
    pub fn motors(self) -> MotorCommand {
        MotorCommand::mix(self.u_m, self.u_s)
    }
}

impl fmt::Display for ActionTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.u_a, self.u_s, self.u_m)
    }
}

/// Index of a motion primitive in `0..45`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(u8);

impl ActionId {
    /// `(0,0,0)`: arm middle, no steering, no movement.
    pub const IDLE: ActionId = ActionId(4);

    pub fn new(id: usize) -> Result<Self> {
        if id < NUM_ACTIONS {
            Ok(ActionId(id as u8))
        } else {
            Err(Error::Domain {
                channel: "action id",
                value: id as i64,
            })
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `id = u_a*9 + (u_s+1)*3 + u_m + 1`.
pub fn encode_action(a: ActionTriple) -> ActionId {
    let id = a.u_a as i32 * 9 + (a.u_s as i32 + 1) * 3 + a.u_m as i32 + 1;
    ActionId(id as u8)
}

/// Channel-checked variant of [`encode_action`] for raw integers.
pub fn encode_channels(u_a: i8, u_s: i8, u_m: i8) -> Result<ActionId> {
    ActionTriple::new(u_a, u_s, u_m).map(encode_action)
}

pub fn decode_action(id: ActionId) -> ActionTriple {
    let id = id.0 as i8;
    let u_a = id / 9;
    let rest = id % 9;
    let u_s = rest / 3 - 1;
    let u_m = rest % 3 - 1;
    ActionTriple::new_unchecked(u_a, u_s, u_m)
}

pub fn is_idle(a: ActionTriple) -> bool {
    a == ActionTriple::IDLE
}

/// Track velocities in full-speed quanta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MotorCommand {
    pub v_l: i8,
    pub v_r: i8,
}

impl MotorCommand {
    pub const STOP: MotorCommand = MotorCommand { v_l: 0, v_r: 0 };

    /// Differential mixing of the movement and steering channels, saturated
    /// to full speed on each track.
    pub fn mix(u_m: i8, u_s: i8) -> MotorCommand {
        MotorCommand {
            v_l: (u_m + u_s).clamp(-1, 1),
            v_r: (u_m - u_s).clamp(-1, 1),
        }
    }
}

/// Range-checked [`MotorCommand::mix`].
pub fn mix_motors(u_m: i8, u_s: i8) -> Result<MotorCommand> {
    if !(-1..=1).contains(&u_m) {
        return Err(Error::Domain {
            channel: "u_m",
            value: u_m as i64,
        });
    }
    if !(-1..=1).contains(&u_s) {
        return Err(Error::Domain {
            channel: "u_s",
            value: u_s as i64,
        });
    }
    Ok(MotorCommand::mix(u_m, u_s))
}

/// One sample of the network input: attitude in degrees, front range in cm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub distance: f64,
}

impl Observation {
    pub const FEATURES: usize = 4;

    pub fn new(yaw: f64, pitch: f64, roll: f64, distance: f64) -> Result<Self> {
        let obs = Observation {
            yaw,
            pitch,
            roll,
            distance,
        };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()) {
            return Err(Error::InvalidArgument("non-finite attitude".into()));
        }
        if !(self.distance.is_finite() && self.distance >= 0.0) {
            return Err(Error::InvalidArgument(
                "distance must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Round to sensor resolution: 0.01° for angles, 0.1 cm for range.
    pub fn quantized(self) -> Self {
        // `+ 0.0` folds negative zero
        let q = |v: f64, scale: f64| libm::round(v * scale) / scale + 0.0;
        Observation {
            yaw: q(self.yaw, 100.0),
            pitch: q(self.pitch, 100.0),
            roll: q(self.roll, 100.0),
            distance: q(self.distance, 10.0),
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.yaw, self.pitch, self.roll, self.distance]
    }
}

/// One-hot encoding of an [`ActionId`] over the 45 primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneHot45(pub [f64; NUM_ACTIONS]);

impl OneHot45 {
    pub fn hot_index(&self) -> usize {
        self.0
            .iter()
            .position(|&v| v == 1.0)
            .expect("exactly one component is set")
    }
}

pub fn to_one_hot(id: ActionId) -> OneHot45 {
    let mut v = [0.0; NUM_ACTIONS];
    v[id.index()] = 1.0;
    OneHot45(v)
}
