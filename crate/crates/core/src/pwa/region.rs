use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{f_b, PwaParams};

/// State of the piecewise-affine model at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwaState {
    pub x: f64,
    pub d: f64,
    pub r: f64,
    pub t: f64,
}

impl PwaState {
    pub fn new(x: f64, d: f64, r: f64, t: f64) -> Result<Self> {
        if !(x.is_finite() && t.is_finite()) {
            return Err(Error::InvalidState(format!("x = {x}, t = {t}")));
        }
        if !(d.is_finite() && d >= 0.0 && r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidState(format!(
                "d = {d} and r = {r} must be finite and nonnegative"
            )));
        }
        Ok(Self { x, d, r, t })
    }
}

/// Threshold face of the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    X,
    D,
    R,
}

impl Face {
    pub fn name(self) -> &'static str {
        match self {
            Face::X => "x",
            Face::D => "d",
            Face::R => "r",
        }
    }
}

/// One of the eight cells cut out by `r = 1`, `x = 0` and `d = d*`.
///
/// Displayed as a three letter code in the order r, x, d; uppercase means
/// the variable is above its threshold (e.g. `rXD`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Region {
    pub r_high: bool,
    pub x_high: bool,
    pub d_high: bool,
}

impl Region {
    pub const fn new(r_high: bool, x_high: bool, d_high: bool) -> Self {
        Self {
            r_high,
            x_high,
            d_high,
        }
    }

    pub fn code(&self) -> String {
        let mut s = String::with_capacity(3);
        s.push(if self.r_high { 'R' } else { 'r' });
        s.push(if self.x_high { 'X' } else { 'x' });
        s.push(if self.d_high { 'D' } else { 'd' });
        s
    }

    pub fn all() -> [Region; 8] {
        let mut out = [Region::new(false, false, false); 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Region::new(i & 4 != 0, i & 2 != 0, i & 1 != 0);
        }
        out
    }

    pub fn is_high(&self, face: Face) -> bool {
        match face {
            Face::X => self.x_high,
            Face::D => self.d_high,
            Face::R => self.r_high,
        }
    }

    pub(crate) fn with(mut self, face: Face, high: bool) -> Self {
        match face {
            Face::X => self.x_high = high,
            Face::D => self.d_high = high,
            Face::R => self.r_high = high,
        }
        self
    }

    /// Value of the step repression inside this region.
    pub fn switch_value(&self) -> f64 {
        if self.r_high {
            0.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let c: Vec<char> = s.chars().collect();
        let bad = || Error::InvalidState(format!("`{s}` is not a region code"));
        if c.len() != 3 {
            return Err(bad());
        }
        let side = |ch: char, lo: char| -> Result<bool> {
            if ch == lo {
                Ok(false)
            } else if ch == lo.to_ascii_uppercase() {
                Ok(true)
            } else {
                Err(bad())
            }
        };
        Ok(Region::new(side(c[0], 'r')?, side(c[1], 'x')?, side(c[2], 'd')?))
    }
}

impl TryFrom<String> for Region {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Region> for String {
    fn from(r: Region) -> String {
        r.code()
    }
}

/// The cyclic sequence RxD, Rxd, rxd, rXd, rXD, RXD.
pub const CYCLE: [Region; 6] = [
    Region::new(true, false, true),
    Region::new(true, false, false),
    Region::new(false, false, false),
    Region::new(false, true, false),
    Region::new(false, true, true),
    Region::new(true, true, true),
];

/// Signed distance of a state to a threshold; positive means above.
#[inline]
pub(crate) fn face_value(face: Face, x: f64, d: f64, r: f64, d_star: f64) -> f64 {
    match face {
        Face::X => x,
        Face::D => d - d_star,
        Face::R => r - 1.0,
    }
}

fn strict_side(v: f64) -> Option<bool> {
    if v > 0.0 {
        Some(true)
    } else if v < 0.0 {
        Some(false)
    } else {
        None
    }
}

/// Classifies a state into its region.
///
/// Off-threshold coordinates are compared strictly. A coordinate sitting
/// exactly on its threshold is assigned to the side the flow moves it into,
/// judged by the first nonvanishing time derivative of that coordinate
/// (up to second order). The triple point `r = 1, x = 0, d = d*` is rejected.
///
/// Only `h_s` is discontinuous across a threshold, and it only enters `x'`,
/// so the r side is settled first, then x and d.
pub fn classify_region(s: &PwaState, p: &PwaParams) -> Result<Region> {
    classify_with_drive(s, p, 0.0)
}

pub(crate) fn classify_with_drive(s: &PwaState, p: &PwaParams, drive: f64) -> Result<Region> {
    let d_star = p.d_star();
    let (beta, gamma, delta, eps) = (p.beta(), p.gamma(), p.delta(), p.epsilon());
    let on_r = s.r == 1.0;
    let on_x = s.x == 0.0;
    let on_d = s.d == d_star;
    if on_r && on_x && on_d {
        return Err(Error::DegeneratePoint);
    }

    // d' does not depend on any side, f_b being continuous
    let d_dot = f_b(s.x) - beta * s.d;

    let r_high = match strict_side(s.r - 1.0) {
        Some(side) => side,
        None => {
            let r_dot = gamma * s.d - delta * s.r;
            match strict_side(r_dot).or_else(|| strict_side(gamma * d_dot)) {
                Some(side) => side,
                None => return Err(Error::DegeneratePoint),
            }
        }
    };
    let h = if r_high { 0.0 } else { 1.0 };
    let x_dot = h + drive - eps * s.d;

    let x_high = match strict_side(s.x) {
        Some(side) => side,
        None => match strict_side(x_dot).or_else(|| strict_side(-eps * d_dot)) {
            Some(side) => side,
            None => return Err(Error::DegeneratePoint),
        },
    };
    let d_high = match strict_side(s.d - d_star) {
        Some(side) => side,
        None => {
            // second derivative of d on the x side just chosen
            let slope = if x_high { 1.0 } else { 0.0 };
            match strict_side(d_dot).or_else(|| strict_side(slope * x_dot - beta * d_dot)) {
                Some(side) => side,
                None => return Err(Error::DegeneratePoint),
            }
        }
    };
    Ok(Region::new(r_high, x_high, d_high))
}
