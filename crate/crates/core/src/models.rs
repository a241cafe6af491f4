//! Model parameterizations, right-hand sides and coordinate transforms.
//!
//! Four model forms share this module:
//!
//! | form        | state        | equations                                   |
//! |-------------|--------------|---------------------------------------------|
//! | full        | (B, D, R, P) | mass-action sequestration + Hill repression |
//! | reduced     | (b, d, r, p) | rescaled full model, five parameters        |
//! | transformed | (x, d, r, y) | reduced model in x = b - p, y = b + p       |
//! | Goodwin     | (X, Y, Z)    | classic three-stage Hill feedback loop      |
//!
//! The piecewise-affine limit lives in [`crate::pwa`]; it reuses
//! [`PwaParams`], [`switch_h`] and [`f_b`] from here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidState(format!(
            "{name} = {value} must be finite and nonnegative"
        )))
    }
}

/// Parameters of the four-variable model (B, D, R, P).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FullParamsRaw")]
pub struct FullParams {
    #[serde(rename = "V_R")]
    v_r: f64,
    #[serde(rename = "V_B")]
    v_b: f64,
    #[serde(rename = "V_D")]
    v_d: f64,
    #[serde(rename = "gamma_B")]
    gamma_b: f64,
    #[serde(rename = "gamma_D")]
    gamma_d: f64,
    #[serde(rename = "gamma_R")]
    gamma_r: f64,
    #[serde(rename = "k_R")]
    k_r: f64,
}

#[derive(Deserialize)]
struct FullParamsRaw {
    #[serde(rename = "V_R")]
    v_r: f64,
    #[serde(rename = "V_B")]
    v_b: f64,
    #[serde(rename = "V_D")]
    v_d: f64,
    #[serde(rename = "gamma_B")]
    gamma_b: f64,
    #[serde(rename = "gamma_D")]
    gamma_d: f64,
    #[serde(rename = "gamma_R")]
    gamma_r: f64,
    #[serde(rename = "k_R")]
    k_r: f64,
}

impl TryFrom<FullParamsRaw> for FullParams {
    type Error = Error;
    fn try_from(r: FullParamsRaw) -> Result<Self> {
        Self::new(r.v_r, r.v_b, r.v_d, r.gamma_b, r.gamma_d, r.gamma_r, r.k_r)
    }
}

impl FullParams {
    /// Synthesis rates `V_R, V_B, V_D`, sequestration rate `gamma_B`,
    /// degradation rates `gamma_D, gamma_R` and Hill threshold `k_R`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        v_r: f64,
        v_b: f64,
        v_d: f64,
        gamma_b: f64,
        gamma_d: f64,
        gamma_r: f64,
        k_r: f64,
    ) -> Result<Self> {
        Ok(Self {
            v_r: positive("V_R", v_r)?,
            v_b: positive("V_B", v_b)?,
            v_d: positive("V_D", v_d)?,
            gamma_b: positive("gamma_B", gamma_b)?,
            gamma_d: positive("gamma_D", gamma_d)?,
            gamma_r: positive("gamma_R", gamma_r)?,
            k_r: positive("k_R", k_r)?,
        })
    }

    pub fn v_r(&self) -> f64 {
        self.v_r
    }
    pub fn v_b(&self) -> f64 {
        self.v_b
    }
    pub fn v_d(&self) -> f64 {
        self.v_d
    }
    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }
    pub fn gamma_d(&self) -> f64 {
        self.gamma_d
    }
    pub fn gamma_r(&self) -> f64 {
        self.gamma_r
    }
    pub fn k_r(&self) -> f64 {
        self.k_r
    }
}

/// The four rate constants of the piecewise-affine model.
///
/// These are the reduced parameters without the sequestration rate, which
/// the large-sequestration limit eliminates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PwaParamsRaw")]
pub struct PwaParams {
    beta: f64,
    gamma: f64,
    delta: f64,
    epsilon: f64,
}

#[derive(Deserialize)]
struct PwaParamsRaw {
    beta: f64,
    gamma: f64,
    delta: f64,
    epsilon: f64,
}

impl TryFrom<PwaParamsRaw> for PwaParams {
    type Error = Error;
    fn try_from(r: PwaParamsRaw) -> Result<Self> {
        Self::new(r.beta, r.gamma, r.delta, r.epsilon)
    }
}

impl PwaParams {
    pub fn new(beta: f64, gamma: f64, delta: f64, epsilon: f64) -> Result<Self> {
        Ok(Self {
            beta: positive("beta", beta)?,
            gamma: positive("gamma", gamma)?,
            delta: positive("delta", delta)?,
            epsilon: positive("epsilon", epsilon)?,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Threshold of `d` at which `r` stops being able to cross 1: `delta / gamma`.
    pub fn d_star(&self) -> f64 {
        self.delta / self.gamma
    }

    pub fn with_alpha(self, alpha: f64) -> Result<ReducedParams> {
        ReducedParams::new(alpha, self.beta, self.gamma, self.delta, self.epsilon)
    }
}

/// Parameters of the rescaled model (b, d, r, p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReducedParamsRaw")]
pub struct ReducedParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    epsilon: f64,
}

#[derive(Deserialize)]
struct ReducedParamsRaw {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    epsilon: f64,
}

impl TryFrom<ReducedParamsRaw> for ReducedParams {
    type Error = Error;
    fn try_from(r: ReducedParamsRaw) -> Result<Self> {
        Self::new(r.alpha, r.beta, r.gamma, r.delta, r.epsilon)
    }
}

impl ReducedParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, epsilon: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            beta: positive("beta", beta)?,
            gamma: positive("gamma", gamma)?,
            delta: positive("delta", delta)?,
            epsilon: positive("epsilon", epsilon)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.beta, self.gamma, self.delta, self.epsilon)
    }

    /// Drops the sequestration rate.
    pub fn pwa(&self) -> PwaParams {
        PwaParams {
            beta: self.beta,
            gamma: self.gamma,
            delta: self.delta,
            epsilon: self.epsilon,
        }
    }
}

/// Parameters of the Goodwin oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GoodwinParamsRaw")]
pub struct GoodwinParams {
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
    #[serde(rename = "K")]
    k: f64,
    n: f64,
}

#[derive(Deserialize)]
struct GoodwinParamsRaw {
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
    #[serde(rename = "K")]
    k: f64,
    n: f64,
}

impl TryFrom<GoodwinParamsRaw> for GoodwinParams {
    type Error = Error;
    fn try_from(r: GoodwinParamsRaw) -> Result<Self> {
        Self::new(
            [r.alpha1, r.alpha2, r.alpha3],
            [r.gamma1, r.gamma2, r.gamma3],
            r.k,
            r.n,
        )
    }
}

impl GoodwinParams {
    pub fn new(alpha: [f64; 3], gamma: [f64; 3], k: f64, n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n,
                reason: "Hill exponent must be finite and at least 1",
            });
        }
        Ok(Self {
            alpha1: positive("alpha1", alpha[0])?,
            alpha2: positive("alpha2", alpha[1])?,
            alpha3: positive("alpha3", alpha[2])?,
            gamma1: positive("gamma1", gamma[0])?,
            gamma2: positive("gamma2", gamma[1])?,
            gamma3: positive("gamma3", gamma[2])?,
            k: positive("K", k)?,
            n,
        })
    }

    pub fn alpha(&self) -> [f64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }
    pub fn gamma(&self) -> [f64; 3] {
        [self.gamma1, self.gamma2, self.gamma3]
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn n(&self) -> f64 {
        self.n
    }
}

/// Concentrations of the full model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    /// CLOCK:BMAL1.
    pub b: f64,
    /// DBP.
    pub d: f64,
    /// REV-ERB.
    pub r: f64,
    /// PER:CRY.
    pub p: f64,
}

impl FullState {
    pub fn new(b: f64, d: f64, r: f64, p: f64) -> Result<Self> {
        Ok(Self {
            b: nonnegative("B", b)?,
            d: nonnegative("D", d)?,
            r: nonnegative("R", r)?,
            p: nonnegative("P", p)?,
        })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.b, self.d, self.r, self.p]
    }
}

/// Rescaled concentrations of the reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub b: f64,
    pub d: f64,
    pub r: f64,
    pub p: f64,
}

impl ReducedState {
    pub fn new(b: f64, d: f64, r: f64, p: f64) -> Result<Self> {
        Ok(Self {
            b: nonnegative("b", b)?,
            d: nonnegative("d", d)?,
            r: nonnegative("r", r)?,
            p: nonnegative("p", p)?,
        })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.b, self.d, self.r, self.p]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            b: a[0],
            d: a[1],
            r: a[2],
            p: a[3],
        }
    }
}

/// State of the transformed model: `x = b - p`, `y = b + p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyState {
    pub x: f64,
    pub d: f64,
    pub r: f64,
    pub y: f64,
}

impl XyState {
    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.d, self.r, self.y]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            x: a[0],
            d: a[1],
            r: a[2],
            y: a[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodwinState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GoodwinState {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Ok(Self {
            x: nonnegative("X", x)?,
            y: nonnegative("Y", y)?,
            z: nonnegative("Z", z)?,
        })
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Hill repression of the full model, `k_R^2 / (k_R^2 + R^2)`.
pub fn hill_full(r_conc: f64, k_r: f64) -> Result<f64> {
    nonnegative("R", r_conc)?;
    positive("k_R", k_r)?;
    let k2 = k_r * k_r;
    Ok(k2 / (k2 + r_conc * r_conc))
}

/// Hill repression of the reduced model, `1 / (1 + r^2)`.
pub fn hill_reduced(r: f64) -> Result<f64> {
    nonnegative("r", r)?;
    Ok(hill_d(r))
}

#[inline]
pub(crate) fn hill_d(r: f64) -> f64 {
    1.0 / (1.0 + r * r)
}

/// Step repression: 1 strictly below the threshold `r = 1`, 0 at and above it.
#[inline]
pub fn switch_h(r: f64) -> f64 {
    if r < 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Free CLOCK:BMAL1 in the large-sequestration limit: `max(x, 0)`.
#[inline]
pub fn f_b(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn rhs_full(s: &FullState, p: &FullParams) -> [f64; 4] {
    let k2 = p.k_r * p.k_r;
    let h = k2 / (k2 + s.r * s.r);
    let seq = p.gamma_b * s.b * s.p;
    [
        p.v_r * h - seq,
        p.v_b * s.b - p.gamma_d * s.d,
        p.v_d * s.d - p.gamma_r * s.r,
        p.v_d * s.d - seq,
    ]
}

pub fn rhs_reduced(s: &ReducedState, p: &ReducedParams) -> [f64; 4] {
    let h = hill_d(s.r);
    let seq = p.alpha * s.b * s.p;
    [
        h - seq,
        s.b - p.beta * s.d,
        p.gamma * s.d - p.delta * s.r,
        p.epsilon * s.d - seq,
    ]
}

/// Right-hand side in the (x, d, r, y) coordinates.
///
/// The x-component never reads `alpha`.
pub fn rhs_transformed(s: &XyState, p: &ReducedParams) -> [f64; 4] {
    let h = hill_d(s.r);
    [
        h - p.epsilon * s.d,
        0.5 * (s.x + s.y) - p.beta * s.d,
        p.gamma * s.d - p.delta * s.r,
        h + p.epsilon * s.d + 0.5 * p.alpha * (s.x * s.x - s.y * s.y),
    ]
}

pub fn rhs_goodwin(s: &GoodwinState, p: &GoodwinParams) -> [f64; 3] {
    let kn = p.k.powf(p.n);
    let zn = s.z.max(0.0).powf(p.n);
    [
        p.alpha1 * kn / (kn + zn) - p.gamma1 * s.x,
        p.alpha2 * s.x - p.gamma2 * s.y,
        p.alpha3 * s.y - p.gamma3 * s.z,
    ]
}

/// Maps full parameters onto the five reduced ones.
pub fn reduce_params(fp: &FullParams) -> ReducedParams {
    ReducedParams {
        alpha: fp.v_r * fp.gamma_b,
        beta: fp.gamma_d,
        gamma: fp.v_b * fp.v_d * fp.v_r / fp.k_r,
        delta: fp.gamma_r,
        epsilon: fp.v_b * fp.v_d,
    }
}

/// Rescales a full state: `b = B / V_R`, `d = D / (V_B V_R)`, `r = R / k_R`, `p = P / V_R`.
pub fn scale_state(s: &FullState, fp: &FullParams) -> ReducedState {
    ReducedState {
        b: s.b / fp.v_r,
        d: s.d / (fp.v_b * fp.v_r),
        r: s.r / fp.k_r,
        p: s.p / fp.v_r,
    }
}

pub fn to_xy(s: &ReducedState) -> XyState {
    XyState {
        x: s.b - s.p,
        d: s.d,
        r: s.r,
        y: s.b + s.p,
    }
}

/// Inverse of [`to_xy`]; rejects `y < |x|`, which would give a negative concentration.
pub fn from_xy(s: &XyState) -> Result<ReducedState> {
    if !(s.y >= s.x.abs()) {
        return Err(Error::InvalidState(format!(
            "y = {} is below |x| = {}",
            s.y,
            s.x.abs()
        )));
    }
    Ok(ReducedState {
        b: 0.5 * (s.x + s.y),
        d: s.d,
        r: s.r,
        p: 0.5 * (s.y - s.x),
    })
}

/// Named parameter sets.
pub mod presets {
    use super::{GoodwinParams, PwaParams, ReducedParams};

    /// Sequestration rate of the fitted model.
    pub const STANDARD_ALPHA: f64 = 114.6;

    /// Fitted rate constants of the reduced and PWA models.
    pub fn standard() -> ReducedParams {
        ReducedParams::new(STANDARD_ALPHA, 0.156, 0.15, 0.241, 2.698).expect("valid preset")
    }

    /// The standard set with `gamma = 1.5` instead of `0.15`.
    ///
    /// The standard set violates `gamma > epsilon * delta`, so its PWA
    /// equilibrium is a stable focus inside rXd and nothing oscillates. With
    /// `gamma = 1.5` the PWA free-running period is about 27.2 h.
    pub fn gamma_1_5() -> ReducedParams {
        ReducedParams::new(STANDARD_ALPHA, 0.156, 1.5, 0.241, 2.698).expect("valid preset")
    }

    pub fn standard_pwa() -> PwaParams {
        standard().pwa()
    }

    pub fn goodwin() -> GoodwinParams {
        GoodwinParams::new([5.0, 5.0, 5.0], [0.5, 0.5, 0.5], 1.0, 10.0).expect("valid preset")
    }
}
