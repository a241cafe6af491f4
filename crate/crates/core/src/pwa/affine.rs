//! Closed-form flows of the affine subsystems.
//!
//! With `c = h_s + u` (u an additive input on x), the two structural cases are
//!
//! * x below threshold: `x' = c - eps d`, `d' = -beta d`, `r' = gamma d - delta r`;
//!   everything is a sum of scalar exponentials.
//! * x above threshold: the (x, d) block `[[0, -eps], [1, -beta]]` is a damped
//!   oscillator (or overdamped, or critical), and r is driven by d.
//!
//! For the second case the block exponential is written as
//! `e^{s t} (C(t) I + S(t) (M - s I))` with `s = -beta/2`, `q^2 = beta^2/4 - eps`,
//! `C' = q^2 S`, `S' = C`, which covers all three eigenvalue cases without
//! branching on their sign except in how C and S are evaluated.

use crate::error::{Error, Result};
use crate::models::PwaParams;

use super::region::{PwaState, Region};

/// Denominators below this (relative) magnitude switch to the limit formula.
const DEGENERATE_TOL: f64 = 1e-9;

/// `(e^z - 1) / z`, continuous through `z = 0`.
#[inline]
pub(crate) fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-300 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `integral_0^t e^{-a (t - u)} e^{-b u} du`, stable for `a -> b`.
#[inline]
pub(crate) fn convolve_exp(a: f64, b: f64, t: f64) -> f64 {
    let gap = (a - b) * t;
    if gap.abs() <= 1.0 {
        (-a * t).exp() * t * exprel(gap)
    } else {
        ((-b * t).exp() - (-a * t).exp()) / (a - b)
    }
}

#[derive(Debug, Clone, Copy)]
enum Structure {
    /// x below threshold.
    Ramp,
    /// x above threshold.
    Oscillator {
        s: f64,
        q2: f64,
        x_eq: f64,
        d_eq: f64,
        /// `delta^2 - beta delta + eps`, zero when `-delta` is an eigenvalue.
        kappa: f64,
        mu: f64,
    },
}

/// Exact flow of one affine subsystem from a fixed initial state.
#[derive(Debug, Clone, Copy)]
pub struct AffineFlow {
    x0: f64,
    d0: f64,
    r0: f64,
    c: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    eps: f64,
    structure: Structure,
}

impl AffineFlow {
    /// Flow of `region`'s subsystem from `(x0, d0, r0)` with an additive input
    /// `drive` on `x'`.
    pub fn new(region: Region, x0: f64, d0: f64, r0: f64, p: &PwaParams, drive: f64) -> Self {
        let (beta, gamma, delta, eps) = (p.beta(), p.gamma(), p.delta(), p.epsilon());
        let c = region.switch_value() + drive;
        let structure = if region.x_high {
            let s = -0.5 * beta;
            let q2 = 0.25 * beta * beta - eps;
            let kappa = delta * delta - beta * delta + eps;
            Structure::Oscillator {
                s,
                q2,
                x_eq: beta * c / eps,
                d_eq: c / eps,
                kappa,
                mu: s + delta,
            }
        } else {
            Structure::Ramp
        };
        Self {
            x0,
            d0,
            r0,
            c,
            beta,
            gamma,
            delta,
            eps,
            structure,
        }
    }

    /// `(e^{s t} C(t), e^{s t} S(t))`.
    #[inline]
    fn damped_cs(s: f64, q2: f64, t: f64) -> (f64, f64) {
        if q2 > 0.0 {
            let q = q2.sqrt();
            let qt = q * t;
            if qt < 20.0 {
                let e = (s * t).exp();
                (e * qt.cosh(), e * qt.sinh() / q)
            } else {
                let hi = ((s + q) * t).exp();
                let lo = ((s - q) * t).exp();
                (0.5 * (hi + lo), 0.5 * (hi - lo) / q)
            }
        } else if q2 < 0.0 {
            let w = (-q2).sqrt();
            let e = (s * t).exp();
            (e * (w * t).cos(), e * (w * t).sin() / w)
        } else {
            let e = (s * t).exp();
            (e, e * t)
        }
    }

    /// State after time `t >= 0`, returned as `(x, d, r)`.
    pub fn at(&self, t: f64) -> (f64, f64, f64) {
        if t == 0.0 {
            return (self.x0, self.d0, self.r0);
        }
        let ed = (-self.delta * t).exp();
        match self.structure {
            Structure::Ramp => {
                let decay = (-self.beta * t).exp();
                let x = self.x0 + self.c * t - self.eps * self.d0 * t * exprel(-self.beta * t);
                let d = self.d0 * decay;
                let r = self.r0 * ed + self.gamma * self.d0 * convolve_exp(self.delta, self.beta, t);
                (x, d, r)
            }
            Structure::Oscillator {
                s,
                q2,
                x_eq,
                d_eq,
                kappa,
                mu,
            } => {
                let zx = self.x0 - x_eq;
                let zd = self.d0 - d_eq;
                let (ec, es) = Self::damped_cs(s, q2, t);
                let hb = 0.5 * self.beta;
                let x = x_eq + ec * zx + es * (hb * zx - self.eps * zd);
                let d = d_eq + ec * zd + es * (zx - hb * zd);

                // r = r0 e^{-delta t} + gamma d_eq (1 - e^{-delta t}) / delta
                //     + gamma (zd J_C + (zx - beta zd / 2) J_S)
                let scale = self.delta * self.delta + self.eps + self.beta * self.delta;
                let (jc, js) = if kappa.abs() > DEGENERATE_TOL * scale {
                    (
                        (mu * ec - q2 * es - mu * ed) / kappa,
                        (mu * es - ec + ed) / kappa,
                    )
                } else if mu.abs() > DEGENERATE_TOL * scale.sqrt() {
                    (
                        (t * (mu * ec - q2 * es) + ec - ed) / (2.0 * mu),
                        (t * (mu * es - ec) + es) / (2.0 * mu),
                    )
                } else {
                    (t * ed, 0.5 * t * t * ed)
                };
                let relax = -(-self.delta * t).exp_m1() / self.delta;
                let r = self.r0 * ed
                    + self.gamma * d_eq * relax
                    + self.gamma * (zd * jc + (zx - hb * zd) * js);
                (x, d, r)
            }
        }
    }
}

/// Exact solution of `region`'s affine subsystem after duration `t`.
///
/// Valid only up to the first threshold crossing; the caller is responsible
/// for not extrapolating past it.
pub fn solve_affine(region: Region, s0: &PwaState, p: &PwaParams, t: f64) -> Result<PwaState> {
    solve_affine_driven(region, s0, p, t, 0.0)
}

/// [`solve_affine`] with a constant additive input on `x'`.
pub fn solve_affine_driven(
    region: Region,
    s0: &PwaState,
    p: &PwaParams,
    t: f64,
    drive: f64,
) -> Result<PwaState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidConfig(format!("duration {t} must be >= 0")));
    }
    let flow = AffineFlow::new(region, s0.x, s0.d, s0.r, p, drive);
    let (x, d, r) = flow.at(t);
    let time = s0.t + t;
    if !(x.is_finite() && d.is_finite() && r.is_finite()) {
        return Err(Error::NonFinite { time });
    }
    Ok(PwaState { x, d, r, t: time })
}
