//! Sufficient conditions for the six-region cycle of the PWA model, a seeded
//! sampler over parameter space and simulation checks of the bounds.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::PwaParams;
use crate::par::{map_indexed, Execution};
use crate::pwa::{
    advance_in, advance_to_event, convolve_exp, AffineFlow, AffineSegment, Face, PwaState,
    Region, CYCLE,
};

/// Relative distance of `epsilon` from `beta^2` below which the limit
/// formulas for `F` and `t1` are used.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Why a quantity or certificate could not be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Assumption1,
    Assumption2,
    TrPrecondition,
    GNonPositive,
    Theorem1,
    CurveStartsBelowDiagonal,
    LogArgument,
    NonFinite,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Cause::Assumption1 => "assumption 1 fails: gamma <= epsilon*delta, so H = 1 - epsilon*d_star <= 0",
            Cause::Assumption2 => "assumption 2 fails: x_upper <= x_lower",
            Cause::TrPrecondition => "x_lower <= beta/epsilon, T_r is not defined",
            Cause::GNonPositive => "G = x_upper - beta*d_star <= 0",
            Cause::Theorem1 => "theorem 1 fails: T_r >= T_d",
            Cause::CurveStartsBelowDiagonal => {
                "x_lower <= beta*d_star: bounding curve starts outside x > beta*d"
            }
            Cause::LogArgument => "non-positive logarithm argument for t1",
            Cause::NonFinite => "non-finite intermediate value",
        };
        f.write_str(s)
    }
}

/// A number that is only meaningful when its preconditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Defined(f64),
    Undefined(Cause),
}

impl Quantity {
    fn checked(v: f64) -> Self {
        if v.is_finite() {
            Quantity::Defined(v)
        } else {
            Quantity::Undefined(Cause::NonFinite)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Quantity::Defined(v) => Some(*v),
            Quantity::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Quantity::Defined(_))
    }

    pub fn cause(&self) -> Option<Cause> {
        match self {
            Quantity::Defined(_) => None,
            Quantity::Undefined(c) => Some(*c),
        }
    }
}

/// Outcome of one certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Undefined(Cause),
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub d_star: f64,
    /// `1 - epsilon d*`.
    pub h: f64,
    pub x_lower: Quantity,
    pub x_upper: Quantity,
    /// `x_upper - beta d*`.
    pub g: Quantity,
    pub f: Quantity,
    pub t_r: Quantity,
    pub t_d: Quantity,
    pub t1: Quantity,
    pub x_m_t1: Quantity,
    pub t2: Quantity,
    pub jordan_lhs: Quantity,
}

impl DerivedQuantities {
    /// `f` is left out: it diverges at `epsilon = beta^2`, where the
    /// quantities built from it have finite limits.
    fn all_defined(&self) -> bool {
        [
            self.x_lower,
            self.x_upper,
            self.g,
            self.t_r,
            self.t_d,
            self.t1,
            self.x_m_t1,
            self.t2,
            self.jordan_lhs,
        ]
        .iter()
        .all(Quantity::is_defined)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub assumption1: Verdict,
    pub assumption2: Verdict,
    pub tr_defined: bool,
    pub theorem1: Verdict,
    pub jordan: Verdict,
    pub all_pass: bool,
    pub quantities: DerivedQuantities,
}

impl ConditionReport {
    /// First certificate that did not pass, with its explanation.
    pub fn first_failure(&self) -> Option<(&'static str, String)> {
        let chain = [
            ("assumption1", self.assumption1, Cause::Assumption1),
            ("assumption2", self.assumption2, Cause::Assumption2),
            ("theorem1", self.theorem1, Cause::Theorem1),
            ("jordan", self.jordan, Cause::Theorem1),
        ];
        for (name, v, fail_cause) in chain {
            match v {
                Verdict::Pass => continue,
                Verdict::Fail if name == "jordan" => {
                    return Some((name, "jordan curve condition fails: jordan_lhs <= d_star".into()))
                }
                Verdict::Fail => return Some((name, fail_cause.to_string())),
                Verdict::Undefined(c) => return Some((name, c.to_string())),
            }
        }
        None
    }

    /// One-paragraph plain-text summary.
    pub fn summary(&self) -> String {
        match self.first_failure() {
            None => "all sufficient conditions hold: trajectories follow the cycle \
                     RxD -> Rxd -> rxd -> rXd -> rXD -> RXD and a periodic orbit exists"
                .to_string(),
            Some((name, why)) => format!(
                "sufficient conditions not certified ({name}: {why}). The conditions are \
                 sufficient, not necessary: this says nothing about whether the system oscillates"
            ),
        }
    }
}

pub fn check_assumption1(p: &PwaParams) -> bool {
    p.gamma() > p.epsilon() * p.delta()
}

/// `(x_lower, x_upper)`, the bounds on `x` at the rXd -> rXD transition.
pub fn compute_bounds(p: &PwaParams) -> (Quantity, Quantity) {
    let ds = p.d_star();
    let h = 1.0 - p.epsilon() * ds;
    if !(h > 0.0) {
        return (
            Quantity::Undefined(Cause::Assumption1),
            Quantity::Undefined(Cause::Assumption1),
        );
    }
    let b = p.beta();
    let lower = h * ds.sqrt();
    let upper = ((b * b * ds * ds + 2.0 * h * ds).sqrt() - b * ds) / h;
    (Quantity::checked(lower), Quantity::checked(upper))
}

/// Positive root of `H u^2 - 2 beta d* u - 2 d* = 0` with the `+ beta d*` sign.
///
/// Bounds the entry value of `x` into rXD from above. [`compute_bounds`]
/// keeps the other sign, which can fall below observed entries.
pub fn x_upper_rederived(p: &PwaParams) -> Quantity {
    let ds = p.d_star();
    let h = 1.0 - p.epsilon() * ds;
    if !(h > 0.0) {
        return Quantity::Undefined(Cause::Assumption1);
    }
    let b = p.beta();
    Quantity::checked(((b * b * ds * ds + 2.0 * h * ds).sqrt() + b * ds) / h)
}

pub fn check_assumption2(x_lower: Quantity, x_upper: Quantity) -> Verdict {
    match (x_lower, x_upper) {
        (Quantity::Defined(lo), Quantity::Defined(hi)) => Verdict::from_bool(hi > lo),
        (Quantity::Undefined(c), _) | (_, Quantity::Undefined(c)) => Verdict::Undefined(c),
    }
}

/// Upper bound on the time `r` needs to reach 1 inside rXD.
pub fn compute_tr(p: &PwaParams, x_lower: Quantity) -> Quantity {
    let Some(xl) = x_lower.value() else {
        return x_lower;
    };
    let margin = xl - p.beta() / p.epsilon();
    if !(margin > 0.0) {
        return Quantity::Undefined(Cause::TrPrecondition);
    }
    Quantity::checked((2.0 / (p.gamma() * margin)).sqrt())
}

/// Lower bound on the time `d` needs to reach `1/epsilon` inside rXD.
pub fn compute_td(p: &PwaParams, x_upper: Quantity) -> Quantity {
    let Some(xu) = x_upper.value() else {
        return x_upper;
    };
    let ds = p.d_star();
    let h = 1.0 - p.epsilon() * ds;
    if !(h > 0.0) {
        return Quantity::Undefined(Cause::Assumption1);
    }
    let g = xu - p.beta() * ds;
    if !(g > 0.0) {
        return Quantity::Undefined(Cause::GNonPositive);
    }
    Quantity::checked(((g * g + 2.0 * h * h / p.epsilon()).sqrt() - g) / h)
}

pub fn check_theorem1(t_r: Quantity, t_d: Quantity) -> Verdict {
    match (t_r, t_d) {
        (Quantity::Defined(a), Quantity::Defined(b)) => Verdict::from_bool(a < b),
        (Quantity::Undefined(c), _) | (_, Quantity::Undefined(c)) => Verdict::Undefined(c),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JordanEvaluation {
    pub f: Quantity,
    pub t1: Quantity,
    pub x_m_t1: Quantity,
    pub t2: Quantity,
    pub jordan_lhs: Quantity,
    pub verdict: Verdict,
}

fn near_resonant(p: &PwaParams) -> bool {
    let b2 = p.beta() * p.beta();
    (p.epsilon() - b2).abs() <= RESONANCE_TOL * p.epsilon()
}

/// Terminal condition of the bounding curve in RXD.
pub fn compute_jordan(p: &PwaParams, x_lower: Quantity) -> JordanEvaluation {
    let undefined = |c: Cause| JordanEvaluation {
        f: Quantity::Undefined(c),
        t1: Quantity::Undefined(c),
        x_m_t1: Quantity::Undefined(c),
        t2: Quantity::Undefined(c),
        jordan_lhs: Quantity::Undefined(c),
        verdict: Verdict::Undefined(c),
    };
    let Some(xl) = x_lower.value() else {
        return undefined(x_lower.cause().unwrap_or(Cause::NonFinite));
    };
    let (b, e, ds) = (p.beta(), p.epsilon(), p.d_star());
    if !(xl > b * ds) {
        return undefined(Cause::CurveStartsBelowDiagonal);
    }
    let (f, t1) = if near_resonant(p) {
        // F diverges; t1 has the finite limit 1/beta - d*/x_lower
        (Quantity::Undefined(Cause::NonFinite), 1.0 / b - ds / xl)
    } else {
        let f = b * xl / (e - b * b);
        let arg = (ds + f) / (xl / b + f);
        if !(arg > 0.0) {
            let mut out = undefined(Cause::LogArgument);
            out.f = Quantity::checked(f);
            return out;
        }
        (Quantity::checked(f), arg.ln() / (b - e / b))
    };
    if !t1.is_finite() {
        let mut out = undefined(Cause::NonFinite);
        out.f = f;
        return out;
    }
    let x_m = xl * (-(e / b) * t1).exp();
    let t2 = x_m / (e * ds);
    let lhs = x_m * (1.0 / b - x_m / (2.0 * e * ds));
    let lhs_q = Quantity::checked(lhs);
    JordanEvaluation {
        f,
        t1: Quantity::checked(t1),
        x_m_t1: Quantity::checked(x_m),
        t2: Quantity::checked(t2),
        jordan_lhs: lhs_q,
        verdict: match lhs_q {
            Quantity::Defined(v) => Verdict::from_bool(v > ds),
            Quantity::Undefined(c) => Verdict::Undefined(c),
        },
    }
}

/// `x_m(t1)` through the exponent-of-logarithm closed form. Undefined at
/// `epsilon = beta^2`.
pub fn x_m_t1_closed_form(p: &PwaParams, x_lower: f64) -> Option<f64> {
    let (b, e, ds) = (p.beta(), p.epsilon(), p.d_star());
    if near_resonant(p) {
        return None;
    }
    let f = b * x_lower / (e - b * b);
    let arg = b * (ds + f) / (x_lower + b * f);
    if !(arg > 0.0) {
        return None;
    }
    Some(x_lower * (-(e / (b * b - e)) * arg.ln()).exp())
}

/// The two-piece comparison curve in the (x, d) plane used for the RXD exit.
///
/// First piece from `(x_lower, d*)`: `x' = -(eps/beta) x`, `d' = x - beta d`
/// until `x = beta d` at `t1`. Second piece: `x' = -eps d*`, `d' = x - beta d`,
/// with time restarted at 0, until `x = 0` at `t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingCurve {
    pub beta: f64,
    pub epsilon: f64,
    pub d_star: f64,
    pub x_lower: f64,
    pub t1: f64,
    pub x_m_t1: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl BoundingCurve {
    pub fn new(p: &PwaParams) -> Result<Self> {
        let (xl, _) = compute_bounds(p);
        let j = compute_jordan(p, xl);
        let (Some(xl), Some(t1), Some(x_m)) = (xl.value(), j.t1.value(), j.x_m_t1.value()) else {
            return Err(Error::InvalidConfig("bounding curve undefined for these parameters".into()));
        };
        let (b, e, ds) = (p.beta(), p.epsilon(), p.d_star());
        Ok(Self {
            beta: b,
            epsilon: e,
            d_star: ds,
            x_lower: xl,
            t1,
            x_m_t1: x_m,
            b0: x_m / b + e * ds / (b * b),
            b1: -e * ds / b,
            b2: -e * ds / (b * b),
        })
    }

    pub fn x_m(&self, t: f64) -> f64 {
        self.x_lower * (-(self.epsilon / self.beta) * t).exp()
    }

    pub fn d_m(&self, t: f64) -> f64 {
        self.d_star * (-self.beta * t).exp()
            + self.x_lower * convolve_exp(self.beta, self.epsilon / self.beta, t)
    }

    pub fn x_p(&self, t: f64) -> f64 {
        self.x_m_t1 - self.epsilon * self.d_star * t
    }

    pub fn d_p(&self, t: f64) -> f64 {
        self.b0 + self.b1 * t + self.b2 * (-self.beta * t).exp()
    }

    pub fn t2(&self) -> f64 {
        self.x_m_t1 / (self.epsilon * self.d_star)
    }
}

/// Evaluates the whole certificate chain.
pub fn check_all(p: &PwaParams) -> ConditionReport {
    let d_star = p.d_star();
    let h = 1.0 - p.epsilon() * d_star;
    let a1 = Verdict::from_bool(check_assumption1(p));
    let (x_lower, x_upper) = compute_bounds(p);
    let a2 = match a1 {
        Verdict::Pass => check_assumption2(x_lower, x_upper),
        _ => Verdict::Undefined(Cause::Assumption1),
    };
    let t_r = compute_tr(p, x_lower);
    let t_d = compute_td(p, x_upper);
    let g = match x_upper.value() {
        Some(xu) => Quantity::checked(xu - p.beta() * d_star),
        None => x_upper,
    };
    let theorem1 = match a2 {
        Verdict::Pass => check_theorem1(t_r, t_d),
        Verdict::Fail => Verdict::Undefined(Cause::Assumption2),
        Verdict::Undefined(c) => Verdict::Undefined(c),
    };
    let j = compute_jordan(p, x_lower);
    let jordan = match theorem1 {
        Verdict::Pass => j.verdict,
        Verdict::Fail => Verdict::Undefined(Cause::Theorem1),
        Verdict::Undefined(c) => Verdict::Undefined(c),
    };
    let quantities = DerivedQuantities {
        d_star,
        h,
        x_lower,
        x_upper,
        g,
        f: j.f,
        t_r,
        t_d,
        t1: j.t1,
        x_m_t1: j.x_m_t1,
        t2: j.t2,
        jordan_lhs: j.jordan_lhs,
    };
    let all_pass = a1.passed()
        && a2.passed()
        && theorem1.passed()
        && jordan.passed()
        && quantities.all_defined();
    ConditionReport {
        assumption1: a1,
        assumption2: a2,
        tr_defined: t_r.is_defined(),
        theorem1,
        jordan,
        all_pass,
        quantities,
    }
}

// ---------------------------------------------------------------------------
// parameter scan

/// Sampling interval per parameter, `(low, high)`, both positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRanges {
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    pub delta: (f64, f64),
    pub epsilon: (f64, f64),
}

impl Default for ScanRanges {
    fn default() -> Self {
        Self {
            beta: (1e-2, 1e1),
            gamma: (1e-2, 1e1),
            delta: (1e-2, 1e1),
            epsilon: (1e-2, 1e1),
        }
    }
}

impl ScanRanges {
    fn named(&self) -> [(&'static str, (f64, f64)); 4] {
        [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in self.named() {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "range for {name} must satisfy 0 < low <= high, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Counts of feasible values on log-spaced bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub parameter: String,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(parameter: &str, (lo, hi): (f64, f64), bins: usize) -> Self {
        let (a, b) = (lo.ln(), hi.ln());
        let edges = (0..=bins)
            .map(|i| (a + (b - a) * i as f64 / bins as f64).exp())
            .collect();
        Self {
            parameter: parameter.to_string(),
            edges,
            counts: vec![0; bins],
        }
    }

    fn add(&mut self, v: f64) {
        let n = self.counts.len();
        let (a, b) = (self.edges[0].ln(), self.edges[n].ln());
        let i = if b > a {
            (((v.ln() - a) / (b - a)) * n as f64).floor() as isize
        } else {
            0
        };
        self.counts[i.clamp(0, n as isize - 1) as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub params: PwaParams,
    pub report: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub ranges: ScanRanges,
    pub seed: u64,
    pub samples: Vec<ScanSample>,
    pub feasible_count: usize,
    pub histograms: Vec<Histogram>,
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 30;

fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi == lo {
        return lo;
    }
    let u: f64 = rng.gen();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(lo, hi)
}

/// Seeded log-uniform draws of `(beta, gamma, delta, epsilon)`.
pub fn sample_parameters(ranges: &ScanRanges, n: usize, seed: u64) -> Result<Vec<PwaParams>> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let b = log_uniform(&mut rng, ranges.beta);
            let g = log_uniform(&mut rng, ranges.gamma);
            let d = log_uniform(&mut rng, ranges.delta);
            let e = log_uniform(&mut rng, ranges.epsilon);
            PwaParams::new(b, g, d, e)
        })
        .collect()
}

pub fn scan_parameters(
    ranges: &ScanRanges,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<ScanResult> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
    }
    let params = sample_parameters(ranges, n_samples, seed)?;
    let reports = map_indexed(exec, params.len(), |i| check_all(&params[i]));
    let mut histograms: Vec<Histogram> = ranges
        .named()
        .iter()
        .map(|(name, r)| Histogram::new(name, *r, DEFAULT_HISTOGRAM_BINS))
        .collect();
    let mut feasible_count = 0;
    let samples: Vec<ScanSample> = params
        .into_iter()
        .zip(reports)
        .map(|(params, report)| {
            if report.all_pass {
                feasible_count += 1;
                let vals = [params.beta(), params.gamma(), params.delta(), params.epsilon()];
                for (h, v) in histograms.iter_mut().zip(vals) {
                    h.add(v);
                }
            }
            ScanSample { params, report }
        })
        .collect();
    Ok(ScanResult {
        ranges: *ranges,
        seed,
        samples,
        feasible_count,
        histograms,
    })
}

impl ScanResult {
    pub fn feasible(&self) -> impl Iterator<Item = &ScanSample> {
        self.samples.iter().filter(|s| s.report.all_pass)
    }

    /// One row per sample; undefined quantities are empty fields.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "beta,gamma,delta,epsilon,assumption1,assumption2,theorem1,jordan,all_pass,\
             d_star,x_lower,x_upper,T_r,T_d,jordan_lhs"
        )?;
        let q = |v: Quantity| v.value().map_or(String::new(), |x| x.to_string());
        for s in &self.samples {
            let (p, r) = (&s.params, &s.report);
            let qs = &r.quantities;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.beta(),
                p.gamma(),
                p.delta(),
                p.epsilon(),
                r.assumption1.passed(),
                r.assumption2.passed(),
                r.theorem1.passed(),
                r.jordan.passed(),
                r.all_pass,
                qs.d_star,
                q(qs.x_lower),
                q(qs.x_upper),
                q(qs.t_r),
                q(qs.t_d),
                q(qs.jordan_lhs),
            )?;
        }
        Ok(())
    }

    pub fn histograms_json(&self) -> serde_json::Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            feasible_count: usize,
            n_samples: usize,
            histograms: &'a [Histogram],
        }
        serde_json::to_string_pretty(&Out {
            feasible_count: self.feasible_count,
            n_samples: self.samples.len(),
            histograms: &self.histograms,
        })
    }
}

// ---------------------------------------------------------------------------
// simulation checks

/// Longest single segment searched before giving up on a crossing (h).
pub const SEGMENT_SEARCH_LIMIT: f64 = 1e4;

/// Chains `n` threshold crossings starting from `s0`.
pub fn follow_transitions(s0: &PwaState, p: &PwaParams, n: usize) -> Result<Vec<AffineSegment>> {
    let mut out: Vec<AffineSegment> = Vec::with_capacity(n);
    let mut seg = advance_to_event(s0, p, SEGMENT_SEARCH_LIMIT)?;
    for _ in 0..n {
        if seg.exit_face.is_none() {
            return Err(Error::NotPeriodic(format!(
                "no threshold crossing within {SEGMENT_SEARCH_LIMIT} h of t = {}",
                seg.t_start
            )));
        }
        let next = seg.next_region();
        let s = seg.exit_state;
        out.push(seg);
        if out.len() == n {
            break;
        }
        seg = advance_in(next, &s, p, SEGMENT_SEARCH_LIMIT)?;
    }
    Ok(out)
}

fn successor(r: Region) -> Option<Region> {
    CYCLE.iter().position(|&c| c == r).map(|i| CYCLE[(i + 1) % CYCLE.len()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCheck {
    /// Segments before the cyclic pattern takes over, `None` if it never does
    /// within the allowed transient.
    pub transient_segments: Option<usize>,
    pub regions: Vec<Region>,
    /// States where the run enters RxD after the transient.
    pub section_states: Vec<PwaState>,
    /// All section states lie in the box `x = 0`, `d* <= d <= d_max`, `1 <= r <= r_max`.
    pub bounded: bool,
}

impl CycleCheck {
    pub fn passed(&self) -> bool {
        self.transient_segments.is_some() && self.bounded && !self.section_states.is_empty()
    }
}

/// Runs `cycles` full cycles after at most `max_transient_cycles` and checks
/// the region order and the returns to the RxD entry section.
pub fn check_cycle(
    s0: &PwaState,
    p: &PwaParams,
    cycles: usize,
    max_transient_cycles: usize,
) -> Result<CycleCheck> {
    let n_cyc = CYCLE.len();
    let n = (cycles + max_transient_cycles) * n_cyc + 1;
    let segs = follow_transitions(s0, p, n)?;
    let regions: Vec<Region> = segs.iter().map(|s| s.region).collect();
    let max_start = max_transient_cycles * n_cyc;
    let transient_segments = (0..=max_start.min(regions.len().saturating_sub(1))).find(|&i| {
        regions.len() - i > cycles * n_cyc
            && regions[i..]
                .windows(2)
                .all(|w| successor(w[0]) == Some(w[1]))
    });
    let section_states: Vec<PwaState> = match transient_segments {
        Some(i) => segs[i..]
            .iter()
            .filter(|s| s.region == CYCLE[0] && s.entry_state.x == 0.0)
            .map(|s| s.entry_state)
            .collect(),
        None => Vec::new(),
    };
    let ds = p.d_star();
    let d_max = (10.0 / p.epsilon()).max(s0.d).max(1.0 / p.epsilon());
    let r_max = 10f64.max(s0.r).max(p.gamma() * d_max / p.delta());
    let bounded = section_states.iter().all(|s| {
        s.x == 0.0 && s.d >= ds && s.d <= d_max && s.r >= 1.0 && s.r <= r_max
    });
    Ok(CycleCheck {
        transient_segments,
        regions,
        section_states,
        bounded,
    })
}

/// Random state strictly inside RxD with `x >= -10`, `d <= 10/eps`, `r <= 10`.
pub fn random_rxd_state<R: Rng>(p: &PwaParams, rng: &mut R) -> PwaState {
    let ds = p.d_star();
    let d_hi = 10.0 / p.epsilon();
    loop {
        let x = -10.0 * rng.gen::<f64>();
        let d = ds + (d_hi - ds) * rng.gen::<f64>();
        let r = 1.0 + 9.0 * rng.gen::<f64>();
        if x < 0.0 && d > ds && r > 1.0 {
            return PwaState { x, d, r, t: 0.0 };
        }
    }
}

/// What happened after entering rXd from rxd at `(x = 0, d0, r0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryObservation {
    pub d0: f64,
    pub r0: f64,
    /// Face through which rXd was left (D expected).
    pub rxd_exit: Option<Face>,
    /// `x` on leaving rXd.
    pub x_transition: f64,
    /// Face through which rXD was left (R expected).
    pub rxd_upper_exit: Option<Face>,
    /// Time from rXD entry until `r = 1`, if that was the exit.
    pub tau_r: Option<f64>,
    /// Time from rXD entry until `d = 1/eps` under the rXD flow.
    pub tau_d: Option<f64>,
}

/// First time `d` reaches `level` along `flow`, searched up to `t_max`.
fn first_d_crossing(flow: &AffineFlow, level: f64, step: f64, t_max: f64) -> Option<f64> {
    let mut prev = 0.0;
    while prev < t_max {
        let t = prev + step;
        if flow.at(t).1 >= level {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if flow.at(mid).1 >= level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = t;
    }
    None
}

/// Follows one admissible entry into rXd through rXD.
pub fn observe_entry(p: &PwaParams, d0: f64, r0: f64) -> Result<EntryObservation> {
    let rxd_upper = Region::new(false, true, false);
    let rxd_top = Region::new(false, true, true);
    let s0 = PwaState::new(0.0, d0, r0, 0.0)?;
    let seg = advance_in(rxd_upper, &s0, p, SEGMENT_SEARCH_LIMIT)?;
    let mut obs = EntryObservation {
        d0,
        r0,
        rxd_exit: seg.exit_face,
        x_transition: seg.exit_state.x,
        rxd_upper_exit: None,
        tau_r: None,
        tau_d: None,
    };
    if seg.exit_face != Some(Face::D) {
        return Ok(obs);
    }
    let s1 = PwaState {
        t: 0.0,
        ..seg.exit_state
    };
    let seg2 = advance_in(rxd_top, &s1, p, SEGMENT_SEARCH_LIMIT)?;
    obs.rxd_upper_exit = seg2.exit_face;
    if seg2.exit_face == Some(Face::R) {
        obs.tau_r = Some(seg2.t_end - seg2.t_start);
    }
    let flow = AffineFlow::new(rxd_top, s1.x, s1.d, s1.r, p, 0.0);
    let step = 0.01 / (1.0 + p.epsilon().sqrt() + p.beta());
    obs.tau_d = first_d_crossing(&flow, 1.0 / p.epsilon(), step, SEGMENT_SEARCH_LIMIT);
    Ok(obs)
}

/// Random admissible entry `(d0, r0)` with `d0` in `[0, d*/2]`, `r0` in `[0, 1)`.
pub fn random_entry<R: Rng>(p: &PwaParams, rng: &mut R) -> (f64, f64) {
    (0.5 * p.d_star() * rng.gen::<f64>(), rng.gen::<f64>())
}

/// Exit of RXD started at `(x0, d*, r0)`.
pub fn rxd_top_exit(p: &PwaParams, x0: f64, r0: f64) -> Result<AffineSegment> {
    let s0 = PwaState::new(x0, p.d_star(), r0, 0.0)?;
    advance_in(Region::new(true, true, true), &s0, p, SEGMENT_SEARCH_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;
    use approx::assert_relative_eq;

    // beta = 0.156, epsilon = 2.698, d* = 0.25
    fn sample() -> PwaParams {
        PwaParams::new(0.156, 0.2, 0.05, 2.698).unwrap()
    }

    #[test]
    fn assumption1_examples() {
        assert!(check_assumption1(&PwaParams::new(0.1, 1.0, 0.2, 1.0).unwrap()));
        assert!(!check_assumption1(&presets::standard_pwa()));
        assert!(!check_assumption1(&PwaParams::new(0.1, 0.5, 0.25, 2.0).unwrap()));
    }

    #[test]
    fn bounds_on_sample() {
        let (lo, hi) = compute_bounds(&sample());
        assert_relative_eq!(lo.value().unwrap(), 0.16275, max_relative = 1e-12);
        assert_relative_eq!(hi.value().unwrap(), 1.125356651052178, max_relative = 1e-12);
        assert!(check_assumption2(lo, hi).passed());
        assert_eq!(check_assumption2(Quantity::Defined(1.0), Quantity::Defined(1.0)), Verdict::Fail);
    }

    #[test]
    fn bounds_at_small_beta() {
        let p = PwaParams::new(1e-12, 0.2, 0.05, 2.698).unwrap();
        let (_, hi) = compute_bounds(&p);
        let h: f64 = 1.0 - 2.698 * 0.25;
        assert_relative_eq!(hi.value().unwrap(), (2.0 * 0.25 / h).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn undefined_bounds_propagate() {
        let p = presets::standard_pwa();
        let (lo, hi) = compute_bounds(&p);
        assert_eq!(lo, Quantity::Undefined(Cause::Assumption1));
        assert_eq!(check_assumption2(lo, hi), Verdict::Undefined(Cause::Assumption1));
        assert_eq!(compute_tr(&p, lo), Quantity::Undefined(Cause::Assumption1));
    }

    #[test]
    fn tr_and_td_on_sample() {
        let p = sample();
        let (lo, hi) = compute_bounds(&p);
        assert_relative_eq!(compute_tr(&p, lo).value().unwrap(), 9.762283633543696, max_relative = 1e-12);
        assert_relative_eq!(compute_td(&p, hi).value().unwrap(), 0.10926599511388817, max_relative = 1e-12);
        let at = Quantity::Defined(0.156 / 2.698);
        assert_eq!(compute_tr(&p, at), Quantity::Undefined(Cause::TrPrecondition));
    }

    #[test]
    fn td_vanishes_for_large_epsilon() {
        // G, H held fixed, only the 2H^2/eps term changes
        let (g, h) = (1.0863_f64, 0.3255_f64);
        let td = |e: f64| ((g * g + 2.0 * h * h / e).sqrt() - g) / h;
        assert!(td(1e12) < 1e-9);
        assert!(td(1e3) < td(1.0));
    }

    #[test]
    fn theorem1_comparisons() {
        let v = check_theorem1(Quantity::Defined(9.758), Quantity::Defined(0.1103));
        assert_eq!(v, Verdict::Fail);
        let v = check_theorem1(Quantity::Defined(0.1), Quantity::Defined(0.2));
        assert_eq!(v, Verdict::Pass);
        let v = check_theorem1(Quantity::Undefined(Cause::TrPrecondition), Quantity::Defined(0.2));
        assert_eq!(v, Verdict::Undefined(Cause::TrPrecondition));
    }

    #[test]
    fn jordan_on_sample() {
        let p = sample();
        let (lo, _) = compute_bounds(&p);
        let j = compute_jordan(&p, lo);
        assert_relative_eq!(j.f.value().unwrap(), 0.009495957607238606, max_relative = 1e-12);
        assert_relative_eq!(j.t1.value().unwrap(), 0.0817110009439703, max_relative = 1e-10);
        assert_relative_eq!(j.x_m_t1.value().unwrap(), 0.03960811397111227, max_relative = 1e-10);
        assert_relative_eq!(j.t2.value().unwrap(), 0.05872218527963271, max_relative = 1e-10);
        assert_relative_eq!(j.jordan_lhs.value().unwrap(), 0.2527352289778946, max_relative = 1e-10);
        assert_eq!(j.verdict, Verdict::Pass);
        let printed = x_m_t1_closed_form(&p, lo.value().unwrap()).unwrap();
        assert_relative_eq!(printed, j.x_m_t1.value().unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn jordan_resonant_limit_is_continuous() {
        // epsilon = beta^2 exactly and slightly off
        let b = 0.5;
        let at = PwaParams::new(b, 2.0, 0.1, b * b).unwrap();
        let off = PwaParams::new(b, 2.0, 0.1, b * b * (1.0 + 1e-6)).unwrap();
        let (lo_a, _) = compute_bounds(&at);
        let (lo_o, _) = compute_bounds(&off);
        let ja = compute_jordan(&at, lo_a);
        let jo = compute_jordan(&off, lo_o);
        assert_relative_eq!(ja.t1.value().unwrap(), jo.t1.value().unwrap(), max_relative = 1e-5);
        assert_relative_eq!(ja.x_m_t1.value().unwrap(), jo.x_m_t1.value().unwrap(), max_relative = 1e-5);
    }

    #[test]
    fn bounding_curve_pieces_meet_the_closed_forms() {
        let c = BoundingCurve::new(&sample()).unwrap();
        assert_relative_eq!(c.x_m(c.t1), c.beta * c.d_m(c.t1), max_relative = 1e-10);
        assert_relative_eq!(c.d_p(0.0), c.x_m_t1 / c.beta, max_relative = 1e-12);
        assert!(c.x_p(c.t2()).abs() < 1e-15);
    }

    #[test]
    fn standard_params_fail_at_assumption1() {
        let r = check_all(&presets::standard_pwa());
        assert!(!r.all_pass);
        assert_eq!(r.assumption1, Verdict::Fail);
        assert_eq!(r.theorem1, Verdict::Undefined(Cause::Assumption1));
        let (name, why) = r.first_failure().unwrap();
        assert_eq!(name, "assumption1");
        assert!(why.contains("gamma <= epsilon*delta"));
        assert!(r.summary().contains("sufficient, not necessary"));
    }

    #[test]
    fn report_json_round_trip() {
        for p in [sample(), presets::standard_pwa(), PwaParams::new(0.5, 2.0, 0.1, 0.25).unwrap()] {
            let r = check_all(&p);
            let s = serde_json::to_string(&r).unwrap();
            let back: ConditionReport = serde_json::from_str(&s).unwrap();
            assert_eq!(back, r);
        }
    }

    #[test]
    fn scan_is_deterministic() {
        let r = ScanRanges::default();
        let a = scan_parameters(&r, 2000, 7, Execution::Parallel).unwrap();
        let b = scan_parameters(&r, 2000, 7, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.feasible_count, a.feasible().count());
        for h in &a.histograms {
            assert_eq!(h.total() as usize, a.feasible_count);
        }
        assert!(scan_parameters(&r, 0, 7, Execution::Sequential).is_err());
    }
}
