//! Adaptive integration of the smooth models, period detection and the
//! period-versus-sequestration-rate sweep.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    rhs_full, rhs_goodwin, rhs_reduced, rhs_transformed, FullParams, FullState, GoodwinParams,
    GoodwinState, PwaParams, ReducedParams, ReducedState, XyState,
};
use crate::ode::{self, crossing_in_step, DenseStep, Direction, Flow, SolverOptions};
use crate::par::{map_indexed, Execution};
use crate::pwa::{classify_region, Face, PwaState, DEFAULT_SEGMENT_CAP};
use crate::period::PeriodEstimate;
use crate::stimulus::{Input, NoInput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed step (h).
    pub max_step: f64,
    /// Time discarded before measuring (h).
    pub t_transient: f64,
    /// Measurement window after the transient (h).
    pub t_measure: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        // 75% of the run is discarded as transient
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 0.5,
            t_transient: 1500.0,
            t_measure: 500.0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::InvalidConfig(format!("{name} = {v} outside (0, 1e-2]")));
            }
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidConfig("max_step must be > 0".into()));
        }
        if !(self.t_measure > 0.0) || !(self.t_transient >= 0.0) {
            return Err(Error::InvalidConfig(
                "t_measure must be > 0 and t_transient >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
        }
    }

    pub fn halved(&self) -> Self {
        Self {
            rel_tol: 0.5 * self.rel_tol,
            abs_tol: 0.5 * self.abs_tol,
            ..*self
        }
    }
}

/// A smooth model as a right-hand side on fixed-size arrays.
pub trait OdeModel<const N: usize>: Sync {
    fn rhs(&self, y: &[f64; N]) -> [f64; N];
    fn tag(&self) -> &'static str;
    fn columns(&self) -> [&'static str; N];
    /// Whether every component must stay nonnegative.
    fn nonnegative(&self) -> bool {
        true
    }
}

impl OdeModel<4> for FullParams {
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        rhs_full(
            &FullState {
                b: y[0],
                d: y[1],
                r: y[2],
                p: y[3],
            },
            self,
        )
    }
    fn tag(&self) -> &'static str {
        "full"
    }
    fn columns(&self) -> [&'static str; 4] {
        ["B", "D", "R", "P"]
    }
}

impl OdeModel<4> for ReducedParams {
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        rhs_reduced(&ReducedState::from_array(*y), self)
    }
    fn tag(&self) -> &'static str {
        "reduced"
    }
    fn columns(&self) -> [&'static str; 4] {
        ["b", "d", "r", "p"]
    }
}

/// The reduced model written in (x, d, r, y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transformed(pub ReducedParams);

impl OdeModel<4> for Transformed {
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        rhs_transformed(&XyState::from_array(*y), &self.0)
    }
    fn tag(&self) -> &'static str {
        "transformed"
    }
    fn columns(&self) -> [&'static str; 4] {
        ["x", "d", "r", "y"]
    }
    fn nonnegative(&self) -> bool {
        false
    }
}

impl OdeModel<3> for GoodwinParams {
    fn rhs(&self, y: &[f64; 3]) -> [f64; 3] {
        rhs_goodwin(
            &GoodwinState {
                x: y[0],
                y: y[1],
                z: y[2],
            },
            self,
        )
    }
    fn tag(&self) -> &'static str {
        "goodwin"
    }
    fn columns(&self) -> [&'static str; 3] {
        ["X", "Y", "Z"]
    }
}

/// Sampled solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeseries {
    pub model: String,
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Timeseries {
    pub fn empty(model: &str, columns: &[&str]) -> Self {
        Self {
            model: model.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples with `t >= t_last - duration`.
    pub fn tail(&self, duration: f64) -> Timeseries {
        let Some(&t_last) = self.times.last() else {
            return self.clone();
        };
        let start = self.times.partition_point(|&t| t < t_last - duration);
        Timeseries {
            model: self.model.clone(),
            columns: self.columns.clone(),
            times: self.times[start..].to_vec(),
            states: self.states[start..].to_vec(),
        }
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[idx]).collect()
    }

    /// `t,<columns>` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,{}", self.columns.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let vals: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{}", t, vals.join(","))?;
        }
        Ok(())
    }
}

fn check_initial<const N: usize, M: OdeModel<N>>(m: &M, y0: &[f64; N]) -> Result<()> {
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("initial state must be finite".into()));
    }
    if m.nonnegative() && y0.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidState(format!(
            "{} model needs a nonnegative initial state",
            m.tag()
        )));
    }
    Ok(())
}

/// Integrates with an additive piecewise-constant input on component
/// `target`, restarting the stepper at every input edge. `on_step` sees
/// every accepted step and may stop the run.
#[allow(clippy::too_many_arguments)]
pub fn run_driven<const N: usize, M, O>(
    model: &M,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &SolverOptions,
    input: &dyn Input,
    target: usize,
    mut on_step: O,
) -> Result<(f64, [f64; N])>
where
    M: OdeModel<N>,
    O: FnMut(&DenseStep<N>) -> Flow,
{
    let mut t = t0;
    let mut y = y0;
    while t < t1 {
        let (u, edge) = input.piece(t);
        let stop = edge.min(t1);
        if stop <= t {
            t = stop.max(t);
            // rounding left us on an edge; step past it
            let (_, e2) = input.piece(t + 1e-12);
            if e2 <= t {
                break;
            }
            continue;
        }
        let f = |_t: f64, y: &[f64; N]| {
            let mut d = model.rhs(y);
            if u != 0.0 {
                d[target] += u;
            }
            d
        };
        if stop - t <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            // a sliver left by rounding at an input edge
            let d = f(t, &y);
            for i in 0..N {
                y[i] += (stop - t) * d[i];
            }
            t = stop;
            continue;
        }
        let mut stopped = false;
        let (te, ye) = ode::solve(&f, t, y, stop, opts, |s| {
            let fl = on_step(s);
            if matches!(fl, Flow::StopAt(_)) {
                stopped = true;
            }
            fl
        })?;
        t = te;
        y = ye;
        if stopped {
            break;
        }
    }
    Ok((t, y))
}

/// Dense-output samples every `sample_dt` hours on `[0, t_total]`.
pub fn integrate<const N: usize, M: OdeModel<N>>(
    model: &M,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    t_total: f64,
    sample_dt: f64,
) -> Result<Timeseries> {
    cfg.validate()?;
    check_initial(model, &y0)?;
    if !(sample_dt > 0.0) {
        return Err(Error::InvalidConfig(format!("sample step {sample_dt} must be > 0")));
    }
    let mut ts = Timeseries::empty(model.tag(), &model.columns());
    if !(t_total > 0.0) {
        return Ok(ts);
    }
    ts.times.push(0.0);
    ts.states.push(y0.to_vec());
    let mut k: u64 = 1;
    run_driven(model, 0.0, y0, t_total, &cfg.solver(), &NoInput, 0, |s| {
        loop {
            let t = k as f64 * sample_dt;
            if t > s.t1 || t > t_total {
                break;
            }
            ts.times.push(t);
            ts.states.push(s.eval(t).to_vec());
            k += 1;
        }
        Flow::Continue
    })?;
    Ok(ts)
}

/// Cubic interpolation of samples around index `i`, refined by bisection.
fn refine_crossing(times: &[f64], vals: &[f64], i: usize, level: f64) -> f64 {
    // crossing lies in [times[i], times[i + 1]]
    let n = times.len();
    let lo_idx = i.saturating_sub(1).min(n.saturating_sub(4));
    let idx: Vec<usize> = (lo_idx..(lo_idx + 4).min(n)).collect();
    let interp = |t: f64| -> f64 {
        let mut acc = 0.0;
        for &a in &idx {
            let mut w = 1.0;
            for &b in &idx {
                if a != b {
                    w *= (t - times[b]) / (times[a] - times[b]);
                }
            }
            acc += w * vals[a];
        }
        acc
    };
    let (mut lo, mut hi) = (times[i], times[i + 1]);
    let up = vals[i] < vals[i + 1];
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let below = interp(mid) < level;
        if below == up {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Level-crossing times of one column of a sampled solution.
pub fn crossing_times(ts: &Timeseries, var: usize, level: f64, dir: Direction) -> Vec<f64> {
    let vals = ts.column(var);
    let mut out = Vec::new();
    for i in 0..vals.len().saturating_sub(1) {
        let (a, b) = (vals[i] - level, vals[i + 1] - level);
        let hit = match dir {
            Direction::Upward => a < 0.0 && b >= 0.0,
            Direction::Downward => a > 0.0 && b <= 0.0,
        };
        if hit {
            out.push(refine_crossing(&ts.times, &vals, i, level));
        }
    }
    out
}

/// Mean spacing between crossings of `var` through `threshold` in `ts`.
pub fn estimate_period(
    ts: &Timeseries,
    var: usize,
    threshold: f64,
    dir: Direction,
) -> Result<PeriodEstimate> {
    if var >= ts.columns.len() {
        return Err(Error::InvalidConfig(format!("no column {var}")));
    }
    PeriodEstimate::from_event_times(&crossing_times(ts, var, threshold, dir))
}

/// Summary of a limit-cycle measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMeasurement {
    pub period: Option<PeriodEstimate>,
    /// Peak-to-peak amplitude of the marker observable over the first and
    /// the last full cycle of the window.
    pub first_amplitude: f64,
    pub last_amplitude: f64,
    pub oscillatory: bool,
}

/// Tolerances used to call a run a sustained oscillation.
const SUSTAINED_AMPLITUDE_RATIO: f64 = 0.999;
const SUSTAINED_SPREAD: f64 = 1e-3;
const MIN_AMPLITUDE: f64 = 1e-6;

/// Runs `model` through the transient and records upward crossings of
/// `g(y) = level` during the measurement window.
pub fn measure_cycle<const N: usize, M, G>(
    model: &M,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    g: G,
    level: f64,
) -> Result<CycleMeasurement>
where
    M: OdeModel<N>,
    G: Fn(&[f64; N]) -> f64,
{
    cfg.validate()?;
    check_initial(model, &y0)?;
    let t_start = cfg.t_transient;
    let t_end = cfg.t_transient + cfg.t_measure;
    let mut events: Vec<f64> = Vec::new();
    // running min/max of g between consecutive events
    let mut cycle_extrema: Vec<(f64, f64)> = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    run_driven(model, 0.0, y0, t_end, &cfg.solver(), &NoInput, 0, |s| {
        if s.t1 < t_start {
            return Flow::Continue;
        }
        for k in 0..=4 {
            let t = s.t0 + (s.t1 - s.t0) * k as f64 / 4.0;
            if t >= t_start {
                let v = g(&s.eval(t));
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if let Some(tc) = crossing_in_step(s, &g, level, Direction::Upward, 1e-10) {
            if tc >= t_start {
                if !events.is_empty() {
                    cycle_extrema.push((lo, hi));
                }
                lo = f64::INFINITY;
                hi = f64::NEG_INFINITY;
                events.push(tc);
            }
        }
        Flow::Continue
    })?;
    let period = PeriodEstimate::from_event_times(&events).ok();
    let amp = |e: &(f64, f64)| e.1 - e.0;
    let first_amplitude = cycle_extrema.first().map_or(0.0, amp);
    let last_amplitude = cycle_extrema.last().map_or(0.0, amp);
    let oscillatory = match period {
        Some(p) => {
            p.relative_spread() < SUSTAINED_SPREAD
                && last_amplitude > MIN_AMPLITUDE
                && last_amplitude >= SUSTAINED_AMPLITUDE_RATIO * first_amplitude
        }
        None => false,
    };
    Ok(CycleMeasurement {
        period,
        first_amplitude,
        last_amplitude,
        oscillatory,
    })
}

/// Default initial condition `(b, d, r, p) = (1, 0, 0, 0)`.
pub const DEFAULT_REDUCED_IC: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// Cycle measurement of the reduced model with marker `b - p` crossing 0 upward.
pub fn measure_reduced(p: &ReducedParams, cfg: &IntegratorConfig) -> Result<CycleMeasurement> {
    measure_cycle(p, DEFAULT_REDUCED_IC, cfg, |y: &[f64; 4]| y[0] - y[3], 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub period: Option<f64>,
    pub period_spread: Option<f64>,
    pub oscillatory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub points: Vec<AlphaPoint>,
    /// (max - min) / mean of the oscillatory periods with alpha in the top
    /// decade of the grid; `None` when fewer than one such point exists.
    pub plateau_relative_change: Option<f64>,
}

impl AlphaSweep {
    /// `alpha,period,period_spread,oscillatory` CSV; missing values are empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "alpha,period,period_spread,oscillatory")?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{}",
                p.alpha,
                opt(p.period),
                opt(p.period_spread),
                p.oscillatory
            )?;
        }
        Ok(())
    }
}

/// Period of the reduced model for each sequestration rate in `alphas`.
pub fn period_vs_alpha(
    p: &PwaParams,
    alphas: &[f64],
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Result<AlphaSweep> {
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("empty alpha grid".into()));
    }
    if alphas.iter().any(|&a| !(a > 0.0)) || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "alpha grid must be positive and increasing".into(),
        ));
    }
    let results = map_indexed(exec, alphas.len(), |i| -> Result<AlphaPoint> {
        let rp = p.with_alpha(alphas[i])?;
        let m = measure_reduced(&rp, cfg)?;
        Ok(AlphaPoint {
            alpha: alphas[i],
            period: m.period.map(|e| e.period),
            period_spread: m.period.map(|e| e.max_deviation),
            oscillatory: m.oscillatory,
        })
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let a_max = alphas[alphas.len() - 1];
    let top: Vec<f64> = points
        .iter()
        .filter(|q| q.oscillatory && q.alpha >= a_max / 10.0)
        .filter_map(|q| q.period)
        .collect();
    let plateau_relative_change = if top.is_empty() {
        None
    } else {
        let mx = top.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = top.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = top.iter().sum::<f64>() / top.len() as f64;
        Some((mx - mn) / mean)
    };
    Ok(AlphaSweep {
        points,
        plateau_relative_change,
    })
}

/// Largest `|y - |x||` over a transformed-model run.
pub fn check_y_abs_x(ts: &Timeseries) -> f64 {
    ts.states
        .iter()
        .map(|s| (s[3] - s[0].abs()).abs())
        .fold(0.0, f64::max)
}

/// Adaptive Runge-Kutta solution of the PWA model that switches the
/// vector field at level crossings located on the dense output. Independent
/// of the closed-form engine; returns the state at each of `sample_times`.
pub fn pwa_reference(
    s0: &PwaState,
    p: &PwaParams,
    sample_times: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<[f64; 3]>> {
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.first().is_some_and(|&t| t < s0.t) {
        return Err(Error::InvalidConfig("sample times must be sorted and >= the start time".into()));
    }
    let Some(&t_end) = sample_times.last() else {
        return Ok(Vec::new());
    };
    let ds = p.d_star();
    let mut region = classify_region(s0, p)?;
    let mut t = s0.t;
    let mut y = [s0.x, s0.d, s0.r];
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(sample_times.len());
    let mut k = 0;
    while k < sample_times.len() && sample_times[k] <= t {
        out.push(y);
        k += 1;
    }
    let faces = [(Face::X, 0usize, 0.0), (Face::D, 1, ds), (Face::R, 2, 1.0)];
    let mut segments = 0usize;
    while t < t_end {
        segments += 1;
        if segments > DEFAULT_SEGMENT_CAP {
            return Err(Error::Chattering { cap: DEFAULT_SEGMENT_CAP });
        }
        let h = if region.r_high { 0.0 } else { 1.0 };
        let xh = region.x_high;
        let f = |_t: f64, v: &[f64; 3]| {
            let fb = if xh { v[0] } else { 0.0 };
            [h - p.epsilon() * v[1], fb - p.beta() * v[1], p.gamma() * v[1] - p.delta() * v[2]]
        };
        let mut hit: Option<(Face, f64)> = None;
        let (te, ye) = ode::solve(&f, t, y, t_end, opts, |st| {
            let mut best: Option<(Face, f64)> = None;
            for &(face, i, level) in &faces {
                let dir = if region.is_high(face) { Direction::Downward } else { Direction::Upward };
                let g = |v: &[f64; 3]| v[i];
                if let Some(tc) = crossing_in_step(st, &g, level, dir, 1e-13) {
                    if best.is_none_or(|b| tc < b.1) {
                        best = Some((face, tc));
                    }
                }
            }
            let stop = best.map_or(st.t1, |b| b.1);
            while k < sample_times.len() && sample_times[k] <= stop {
                out.push(st.eval(sample_times[k]));
                k += 1;
            }
            match best {
                Some(b) => {
                    hit = Some(b);
                    Flow::StopAt(b.1)
                }
                None => Flow::Continue,
            }
        })?;
        t = te;
        y = ye;
        if let Some((face, _)) = hit {
            let (_, i, level) = faces.iter().find(|f| f.0 == face).copied().unwrap_or((face, 0, 0.0));
            y[i] = level;
            region = region.with(face, !region.is_high(face));
        }
    }
    while k < sample_times.len() {
        out.push(y);
        k += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;

    #[test]
    fn config_validation() {
        let mut c = IntegratorConfig::default();
        assert!(c.validate().is_ok());
        c.rel_tol = 0.1;
        assert!(c.validate().is_err());
        let c = IntegratorConfig {
            t_measure: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn sine_period_from_samples() {
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.1).collect();
        let states = times
            .iter()
            .map(|t| vec![(2.0 * std::f64::consts::PI * t / 24.0).sin()])
            .collect();
        let ts = Timeseries {
            model: "probe".into(),
            columns: vec!["s".into()],
            times,
            states,
        };
        let e = estimate_period(&ts, 0, 0.0, Direction::Upward).unwrap();
        assert!((e.period - 24.0).abs() < 1e-4, "{e:?}");
        assert!(estimate_period(&ts.tail(30.0), 0, 0.0, Direction::Upward).is_err());
    }

    #[test]
    fn b_zero_gives_zero_residual() {
        let ts = Timeseries {
            model: "transformed".into(),
            columns: vec!["x".into(), "d".into(), "r".into(), "y".into()],
            times: vec![0.0, 1.0],
            // b = 0: x = -p, y = p
            states: vec![vec![-0.3, 0.1, 0.2, 0.3], vec![-1.2, 0.1, 0.2, 1.2]],
        };
        assert_eq!(check_y_abs_x(&ts), 0.0);
    }

    #[test]
    fn empty_run_has_header_only() {
        let ts = integrate(
            &presets::goodwin(),
            [0.1, 0.1, 0.1],
            &IntegratorConfig::default(),
            0.0,
            0.1,
        )
        .unwrap();
        assert!(ts.is_empty());
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,X,Y,Z\n");
    }

    #[test]
    fn negative_initial_state_rejected() {
        let r = integrate(
            &presets::standard(),
            [-1.0, 0.0, 0.0, 0.0],
            &IntegratorConfig::default(),
            1.0,
            0.1,
        );
        assert!(r.is_err());
    }

    #[test]
    fn alpha_grid_must_increase() {
        let p = presets::standard_pwa();
        let c = IntegratorConfig::default();
        assert!(period_vs_alpha(&p, &[], &c, Execution::Sequential).is_err());
        assert!(period_vs_alpha(&p, &[2.0, 1.0], &c, Execution::Sequential).is_err());
    }
}
