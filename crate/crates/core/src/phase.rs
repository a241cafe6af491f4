//! Phase response curves by direct pulsed simulation, the Kuramoto order
//! parameter and Arnold tongues for the PWA and Goodwin oscillators.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{GoodwinParams, PwaParams};
use crate::ode::{crossing_in_step, Direction, Flow, SolverOptions};
use crate::par::{map_indexed, Execution};
use crate::period::PeriodEstimate;
use crate::pwa::{simulate_pwa, simulate_pwa_with, Marker, PwaOptions, PwaState};
use crate::smooth::{crossing_times, integrate, run_driven, IntegratorConfig, Timeseries};
use crate::stimulus::{Input, NoInput, PeriodicStimulus, PulseSpec};

/// Threshold on std(k) below which a cell counts as entrained.
pub const ENTRAINMENT_THRESHOLD: f64 = 0.01;

/// An oscillator with a phase-0 marker section that can be driven by an
/// additive input on one variable.
pub trait PhaseOscillator: Sync {
    type State: Copy + Send + Sync;

    fn name(&self) -> &'static str;

    /// Human-readable marker description.
    fn marker(&self) -> String;

    /// Converged state on the marker section, its time and the free-running
    /// period.
    fn settle(&self) -> Result<Settled<Self::State>>;

    /// Marker times in `(t0, t1]` of the run from `s` at `t0` under `input`.
    fn markers(&self, t0: f64, s: &Self::State, t1: f64, input: &dyn Input) -> Result<Vec<f64>>;

    /// Whether the marker observable of the unforced run from `s` at `t0` is
    /// above its section level at each of `times` (sorted).
    fn above_section(&self, t0: f64, s: &Self::State, times: &[f64]) -> Result<Vec<bool>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settled<S> {
    pub t0: f64,
    pub state: S,
    pub period: PeriodEstimate,
}

/// PWA oscillator with pulses on `x` and marker `x` crossing 0 upward.
#[derive(Debug, Clone, Copy)]
pub struct PwaOscillator {
    pub params: PwaParams,
    pub initial: PwaState,
    /// Time discarded before the period is measured (h).
    pub transient: f64,
    /// Window over which the free-running period is measured (h).
    pub measure: f64,
    pub options: PwaOptions,
}

impl PwaOscillator {
    pub fn new(params: PwaParams) -> Self {
        Self {
            params,
            // b = 1, d = r = p = 0
            initial: PwaState {
                x: 1.0,
                d: 0.0,
                r: 0.0,
                t: 0.0,
            },
            transient: 1000.0,
            measure: 1000.0,
            options: PwaOptions::default(),
        }
    }
}

impl PhaseOscillator for PwaOscillator {
    type State = PwaState;

    fn name(&self) -> &'static str {
        "pwa"
    }

    fn marker(&self) -> String {
        "x crosses 0 upward".into()
    }

    fn settle(&self) -> Result<Settled<PwaState>> {
        let tr = simulate_pwa(&self.initial, &self.params, self.transient + self.measure)?;
        let events: Vec<f64> = tr
            .marker_times(Marker::XUpward)
            .into_iter()
            .filter(|&t| t >= self.transient)
            .collect();
        let period = PeriodEstimate::from_event_times(&events).map_err(|_| {
            Error::NotPeriodic(format!(
                "pwa run shows {} marker events after t = {} h; the trajectory does not oscillate",
                events.len(),
                self.transient
            ))
        })?;
        let t0 = events[events.len() - 1];
        let mut state = tr
            .state_at(t0)
            .ok_or_else(|| Error::InvalidState("marker outside trajectory".into()))?;
        state.x = 0.0;
        state.t = t0;
        Ok(Settled { t0, state, period })
    }

    fn markers(&self, t0: f64, s: &PwaState, t1: f64, input: &dyn Input) -> Result<Vec<f64>> {
        let s = PwaState { t: t0, ..*s };
        let tr = simulate_pwa_with(&s, &self.params, t1 - t0, input, self.options)?;
        Ok(tr
            .marker_times(Marker::XUpward)
            .into_iter()
            .filter(|&t| t > t0)
            .collect())
    }

    fn above_section(&self, t0: f64, s: &PwaState, times: &[f64]) -> Result<Vec<bool>> {
        let Some(&t_last) = times.last() else {
            return Ok(Vec::new());
        };
        let s = PwaState { t: t0, ..*s };
        let tr = simulate_pwa(&s, &self.params, (t_last - t0).max(1e-9))?;
        Ok(times
            .iter()
            .map(|&t| tr.state_at(t).map_or(false, |st| st.x > 0.0))
            .collect())
    }
}

/// Goodwin oscillator with pulses on `Z` and marker `Z` crossing its
/// trajectory mean upward.
#[derive(Debug, Clone, Copy)]
pub struct GoodwinOscillator {
    pub params: GoodwinParams,
    pub initial: [f64; 3],
    pub transient: f64,
    /// Window used for the mean of `Z` and the period (h).
    pub measure: f64,
    pub solver: SolverOptions,
    /// Section level for `Z`; `None` until measured.
    pub level: Option<f64>,
}

impl GoodwinOscillator {
    pub fn new(params: GoodwinParams) -> Self {
        Self {
            params,
            initial: [0.1, 0.1, 0.1],
            transient: 500.0,
            measure: 200.0,
            solver: SolverOptions {
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                max_step: 0.1,
            },
            level: None,
        }
    }

    /// Fixes the section level to the mean of `Z` after the transient.
    pub fn measured(mut self) -> Result<Self> {
        let cfg = IntegratorConfig {
            rel_tol: self.solver.rel_tol,
            abs_tol: self.solver.abs_tol,
            max_step: self.solver.max_step,
            ..IntegratorConfig::default()
        };
        let ts = integrate(
            &self.params,
            self.initial,
            &cfg,
            self.transient + self.measure,
            0.01,
        )?;
        let tail = ts.tail(self.measure);
        let z = tail.column(2);
        self.level = Some(z.iter().sum::<f64>() / z.len() as f64);
        Ok(self)
    }

    fn level(&self) -> Result<f64> {
        self.level
            .ok_or_else(|| Error::InvalidConfig("goodwin section level not measured".into()))
    }
}

impl PhaseOscillator for GoodwinOscillator {
    type State = [f64; 3];

    fn name(&self) -> &'static str {
        "goodwin"
    }

    fn marker(&self) -> String {
        format!("Z crosses {} upward", self.level.unwrap_or(f64::NAN))
    }

    fn settle(&self) -> Result<Settled<[f64; 3]>> {
        let level = self.level()?;
        let g = |y: &[f64; 3]| y[2];
        let mut events: Vec<(f64, [f64; 3])> = Vec::new();
        let t1 = self.transient + self.measure;
        run_driven(
            &self.params,
            0.0,
            self.initial,
            t1,
            &self.solver,
            &NoInput,
            2,
            |st| {
                if st.t1 >= self.transient {
                    if let Some(tc) = crossing_in_step(st, &g, level, Direction::Upward, 1e-12) {
                        if tc >= self.transient {
                            events.push((tc, st.eval(tc)));
                        }
                    }
                }
                Flow::Continue
            },
        )?;
        let times: Vec<f64> = events.iter().map(|e| e.0).collect();
        let period = PeriodEstimate::from_event_times(&times)?;
        let (t0, state) = events[events.len() - 1];
        Ok(Settled { t0, state, period })
    }

    fn markers(&self, t0: f64, s: &[f64; 3], t1: f64, input: &dyn Input) -> Result<Vec<f64>> {
        let level = self.level()?;
        let g = |y: &[f64; 3]| y[2];
        let mut out = Vec::new();
        let mut bad = false;
        run_driven(&self.params, t0, *s, t1, &self.solver, input, 2, |st| {
            if !st.y1.iter().all(|v| v.is_finite()) {
                bad = true;
                return Flow::StopAt(st.t1);
            }
            if let Some(tc) = crossing_in_step(st, &g, level, Direction::Upward, 1e-12) {
                if tc > t0 {
                    out.push(tc);
                }
            }
            Flow::Continue
        })?;
        if bad {
            return Err(Error::NonFinite { time: t1 });
        }
        Ok(out)
    }

    fn above_section(&self, t0: f64, s: &[f64; 3], times: &[f64]) -> Result<Vec<bool>> {
        let level = self.level()?;
        let Some(&t_last) = times.last() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::with_capacity(times.len());
        let mut k = 0;
        // sample points that coincide with t0
        while k < times.len() && times[k] <= t0 {
            out.push(s[2] > level);
            k += 1;
        }
        run_driven(&self.params, t0, *s, t_last, &self.solver, &NoInput, 2, |st| {
            while k < times.len() && times[k] <= st.t1 {
                out.push(st.eval(times[k])[2] > level);
                k += 1;
            }
            Flow::Continue
        })?;
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// phase response curves

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrcConfig {
    pub pulse: PulseSpec,
    pub n_phases: usize,
    /// Free-running periods simulated after the pulse before the shift is read.
    pub periods_after: usize,
}

impl PrcConfig {
    pub fn new(pulse: PulseSpec, n_phases: usize) -> Self {
        Self {
            pulse,
            n_phases,
            periods_after: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrcResult {
    pub model: String,
    pub marker: String,
    pub period: f64,
    pub pulse: PulseSpec,
    pub periods_after: usize,
    /// Stimulus onset as a fraction of the cycle after the marker.
    pub phases: Vec<f64>,
    /// Asymptotic shift (h), advance positive.
    pub shifts: Vec<f64>,
    /// Reference marker observable above its section at the onset.
    pub x_positive: Vec<bool>,
}

impl PrcResult {
    pub fn max_advance(&self) -> f64 {
        self.shifts.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_delay(&self) -> f64 {
        self.shifts.iter().map(|s| -s).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.shifts.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    /// Largest |shift| over onsets with the observable below its section.
    pub fn max_abs_below_section(&self) -> f64 {
        self.shifts
            .iter()
            .zip(&self.x_positive)
            .filter(|(_, &pos)| !pos)
            .map(|(s, _)| s.abs())
            .fold(0.0, f64::max)
    }

    /// `phase_fraction,shift_hours,x_positive_flag` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "phase_fraction,shift_hours,x_positive_flag")?;
        for ((ph, s), pos) in self.phases.iter().zip(&self.shifts).zip(&self.x_positive) {
            writeln!(w, "{ph},{s},{pos}")?;
        }
        Ok(())
    }
}

/// Reduces `v` to `[-period/2, period/2)`.
pub fn wrap_shift(v: f64, period: f64) -> f64 {
    let w = (v + 0.5 * period).rem_euclid(period) - 0.5 * period;
    if w >= 0.5 * period {
        w - period
    } else {
        w
    }
}

fn nearest(sorted: &[f64], t: f64) -> Option<f64> {
    let i = sorted.partition_point(|&u| u < t);
    let a = i.checked_sub(1).map(|j| sorted[j]);
    let b = sorted.get(i).copied();
    match (a, b) {
        (Some(a), Some(b)) => Some(if t - a <= b - t { a } else { b }),
        (Some(a), None) => Some(a),
        (None, b) => b,
    }
}

/// Phase response curve by direct pulsed simulation from the settled orbit.
pub fn compute_prc<O: PhaseOscillator>(osc: &O, cfg: &PrcConfig, exec: Execution) -> Result<PrcResult> {
    if cfg.n_phases < 2 {
        return Err(Error::InvalidConfig("n_phases must be >= 2".into()));
    }
    if cfg.periods_after < 1 {
        return Err(Error::InvalidConfig("periods_after must be >= 1".into()));
    }
    let settled = osc.settle()?;
    let period = settled.period.period;
    let t0 = settled.t0;
    let t_end = t0 + (cfg.periods_after as f64 + 1.5) * period;
    let mut reference = vec![t0];
    reference.extend(osc.markers(t0, &settled.state, t_end, &NoInput)?);
    let phases: Vec<f64> = (0..cfg.n_phases).map(|i| i as f64 / cfg.n_phases as f64).collect();
    let onsets: Vec<f64> = phases.iter().map(|ph| t0 + ph * period).collect();
    let x_positive = osc.above_section(t0, &settled.state, &onsets)?;
    let shifts = map_indexed(exec, phases.len(), |i| -> Result<f64> {
        let pulse = cfg.pulse.at(onsets[i]);
        let pert = osc.markers(t0, &settled.state, t_end, &pulse)?;
        let last = *pert.last().ok_or_else(|| {
            Error::NotPeriodic(format!("no marker after a pulse at phase {}", phases[i]))
        })?;
        let r = nearest(&reference, last).unwrap_or(t0);
        Ok(wrap_shift(r - last, period))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(PrcResult {
        model: osc.name().to_string(),
        marker: osc.marker(),
        period,
        pulse: cfg.pulse,
        periods_after: cfg.periods_after,
        phases,
        shifts,
        x_positive,
    })
}

// ---------------------------------------------------------------------------
// phases and the order parameter

/// Modulus of the mean unit phasor of `phases` (radians).
pub fn kuramoto_k(phases: &[f64]) -> Result<f64> {
    if phases.is_empty() {
        return Err(Error::InvalidConfig("kuramoto_k needs at least one phase".into()));
    }
    let n = phases.len() as f64;
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), &p| (s + p.sin(), c + p.cos()));
    Ok(((s / n).powi(2) + (c / n).powi(2)).sqrt().min(1.0))
}

/// Piecewise-linear phase interpolated between marker events.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFunction {
    markers: Vec<f64>,
}

impl PhaseFunction {
    pub fn from_markers(markers: Vec<f64>) -> Result<Self> {
        if markers.len() < 2 {
            return Err(Error::NotPeriodic(format!(
                "{} marker events, at least 2 needed for a phase",
                markers.len()
            )));
        }
        if markers.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("marker times must increase".into()));
        }
        Ok(Self { markers })
    }

    pub fn start(&self) -> f64 {
        self.markers[0]
    }

    pub fn end(&self) -> f64 {
        self.markers[self.markers.len() - 1]
    }

    /// Phase in radians at `t`, `None` outside the marker span.
    pub fn at(&self, t: f64) -> Option<f64> {
        if t < self.start() || t > self.end() {
            return None;
        }
        let i = self.markers.partition_point(|&m| m <= t).saturating_sub(1);
        let i = i.min(self.markers.len() - 2);
        let (a, b) = (self.markers[i], self.markers[i + 1]);
        Some(2.0 * std::f64::consts::PI * (i as f64 + (t - a) / (b - a)))
    }
}

/// Phase of one column of `ts` with markers at upward crossings of `level`.
pub fn phase_from_timeseries(ts: &Timeseries, var: usize, level: f64) -> Result<PhaseFunction> {
    PhaseFunction::from_markers(crossing_times(ts, var, level, Direction::Upward))
}

/// `k(t)` of two phase functions sampled every `dt` over `[t_a, t_b]`.
pub fn order_parameter_series(
    a: &PhaseFunction,
    b: &PhaseFunction,
    t_a: f64,
    t_b: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let lo = t_a.max(a.start()).max(b.start());
    let hi = t_b.min(a.end()).min(b.end());
    if !(hi > lo) || !(dt > 0.0) {
        return Err(Error::NotPeriodic("phase functions do not cover the window".into()));
    }
    let n = ((hi - lo) / dt).floor() as usize;
    (0..=n)
        .map(|i| {
            let t = lo + i as f64 * dt;
            let pa = a.at(t).unwrap_or(0.0);
            let pb = b.at(t).unwrap_or(0.0);
            kuramoto_k(&[pa, pb])
        })
        .collect()
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

// ---------------------------------------------------------------------------
// Arnold tongues

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TongueConfig {
    /// Pulse magnitudes; the applied amplitude is `amplitude_sign * A`.
    pub amplitudes: Vec<f64>,
    pub periods: Vec<f64>,
    pub amplitude_sign: f64,
    pub pulse_length: f64,
    pub horizon: f64,
    /// Fraction of the horizon, taken at its end, over which k(t) is analysed.
    pub transient_fraction: f64,
    pub threshold: f64,
}

impl TongueConfig {
    /// 11 x 11 grid with `A` in `[0, 1]` and `T_st` in `[t_fr - 2, t_fr + 2]`.
    pub fn default_grid(t_fr: f64, amplitude_sign: f64, horizon: f64) -> Self {
        let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        Self {
            amplitudes: lin(0.0, 1.0, 11),
            periods: lin(t_fr - 2.0, t_fr + 2.0, 11),
            amplitude_sign,
            pulse_length: 0.05,
            horizon,
            transient_fraction: 0.25,
            threshold: ENTRAINMENT_THRESHOLD,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.amplitudes.is_empty() || self.periods.is_empty() {
            return Err(Error::InvalidConfig("tongue grids must be nonempty".into()));
        }
        if !(self.transient_fraction > 0.0 && self.transient_fraction <= 1.0) {
            return Err(Error::InvalidConfig("transient_fraction must be in (0, 1]".into()));
        }
        let t_max = self.periods.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(self.horizon >= 50.0 * t_max) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} h covers fewer than 50 stimulus periods of {t_max} h",
                self.horizon
            )));
        }
        if self.periods.iter().any(|&t| !(t > self.pulse_length)) {
            return Err(Error::InvalidConfig("stimulus periods must exceed the pulse length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TongueCell {
    pub amplitude: f64,
    pub period: f64,
    pub std_k: Option<f64>,
    pub entrained: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TongueGrid {
    pub model: String,
    pub free_running_period: f64,
    pub config: TongueConfig,
    /// Row-major: amplitude index outer, period index inner.
    pub cells: Vec<TongueCell>,
}

impl TongueGrid {
    pub fn cell(&self, i_amp: usize, i_per: usize) -> &TongueCell {
        &self.cells[i_amp * self.config.periods.len() + i_per]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    /// Smallest and largest entraining stimulus period at amplitude row `i_amp`.
    pub fn entrained_range(&self, i_amp: usize) -> Option<(f64, f64)> {
        let row: Vec<f64> = (0..self.config.periods.len())
            .map(|j| self.cell(i_amp, j))
            .filter(|c| c.entrained)
            .map(|c| c.period)
            .collect();
        if row.is_empty() {
            return None;
        }
        Some((
            row.iter().cloned().fold(f64::INFINITY, f64::min),
            row.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ))
    }

    /// `A,T_st,std_k,entrained` CSV; failed cells have an empty std_k.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "A,T_st,std_k,entrained")?;
        for c in &self.cells {
            let s = c.std_k.map_or(String::new(), |v| v.to_string());
            writeln!(w, "{},{},{},{}", c.amplitude, c.period, s, c.entrained)?;
        }
        Ok(())
    }

    pub fn metadata_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&serde_json::json!({
            "model": self.model,
            "horizon": self.config.horizon,
            "transient_fraction": self.config.transient_fraction,
            "threshold": self.config.threshold,
            "T_fr": self.free_running_period,
            "amplitude_sign": self.config.amplitude_sign,
            "pulse_length": self.config.pulse_length,
            "failed_cells": self.failures(),
        }))
    }
}

/// std(k) of the oscillator against a periodic stimulus started at the
/// settled marker time.
pub fn entrainment_std<O: PhaseOscillator>(
    osc: &O,
    settled: &Settled<O::State>,
    pulse: PulseSpec,
    stim_period: f64,
    horizon: f64,
    window_fraction: f64,
) -> Result<f64> {
    let t0 = settled.t0;
    let t_end = t0 + horizon;
    let mut stim = PeriodicStimulus::new(pulse, stim_period)?;
    stim.first_onset = t0;
    let mut markers = vec![t0];
    markers.extend(osc.markers(t0, &settled.state, t_end, &stim)?);
    let osc_phase = PhaseFunction::from_markers(markers)?;
    let stim_phase = PhaseFunction::from_markers(stim.onsets(t0, t_end + stim_period))?;
    let w0 = t_end - window_fraction * horizon;
    let dt = stim_period.min(settled.period.period) / 50.0;
    let k = order_parameter_series(&osc_phase, &stim_phase, w0, t_end, dt)?;
    Ok(std_dev(&k))
}

pub fn arnold_tongue<O: PhaseOscillator>(osc: &O, cfg: &TongueConfig, exec: Execution) -> Result<TongueGrid> {
    cfg.validate()?;
    let settled = osc.settle()?;
    let n_p = cfg.periods.len();
    let cells = map_indexed(exec, cfg.amplitudes.len() * n_p, |idx| {
        let a = cfg.amplitudes[idx / n_p];
        let t_st = cfg.periods[idx % n_p];
        let res = PulseSpec::new(cfg.amplitude_sign * a, cfg.pulse_length).and_then(|pulse| {
            entrainment_std(osc, &settled, pulse, t_st, cfg.horizon, cfg.transient_fraction)
        });
        match res {
            Ok(s) => TongueCell {
                amplitude: a,
                period: t_st,
                std_k: Some(s),
                entrained: s < cfg.threshold,
                error: None,
            },
            Err(e) => TongueCell {
                amplitude: a,
                period: t_st,
                std_k: None,
                entrained: false,
                error: Some(e.to_string()),
            },
        }
    });
    Ok(TongueGrid {
        model: osc.name().to_string(),
        free_running_period: settled.period.period,
        config: cfg.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn kuramoto_examples() {
        assert_relative_eq!(kuramoto_k(&[0.3, 0.3, 0.3]).unwrap(), 1.0, epsilon = 1e-15);
        assert!(kuramoto_k(&[0.0, PI]).unwrap() < 1e-15);
        assert_relative_eq!(kuramoto_k(&[0.0, PI / 2.0]).unwrap(), 0.7071067811865476, epsilon = 1e-15);
        assert!(kuramoto_k(&[]).is_err());
        let a = kuramoto_k(&[0.1, 1.3, 2.0]).unwrap();
        let b = kuramoto_k(&[0.1 + 5.0, 1.3 + 5.0, 2.0 + 5.0]).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn phase_is_linear_for_periodic_markers() {
        let f = PhaseFunction::from_markers((0..10).map(|i| 3.0 + 24.0 * i as f64).collect()).unwrap();
        for k in 0..100 {
            let t = 3.0 + 2.1 * k as f64;
            assert_relative_eq!(f.at(t).unwrap(), 2.0 * PI * (t - 3.0) / 24.0, epsilon = 1e-12);
        }
        assert!(f.at(2.0).is_none());
        assert!(PhaseFunction::from_markers(vec![1.0]).is_err());
    }

    #[test]
    fn identical_phases_lock() {
        let f = PhaseFunction::from_markers(vec![0.0, 1.0, 2.5, 3.0, 4.7]).unwrap();
        let k = order_parameter_series(&f, &f, 0.0, 4.7, 0.01).unwrap();
        assert!(k.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(std_dev(&k) < 1e-12);
    }

    #[test]
    fn shift_wrapping() {
        assert_relative_eq!(wrap_shift(25.0, 27.0), -2.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_shift(-0.4, 27.0), -0.4, epsilon = 1e-12);
        assert_relative_eq!(wrap_shift(13.5, 27.0), -13.5, epsilon = 1e-12);
    }
}
