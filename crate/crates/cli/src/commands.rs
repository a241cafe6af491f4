use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};

use seqclock::conditions::{check_all, scan_parameters, x_upper_rederived, ScanRanges};
use seqclock::models::PwaParams;
use seqclock::ode::Direction;
use seqclock::par::Execution;
use seqclock::phase::{
    arnold_tongue, compute_prc, GoodwinOscillator, PhaseOscillator, PrcConfig, PrcResult,
    PwaOscillator, TongueConfig, TongueGrid,
};
use seqclock::pwa::{extract_period_pwa, simulate_pwa, PwaState};
use seqclock::smooth::{
    estimate_period, integrate, period_vs_alpha, IntegratorConfig, OdeModel, Timeseries,
    Transformed,
};
use seqclock::stimulus::PulseSpec;

use crate::config::{parse_grid, write_sidecar, Common, ModelKind, Resolved, Sidecar};

/// Largest relative interval spread still called a sustained oscillation.
pub const SUSTAINED_SPREAD: f64 = 1e-3;

pub struct Outcome {
    pub complete: bool,
}

fn exec(c: &Common) -> Execution {
    if c.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

#[allow(clippy::too_many_arguments)]
fn finish<O: Serialize>(
    c: &Common,
    command: &'static str,
    model: ModelKind,
    params: Resolved,
    options: O,
    outputs: &[&str],
    results: Value,
    complete: bool,
) -> Result<Outcome> {
    write_sidecar(
        &c.out,
        &Sidecar {
            tool: "seqclock",
            version: env!("CARGO_PKG_VERSION"),
            command,
            model,
            preset: c.preset_label(model),
            params_file: c.params.as_deref(),
            params,
            seed: c.seed,
            options,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            results,
            complete,
        },
    )?;
    Ok(Outcome { complete })
}

fn prepare(c: &Common) -> Result<()> {
    fs::create_dir_all(&c.out).with_context(|| format!("cannot create {}", c.out.display()))
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateOpts {
    /// Simulated time (h).
    #[arg(long, default_value_t = 1000.0)]
    pub t_total: f64,
    /// Output sampling step (h).
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
}

/// Outcome of a free run, shared by the simulation report and tests.
#[derive(Debug, Clone, Serialize)]
pub struct FreeRun {
    pub oscillating: bool,
    pub period_h: Option<f64>,
    pub period_max_deviation_h: Option<f64>,
    pub marker_events: usize,
}

fn free_run(est: Option<seqclock::period::PeriodEstimate>) -> FreeRun {
    match est {
        Some(e) => FreeRun {
            oscillating: e.relative_spread() < SUSTAINED_SPREAD,
            period_h: Some(e.period),
            period_max_deviation_h: Some(e.max_deviation),
            marker_events: e.events,
        },
        None => FreeRun {
            oscillating: false,
            period_h: None,
            period_max_deviation_h: None,
            marker_events: 0,
        },
    }
}

/// Plain statement reconciling the simulated behaviour with the certificate.
pub fn reconcile(run: &FreeRun, p: &PwaParams) -> String {
    let report = check_all(p);
    let why = report
        .first_failure()
        .map(|(name, why)| format!("{name}: {why}"))
        .unwrap_or_default();
    match (run.oscillating, report.all_pass) {
        (true, true) => format!(
            "oscillates with period {:.4} h; the sufficient conditions certify a periodic orbit",
            run.period_h.unwrap_or(f64::NAN)
        ),
        (true, false) => format!(
            "oscillates with period {:.4} h although the sufficient conditions are not \
             certified ({why}); the conditions are sufficient, not necessary",
            run.period_h.unwrap_or(f64::NAN)
        ),
        (false, true) => "no sustained oscillation detected within the run although the \
                          sufficient conditions certify a periodic orbit; extend --t-total"
            .to_string(),
        (false, false) => format!(
            "no sustained oscillation detected; the sufficient conditions are not certified \
             either ({why})"
        ),
    }
}

pub fn simulate(c: &Common, o: &SimulateOpts) -> Result<Outcome> {
    if !(o.t_total >= 0.0 && o.t_total.is_finite()) {
        bail!("--t-total must be finite and >= 0");
    }
    if !(o.dt > 0.0) {
        bail!("--dt must be > 0");
    }
    prepare(c)?;
    let model = c.model_or(ModelKind::Pwa);
    let params = c.resolve(model)?;
    match (model, params) {
        (ModelKind::Pwa, Resolved::Pwa(p)) => simulate_pwa_cmd(c, o, p),
        (ModelKind::Full, Resolved::Full(p)) => {
            simulate_smooth(c, o, model, params, &p, [1.0, 0.0, 0.0, 0.0], 1, None)
        }
        (ModelKind::Reduced, Resolved::Reduced(p)) => {
            simulate_smooth(c, o, model, params, &p, [1.0, 0.0, 0.0, 0.0], 1, None)
        }
        (ModelKind::Transformed, Resolved::Reduced(p)) => simulate_smooth(
            c,
            o,
            model,
            params,
            &Transformed(p),
            [1.0, 0.0, 0.0, 1.0],
            0,
            Some(0.0),
        ),
        (ModelKind::Goodwin, Resolved::Goodwin(p)) => {
            simulate_smooth(c, o, model, params, &p, [0.1, 0.1, 0.1], 2, None)
        }
        _ => unreachable!(),
    }
}

fn simulate_pwa_cmd(c: &Common, o: &SimulateOpts, p: PwaParams) -> Result<Outcome> {
    let s0 = PwaState::new(1.0, 0.0, 0.0, 0.0)?;
    let mut traj_w = create(&c.out, "trajectory.csv")?;
    let mut log_w = create(&c.out, "transitions.csv")?;
    writeln!(log_w, "t,from,to,face")?;
    let run = if o.t_total > 0.0 {
        let tr = simulate_pwa(&s0, &p, o.t_total)?;
        tr.write_csv(&mut traj_w, o.dt)?;
        for seg in &tr.segments {
            if let Some(face) = seg.exit_face {
                writeln!(log_w, "{},{},{},{}", seg.t_end, seg.region, seg.next_region(), face.name())?;
            }
        }
        free_run(extract_period_pwa(&tr).ok())
    } else {
        writeln!(traj_w, "t,x,d,r,region")?;
        free_run(None)
    };
    traj_w.flush()?;
    log_w.flush()?;
    let statement = reconcile(&run, &p);
    println!("{statement}");
    if let Some(t) = run.period_h {
        println!("period_h = {t}");
    }
    let report = check_all(&p);
    let results = json!({
        "run": run,
        "conditions_all_pass": report.all_pass,
        "conditions_summary": report.summary(),
        "statement": statement,
    });
    finish(
        c,
        "simulate",
        ModelKind::Pwa,
        Resolved::Pwa(p),
        o,
        &["trajectory.csv", "transitions.csv"],
        results,
        true,
    )
}

#[allow(clippy::too_many_arguments)]
fn simulate_smooth<const N: usize, M: OdeModel<N>>(
    c: &Common,
    o: &SimulateOpts,
    kind: ModelKind,
    params: Resolved,
    model: &M,
    y0: [f64; N],
    marker_var: usize,
    marker_level: Option<f64>,
) -> Result<Outcome> {
    let ts = integrate(model, y0, &IntegratorConfig::default(), o.t_total, o.dt)?;
    let mut w = create(&c.out, "timeseries.csv")?;
    ts.write_csv(&mut w)?;
    w.flush()?;
    let run = free_run(smooth_period(&ts, marker_var, marker_level));
    match run.period_h {
        Some(t) if run.oscillating => println!("oscillates with period {t:.4} h"),
        _ => println!("no sustained oscillation detected"),
    }
    finish(
        c,
        "simulate",
        kind,
        params,
        o,
        &["timeseries.csv"],
        json!({ "run": run }),
        true,
    )
}

/// Period over the second half of `ts`, from upward crossings of `var`
/// through `level` (its tail mean if `None`).
fn smooth_period(
    ts: &Timeseries,
    var: usize,
    level: Option<f64>,
) -> Option<seqclock::period::PeriodEstimate> {
    let t_last = *ts.times.last()?;
    let tail = ts.tail(0.5 * t_last);
    let col = tail.column(var);
    if col.is_empty() {
        return None;
    }
    let level = level.unwrap_or(col.iter().sum::<f64>() / col.len() as f64);
    estimate_period(&tail, var, level, Direction::Upward).ok()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlphaSweepOpts {
    /// Sequestration rates: `a,b,c`, `lo:hi:n` or `geom:lo:hi:n`.
    #[arg(long, default_value = "geom:10:10000:7")]
    pub alpha_grid: String,
}

pub fn alpha_sweep(c: &Common, o: &AlphaSweepOpts) -> Result<Outcome> {
    prepare(c)?;
    let rp = c.reduced(ModelKind::Reduced)?;
    let alphas = parse_grid(&o.alpha_grid)?;
    let cfg = IntegratorConfig::default();
    let sweep = period_vs_alpha(&rp.pwa(), &alphas, &cfg, exec(c))?;
    let mut w = create(&c.out, "alpha_sweep.csv")?;
    sweep.write_csv(&mut w)?;
    w.flush()?;

    let s0 = PwaState::new(1.0, 0.0, 0.0, 0.0)?;
    let pwa_run = free_run(
        extract_period_pwa(&simulate_pwa(&s0, &rp.pwa(), cfg.t_transient + cfg.t_measure)?).ok(),
    );
    let top = sweep.points.iter().rev().find(|q| q.oscillatory).and_then(|q| q.period);
    let vs_pwa = match (top, pwa_run.period_h) {
        (Some(a), Some(b)) if pwa_run.oscillating => Some((a - b).abs() / b),
        _ => None,
    };
    println!(
        "plateau relative change: {}",
        sweep
            .plateau_relative_change
            .map_or("n/a".to_string(), |v| format!("{v:.4}"))
    );
    let results = json!({
        "plateau_relative_change": sweep.plateau_relative_change,
        "pwa_run": pwa_run,
        "largest_oscillating_alpha_vs_pwa": vs_pwa,
        "integrator": {
            "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol, "max_step": cfg.max_step,
            "t_transient": cfg.t_transient, "t_measure": cfg.t_measure,
        },
    });
    finish(
        c,
        "alpha-sweep",
        ModelKind::Reduced,
        Resolved::Reduced(rp),
        json!({ "alpha_grid": alphas }),
        &["alpha_sweep.csv"],
        results,
        true,
    )
}

// ---------------------------------------------------------------------------

pub fn conditions(c: &Common) -> Result<Outcome> {
    prepare(c)?;
    let p = c.pwa()?;
    let report = check_all(&p);
    let doc = json!({
        "params": p,
        "report": report,
        "first_failure": report.first_failure().map(|(n, w)| json!({"check": n, "reason": w})),
        "summary": report.summary(),
        "x_upper_rederived": x_upper_rederived(&p),
    });
    fs::write(
        c.out.join("conditions.json"),
        serde_json::to_string_pretty(&doc)? + "\n",
    )?;
    println!("all_pass = {}", report.all_pass);
    println!("{}", report.summary());
    finish(
        c,
        "conditions",
        ModelKind::Pwa,
        Resolved::Pwa(p),
        json!({}),
        &["conditions.json"],
        json!({ "all_pass": report.all_pass }),
        true,
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanOpts {
    #[arg(long, default_value_t = 100_000)]
    pub n_samples: usize,
}

pub fn scan(c: &Common, o: &ScanOpts) -> Result<Outcome> {
    prepare(c)?;
    let ranges = ScanRanges::default();
    let res = scan_parameters(&ranges, o.n_samples, c.seed, exec(c))?;
    let mut w = create(&c.out, "scan.csv")?;
    res.write_csv(&mut w)?;
    w.flush()?;
    fs::write(c.out.join("histograms.json"), res.histograms_json()? + "\n")?;
    println!("feasible {} of {}", res.feasible_count, o.n_samples);
    // the scan samples its own parameters; record the ranges instead
    let model = ModelKind::Pwa;
    write_sidecar(
        &c.out,
        &Sidecar {
            tool: "seqclock",
            version: env!("CARGO_PKG_VERSION"),
            command: "scan",
            model,
            preset: None,
            params_file: None,
            params: Resolved::None,
            seed: c.seed,
            options: json!({ "n_samples": o.n_samples, "ranges": ranges }),
            outputs: vec!["scan.csv".into(), "histograms.json".into()],
            results: json!({ "feasible_count": res.feasible_count }),
            complete: true,
        },
    )?;
    Ok(Outcome { complete: true })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args, Serialize)]
pub struct PrcOpts {
    /// Signed pulse amplitude added to the driven variable; defaults to
    /// -0.5 for pwa and +0.5 for goodwin.
    #[arg(long, allow_hyphen_values = true)]
    pub pulse_amplitude: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub pulse_length: f64,
    #[arg(long, default_value_t = 100)]
    pub n_phases: usize,
}

fn prc_summary(prc: &PrcResult) -> Value {
    let peak = prc.max_abs();
    json!({
        "free_running_period": prc.period,
        "max_advance": prc.max_advance(),
        "max_delay": prc.max_delay(),
        "max_abs": peak,
        "max_abs_below_section": prc.max_abs_below_section(),
        "below_section_ratio": if peak > 0.0 { Some(prc.max_abs_below_section() / peak) } else { None },
    })
}

pub fn prc(c: &Common, o: &PrcOpts) -> Result<Outcome> {
    prepare(c)?;
    let model = c.model_or(ModelKind::Pwa);
    let (params, res) = match model {
        ModelKind::Pwa => {
            let p = c.pwa()?;
            let pulse = PulseSpec::new(o.pulse_amplitude.unwrap_or(-0.5), o.pulse_length)?;
            let cfg = PrcConfig::new(pulse, o.n_phases);
            (Resolved::Pwa(p), compute_prc(&PwaOscillator::new(p), &cfg, exec(c))?)
        }
        ModelKind::Goodwin => {
            let p = c.goodwin()?;
            let pulse = PulseSpec::new(o.pulse_amplitude.unwrap_or(0.5), o.pulse_length)?;
            let cfg = PrcConfig::new(pulse, o.n_phases);
            let osc = GoodwinOscillator::new(p).measured()?;
            (Resolved::Goodwin(p), compute_prc(&osc, &cfg, exec(c))?)
        }
        m => bail!("prc supports --model pwa or goodwin, not {m:?}"),
    };
    let mut w = create(&c.out, "prc.csv")?;
    res.write_csv(&mut w)?;
    w.flush()?;
    let summary = prc_summary(&res);
    println!(
        "max advance {:.4} h, max delay {:.4} h",
        res.max_advance(),
        res.max_delay()
    );
    finish(c, "prc", model, params, o, &["prc.csv"], summary, true)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args, Serialize)]
pub struct ArnoldOpts {
    /// Pulse magnitudes; the sign is -1 for pwa and +1 for goodwin.
    #[arg(long, default_value = "0:1:11")]
    pub amp_grid: String,
    /// Stimulus periods in hours; prefix with `rel:` for offsets from the
    /// free-running period.
    #[arg(long, default_value = "rel:-2:2:11")]
    pub tst_grid: String,
    #[arg(long, default_value_t = 0.05)]
    pub pulse_length: f64,
    /// Simulated hours per cell; defaults to 25000 for pwa and 5000 for goodwin.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Fraction of the horizon, at its end, over which k(t) is analysed.
    #[arg(long, default_value_t = 0.25)]
    pub transient_fraction: f64,
}

fn tongue<O: PhaseOscillator>(osc: &O, o: &ArnoldOpts, sign: f64, horizon: f64, exec: Execution) -> Result<TongueGrid> {
    let t_fr = osc.settle()?.period.period;
    let mut cfg = TongueConfig::default_grid(t_fr, sign, horizon);
    cfg.amplitudes = parse_grid(&o.amp_grid)?;
    cfg.periods = match o.tst_grid.strip_prefix("rel:") {
        Some(rest) => parse_grid(rest)?.into_iter().map(|d| t_fr + d).collect(),
        None => parse_grid(&o.tst_grid)?,
    };
    cfg.pulse_length = o.pulse_length;
    cfg.transient_fraction = o.transient_fraction;
    Ok(arnold_tongue(osc, &cfg, exec)?)
}

pub fn arnold(c: &Common, o: &ArnoldOpts) -> Result<Outcome> {
    prepare(c)?;
    let model = c.model_or(ModelKind::Pwa);
    let (params, grid) = match model {
        ModelKind::Pwa => {
            let p = c.pwa()?;
            let h = o.horizon.unwrap_or(25_000.0);
            (Resolved::Pwa(p), tongue(&PwaOscillator::new(p), o, -1.0, h, exec(c))?)
        }
        ModelKind::Goodwin => {
            let p = c.goodwin()?;
            let h = o.horizon.unwrap_or(5_000.0);
            let osc = GoodwinOscillator::new(p).measured()?;
            (Resolved::Goodwin(p), tongue(&osc, o, 1.0, h, exec(c))?)
        }
        m => bail!("arnold supports --model pwa or goodwin, not {m:?}"),
    };
    let mut w = create(&c.out, "tongue.csv")?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    fs::write(c.out.join("tongue.json"), grid.metadata_json()? + "\n")?;
    let failed = grid.failures();
    let entrained = grid.cells.iter().filter(|x| x.entrained).count();
    println!("{entrained} of {} cells entrained, {failed} failed", grid.cells.len());
    for cell in grid.cells.iter().filter(|x| x.error.is_some()) {
        eprintln!(
            "cell A={} T_st={} failed: {}",
            cell.amplitude,
            cell.period,
            cell.error.as_deref().unwrap_or("")
        );
    }
    let results = json!({
        "free_running_period": grid.free_running_period,
        "entrained_cells": entrained,
        "failed_cells": failed,
    });
    finish(
        c,
        "arnold",
        model,
        params,
        json!({ "request": o, "resolved": grid.config }),
        &["tongue.csv", "tongue.json"],
        results,
        failed == 0,
    )
}
