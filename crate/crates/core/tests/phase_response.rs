use seqclock::models::presets;
use seqclock::par::Execution;
use seqclock::phase::{
    arnold_tongue, compute_prc, entrainment_std, GoodwinOscillator, PhaseOscillator, PrcConfig,
    PwaOscillator, TongueConfig,
};
use seqclock::stimulus::PulseSpec;

fn pwa() -> PwaOscillator {
    PwaOscillator::new(presets::gamma_1_5().pwa())
}

#[test]
fn zero_pulse_gives_zero_shift() {
    let cfg = PrcConfig::new(PulseSpec::new(0.0, 0.05).unwrap(), 20);
    let prc = compute_prc(&pwa(), &cfg, Execution::Parallel).unwrap();
    assert_eq!(prc.shifts.len(), 20);
    assert!(prc.max_abs() < 1e-8, "{}", prc.max_abs());
}

#[test]
fn prc_csv_layout() {
    let cfg = PrcConfig::new(PulseSpec::new(-0.5, 0.05).unwrap(), 8);
    let prc = compute_prc(&pwa(), &cfg, Execution::Sequential).unwrap();
    let mut buf = Vec::new();
    prc.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phase_fraction,shift_hours,x_positive_flag");
    assert_eq!(lines.len(), 9);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        let phi: f64 = f[0].parse().unwrap();
        let dphi: f64 = f[1].parse().unwrap();
        assert!((0.0..1.0).contains(&phi));
        assert!(dphi.abs() <= 0.5 * prc.period);
        f[2].parse::<bool>().unwrap();
    }
}

#[test]
fn prc_is_reproducible_across_execution_modes() {
    let cfg = PrcConfig::new(PulseSpec::new(-0.5, 0.05).unwrap(), 12);
    let a = compute_prc(&pwa(), &cfg, Execution::Sequential).unwrap();
    let b = compute_prc(&pwa(), &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn goodwin_prc_has_both_signs() {
    let osc = GoodwinOscillator::new(presets::goodwin()).measured().unwrap();
    let cfg = PrcConfig::new(PulseSpec::new(0.5, 0.05).unwrap(), 24);
    let prc = compute_prc(&osc, &cfg, Execution::Parallel).unwrap();
    let peak = prc.max_abs();
    assert!(prc.max_advance() > 0.1 * peak && prc.max_delay() > 0.1 * peak);
}

#[test]
fn unforced_incommensurate_drive_does_not_lock() {
    let osc = pwa();
    let settled = osc.settle().unwrap();
    let t_st = settled.period.period * 1.37;
    let pulse = PulseSpec::new(0.0, 0.05).unwrap();
    let s = entrainment_std(&osc, &settled, pulse, t_st, 100.0 * t_st, 0.25).unwrap();
    assert!(s > 0.05, "{s}");
}

#[test]
fn tongue_outputs() {
    let osc = pwa();
    let t_fr = osc.settle().unwrap().period.period;
    let mut cfg = TongueConfig::default_grid(t_fr, -1.0, 2000.0);
    cfg.amplitudes = vec![0.0, 0.8];
    cfg.periods = vec![t_fr - 0.4, t_fr + 1.0];
    cfg.horizon = 60.0 * (t_fr + 1.0);
    let g = arnold_tongue(&osc, &cfg, Execution::Parallel).unwrap();
    assert_eq!(g.cells.len(), 4);
    assert_eq!(g.failures(), 0);
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("A,T_st,std_k,entrained\n"));
    assert_eq!(text.lines().count(), 5);
    let meta: serde_json::Value = serde_json::from_str(&g.metadata_json().unwrap()).unwrap();
    assert_eq!(meta["transient_fraction"], 0.25);
    assert_eq!(meta["threshold"], 0.01);
    assert_eq!(meta["amplitude_sign"], -1.0);

    cfg.horizon = 10.0 * t_fr;
    assert!(arnold_tongue(&osc, &cfg, Execution::Parallel).is_err());
}
