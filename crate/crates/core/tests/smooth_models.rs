use seqclock::models::{from_xy, presets, to_xy, ReducedState, XyState};
use seqclock::ode::Direction;
use seqclock::smooth::{
    check_y_abs_x, estimate_period, integrate, measure_reduced, period_vs_alpha, IntegratorConfig,
    Transformed, DEFAULT_REDUCED_IC,
};
use seqclock::par::Execution;

fn goodwin_period(cfg: &IntegratorConfig) -> f64 {
    let g = presets::goodwin();
    let ts = integrate(&g, [0.1, 0.1, 0.1], cfg, 2000.0, 0.05).unwrap();
    let tail = ts.tail(500.0);
    let z = tail.column(2);
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    estimate_period(&tail, 2, mean, Direction::Upward).unwrap().period
}

#[test]
fn goodwin_period_is_pinned() {
    let cfg = IntegratorConfig {
        rel_tol: 1e-10,
        max_step: 0.1,
        ..IntegratorConfig::default()
    };
    let t = goodwin_period(&cfg);
    assert!((t - GOODWIN_PERIOD).abs() < 1e-5, "{t}");
}

const GOODWIN_PERIOD: f64 = 7.935582831;

#[test]
fn goodwin_period_stable_under_tolerance_halving() {
    let cfg = IntegratorConfig::default();
    let a = goodwin_period(&cfg);
    let b = goodwin_period(&cfg.halved());
    assert!((a - b).abs() / a < 1e-6, "{a} vs {b}");
}

#[test]
fn transformed_run_maps_back_onto_reduced_run() {
    let p = presets::gamma_1_5();
    let cfg = IntegratorConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-13,
        ..IntegratorConfig::default()
    };
    let ic = ReducedState::from_array(DEFAULT_REDUCED_IC);
    let a = integrate(&p, DEFAULT_REDUCED_IC, &cfg, 100.0, 0.5).unwrap();
    let b = integrate(&Transformed(p), to_xy(&ic).to_array(), &cfg, 100.0, 0.5).unwrap();
    assert_eq!(a.len(), b.len());
    for (sa, sb) in a.states.iter().zip(&b.states) {
        let back = from_xy(&XyState::from_array([sb[0], sb[1], sb[2], sb[3]]))
            .unwrap()
            .to_array();
        for i in 0..4 {
            assert!((back[i] - sa[i]).abs() < 1e-6 * (1.0 + sa[i].abs()), "{i}: {back:?} {sa:?}");
        }
    }
}

#[test]
fn y_tracks_abs_x_more_closely_as_alpha_grows() {
    let base = presets::gamma_1_5();
    let cfg = IntegratorConfig::default();
    let mut res = Vec::new();
    for alpha in [100.0, 1000.0, 10000.0] {
        let p = base.with_alpha(alpha).unwrap();
        let ic = to_xy(&ReducedState::from_array(DEFAULT_REDUCED_IC)).to_array();
        let ts = integrate(&Transformed(p), ic, &cfg, 300.0, 0.1).unwrap();
        res.push(check_y_abs_x(&ts.tail(100.0)));
    }
    assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
}

#[test]
fn timeseries_csv_layout() {
    let p = presets::gamma_1_5();
    let ts = integrate(&p, DEFAULT_REDUCED_IC, &IntegratorConfig::default(), 5.0, 1.0).unwrap();
    let mut buf = Vec::new();
    ts.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,b,d,r,p");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("0,1,0,0,0"));
}

#[test]
fn single_point_sweep_matches_direct_measurement() {
    let p = presets::gamma_1_5();
    let cfg = IntegratorConfig {
        t_transient: 300.0,
        t_measure: 200.0,
        ..IntegratorConfig::default()
    };
    let sweep = period_vs_alpha(&p.pwa(), &[p.alpha()], &cfg, Execution::Sequential).unwrap();
    let direct = measure_reduced(&p, &cfg).unwrap();
    assert_eq!(sweep.points.len(), 1);
    assert_eq!(sweep.points[0].period, direct.period.map(|e| e.period));
    assert_eq!(sweep.points[0].oscillatory, direct.oscillatory);
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf)
        .unwrap()
        .starts_with("alpha,period,period_spread,oscillatory\n"));
}

#[test]
fn sweep_rejects_bad_grids() {
    let p = presets::gamma_1_5().pwa();
    let cfg = IntegratorConfig::default();
    assert!(period_vs_alpha(&p, &[], &cfg, Execution::Sequential).is_err());
    assert!(period_vs_alpha(&p, &[10.0, 5.0], &cfg, Execution::Sequential).is_err());
    assert!(period_vs_alpha(&p, &[-1.0], &cfg, Execution::Sequential).is_err());
}
