use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqclock::models::{presets, PwaParams};
use seqclock::ode::{solve, Flow, SolverOptions};
use seqclock::pwa::{
    classify_region, extract_period_marker, simulate_pwa, solve_affine, Marker, PwaState, Region,
    CYCLE,
};
use seqclock::smooth::pwa_reference;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn tight() -> SolverOptions {
    SolverOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_step: 0.05,
    }
}

fn rk_affine(region: Region, s0: &PwaState, p: &PwaParams, t: f64) -> [f64; 3] {
    let hs = region.switch_value();
    let bx = region.x_high;
    let f = |_t: f64, y: &[f64; 3]| {
        [
            hs - p.epsilon() * y[1],
            if bx { y[0] } else { 0.0 } - p.beta() * y[1],
            p.gamma() * y[1] - p.delta() * y[2],
        ]
    };
    solve(&f, 0.0, [s0.x, s0.d, s0.r], t, &tight(), |_| Flow::Continue)
        .unwrap()
        .1
}

#[test]
fn closed_form_matches_rk_on_random_parameter_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let p = PwaParams::new(
            log_uniform(&mut rng, 0.05, 5.0),
            log_uniform(&mut rng, 0.05, 5.0),
            log_uniform(&mut rng, 0.05, 5.0),
            log_uniform(&mut rng, 0.05, 5.0),
        )
        .unwrap();
        // every tenth draw sits on eps = beta^2
        let p = if k % 10 == 0 {
            PwaParams::new(p.beta(), p.gamma(), p.delta(), p.beta() * p.beta()).unwrap()
        } else {
            p
        };
        let region = Region::all()[k % 8];
        let s0 = PwaState::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
            0.0,
        )
        .unwrap();
        let t = rng.gen_range(0.1..3.0);
        let exact = solve_affine(region, &s0, &p, t).unwrap();
        let rk = rk_affine(region, &s0, &p, t);
        for (a, b) in [exact.x, exact.d, exact.r].iter().zip(rk) {
            let rel = (a - b).abs() / (1.0 + b.abs());
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-9, "worst relative deviation {worst:e}");
}

#[test]
fn period_is_marker_invariant() {
    let p = presets::gamma_1_5().pwa();
    let s0 = PwaState::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let tr = simulate_pwa(&s0, &p, 2000.0).unwrap();
    let mut periods = Vec::new();
    for i in 0..6 {
        let m = Marker::Transition(CYCLE[i], CYCLE[(i + 1) % 6]);
        periods.push(extract_period_marker(&tr, m).unwrap().period);
    }
    let lo = periods.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = periods.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((hi - lo) / lo < 1e-9, "{periods:?}");
}

#[test]
fn trajectory_is_continuous_and_nonnegative() {
    let p = presets::gamma_1_5().pwa();
    let s0 = PwaState::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let tr = simulate_pwa(&s0, &p, 500.0).unwrap();
    for w in tr.segments.windows(2) {
        let (a, b) = (&w[0].exit_state, &w[1].entry_state);
        assert_eq!(a.t, b.t);
        assert!((a.x - b.x).abs() < 1e-12 && (a.d - b.d).abs() < 1e-12 && (a.r - b.r).abs() < 1e-12);
    }
    for (s, _) in tr.sample(0.05).unwrap() {
        assert!(s.d >= -1e-12 && s.r >= -1e-12, "{s:?}");
    }
}

#[test]
fn settles_on_the_six_region_cycle() {
    let p = presets::gamma_1_5().pwa();
    let s0 = PwaState::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let tr = simulate_pwa(&s0, &p, 1000.0).unwrap();
    let seq = tr.region_sequence();
    let tail = &seq[seq.len() - 12..];
    let start = CYCLE.iter().position(|r| *r == tail[0]).unwrap();
    for (i, r) in tail.iter().enumerate() {
        assert_eq!(*r, CYCLE[(start + i) % 6]);
    }
}

#[test]
fn matches_event_switching_rk() {
    let p = presets::gamma_1_5().pwa();
    let s0 = PwaState::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let tr = simulate_pwa(&s0, &p, 60.0).unwrap();
    let times: Vec<f64> = (0..=1200).map(|i| i as f64 * 0.05).collect();
    let rk = pwa_reference(&s0, &p, &times, &tight()).unwrap();
    for (t, v) in times.iter().zip(&rk) {
        let e = tr.state_at(*t).unwrap();
        let err = (e.x - v[0]).abs().max((e.d - v[1]).abs()).max((e.r - v[2]).abs());
        assert!(err < 1e-7, "t={t} err={err:e}");
    }
}

#[test]
fn boundary_points_are_classified_by_the_flow() {
    let p = presets::gamma_1_5().pwa();
    let ds = p.d_star();
    // x' > 0 on x = 0 below r = 1 and d = d*
    let s = PwaState::new(0.0, 0.2 * ds, 0.5, 0.0).unwrap();
    let r = classify_region(&s, &p).unwrap();
    assert!(r.x_high);
    // d' > 0 on d = d*
    let s = PwaState::new(p.beta() * ds + 0.5, ds, 0.5, 0.0).unwrap();
    let r = classify_region(&s, &p).unwrap();
    assert!(r.d_high && r.x_high && !r.r_high);
    assert_eq!(r.code(), "rXD");
    let tr = simulate_pwa(&s, &p, 1e-3).unwrap();
    assert_eq!(tr.segments[0].region.code(), "rXD");
    let v = pwa_reference(&s, &p, &[1e-3], &tight()).unwrap()[0];
    assert!(v[0] > 0.0 && v[1] > ds && v[2] < 1.0);
    // triple point is rejected
    let s = PwaState::new(0.0, ds, 1.0, 0.0).unwrap();
    assert!(classify_region(&s, &p).is_err());
}

#[test]
fn csv_export_has_header_and_region_codes() {
    let p = presets::gamma_1_5().pwa();
    let s0 = PwaState::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let tr = simulate_pwa(&s0, &p, 30.0).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, 0.5).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,d,r,region"));
    let mut last_t = f64::NEG_INFINITY;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 5);
        let t: f64 = f[0].parse().unwrap();
        assert!(t >= last_t);
        last_t = t;
        f[4].parse::<Region>().unwrap();
    }
}
