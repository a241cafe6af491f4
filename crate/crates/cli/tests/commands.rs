use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqclock"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn sidecar(out: &Path, cmd: &str) -> serde_json::Value {
    let text = fs::read_to_string(out.join(format!("{cmd}.run.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn simulate_is_byte_for_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["simulate", "--model", "pwa", "--preset", "paper-gamma1.5", "--t-total", "300"];
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    for f in ["trajectory.csv", "transitions.csv", "simulate.run.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let meta = sidecar(&a, "simulate");
    assert_eq!(meta["preset"], "paper-gamma1.5");
    assert_eq!(meta["params"]["gamma"], 1.5);
    assert!(meta["version"].is_string());
    let log = fs::read_to_string(a.join("transitions.csv")).unwrap();
    assert!(log.starts_with("t,from,to,face\n"));
}

#[test]
fn zero_duration_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["simulate", "--t-total", "0"], dir.path()).status.success());
    assert_eq!(fs::read_to_string(dir.path().join("trajectory.csv")).unwrap(), "t,x,d,r,region\n");
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["simulate", "--model", "goodwin", "--t-total", "0"], dir.path()).status.success());
    assert_eq!(fs::read_to_string(dir.path().join("timeseries.csv")).unwrap(), "t,X,Y,Z\n");
}

#[test]
fn smooth_models_report_a_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--model", "goodwin", "--t-total", "400"], dir.path());
    assert!(o.status.success());
    let t = sidecar(dir.path(), "simulate")["results"]["run"]["period_h"].as_f64().unwrap();
    assert!((t - 7.9356).abs() < 1e-3, "{t}");
}

#[test]
fn full_model_needs_a_parameter_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--model", "full", "--t-total", "10"], dir.path());
    assert!(!o.status.success());
    let params = dir.path().join("full.json");
    fs::write(
        &params,
        r#"{"V_R": 1, "V_B": 1, "V_D": 1, "gamma_B": 100, "gamma_D": 0.2, "gamma_R": 0.3, "k_R": 1}"#,
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_seqclock"))
        .args(["simulate", "--model", "full", "--t-total", "10", "--params"])
        .arg(&params)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert!(csv.starts_with("t,B,D,R,P\n"));
}

#[test]
fn malformed_parameters_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    fs::write(&params, r#"{"beta": 0.1, "gamma": 1.0, "delta": 0.2}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_seqclock"))
        .args(["conditions", "--params"])
        .arg(&params)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));

    fs::write(&params, r#"{"beta": 0.1, "gamma": -1.0, "delta": 0.2, "epsilon": 1}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_seqclock"))
        .args(["conditions", "--params"])
        .arg(&params)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn scan_rerun_is_identical_and_feasible_rows_certify() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["scan", "--n-samples", "20000", "--seed", "4"];
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    let csv = fs::read_to_string(a.join("scan.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("scan.csv")).unwrap());

    let hist: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("histograms.json")).unwrap()).unwrap();
    let feasible = hist["feasible_count"].as_u64().unwrap();
    assert!(feasible > 0);
    for h in hist["histograms"].as_array().unwrap() {
        let s: u64 = h["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(s, feasible);
    }

    // feed one feasible row back through `conditions`
    let row = csv
        .lines()
        .skip(1)
        .find(|l| l.split(',').nth(8) == Some("true"))
        .unwrap();
    let f: Vec<&str> = row.split(',').collect();
    let params = dir.path().join("p.json");
    fs::write(
        &params,
        format!(r#"{{"beta": {}, "gamma": {}, "delta": {}, "epsilon": {}}}"#, f[0], f[1], f[2], f[3]),
    )
    .unwrap();
    let c = dir.path().join("c");
    let o = Command::new(env!("CARGO_BIN_EXE_seqclock"))
        .args(["conditions", "--params"])
        .arg(&params)
        .arg("--out")
        .arg(&c)
        .output()
        .unwrap();
    assert!(o.status.success());
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(c.join("conditions.json")).unwrap()).unwrap();
    assert_eq!(rep["report"]["all_pass"], true);
}

#[test]
fn single_point_alpha_grid_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["alpha-sweep", "--preset", "paper-gamma1.5", "--alpha-grid", "114.6"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("alpha_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("alpha,period,period_spread,oscillatory\n114.6,"));
}

#[test]
fn prc_and_tongue_exports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["prc", "--preset", "paper-gamma1.5", "--n-phases", "10"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("prc.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);

    let o = run(
        &[
            "arnold", "--preset", "paper-gamma1.5", "--amp-grid", "0.5", "--tst-grid", "rel:-0.4:0:2",
            "--horizon", "2000",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("tongue.csv")).unwrap();
    assert!(csv.starts_with("A,T_st,std_k,entrained\n"));
    assert_eq!(csv.lines().count(), 3);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tongue.json")).unwrap()).unwrap();
    assert_eq!(meta["horizon"], 2000.0);
    assert!(meta["T_fr"].as_f64().unwrap() > 27.0);
}

#[test]
fn tongue_on_a_non_oscillating_preset_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["arnold", "--preset", "paper-standard", "--horizon", "2000", "--amp-grid", "0.5", "--tst-grid", "27,28"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("oscillat"));
}
