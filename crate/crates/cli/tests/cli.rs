use pmenu::commands::{figure, solve, sweep, Regime, FIGURES};
use pmenu::config::Settings;
use pmenu::table::Table;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pmenu"))
}

#[test]
fn schedule_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for regime in ["baseline", "symmetric-info", "cohort"] {
        let out = bin()
            .args(["solve", "--regime", regime, "--grid", "501", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let t = Table::read_csv(std::fs::File::open(dir.path().join("schedule.csv")).unwrap()).unwrap();
        assert_eq!(t.rows.len(), 501);
        let th = t.column("theta").unwrap();
        for side in ["on", "off"] {
            let q = t.column(&format!("q_{side}")).unwrap();
            let u = t.column(&format!("u_{side}")).unwrap();
            let p = t.column(&format!("p_{side}")).unwrap();
            for k in 0..th.len() {
                assert_eq!((th[k] * q[k] - u[k]).to_bits(), p[k].to_bits(), "{regime} {side} {k}");
            }
        }
        let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(report.contains(&format!("regime = {regime}")));
    }
}

#[test]
fn organic_schedule_has_a_multiplier_column() {
    let mut s = Settings::default();
    s.set("grid", "201").unwrap();
    s.set("alpha", "1").unwrap();
    let out = solve(Regime::Organic, &s).unwrap();
    let t = &out.tables[0].1;
    assert_eq!(t.header.last().unwrap(), "gamma");
    assert!(t.column("gamma").unwrap().iter().all(|g| g.is_finite()));
    assert!(out.report.get("shooting_residual").unwrap().parse::<f64>().unwrap() <= 1e-8);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# uniform market\nregime = baseline\nlambda = 0\nJ = 1\nF = uniform\nG = uniform\ngrid = 2001\n").unwrap();
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    // one seller, no platform: the classic 1/12
    let pi: f64 = text.lines().find_map(|l| l.strip_prefix("pi = ")).unwrap().parse().unwrap();
    assert!((pi - 1.0 / 12.0).abs() < 1e-6, "{pi}");
    let out = bin().args(["solve", "--lambda", "0.5", "--config"]).arg(&cfg).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("lambda = 0.5\n"));
}

#[test]
fn errors_carry_a_category_and_exit_code() {
    let cases: [(&[&str], &str, i32); 4] = [
        (&["solve", "--regime", "nope"], "usage", 2),
        (&["solve", "--lambda", "1.5"], "domain", 5),
        (&["solve", "--regime", "infodesign", "--G", "uniform"], "unsupported", 7),
        (&["figure", "fig-none"], "usage", 2),
    ];
    for (args, cat, code) in cases {
        let out = bin().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with(&format!("error[{cat}]")), "{err}");
    }
    let out = bin().args(["solve", "--regime", "baseline", "--set", "lambda=1"]).output().unwrap();
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[regime]"));
}

#[test]
fn sweep_keeps_going_past_bad_cells() {
    let mut s = Settings::default();
    s.set("grid", "401").unwrap();
    let out = sweep(Regime::Baseline, &s, &[0.0, 0.5, 1.0], &[2], &[0.6]).unwrap();
    let t = &out.tables[0].1;
    let status: Vec<&str> = t.rows.iter().map(|r| r[t.index("status").unwrap()].as_str()).collect();
    assert_eq!(status, ["ok", "ok", "regime"]);
    assert_eq!(out.report.get("failed_cells"), Some("1"));
}

#[test]
fn figures_regenerate_identically() {
    for name in FIGURES {
        let a = figure(name).unwrap();
        let b = figure(name).unwrap();
        assert_eq!(a, b, "{name}");
        let t = &a.tables[0].1;
        assert!(!t.rows.is_empty());
        assert!(t.rows.iter().all(|r| r.len() == t.header.len()));
    }
}

#[test]
fn figure_data_matches_the_solver() {
    let t = &figure("fig-qmr").unwrap().tables[0].1;
    let th = t.column("theta").unwrap();
    let eff = t.column("efficient").unwrap();
    let mr = t.column("mussa_rosen").unwrap();
    let q = t.column("q_hat").unwrap();
    assert_eq!(th.len(), 2001);
    for k in 0..th.len() {
        assert!(eff[k] >= mr[k] && mr[k] >= q[k]);
    }
    let t = &figure("fig-rcs").unwrap().tables[0].1;
    assert_eq!(t.header, ["theta", "q_hat[J=2.0]", "q_hat[J=3.0]", "q_hat[J=5.0]", "q_hat[J=10.0]"]);
    assert!(t.comments.iter().any(|c| c.contains("fixed default")));
}

#[test]
fn oracle_command_reports_concordance() {
    let out = bin().args(["oracle", "--n", "50000", "--seed", "3", "--grid", "801"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("showrooming_violations = 0"));
    assert!(text.contains("match_efficiency = 1.0"));
    let out = bin().args(["oracle", "--n", "10", "--info", "garble:0.25", "--grid", "401"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin().args(["oracle", "--info", "fuzzy"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
