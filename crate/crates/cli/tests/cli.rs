use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plate-modes"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn dispersion_rows_respect_check_branch() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["dispersion", "--r-lo", "0.2", "--r-hi", "2.0", "--r-steps", "10"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&d.path().join("dispersion.csv"));
    assert_eq!(header, ["r", "lambda1", "branch", "check1", "status"]);
    assert_eq!(rows.len(), 10);
    for row in rows {
        assert!(num(&row[1]) <= num(&row[3]) + 1e-9);
        assert_eq!(row[4], "ok");
    }
}

#[test]
fn dispersion_through_minimum() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["dispersion", "--r-lo", "0.632138", "--r-hi", "0.632138", "--r-steps", "1"], d.path());
    assert!(o.status.success());
    let (_, rows) = read_csv(&d.path().join("dispersion.csv"));
    assert!((num(&rows[0][1]) - 1.887837).abs() < 1e-5);
    assert_eq!(rows[0][2], "hat1");
}

#[test]
fn minimum_report() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["minimum"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("kappa  = 6.3213836"));
    assert!(text.contains("rayleigh_testcase = 2.0000000000000"));
}

#[test]
fn coarse_minimum_has_wider_bars() {
    let d = tempfile::tempdir().unwrap();
    let bar = |args: &[&str]| -> f64 {
        let o = run(args, d.path());
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        let line = text.lines().find(|l| l.starts_with("q ")).unwrap().to_string();
        num(line.rsplit("+- ").next().unwrap())
    };
    let fine = bar(&["minimum"]);
    let coarse = bar(&["minimum", "--scan-points", "20", "--diff-step", "0.01"]);
    assert!(coarse > fine);
}

#[test]
fn modes_table() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["modes", "--n-max", "30", "--profile", "annulus:a=1,t1=0.5,t2=1"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&d.path().join("modes.csv"));
    assert_eq!(
        header,
        ["n", "mu_series", "mu_quadrature", "rel_diff", "log_envelope", "ratio_to_envelope", "status"]
    );
    assert_eq!(rows.len(), 31);
    for row in &rows {
        assert!(num(&row[1]) >= 0.0 && num(&row[2]) >= 0.0);
        assert!(num(&row[3]) <= 1e-6);
    }
    assert!(rows[0][4].is_empty() && !rows[2][4].is_empty());
}

#[test]
fn predict_shifts_with_alpha() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    assert!(run(&["predict", "--n-max", "20", "--alpha", "0.1"], d1.path()).status.success());
    assert!(run(&["predict", "--n-max", "20", "--alpha", "0.01"], d2.path()).status.success());
    let (header, a) = read_csv(&d1.path().join("predict.csv"));
    let (_, b) = read_csv(&d2.path().join("predict.csv"));
    assert_eq!(
        header,
        ["l", "lambda_l_K", "kappa_l_alpha", "log_gap", "neg2klogk_ratio", "w_minus_env", "w_plus_env"]
    );
    assert_eq!(a.len(), 41);
    for (x, y) in a.iter().zip(&b) {
        assert!((num(&x[3]) - num(&y[3]) - 2.0 * 10f64.ln()).abs() < 1e-12);
    }
    let kappas: Vec<f64> = a.iter().map(|r| num(&r[2])).collect();
    assert!(kappas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "n_max = 3\nprofile = bump:a=1\n").unwrap();
    let o = run(&["modes", "--config", cfg.to_str().unwrap(), "--n-max", "5"], d.path());
    assert!(o.status.success());
    let (_, rows) = read_csv(&d.path().join("modes.csv"));
    assert_eq!(rows.len(), 6);
}

#[test]
fn invalid_config_exits_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["modes", "--n-max", "500"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["modes", "--profile", "square:a=1"], d.path()).status.code(), Some(2));
}

fn verify_lines(extra: &[&str]) -> (i32, Vec<String>) {
    let d = tempfile::tempdir().unwrap();
    let mut args = vec!["verify"];
    args.extend_from_slice(extra);
    let o = run(&args, d.path());
    let text = String::from_utf8(o.stdout).unwrap();
    (o.status.code().unwrap(), text.lines().map(String::from).collect())
}

#[test]
fn corrupted_p2_fails_dual_method_only() {
    let (code, lines) = verify_lines(&["--corrupt-p2", "1.01"]);
    assert_eq!(code, 1);
    let failed: Vec<&String> = lines.iter().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].contains("modes_dual_method"));
}

#[test]
fn verify_pass_set_independent_of_precision() {
    let status = |lines: &[String]| -> Vec<String> {
        lines.iter().map(|l| l.split_whitespace().take(2).collect::<Vec<_>>().join(" ")).collect()
    };
    let (c100, l100) = verify_lines(&["--precision-bits", "100"]);
    let (c160, l160) = verify_lines(&["--precision-bits", "160"]);
    assert_eq!(c100, 0);
    assert_eq!(c160, 0);
    assert_eq!(status(&l100), status(&l160));
}
