use std::process::{Command, Output};

use conformal_det::harness::ReportFile;

fn cdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdet"))
        .args(args)
        .output()
        .expect("spawn cdet")
}

fn cdet_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdet"))
        .env("CDET_THREADS", threads)
        .args(args)
        .output()
        .expect("spawn cdet")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# timestamp:"))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[test]
fn sweep_csv_has_five_rows_and_a_limit_footer() {
    let o = cdet(&[
        "sweep",
        "--dim",
        "2",
        "--n",
        "4,8,16,32,64",
        "--functional",
        "abs_det",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "n,functional,value,abs_error,nodes,converged");
    assert_eq!(body.len(), 6);
    assert!(body[1..]
        .iter()
        .all(|l| l.contains(",abs_det,") && l.ends_with(",true")));
    let footer: Vec<&str> = text.lines().filter(|l| l.starts_with("# limit:")).collect();
    assert_eq!(footer.len(), 1);

    let report = ReportFile::parse(&text).unwrap();
    let limit = report.limits[0].limit;
    assert!((limit - std::f64::consts::PI).abs() / std::f64::consts::PI < 1e-2);
    for row in &report.rows {
        let digits = format!("{:.16e}", row.value);
        assert!(text.contains(&digits));
    }
}

#[test]
fn json_output_round_trips_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("sweep.json");
    let csv = dir.path().join("sweep.csv");
    let j = json.to_str().unwrap();
    let o = cdet(&[
        "sweep",
        "--n",
        "4,8,16",
        "--functional",
        "abs_det,lp",
        "--format",
        "json",
        "--out",
        j,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let from_json = ReportFile::parse(&std::fs::read_to_string(&json).unwrap()).unwrap();

    let o = cdet(&[
        "report",
        j,
        "--format",
        "csv",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let from_csv = ReportFile::parse(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(from_json, from_csv);
    assert_eq!(from_json.rows.len(), 6);
}

#[test]
fn reruns_are_identical_modulo_timestamp_for_any_thread_count() {
    let args = [
        "sweep",
        "--dim",
        "3",
        "--n",
        "2,4,8",
        "--functional",
        "abs_det,grad_lp",
        "--seed",
        "7",
    ];
    let one = cdet_threads("1", &args);
    let four = cdet_threads("4", &args);
    let again = cdet_threads("4", &args);
    assert!(
        one.status.success() && four.status.success(),
        "{}",
        stderr(&one)
    );
    assert_eq!(
        strip_timestamp(&stdout(&one)),
        strip_timestamp(&stdout(&four))
    );
    assert_eq!(
        strip_timestamp(&stdout(&four)),
        strip_timestamp(&stdout(&again))
    );
}

#[test]
fn bad_thread_count_is_an_input_error() {
    let o = cdet_threads("zero", &["sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CDET_THREADS"));
}

#[test]
fn verify_default_passes_and_reports_every_criterion() {
    let o = cdet(&["verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ReportFile::parse(&stdout(&o)).unwrap();
    assert!(report.all_passed());
    let mut criteria: Vec<u8> = report.checks.iter().map(|c| c.criterion).collect();
    criteria.dedup();
    assert_eq!(criteria, (1..=10).collect::<Vec<u8>>());
}

#[test]
fn unattainable_tolerance_fails_verify_with_named_check() {
    let o = cdet(&["verify", "--n", "4,8,16", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("check(s) failed; first:"), "{err}");
    let report = ReportFile::parse(&stdout(&o)).unwrap();
    assert!(report.rows.iter().any(|r| !r.converged));
    assert!(!report.all_passed());
}

#[test]
fn invalid_input_is_rejected_before_computation() {
    for args in [
        vec!["verify", "--dim", "1"],
        vec!["sweep", "--n", "8,4,16"],
        vec!["sweep", "--family", "mobius"],
        vec!["sweep", "--functional", "concentration"],
        vec!["tartar", "--a", "1"],
        vec!["sweep", "--format", "xml"],
    ] {
        let o = cdet(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).starts_with("error:"), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn tartar_emits_exact_column_and_limit() {
    let o = cdet(&["tartar", "--a", "0.5", "--n", "1,5,10,20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ReportFile::parse(&stdout(&o)).unwrap();
    assert_eq!(report.header.config.dim, 2);
    for pair in report.rows.chunks(2) {
        assert_eq!(pair[0].functional, "det");
        assert_eq!(pair[1].functional, "det_exact");
        let n = pair[0].n as i32;
        let exact = -(1.0 - 2f64.powi(-2 * n)) / 4.0;
        assert_eq!(pair[1].value, exact);
        assert!((pair[0].value - exact).abs() < 1e-8);
    }
    let exact_limit = report
        .limits
        .iter()
        .find(|l| l.functional == "det_exact")
        .unwrap();
    assert_eq!(exact_limit.limit, -0.25);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "n = [2, 3, 4]\nfunctional = [\"det\"]\n").unwrap();
    let p = path.to_str().unwrap();
    let o = cdet(&["--config", p, "sweep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ReportFile::parse(&stdout(&o)).unwrap();
    assert_eq!(report.header.config.n, vec![2, 3, 4]);
    assert!(report
        .rows
        .iter()
        .all(|r| r.functional == "det" && r.value < 0.0));

    let o = cdet(&["--config", p, "sweep", "--functional", "abs_det"]);
    let report = ReportFile::parse(&stdout(&o)).unwrap();
    assert!(report
        .rows
        .iter()
        .all(|r| r.functional == "abs_det" && r.value > 0.0));

    std::fs::write(&path, "config_version = 9\n").unwrap();
    assert_eq!(cdet(&["--config", p, "sweep"]).status.code(), Some(2));
}

#[test]
fn report_summarizes_checks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("verify.csv");
    let o = cdet(&["verify", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cdet(&["report", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("`verify` report"));
    assert!(text.lines().filter(|l| l.starts_with("PASS [")).count() > 10);
}
