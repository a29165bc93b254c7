use std::path::Path;
use std::process::Command;

use hardy_cli::{read_records, run, RunRecord, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK};

fn lab(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["hardy-lab".to_string(), "--out".to_string(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(argv)
}

fn last(out: &Path) -> RunRecord {
    read_records(out).unwrap().pop().unwrap()
}

fn num(r: &RunRecord, key: &str) -> f64 {
    r.results[key].as_f64().unwrap_or_else(|| panic!("{key} is not a number: {:?}", r.results[key]))
}

#[test]
fn constants_record() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["constants", "--dim", "3", "--sigma", "1"]), EXIT_OK);
    let r = last(dir.path());
    assert_eq!(r.command, "constants");
    assert!((num(&r, "hardy_sobolev_constant") - 2.894405018).abs() < 1e-8);
    assert_eq!(num(&r, "hardy_constant"), 0.25);
    assert!(r.is_traceable());
    assert!(r.provenance.values().all(|p| p.starts_with("anchor:") || p == "artifact-derived"));
}

#[test]
fn usage_and_domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["solve", "--sigma", "3"]), EXIT_ERROR);
    assert_eq!(lab(dir.path(), &["constants", "--dim", "3", "--bogus", "1"]), EXIT_ERROR);
    assert_eq!(lab(dir.path(), &["constants", "--dim", "2"]), EXIT_ERROR);
    assert_eq!(lab(dir.path(), &["frobnicate"]), EXIT_ERROR);
    assert_eq!(lab(dir.path(), &["solve", "--manifold", "torus"]), EXIT_ERROR);
    assert_eq!(lab(dir.path(), &["mu-curve", "--rmax", "4"]), EXIT_ERROR);
    assert!(!dir.path().join("records.ndjson").exists());
}

#[test]
fn theorem_check_confirms_on_s4() {
    let dir = tempfile::tempdir().unwrap();
    let code = lab(
        dir.path(),
        &["theorem2-check", "--manifold", "sphere", "--radius", "1", "--dim", "4", "--lambda", "-1", "--sigma", "1"],
    );
    assert_eq!(code, EXIT_OK);
    let r = last(dir.path());
    assert_eq!(r.results["verdict"], "CONFIRMS_THEOREM");
    assert!(num(&r, "margin") > 5.0 * num(&r, "error_estimate"));
}

#[test]
fn flat_ball_check_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let code = lab(
        dir.path(),
        &["theorem2-check", "--manifold", "euclidean", "--dim", "4", "--lambda", "0", "--sigma", "1", "--cells", "32"],
    );
    assert_eq!(code, EXIT_INCONCLUSIVE);
    assert_eq!(last(dir.path()).results["verdict"], "INCONCLUSIVE");
}

#[test]
fn tables_and_records_append() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["mu-curve", "--dim", "3", "--rmax", "pi", "--steps", "4", "--lambda-min", "-1", "--lambda-max", "0.5"];
    assert_eq!(lab(dir.path(), &args), EXIT_OK);
    assert_eq!(lab(dir.path(), &args), EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("mu_curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "run_id,lambda,mu,concentration");
    assert_eq!(lines.len(), 1 + 2 * 4);
    assert_eq!(lines.iter().filter(|l| l.starts_with("run_id")).count(), 1);
    let recs = read_records(dir.path()).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].results, recs[1].results);
    assert_eq!(recs[0].results["strictly_decreasing"], true);
}

#[test]
fn identical_arguments_give_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve", "--dim", "4", "--sigma", "1", "--lambda", "-1", "--cells", "32"];
    assert_eq!(lab(dir.path(), &args), EXIT_OK);
    assert_eq!(lab(dir.path(), &args), EXIT_OK);
    let recs = read_records(dir.path()).unwrap();
    assert_eq!(recs[0].results, recs[1].results);
    assert_eq!(recs[0].parameters, recs[1].parameters);
    let profile = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let rows: Vec<&str> = profile.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert_eq!(rows[..rows.len() / 2], rows[rows.len() / 2..]);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\ndim = 4\nsigma = 1\n").unwrap();
    let cfg = cfg.display().to_string();
    assert_eq!(lab(dir.path(), &["--config", &cfg, "constants"]), EXIT_OK);
    let r = last(dir.path());
    assert_eq!(r.parameters["dim"], 4);
    assert_eq!(lab(dir.path(), &["--config", &cfg, "constants", "--dim", "5"]), EXIT_OK);
    let r = last(dir.path());
    assert_eq!(r.parameters["dim"], 5);
    assert_eq!(r.parameters["sigma"], 1.0);
    assert_eq!(lab(dir.path(), &["--config", "/nonexistent/cfg", "constants"]), EXIT_ERROR);
}

#[test]
fn pi_token_reaches_the_antipode() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["solve", "--dim", "3", "--rmax", "pi", "--lambda", "0"]), EXIT_OK);
    let r = last(dir.path());
    assert_eq!(r.parameters["rmax"], std::f64::consts::PI);
    assert!(num(&r, "mu").abs() < 1e-8);
}

#[test]
fn verify_writes_one_record_per_check() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["verify", "--suite", "bubble"]), EXIT_OK);
    assert_eq!(lab(dir.path(), &["verify", "--suite", "constants"]), EXIT_ERROR);
    let recs = read_records(dir.path()).unwrap();
    assert_eq!(recs.len(), 1 + 4);
    assert!(recs.iter().all(|r| r.command == "verify" && r.is_traceable()));
    let failed: Vec<&str> =
        recs.iter().filter(|r| r.results["pass"] == false).map(|r| r.parameters["check"].as_str().unwrap()).collect();
    assert_eq!(failed, ["sigma_1.99_near_hardy"]);
    assert_eq!(lab(dir.path(), &["verify", "--suite", "nope"]), EXIT_ERROR);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_hardy-lab"))
        .args(["constants", "--dim", "5"])
        .env("HARDY_LAB_OUT", dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    assert_eq!(last(dir.path()).parameters["dim"], 5);
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(lab(&blocker.join("sub"), &["constants", "--dim", "3"]), EXIT_ERROR);
}
