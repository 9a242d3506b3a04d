use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn steplab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_steplab"));
    cmd.args(args).env_remove("STEPLAB_OUT");
    if let Some(root) = env_out {
        cmd.env("STEPLAB_OUT", root);
    }
    cmd.output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn rado_build_writes_73_points() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rado");
    let o = steplab(&["rado-build", "--stages", "2", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = fs::read_to_string(out.join("rado.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 73);
    let r = report(&out);
    assert_eq!(r["results"]["points"], 73);
    assert_eq!(r["schema"], "steplab.report/1");
    assert_eq!(r["side_outputs"][0], "rado.jsonl");
}

#[test]
fn back_and_forth_writes_transcript_and_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bf");
    let o = steplab(
        &["back-and-forth", "--stages", "2", "--p", "1/2", "--seeds", "1,2", "--max-steps", "10", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"]["all_verified"], true);
    assert!(r["results"]["steps_achieved"].as_u64().unwrap() >= 3);
    assert_eq!(r["results"]["verify"]["property1"]["pass"], true);
    let transcript = fs::read_to_string(out.join("transcript.jsonl")).unwrap();
    assert_eq!(transcript.lines().count() as u64, r["results"]["steps_attempted"].as_u64().unwrap());
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("root");
    for (name, body) in [
        ("decimal.toml", "p = 0.5\n"),
        ("unknown.toml", "bogus = 1\n"),
        ("syntax.toml", "p = \n"),
        ("version.toml", "schema_version = \"9\"\n"),
        ("other.toml", "command = \"rado-build\"\n"),
    ] {
        let cfg = tmp.path().join(name);
        fs::write(&cfg, body).unwrap();
        let o = steplab(&["dichotomy", "--config", cfg.to_str().unwrap()], Some(&root));
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!root.exists(), "{name} left outputs behind");
    }
    let o = steplab(&["dichotomy", "--p", "0.5"], Some(&root));
    assert_eq!(o.status.code(), Some(2));
    let o = steplab(&["suite", "--filter", "no-such-check"], Some(&root));
    assert_eq!(o.status.code(), Some(2));
    assert!(!root.exists());
}

#[test]
fn invariant_failure_exits_1_and_still_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = steplab(&["dichotomy", "--grid-step", "1/20", "--p", "1"], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(1));
    let r = report(&tmp.path().join("dichotomy"));
    assert_eq!(r["passed"], false);
    assert_eq!(r["checks"]["no_violations_at_p_one"], false);
    assert_eq!(r["checks"]["graph_close_implies_norm_close"], true);
    assert!(tmp.path().join("dichotomy/dichotomy.csv").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "schema_version = \"1\"\ngrid_step = \"1/5\"\np = \"1/2\"\nseed = 3\n").unwrap();
    let out = tmp.path().join("d");
    let o = steplab(&["dichotomy", "--config", cfg.to_str().unwrap(), "--seed", "8", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let c = &report(&out)["config"];
    assert_eq!(c["seed"], 8);
    assert_eq!(c["grid_step"], "1/5");
    assert_eq!(c["p"], "1/2");
}

#[test]
fn config_out_key_and_env_root() {
    let tmp = tempfile::tempdir().unwrap();
    let o = steplab(&["forced-coordinate", "--n-max", "3"], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("forced-coordinate/report.json").exists());

    let cfg = tmp.path().join("c.toml");
    let target = tmp.path().join("elsewhere");
    fs::write(&cfg, format!("out = {:?}\nn_max = 2\n", target.to_str().unwrap())).unwrap();
    let o = steplab(&["forced-coordinate", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&target)["results"]["coordinates"].as_array().unwrap().len(), 2);
}

#[test]
fn graph_exports() {
    let tmp = tempfile::tempdir().unwrap();
    for fmt in ["dot", "graphml", "json"] {
        let o = steplab(&["sample-graph", "--format", fmt, "--seed", "2"], Some(tmp.path()));
        assert_eq!(o.status.code(), Some(0));
        let text = fs::read_to_string(tmp.path().join(format!("sample-graph/graph.{fmt}"))).unwrap();
        assert!(!text.is_empty());
    }
}

#[test]
fn sweep_runs_each_config_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.toml");
    let b = tmp.path().join("b.toml");
    fs::write(&a, "command = \"rado-build\"\nstages = 1\n").unwrap();
    fs::write(&b, "command = \"forced-coordinate\"\nn-max = 4\n").unwrap();
    let out = tmp.path().join("sw");
    let o = steplab(&["sweep", a.to_str().unwrap(), b.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out.join("000-rado-build"))["results"]["points"], 1);
    assert_eq!(report(&out.join("001-forced-coordinate"))["command"], "forced-coordinate");
    assert_eq!(report(&out)["results"]["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn every_subcommand_has_descriptive_help() {
    let o = steplab(&["--help"], None);
    let top = String::from_utf8(o.stdout).unwrap();
    for cmd in [
        "rado-build", "sample-graph", "back-and-forth", "dichotomy", "check-step-iso", "enumerate-step-iso",
        "c0-counterexample", "forced-coordinate", "l1-balls", "two-unit", "strongly-extreme", "davis-gauge",
        "davis-table", "no-repeat-gen", "suite", "sweep",
    ] {
        assert!(top.contains(cmd), "{cmd} missing from --help");
        let o = steplab(&[cmd, "--help"], None);
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.lines().next().unwrap().len() > 20, "{cmd}: {text}");
    }
}

#[test]
fn check_step_iso_reports_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let o = steplab(&["check-step-iso", "--points", "0;3/2", "--images", "0;1/2", "--norm", "l1"], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(1));
    let r = report(&tmp.path().join("check-step-iso"));
    assert_eq!(r["results"]["result"]["status"], "violation");
}
