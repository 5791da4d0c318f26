use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flab_cli::{registry, RunReport};

fn flab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_flab"));
    c.env_remove("FLAB_SEED");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    flab().arg("run").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

#[test]
fn bundled_exact_configs_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["space_a_full.json", "counterexample_a2.json", "staggered_random_time.json"] {
        let out = dir.path().join("r.json");
        let o = run(&config(name), &out, &[]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let r = RunReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert!(r.all_pass());
        assert_eq!(r.summary.total, r.checks.len());
    }
}

#[test]
fn counterexample_passes_by_failing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(run(&config("counterexample_a2.json"), &out, &[]).status.code(), Some(0));
    let r = RunReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let orth: Vec<_> = r.checks.iter().filter(|c| c.name.contains("orthogonal in G")).collect();
    assert!(!orth.is_empty());
    for c in orth {
        assert_eq!((c.expected.as_str(), c.observed.as_str(), c.pass), ("fails", "fails", true));
        assert!(c.witness.is_some());
        assert!((c.evidence["common_compensator_jump"].0 - 0.15).abs() < 1e-12);
    }
}

#[test]
fn failed_check_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let suite = &registry().iter().find(|s| s.kind == flab_cli::SuiteKind::OrthogonalityCounterexample).unwrap().name;
    std::fs::write(&cfg, format!(r#"{{"engine":"exact","fixture":"space_a","suites":["{suite}"]}}"#)).unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = run(&cfg, &out, &["--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = RunReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.summary.failed > 0);
    assert!(r.checks.iter().filter(|c| !c.pass).all(|c| c.witness.is_some()));
    let rows = csv::Reader::from_path(&csv).unwrap().records().count();
    assert_eq!(rows, r.checks.len());
}

#[test]
fn invalid_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("r.json");
    for body in [
        "{not json",
        r#"{"engine":"exact","fixture":"space_a","suites":["nope"]}"#,
        r#"{"engine":"exact","fixture":"space_a","suites":[],"extra":1}"#,
        r#"{"engine":"mc","suites":["mc_avoidance"],"exact":{"samples":3}}"#,
    ] {
        std::fs::write(&cfg, body).unwrap();
        let o = run(&cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(!out.exists());
    }
    assert_eq!(run(&dir.path().join("missing.json"), &out, &[]).status.code(), Some(2));
}

#[test]
fn seed_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    let cfg = config("counterexample_a2.json");
    flab().env("FLAB_SEED", "123").args(["run"]).arg(&cfg).arg("--out").arg(&a).output().unwrap();
    flab().env("FLAB_SEED", "123").args(["run"]).arg(&cfg).arg("--out").arg(&b).args(["--seed", "5"]).output().unwrap();
    flab().args(["run"]).arg(&cfg).arg("--out").arg(&c).output().unwrap();
    let seed = |p: &Path| RunReport::from_json(&std::fs::read_to_string(p).unwrap()).unwrap().config.seed;
    assert_eq!((seed(&a), seed(&b), seed(&c)), (Some(123), Some(5), Some(7)));
    let o = flab().env("FLAB_SEED", "abc").arg("run").arg(&cfg).arg("--out").arg(&a).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stdout_report_is_byte_stable() {
    let cfg = config("space_a_full.json");
    let a = flab().arg("run").arg(&cfg).output().unwrap();
    let b = flab().arg("run").arg(&cfg).args(["--parallel", "3"]).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(RunReport::from_json(&text).unwrap().to_json(), text);
}

#[test]
fn suites_and_describe() {
    let o = flab().arg("suites").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let listing = String::from_utf8(o.stdout).unwrap();
    assert!(listing.lines().count() >= 12);
    for s in registry() {
        assert!(listing.contains(&s.name));
        let d = flab().args(["describe", &s.name]).output().unwrap();
        assert_eq!(d.status.code(), Some(0));
        assert!(String::from_utf8(d.stdout).unwrap().contains(&s.anchor));
    }
    assert_eq!(flab().args(["describe", "nope"]).output().unwrap().status.code(), Some(2));
}
