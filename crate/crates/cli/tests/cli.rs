use std::path::Path;
use std::process::{Command, Output};

use cns_cli::artifacts::{Manifest, MANIFEST};
use cns_cli::export::LedgerTable;
use cns_core::carleman::EnstrophyLedger;

fn cns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cns")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest_bytes(root: &Path) -> Vec<u8> {
    std::fs::read(root.join(MANIFEST)).unwrap()
}

#[test]
fn zero_run_writes_a_consistent_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let o = cns(&["simulate", "--out", path(&out), "--n", "16", "--initial_data", "zero", "--reports", "residual,energy,curl"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::load(&out).unwrap();
    assert!(m.mismatches(&out).is_empty());
    for f in ["config.cfg", "trajectory/diagnostics.csv", "reports/index.json", "reports/residual.json"] {
        assert!(m.files.iter().any(|e| e.path == f), "missing {f}");
    }
    std::fs::write(out.join("config.cfg"), "tampered").unwrap();
    assert_eq!(m.mismatches(&out), vec!["config.cfg".to_string()]);
}

#[test]
fn same_seed_gives_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        let o = cns(&[
            "simulate", "--out", path(out), "--n", "16", "--initial_data", "random", "--seed", "9", "--t_end", "0.03",
            "--reports", "residual,energy,ledger_global",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    args(&a);
    args(&b);
    assert_eq!(manifest_bytes(&a), manifest_bytes(&b));
}

#[test]
fn halt_exits_3_and_records_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("halt");
    let o = cns(&["simulate", "--out", path(&out), "--n", "16", "--amplitude", "400", "--dt", "0.05", "--t_end", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("halt.json").exists());
    let m = Manifest::load(&out).unwrap();
    assert!(m.files.iter().any(|e| e.path == "halt.json"));
    assert!(m.mismatches(&out).is_empty());
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = Command::new(env!("CARGO_BIN_EXE_cns"))
        .args(["verify", "--suite", "lp"])
        .env("CNS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n = 16\nwarp = 9\n").unwrap();
    let o = cns(&["simulate", "--out", path(&out), "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = cns(&["simulate", "--out", path(&out), "--dt", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cns(&["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let o = cns(&["verify", "--suite", "all", "--rng-seed", "3"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().count() >= 16 && text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n = 16\ndt = 0.02\nt_end = 0.04\nreports = none\n").unwrap();
    let out = dir.path().join("o");
    let o = cns(&["simulate", "--out", path(&out), "--config", path(&cfg), "--dt", "0.01"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut back = cns_cli::config::RunConfig::default();
    back.merge_text(&std::fs::read_to_string(out.join("config.cfg")).unwrap(), &cfg).unwrap();
    assert_eq!((back.n, back.dt, back.t_end), (16, 0.01, 0.04));
}

#[test]
fn taylor_green_run_exports_trajectory_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tg");
    let o = cns(&["simulate", "--out", path(&out), "--n", "32", "--t_end", "0.05", "--reports", "ledger_global,energy"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = out.join("trajectory");
    assert_eq!(std::fs::read_dir(&traj).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "cns")).count(), 6);
    let csv = dir.path().join("ledger.csv");
    let o = cns(&["export", "--traj", path(&traj), "--what", "ledger_global", "--out", path(&csv), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = LedgerTable::parse(&std::fs::read_to_string(&csv).unwrap(), "ledger").unwrap();
    let json: EnstrophyLedger = cns_cli::artifacts::import_json(&csv.with_extension("json")).unwrap();
    assert_eq!(table.rows.len(), json.times.len());
    assert_eq!(table, cns_cli::export::ledger_table(&json));
    let diag = dir.path().join("diag.csv");
    let o = cns(&["export", "--traj", path(&traj), "--what", "diagnostics", "--out", path(&diag)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&diag).unwrap().lines().count(), 7);
}
