use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "scenario,protocol,beta,rho,eta,alpha2,snr_db,user,stage,ber_analytic,ber_mc,n_bits,n_errors,ci95";

fn cnoma(args: &[&str], cfg: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cnoma"));
    c.args(args);
    if let Some(p) = cfg {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(
        &p,
        r#"{
            "scenarios": ["I"],
            "protocols": [{"kind": "time_switching", "beta": 0.2}],
            "snr_db": [5, 15],
            "alpha2_grid": [0.1, 0.2],
            "beta_grid": [0, 0.3],
            "rho_grid": [0, 0.3],
            "stop": {"min_errors": 100, "max_bits": 200000}
        }"#,
    )
    .unwrap();
    p
}

fn error_json(out: &Output) -> serde_json::Value {
    let line = String::from_utf8_lossy(&out.stderr).lines().last().unwrap().to_string();
    serde_json::from_str(&line).unwrap()
}

#[test]
fn every_subcommand_writes_a_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cases = [
        ("analytic", 12),
        ("simulate", 12),
        ("compare", 12),
        ("sweep-alpha", 12),
        ("sweep-eh", 24),
        ("optimize-eh", 24),
        ("optimize-alpha", 12),
    ];
    for (cmd, rows) in cases {
        let out = cnoma(&[cmd, "--workers", "2"], Some(&cfg));
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(HEADER), "{cmd}");
        assert_eq!(lines.count(), rows, "{cmd}");
    }
}

#[test]
fn out_flag_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let csv = dir.path().join("res.csv");
    let out = cnoma(&["optimize-eh", "--seed", "9", "--out", csv.to_str().unwrap()], Some(&cfg));
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["master_seed"], 9);
    assert_eq!(m["command"], "optimize-eh");
    assert_eq!(m["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(m["points"].as_array().unwrap().len(), 4);
    assert!(m["optima"][0]["beta"].is_number());
    assert!(m["wall_clock_s"].is_number());
}

#[test]
fn failures_are_json_lines_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = cnoma(&["analytic"], Some(&dir.path().join("missing.json")));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "io");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha2": 0.8}"#).unwrap();
    let out = cnoma(&["analytic"], Some(&bad));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "config");

    let out = cnoma(&["analytic", "--workers", "0"], None);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_parameter");

    let out = cnoma(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");
}

#[test]
fn help_exits_zero() {
    let out = cnoma(&["--help"], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("optimize-alpha"));
}
