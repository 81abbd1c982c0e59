use std::process::{Command, Output};

use serde_json::Value;

fn sepprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepprob")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn conjecture_values() {
    for (alpha, exact) in [("1", 8.0 / 33.0), ("0.5", 0.453125), ("2", 26.0 / 323.0)] {
        let doc = json(&sepprob(&["conjecture", "--alpha", alpha]));
        assert!((doc["value"].as_f64().unwrap() - exact).abs() < 1e-10);
        assert!(doc["tail_bound"].as_f64().unwrap() < 1e-12);
        assert!(doc["terms_used"].as_u64().unwrap() > 0);
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| sepprob(args).status.code();
    assert_eq!(code(&["conjecture", "--alpha", "-1"]), Some(1));
    assert_eq!(code(&["conjecture", "--alpha", "1", "--rel-tol", "0.1"]), Some(1));
    assert_eq!(code(&["estimate", "--case", "qubit", "--samples", "0"]), Some(1));
    assert_eq!(code(&["estimate", "--case", "qutrit", "--samples", "10"]), Some(1));
    assert_eq!(code(&["estimate", "--case", "qubit", "--samples", "10", "--workers", "0"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["--version"]), Some(0));
    assert_eq!(code(&[]), Some(1));
    // 10 quaterbit draws almost surely contain no positive state
    assert_eq!(code(&["estimate", "--case", "quaterbit", "--samples", "10"]), Some(2));
}

#[test]
fn estimate_document_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("result.json");
    let raw = sepprob(&[
        "estimate", "--case", "rebit", "--samples", "200000", "--seed", "3", "--workers", "2", "--out",
        out.to_str().unwrap(),
    ]);
    let doc = json(&raw);
    let text = String::from_utf8(raw.stdout).unwrap();
    let mut keys: Vec<(usize, &str)> = doc
        .as_object()
        .unwrap()
        .keys()
        .map(|k| (text.find(&format!("\"{k}\":")).unwrap(), k.as_str()))
        .collect();
    keys.sort();
    assert_eq!(
        keys.iter().map(|(_, k)| *k).collect::<Vec<_>>(),
        [
            "format", "format_version", "tool_version", "case", "alpha", "n_total", "n_positive", "n_sep",
            "p_hat", "std_err", "p_conjectured", "z", "seed", "chunk_size", "workers", "wall_time_s",
        ]
    );
    assert_eq!(doc["case"], "rebit");
    assert_eq!(doc["alpha"], 0.5);
    assert_eq!(doc["n_total"], 200000);
    let p = doc["p_hat"].as_f64().unwrap();
    let se = doc["std_err"].as_f64().unwrap();
    let n_pos = doc["n_positive"].as_f64().unwrap();
    assert_eq!(p, doc["n_sep"].as_f64().unwrap() / n_pos);
    assert!((se - (p * (1.0 - p) / n_pos).sqrt()).abs() < 1e-15);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(written["n_sep"], doc["n_sep"]);
}

#[test]
fn workers_do_not_change_the_tally() {
    let run = |w: &str| {
        json(&sepprob(&[
            "estimate", "--case", "rebit", "--samples", "120000", "--chunk-size", "7000", "--workers", w,
        ]))
    };
    let a = run("1");
    let b = run("3");
    for k in ["n_total", "n_positive", "n_sep", "p_hat"] {
        assert_eq!(a[k], b[k], "{k}");
    }
}

#[test]
fn foreign_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("c");
    let ckpt = ckpt.to_str().unwrap();
    let base = ["estimate", "--case", "rebit", "--samples", "50000", "--chunk-size", "10000"];
    let mut first = base.to_vec();
    first.extend(["--seed", "1", "--checkpoint", ckpt, "--max-chunks", "2"]);
    assert_eq!(json(&sepprob(&first))["status"], "suspended");
    let mut other = base.to_vec();
    other.extend(["--seed", "2", "--checkpoint", ckpt]);
    let out = sepprob(&other);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn selftest_passes() {
    let out = sepprob(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("states.pt_spectrum"));
    assert!(!text.contains("FAIL"));
}
