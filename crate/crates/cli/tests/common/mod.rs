#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Runs the built binary with the fixture data root and a scratch runs root.
pub fn scarn(args: &[&str], runs: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scarn"))
        .args(args)
        .env("SCARN_DATA_DIR", fixtures())
        .env("SCARN_RUNS_DIR", runs)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a train config for the fixture dataset and returns its path.
pub fn train_config(dir: &Path, name: &str, kind: &str, epochs: usize, seeds: &[u64]) -> PathBuf {
    let cfg = serde_json::json!({
        "data": { "dataset": "mail" },
        "model": {
            "kind": kind,
            "embed_dim": 100,
            "max_len": 20,
            "num_classes": 2,
            "filters": 8,
            "hidden": 6,
            "windows": [1, 2, 3],
            "mlp_hidden": 8
        },
        "train": { "epochs": epochs, "batch_size": 16, "lr": 0.003 },
        "seeds": seeds
    });
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    p
}

pub fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Column of a CSV by header name.
pub fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}
