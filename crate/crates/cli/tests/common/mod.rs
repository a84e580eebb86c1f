#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn vxr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vxr"))
        .args(args)
        .env_remove("VXR_LOG")
        .output()
        .expect("spawn vxr")
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_shape(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Validates `path` against `schemas/<name>.v1.json`; returns the document.
pub fn validated(path: &Path, name: &str) -> Value {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{name}.v1.json"));
    let schema = read_json(&schema_path);
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let doc = read_json(path);
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{} violates {name}: {errors:#?}", path.display());
    doc
}

/// `d,n..,h,o..` for a square grid covering `[lo, hi]^d`.
pub fn grid_arg(dim: usize, lo: f64, hi: f64, h: f64) -> String {
    let n = ((hi - lo) / h).round() as usize;
    let mut parts = vec![dim.to_string()];
    parts.extend(std::iter::repeat_n(n.to_string(), dim));
    parts.push(h.to_string());
    parts.extend(std::iter::repeat_n(lo.to_string(), dim));
    parts.join(",")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
