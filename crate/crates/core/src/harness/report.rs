use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use super::run::{Manifest, MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE};
use crate::error::Result;

fn num(v: &Value) -> String {
    v.as_f64().map(|x| format!("{x:.4}")).unwrap_or_else(|| "nan".into())
}

/// Plain-text rendering of a `summary.json` document.
pub fn render_summary(summary: &Value) -> String {
    let mut out = String::new();
    let get = |k: &str| summary.get(k).cloned().unwrap_or(Value::Null);
    let _ = writeln!(
        out,
        "study {}  seed {}  status {}",
        get("study").as_str().unwrap_or("?"),
        get("seed"),
        get("status").as_str().unwrap_or("?")
    );
    let _ = writeln!(out, "replicas {}  aborts {}", get("replicas"), get("aborts"));
    if let Some(checks) = get("checks").as_array() {
        for c in checks {
            let _ = writeln!(
                out,
                "  {:<13} {:<22} {}",
                c["status"].as_str().unwrap_or("?"),
                c["name"].as_str().unwrap_or("?"),
                c["detail"].as_str().unwrap_or("")
            );
        }
    }
    if let Some(slopes) = get("slopes").as_array() {
        for s in slopes {
            let _ = writeln!(
                out,
                "  slope {:<16} {} ± {}  band [{}, {}]  {}",
                s["quantity"].as_str().unwrap_or("?"),
                num(&s["slope"]),
                num(&s["stderr"]),
                num(&s["band"][0]),
                num(&s["band"][1]),
                s["status"].as_str().unwrap_or("?")
            );
        }
    }
    out
}

/// Re-renders the summary of a run directory from its artifacts.
///
/// Runs that stopped with an error have no summary; their manifest and the
/// row count of the partial results table are reported instead.
pub fn render_dir(dir: &Path) -> Result<String> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    let mut out = String::new();
    let summary_path = dir.join(SUMMARY_FILE);
    if summary_path.exists() {
        let summary: Value = serde_json::from_str(&std::fs::read_to_string(summary_path)?)?;
        out.push_str(&render_summary(&summary));
    } else {
        let _ = writeln!(
            out,
            "study {}  seed {}  status {}",
            manifest.study, manifest.seed, manifest.status
        );
    }
    let results = dir.join(RESULTS_FILE);
    if results.exists() {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(results)?;
        let rows = rdr.records().count();
        let _ = writeln!(out, "results.csv: {rows} rows");
    }
    if let Some(e) = &manifest.error {
        let _ = writeln!(out, "error: {e}");
    }
    let _ = writeln!(
        out,
        "chlab {}  exit {}  {:.2} s",
        manifest.version, manifest.exit_code, manifest.timings.total_seconds
    );
    Ok(out)
}
