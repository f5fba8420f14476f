//! Configuration-driven experiment harness behind the `chlab` binary.
//!
//! A run reads a TOML [`RunConfig`], executes one study and writes
//! `results.csv`, `summary.json` and `manifest.json` (plus the trajectory
//! for `simulate`) into a fresh run directory.

mod config;
mod report;
mod run;

pub use config::{Diagnostic, ModelSection, RunConfig, StudySpec};
pub use report::{render_dir, render_summary};
pub use run::{
    exit_code, resolve, run, Manifest, RunOptions, RunOutcome, Timings, MANIFEST_FILE,
    OUTPUT_ROOT_ENV, RESULTS_FILE, SUMMARY_FILE, TRAJECTORY_BIN_FILE, TRAJECTORY_FILE,
};
