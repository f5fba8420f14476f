//! Monte Carlo studies: convergence rate of the fluctuation remainder,
//! temporal regularity, the moderate-deviation scaling sweep and exponent
//! fits for the Green-function estimates.
//!
//! Every study returns a [`StudyReport`] holding long-format records
//! (`study, cell, quantity, estimate, stderr`) and a list of [`Check`]s,
//! each of which is `pass`, `fail` or `inconclusive`.

use serde::{Deserialize, Serialize};

mod clt;
mod holder;
mod kernel;
mod mdp;

pub use clt::{clt_study, CltConfig};
pub use holder::{holder_study, increment_band, HolderConfig, Process};
pub use kernel::{kernel_estimate_fits, KernelConfig, KernelGrid, LatticePoint};
pub use mdp::{ldp_diagnostics, mdp_scaling_sweep, target_path, LdpConfig, MdpConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl StudyStatus {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            StudyStatus::Pass
        } else {
            StudyStatus::Fail
        }
    }

    /// Fail dominates inconclusive, which dominates pass.
    pub fn combine(self, other: StudyStatus) -> StudyStatus {
        use StudyStatus::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StudyStatus::Pass => "pass",
            StudyStatus::Fail => "fail",
            StudyStatus::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for StudyStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: StudyStatus,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, status: StudyStatus, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status,
            detail: detail.into(),
        }
    }
}

/// One row of the long-format study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub study: String,
    /// Cell key, e.g. `eps=0.001` or `theta=0.25;eps=0.01`.
    pub cell: String,
    pub quantity: String,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub quantity: String,
    pub slope: f64,
    pub stderr: f64,
    pub band: (f64, f64),
    pub status: StudyStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub status: StudyStatus,
    pub checks: Vec<Check>,
    pub slopes: Vec<SlopeSummary>,
    pub records: Vec<Record>,
    pub replicas: usize,
    pub aborts: usize,
}

impl StudyReport {
    pub(crate) fn new(study: &str) -> Self {
        StudyReport {
            study: study.to_string(),
            status: StudyStatus::Pass,
            checks: Vec::new(),
            slopes: Vec::new(),
            records: Vec::new(),
            replicas: 0,
            aborts: 0,
        }
    }

    pub(crate) fn record(&mut self, cell: String, quantity: &str, estimate: f64, stderr: f64) {
        self.records.push(Record {
            study: self.study.clone(),
            cell,
            quantity: quantity.to_string(),
            estimate,
            stderr,
        });
    }

    pub(crate) fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub(crate) fn finish(mut self) -> Self {
        self.status = self
            .checks
            .iter()
            .fold(StudyStatus::Pass, |s, c| s.combine(c.status));
        self
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn find_slope(&self, quantity: &str) -> Option<&SlopeSummary> {
        self.slopes.iter().find(|s| s.quantity == quantity)
    }
}

/// Verdict for a fitted slope against a tolerance band.
///
/// Inconclusive when the standard error is at least a third of the band
/// width. Otherwise pass when `slope ± stderr` lies inside the band and fail
/// when `slope ± 2 stderr` misses it entirely; anything in between is
/// inconclusive.
pub fn slope_verdict(slope: f64, stderr: f64, band: (f64, f64)) -> StudyStatus {
    let (lo, hi) = band;
    if !slope.is_finite() || !stderr.is_finite() || stderr >= (hi - lo) / 3.0 {
        return StudyStatus::Inconclusive;
    }
    if slope - stderr >= lo && slope + stderr <= hi {
        StudyStatus::Pass
    } else if slope + 2.0 * stderr < lo || slope - 2.0 * stderr > hi {
        StudyStatus::Fail
    } else {
        StudyStatus::Inconclusive
    }
}

/// `true` when the values span at least `decades` powers of ten.
pub(crate) fn spans_decades(xs: &[f64], decades: f64) -> bool {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(0.0, f64::max);
    lo > 0.0 && (hi / lo).log10() >= decades - 1e-9
}

pub(crate) fn fmt_key(name: &str, v: f64) -> String {
    format!("{name}={v}")
}
