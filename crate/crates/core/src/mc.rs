//! Replica scheduling and the small amount of statistics the studies need.
//!
//! Replicas are indexed; each one derives its own seed, and results are
//! collected in index order, so every aggregate is independent of the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Runs `f(i)` for `i in 0..replicas` on `jobs` worker threads (0 = rayon
/// default) and returns the results in index order.
pub fn run_replicas<T, F>(replicas: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::arg(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| (0..replicas).into_par_iter().map(&f).collect()))
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Estimate {
            mean,
            stderr,
            count: n,
        }
    }

    /// Standard error of `log(mean)` by the delta method.
    pub fn log_stderr(&self) -> f64 {
        self.stderr / self.mean.abs()
    }
}

/// Empirical quantile with linear interpolation, `q in [0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Weighted least-squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope implied by the weights.
    pub slope_stderr: f64,
}

pub fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() || x.len() < 2 {
        return Err(Error::arg("line fit needs at least two matched points"));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - mx) * (c - my))
        .sum();
    if !(sxx > 0.0) {
        return Err(Error::arg("line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        slope_stderr: (1.0 / sxx).sqrt(),
    })
}

/// Unweighted least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(weighted_line(&lx, &ly, &vec![1.0; x.len()])?.slope)
}

/// Slope of `log E[X]` against `log eps` estimated from per-replica samples
/// `samples[replica][cell]`, weighted by inverse squared log standard
/// errors. The slope's standard error comes from a delete-one jackknife
/// over replicas, which accounts for the correlation between cells that
/// share a noise path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub cells: Vec<Estimate>,
}

pub fn loglog_slope_from_replicas(x: &[f64], samples: &[Vec<f64>]) -> Result<SlopeEstimate> {
    let cells = x.len();
    let n = samples.len();
    if n < 2 {
        return Err(Error::arg("need at least two replicas"));
    }
    if samples.iter().any(|s| s.len() != cells) {
        return Err(Error::arg("ragged replica samples"));
    }
    let column = |c: usize| -> Vec<f64> { samples.iter().map(|s| s[c]).collect() };
    let estimates: Vec<Estimate> = (0..cells).map(|c| Estimate::from_samples(&column(c))).collect();
    if estimates.iter().any(|e| !(e.mean > 0.0)) {
        return Err(Error::arg("cell means must be positive for a log-log fit"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let weights: Vec<f64> = estimates
        .iter()
        .map(|e| {
            let s = e.log_stderr();
            if s > 0.0 {
                1.0 / (s * s)
            } else {
                1.0
            }
        })
        .collect();
    let fit_with = |means: &[f64]| -> Result<LineFit> {
        let ly: Vec<f64> = means.iter().map(|m| m.ln()).collect();
        weighted_line(&lx, &ly, &weights)
    };
    let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let full = fit_with(&means)?;
    let sums: Vec<f64> = means.iter().map(|m| m * n as f64).collect();
    let mut jack = Vec::with_capacity(n);
    for s in samples {
        let loo: Vec<f64> = sums
            .iter()
            .zip(s)
            .map(|(total, v)| (total - v) / (n - 1) as f64)
            .collect();
        if loo.iter().all(|m| *m > 0.0) {
            jack.push(fit_with(&loo)?.slope);
        }
    }
    let jn = jack.len() as f64;
    let jmean = jack.iter().sum::<f64>() / jn;
    let jvar = (jn - 1.0) / jn * jack.iter().map(|s| (s - jmean).powi(2)).sum::<f64>();
    Ok(SlopeEstimate {
        slope: full.slope,
        stderr: jvar.sqrt(),
        intercept: full.intercept,
        cells: estimates,
    })
}
