use serde::{Deserialize, Serialize};

use super::{fmt_key, slope_verdict, spans_decades, Check, SlopeSummary, StudyReport, StudyStatus};
use crate::error::{Error, Result};
use crate::mc::{loglog_slope, loglog_slope_from_replicas, run_replicas, Estimate};
use crate::model::ModelSpec;
use crate::norms::NormSpec;
use crate::pde::solve_u0;
use crate::spde::{generate_noise, replica_seed, solve_u_eps, solve_y};
use crate::trajectory::Trajectory;

/// Process whose temporal increments are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Process {
    UEps { eps: f64 },
    Y,
    U0,
}

impl Process {
    fn is_random(&self) -> bool {
        !matches!(self, Process::U0)
    }

    fn label(&self) -> String {
        match self {
            Process::UEps { eps } => format!("u_eps(eps={eps})"),
            Process::Y => "y".into(),
            Process::U0 => "u0".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderConfig {
    pub process: Process,
    pub replicas: usize,
    pub norms: NormSpec,
    pub seed: u64,
    pub jobs: usize,
    /// Lags in time steps.
    pub lags: Vec<usize>,
    /// Number of base instants averaged per lag.
    pub bases: usize,
}

impl HolderConfig {
    pub fn new(process: Process, replicas: usize, norms: NormSpec, seed: u64) -> Self {
        HolderConfig {
            process,
            replicas,
            norms,
            seed,
            jobs: 0,
            lags: vec![1, 2, 5, 10, 20, 50, 100],
            bases: 40,
        }
    }
}

/// Expected range of the increment-moment exponent of the fluctuation
/// field in dimension `d`. The centre of each band is `(1 - d/4)/2`.
pub fn increment_band(d: usize) -> (f64, f64) {
    match d {
        1 => (0.25, 0.45),
        2 => (0.125, 0.325),
        _ => (0.0, 0.25),
    }
}

/// Mean of `||X(t_i + lag) - X(t_i)||_p` over the shared base instants.
fn increment_means(x: &Trajectory, lags: &[usize], bases: &[usize], p: f64) -> Vec<f64> {
    let w = x.grid().weight();
    lags.iter()
        .map(|&lag| {
            let total: f64 = bases
                .iter()
                .map(|&i| {
                    let a = x.frame(i + lag);
                    let b = x.frame(i);
                    let s: f64 = a.iter().zip(b).map(|(u, v)| (u - v).abs().powf(p)).sum();
                    (s * w).powf(1.0 / p)
                })
                .sum();
            total / bases.len() as f64
        })
        .collect()
}

/// Log-log slope of `E ||X(t') - X(t)||_p` against `|t' - t|` over the
/// configured lags.
pub fn holder_study(cfg: &HolderConfig, m: &ModelSpec) -> Result<StudyReport> {
    cfg.norms.validate()?;
    let nt = m.grid.nt;
    let mut lags = cfg.lags.clone();
    lags.sort_unstable();
    lags.dedup();
    let max_lag = *lags.last().ok_or_else(|| Error::arg("no lags given"))?;
    if lags[0] == 0 || max_lag > nt {
        return Err(Error::arg(format!("lags must lie in 1..={nt}")));
    }
    let span = nt - max_lag;
    let step = (span / cfg.bases.max(1)).max(1);
    let bases: Vec<usize> = (0..=span).step_by(step).collect();

    let mut report = StudyReport::new("holder");
    let random = cfg.process.is_random();
    let replicas = if random { cfg.replicas } else { 1 };
    report.replicas = replicas;
    let lag_f: Vec<f64> = lags.iter().map(|&l| l as f64).collect();
    let design_ok = spans_decades(&lag_f, 2.0)
        && 2 * max_lag <= nt
        && (!random || replicas >= 2);
    report.check(Check::new(
        "design",
        if design_ok {
            StudyStatus::Pass
        } else {
            StudyStatus::Inconclusive
        },
        format!("lags {}..{} steps of nt = {nt}, {replicas} replicas", lags[0], max_lag),
    ));
    if let Err(e) = cfg.norms.check_holder_band(m.grid.d, m.gamma) {
        report.check(Check::new("alpha-band", StudyStatus::Fail, e.to_string()));
    }

    let u0 = solve_u0(m)?;
    let p = cfg.norms.p;
    let samples: Vec<Option<Vec<f64>>> = match cfg.process {
        Process::U0 => vec![Some(increment_means(&u0, &lags, &bases, p))],
        Process::Y => run_replicas(replicas, cfg.jobs, |r| {
            let noise = generate_noise(replica_seed(cfg.seed, r as u64), &m.grid);
            let y = solve_y(&noise, &u0, m).ok()?;
            Some(increment_means(&y, &lags, &bases, p))
        })?,
        Process::UEps { eps } => run_replicas(replicas, cfg.jobs, |r| {
            let noise = generate_noise(replica_seed(cfg.seed, r as u64), &m.grid);
            let u = solve_u_eps(eps, &noise, m).ok()?;
            Some(increment_means(&u, &lags, &bases, p))
        })?,
    };
    let aborts = samples.iter().filter(|s| s.is_none()).count();
    report.aborts = aborts;
    report.check(Check::new(
        "aborts",
        StudyStatus::from_bool(aborts == 0),
        format!("{aborts} blown-up replicas"),
    ));
    let complete: Vec<Vec<f64>> = samples.into_iter().flatten().collect();

    let dt = m.grid.dt();
    let taus: Vec<f64> = lags.iter().map(|&l| l as f64 * dt).collect();
    for (c, &tau) in taus.iter().enumerate() {
        let col: Vec<f64> = complete.iter().map(|r| r[c]).collect();
        let e = Estimate::from_samples(&col);
        report.record(fmt_key("lag", tau), "increment_lp", e.mean, if random { e.stderr } else { 0.0 });
    }

    let band = if random {
        increment_band(m.grid.d)
    } else {
        (0.9, 1.1)
    };
    let fit = if random {
        loglog_slope_from_replicas(&taus, &complete).map(|f| (f.slope, f.stderr))
    } else {
        complete
            .first()
            .ok_or_else(|| Error::Study("deterministic path blew up".into()))
            .and_then(|means| loglog_slope(&taus, means))
            .map(|s| (s, 0.0))
    };
    let (slope, stderr, status, detail) = match fit {
        Ok((slope, stderr)) => (
            slope,
            stderr,
            if design_ok {
                slope_verdict(slope, stderr, band)
            } else {
                StudyStatus::Inconclusive
            },
            format!(
                "{}: exponent {slope:.4} ± {stderr:.4}, band [{:.3}, {:.3}], admissible alpha < {:.4}",
                cfg.process.label(),
                band.0,
                band.1,
                0.5 * (1.0 - m.grid.d as f64 / 4.0)
            ),
        ),
        Err(e) => (f64::NAN, f64::NAN, StudyStatus::Inconclusive, e.to_string()),
    };
    report.record("fit".into(), "slope_increment_lp", slope, stderr);
    report.slopes.push(SlopeSummary {
        quantity: "increment_lp".into(),
        slope,
        stderr,
        band,
        status,
    });
    report.check(Check::new("exponent", status, detail));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn linear_path_increments() {
        let g = GridSpec::new(1, 8, 1.0, 10).unwrap();
        let x = Trajectory::from_fn(g, |t, _| t).unwrap();
        let means = increment_means(&x, &[1, 2], &[0, 3], 2.0);
        let unit = std::f64::consts::PI.sqrt();
        assert!((means[0] - 0.1 * unit).abs() < 1e-12);
        assert!((means[1] - 0.2 * unit).abs() < 1e-12);
    }

    #[test]
    fn smooth_reference_path_has_unit_exponent() {
        let g = GridSpec::new(1, 16, 0.1, 400).unwrap();
        let m = ModelSpec::default_for(g).unwrap();
        let cfg = HolderConfig::new(Process::U0, 1, NormSpec::default(), 0);
        let r = holder_study(&cfg, &m).unwrap();
        let s = r.find_slope("increment_lp").unwrap();
        assert!((s.slope - 1.0).abs() < 0.05, "{s:?}");
        assert_eq!(r.status, StudyStatus::Pass);
    }

    #[test]
    fn lags_beyond_horizon_rejected() {
        let g = GridSpec::new(1, 8, 0.1, 50).unwrap();
        let m = ModelSpec::default_for(g).unwrap();
        let mut cfg = HolderConfig::new(Process::Y, 4, NormSpec::default(), 0);
        cfg.lags = vec![1, 100];
        assert!(holder_study(&cfg, &m).is_err());
    }
}
