use serde::{Deserialize, Serialize};

use super::{fmt_key, slope_verdict, spans_decades, Check, SlopeSummary, StudyReport, StudyStatus};
use crate::error::{Error, Result};
use crate::mc::{loglog_slope_from_replicas, run_replicas, Estimate};
use crate::model::ModelSpec;
use crate::norms::{holder_norm, lp_norm_values, sup_lp, NormSpec};
use crate::pde::solve_u0;
use crate::spde::{fluctuation_remainder, generate_noise, replica_seed, solve_u_eps, solve_y};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub eps: Vec<f64>,
    pub replicas: usize,
    pub norms: NormSpec,
    /// Moment order of the estimated `E ||V^eps||^q`. Defaults to `norms.q`
    /// but may be set below `p` (first moments of an `L^2` distance).
    pub moment: f64,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    /// Frames kept (by uniform subsampling) for the Hölder surrogate.
    pub holder_frames: usize,
}

impl CltConfig {
    pub fn new(eps: Vec<f64>, replicas: usize, norms: NormSpec, seed: u64) -> Self {
        CltConfig {
            eps,
            replicas,
            norms,
            moment: norms.q,
            seed,
            jobs: 0,
            holder_frames: 200,
        }
    }
}

/// Slope band for `E ||V^eps||^q` against `eps`: `q/2 ± (0.1 + 0.05 q)`.
pub fn clt_band(q: f64) -> (f64, f64) {
    let half = 0.1 + 0.05 * q;
    (q / 2.0 - half, q / 2.0 + half)
}

#[derive(Debug, Clone, Copy)]
struct CellSample {
    sup: f64,
    holder: f64,
    terminal: f64,
}

type Metric = (&'static str, fn(&CellSample) -> f64);

/// Smallest divisor of `nt` that keeps at most `frames` frames.
pub(crate) fn holder_stride(nt: usize, frames: usize) -> usize {
    let min = nt.div_ceil(frames.max(2) - 1).max(1);
    (min..=nt).find(|s| nt.is_multiple_of(*s)).unwrap_or(nt)
}

/// Coupled-path estimate of `E ||V^eps||^q` for each `eps`, where
/// `V^eps = (u^eps - u0)/sqrt(eps) - Y`, and the log-log slope in `eps`.
///
/// The asserted metric is `sup_t ||V^eps(t)||_p`; the Hölder surrogate on a
/// subsampled time grid and the terminal-time norm are reported alongside.
pub fn clt_study(cfg: &CltConfig, m: &ModelSpec) -> Result<StudyReport> {
    let ns = cfg.norms;
    ns.validate()?;
    let q = cfg.moment;
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::arg(format!("moment order {q} must be positive")));
    }
    let mut report = StudyReport::new("clt");
    report.replicas = cfg.replicas;

    let design_ok = cfg.replicas >= 100 && cfg.eps.len() >= 4 && spans_decades(&cfg.eps, 2.0);
    report.check(Check::new(
        "design",
        if design_ok {
            StudyStatus::Pass
        } else {
            StudyStatus::Inconclusive
        },
        format!(
            "{} replicas, {} eps values; need >= 100 replicas and >= 4 values over >= 2 decades",
            cfg.replicas,
            cfg.eps.len()
        ),
    ));

    let u0 = solve_u0(m)?;
    let stride = holder_stride(m.grid.nt, cfg.holder_frames);
    let per_replica = run_replicas(cfg.replicas, cfg.jobs, |r| {
        let noise = generate_noise(replica_seed(cfg.seed, r as u64), &m.grid);
        let y = match solve_y(&noise, &u0, m) {
            Ok(y) => y,
            Err(_) => return (vec![None; cfg.eps.len()], f64::NAN),
        };
        let y_sup = sup_lp(&y, ns.p);
        let cells = cfg
            .eps
            .iter()
            .map(|&eps| {
                let u = solve_u_eps(eps, &noise, m).ok()?;
                let v = fluctuation_remainder(eps, &u, &u0, &y).ok()?;
                let sub = v.subsample(stride).ok()?;
                let w = v.grid().weight();
                Some(CellSample {
                    sup: sup_lp(&v, ns.p).powf(q),
                    holder: holder_norm(&sub, &ns).ok()?.powf(q),
                    terminal: lp_norm_values(v.frame(v.grid().nt), w, ns.p).powf(q),
                })
            })
            .collect::<Vec<_>>();
        (cells, y_sup)
    })?;

    let mut aborts_total = 0;
    for (c, &eps) in cfg.eps.iter().enumerate() {
        let aborts = per_replica.iter().filter(|(cells, _)| cells[c].is_none()).count();
        aborts_total += aborts;
        report.record(fmt_key("eps", eps), "aborts", aborts as f64, 0.0);
    }
    report.aborts = aborts_total;
    report.check(Check::new(
        "aborts",
        StudyStatus::from_bool(aborts_total == 0),
        format!("{aborts_total} blown-up (replica, eps) cells"),
    ));

    let complete: Vec<Vec<CellSample>> = per_replica
        .iter()
        .filter_map(|(cells, _)| cells.iter().copied().collect::<Option<Vec<_>>>())
        .collect();
    let y_sups: Vec<f64> = per_replica.iter().map(|r| r.1).filter(|v| v.is_finite()).collect();
    let ys = Estimate::from_samples(&y_sups);
    report.record("limit".into(), "y_sup_lp", ys.mean, ys.stderr);

    let metrics: [Metric; 3] = [
        ("sup_lp_q", |s| s.sup),
        ("holder_q", |s| s.holder),
        ("terminal_lp_q", |s| s.terminal),
    ];
    let band = clt_band(q);
    for (name, get) in metrics {
        let samples: Vec<Vec<f64>> = complete.iter().map(|r| r.iter().map(get).collect()).collect();
        for (c, &eps) in cfg.eps.iter().enumerate() {
            let col: Vec<f64> = samples.iter().map(|r| r[c]).collect();
            let e = Estimate::from_samples(&col);
            report.record(fmt_key("eps", eps), name, e.mean, e.stderr);
        }
        let machine_zero = samples.iter().flatten().all(|v| v.abs().powf(1.0 / q) < 1e-9);
        let (slope, stderr, status, detail) = if machine_zero {
            (
                f64::NAN,
                f64::NAN,
                StudyStatus::Inconclusive,
                "all estimates at machine zero; no rate to fit".to_string(),
            )
        } else {
            match loglog_slope_from_replicas(&cfg.eps, &samples) {
                Ok(fit) => {
                    let status = if design_ok {
                        slope_verdict(fit.slope, fit.stderr, band)
                    } else {
                        StudyStatus::Inconclusive
                    };
                    (
                        fit.slope,
                        fit.stderr,
                        status,
                        format!(
                            "slope {:.4} ± {:.4}, band [{:.2}, {:.2}]",
                            fit.slope, fit.stderr, band.0, band.1
                        ),
                    )
                }
                Err(e) => (f64::NAN, f64::NAN, StudyStatus::Inconclusive, e.to_string()),
            }
        };
        report.record("fit".into(), &format!("slope_{name}"), slope, stderr);
        report.slopes.push(SlopeSummary {
            quantity: name.to_string(),
            slope,
            stderr,
            band,
            status,
        });
        if name == "sup_lp_q" {
            report.check(Check::new("slope", status, detail));
        }
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::{Cubic, InitialDatum, Sigma};

    #[test]
    fn strides_divide_nt() {
        for (nt, frames) in [(2000, 200), (40, 200), (97, 10), (1, 5)] {
            let s = holder_stride(nt, frames);
            assert_eq!(nt % s, 0);
            assert!(nt / s < frames);
        }
    }

    #[test]
    fn bands() {
        assert_eq!(clt_band(1.0), (0.35, 0.65));
        let b = clt_band(2.0);
        assert!((b.0 - 0.8).abs() < 1e-12 && (b.1 - 1.2).abs() < 1e-12);
    }

    #[test]
    fn too_few_replicas_is_inconclusive() {
        let g = GridSpec::new(1, 16, 0.02, 40).unwrap();
        let m = ModelSpec::default_for(g).unwrap();
        let cfg = CltConfig::new(vec![1e-2, 1e-3, 1e-4, 1e-5], 10, NormSpec::default(), 1);
        let r = clt_study(&cfg, &m).unwrap();
        assert_eq!(r.status, StudyStatus::Inconclusive);
        assert_eq!(r.find_check("design").unwrap().status, StudyStatus::Inconclusive);
    }

    #[test]
    fn linear_additive_model_couples_exactly() {
        let g = GridSpec::new(1, 16, 0.02, 40).unwrap();
        let m = ModelSpec::relaxed(
            g,
            Cubic([0.0, 0.0, -1.0, 0.0]),
            Sigma::Constant { c: 1.0 },
            InitialDatum::default(),
            1.0,
        )
        .unwrap();
        let cfg = CltConfig::new(vec![1e-2, 1e-3, 1e-4, 1e-5], 4, NormSpec::default(), 3);
        let r = clt_study(&cfg, &m).unwrap();
        for rec in r.records.iter().filter(|r| r.quantity == "sup_lp_q") {
            assert!(rec.estimate.sqrt() < 1e-9, "{rec:?}");
        }
    }
}
