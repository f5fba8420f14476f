use serde::{Deserialize, Serialize};

use super::{spans_decades, Check, StudyReport, StudyStatus};
use crate::error::{Error, Result};
use crate::mc::{quantile, run_replicas, Estimate};
use crate::model::{HFamily, ModelSpec, ScalingSpec};
use crate::pde::{solve_skeleton, solve_u0, Control};
use crate::rate::{ldp_probe_centers, rate_eval, sup_l2, ProbeRow};
use crate::spde::{generate_noise, replica_seed, solve_controlled, solve_u_eps, solve_y};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpConfig {
    /// Exponents of `h = eps^-theta`; the `h = 1` row is always added.
    pub thetas: Vec<f64>,
    pub eps: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub jobs: usize,
}

fn family(theta: f64) -> HFamily {
    if theta == 0.0 {
        HFamily::One
    } else {
        HFamily::Power { theta }
    }
}

fn cell(theta: f64, eps: f64) -> String {
    format!("theta={theta};eps={eps}")
}

struct ReplicaSample {
    y: f64,
    /// `sup_t ||(u^eps - u0)/sqrt(eps)||_2` per eps.
    y_eps: Vec<f64>,
    /// `sup_t ||Z^eps||_2` per (theta row, eps).
    z: Vec<Vec<f64>>,
}

/// Distribution of `sup_t ||Z^eps||_2` over a grid of `(theta, eps)` with
/// `Z^eps` from the controlled solver at zero control, next to the
/// CLT-normalised `Y^eps = (u^eps - u0)/sqrt(eps)` on the same noise paths.
pub fn mdp_scaling_sweep(cfg: &MdpConfig, m: &ModelSpec) -> Result<StudyReport> {
    let mut thetas = vec![0.0];
    for &t in &cfg.thetas {
        family(t).validate()?;
        thetas.push(t);
    }
    thetas.sort_by(|a, b| a.total_cmp(b));
    thetas.dedup();
    for &e in &cfg.eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::arg(format!("eps = {e} must lie in (0, 1)")));
        }
    }
    let scalings: Vec<ScalingSpec> = thetas
        .iter()
        .map(|&t| ScalingSpec {
            eps: cfg.eps.clone(),
            h: family(t),
        })
        .collect();

    let mut report = StudyReport::new("mdp");
    report.replicas = cfg.replicas;
    let design_ok = cfg.replicas >= 100 && cfg.eps.len() >= 4 && spans_decades(&cfg.eps, 2.0);
    report.check(Check::new(
        "design",
        if design_ok {
            StudyStatus::Pass
        } else {
            StudyStatus::Inconclusive
        },
        format!("{} replicas, {} eps values", cfg.replicas, cfg.eps.len()),
    ));

    let u0 = solve_u0(m)?;
    let zero = Control::zero(m.grid);
    let samples = run_replicas(cfg.replicas, cfg.jobs, |r| -> Option<ReplicaSample> {
        let noise = generate_noise(replica_seed(cfg.seed, r as u64), &m.grid);
        let y = sup_l2(&solve_y(&noise, &u0, m).ok()?);
        let mut y_eps = Vec::with_capacity(cfg.eps.len());
        for &eps in &cfg.eps {
            let u = solve_u_eps(eps, &noise, m).ok()?;
            y_eps.push(sup_l2(&u.sub(&u0).ok()?.scaled(1.0 / eps.sqrt())));
        }
        let mut z = Vec::with_capacity(thetas.len());
        for sc in &scalings {
            let mut row = Vec::with_capacity(cfg.eps.len());
            for &eps in &cfg.eps {
                let path = solve_controlled(eps, &zero, Some(&noise), &u0, sc, m).ok()?;
                row.push(sup_l2(&path));
            }
            z.push(row);
        }
        Some(ReplicaSample { y, y_eps, z })
    })?;
    let aborts = samples.iter().filter(|s| s.is_none()).count();
    report.aborts = aborts;
    report.check(Check::new(
        "aborts",
        StudyStatus::from_bool(aborts == 0),
        format!("{aborts} blown-up replicas"),
    ));
    let samples: Vec<ReplicaSample> = samples.into_iter().flatten().collect();
    if samples.len() < 2 {
        report.check(Check::new("samples", StudyStatus::Inconclusive, "fewer than two usable replicas"));
        return Ok(report.finish());
    }

    let y = Estimate::from_samples(&samples.iter().map(|s| s.y).collect::<Vec<_>>());
    report.record("limit".into(), "y_sup_l2", y.mean, y.stderr);
    let mut y_eps = Vec::new();
    for (e, &eps) in cfg.eps.iter().enumerate() {
        let col: Vec<f64> = samples.iter().map(|s| s.y_eps[e]).collect();
        let est = Estimate::from_samples(&col);
        report.record(format!("eps={eps}"), "yeps_sup_l2", est.mean, est.stderr);
        let diff: Vec<f64> = samples.iter().map(|s| s.y_eps[e] - s.y).collect();
        let d = Estimate::from_samples(&diff);
        report.record(format!("eps={eps}"), "yeps_minus_y", d.mean, d.stderr);
        y_eps.push((est, d));
    }

    let mut shared_ok = true;
    let mut worst_shared = 0.0f64;
    let mut z_means = vec![vec![0.0; cfg.eps.len()]; thetas.len()];
    for (t, &theta) in thetas.iter().enumerate() {
        for (e, &eps) in cfg.eps.iter().enumerate() {
            let h = scalings[t].h(eps);
            let col: Vec<f64> = samples.iter().map(|s| s.z[t][e]).collect();
            let est = Estimate::from_samples(&col);
            z_means[t][e] = est.mean;
            let key = cell(theta, eps);
            report.record(key.clone(), "h", h, 0.0);
            report.record(key.clone(), "z_sup_l2", est.mean, est.stderr);
            report.record(key.clone(), "z_q90", quantile(&col, 0.9), 0.0);
            report.record(key.clone(), "z_q99", quantile(&col, 0.99), 0.0);
            let predicted = y_eps[e].0.mean / h;
            let tol = 3.0 * y_eps[e].0.stderr / h + 1e-12 * predicted.abs();
            let gap = (est.mean - predicted).abs();
            report.record(key, "yeps_over_h", predicted, y_eps[e].0.stderr / h);
            worst_shared = worst_shared.max(gap / tol);
            shared_ok &= gap <= tol;
        }
    }
    report.check(Check::new(
        "shared-path",
        StudyStatus::from_bool(shared_ok),
        format!("max |E||Z|| - E||Y^eps||/h| in units of 3 stderr: {worst_shared:.3e}"),
    ));

    let theta_ok = (0..cfg.eps.len()).all(|e| z_means.windows(2).all(|w| w[1][e] < w[0][e]));
    report.check(Check::new(
        "theta-monotone",
        StudyStatus::from_bool(theta_ok),
        "mean ||Z^eps|| decreases in theta at every eps",
    ));

    let (i_small, i_large) = extreme_indices(&cfg.eps);
    let eps_ok = thetas
        .iter()
        .zip(&z_means)
        .filter(|(t, _)| **t > 0.0)
        .all(|(_, row)| row[i_small] < row[i_large]);
    report.check(Check::new(
        "eps-monotone",
        StudyStatus::from_bool(eps_ok),
        format!(
            "mean ||Z^eps|| at eps = {} below eps = {} for every theta > 0",
            cfg.eps[i_small], cfg.eps[i_large]
        ),
    ));

    let small = y_eps[i_small].1;
    let large = y_eps[i_large].1;
    let stable = small.mean.abs() <= large.mean.abs() + 3.0 * small.stderr;
    report.check(Check::new(
        "fluctuation-stabilizes",
        StudyStatus::from_bool(stable),
        format!(
            "E||Y^eps|| - E||Y||: {:.3e} at eps = {}, {:.3e} at eps = {}",
            small.mean, cfg.eps[i_small], large.mean, cfg.eps[i_large]
        ),
    ));
    Ok(report.finish())
}

fn extreme_indices(eps: &[f64]) -> (usize, usize) {
    let mut small = 0;
    let mut large = 0;
    for (i, &e) in eps.iter().enumerate() {
        if e < eps[small] {
            small = i;
        }
        if e > eps[large] {
            large = i;
        }
    }
    (small, large)
}

/// Ball-probability diagnostics in the moderate-deviation scaling.
///
/// Two targets `g1 = Z^{v*}` and `g2 = 2 g1` are built from the skeleton with
/// `v*(t, x) = amplitude sin(t) cos(x_1)`; balls of radius
/// `radius_factor ||g1||` around each (and around zero) are probed with the
/// same samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpConfig {
    pub scaling: ScalingSpec,
    pub replicas: usize,
    pub seed: u64,
    pub jobs: usize,
    pub amplitude: f64,
    pub radius_factor: f64,
    /// Minimum hit count for a point estimate to count as feasible.
    pub min_hits: usize,
}

impl Default for LdpConfig {
    fn default() -> Self {
        LdpConfig {
            scaling: ScalingSpec {
                eps: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
                h: HFamily::Power { theta: 0.1 },
            },
            replicas: 200,
            seed: 0,
            jobs: 0,
            amplitude: 40.0,
            radius_factor: 1.75,
            min_hits: 30,
        }
    }
}

pub fn target_path(amplitude: f64, u0: &Trajectory, m: &ModelSpec) -> Result<Trajectory> {
    let v = Trajectory::from_fn(m.grid, |t, x| amplitude * t.sin() * x[0].cos())?;
    solve_skeleton(&Control::new(v), u0, m)
}

fn push_rows(report: &mut StudyReport, label: &str, rows: &[ProbeRow]) {
    for r in rows {
        let key = format!("center={label};radius={};eps={}", r.radius, r.eps);
        report.record(key.clone(), "hits", r.hits as f64, 0.0);
        report.record(key.clone(), "aborts", r.aborts as f64, 0.0);
        if let Some(v) = r.normalized_log_prob {
            report.record(key.clone(), "normalized_log_prob", v, 0.0);
        }
        if let Some(v) = r.upper_bound {
            report.record(key.clone(), "normalized_log_prob_upper_bound", v, 0.0);
        }
        report.record(key.clone(), "rate_center", r.rate_center, 0.0);
        report.record(key, "rate_ball_approx", r.rate_ball_approx, 0.0);
    }
}

pub fn ldp_diagnostics(cfg: &LdpConfig, m: &ModelSpec) -> Result<StudyReport> {
    let sc = &cfg.scaling;
    sc.validate()?;
    let u0 = solve_u0(m)?;
    let g1 = target_path(cfg.amplitude, &u0, m)?;
    let g2 = g1.scaled(2.0);
    let i1 = rate_eval(&g1, &u0, m)?.value;
    let i2 = rate_eval(&g2, &u0, m)?.value;
    let norm1 = sup_l2(&g1);
    let radius = cfg.radius_factor * norm1;

    let mut report = StudyReport::new("ldp");
    report.replicas = cfg.replicas;
    report.record("center=g1".into(), "rate", i1, 0.0);
    report.record("center=g2".into(), "rate", i2, 0.0);
    report.record("center=g1".into(), "sup_l2", norm1, 0.0);

    let zero = Trajectory::zeros(m.grid);
    let probes = ldp_probe_centers(sc, &[g1, g2, zero], cfg.replicas, cfg.seed, cfg.jobs, m)?;
    let rows1 = probes[0].table(radius);
    let rows2 = probes[1].table(radius);
    let rows0 = probes[2].table(radius);
    push_rows(&mut report, "g1", &rows1);
    push_rows(&mut report, "g2", &rows2);
    push_rows(&mut report, "zero", &rows0);
    let aborts: usize = rows0.iter().map(|r| r.aborts).sum();
    report.aborts = aborts;
    report.check(Check::new(
        "aborts",
        StudyStatus::from_bool(aborts == 0),
        format!("{aborts} blown-up (replica, eps) cells"),
    ));

    // Ordering of the two targets at the smallest eps where both are well
    // sampled.
    let mut order: Vec<usize> = (0..sc.eps.len()).collect();
    order.sort_by(|&a, &b| sc.eps[a].total_cmp(&sc.eps[b]));
    let feasible = order
        .iter()
        .copied()
        .find(|&e| rows1[e].hits >= cfg.min_hits && rows2[e].hits >= cfg.min_hits);
    let ordering = match feasible {
        None => Check::new(
            "ordering",
            StudyStatus::Inconclusive,
            format!("no eps with at least {} hits around both targets", cfg.min_hits),
        ),
        Some(e) => {
            let p1 = rows1[e].normalized_log_prob.unwrap_or(f64::NEG_INFINITY);
            let (p2, bound) = match (rows2[e].normalized_log_prob, rows2[e].upper_bound) {
                (Some(v), _) => (v, false),
                (None, Some(b)) => (b, true),
                (None, None) => (f64::NAN, true),
            };
            let rate_order = i1 < i2;
            let status = if rate_order == (p1 > p2) {
                StudyStatus::Pass
            } else if bound {
                StudyStatus::Inconclusive
            } else {
                StudyStatus::Fail
            };
            Check::new(
                "ordering",
                status,
                format!(
                    "eps = {}: I(g1) = {i1:.4e}, I(g2) = {i2:.4e}; log P/h^2: {p1:.4e} vs {}{p2:.4e}",
                    sc.eps[e],
                    if bound { "<= " } else { "" }
                ),
            )
        }
    };
    report.check(ordering);

    // Nested balls around g1 share samples, so hits can only grow with r.
    let radii = [0.5 * radius, radius, 1.5 * radius];
    let nested: Vec<Vec<ProbeRow>> = radii.iter().map(|&r| probes[0].table(r)).collect();
    let ball_ok = (0..sc.eps.len()).all(|e| {
        nested.windows(2).all(|w| {
            w[1][e].hits >= w[0][e].hits && estimate_or_bound(&w[1][e]) >= estimate_or_bound(&w[0][e])
        })
    });
    report.check(Check::new(
        "ball-monotone",
        StudyStatus::from_bool(ball_ok),
        "normalised log-probability nondecreasing in the radius at every eps",
    ));

    // Balls around zero: log P / h^2 rises towards 0 from below as eps -> 0.
    let mut prev = f64::NEG_INFINITY;
    let mut eps_ok = true;
    for &e in order.iter().rev() {
        let v = estimate_or_bound(&rows0[e]);
        eps_ok &= v <= 0.0 && v >= prev;
        prev = v;
    }
    report.check(Check::new(
        "eps-monotone",
        StudyStatus::from_bool(eps_ok),
        "log P(||Z^eps|| <= r)/h^2 nondecreasing to 0 as eps decreases",
    ));
    Ok(report.finish())
}

fn estimate_or_bound(row: &ProbeRow) -> f64 {
    row.normalized_log_prob
        .or(row.upper_bound)
        .unwrap_or(f64::NEG_INFINITY)
}
