//! Rate function of the moderate-deviation principle.
//!
//! With `sigma(u0)` bounded away from zero the skeleton equation can be
//! inverted for the control, so `I(g)` is the cost `1/2 ∫∫ v^2` of the unique
//! control that produces `g`:
//!
//! ```text
//! v = [∂_t g + Δ²g - Δ(f'(u0) g)] / sigma(u0)
//! ```
//!
//! Time derivatives are second-order finite differences (centred inside,
//! one-sided at the endpoints); spatial operators are applied spectrally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::EigenTable;
use crate::mc::run_replicas;
use crate::model::{ModelSpec, ScalingSpec};
use crate::norms::lp_norm_values;
use crate::pde::{solve_skeleton, solve_u0, Control};
use crate::scheme::Propagator;
use crate::spde::{generate_noise, replica_seed, solve_u_eps};
use crate::trajectory::Trajectory;

/// Default lower bound on `|sigma(u0)|` below which inversion is refused.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RateResult {
    /// `I(g)`, in nats at speed `h^2(eps)`.
    pub value: f64,
    pub control: Control,
    /// `||Z^v(t) - g(t)||_2` per grid instant for the recovered control.
    pub residual_report: Vec<f64>,
}

/// Flat summary of a [`RateResult`] for JSON reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRecord {
    pub value: f64,
    pub control_l2_cost: f64,
    pub residual_max: f64,
    pub residual_relative: f64,
    pub target_sup_l2: f64,
}

impl RateResult {
    pub fn record(&self, target: &Trajectory) -> RateRecord {
        let target_sup = sup_l2(target);
        let residual_max = self.residual_report.iter().copied().fold(0.0, f64::max);
        RateRecord {
            value: self.value,
            control_l2_cost: self.control.l2_cost(),
            residual_max,
            residual_relative: if target_sup > 0.0 { residual_max / target_sup } else { 0.0 },
            target_sup_l2: target_sup,
        }
    }
}

/// `sup_t ||g(t)||_2`, the path metric used for balls around targets.
pub fn sup_l2(g: &Trajectory) -> f64 {
    let w = g.grid().weight();
    g.frames().map(|f| lp_norm_values(f, w, 2.0)).fold(0.0, f64::max)
}

/// `sup_t ||a(t) - b(t)||_2`.
pub fn sup_l2_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    a.grid().require_same_axes(b.grid(), "path distance")?;
    let w = a.grid().weight();
    Ok(a.frames()
        .zip(b.frames())
        .map(|(x, y)| {
            (x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>() * w).sqrt()
        })
        .fold(0.0, f64::max))
}

pub fn residual_control(g: &Trajectory, u0_traj: &Trajectory, m: &ModelSpec) -> Result<Control> {
    residual_control_with_floor(g, u0_traj, m, DEFAULT_SIGMA_FLOOR)
}

pub fn residual_control_with_floor(
    g: &Trajectory,
    u0_traj: &Trajectory,
    m: &ModelSpec,
    sigma_floor: f64,
) -> Result<Control> {
    let grid = *g.grid();
    grid.require_same_axes(u0_traj.grid(), "target vs reference path")?;
    let scale = g.max_abs().max(1.0);
    let start = g.frame(0).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if start > 1e-12 * scale {
        return Err(Error::InadmissibleTarget(start));
    }
    let mut min_sigma = f64::INFINITY;
    for f in u0_traj.frames() {
        for &u in f {
            min_sigma = min_sigma.min(m.sigma.value(u).abs());
        }
    }
    if min_sigma < sigma_floor {
        return Err(Error::DegenerateNoise {
            min_sigma,
            floor: sigma_floor,
        });
    }

    let nt = grid.nt;
    let dt = grid.dt();
    let len = grid.len();
    let eig = EigenTable::new(&grid);
    let mut prop = Propagator::new(&grid, dt);
    let mut coeffs = vec![0.0; len];
    let mut work = vec![0.0; len];
    let mut op = vec![0.0; len];
    let mut data = Vec::with_capacity(len * (nt + 1));
    for j in 0..=nt {
        let gj = g.frame(j);
        let u0 = u0_traj.frame(j);
        // Δ²g - Δ(f'(u0) g) in modes: lambda_k g_k + |k|^2 (f'(u0) g)_k
        coeffs.copy_from_slice(gj);
        prop.to_spectral(&mut coeffs);
        for ((w, gv), u) in work.iter_mut().zip(gj).zip(u0) {
            *w = m.f.derivative(*u) * gv;
        }
        prop.to_spectral(&mut work);
        for (((c, w), l), s) in coeffs
            .iter_mut()
            .zip(work.iter())
            .zip(eig.lambda())
            .zip(eig.ksq())
        {
            *c = l * *c + s * w;
        }
        prop.to_physical(&coeffs, &mut op);
        for (i, o) in op.iter_mut().enumerate() {
            let dg = time_derivative(g, j, i, nt, dt);
            *o = (dg + *o) / m.sigma.value(u0[i]);
        }
        data.extend_from_slice(&op);
    }
    Ok(Control::new(Trajectory::from_flat_raw(grid, data)))
}

fn time_derivative(g: &Trajectory, j: usize, i: usize, nt: usize, dt: f64) -> f64 {
    let at = |k: usize| g.frame(k)[i];
    if nt == 1 {
        return (at(1) - at(0)) / dt;
    }
    if j == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * dt)
    } else if j == nt {
        (3.0 * at(nt) - 4.0 * at(nt - 1) + at(nt - 2)) / (2.0 * dt)
    } else {
        (at(j + 1) - at(j - 1)) / (2.0 * dt)
    }
}

/// `I(g)` with the residual of re-solving the skeleton under the recovered
/// control.
pub fn rate_eval(g: &Trajectory, u0_traj: &Trajectory, m: &ModelSpec) -> Result<RateResult> {
    let control = residual_control(g, u0_traj, m)?;
    let z = solve_skeleton(&control, u0_traj, m)?;
    let w = g.grid().weight();
    let residual_report = z
        .frames()
        .zip(g.frames())
        .map(|(a, b)| {
            (a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() * w).sqrt()
        })
        .collect();
    Ok(RateResult {
        value: control.l2_cost(),
        control,
        residual_report,
    })
}

/// Ball `{Z : sup_t ||Z(t) - center(t)||_2 <= radius}` in path space.
#[derive(Debug, Clone)]
pub struct TargetBall {
    pub center: Trajectory,
    pub radius: f64,
}

/// Distances `sup_t ||Z^eps - center||_2` for every (eps, replica); `None`
/// marks a blown-up replica.
#[derive(Debug, Clone)]
pub struct ProbeSamples {
    pub eps: Vec<f64>,
    pub h: Vec<f64>,
    pub distances: Vec<Vec<Option<f64>>>,
    pub rate_center: f64,
    pub center_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub eps: f64,
    pub h: f64,
    pub radius: f64,
    pub replicas: usize,
    pub aborts: usize,
    pub hits: usize,
    /// `log(hits / n) / h^2`; absent when nothing hit.
    pub normalized_log_prob: Option<f64>,
    /// One-sided bound `log(3 / n) / h^2` reported instead of a point
    /// estimate when there are no hits.
    pub upper_bound: Option<f64>,
    pub rate_center: f64,
    /// First-order approximation of the infimum of `I` over the ball.
    pub rate_ball_approx: f64,
}

impl ProbeSamples {
    pub fn table(&self, radius: f64) -> Vec<ProbeRow> {
        let approx = ball_infimum_approx(self.rate_center, self.center_norm, radius);
        self.eps
            .iter()
            .zip(&self.h)
            .zip(&self.distances)
            .map(|((&eps, &h), ds)| {
                let aborts = ds.iter().filter(|d| d.is_none()).count();
                let n = ds.len() - aborts;
                let hits = ds.iter().flatten().filter(|&&d| d <= radius).count();
                let h2 = h * h;
                let (normalized_log_prob, upper_bound) = if hits > 0 {
                    (Some((hits as f64 / n as f64).ln() / h2), None)
                } else {
                    (None, Some((3.0 / n as f64).ln() / h2))
                };
                ProbeRow {
                    eps,
                    h,
                    radius,
                    replicas: ds.len(),
                    aborts,
                    hits,
                    normalized_log_prob,
                    upper_bound,
                    rate_center: self.rate_center,
                    rate_ball_approx: approx,
                }
            })
            .collect()
    }
}

/// `max(0, (sqrt(2 I) - r c)^2 / 2)` with `c = sqrt(2 I) / ||center||`,
/// i.e. the cost of the closest point on the ray through the centre.
pub fn ball_infimum_approx(rate_center: f64, center_norm: f64, radius: f64) -> f64 {
    if center_norm <= 0.0 || radius >= center_norm {
        return 0.0;
    }
    let root = (2.0 * rate_center).sqrt();
    let c = root / center_norm;
    0.5 * (root - radius * c).max(0.0).powi(2)
}

/// Samples `Z^eps = (u^eps - u0) / (sqrt(eps) h(eps))` and records its
/// distance to the ball centre.
pub fn ldp_probe_samples(
    sc: &ScalingSpec,
    center: &Trajectory,
    replicas: usize,
    seed: u64,
    jobs: usize,
    m: &ModelSpec,
) -> Result<ProbeSamples> {
    let mut all = ldp_probe_centers(sc, std::slice::from_ref(center), replicas, seed, jobs, m)?;
    Ok(all.remove(0))
}

/// As [`ldp_probe_samples`] for several centres sharing the same samples of
/// `Z^eps`.
pub fn ldp_probe_centers(
    sc: &ScalingSpec,
    centers: &[Trajectory],
    replicas: usize,
    seed: u64,
    jobs: usize,
    m: &ModelSpec,
) -> Result<Vec<ProbeSamples>> {
    if replicas < 100 {
        return Err(Error::Study(format!("probe needs at least 100 replicas, got {replicas}")));
    }
    sc.validate()?;
    let u0 = solve_u0(m)?;
    let mut rates = Vec::with_capacity(centers.len());
    for c in centers {
        c.grid().require_same_axes(u0.grid(), "ball centre")?;
        rates.push(if c.max_abs() == 0.0 {
            0.0
        } else {
            rate_eval(c, &u0, m)?.value
        });
    }
    // per_replica[r][eps][center]
    let per_replica = run_replicas(replicas, jobs, |r| {
        let noise = generate_noise(replica_seed(seed, r as u64), &m.grid);
        sc.eps
            .iter()
            .map(|&eps| {
                let z = solve_u_eps(eps, &noise, m)
                    .and_then(|u| u.sub(&u0))
                    .map(|d| d.scaled(1.0 / (eps.sqrt() * sc.h(eps))));
                centers
                    .iter()
                    .map(|c| z.as_ref().ok().and_then(|z| sup_l2_distance(z, c).ok()))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    })?;
    Ok(centers
        .iter()
        .zip(rates)
        .enumerate()
        .map(|(k, (c, rate_center))| ProbeSamples {
            eps: sc.eps.clone(),
            h: sc.eps.iter().map(|&e| sc.h(e)).collect(),
            distances: (0..sc.eps.len())
                .map(|e| per_replica.iter().map(|r| r[e][k]).collect())
                .collect(),
            rate_center,
            center_norm: sup_l2(c),
        })
        .collect())
}

/// Diagnostic table of normalised log-probabilities of a ball next to the
/// rate of its centre.
pub fn ldp_bound_probe(
    sc: &ScalingSpec,
    ball: &TargetBall,
    replicas: usize,
    seed: u64,
    jobs: usize,
    m: &ModelSpec,
) -> Result<Vec<ProbeRow>> {
    Ok(ldp_probe_samples(sc, &ball.center, replicas, seed, jobs, m)?.table(ball.radius))
}
