use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Check, SlopeSummary, StudyReport, StudyStatus};
use crate::error::{Error, Result};
use crate::green::{j_operator, kernel_l2_profile, spacetime_l2, EigenTable};
use crate::grid::GridSpec;
use crate::mc::loglog_slope;
use crate::norms::lp_norm_values;
use crate::spectral::Field;
use crate::trajectory::Trajectory;

/// Spatial exponents `(p, rho)` of the bound on `J`, with
/// `kappa = 1/p - 1/rho + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub p: f64,
    pub rho: f64,
}

impl LatticePoint {
    pub fn kappa(&self) -> f64 {
        1.0 / self.p - 1.0 / self.rho + 1.0
    }

    /// `1/2 + (d/4)(kappa - 1)`.
    pub fn exponent(&self, d: usize) -> f64 {
        0.5 + d as f64 / 4.0 * (self.kappa() - 1.0)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |message: String| Error::Hypothesis {
            label: "kappa-lattice",
            message,
        };
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return Err(bad(format!("rho = {} must lie in [1, inf)", self.rho)));
        }
        if !(self.p >= self.rho && self.p.is_finite()) {
            return Err(bad(format!("p = {} must lie in [rho, inf)", self.p)));
        }
        let kappa = self.kappa();
        if !(0.0..=1.0).contains(&kappa) {
            return Err(bad(format!("kappa = {kappa} outside [0, 1]")));
        }
        if d == 3 && !(kappa > 1.0 / 3.0) {
            return Err(bad(format!("d = 3 needs 1/kappa < 3, got kappa = {kappa}")));
        }
        if d == 2 && kappa == 0.0 {
            return Err(bad("d = 2 excludes kappa = 0".into()));
        }
        if !(self.exponent(d) > 0.0) {
            return Err(bad(format!(
                "1/2 + (d/4)(kappa - 1) = {} must be positive",
                self.exponent(d)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub d: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub grids: Vec<KernelGrid>,
    /// Fitting window for the profile and space-time exponents.
    pub window: (f64, f64),
    pub points: usize,
    pub lattice: Vec<LatticePoint>,
    /// Horizon and steps of the time grid on which `J` is evaluated.
    pub j_horizon: f64,
    pub j_steps: usize,
    pub seed: u64,
}

impl KernelConfig {
    pub fn default_grids() -> Vec<KernelGrid> {
        vec![KernelGrid { d: 1, n: 64 }, KernelGrid { d: 2, n: 32 }]
    }

    pub fn default_window() -> (f64, f64) {
        (1e-4, 1e-2)
    }

    pub fn default_lattice() -> Vec<LatticePoint> {
        vec![
            LatticePoint { p: 2.0, rho: 2.0 },
            LatticePoint { p: 4.0, rho: 2.0 },
            LatticePoint { p: 2.0, rho: 1.5 },
            LatticePoint { p: 1.0, rho: 1.0 },
        ]
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            grids: Self::default_grids(),
            window: Self::default_window(),
            points: 9,
            lattice: Self::default_lattice(),
            j_horizon: 0.1,
            j_steps: 200,
            seed: 0,
        }
    }
}

/// Tolerance on the profile exponent `-d/4`.
pub fn profile_tolerance(d: usize) -> f64 {
    if d == 1 {
        0.03
    } else {
        0.05
    }
}

fn log_times(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let k = points.max(2) - 1;
    (0..=k)
        .map(|i| lo * (hi / lo).powf(i as f64 / k as f64))
        .collect()
}

/// Interior node used for pointwise kernel quantities: index `n/3` on every
/// axis, away from both the centre and the boundary.
pub fn probe_point(grid: &GridSpec) -> Vec<usize> {
    vec![grid.n / 3; grid.d]
}

/// `(sum_j w_j ||v(t_j)||_rho^beta)^{1/beta}` over `[0, t]` by the trapezoid
/// rule.
fn lbeta_lrho(v: &Trajectory, t_index: usize, beta: f64, rho: f64) -> f64 {
    let w = v.grid().weight();
    let dt = v.dt();
    let mut s = 0.0;
    for j in 0..=t_index {
        let f = lp_norm_values(v.frame(j), w, rho).powf(beta);
        let wt = if j == 0 || j == t_index { 0.5 } else { 1.0 };
        s += wt * f * dt;
    }
    s.powf(1.0 / beta)
}

fn test_fields(grid: &GridSpec, seed: u64) -> Result<Vec<(&'static str, Field)>> {
    let smooth = Field::from_fn(*grid, |x| x.iter().map(|v| v.cos()).sum())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rough: Vec<f64> = (0..grid.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Ok(vec![("smooth", smooth), ("rough", Field::new(*grid, rough)?)])
}

/// Ratio `max / min` of a set of positive constants; infinite when any is
/// not finite or not positive.
fn spread(cs: &[f64]) -> f64 {
    let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cs.iter().copied().fold(0.0, f64::max);
    if lo > 0.0 && hi.is_finite() {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Largest admissible spread of a measured constant across the probe times.
pub const STABILITY_SPREAD: f64 = 10.0;

/// Exponent fits and measured constants for the Green-function estimates:
/// the pointwise `L^2` profile (`t^{-d/4}`), its space-time integral
/// (`|t - t0|^gamma`, `gamma < 1 - d/4`) and the two bounds on `J`.
pub fn kernel_estimate_fits(cfg: &KernelConfig) -> Result<StudyReport> {
    let (lo, hi) = cfg.window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::arg("fitting window must satisfy 0 < lo < hi"));
    }
    let mut report = StudyReport::new("kernel");
    let times = log_times(lo, hi, cfg.points);
    for kg in &cfg.grids {
        let grid = GridSpec::new(kg.d, kg.n, cfg.j_horizon, cfg.j_steps)?;
        let d = kg.d;
        let tag = format!("d={d};n={}", kg.n);
        let eig = EigenTable::new(&grid);
        let x = probe_point(&grid);

        let valid = eig.truncation_valid(lo);
        report.check(Check::new(
            format!("truncation[{tag}]"),
            if valid {
                StudyStatus::Pass
            } else {
                StudyStatus::Inconclusive
            },
            format!("exp(-2 lambda_max t) at t = {lo}: {:.3e}", (-2.0 * eig.lambda_max() * lo).exp()),
        ));

        let profile: Vec<f64> = times
            .iter()
            .map(|&t| kernel_l2_profile(t, &x, &eig))
            .collect::<Result<_>>()?;
        for (t, v) in times.iter().zip(&profile) {
            report.record(format!("{tag};t={t}"), "profile", *v, 0.0);
        }
        let slope = loglog_slope(&times, &profile)?;
        let target = -(d as f64) / 4.0;
        let tol = profile_tolerance(d);
        let band = (target - tol, target + tol);
        let status = if valid {
            StudyStatus::from_bool(slope >= band.0 && slope <= band.1)
        } else {
            StudyStatus::Inconclusive
        };
        report.record(tag.clone(), "slope_profile", slope, 0.0);
        report.slopes.push(SlopeSummary {
            quantity: format!("profile[{tag}]"),
            slope,
            stderr: 0.0,
            band,
            status,
        });
        report.check(Check::new(
            format!("profile[{tag}]"),
            status,
            format!("slope {slope:.4}, expected {target} ± {tol}"),
        ));

        let st: Vec<f64> = times
            .iter()
            .map(|&t| spacetime_l2(0.0, t, &x, &eig))
            .collect::<Result<_>>()?;
        for (t, v) in times.iter().zip(&st) {
            report.record(format!("{tag};t={t}"), "spacetime", *v, 0.0);
        }
        let st_slope = loglog_slope(&times, &st)?;
        let gamma_end = 1.0 - d as f64 / 4.0;
        let gamma = 0.8 * gamma_end;
        let c_gamma = times
            .iter()
            .zip(&st)
            .map(|(t, v)| v / t.powf(gamma))
            .fold(0.0, f64::max);
        report.record(tag.clone(), "slope_spacetime", st_slope, 0.0);
        report.record(format!("{tag};gamma={gamma}"), "constant_spacetime", c_gamma, 0.0);
        let st_band = (gamma_end - tol, f64::INFINITY);
        let st_status = if valid {
            StudyStatus::from_bool(st_slope >= st_band.0)
        } else {
            StudyStatus::Inconclusive
        };
        report.slopes.push(SlopeSummary {
            quantity: format!("spacetime[{tag}]"),
            slope: st_slope,
            stderr: 0.0,
            band: st_band,
            status: st_status,
        });
        report.check(Check::new(
            format!("spacetime[{tag}]"),
            st_status,
            format!("slope {st_slope:.4}; every gamma < {gamma_end} needs slope >= {gamma_end} - {tol}"),
        ));

        j_bounds(&mut report, &grid, &tag, cfg)?;
    }
    Ok(report.finish())
}

fn j_bounds(report: &mut StudyReport, grid: &GridSpec, tag: &str, cfg: &KernelConfig) -> Result<()> {
    let d = grid.d;
    let dt = grid.dt();
    let nt = grid.nt;
    let probe_times: Vec<usize> = [0.1, 0.2, 0.5, 1.0]
        .iter()
        .map(|f| ((f * nt as f64).round() as usize).clamp(1, nt))
        .collect();
    let fields = test_fields(grid, cfg.seed)?;
    for lp in &cfg.lattice {
        let key = format!("{tag};p={};rho={}", lp.p, lp.rho);
        if let Err(e) = lp.validate(d) {
            report.check(Check::new(format!("lattice[{key}]"), StudyStatus::Pass, format!("rejected: {e}")));
            continue;
        }
        let e = lp.exponent(d);
        let beta = 2.0 / e;
        let gamma = 0.8 * e;
        let beta_h = 2.0 / (e - gamma);
        for (name, field) in &fields {
            let v = Trajectory::new(*grid, vec![field.clone(); nt + 1])?;
            let w = grid.weight();
            // Bound on ||J(v)(0, t)||_p.
            let mut cs = Vec::new();
            let mut j_frames = Vec::with_capacity(nt + 1);
            j_frames.push(vec![0.0; grid.len()]);
            for i in 1..=nt {
                j_frames.push(j_operator(&v, 0.0, grid.time(i))?.into_values());
            }
            for &i in &probe_times {
                let t = grid.time(i);
                let jn = lp_norm_values(&j_frames[i], w, lp.p);
                let c = jn / (t.powf(e - 1.0 / beta) * lbeta_lrho(&v, i, beta, lp.rho));
                report.record(format!("{key};v={name};t={t}"), "constant_j_bound", c, 0.0);
                cs.push(c);
            }
            let s = spread(&cs);
            report.check(Check::new(
                format!("j-bound[{key};v={name}]"),
                StudyStatus::from_bool(s <= STABILITY_SPREAD),
                format!("beta = {beta:.3}, constant spread {s:.3} over t in [0.1 T, T]"),
            ));
            // Hölder-in-time bound on J(v)(0, ·).
            let norm_v = lbeta_lrho(&v, nt, beta_h, lp.rho);
            let lags = [1usize, 2, 5, 10, 20, 50].map(|l| l.min(nt));
            let mut hs = Vec::new();
            for &lag in &lags {
                let mut worst = 0.0f64;
                for i in 0..=(nt - lag) {
                    let diff: Vec<f64> = j_frames[i + lag]
                        .iter()
                        .zip(&j_frames[i])
                        .map(|(a, b)| a - b)
                        .collect();
                    worst = worst.max(lp_norm_values(&diff, w, lp.p));
                }
                let tau = lag as f64 * dt;
                let c = worst / (tau.powf(gamma) * norm_v);
                report.record(format!("{key};v={name};lag={tau}"), "constant_j_holder", c, 0.0);
                hs.push(c);
            }
            let finite = hs.iter().all(|c| c.is_finite());
            let growth = hs[0] / hs[hs.len() - 1];
            report.check(Check::new(
                format!("j-holder[{key};v={name}]"),
                StudyStatus::from_bool(finite && growth <= STABILITY_SPREAD),
                format!(
                    "gamma = {gamma:.3} (80% of {e:.3}), beta = {beta_h:.3}, constant {:.3e}, small/large lag ratio {growth:.3}",
                    hs.iter().copied().fold(0.0, f64::max)
                ),
            ));
        }
    }
    Ok(())
}
