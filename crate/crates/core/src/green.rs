//! Green function of `d/dt + Δ²` with Neumann conditions, represented modally.
//!
//! In the cosine eigenbasis the semigroup is diagonal with factors
//! `exp(-lambda_k t)`, `lambda_k = (|k|^2)^2`. Kernel values `G_t(x, y)` are
//! never materialised; the `L^2` profiles below are exact modal sums.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{mode_normalization, to_physical, to_spectral, Field, SpectralField};
use crate::trajectory::Trajectory;

/// Continuum eigenvalues of the bilaplacian for every retained multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTable {
    grid: GridSpec,
    ksq: Vec<f64>,
    lambda: Vec<f64>,
}

impl EigenTable {
    pub fn new(grid: &GridSpec) -> Self {
        let ksq: Vec<f64> = (0..grid.len())
            .map(|flat| {
                grid.multi_index(flat)
                    .iter()
                    .take(grid.d)
                    .map(|&k| (k * k) as f64)
                    .sum()
            })
            .collect();
        let lambda = ksq.iter().map(|s| s * s).collect();
        EigenTable {
            grid: *grid,
            ksq,
            lambda,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `lambda_k = |k|^4`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `|k|^2`, the eigenvalue of `-Δ`.
    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    /// Modal semigroup factors `exp(-lambda_k t)`.
    pub fn decay(&self, t: f64) -> Vec<f64> {
        self.lambda.iter().map(|l| (-l * t).exp()).collect()
    }

    /// `psi_k(t) = (1 - exp(-lambda_k t)) / lambda_k`, with `psi_0 = t`.
    pub fn phi1(&self, t: f64) -> Vec<f64> {
        self.lambda.iter().map(|&l| phi1(l, t)).collect()
    }

    /// Whether the highest mode is negligible at time `t`:
    /// `exp(-2 lambda_max t) < 1e-12`.
    pub fn truncation_valid(&self, t: f64) -> bool {
        (-2.0 * self.lambda_max() * t).exp() < 1e-12
    }
}

/// `(1 - exp(-lambda t)) / lambda`, continuous at `lambda = 0`.
pub fn phi1(lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        t
    } else {
        -(-lambda * t).exp_m1() / lambda
    }
}

/// `e^{-t Δ²}` applied to a coefficient vector.
pub fn semigroup_apply(c: &SpectralField, t: f64, eig: &EigenTable) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::arg(format!("semigroup time must be non-negative, got {t}")));
    }
    if !c.grid().same_space(eig.grid()) {
        return Err(Error::AxisMismatch("eigen table and field grids differ".into()));
    }
    let coeffs = c
        .coeffs()
        .iter()
        .zip(eig.lambda())
        .map(|(&a, &l)| if l == 0.0 { a } else { a * (-l * t).exp() })
        .collect();
    Ok(SpectralField::from_raw(*c.grid(), coeffs))
}

/// Squared eigenfunction values `phi_k(x)^2` at one grid point, for all `k`.
fn phi_squared_at(eig: &EigenTable, x: &[usize]) -> Result<Vec<f64>> {
    let grid = eig.grid();
    if x.len() != grid.d || x.iter().any(|&i| i >= grid.n) {
        return Err(Error::arg(format!("grid point {x:?} is outside the grid")));
    }
    let per_axis: Vec<Vec<f64>> = x
        .iter()
        .map(|&i| {
            let xi = grid.node(i);
            (0..grid.n)
                .map(|k| {
                    let v = mode_normalization(k) * (k as f64 * xi).cos();
                    v * v
                })
                .collect()
        })
        .collect();
    Ok((0..grid.len())
        .map(|flat| {
            let k = grid.multi_index(flat);
            (0..grid.d).map(|a| per_axis[a][k[a]]).product()
        })
        .collect())
}

/// `∫_D G_t(x, y)^2 dy = sum_k exp(-2 lambda_k t) phi_k(x)^2` at grid point `x`
/// (per-axis node indices).
pub fn kernel_l2_profile(t: f64, x: &[usize], eig: &EigenTable) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::arg(format!("profile time must be positive, got {t}")));
    }
    let phi2 = phi_squared_at(eig, x)?;
    Ok(phi2
        .iter()
        .zip(eig.lambda())
        .map(|(p, l)| (-2.0 * l * t).exp() * p)
        .sum())
}

/// `∫_{t0}^{t} ∫_D G_{t-s}(x, y)^2 dy ds`, integrated exactly mode by mode.
pub fn spacetime_l2(t0: f64, t: f64, x: &[usize], eig: &EigenTable) -> Result<f64> {
    if !(t > t0 && t0 >= 0.0) {
        return Err(Error::arg(format!("need 0 <= t0 < t, got t0={t0}, t={t}")));
    }
    let tau = t - t0;
    let phi2 = phi_squared_at(eig, x)?;
    Ok(phi2
        .iter()
        .zip(eig.lambda())
        .map(|(p, &l)| {
            if l == 0.0 {
                tau * p
            } else {
                -(-2.0 * l * tau).exp_m1() / (2.0 * l) * p
            }
        })
        .sum())
}

/// `J(v)(t0, t, ·) = ∫_{t0}^{t} ∫_D ΔG_{t-s}(·, y) v(s, y) dy ds`.
///
/// Mode `k` accumulates `-|k|^2 exp(-lambda_k (t - s)) v_k(s)` with `v`
/// frozen at the left end of every step and the exponential integrated
/// exactly over the step.
pub fn j_operator(v: &Trajectory, t0: f64, t: f64) -> Result<Field> {
    let grid = *v.grid();
    let i0 = grid.time_index(t0)?;
    let i1 = grid.time_index(t)?;
    if i1 <= i0 {
        return Err(Error::arg(format!("empty time range [{t0}, {t}]")));
    }
    let eig = EigenTable::new(&grid);
    let dt = grid.dt();
    let decay = eig.decay(dt);
    let weight: Vec<f64> = eig
        .phi1(dt)
        .iter()
        .zip(eig.ksq())
        .map(|(p, s)| -s * p)
        .collect();
    let mut acc = vec![0.0; grid.len()];
    for j in i0..i1 {
        let vk = to_spectral(&v.frame_field(j));
        for (((a, e), w), c) in acc.iter_mut().zip(&decay).zip(&weight).zip(vk.coeffs()) {
            *a = e * *a + w * c;
        }
    }
    Ok(to_physical(&SpectralField::from_raw(grid, acc)))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn grid(d: usize, n: usize) -> GridSpec {
        GridSpec::new(d, n, 1.0, 10).unwrap()
    }

    #[test]
    fn eigenvalues() {
        let g = grid(2, 4);
        let eig = EigenTable::new(&g);
        assert_eq!(eig.lambda()[0], 0.0);
        assert_eq!(eig.lambda()[g.flat_index(&[1, 1])], 4.0);
        assert_eq!(eig.lambda()[g.flat_index(&[3, 2])], 169.0);
        assert!(eig.lambda()[1..].iter().all(|&l| l > 0.0));
    }

    #[test]
    fn semigroup_eigen_action() {
        let g = grid(1, 8);
        let eig = EigenTable::new(&g);
        let c = SpectralField::single_mode(g, &[1], 2.0).unwrap();
        let out = semigroup_apply(&c, 0.3, &eig).unwrap();
        assert!((out.mode(&[1]) - 2.0 * (-0.3f64).exp()).abs() < 1e-15);
        assert_eq!(semigroup_apply(&c, 0.0, &eig).unwrap(), c);
        assert!(semigroup_apply(&c, -1.0, &eig).is_err());
    }

    #[test]
    fn profile_saturates_at_mean_mode() {
        let g = grid(2, 8);
        let eig = EigenTable::new(&g);
        let p = kernel_l2_profile(50.0, &[3, 5], &eig).unwrap();
        assert!((p - PI.powi(-2)).abs() < 1e-14);
        assert!(kernel_l2_profile(0.0, &[0, 0], &eig).is_err());
        assert!(kernel_l2_profile(1.0, &[0, 8], &eig).is_err());
    }

    #[test]
    fn spacetime_rejects_reversed_interval() {
        let eig = EigenTable::new(&grid(1, 8));
        assert!(spacetime_l2(0.2, 0.1, &[0], &eig).is_err());
        let small = spacetime_l2(0.0, 1e-9, &[3], &eig).unwrap();
        let profile0: f64 = phi_squared_at(&eig, &[3]).unwrap().iter().sum();
        assert!((small / 1e-9 - profile0).abs() / profile0 < 1e-4);
    }

    #[test]
    fn j_of_zero_is_zero() {
        let g = GridSpec::new(1, 8, 0.1, 10).unwrap();
        let j = j_operator(&Trajectory::zeros(g), 0.0, 0.1).unwrap();
        assert_eq!(j.max_abs(), 0.0);
        assert!(j_operator(&Trajectory::zeros(g), 0.05, 0.05).is_err());
    }

    #[test]
    fn j_constant_single_mode_closed_form() {
        let g = GridSpec::new(1, 16, 0.1, 50).unwrap();
        let k = 3usize;
        let amp = 0.7;
        let mode = to_physical(&SpectralField::single_mode(g, &[k], amp).unwrap());
        let v = Trajectory::new(g, vec![mode; g.nt + 1]).unwrap();
        let (t0, t) = (0.02, 0.1);
        let j = to_spectral(&j_operator(&v, t0, t).unwrap());
        let lam = (k * k * k * k) as f64;
        let want = -((k * k) as f64) * (1.0 - (-lam * (t - t0)).exp()) / lam * amp;
        assert!((j.mode(&[k]) - want).abs() < 1e-12 * want.abs().max(1.0));
    }
}
