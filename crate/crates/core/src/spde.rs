//! Stochastic dynamics driven by space-time white noise.
//!
//! White noise is represented by independent Brownian increments on every
//! retained eigenmode (the cylindrical Wiener process in the orthonormal
//! cosine basis). A [`NoisePath`] is fully determined by its seed and grid,
//! so `u^eps`, the fluctuation limit `Y` and the controlled process can be
//! run on the same realisation and compared pathwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{ModelSpec, ScalingSpec};
use crate::pde::{add_drift, solve_u0, Control};
use crate::scheme::Propagator;
use crate::spectral::SpectralField;
use crate::trajectory::Trajectory;

/// Replayable record of spectral white-noise increments, `nt x n^d` draws of
/// variance `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    seed: u64,
    grid: GridSpec,
    increments: Vec<f64>,
}

impl NoisePath {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Increments of step `j` (from `t_j` to `t_{j+1}`), one per mode.
    pub fn step(&self, j: usize) -> &[f64] {
        let m = self.grid.len();
        &self.increments[j * m..(j + 1) * m]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
}

/// Draws the noise path for `seed` on `grid` (`grid.nt` steps).
pub fn generate_noise(seed: u64, grid: &GridSpec) -> NoisePath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = grid.dt().sqrt();
    let count = grid.len() * grid.nt;
    let increments = (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect();
    NoisePath {
        seed,
        grid: *grid,
        increments,
    }
}

/// Seed of replica `index` derived from a base seed (SplitMix64 finaliser),
/// independent of how replicas are scheduled.
pub fn replica_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_noise(noise: &NoisePath, grid: &GridSpec) -> Result<()> {
    noise.grid.require_same_axes(grid, "noise path")
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::arg(format!("eps = {eps} must lie in [0, 1]")));
    }
    Ok(())
}

/// Adds `amp * F[g(x) dW(x)]` to `out`, where `dW(x) = sum_k dW_k phi_k(x)`.
/// When `g` is a constant the product stays diagonal and no transform is
/// needed.
fn add_noise(
    prop: &mut Propagator,
    dw: &[f64],
    amp: f64,
    g: impl Fn(usize) -> f64,
    constant: Option<f64>,
    work: &mut [f64],
    out: &mut [f64],
) {
    if let Some(c) = constant {
        let a = amp * c;
        for (o, w) in out.iter_mut().zip(dw) {
            *o += a * w;
        }
        return;
    }
    prop.to_physical(dw, work);
    for (i, w) in work.iter_mut().enumerate() {
        *w *= amp * g(i);
    }
    prop.to_spectral(work);
    for (o, w) in out.iter_mut().zip(work.iter()) {
        *o += w;
    }
}

/// One step of the stochastic equation from spectral state `u` with mode
/// increments `dw`, using the model's time step.
pub fn step_spde(u: &SpectralField, dw: &[f64], eps: f64, m: &ModelSpec) -> Result<SpectralField> {
    check_eps(eps)?;
    let grid = *u.grid();
    if dw.len() != grid.len() {
        return Err(Error::arg("increment slice length differs from the number of modes"));
    }
    let mut prop = Propagator::new(&grid, m.grid.dt());
    let mut coeffs = u.coeffs().to_vec();
    let mut phys = vec![0.0; grid.len()];
    let mut work = vec![0.0; grid.len()];
    spde_step(&mut prop, m, eps, &mut coeffs, dw, &mut phys, &mut work, 0)?;
    Ok(SpectralField::from_raw(grid, coeffs))
}

#[allow(clippy::too_many_arguments)]
fn spde_step(
    prop: &mut Propagator,
    m: &ModelSpec,
    eps: f64,
    coeffs: &mut [f64],
    dw: &[f64],
    phys: &mut [f64],
    work: &mut [f64],
    j: usize,
) -> Result<()> {
    prop.to_physical(coeffs, phys);
    prop.check_finite(phys, j)?;
    if eps > 0.0 {
        let state: &[f64] = phys;
        add_noise(
            prop,
            dw,
            eps.sqrt(),
            |i| m.sigma.value(state[i]),
            m.sigma.constant_value(),
            work,
            coeffs,
        );
    }
    for (c, e) in coeffs.iter_mut().zip(&prop.decay) {
        *c *= e;
    }
    add_drift(prop, m, phys, work, coeffs);
    Ok(())
}

/// Path of `u^eps` from `m.u0` driven by `noise`.
pub fn solve_u_eps(eps: f64, noise: &NoisePath, m: &ModelSpec) -> Result<Trajectory> {
    check_eps(eps)?;
    let grid = m.grid;
    check_noise(noise, &grid)?;
    let len = grid.len();
    let mut prop = Propagator::new(&grid, grid.dt());
    let mut coeffs = m.initial_field().into_values();
    prop.to_spectral(&mut coeffs);
    let mut phys = vec![0.0; len];
    let mut work = vec![0.0; len];
    let mut data = Vec::with_capacity(len * (grid.nt + 1));
    for j in 0..grid.nt {
        spde_step(&mut prop, m, eps, &mut coeffs, noise.step(j), &mut phys, &mut work, j)?;
        data.extend_from_slice(&phys);
    }
    prop.to_physical(&coeffs, &mut phys);
    prop.check_finite(&phys, grid.nt)?;
    data.extend_from_slice(&phys);
    Ok(Trajectory::from_flat_raw(grid, data))
}

/// Fluctuation limit `Y`: linear dynamics around `u0` with additive-in-law
/// noise `sigma(u0) dW`, started from zero.
pub fn solve_y(noise: &NoisePath, u0_traj: &Trajectory, m: &ModelSpec) -> Result<Trajectory> {
    let grid = *u0_traj.grid();
    check_noise(noise, &grid)?;
    let len = grid.len();
    let mut prop = Propagator::new(&grid, grid.dt());
    let mut coeffs = vec![0.0; len];
    let mut phys = vec![0.0; len];
    let mut work = vec![0.0; len];
    let mut data = Vec::with_capacity(len * (grid.nt + 1));
    let constant = m.sigma.constant_value();
    for j in 0..grid.nt {
        prop.to_physical(&coeffs, &mut phys);
        prop.check_finite(&phys, j)?;
        data.extend_from_slice(&phys);
        let u0 = u0_traj.frame(j);
        add_noise(&mut prop, noise.step(j), 1.0, |i| m.sigma.value(u0[i]), constant, &mut work, &mut coeffs);
        for (c, e) in coeffs.iter_mut().zip(&prop.decay) {
            *c *= e;
        }
        for ((w, y), u) in work.iter_mut().zip(&phys).zip(u0) {
            *w = m.f.derivative(*u) * y;
        }
        prop.to_spectral(&mut work);
        for ((c, w), dw) in coeffs.iter_mut().zip(work.iter()).zip(&prop.drift_weight) {
            *c += dw * w;
        }
    }
    prop.to_physical(&coeffs, &mut phys);
    prop.check_finite(&phys, grid.nt)?;
    data.extend_from_slice(&phys);
    Ok(Trajectory::from_flat_raw(grid, data))
}

/// Controlled process `Z^{eps,v}` of the moderate-deviation scaling:
/// noise damped by `1/h(eps)`, control source `sigma(u0 + a Z) v` and the
/// drift difference quotient `(f(u0 + a Z) - f(u0)) / a`, `a = sqrt(eps) h(eps)`.
///
/// Passing `noise = None` switches the stochastic forcing off.
pub fn solve_controlled(
    eps: f64,
    v: &Control,
    noise: Option<&NoisePath>,
    u0_traj: &Trajectory,
    sc: &ScalingSpec,
    m: &ModelSpec,
) -> Result<Trajectory> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::arg(format!("eps = {eps} must lie in (0, 1]")));
    }
    sc.h.validate()?;
    let grid = *u0_traj.grid();
    grid.require_same_axes(v.trajectory().grid(), "control vs reference path")?;
    if let Some(noise) = noise {
        check_noise(noise, &grid)?;
    }
    let h = sc.h(eps);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::arg(format!("h({eps}) = {h} is not a positive scale")));
    }
    let a = eps.sqrt() * h;
    let len = grid.len();
    let mut prop = Propagator::new(&grid, grid.dt());
    let mut coeffs = vec![0.0; len];
    let mut phys = vec![0.0; len];
    let mut work = vec![0.0; len];
    let mut sig = vec![0.0; len];
    let mut data = Vec::with_capacity(len * (grid.nt + 1));
    let constant = m.sigma.constant_value();
    let vt = v.trajectory();
    for j in 0..grid.nt {
        prop.to_physical(&coeffs, &mut phys);
        prop.check_finite(&phys, j)?;
        data.extend_from_slice(&phys);
        let u0 = u0_traj.frame(j);
        for ((s, z), u) in sig.iter_mut().zip(&phys).zip(u0) {
            *s = m.sigma.value(u + a * z);
        }
        if let Some(noise) = noise {
            add_noise(&mut prop, noise.step(j), 1.0 / h, |i| sig[i], constant, &mut work, &mut coeffs);
        }
        for (c, e) in coeffs.iter_mut().zip(&prop.decay) {
            *c *= e;
        }
        for ((w, z), u) in work.iter_mut().zip(&phys).zip(u0) {
            *w = m.f.difference_quotient(*u, *z, a);
        }
        prop.to_spectral(&mut work);
        for ((c, w), dw) in coeffs.iter_mut().zip(work.iter()).zip(&prop.drift_weight) {
            *c += dw * w;
        }
        for ((w, s), vv) in work.iter_mut().zip(&sig).zip(vt.frame(j)) {
            *w = s * vv;
        }
        prop.to_spectral(&mut work);
        for ((c, w), p) in coeffs.iter_mut().zip(work.iter()).zip(&prop.psi) {
            *c += p * w;
        }
    }
    prop.to_physical(&coeffs, &mut phys);
    prop.check_finite(&phys, grid.nt)?;
    data.extend_from_slice(&phys);
    Ok(Trajectory::from_flat_raw(grid, data))
}

/// `u^eps`, `Y` and the remainder `V^eps = (u^eps - u0)/sqrt(eps) - Y` on one
/// shared noise path.
#[derive(Debug, Clone)]
pub struct Coupled {
    pub u_eps: Trajectory,
    pub y: Trajectory,
    pub v_eps: Trajectory,
}

/// `(u^eps - u0) / sqrt(eps) - Y`, framewise.
pub fn fluctuation_remainder(
    eps: f64,
    u_eps: &Trajectory,
    u0_traj: &Trajectory,
    y: &Trajectory,
) -> Result<Trajectory> {
    if !(eps > 0.0) {
        return Err(Error::arg("eps must be positive"));
    }
    let inv = 1.0 / eps.sqrt();
    u_eps.sub(u0_traj)?.zip(y, |d, yy| d * inv - yy)
}

pub fn coupled_fluctuation(eps: f64, noise: &NoisePath, m: &ModelSpec) -> Result<Coupled> {
    let u0 = solve_u0(m)?;
    coupled_fluctuation_with(eps, noise, &u0, m)
}

/// As [`coupled_fluctuation`] with a precomputed zero-noise path.
pub fn coupled_fluctuation_with(
    eps: f64,
    noise: &NoisePath,
    u0_traj: &Trajectory,
    m: &ModelSpec,
) -> Result<Coupled> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::arg(format!("eps = {eps} must lie in (0, 1]")));
    }
    let u_eps = solve_u_eps(eps, noise, m)?;
    let y = solve_y(noise, u0_traj, m)?;
    let v_eps = fluctuation_remainder(eps, &u_eps, u0_traj, &y)?;
    Ok(Coupled { u_eps, y, v_eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cubic, InitialDatum, Sigma};
    use crate::spectral::to_spectral;

    fn grid() -> GridSpec {
        GridSpec::new(1, 16, 0.05, 50).unwrap()
    }

    #[test]
    fn noise_is_reproducible() {
        let g = grid();
        assert_eq!(generate_noise(7, &g), generate_noise(7, &g));
        assert_ne!(generate_noise(7, &g).increments(), generate_noise(8, &g).increments());
        assert_eq!(generate_noise(7, &g).increments().len(), g.len() * g.nt);
    }

    #[test]
    fn replica_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| replica_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn zero_eps_reduces_to_deterministic() {
        let g = grid();
        let m = ModelSpec::default_for(g).unwrap();
        let noise = generate_noise(1, &g);
        assert_eq!(solve_u_eps(0.0, &noise, &m).unwrap(), solve_u0(&m).unwrap());
        let u = to_spectral(&m.initial_field());
        let a = step_spde(&u, noise.step(0), 0.0, &m).unwrap();
        let b = crate::pde::step_deterministic(&u, g.dt(), &m).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_sigma_ignores_noise() {
        let g = grid();
        let m = ModelSpec::relaxed(g, Cubic::default(), Sigma::Constant { c: 0.0 }, InitialDatum::default(), 1.0).unwrap();
        let noise = generate_noise(3, &g);
        let u = solve_u_eps(0.5, &noise, &m).unwrap();
        assert_eq!(u, solve_u0(&m).unwrap());
        let y = solve_y(&noise, &u, &m).unwrap();
        assert_eq!(y.max_abs(), 0.0);
    }

    #[test]
    fn cosine_sigma_path_uses_transform() {
        let g = grid();
        let m = ModelSpec::new(g, Cubic::default(), Sigma::Cosine { amp: 1.0, freq: 1.0 }, InitialDatum::default(), 1.0).unwrap();
        let noise = generate_noise(5, &g);
        let u = solve_u_eps(0.1, &noise, &m).unwrap();
        assert!(u.max_abs().is_finite());
        assert_ne!(u, solve_u0(&m).unwrap());
    }

    #[test]
    fn mismatched_noise_rejected() {
        let g = grid();
        let m = ModelSpec::default_for(g).unwrap();
        let noise = generate_noise(1, &GridSpec::new(1, 16, 0.05, 40).unwrap());
        assert!(matches!(solve_u_eps(0.1, &noise, &m), Err(Error::AxisMismatch(_))));
        assert!(solve_u_eps(1.5, &generate_noise(1, &g), &m).is_err());
    }
}
