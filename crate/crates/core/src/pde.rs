//! Deterministic dynamics: the zero-noise limit `u0` and the controlled
//! skeleton `Z^v` linearised around it.

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::norms::lp_norm_values;
use crate::scheme::Propagator;
use crate::spectral::SpectralField;
use crate::trajectory::Trajectory;

/// A control path `v(t, x)` with its cached cost `1/2 ∫∫ v^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    trajectory: Trajectory,
    l2_cost: f64,
    bound: Option<f64>,
}

/// `1/2 ∫_0^T ∫_D v^2 dx dt`: node quadrature in space, trapezoid in time.
pub fn half_energy(v: &Trajectory) -> f64 {
    let w = v.grid().weight();
    let nt = v.grid().nt;
    let dt = v.dt();
    let total: f64 = v
        .frames()
        .enumerate()
        .map(|(j, f)| {
            let e = f.iter().map(|x| x * x).sum::<f64>() * w;
            if j == 0 || j == nt {
                0.5 * e
            } else {
                e
            }
        })
        .sum();
    0.5 * total * dt
}

impl Control {
    pub fn new(trajectory: Trajectory) -> Self {
        let l2_cost = half_energy(&trajectory);
        Control {
            trajectory,
            l2_cost,
            bound: None,
        }
    }

    /// Control restricted to the ball `∫∫ v^2 <= n_bound`.
    pub fn with_bound(trajectory: Trajectory, n_bound: f64) -> Result<Self> {
        let c = Control::new(trajectory);
        if 2.0 * c.l2_cost > n_bound {
            return Err(Error::arg(format!(
                "control energy {} exceeds the admissibility radius {n_bound}",
                2.0 * c.l2_cost
            )));
        }
        Ok(Control {
            bound: Some(n_bound),
            ..c
        })
    }

    pub fn zero(grid: crate::grid::GridSpec) -> Self {
        Control::new(Trajectory::zeros(grid))
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn l2_cost(&self) -> f64 {
        self.l2_cost
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::arg(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// Drift increment `-|k|^2 psi_k F[f(u)]_k` for the physical state `u`,
/// added into `out`.
pub(crate) fn add_drift(
    prop: &mut Propagator,
    m: &ModelSpec,
    u_phys: &[f64],
    work: &mut [f64],
    out: &mut [f64],
) {
    for (w, &u) in work.iter_mut().zip(u_phys) {
        *w = m.f.value(u);
    }
    prop.to_spectral(work);
    for ((o, w), dw) in out.iter_mut().zip(work.iter()).zip(&prop.drift_weight) {
        *o += dw * w;
    }
}

/// One exponential-Euler step of the deterministic equation.
pub fn step_deterministic(u: &SpectralField, dt: f64, m: &ModelSpec) -> Result<SpectralField> {
    check_dt(dt)?;
    let grid = *u.grid();
    let mut prop = Propagator::new(&grid, dt);
    let mut phys = vec![0.0; grid.len()];
    let mut work = vec![0.0; grid.len()];
    prop.to_physical(u.coeffs(), &mut phys);
    prop.check_finite(&phys, 0)?;
    let mut next: Vec<f64> = u
        .coeffs()
        .iter()
        .zip(&prop.decay)
        .map(|(c, e)| e * c)
        .collect();
    add_drift(&mut prop, m, &phys, &mut work, &mut next);
    Ok(SpectralField::from_raw(grid, next))
}

/// Zero-noise path from `m.u0` over the model's time grid.
pub fn solve_u0(m: &ModelSpec) -> Result<Trajectory> {
    let grid = m.grid;
    let mut prop = Propagator::new(&grid, grid.dt());
    let len = grid.len();
    let mut coeffs = m.initial_field().into_values();
    prop.to_spectral(&mut coeffs);
    let mut data = Vec::with_capacity(len * (grid.nt + 1));
    let mut phys = vec![0.0; len];
    let mut work = vec![0.0; len];
    for j in 0..grid.nt {
        prop.to_physical(&coeffs, &mut phys);
        prop.check_finite(&phys, j)?;
        data.extend_from_slice(&phys);
        for (c, e) in coeffs.iter_mut().zip(&prop.decay) {
            *c *= e;
        }
        add_drift(&mut prop, m, &phys, &mut work, &mut coeffs);
    }
    prop.to_physical(&coeffs, &mut phys);
    prop.check_finite(&phys, grid.nt)?;
    data.extend_from_slice(&phys);
    Ok(Trajectory::from_flat_raw(grid, data))
}

/// `sup_t ||u0(t)||_p` for a computed zero-noise path.
pub fn sup_norm_u0(u0: &Trajectory, p: f64) -> f64 {
    let w = u0.grid().weight();
    u0.frames().map(|f| lp_norm_values(f, w, p)).fold(0.0, f64::max)
}

/// Skeleton path `Z^v`: linear dynamics around `u0` driven by `sigma(u0) v`,
/// started from zero.
pub fn solve_skeleton(v: &Control, u0_traj: &Trajectory, m: &ModelSpec) -> Result<Trajectory> {
    let grid = *u0_traj.grid();
    grid.require_same_axes(v.trajectory().grid(), "control vs reference path")?;
    if !grid.same_space(&m.grid) {
        return Err(Error::AxisMismatch("model grid differs from reference path".into()));
    }
    let len = grid.len();
    let mut prop = Propagator::new(&grid, grid.dt());
    let mut coeffs = vec![0.0; len];
    let mut phys = vec![0.0; len];
    let mut work = vec![0.0; len];
    let mut data = Vec::with_capacity(len * (grid.nt + 1));
    let vt = v.trajectory();
    for j in 0..grid.nt {
        prop.to_physical(&coeffs, &mut phys);
        prop.check_finite(&phys, j)?;
        data.extend_from_slice(&phys);
        let u0 = u0_traj.frame(j);
        for ((w, z), u) in work.iter_mut().zip(&phys).zip(u0) {
            *w = m.f.derivative(*u) * z;
        }
        prop.to_spectral(&mut work);
        for ((c, e), (w, dw)) in coeffs
            .iter_mut()
            .zip(&prop.decay)
            .zip(work.iter().zip(&prop.drift_weight))
        {
            *c = e * *c + dw * w;
        }
        for ((w, u), vv) in work.iter_mut().zip(u0).zip(vt.frame(j)) {
            *w = m.sigma.value(*u) * vv;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{semigroup_apply, EigenTable};
    use crate::grid::GridSpec;
    use crate::model::{Cubic, InitialDatum, Sigma};
    use crate::spectral::{to_physical, to_spectral, Field};

    fn grid(nt: usize) -> GridSpec {
        GridSpec::new(1, 32, 0.1, nt).unwrap()
    }

    #[test]
    fn zero_drift_step_is_semigroup() {
        let g = grid(10);
        let m = ModelSpec::relaxed(g, Cubic([0.0; 4]), Sigma::default(), InitialDatum::default(), 1.0).unwrap();
        let u = to_spectral(&Field::from_fn(g, |x| x[0].cos() + 0.3 * (3.0 * x[0]).cos()).unwrap());
        let stepped = step_deterministic(&u, 0.01, &m).unwrap();
        let exact = semigroup_apply(&u, 0.01, &EigenTable::new(&g)).unwrap();
        for (a, b) in stepped.coeffs().iter().zip(exact.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(step_deterministic(&u, 0.0, &m).is_err());
    }

    #[test]
    fn constant_state_is_fixed_point() {
        let g = grid(10);
        let m = ModelSpec::default_for(g).unwrap();
        let u = to_spectral(&Field::constant(g, 0.7));
        let next = to_physical(&step_deterministic(&u, 0.01, &m).unwrap());
        for &v in next.values() {
            assert!((v - 0.7).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_datum_stays_zero() {
        let g = grid(50);
        let m = ModelSpec::new(g, Cubic::default(), Sigma::default(), InitialDatum::Zero, 1.0).unwrap();
        assert_eq!(solve_u0(&m).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn mean_is_conserved() {
        let g = grid(200);
        let u0 = InitialDatum::SmoothBump { amp: 1.5, width: 0.5 };
        let m = ModelSpec::new(g, Cubic::default(), Sigma::default(), u0, 1.0).unwrap();
        let tr = solve_u0(&m).unwrap();
        let mean0 = to_spectral(&tr.frame_field(0)).mean_mode();
        for j in 0..tr.len() {
            let mj = to_spectral(&tr.frame_field(j)).mean_mode();
            assert!((mj - mean0).abs() < 1e-8, "j={j}");
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let g = GridSpec::new(1, 16, 1.0, 100).unwrap();
        let m = ModelSpec::relaxed(g, Cubic([-50.0, 0.0, 0.0, 0.0]), Sigma::default(), InitialDatum::SingleMode { k: vec![1], amp: 5.0 }, 1.0)
            .unwrap();
        match solve_u0(&m) {
            Err(Error::BlowUp { time_index, .. }) => assert!(time_index > 0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn skeleton_of_zero_control_vanishes() {
        let g = grid(40);
        let m = ModelSpec::default_for(g).unwrap();
        let u0 = solve_u0(&m).unwrap();
        let z = solve_skeleton(&Control::zero(g), &u0, &m).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let other = GridSpec::new(1, 32, 0.1, 41).unwrap();
        assert!(solve_skeleton(&Control::zero(other), &u0, &m).is_err());
    }

    #[test]
    fn control_cost_and_bound() {
        let g = GridSpec::new(1, 16, 1.0, 100).unwrap();
        let v = Trajectory::from_fn(g, |_, _| 1.0).unwrap();
        let c = Control::new(v.clone());
        assert!((c.l2_cost() - 0.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!(Control::with_bound(v.clone(), 3.0).is_err());
        assert_eq!(Control::with_bound(v, 3.2).unwrap().bound(), Some(3.2));
    }
}
