#![allow(clippy::needless_range_loop)]

use chlab::norms::sup_lp;
use chlab::pde::{solve_skeleton, solve_u0, step_deterministic, Control};
use chlab::rate::residual_control;
use chlab::spde::{generate_noise, replica_seed, solve_u_eps, solve_y};
use chlab::spectral::to_spectral;
use chlab::{Cubic, GridSpec, InitialDatum, ModelSpec, Sigma, SpectralField, Trajectory};

fn l2_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn default_model(n: usize, horizon: f64, nt: usize) -> ModelSpec {
    ModelSpec::default_for(GridSpec::new(1, n, horizon, nt).unwrap()).unwrap()
}

#[test]
fn one_step_against_two_half_steps_is_second_order() {
    let m = default_model(32, 0.1, 1);
    let u = to_spectral(&m.initial_field());
    let gap = |dt: f64| {
        let full = step_deterministic(&u, dt, &m).unwrap();
        let half = step_deterministic(&step_deterministic(&u, dt / 2.0, &m).unwrap(), dt / 2.0, &m).unwrap();
        l2_diff(&full, &half)
    };
    let g: Vec<f64> = [1e-3, 5e-4, 2.5e-4].iter().map(|&dt| gap(dt)).collect();
    for w in g.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "local order {order} from {g:?}");
    }
}

#[test]
fn global_error_is_at_least_first_order() {
    let base = default_model(32, 0.1, 250);
    let end = |nt: usize| {
        let m = base.with_grid(base.grid.with_time(0.1, nt).unwrap());
        to_spectral(&solve_u0(&m).unwrap().last())
    };
    let (a, b, c) = (end(250), end(500), end(1000));
    let order = (l2_diff(&a, &b) / l2_diff(&b, &c)).log2();
    assert!(order >= 0.9, "observed order {order}");
}

#[test]
fn sup_norm_stable_under_refinement() {
    let coarse = default_model(64, 0.1, 2000);
    let fine = coarse.with_grid(coarse.grid.with_time(0.1, 4000).unwrap());
    let s1 = sup_lp(&solve_u0(&coarse).unwrap(), 2.0);
    let s2 = sup_lp(&solve_u0(&fine).unwrap(), 2.0);
    let extrapolated = 2.0 * s2 - s1;
    assert!((s1 - extrapolated).abs() <= 0.02 * extrapolated, "{s1} {s2}");
}

fn smooth_control(grid: GridSpec, a: f64, b: f64) -> Control {
    Control::new(
        Trajectory::from_fn(grid, |t, x| a * (3.0 * t).sin() * x[0].cos() + b * t * (2.0 * x[0]).cos()).unwrap(),
    )
}

#[test]
fn skeleton_is_linear_in_the_control() {
    let m = default_model(32, 0.05, 200);
    let u0 = solve_u0(&m).unwrap();
    let v = smooth_control(m.grid, 1.0, 0.0);
    let w = smooth_control(m.grid, 0.0, 1.0);
    let (a, b) = (2.5, -0.7);
    let vw = smooth_control(m.grid, a, b);
    let zv = solve_skeleton(&v, &u0, &m).unwrap();
    let zw = solve_skeleton(&w, &u0, &m).unwrap();
    let zvw = solve_skeleton(&vw, &u0, &m).unwrap();
    let combo = zv.scaled(a).zip(&zw.scaled(b), |p, q| p + q).unwrap();
    let err = zvw.sub(&combo).unwrap().max_abs();
    assert!(err <= 1e-9 * zvw.max_abs().max(1.0), "{err}");
}

#[test]
fn control_is_recovered_from_its_skeleton_path() {
    let m = ModelSpec::new(
        GridSpec::new(1, 32, 0.1, 400).unwrap(),
        Cubic::default(),
        Sigma::Cosine { amp: 1.0, freq: 0.5 },
        InitialDatum::default(),
        1.0,
    )
    .unwrap();
    let u0 = solve_u0(&m).unwrap();
    let v = smooth_control(m.grid, 1.0, 3.0);
    let z = solve_skeleton(&v, &u0, &m).unwrap();
    let back = residual_control(&z, &u0, &m).unwrap();
    let diff = back.trajectory().sub(v.trajectory()).unwrap();
    let rel = (chlab::pde::half_energy(&diff) / chlab::pde::half_energy(v.trajectory())).sqrt();
    assert!(rel < 0.05, "relative L2 error {rel}");
}

#[test]
fn noise_increments_are_standard_normal_times_sqrt_dt() {
    let g = GridSpec::new(2, 8, 0.5, 500).unwrap();
    let noise = generate_noise(2024, &g);
    let xs = noise.increments();
    let n = xs.len() as f64;
    let dt = g.dt();
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let kurt = xs.iter().map(|x| (x / dt.sqrt()).powi(4)).sum::<f64>() / n;
    assert!(mean.abs() < 4.0 * (dt / n).sqrt(), "mean {mean}");
    assert!((var / dt - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "variance {var} vs {dt}");
    assert!((kurt - 3.0).abs() < 0.15, "kurtosis {kurt}");
    let other = generate_noise(replica_seed(2024, 0), &g);
    let corr = xs.iter().zip(other.increments()).map(|(a, b)| a * b).sum::<f64>() / (n * dt);
    assert!(corr.abs() < 4.0 / n.sqrt(), "cross-seed correlation {corr}");
    assert_eq!(generate_noise(2024, &g), noise);
}

#[test]
fn linear_additive_model_has_exact_fluctuation() {
    let m = ModelSpec::relaxed(
        GridSpec::new(1, 16, 0.01, 100).unwrap(),
        Cubic([0.0, 0.0, 0.0, 0.0]),
        Sigma::Constant { c: 0.7 },
        InitialDatum::default(),
        1.0,
    )
    .unwrap();
    let noise = generate_noise(9, &m.grid);
    let u0 = solve_u0(&m).unwrap();
    let y = solve_y(&noise, &u0, &m).unwrap();
    for eps in [1e-2, 1e-4] {
        let u = solve_u_eps(eps, &noise, &m).unwrap();
        let fl = u.sub(&u0).unwrap().scaled(1.0 / eps.sqrt());
        assert!(fl.sub(&y).unwrap().max_abs() < 1e-9);
    }
}

#[test]
fn ornstein_uhlenbeck_modes_match_discrete_variance() {
    let m = ModelSpec::relaxed(
        GridSpec::new(1, 8, 2e-4, 50).unwrap(),
        Cubic([0.0, 0.0, 0.0, 0.0]),
        Sigma::Constant { c: 1.0 },
        InitialDatum::Zero,
        1.0,
    )
    .unwrap();
    let eps = 0.5;
    let replicas = 4000;
    let mut sum2 = [0.0; 8];
    for r in 0..replicas {
        let u = solve_u_eps(eps, &generate_noise(replica_seed(1, r), &m.grid), &m).unwrap();
        for (s, c) in sum2.iter_mut().zip(to_spectral(&u.last()).coeffs()) {
            *s += c * c;
        }
    }
    let dt = m.grid.dt();
    for k in 0..8 {
        let lambda = (k * k * k * k) as f64;
        let expect: f64 = eps * dt * (1..=50).map(|i| (-2.0 * lambda * dt * i as f64).exp()).sum::<f64>();
        let var = sum2[k] / replicas as f64;
        let z = (var / expect - 1.0) / (2.0 / replicas as f64).sqrt();
        assert!(z.abs() < 4.5, "mode {k}: {var} vs {expect} (z = {z})");
    }
}
