//! Quadrature `L^p` norms and the discrete time-Hölder norm on trajectories.
//!
//! The Hölder seminorm is a surrogate: the supremum over `s != t` is taken over
//! all pairs of grid instants, with no interpolation between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Field;
use crate::trajectory::Trajectory;

/// Exponents used by the norm and moment estimates: spatial `p`, moment
/// order `q` and temporal Hölder exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        NormSpec {
            p: 2.0,
            q: 2.0,
            alpha: 0.2,
        }
    }
}

impl NormSpec {
    pub fn new(p: f64, q: f64, alpha: f64) -> Result<Self> {
        let ns = NormSpec { p, q, alpha };
        ns.validate()?;
        Ok(ns)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::arg(format!("p = {} must be >= 1", self.p)));
        }
        if !(self.q >= self.p && self.q.is_finite()) {
            return Err(Error::arg(format!("q = {} must be >= p = {}", self.q, self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::arg(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        Ok(())
    }

    /// Largest admissible temporal exponent for dimension `d` and initial
    /// regularity `gamma`: `alpha <= gamma/4` and `alpha < (1 - d/4)/2`.
    pub fn check_holder_band(&self, d: usize, gamma: f64) -> Result<()> {
        let strict = 0.5 * (1.0 - d as f64 / 4.0);
        if self.alpha >= strict {
            return Err(Error::Hypothesis {
                label: "holder-band",
                message: format!(
                    "alpha = {} violates alpha < (1 - d/4)/2 = {strict} for d = {d}",
                    self.alpha
                ),
            });
        }
        if self.alpha > gamma / 4.0 {
            return Err(Error::Hypothesis {
                label: "holder-band",
                message: format!(
                    "alpha = {} violates alpha <= gamma/4 = {} for gamma = {gamma}",
                    self.alpha,
                    gamma / 4.0
                ),
            });
        }
        Ok(())
    }
}

/// `(sum_j |v_j|^p w)^{1/p}` for raw nodal values with weight `w`.
pub fn lp_norm_values(values: &[f64], weight: f64, p: f64) -> f64 {
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() * weight;
    }
    if p == 2.0 {
        return (values.iter().map(|v| v * v).sum::<f64>() * weight).sqrt();
    }
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * weight).powf(1.0 / p)
}

pub fn lp_norm(f: &Field, p: f64) -> f64 {
    lp_norm_values(f.values(), f.grid().weight(), p)
}

fn lp_distance(a: &[f64], b: &[f64], weight: f64, p: f64) -> f64 {
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if p == 2.0 {
                d * d
            } else {
                d.powf(p)
            }
        })
        .sum();
    if p == 2.0 {
        (sum * weight).sqrt()
    } else {
        (sum * weight).powf(1.0 / p)
    }
}

/// Per-frame `L^p` norms.
pub fn frame_norms(tr: &Trajectory, p: f64) -> Vec<f64> {
    let w = tr.grid().weight();
    tr.frames().map(|f| lp_norm_values(f, w, p)).collect()
}

/// `sup_t ||f(t)||_p` over grid instants.
pub fn sup_lp(tr: &Trajectory, p: f64) -> f64 {
    frame_norms(tr, p).into_iter().fold(0.0, f64::max)
}

/// Supremum of `||f(t) - f(s)||_p / |t - s|^alpha` over grid pairs whose
/// lag is at most `max_lag_steps` steps.
fn holder_quotient(tr: &Trajectory, ns: &NormSpec, max_lag_steps: usize) -> f64 {
    let w = tr.grid().weight();
    let dt = tr.dt();
    let last = tr.grid().nt;
    let mut best = 0.0f64;
    for i in 0..last {
        let fi = tr.frame(i);
        for j in (i + 1)..=last.min(i + max_lag_steps) {
            let lag = (j - i) as f64 * dt;
            let q = lp_distance(tr.frame(j), fi, w, ns.p) / lag.powf(ns.alpha);
            best = best.max(q);
        }
    }
    best
}

/// Discrete `||f||_{alpha,p}`: `sup_t ||f(t)||_p` plus the Hölder quotient
/// over all distinct pairs of grid instants.
pub fn holder_norm(tr: &Trajectory, ns: &NormSpec) -> Result<f64> {
    if tr.len() < 2 {
        return Err(Error::arg("Hölder norm needs at least two time points"));
    }
    Ok(sup_lp(tr, ns.p) + holder_quotient(tr, ns, tr.grid().nt))
}

/// Discrete modulus of continuity `O_f(delta)`: the Hölder quotient
/// restricted to pairs with `|t - s| <= delta`.
pub fn continuity_modulus(tr: &Trajectory, ns: &NormSpec, delta: f64) -> Result<f64> {
    let dt = tr.dt();
    if delta < dt * (1.0 - 1e-9) {
        return Err(Error::arg(format!(
            "delta = {delta} is below the time step {dt}"
        )));
    }
    let steps = ((delta / dt) * (1.0 + 1e-9)).floor() as usize;
    Ok(holder_quotient(tr, ns, steps.max(1)))
}
