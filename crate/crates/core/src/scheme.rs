//! Exponential-Euler building blocks shared by the deterministic and
//! stochastic integrators.
//!
//! One step of every scheme has the form
//!
//! ```text
//! c_k <- e_k (c_k + noise_k) + psi_k (-|k|^2) drift_k + psi_k source_k
//! ```
//!
//! with `e_k = exp(-lambda_k dt)` and `psi_k = (1 - e_k) / lambda_k`. Drift
//! and source are evaluated pseudospectrally at the start of the step; noise
//! enters at the start of the step and is carried by the full linear flow.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::green::EigenTable;
use crate::grid::GridSpec;
use crate::spectral::{basis_for, CosineBasis, TransformScratch};

/// States whose magnitude exceeds this are treated as blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

pub(crate) struct Propagator {
    pub grid: GridSpec,
    basis: Arc<CosineBasis>,
    scratch: TransformScratch,
    pub decay: Vec<f64>,
    pub psi: Vec<f64>,
    /// `-|k|^2 psi_k`.
    pub drift_weight: Vec<f64>,
}

impl Propagator {
    pub fn new(grid: &GridSpec, dt: f64) -> Self {
        let eig = EigenTable::new(grid);
        let basis = basis_for(grid);
        let scratch = basis.scratch();
        let psi = eig.phi1(dt);
        let drift_weight = psi.iter().zip(eig.ksq()).map(|(p, s)| -s * p).collect();
        Propagator {
            grid: *grid,
            scratch,
            decay: eig.decay(dt),
            psi,
            drift_weight,
            basis,
        }
    }

    /// Coefficients to physical values.
    pub fn to_physical(&mut self, coeffs: &[f64], out: &mut [f64]) {
        out.copy_from_slice(coeffs);
        self.basis.inverse(out, &mut self.scratch);
    }

    /// Physical values to coefficients, in place.
    pub fn to_spectral(&mut self, data: &mut [f64]) {
        self.basis.forward(data, &mut self.scratch);
    }

    pub fn check_finite(&self, values: &[f64], time_index: usize) -> Result<()> {
        let mut worst = 0.0f64;
        for &v in values {
            if !v.is_finite() {
                worst = f64::INFINITY;
                break;
            }
            worst = worst.max(v.abs());
        }
        if worst > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp {
                time_index,
                time: self.grid.time(time_index),
                value: worst,
            });
        }
        Ok(())
    }
}
