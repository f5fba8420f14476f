use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product collocation grid on `[0, pi]^d` together with the uniform
/// time axis `[0, horizon]` split into `nt` steps.
///
/// Spatial nodes are the half-integer cosine points `x_j = pi (j + 1/2) / n`
/// on every axis, and the same `n` is the number of retained cosine modes
/// per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub horizon: f64,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, horizon: f64, nt: usize) -> Result<Self> {
        let grid = GridSpec { d, n, horizon, nt };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::InvalidGrid(format!("d = {} must be 1, 2 or 3", self.d)));
        }
        if self.n < 4 {
            return Err(Error::InvalidGrid(format!("n = {} must be at least 4", self.n)));
        }
        if self.nt < 1 {
            return Err(Error::InvalidGrid("nt must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon T = {} must be positive",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Number of spatial points (and of modes), `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    /// Time instant of step `j`.
    pub fn time(&self, j: usize) -> f64 {
        if j == self.nt {
            self.horizon
        } else {
            j as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.nt).map(|j| self.time(j)).collect()
    }

    pub fn node(&self, j: usize) -> f64 {
        PI * (j as f64 + 0.5) / self.n as f64
    }

    /// Uniform quadrature weight `(pi/n)^d` attached to every node.
    pub fn weight(&self) -> f64 {
        (PI / self.n as f64).powi(self.d as i32)
    }

    /// Splits a flat row-major index into per-axis indices. Unused axes are 0.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.d).rev() {
            idx[axis] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.d)
            .fold(0usize, |acc, &i| acc * self.n + i)
    }

    /// Coordinates of the node at a flat index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.node(idx[axis]);
        }
        x
    }

    /// Same spatial discretisation (time axis ignored).
    pub fn same_space(&self, other: &GridSpec) -> bool {
        self.d == other.d && self.n == other.n
    }

    /// Same spatial discretisation and time axis.
    pub fn same_axes(&self, other: &GridSpec) -> bool {
        self.same_space(other) && self.nt == other.nt && self.horizon == other.horizon
    }

    pub(crate) fn require_same_axes(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self.same_axes(other) {
            Ok(())
        } else {
            Err(Error::AxisMismatch(format!(
                "{what}: (d={}, n={}, T={}, nt={}) vs (d={}, n={}, T={}, nt={})",
                self.d, self.n, self.horizon, self.nt, other.d, other.n, other.horizon, other.nt
            )))
        }
    }

    /// Time index for an instant that must lie on the grid.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let pos = t / self.dt();
        let j = pos.round();
        if !(0.0..=self.nt as f64).contains(&j) || (pos - j).abs() > 1e-6 {
            return Err(Error::arg(format!("time {t} is not a grid instant")));
        }
        Ok(j as usize)
    }

    pub fn with_time(&self, horizon: f64, nt: usize) -> Result<Self> {
        GridSpec::new(self.d, self.n, horizon, nt)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        GridSpec::new(self.d, n, self.horizon, self.nt)
    }
}
