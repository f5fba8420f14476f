use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::Field;

/// Time-indexed sequence of fields on the uniform time grid `t_j = j T / nt`,
/// `j = 0..=nt`. Frames are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: GridSpec,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: GridSpec, frames: Vec<Field>) -> Result<Self> {
        if frames.len() != grid.nt + 1 {
            return Err(Error::arg(format!(
                "trajectory needs {} frames, got {}",
                grid.nt + 1,
                frames.len()
            )));
        }
        let mut data = Vec::with_capacity(grid.len() * frames.len());
        for f in &frames {
            if !f.grid().same_space(&grid) {
                return Err(Error::AxisMismatch("frame grid differs from trajectory grid".into()));
            }
            data.extend_from_slice(f.values());
        }
        Ok(Trajectory { grid, data })
    }

    /// Builds a trajectory from a flat frame-major buffer.
    pub fn from_flat(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() * (grid.nt + 1) {
            return Err(Error::arg("flat trajectory buffer has the wrong length"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite trajectory value"));
        }
        Ok(Trajectory { grid, data })
    }

    pub(crate) fn from_flat_raw(grid: GridSpec, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len() * (grid.nt + 1));
        Trajectory { grid, data }
    }

    /// Samples `f(t, x)` on every grid instant and node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, &[f64]) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.len() * (grid.nt + 1));
        for j in 0..=grid.nt {
            let t = grid.time(j);
            for flat in 0..grid.len() {
                let x = grid.point(flat);
                data.push(f(t, &x[..grid.d]));
            }
        }
        Trajectory::from_flat(grid, data)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Trajectory {
            grid,
            data: vec![0.0; grid.len() * (grid.nt + 1)],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.nt + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.grid.time(j)
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn frame(&self, j: usize) -> &[f64] {
        let m = self.grid.len();
        &self.data[j * m..(j + 1) * m]
    }

    pub fn frame_field(&self, j: usize) -> Field {
        Field::from_raw(self.grid, self.frame(j).to_vec())
    }

    pub fn last(&self) -> Field {
        self.frame_field(self.grid.nt)
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.grid.len())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Trajectory {
        Trajectory::from_flat_raw(self.grid, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, a: f64) -> Trajectory {
        self.map(|v| a * v)
    }

    pub fn zip(&self, other: &Trajectory, f: impl Fn(f64, f64) -> f64) -> Result<Trajectory> {
        self.grid.require_same_axes(&other.grid, "trajectory combination")?;
        Ok(Trajectory::from_flat_raw(
            self.grid,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.zip(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Keeps every `stride`-th frame (and the last one when it lands on the
    /// stride), producing a trajectory on the coarser time grid.
    pub fn subsample(&self, stride: usize) -> Result<Trajectory> {
        if stride == 0 || !self.grid.nt.is_multiple_of(stride) {
            return Err(Error::arg(format!(
                "stride {stride} does not divide nt = {}",
                self.grid.nt
            )));
        }
        let grid = self.grid.with_time(self.grid.horizon, self.grid.nt / stride)?;
        let mut data = Vec::with_capacity(grid.len() * (grid.nt + 1));
        for j in (0..=self.grid.nt).step_by(stride) {
            data.extend_from_slice(self.frame(j));
        }
        Ok(Trajectory::from_flat_raw(grid, data))
    }
}
