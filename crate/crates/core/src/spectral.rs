//! Neumann cosine eigenbasis on `[0, pi]^d`.
//!
//! Physical values live on the half-integer collocation nodes and spectral
//! coefficients are inner products against the orthonormal eigenfunctions
//! `phi_k(x) = prod_i c_{k_i} cos(k_i x_i)` with `c_0 = 1/sqrt(pi)` and
//! `c_k = sqrt(2/pi)`. With uniform weights `(pi/n)^d` the discrete transform
//! is orthogonal, so the round trip and Parseval's identity hold to rounding.
//!
//! Each axis is handled by a fast DCT-II/DCT-III pair.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{Dct2, Dct3, DctPlanner};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Real field sampled on the collocation grid (row-major over axes).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

/// Coefficients of a field in the orthonormal cosine eigenbasis, indexed by
/// the flat multi-index `k` in the same row-major order as [`Field`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<f64>,
}

fn check_len(grid: &GridSpec, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(Error::arg(format!(
            "expected {} values for d={}, n={}, got {len}",
            grid.len(),
            grid.d,
            grid.n
        )));
    }
    Ok(())
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite field value at index {pos}")));
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node; `f` receives the coordinates of the first
    /// `d` axes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|flat| {
                let x = grid.point(flat);
                f(&x[..grid.d])
            })
            .collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// `self - other`, pointwise.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a + b)
    }

    pub fn zip(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.grid.same_space(&other.grid) {
            return Err(Error::AxisMismatch("fields live on different grids".into()));
        }
        Ok(Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<f64>) -> Result<Self> {
        check_len(&grid, coeffs.len())?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("non-finite spectral coefficient"));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: GridSpec, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField { grid, coeffs }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField {
            grid,
            coeffs: vec![0.0; grid.len()],
        }
    }

    /// `amp * phi_k` for the multi-index `k` (only the first `d` entries are read).
    pub fn single_mode(grid: GridSpec, k: &[usize], amp: f64) -> Result<Self> {
        if k.len() < grid.d || k.iter().take(grid.d).any(|&ki| ki >= grid.n) {
            return Err(Error::arg(format!("mode {k:?} outside the resolved band")));
        }
        let mut c = SpectralField::zeros(grid);
        c.coeffs[grid.flat_index(k)] = amp;
        Ok(c)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn mode(&self, k: &[usize]) -> f64 {
        self.coeffs[self.grid.flat_index(k)]
    }

    /// Coefficient of the constant eigenfunction; equals `integral(f) / sqrt(pi)^d`.
    pub fn mean_mode(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Normalisation constant of the 1-D eigenfunction `cos(k x)`.
pub fn mode_normalization(k: usize) -> f64 {
    if k == 0 {
        1.0 / PI.sqrt()
    } else {
        (2.0 / PI).sqrt()
    }
}

/// Value of the orthonormal eigenfunction `phi_k` at the point `x`.
pub fn eigenfunction(k: &[usize], x: &[f64]) -> f64 {
    k.iter()
        .zip(x)
        .map(|(&ki, &xi)| mode_normalization(ki) * (ki as f64 * xi).cos())
        .product()
}

/// Per-axis DCT plans and normalisation for one resolution `n` and
/// dimension `d`. Shareable across threads; callers bring their own
/// [`TransformScratch`].
pub struct CosineBasis {
    n: usize,
    d: usize,
    dct2: Arc<dyn Dct2<f64>>,
    dct3: Arc<dyn Dct3<f64>>,
    forward_scale: Vec<f64>,
    inverse_scale: Vec<f64>,
}

impl std::fmt::Debug for CosineBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CosineBasis")
            .field("n", &self.n)
            .field("d", &self.d)
            .finish()
    }
}

/// Work buffers for [`CosineBasis`].
#[derive(Debug, Clone)]
pub struct TransformScratch {
    line: Vec<f64>,
    dct: Vec<f64>,
}

impl CosineBasis {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n;
        let mut planner = DctPlanner::new();
        let dct2 = planner.plan_dct2(n);
        let dct3 = planner.plan_dct3(n);
        let h = PI / n as f64;
        let forward_scale = (0..n).map(|k| mode_normalization(k) * h).collect();
        let inverse_scale = (0..n)
            .map(|k| {
                if k == 0 {
                    2.0 * mode_normalization(0)
                } else {
                    mode_normalization(k)
                }
            })
            .collect();
        CosineBasis {
            n,
            d: grid.d,
            dct2,
            dct3,
            forward_scale,
            inverse_scale,
        }
    }

    pub fn scratch(&self) -> TransformScratch {
        let len = self
            .dct2
            .get_scratch_len()
            .max(self.dct3.get_scratch_len());
        TransformScratch {
            line: vec![0.0; self.n],
            dct: vec![0.0; len],
        }
    }

    /// Physical values to coefficients, in place.
    pub fn forward(&self, data: &mut [f64], scratch: &mut TransformScratch) {
        let TransformScratch { line, dct } = scratch;
        self.along_axes(data, line, |buf| {
            self.dct2.process_dct2_with_scratch(buf, dct);
            for (c, s) in buf.iter_mut().zip(&self.forward_scale) {
                *c *= s;
            }
        });
    }

    /// Coefficients to physical values, in place.
    pub fn inverse(&self, data: &mut [f64], scratch: &mut TransformScratch) {
        let TransformScratch { line, dct } = scratch;
        self.along_axes(data, line, |buf| {
            for (c, s) in buf.iter_mut().zip(&self.inverse_scale) {
                *c *= s;
            }
            self.dct3.process_dct3_with_scratch(buf, dct);
        });
    }

    fn along_axes(&self, data: &mut [f64], line: &mut [f64], mut op: impl FnMut(&mut [f64])) {
        let n = self.n;
        debug_assert_eq!(data.len(), n.pow(self.d as u32));
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    op(chunk);
                }
                continue;
            }
            for block in data.chunks_exact_mut(stride * n) {
                for inner in 0..stride {
                    for (m, l) in line.iter_mut().enumerate() {
                        *l = block[inner + m * stride];
                    }
                    op(line);
                    for (m, l) in line.iter().enumerate() {
                        block[inner + m * stride] = *l;
                    }
                }
            }
        }
    }
}

thread_local! {
    static BASES: RefCell<HashMap<(usize, usize), Arc<CosineBasis>>> = RefCell::new(HashMap::new());
}

/// Shared basis for a grid, cached per thread.
pub fn basis_for(grid: &GridSpec) -> Arc<CosineBasis> {
    BASES.with(|cache| {
        cache
            .borrow_mut()
            .entry((grid.d, grid.n))
            .or_insert_with(|| Arc::new(CosineBasis::new(grid)))
            .clone()
    })
}

pub fn to_spectral(f: &Field) -> SpectralField {
    let basis = basis_for(&f.grid);
    let mut coeffs = f.values.clone();
    basis.forward(&mut coeffs, &mut basis.scratch());
    SpectralField::from_raw(f.grid, coeffs)
}

pub fn to_physical(c: &SpectralField) -> Field {
    let basis = basis_for(&c.grid);
    let mut values = c.coeffs.clone();
    basis.inverse(&mut values, &mut basis.scratch());
    Field::from_raw(c.grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(d: usize, n: usize) -> GridSpec {
        GridSpec::new(d, n, 1.0, 1).unwrap()
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = grid(1, 8);
        let c = to_spectral(&Field::constant(g, 1.0));
        assert!((c.coeffs()[0] - PI.sqrt()).abs() < 1e-13);
        for &ck in &c.coeffs()[1..] {
            assert!(ck.abs() < 1e-13);
        }
    }

    #[test]
    fn cos2x_maps_to_mode_two() {
        let g = grid(1, 8);
        let f = Field::from_fn(g, |x| (2.0 * x[0]).cos()).unwrap();
        let c = to_spectral(&f);
        for (k, &ck) in c.coeffs().iter().enumerate() {
            let want = if k == 2 { (PI / 2.0).sqrt() } else { 0.0 };
            assert!((ck - want).abs() < 1e-13, "k={k}: {ck}");
        }
    }

    #[test]
    fn mean_mode_to_unit_field() {
        let g = grid(1, 8);
        let mut c = SpectralField::zeros(g);
        c.coeffs_mut()[0] = PI.sqrt();
        for &v in to_physical(&c).values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn first_mode_to_scaled_cosine() {
        let g = grid(1, 8);
        let c = SpectralField::single_mode(g, &[1], 1.0).unwrap();
        let f = to_physical(&c);
        for (j, &v) in f.values().iter().enumerate() {
            let want = (2.0 / PI).sqrt() * g.node(j).cos();
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn three_dimensional_mode_matches_eigenfunction() {
        let g = grid(3, 6);
        let k = [2, 0, 5];
        let f = to_physical(&SpectralField::single_mode(g, &k, 1.5).unwrap());
        for flat in 0..g.len() {
            let x = g.point(flat);
            let want = 1.5 * eigenfunction(&k, &x);
            assert!((f.values()[flat] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_outside_band_rejected() {
        assert!(SpectralField::single_mode(grid(2, 4), &[4, 0], 1.0).is_err());
        assert!(Field::new(grid(1, 4), vec![0.0; 3]).is_err());
        assert!(Field::new(grid(1, 4), vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
