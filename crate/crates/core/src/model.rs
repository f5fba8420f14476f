//! Problem data: cubic drift `f`, bounded Lipschitz noise coefficient
//! `sigma`, initial datum `u0`, and the deviation scale `h(eps)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::Field;

/// `f(u) = a3 u^3 + a2 u^2 + a1 u + a0`, stored as `[a3, a2, a1, a0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cubic(pub [f64; 4]);

impl Default for Cubic {
    fn default() -> Self {
        Cubic([1.0, 0.0, -1.0, 0.0])
    }
}

impl Cubic {
    pub fn a3(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        let [a3, a2, a1, a0] = self.0;
        ((a3 * u + a2) * u + a1) * u + a0
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        let [a3, a2, a1, _] = self.0;
        (3.0 * a3 * u + 2.0 * a2) * u + a1
    }

    #[inline]
    pub fn second_derivative(&self, u: f64) -> f64 {
        let [a3, a2, _, _] = self.0;
        6.0 * a3 * u + 2.0 * a2
    }

    /// `(f(u + a z) - f(u)) / a`, expanded so that it stays exact as `a -> 0`.
    #[inline]
    pub fn difference_quotient(&self, u: f64, z: f64, a: f64) -> f64 {
        let [a3, a2, _, _] = self.0;
        let delta = a * z;
        z * (self.derivative(u) + (3.0 * a3 * u + a2) * delta + a3 * delta * delta)
    }

    /// Constant `C` with `|f(u+δ) - f(u) - f'(u)δ| <= C (2|u| + |δ| + 1) δ²`.
    pub fn remainder_constant(&self) -> f64 {
        let [a3, a2, _, _] = self.0;
        (1.5 * a3.abs()).max(a2.abs()).max(a3.abs())
    }
}

/// Closed registry of noise coefficients, each bounded and Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sigma {
    /// `sigma(u) = c`.
    Constant { c: f64 },
    /// `sigma(u) = amp * cos(freq * u)`.
    Cosine {
        #[serde(default = "one")]
        amp: f64,
        #[serde(default = "one")]
        freq: f64,
    },
    /// `sigma(u) = base + amp * u / (1 + u^2)`.
    RationalBounded { base: f64, amp: f64 },
}

fn one() -> f64 {
    1.0
}

impl Default for Sigma {
    fn default() -> Self {
        Sigma::Constant { c: 1.0 }
    }
}

impl Sigma {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Sigma::Constant { c } => c,
            Sigma::Cosine { amp, freq } => amp * (freq * u).cos(),
            Sigma::RationalBounded { base, amp } => base + amp * u / (1.0 + u * u),
        }
    }

    /// Certified bound `M` with `|sigma| <= M`.
    pub fn bound(&self) -> f64 {
        match *self {
            Sigma::Constant { c } => c.abs(),
            Sigma::Cosine { amp, .. } => amp.abs(),
            Sigma::RationalBounded { base, amp } => base.abs() + 0.5 * amp.abs(),
        }
    }

    /// Certified Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Sigma::Constant { .. } => 0.0,
            Sigma::Cosine { amp, freq } => (amp * freq).abs(),
            Sigma::RationalBounded { amp, .. } => amp.abs(),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            Sigma::Constant { c } => Some(c),
            _ => None,
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Sigma::Constant { c } => vec![c],
            Sigma::Cosine { amp, freq } => vec![amp, freq],
            Sigma::RationalBounded { base, amp } => vec![base, amp],
        }
    }
}

/// Registry of smooth initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    /// `amp * prod_i cos(k_i x_i)`; missing axes default to 0.
    SingleMode { k: Vec<usize>, amp: f64 },
    /// `amp * exp(-|x - c|^2 / (2 width^2))` centred at the middle of the box.
    SmoothBump { amp: f64, width: f64 },
    Zero,
}

impl Default for InitialDatum {
    fn default() -> Self {
        InitialDatum::SingleMode { k: vec![1], amp: 1.0 }
    }
}

impl InitialDatum {
    pub fn sample(&self, grid: &GridSpec) -> Field {
        let f = |x: &[f64]| match self {
            InitialDatum::SingleMode { k, amp } => x
                .iter()
                .enumerate()
                .map(|(a, xi)| (k.get(a).copied().unwrap_or(0) as f64 * xi).cos())
                .product::<f64>()
                * amp,
            InitialDatum::SmoothBump { amp, width } => {
                let r2: f64 = x.iter().map(|xi| (xi - FRAC_PI_2).powi(2)).sum();
                amp * (-r2 / (2.0 * width * width)).exp()
            }
            InitialDatum::Zero => 0.0,
        };
        Field::from_fn(*grid, f).unwrap_or_else(|_| Field::zeros(*grid))
    }
}

/// Full problem data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub grid: GridSpec,
    pub f: Cubic,
    pub sigma: Sigma,
    pub u0: InitialDatum,
    pub gamma: f64,
}

impl ModelSpec {
    /// Builds a model and checks every standing hypothesis.
    pub fn new(grid: GridSpec, f: Cubic, sigma: Sigma, u0: InitialDatum, gamma: f64) -> Result<Self> {
        let m = ModelSpec::relaxed(grid, f, sigma, u0, gamma)?;
        if let Some(e) = m.violations().into_iter().next() {
            return Err(e);
        }
        Ok(m)
    }

    /// Builds a model without enforcing the drift and initial-datum
    /// hypotheses. Used for degenerate diagnostic models such as `f = 0` or
    /// linear `f`; only the grid is validated.
    pub fn relaxed(grid: GridSpec, f: Cubic, sigma: Sigma, u0: InitialDatum, gamma: f64) -> Result<Self> {
        grid.validate()?;
        Ok(ModelSpec {
            grid,
            f,
            sigma,
            u0,
            gamma,
        })
    }

    /// `f(u) = u^3 - u`, `sigma = 1`, `u0 = cos(x_1)`, `gamma = 1`.
    pub fn default_for(grid: GridSpec) -> Result<Self> {
        ModelSpec::new(
            grid,
            Cubic::default(),
            Sigma::default(),
            InitialDatum::default(),
            1.0,
        )
    }

    pub fn with_grid(&self, grid: GridSpec) -> ModelSpec {
        ModelSpec {
            grid,
            ..self.clone()
        }
    }

    /// Every hypothesis violation, each labelled with the hypothesis it breaks.
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let hyp = |label: &'static str, message: String| Error::Hypothesis { label, message };
        if self.sigma.params().iter().any(|p| !p.is_finite()) {
            out.push(hyp("H.1", "noise coefficient parameters must be finite".into()));
        }
        if self.f.0.iter().any(|a| !a.is_finite()) {
            out.push(hyp("H.2", "drift coefficients must be finite".into()));
        } else if !(self.f.a3() > 0.0) {
            out.push(hyp(
                "H.2",
                format!(
                    "drift must be a cubic with positive leading coefficient, got a3 = {}",
                    self.f.a3()
                ),
            ));
        }
        match &self.u0 {
            InitialDatum::SingleMode { k, amp } => {
                if !amp.is_finite() {
                    out.push(hyp("H.3", "initial amplitude must be finite".into()));
                }
                if k.len() > self.grid.d || k.iter().any(|&ki| ki >= self.grid.n) {
                    out.push(hyp(
                        "H.3",
                        format!("initial mode {k:?} is not resolved on d={}, n={}", self.grid.d, self.grid.n),
                    ));
                }
            }
            InitialDatum::SmoothBump { amp, width } => {
                if !amp.is_finite() || !(*width > 0.0 && width.is_finite()) {
                    out.push(hyp("H.3", "bump needs a finite amplitude and positive width".into()));
                }
            }
            InitialDatum::Zero => {}
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            out.push(hyp(
                "H.4",
                format!("Hölder exponent gamma = {} must lie in (0, 1]", self.gamma),
            ));
        }
        out
    }

    pub fn initial_field(&self) -> Field {
        self.u0.sample(&self.grid)
    }
}

pub fn f_eval(u: &Field, m: &ModelSpec) -> Field {
    u.map(|v| m.f.value(v))
}

pub fn f_prime(u: &Field, m: &ModelSpec) -> Field {
    u.map(|v| m.f.derivative(v))
}

pub fn f_second(u: &Field, m: &ModelSpec) -> Field {
    u.map(|v| m.f.second_derivative(v))
}

pub fn sigma_eval(u: &Field, m: &ModelSpec) -> Field {
    u.map(|v| m.sigma.value(v))
}

/// Deviation scale `h(eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HFamily {
    /// `h = 1`: central-limit scale.
    One,
    /// `h = 1/sqrt(eps)`: large-deviation scale.
    InvSqrt,
    /// `h = eps^{-theta}`, `theta in (0, 1/2)`.
    Power { theta: f64 },
    /// `h = sqrt(log(1/eps))`.
    Log,
}

impl HFamily {
    pub fn h(&self, eps: f64) -> f64 {
        match *self {
            HFamily::One => 1.0,
            HFamily::InvSqrt => 1.0 / eps.sqrt(),
            HFamily::Power { theta } => eps.powf(-theta),
            HFamily::Log => (1.0 / eps).ln().sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let HFamily::Power { theta } = *self {
            if !(theta > 0.0 && theta < 0.5) {
                return Err(Error::Hypothesis {
                    label: "MDP-regime",
                    message: format!(
                        "h(eps) = eps^-theta needs theta in (0, 1/2) so that h -> inf and sqrt(eps) h -> 0; got theta = {theta}"
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub eps: Vec<f64>,
    pub h: HFamily,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        ScalingSpec {
            eps: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            h: HFamily::One,
        }
    }
}

impl ScalingSpec {
    pub fn new(eps: Vec<f64>, h: HFamily) -> Result<Self> {
        let sc = ScalingSpec { eps, h };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        self.h.validate()?;
        for &e in &self.eps {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::arg(format!("eps = {e} must lie in (0, 1]")));
            }
            if matches!(self.h, HFamily::Log) && e >= 1.0 {
                return Err(Error::arg("logarithmic h(eps) vanishes at eps = 1"));
            }
        }
        Ok(())
    }

    pub fn h(&self, eps: f64) -> f64 {
        self.h.h(eps)
    }
}
