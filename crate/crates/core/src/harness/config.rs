//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//! replicas = 200
//! output_dir = "runs/clt"
//!
//! [grid]
//! d = 1
//! n = 64
//! horizon = 0.1
//! nt = 2000
//!
//! [model]
//! f = [1.0, 0.0, -1.0, 0.0]
//! sigma = { kind = "constant", c = 1.0 }
//! u0 = { kind = "single_mode", k = [1], amp = 1.0 }
//! gamma = 1.0
//!
//! [scaling]
//! eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
//! h = { kind = "one" }
//!
//! [norms]
//! p = 2.0
//! q = 2.0
//! alpha = 0.2
//!
//! [study]
//! kind = "clt"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::lab::{KernelConfig, LatticePoint, Process};
use crate::model::{Cubic, InitialDatum, ModelSpec, ScalingSpec, Sigma};
use crate::norms::NormSpec;

/// Model coefficients; the grid lives in its own table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub f: Cubic,
    #[serde(default)]
    pub sigma: Sigma,
    #[serde(default)]
    pub u0: InitialDatum,
    #[serde(default = "one")]
    pub gamma: f64,
    /// Skip the drift and initial-datum hypotheses (degenerate test models).
    #[serde(default)]
    pub relaxed: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            f: Cubic::default(),
            sigma: Sigma::default(),
            u0: InitialDatum::default(),
            gamma: 1.0,
            relaxed: false,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_frames() -> usize {
    200
}

fn default_bases() -> usize {
    40
}

fn default_lags() -> Vec<usize> {
    vec![1, 2, 5, 10, 20, 50, 100]
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_probe_amplitude() -> f64 {
    40.0
}

fn default_radius_factor() -> f64 {
    1.75
}

fn default_min_hits() -> usize {
    30
}

fn default_thetas() -> Vec<f64> {
    vec![0.1, 0.25, 0.4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudySpec {
    /// One trajectory of `u^eps` (`eps = 0` gives the deterministic flow).
    Simulate {
        #[serde(default)]
        eps: f64,
        /// Also write the trajectory as raw little-endian `f64`.
        #[serde(default)]
        binary: bool,
    },
    Clt {
        /// Moment order; defaults to `norms.q`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        moment: Option<f64>,
        #[serde(default = "default_frames")]
        holder_frames: usize,
    },
    Holder {
        process: Process,
        #[serde(default = "default_lags")]
        lags: Vec<usize>,
        #[serde(default = "default_bases")]
        bases: usize,
    },
    Mdp {
        #[serde(default = "default_thetas")]
        thetas: Vec<f64>,
    },
    Kernel {
        #[serde(default = "KernelConfig::default_grids")]
        grids: Vec<crate::lab::KernelGrid>,
        #[serde(default = "KernelConfig::default_window")]
        window: (f64, f64),
        #[serde(default = "KernelConfig::default_lattice")]
        lattice: Vec<LatticePoint>,
    },
    /// Rate-function round trip on `v*(t, x) = amplitude sin(t) cos(x_1)`
    /// plus, when `probe` is set, the ball-probability diagnostics.
    Rate {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        probe: bool,
        #[serde(default = "default_probe_amplitude")]
        probe_amplitude: f64,
        #[serde(default = "default_radius_factor")]
        radius_factor: f64,
        #[serde(default = "default_min_hits")]
        min_hits: usize,
    },
}

impl StudySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StudySpec::Simulate { .. } => "simulate",
            StudySpec::Clt { .. } => "clt",
            StudySpec::Holder { .. } => "holder",
            StudySpec::Mdp { .. } => "mdp",
            StudySpec::Kernel { .. } => "kernel",
            StudySpec::Rate { .. } => "rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    pub output_dir: PathBuf,
    pub grid: GridSpec,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub scaling: ScalingSpec,
    #[serde(default)]
    pub norms: NormSpec,
    pub study: StudySpec,
}

fn default_replicas() -> usize {
    200
}

/// One failed check of `validate`, with the hypothesis or field it concerns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub label: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.label, self.message)
    }
}

fn diag(field: &str, e: Error) -> Diagnostic {
    match e {
        Error::Hypothesis { label, message } => Diagnostic {
            label: label.to_string(),
            message: format!("{field}: {message}"),
        },
        other => Diagnostic {
            label: field.to_string(),
            message: other.to_string(),
        },
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("config")
                .to_string();
            Error::Config {
                field,
                message: e.to_string().trim().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Every violated constraint, each labelled with the hypothesis or
    /// field it breaks. Empty when the configuration is runnable.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if let Err(e) = self.grid.validate() {
            out.push(diag("grid", e));
            return out;
        }
        let model = self.model_unchecked();
        if !self.model.relaxed {
            out.extend(model.violations().into_iter().map(|e| diag("model", e)));
        }
        if let Err(e) = self.scaling.validate() {
            out.push(diag("scaling", e));
        }
        if let Err(e) = self.norms.validate() {
            out.push(diag("norms", e));
        } else if let Err(e) = self.norms.check_holder_band(self.grid.d, self.model.gamma) {
            out.push(diag("norms.alpha", e));
        }
        if self.replicas == 0 {
            out.push(Diagnostic {
                label: "replicas".into(),
                message: "replicas must be positive".into(),
            });
        }
        match &self.study {
            StudySpec::Simulate { eps, .. } => {
                if !(0.0..=1.0).contains(eps) {
                    out.push(Diagnostic {
                        label: "study.eps".into(),
                        message: format!("eps = {eps} must lie in [0, 1]"),
                    });
                }
            }
            StudySpec::Mdp { thetas } => {
                for &t in thetas {
                    if let Err(e) = (crate::model::HFamily::Power { theta: t }).validate() {
                        out.push(diag("study.thetas", e));
                    }
                }
            }
            StudySpec::Kernel { lattice, grids, .. } => {
                for g in grids {
                    for lp in lattice {
                        if let Err(e) = lp.validate(g.d) {
                            out.push(diag(&format!("study.lattice (d = {})", g.d), e));
                        }
                    }
                }
            }
            StudySpec::Holder { process, lags, .. } => {
                if let Process::UEps { eps } = process {
                    if !(*eps > 0.0 && *eps <= 1.0) {
                        out.push(Diagnostic {
                            label: "study.process.eps".into(),
                            message: format!("eps = {eps} must lie in (0, 1]"),
                        });
                    }
                }
                if lags.iter().any(|&l| l == 0 || l > self.grid.nt) {
                    out.push(Diagnostic {
                        label: "study.lags".into(),
                        message: format!("lags must lie in 1..={}", self.grid.nt),
                    });
                }
            }
            StudySpec::Clt { moment, .. } => {
                if let Some(q) = moment {
                    if !(*q > 0.0) {
                        out.push(Diagnostic {
                            label: "study.moment".into(),
                            message: format!("moment order {q} must be positive"),
                        });
                    }
                }
            }
            StudySpec::Rate { .. } => {}
        }
        out
    }

    fn model_unchecked(&self) -> ModelSpec {
        ModelSpec {
            grid: self.grid,
            f: self.model.f,
            sigma: self.model.sigma,
            u0: self.model.u0.clone(),
            gamma: self.model.gamma,
        }
    }

    /// Validated model; the first diagnostic becomes the error.
    pub fn resolve(&self) -> Result<ModelSpec> {
        if let Some(d) = self.diagnostics().into_iter().next() {
            return Err(Error::Config {
                field: d.label,
                message: d.message,
            });
        }
        Ok(self.model_unchecked())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
output_dir = "out"
[grid]
d = 1
n = 16
horizon = 0.1
nt = 100
[study]
kind = "simulate"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.replicas, 200);
        assert_eq!(c.model, ModelSection::default());
        assert_eq!(c.study, StudySpec::Simulate { eps: 0.0, binary: false });
        assert!(c.diagnostics().is_empty());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        for study in [
            StudySpec::Clt {
                moment: Some(1.0),
                holder_frames: 100,
            },
            StudySpec::Holder {
                process: Process::UEps { eps: 0.01 },
                lags: vec![1, 10],
                bases: 5,
            },
            StudySpec::Kernel {
                grids: KernelConfig::default_grids(),
                window: (1e-4, 1e-2),
                lattice: KernelConfig::default_lattice(),
            },
        ] {
            c.study = study;
            let text = c.to_toml_string().unwrap();
            assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn missing_seed_is_an_error() {
        let text = MINIMAL.replace("seed = 7", "");
        match RunConfig::from_toml_str(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "seed"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hypothesis_labels() {
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.model.f = Cubic([-1.0, 0.0, 1.0, 0.0]);
        assert_eq!(c.diagnostics()[0].label, "H.2");
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.study = StudySpec::Mdp { thetas: vec![0.5] };
        assert_eq!(c.diagnostics()[0].label, "MDP-regime");
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.norms.alpha = 0.4;
        let d = &c.diagnostics()[0];
        assert_eq!(d.label, "holder-band");
        assert!(d.message.contains("0.375"), "{d}");
    }
}
