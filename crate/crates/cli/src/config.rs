//! Experiment configuration: strict JSON plus command-line overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use conespectra_core::discretize::Grading;
use conespectra_core::{ConeModelOperator, Geometry};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extension {
    /// `[re, im]`.
    pub a: Complex64,
    pub b: Complex64,
}

impl Default for Extension {
    fn default() -> Self {
        Extension {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    #[serde(rename = "N_h", alias = "n_h")]
    pub n_h: usize,
    /// Geometric grading ratio; absent means a uniform grid.
    #[serde(default)]
    pub grading_q: Option<f64>,
    /// Log-coordinate length of the embedding mesh.
    pub t_max: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            n_h: 400,
            grading_q: None,
            t_max: 20.0,
        }
    }
}

impl Discretization {
    pub fn grading(&self) -> Grading {
        match self.grading_q {
            Some(ratio) => Grading::Geometric { ratio },
            None => Grading::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_geometry")]
    pub geometry: ConeModelOperator,
    #[serde(default)]
    pub extension: Extension,
    /// Ray angles in radians.
    #[serde(default = "default_rays")]
    pub rays: Vec<f64>,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default = "default_outputs")]
    pub outputs_dir: PathBuf,
}

fn default_geometry() -> ConeModelOperator {
    ConeModelOperator::sector_dirichlet_laplacian(1.5 * PI)
}

fn default_rays() -> Vec<f64> {
    vec![0.5 * PI, 1.5 * PI]
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            geometry: default_geometry(),
            extension: Extension::default(),
            rays: default_rays(),
            discretization: Discretization::default(),
            outputs_dir: default_outputs(),
        }
    }
}

/// Command-line overrides; `None` keeps the configured value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub a: Option<f64>,
    pub a_im: Option<f64>,
    pub b: Option<f64>,
    pub b_im: Option<f64>,
    pub theta: Vec<f64>,
    pub nh: Option<usize>,
    pub out: Option<PathBuf>,
}

/// A coefficient given by any of its parts is replaced as a whole; the
/// missing part is zero.
fn override_complex(current: Complex64, re: Option<f64>, im: Option<f64>) -> Complex64 {
    if re.is_none() && im.is_none() {
        current
    } else {
        Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(alpha) = o.alpha {
            self.geometry.geometry = Geometry::SectorLink { alpha };
        }
        if let Some(g) = o.gamma {
            self.geometry.weight_gamma = g;
        }
        self.extension.a = override_complex(self.extension.a, o.a, o.a_im);
        self.extension.b = override_complex(self.extension.b, o.b, o.b_im);
        if !o.theta.is_empty() {
            self.rays = o.theta.clone();
        }
        if let Some(n) = o.nh {
            self.discretization.n_h = n;
        }
        if let Some(out) = &o.out {
            self.outputs_dir = out.clone();
        }
    }

    /// Every precondition that can be checked without computing.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = conespectra_core::model::validate_model(&self.geometry);
        let e = &self.extension;
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(e.a) || !finite(e.b) {
            problems.push("extension coefficients must be finite".into());
        } else if e.a.norm() + e.b.norm() == 0.0 {
            problems.push("extension (a, b) must not vanish".into());
        }
        if self.rays.is_empty() {
            problems.push("at least one ray is required".into());
        }
        if self.rays.iter().any(|t| !t.is_finite()) {
            problems.push("ray angles must be finite".into());
        }
        let d = &self.discretization;
        if d.n_h < 8 {
            problems.push(format!("N_h = {} is below the minimum of 8", d.n_h));
        }
        if let Some(q) = d.grading_q {
            if !(q > 0.0 && q < 1.0) {
                problems.push(format!("grading_q = {q} outside (0, 1)"));
            }
        }
        if !(d.t_max > 0.0 && d.t_max.is_finite()) {
            problems.push(format!("t_max = {} must be positive", d.t_max));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"rays": [1.0], "colour": "blue"}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
        let nested = r#"{"discretization": {"N_h": 50, "t_max": 10, "extra": 1}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(nested).is_err());
    }

    #[test]
    fn complex_pairs_and_aliases_parse() {
        let text = r#"{"extension": {"a": [1, 0], "b": [0, 1]}, "discretization": {"n_h": 50, "t_max": 10}}"#;
        let c: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.extension.b, Complex64::new(0.0, 1.0));
        assert_eq!(c.discretization.n_h, 50);
        assert_eq!(c.discretization.grading(), Grading::Uniform);
    }

    #[test]
    fn partial_override_replaces_the_coefficient() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            a: Some(1.0),
            b_im: Some(1.0),
            ..Overrides::default()
        });
        assert_eq!(c.extension.a, Complex64::new(1.0, 0.0));
        assert_eq!(c.extension.b, Complex64::new(0.0, 1.0));
    }

    #[test]
    fn validation_collects_problems() {
        let mut c = ExperimentConfig::default();
        c.discretization.n_h = 2;
        c.rays.clear();
        let CliError::Config(msg) = c.validate().unwrap_err() else {
            panic!("expected a configuration error");
        };
        assert!(msg.contains("N_h") && msg.contains("ray"));
    }
}
