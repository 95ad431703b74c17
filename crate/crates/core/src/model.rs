//! Domain types shared by every module: the model cone operator, rays in the
//! spectral plane, extension domains and weighted Sobolev parameters.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Cross-section of the cone together with its Laplace-type link spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    /// Closed circular link of total angle 2π; modes `k ∈ ℤ`, `μ_k = k²`.
    ClosedLink,
    /// Interval link `[0, alpha]` with Dirichlet ends; modes `k ≥ 1`,
    /// `μ_k = (kπ/alpha)²`.
    SectorLink { alpha: f64 },
}

impl Geometry {
    /// Link eigenvalue `μ_k`.
    pub fn link_eigenvalue(&self, mode_k: i64) -> f64 {
        match *self {
            Geometry::ClosedLink => (mode_k * mode_k) as f64,
            Geometry::SectorLink { alpha } => {
                let nu = mode_k as f64 * PI / alpha;
                nu * nu
            }
        }
    }

    /// `ν_k = √μ_k`.
    pub fn mode_order(&self, mode_k: i64) -> f64 {
        match *self {
            Geometry::ClosedLink => mode_k.unsigned_abs() as f64,
            Geometry::SectorLink { alpha } => mode_k as f64 * PI / alpha,
        }
    }

    pub fn has_mode(&self, mode_k: i64) -> bool {
        match self {
            Geometry::ClosedLink => true,
            Geometry::SectorLink { .. } => mode_k >= 1,
        }
    }

    /// Modes in canonical order (ascending `|k|`, then ascending `k`) whose
    /// order `ν_k` does not exceed `max_order`.
    pub fn modes_up_to(&self, max_order: f64) -> Vec<i64> {
        let mut out = Vec::new();
        match self {
            Geometry::ClosedLink => {
                let mut k = 0i64;
                while self.mode_order(k) <= max_order {
                    if k == 0 {
                        out.push(0);
                    } else {
                        out.push(-k);
                        out.push(k);
                    }
                    k += 1;
                }
            }
            Geometry::SectorLink { .. } => {
                let mut k = 1i64;
                while self.mode_order(k) <= max_order {
                    out.push(k);
                    k += 1;
                }
            }
        }
        out
    }

    /// Angular eigenfunction label used in human-readable descriptions.
    pub fn angular_label(&self, mode_k: i64) -> String {
        match self {
            Geometry::ClosedLink => format!("e^{{i{mode_k}θ}}"),
            Geometry::SectorLink { .. } => format!("φ_{mode_k}(θ)"),
        }
    }
}

/// The cone operator `A = x^{-m}((xD_x)² + Δ_Y)` on a truncated cone of
/// radius `R`, described through its link spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeModelOperator {
    pub order_m: u32,
    pub dim_n: u32,
    pub weight_gamma: f64,
    pub geometry: Geometry,
    #[serde(rename = "outer_radius_R")]
    pub outer_radius_r: f64,
    pub constant_coefficients_near_tip: bool,
}

impl ConeModelOperator {
    /// Positive Laplacian of a two-dimensional cone over the circle acting in
    /// the geometric `L²` space (`γ = −1`).
    pub fn cone_laplacian() -> Self {
        ConeModelOperator {
            order_m: 2,
            dim_n: 2,
            weight_gamma: -1.0,
            geometry: Geometry::ClosedLink,
            outer_radius_r: 1.0,
            constant_coefficients_near_tip: true,
        }
    }

    /// Dirichlet Laplacian near a corner of opening `alpha` in `L²` (`γ = −1`).
    pub fn sector_dirichlet_laplacian(alpha: f64) -> Self {
        ConeModelOperator {
            geometry: Geometry::SectorLink { alpha },
            ..Self::cone_laplacian()
        }
    }

    /// Measure weight `x^{-2γ-1}` of the per-mode pairing `∫ u v̄ x^{-2γ} dx/x`.
    pub fn measure_power(&self) -> f64 {
        -2.0 * self.weight_gamma - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_model(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(violations))
        }
    }
}

/// Every invariant violation of `model`; empty iff the model is usable downstream.
pub fn validate_model(model: &ConeModelOperator) -> Vec<String> {
    let mut out = Vec::new();
    if model.order_m == 0 {
        out.push("order_m must be positive".to_string());
    } else if model.order_m != 2 {
        out.push(format!(
            "order_m = {} unsupported: link models are second order",
            model.order_m
        ));
    }
    if model.dim_n == 0 {
        out.push("dim_n must be at least 1".to_string());
    }
    if !model.weight_gamma.is_finite() {
        out.push("weight_gamma must be finite".to_string());
    }
    if !(model.outer_radius_r > 0.0 && model.outer_radius_r.is_finite()) {
        out.push("outer_radius_R must be positive and finite".to_string());
    }
    if let Geometry::SectorLink { alpha } = model.geometry {
        if !(alpha > 0.0 && alpha < TAU) {
            out.push("alpha out of (0,2π)".to_string());
        }
    }
    if !model.constant_coefficients_near_tip {
        out.push("constant_coefficients_near_tip must be true".to_string());
    }
    out
}

/// The ray `{r e^{iθ} : r ≥ 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ray {
    pub angle_theta: f64,
}

impl Ray {
    pub fn new(theta: f64) -> Self {
        let mut a = theta.rem_euclid(TAU);
        if a >= TAU {
            a = 0.0;
        }
        Ray { angle_theta: a }
    }

    pub fn point(&self, r: f64) -> Complex64 {
        Complex64::from_polar(r, self.angle_theta)
    }

    /// True when the ray lies on the real axis (θ ∈ {0, π}).
    pub fn is_real_axis(&self) -> bool {
        let a = self.angle_theta;
        a.abs() < 1e-12 || (a - PI).abs() < 1e-12 || (TAU - a).abs() < 1e-12
    }
}

/// A subspace of the quotient `D_max / D_min`, in the singular-function basis
/// fixed by [`crate::indicial::singular_basis`].
///
/// Two domains are the same extension iff their column spans coincide; use
/// [`ExtensionDomain::same_span`] rather than comparing matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionDomain {
    #[serde(rename = "quotient_dim_D")]
    pub quotient_dim: usize,
    /// `quotient_dim` rows, one column per spanning vector.
    pub basis_matrix: Vec<Vec<Complex64>>,
}

impl ExtensionDomain {
    pub fn from_columns(quotient_dim: usize, columns: &[Vec<Complex64>]) -> Result<Self> {
        for c in columns {
            if c.len() != quotient_dim {
                return Err(Error::DimensionMismatch {
                    expected: quotient_dim,
                    found: c.len(),
                });
            }
        }
        let rows = (0..quotient_dim)
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        let dom = ExtensionDomain {
            quotient_dim,
            basis_matrix: rows,
        };
        dom.check()?;
        Ok(dom)
    }

    /// One-dimensional domain spanned by `coeffs`.
    pub fn line(coeffs: &[Complex64]) -> Result<Self> {
        Self::from_columns(coeffs.len(), &[coeffs.to_vec()])
    }

    /// `Span{a·f₁ + b·f₂}` in a two-dimensional quotient.
    pub fn from_pair(a: Complex64, b: Complex64) -> Result<Self> {
        Self::line(&[a, b])
    }

    /// The minimal domain (`d = 0`).
    pub fn minimal(quotient_dim: usize) -> Self {
        ExtensionDomain {
            quotient_dim,
            basis_matrix: vec![Vec::new(); quotient_dim],
        }
    }

    pub fn subspace_dim(&self) -> usize {
        self.basis_matrix.first().map_or(0, Vec::len)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.basis_matrix.iter().map(|r| r[j]).collect()
    }

    pub fn matrix(&self) -> linalg::CMat {
        linalg::from_rows(&self.basis_matrix, self.subspace_dim())
    }

    /// Shape and full-column-rank check.
    pub fn check(&self) -> Result<()> {
        if self.basis_matrix.len() != self.quotient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.quotient_dim,
                found: self.basis_matrix.len(),
            });
        }
        let d = self.subspace_dim();
        if let Some(bad) = self.basis_matrix.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        if d > self.quotient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.quotient_dim,
                found: d,
            });
        }
        if d > 0 {
            linalg::orthonormalize(self.matrix().as_ref())?;
        }
        Ok(())
    }

    /// Same domain with orthonormal basis columns.
    pub fn orthonormalized(&self) -> Result<Self> {
        if self.subspace_dim() == 0 {
            return Ok(self.clone());
        }
        let q = linalg::orthonormalize(self.matrix().as_ref())?;
        Ok(ExtensionDomain {
            quotient_dim: self.quotient_dim,
            basis_matrix: linalg::to_rows(q.as_ref()),
        })
    }

    /// Spans coincide (principal angles zero to `1e-12`).
    pub fn same_span(&self, other: &Self) -> bool {
        crate::grassmann::grassmann_distance(self, other).is_ok_and(|d| d < 1e-12)
    }
}

/// Parameters of the weighted space `x^weight H^s_b` in dimension `dim_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedSobolevParams {
    pub smoothness_s: f64,
    pub weight: f64,
    pub dim_n: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_reference_models_are_valid() {
        assert!(validate_model(&ConeModelOperator::cone_laplacian()).is_empty());
        let sector = ConeModelOperator::sector_dirichlet_laplacian(1.5 * PI);
        assert!(validate_model(&sector).is_empty());
    }

    #[test]
    fn wide_sector_is_rejected() {
        let sector = ConeModelOperator::sector_dirichlet_laplacian(2.5 * PI);
        assert_eq!(validate_model(&sector), vec!["alpha out of (0,2π)".to_string()]);
    }

    #[test]
    fn every_violation_is_reported() {
        let m = ConeModelOperator {
            order_m: 0,
            dim_n: 0,
            outer_radius_r: -1.0,
            constant_coefficients_near_tip: false,
            ..ConeModelOperator::cone_laplacian()
        };
        assert_eq!(validate_model(&m).len(), 4);
    }

    #[test]
    fn link_spectrum_is_monotone_in_mode() {
        for g in [Geometry::ClosedLink, Geometry::SectorLink { alpha: 1.5 * PI }] {
            let modes = g.modes_up_to(6.0);
            let mus: Vec<f64> = modes.iter().map(|&k| g.link_eigenvalue(k)).collect();
            assert!(mus.windows(2).all(|w| w[0] <= w[1]));
            assert!(mus.iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn rays_normalize_into_range() {
        assert!((Ray::new(-PI / 2.0).angle_theta - 1.5 * PI).abs() < 1e-15);
        assert_eq!(Ray::new(TAU).angle_theta, 0.0);
        assert!(Ray::new(PI).is_real_axis());
        assert!(!Ray::new(PI / 2.0).is_real_axis());
    }

    #[test]
    fn json_field_names() {
        let m = ConeModelOperator::sector_dirichlet_laplacian(4.0);
        let v = serde_json::to_value(m).unwrap();
        assert_eq!(v["outer_radius_R"], 1.0);
        assert_eq!(v["geometry"]["SectorLink"]["alpha"], 4.0);
        let back: ConeModelOperator = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);

        let d = ExtensionDomain::from_pair(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0))
            .unwrap();
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["quotient_dim_D"], 2);
        assert_eq!(v["basis_matrix"][1][0], serde_json::json!([0.0, 1.0]));
    }

    #[test]
    fn rank_deficient_domain_rejected() {
        let z = Complex64::new(0.0, 0.0);
        assert!(ExtensionDomain::from_pair(z, z).is_err());
    }
}
