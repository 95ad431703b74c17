//! Boundary spectrum of the model operators and the singular-function basis
//! of `D_max / D_min`.
//!
//! For a Laplace-type link the conormal symbol of mode `k` is `σ² + μ_k`, so
//! the roots are `σ = ±i√μ_k` in closed form. A root contributes the singular
//! function `x^e (log x)^p` with `e = iσ`.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ConeModelOperator;

/// Roots closer than this to a strip line are treated as lying on it.
pub const LINE_GUARD: f64 = 1e-12;
/// Roots between `LINE_GUARD` and this distance from a line cannot be
/// classified reliably in double precision.
pub const AMBIGUITY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicialRoot {
    pub sigma: Complex64,
    pub mode_k: i64,
    pub multiplicity: u32,
    pub real_exponent_e: Complex64,
}

impl IndicialRoot {
    /// `|σ² + μ_k|` for the owning mode.
    pub fn residual(&self, model: &ConeModelOperator) -> f64 {
        (self.sigma * self.sigma + model.geometry.link_eigenvalue(self.mode_k)).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularFunction {
    pub mode_k: i64,
    pub exponent_e: Complex64,
    pub log_power: u32,
    pub description: String,
}

/// The open strip `Im σ ∈ (−γ−m, −γ)` whose roots generate `D_max / D_min`.
pub fn critical_strip(model: &ConeModelOperator) -> (f64, f64) {
    let g = model.weight_gamma;
    (-g - model.order_m as f64, -g)
}

enum Placement {
    Inside,
    Outside,
    OnLine,
}

fn place(im: f64, lo: f64, hi: f64, mode_k: i64) -> Result<Placement> {
    for line in [lo, hi] {
        let d = (im - line).abs();
        if d <= LINE_GUARD {
            return Ok(Placement::OnLine);
        }
        if d <= AMBIGUITY_BAND {
            return Err(Error::WeightOnSpectrum {
                mode_k,
                im_sigma: im,
                line,
            });
        }
    }
    Ok(if lo < im && im < hi {
        Placement::Inside
    } else {
        Placement::Outside
    })
}

fn canonical_order(a_mode: i64, a_e: Complex64, b_mode: i64, b_e: Complex64) -> Ordering {
    a_mode
        .unsigned_abs()
        .cmp(&b_mode.unsigned_abs())
        .then(a_mode.cmp(&b_mode))
        // Larger exponents first: (a, b) coordinates read a·x^{+ν} + b·x^{−ν}.
        .then(b_e.re.total_cmp(&a_e.re))
        .then(b_e.im.total_cmp(&a_e.im))
}

/// All roots of `σ² + μ_k` over all modes with `lo < Im σ < hi`, with
/// multiplicities, in canonical order. Roots on the strip lines are excluded.
pub fn boundary_spectrum(model: &ConeModelOperator, strip: (f64, f64)) -> Result<Vec<IndicialRoot>> {
    model.validate()?;
    let (lo, hi) = strip;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidStrip { lo, hi });
    }
    let reach = lo.abs().max(hi.abs()) + 1.0;
    let mut roots = Vec::new();
    for k in model.geometry.modes_up_to(reach) {
        let nu = model.geometry.mode_order(k);
        let candidates: Vec<(f64, u32)> = if nu == 0.0 {
            vec![(0.0, 2)]
        } else {
            vec![(nu, 1), (-nu, 1)]
        };
        for (im, multiplicity) in candidates {
            if let Placement::Inside = place(im, lo, hi, k)? {
                let sigma = Complex64::new(0.0, im);
                roots.push(IndicialRoot {
                    sigma,
                    mode_k: k,
                    multiplicity,
                    real_exponent_e: Complex64::i() * sigma,
                });
            }
        }
    }
    roots.sort_by(|a, b| canonical_order(a.mode_k, a.real_exponent_e, b.mode_k, b.real_exponent_e));
    Ok(roots)
}

fn fmt_real(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

fn describe(model: &ConeModelOperator, mode_k: i64, e: Complex64, p: u32) -> String {
    let exponent = if e.im == 0.0 {
        fmt_real(e.re)
    } else {
        format!("{}{:+}i", fmt_real(e.re), fmt_real(e.im))
    };
    format!(
        "ω(x)·{}·x^{}·(log x)^{}",
        model.geometry.angular_label(mode_k),
        exponent,
        p
    )
}

/// Canonical basis of `D_max / D_min`: one function per critical-strip root
/// and log power, ordered by ascending `|k|`, descending `Re e`, ascending log
/// power.
pub fn singular_basis(model: &ConeModelOperator) -> Result<Vec<SingularFunction>> {
    let roots = boundary_spectrum(model, critical_strip(model))?;
    let mut out = Vec::new();
    for r in roots {
        for p in 0..r.multiplicity {
            out.push(SingularFunction {
                mode_k: r.mode_k,
                exponent_e: r.real_exponent_e,
                log_power: p,
                description: describe(model, r.mode_k, r.real_exponent_e, p),
            });
        }
    }
    Ok(out)
}

/// Whether `D_min = x^{γ+m} H^m_b`, i.e. no root lies on `Im σ = −γ−m`.
pub fn dmin_is_weighted_sobolev(model: &ConeModelOperator) -> Result<bool> {
    model.validate()?;
    let line = critical_strip(model).0;
    let reach = line.abs() + 1.0;
    let hit = model.geometry.modes_up_to(reach).into_iter().any(|k| {
        let nu = model.geometry.mode_order(k);
        (nu - line).abs() <= LINE_GUARD || (-nu - line).abs() <= LINE_GUARD
    });
    Ok(!hit)
}

/// Distinct modes carrying singular functions, in basis order.
pub fn singular_modes(basis: &[SingularFunction]) -> Vec<i64> {
    let mut modes: Vec<i64> = Vec::new();
    for f in basis {
        if !modes.contains(&f.mode_k) {
            modes.push(f.mode_k);
        }
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_link_has_double_root_at_zero() {
        let m = ConeModelOperator::cone_laplacian();
        let roots = boundary_spectrum(&m, (-1.0, 1.0)).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].sigma, Complex64::new(0.0, 0.0));
        assert_eq!(roots[0].mode_k, 0);
        assert_eq!(roots[0].multiplicity, 2);
    }

    #[test]
    fn wide_sector_roots() {
        let m = ConeModelOperator::sector_dirichlet_laplacian(1.5 * PI);
        let roots = boundary_spectrum(&m, (-1.0, 1.0)).unwrap();
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert_eq!(r.mode_k, 1);
            assert_eq!(r.multiplicity, 1);
            assert!((r.sigma.im.abs() - 2.0 / 3.0).abs() < 1e-15);
            assert!(r.residual(&m) < 1e-12);
        }
    }

    #[test]
    fn narrow_sector_has_no_strip_roots() {
        let m = ConeModelOperator::sector_dirichlet_laplacian(PI / 2.0);
        assert!(boundary_spectrum(&m, (-1.0, 1.0)).unwrap().is_empty());
        assert!(singular_basis(&m).unwrap().is_empty());
    }

    #[test]
    fn infinite_or_reversed_strip_rejected() {
        let m = ConeModelOperator::cone_laplacian();
        assert!(boundary_spectrum(&m, (f64::NEG_INFINITY, 1.0)).is_err());
        assert!(boundary_spectrum(&m, (1.0, -1.0)).is_err());
    }

    #[test]
    fn closed_link_basis_is_one_and_log() {
        let basis = singular_basis(&ConeModelOperator::cone_laplacian()).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!((basis[0].mode_k, basis[0].log_power), (0, 0));
        assert_eq!((basis[1].mode_k, basis[1].log_power), (0, 1));
        assert!(basis.iter().all(|f| f.exponent_e == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn sector_basis_orders_growing_exponent_first() {
        let m = ConeModelOperator::sector_dirichlet_laplacian(1.5 * PI);
        let basis = singular_basis(&m).unwrap();
        assert_eq!(basis.len(), 2);
        assert!((basis[0].exponent_e.re - 2.0 / 3.0).abs() < 1e-15);
        assert!((basis[1].exponent_e.re + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(basis[0].description, "ω(x)·φ_1(θ)·x^0.666667·(log x)^0");
    }

    #[test]
    fn weighted_sobolev_minimal_domain() {
        assert!(!dmin_is_weighted_sobolev(&ConeModelOperator::cone_laplacian()).unwrap());
        let wide = ConeModelOperator::sector_dirichlet_laplacian(1.5 * PI);
        assert!(dmin_is_weighted_sobolev(&wide).unwrap());
        let half_plane = ConeModelOperator::sector_dirichlet_laplacian(PI);
        assert!(!dmin_is_weighted_sobolev(&half_plane).unwrap());
    }

    /// Hand-check oracle: list roots ±2k/3 for k ≤ 3 and look for −1.
    #[test]
    fn wide_sector_line_enumeration() {
        let on_line = (1..=3)
            .flat_map(|k| [2.0 * k as f64 / 3.0, -2.0 * k as f64 / 3.0])
            .any(|im: f64| (im + 1.0).abs() < 1e-12);
        assert!(!on_line);
    }

    #[test]
    fn near_miss_root_is_ambiguous() {
        // ν = π/α = 1 − 1e-10 sits 1e-10 inside the line Im σ = 1.
        let alpha = PI / (1.0 - 1e-10);
        let m = ConeModelOperator::sector_dirichlet_laplacian(alpha);
        assert!(matches!(
            singular_basis(&m),
            Err(Error::WeightOnSpectrum { mode_k: 1, .. })
        ));
    }
}
