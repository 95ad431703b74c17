//! Power-law fits on log-log data: Schatten exponents from approximation
//! numbers and Weyl growth exponents from eigenvalue lists.

use serde::{Deserialize, Serialize};

use super::resolvent::ls_slope;
use crate::error::{Error, Result};
use crate::special::bessel_zeros_below;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchattenFit {
    pub slope: f64,
    pub implied_p: f64,
    /// 1-based inclusive index window.
    pub window: (usize, usize),
}

/// Slope of `log s_j` against `log j` over `j ∈ [lo, hi]` (1-based, inclusive).
pub fn schatten_fit(values: &[f64], window: (usize, usize)) -> Result<SchattenFit> {
    let (lo, hi) = window;
    if lo < 1 || hi <= lo || hi > values.len() {
        return Err(Error::DegenerateRange(format!("window [{lo}, {hi}] over {} values", values.len())));
    }
    let slice = &values[lo - 1..hi];
    if slice.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateRange("values must be positive".into()));
    }
    if slice.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::DegenerateRange("values must be sorted descending".into()));
    }
    let lx: Vec<f64> = (lo..=hi).map(|j| (j as f64).ln()).collect();
    let ly: Vec<f64> = slice.iter().map(|v| v.ln()).collect();
    let slope = ls_slope(&lx, &ly);
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::DegenerateRange("flat values give no exponent".into()));
    }
    Ok(SchattenFit {
        slope,
        implied_p: 1.0 / slope.abs(),
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub exponent: f64,
    pub window: (usize, usize),
    pub count: usize,
}

/// Growth exponent of `λ_j` in `j` over the middle third of the sorted list.
pub fn weyl_fit(eigenvalues: &[f64]) -> Result<WeylFit> {
    if eigenvalues.len() < 30 {
        return Err(Error::TooFewEigenvalues {
            needed: 30,
            found: eigenvalues.len(),
        });
    }
    if eigenvalues.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateRange("eigenvalues must be positive and finite".into()));
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (lo, hi) = (n / 3 + 1, 2 * n / 3);
    let lx: Vec<f64> = (lo..=hi).map(|j| (j as f64).ln()).collect();
    let ly: Vec<f64> = sorted[lo - 1..hi].iter().map(|v| v.ln()).collect();
    Ok(WeylFit {
        exponent: ls_slope(&lx, &ly),
        window: (lo, hi),
        count: n,
    })
}

/// Friedrichs Dirichlet eigenvalues `(j_{ν_k,m}/R)²` of the sector of
/// opening `alpha` below `lambda_max`, summed over all modes `ν_k = kπ/α`.
pub fn friedrichs_sector_eigenvalues(alpha: f64, outer_radius: f64, lambda_max: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < std::f64::consts::TAU) {
        return Err(Error::ScopeViolation(format!("alpha {alpha} out of (0, 2π)")));
    }
    let limit = lambda_max.sqrt() * outer_radius;
    let mut out = Vec::new();
    for k in 1.. {
        let nu = k as f64 * std::f64::consts::PI / alpha;
        // j_{ν,1} > ν
        if nu >= limit {
            break;
        }
        out.extend(
            bessel_zeros_below(nu, limit)?
                .into_iter()
                .map(|j| (j / outer_radius).powi(2)),
        );
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
