//! Resolvent norms along rays and the discrete minimal-growth verdict.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reduce, solve_pencil, SpectralResult};
use crate::discretize::DiscreteOperatorPencil;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::Ray;

/// Accepted band for the log-log slope of `‖R(λ)‖` against `|λ|`.
pub const SLOPE_BAND: (f64, f64) = (-1.15, -0.85);
/// Largest `|λ|·‖R(λ)‖` accepted as a bounded minimal-growth constant.
pub const SUP_BOUND_LIMIT: f64 = 100.0;
/// Probe radii may reach this fraction of the largest retained `|λ|`.
pub const TRUST_FRACTION: f64 = 0.1;

/// Cached reduction `C = L⁻¹KL⁻*` for repeated resolvent evaluations.
#[derive(Debug, Clone)]
pub struct Resolvent {
    c: CMat,
    c_norm: f64,
}

impl Resolvent {
    pub fn new(pencil: &DiscreteOperatorPencil) -> Result<Self> {
        let (_, c) = reduce(pencil)?;
        Self::from_reduced(c)
    }

    pub fn from_matrices(k: &CMat, m: &CMat) -> Result<Self> {
        let (_, c) = super::reduce_matrices(k, m)?;
        Self::from_reduced(c)
    }

    fn from_reduced(c: CMat) -> Result<Self> {
        let c_norm = linalg::largest_singular_value(c.as_ref());
        Ok(Resolvent { c, c_norm })
    }

    /// `‖(A − λ)⁻¹‖` in the `M`-inner product; `+∞` when `λ` is numerically an
    /// eigenvalue.
    pub fn norm_at(&self, lambda: Complex64) -> Result<f64> {
        let n = self.c.nrows();
        let shifted = CMat::from_fn(n, n, |i, j| if i == j { self.c[(i, j)] - lambda } else { self.c[(i, j)] });
        let s = linalg::singular_values(shifted.as_ref())?;
        let smin = s.last().copied().unwrap_or(0.0);
        let floor = 10.0 * n as f64 * f64::EPSILON * self.c_norm.max(lambda.norm());
        Ok(if smin <= floor { f64::INFINITY } else { 1.0 / smin })
    }

    /// `(A − λ)⁻¹` as a matrix acting on `L*`-coordinates (tests and identities).
    pub fn matrix_at(&self, lambda: Complex64) -> Result<CMat> {
        let n = self.c.nrows();
        let shifted = CMat::from_fn(n, n, |i, j| if i == j { self.c[(i, j)] - lambda } else { self.c[(i, j)] });
        let lu = shifted.partial_piv_lu();
        use faer::linalg::solvers::Solve;
        Ok(lu.solve(linalg::identity(n)))
    }
}

/// `‖(A_D − λ)⁻¹‖` for the discrete operator `M⁻¹K`.
pub fn resolvent_norm(pencil: &DiscreteOperatorPencil, lambda: Complex64) -> Result<f64> {
    Resolvent::new(pencil)?.norm_at(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Minimal,
    Fails,
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayVerdict {
    pub ray: Ray,
    pub radii: Vec<f64>,
    pub resolvent_norms: Vec<f64>,
    /// `sup r·‖R(r e^{iθ})‖` over the probes.
    pub sup_bound: f64,
    /// Least-squares slope of `log ‖R‖` against `log r`.
    pub slope: f64,
    pub verdict: Verdict,
}

impl RayVerdict {
    pub fn is_minimal(&self) -> bool {
        self.verdict == Verdict::Minimal
    }
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Classify probed resolvent norms.
pub fn classify(radii: &[f64], norms: &[f64]) -> (f64, f64, Verdict) {
    if norms.iter().any(|v| !v.is_finite()) {
        return (f64::INFINITY, f64::NAN, Verdict::Fails);
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let slope = ls_slope(&lx, &ly);
    let sup = radii.iter().zip(norms).map(|(r, v)| r * v).fold(0.0, f64::max);
    let verdict = if !(slope >= SLOPE_BAND.0 && slope <= SLOPE_BAND.1) {
        Verdict::Fails
    } else if sup <= SUP_BOUND_LIMIT {
        Verdict::Minimal
    } else {
        Verdict::Uncertified
    };
    (sup, slope, verdict)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    let ok = radii.len() >= 2
        && radii.iter().all(|r| *r > 0.0 && r.is_finite())
        && radii.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::ScopeViolation("probe radii must be ≥ 2 increasing positive values".into()))
    }
}

/// Verdict from a cached resolvent and the pencil's spectrum.
pub fn ray_verdict(resolvent: &Resolvent, spectrum: &SpectralResult, ray: &Ray, radii: &[f64]) -> Result<RayVerdict> {
    check_radii(radii)?;
    let limit = TRUST_FRACTION * spectrum.trusted_modulus();
    let top = *radii.last().expect("checked");
    if top > limit {
        return Err(Error::TrustLimitExceeded { radius: top, limit });
    }
    let norms: Vec<f64> = radii
        .par_iter()
        .map(|&r| resolvent.norm_at(ray.point(r)))
        .collect::<Result<_>>()?;
    let (sup_bound, slope, verdict) = classify(radii, &norms);
    Ok(RayVerdict {
        ray: *ray,
        radii: radii.to_vec(),
        resolvent_norms: norms,
        sup_bound,
        slope,
        verdict,
    })
}

/// Minimal-growth test of the discrete operator along `ray`.
pub fn ray_minimal_growth_full(pencil: &DiscreteOperatorPencil, ray: &Ray, radii: &[f64]) -> Result<RayVerdict> {
    let spectrum = solve_pencil(pencil)?;
    let resolvent = Resolvent::new(pencil)?;
    ray_verdict(&resolvent, &spectrum, ray, radii)
}

/// Probe radii before scaling to a pencil's trust limit.
pub const DEFAULT_PROBE_RADII: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

/// `base` rescaled so its largest radius sits at the trust limit of
/// `spectrum`; relative spacing is kept.
pub fn scaled_probe_radii(base: &[f64], spectrum: &SpectralResult) -> Vec<f64> {
    let top = base.iter().copied().fold(0.0, f64::max);
    let factor = TRUST_FRACTION * spectrum.trusted_modulus() / top;
    base.iter().map(|r| r * factor).collect()
}

/// `n` log-spaced radii from `lo` to `hi`.
pub fn log_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}
