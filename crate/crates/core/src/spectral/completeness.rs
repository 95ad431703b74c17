//! Expansion residuals in eigenvectors, and the angular-gap certificate.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::resolvent::RayVerdict;
use super::SpectralResult;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Residuals `‖f − P_N f‖_M` of the `M`-orthogonal projection of `f` onto the
/// span of the first `N` retained eigenvectors, for each `N` in `n_list`.
///
/// The spans are nested, so the residual is nonincreasing in `N`.
pub fn completeness_residual(
    spectral: &SpectralResult,
    mass: &CMat,
    f: &[Complex64],
    n_list: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let n = mass.nrows();
    if f.len() != n || spectral.eigenvectors.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    if max_n > spectral.retained {
        return Err(Error::NotEnoughRetained {
            requested: max_n,
            retained: spectral.retained,
        });
    }
    let l = linalg::cholesky_lower(mass.as_ref())?;
    // work in w = L* v, where the M-inner product is Euclidean
    let to_w = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n).map(|i| (i..n).map(|r| l[(r, i)].conj() * v[r]).sum()).collect()
    };
    let mut r = to_w(f);
    let f_norm = linalg::norm(&r);
    if (f_norm - 1.0).abs() > 1e-8 {
        return Err(Error::ScopeViolation(format!("test vector must have unit M-norm, has {f_norm}")));
    }
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut after = Vec::with_capacity(max_n + 1);
    after.push(linalg::norm(&r));
    for j in 0..max_n {
        let mut q = to_w(&spectral.eigenvector(j));
        let original = linalg::norm(&q);
        for _ in 0..2 {
            for b in &basis {
                let c = linalg::dot(b, &q);
                q.iter_mut().zip(b).for_each(|(x, bi)| *x -= c * bi);
            }
        }
        let qn = linalg::norm(&q);
        if qn > 1e-13 * original {
            q.iter_mut().for_each(|x| *x /= qn);
            let c = linalg::dot(&q, &r);
            r.iter_mut().zip(&q).for_each(|(x, qi)| *x -= c * qi);
            basis.push(q);
        }
        let prev = *after.last().expect("nonempty");
        after.push(linalg::norm(&r).min(prev));
    }
    Ok(n_list.iter().map(|&k| (k, after[k])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessCertificate {
    pub n: u32,
    pub m: u32,
    pub schatten_p: f64,
    pub rays: Vec<RayVerdict>,
    /// Largest cyclic gap between adjacent ray angles.
    pub max_gap: f64,
    pub complete: bool,
}

/// Largest cyclic gap between the given angles (radians); `2π` for one angle.
pub fn max_angular_gap(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return TAU;
    }
    let mut a: Vec<f64> = angles.iter().map(|t| t.rem_euclid(TAU)).collect();
    a.sort_by(f64::total_cmp);
    let mut gap: f64 = a[0] + TAU - a[a.len() - 1];
    for w in a.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// Completeness holds when every ray is of minimal growth and adjacent rays
/// enclose angles at most `π·m/n`.
pub fn completeness_certificate(n: u32, m: u32, verdicts: &[RayVerdict]) -> CompletenessCertificate {
    let angles: Vec<f64> = verdicts.iter().map(|v| v.ray.angle_theta).collect();
    let max_gap = max_angular_gap(&angles);
    let all_minimal = !verdicts.is_empty() && verdicts.iter().all(RayVerdict::is_minimal);
    let bound = PI * m as f64 / n as f64;
    CompletenessCertificate {
        n,
        m,
        schatten_p: n as f64 / m as f64,
        rays: verdicts.to_vec(),
        max_gap,
        complete: all_minimal && max_gap <= bound + 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Ray;
    use crate::spectral::resolvent::Verdict;
    use crate::spectral::solve_matrices;
    use proptest::prelude::*;

    fn verdict(theta: f64, v: Verdict) -> RayVerdict {
        RayVerdict {
            ray: Ray::new(theta),
            radii: vec![1.0, 10.0],
            resolvent_norms: vec![1.0, 0.1],
            sup_bound: 1.0,
            slope: -1.0,
            verdict: v,
        }
    }

    #[test]
    fn two_opposite_rays_certify() {
        let c = completeness_certificate(2, 2, &[verdict(PI / 2.0, Verdict::Minimal), verdict(1.5 * PI, Verdict::Minimal)]);
        assert!(c.complete);
        assert!((c.max_gap - PI).abs() < 1e-15);
        assert_eq!(c.schatten_p, 1.0);
    }

    #[test]
    fn failing_or_missing_ray_blocks() {
        let c = completeness_certificate(2, 2, &[verdict(PI / 2.0, Verdict::Minimal), verdict(1.5 * PI, Verdict::Fails)]);
        assert!(!c.complete);
        let c = completeness_certificate(2, 2, &[verdict(PI / 2.0, Verdict::Minimal)]);
        assert!(!c.complete);
        assert!((c.max_gap - TAU).abs() < 1e-15);
        assert!(!completeness_certificate(2, 2, &[]).complete);
    }

    #[test]
    fn residual_vanishes_for_an_eigenvector() {
        let k = CMat::from_fn(6, 6, |i, j| {
            if i == j {
                Complex64::new((i + 1) as f64, 0.0)
            } else if j == i + 1 {
                Complex64::new(0.3, 0.2)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let m = linalg::identity(6);
        let s = solve_matrices(&k, &m).unwrap();
        let f = s.eigenvector(0);
        let r = completeness_residual(&s, &m, &f, &[0, 1, 2]).unwrap();
        assert!((r[0].1 - 1.0).abs() < 1e-12);
        assert!(r[1].1 < 1e-12);
        assert!(matches!(
            completeness_residual(&s, &m, &f, &[5]),
            Err(Error::NotEnoughRetained { .. })
        ));
    }

    proptest! {
        #[test]
        fn wide_gaps_never_certify(angles in proptest::collection::vec(0.0..TAU, 1..6)) {
            let vs: Vec<RayVerdict> = angles.iter().map(|&t| verdict(t, Verdict::Minimal)).collect();
            let c = completeness_certificate(2, 2, &vs);
            if max_angular_gap(&angles) > PI + 1e-12 {
                prop_assert!(!c.complete);
            }
        }

        #[test]
        fn residuals_nonincreasing(seed in proptest::collection::vec(-1.0..1.0f64, 64), fs in proptest::collection::vec(-1.0..1.0f64, 16)) {
            let k = CMat::from_fn(8, 8, |i, j| Complex64::new(seed[8 * i + j] + if i == j { 4.0 * i as f64 } else { 0.0 }, 0.0));
            let m = CMat::from_fn(8, 8, |i, j| Complex64::new(if i == j { 2.0 } else { 0.05 }, 0.0));
            let s = solve_matrices(&k, &m).unwrap();
            let mut f: Vec<Complex64> = (0..8).map(|i| Complex64::new(fs[i], fs[8 + i])).collect();
            let mf = linalg::mat_vec(m.as_ref(), &f);
            let nrm = linalg::dot(&f, &mf).re.sqrt();
            prop_assume!(nrm > 1e-3);
            f.iter_mut().for_each(|z| *z /= nrm);
            let r = completeness_residual(&s, &m, &f, &[0, 1, 2, 3, 4, 5, 6]).unwrap();
            prop_assert!(r.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
        }
    }
}
