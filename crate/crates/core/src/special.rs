//! Special functions needed by the normal-operator and oracle computations.
//!
//! Everything here is built from power series that are entire in `λ`, so no
//! branch bookkeeping leaks out of this module except through
//! [`principal_sqrt_neg`].

use faer::{Mat, Side};
use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `√(−λ)` on the principal branch (`Re > 0` for `λ ∉ [0, ∞)`).
pub fn principal_sqrt_neg(lambda: Complex64) -> Complex64 {
    (-lambda).sqrt()
}

/// Frobenius coefficients of the decaying solution `K_ν(z x)` of
/// `−u'' − u'/x + ν²u/x² = λu`, `z = √(−λ)`, up to a common nonzero factor.
///
/// For `ν > 0` the coordinates are on `(x^{ν}, x^{−ν})`; for `ν = 0` on
/// `(1, log x)`.
pub fn decaying_coefficients(nu: f64, lambda: Complex64) -> [Complex64; 2] {
    let half_z = principal_sqrt_neg(lambda) / 2.0;
    if nu == 0.0 {
        [-(half_z.ln() + EULER_GAMMA), Complex64::new(-1.0, 0.0)]
    } else {
        [
            -half_z.powf(nu) / gamma(1.0 + nu),
            half_z.powf(-nu) / gamma(1.0 - nu),
        ]
    }
}

/// Double-double arithmetic (value `hi + lo`, about 32 significant digits)
/// for the alternating power series, whose terms grow to `e^{2√|z|}` times the
/// sum before they cancel.
mod dd {
    use num_complex::Complex64;

    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn quick(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

        pub fn new(x: f64) -> Dd {
            Dd { hi: x, lo: 0.0 }
        }

        /// Exact `a + b`.
        pub fn sum_of(a: f64, b: f64) -> Dd {
            two_sum(a, b)
        }

        pub fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.hi, o.hi);
            let t = two_sum(self.lo, o.lo);
            let u = quick(s.hi, s.lo + t.hi);
            quick(u.hi, u.lo + t.lo)
        }

        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        pub fn mul(self, o: Dd) -> Dd {
            let p = self.hi * o.hi;
            let e = self.hi.mul_add(o.hi, -p);
            quick(p, e + (self.hi * o.lo + self.lo * o.hi))
        }

        pub fn recip(self) -> Dd {
            let q1 = 1.0 / self.hi;
            let r = Dd::new(1.0).add(self.mul(Dd::new(q1)).neg());
            quick(q1, r.hi / self.hi)
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }
    }

    #[derive(Debug, Clone, Copy)]
    pub struct CDd {
        pub re: Dd,
        pub im: Dd,
    }

    impl CDd {
        pub const ZERO: CDd = CDd { re: Dd::ZERO, im: Dd::ZERO };

        pub fn new(z: Complex64) -> CDd {
            CDd { re: Dd::new(z.re), im: Dd::new(z.im) }
        }

        pub fn add(self, o: CDd) -> CDd {
            CDd { re: self.re.add(o.re), im: self.im.add(o.im) }
        }

        pub fn mul(self, o: CDd) -> CDd {
            CDd {
                re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
                im: self.re.mul(o.im).add(self.im.mul(o.re)),
            }
        }

        pub fn scale(self, x: Dd) -> CDd {
            CDd { re: self.re.mul(x), im: self.im.mul(x) }
        }

        pub fn norm(self) -> f64 {
            self.re.hi.hypot(self.im.hi)
        }

        pub fn to_c64(self) -> Complex64 {
            Complex64::new(self.re.to_f64(), self.im.to_f64())
        }
    }
}

use dd::{CDd, Dd};

/// Terms below this fraction of the largest term are dropped.
const SERIES_CUTOFF: f64 = 1e-34;

/// `Σ_m z^m / (m! (1+μ)_m)` and its derivative in `z`; equals
/// `Γ(1+μ)(2/w)^μ J_μ(w)` at `z = −w²/4`. Summed in double-double, so the
/// result keeps full double precision while `e^{2√|z|}` stays below ~1e16.
pub fn normalized_bessel_series(mu: f64, z: Complex64) -> (Complex64, Complex64) {
    let zd = CDd::new(z);
    let mut term = CDd::new(Complex64::new(1.0, 0.0));
    let mut sum = term;
    let mut dsum = CDd::ZERO;
    let mut peak = 1.0f64;
    for m in 1..600 {
        let mf = m as f64;
        let shifted = Dd::sum_of(mf, mu);
        // d/dz z^m c_m = m z^{m-1} c_m: reuse the previous term
        dsum = dsum.add(term.scale(shifted.recip()));
        term = term.mul(zd).scale(shifted.mul(Dd::new(mf)).recip());
        sum = sum.add(term);
        peak = peak.max(term.norm());
        if term.norm() < SERIES_CUTOFF * peak && mf > z.norm().sqrt() {
            break;
        }
    }
    (sum.to_c64(), dsum.to_c64())
}

/// `Σ_{m≥1} (−1)^{m+1} H_m w^m / (m!)²` at `w = λR²/4`, and its derivative
/// in `w`; the non-logarithmic part of the second order-zero solution.
pub fn harmonic_bessel_series(w: Complex64) -> (Complex64, Complex64) {
    let wd = CDd::new(w);
    let mut pow_over_fact = CDd::new(Complex64::new(1.0, 0.0)); // w^{m-1}/((m-1)!)²
    let mut h = Dd::ZERO;
    let mut sum = CDd::ZERO;
    let mut dsum = CDd::ZERO;
    let mut peak = 0.0f64;
    for m in 1..600 {
        let mf = m as f64;
        let inv = Dd::new(mf).recip();
        h = h.add(inv);
        let signed_h = if m % 2 == 1 { h } else { h.neg() };
        dsum = dsum.add(pow_over_fact.scale(signed_h.mul(inv)));
        pow_over_fact = pow_over_fact.mul(wd).scale(inv.mul(inv));
        let t = pow_over_fact.scale(signed_h);
        sum = sum.add(t);
        peak = peak.max(t.norm());
        if t.norm() < SERIES_CUTOFF * peak && mf > w.norm().sqrt() {
            break;
        }
    }
    (sum.to_c64(), dsum.to_c64())
}

/// `J_ν(x)` for real `x ≥ 0` and `ν > −1` by the ascending series. Accurate
/// while `e^x·1e-32` stays small against `J_ν(x)`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let z = Complex64::new(-x * x / 4.0, 0.0);
    let (s, _) = normalized_bessel_series(nu, z);
    (x / 2.0).powf(nu) / gamma(1.0 + nu) * s.re
}

/// First `count` positive zeros of `J_ν`, `ν > −1`, from the eigenvalues of the
/// symmetric tridiagonal matrix attached to the Bessel recurrence: its
/// positive eigenvalues are `1/j_{ν,k}`.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    if !(nu > -1.0 && nu.is_finite()) {
        return Err(Error::ScopeViolation(format!("Bessel order {nu} must exceed -1")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    // the k-th zero is near (k + ν/2)π; the recurrence must reach well past it
    let reach = (count as f64 + nu.max(0.0) / 2.0 + 1.0) * std::f64::consts::PI;
    let size = (2.0 * reach + 2.0 * nu.max(0.0) + 60.0).ceil() as usize;
    let t = Mat::<f64>::from_fn(size, size, |i, j| {
        if i.abs_diff(j) == 1 {
            let k = i.min(j) as f64 + 1.0;
            0.5 / ((nu + k) * (nu + k + 1.0)).sqrt()
        } else {
            0.0
        }
    });
    let eig = t
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("tridiagonal eigensolve: {e:?}")))?;
    let mut zeros: Vec<f64> = eig.iter().rev().filter(|&&v| v > 0.0).map(|v| 1.0 / v).collect();
    zeros.truncate(count);
    if zeros.len() < count {
        return Err(Error::Linalg(format!("only {} Bessel zeros resolved", zeros.len())));
    }
    Ok(zeros)
}

/// All zeros of `J_ν` below `limit`.
pub fn bessel_zeros_below(nu: f64, limit: f64) -> Result<Vec<f64>> {
    let estimate = ((limit / std::f64::consts::PI) + 2.0).ceil() as usize;
    let zeros = bessel_zeros(nu, estimate)?;
    Ok(zeros.into_iter().filter(|&j| j < limit).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn series_survives_cancellation_at_large_argument() {
        // reference values from an independent Bessel implementation
        assert!((bessel_j(0.0, 30.0) + 0.086_367_983_581_040_21).abs() < 1e-13);
        assert!((bessel_j(2.0 / 3.0, 40.0) - 0.112_439_364_649_120_22).abs() < 1e-12);
    }

    /// McMahon's expansion, an independent estimate for large zeros.
    fn mcmahon(nu: f64, k: usize) -> f64 {
        let beta = (k as f64 + nu / 2.0 - 0.25) * PI;
        let mu = 4.0 * nu * nu;
        beta - (mu - 1.0) / (8.0 * beta) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta).powi(3))
    }

    #[test]
    fn known_j0_zeros() {
        let z = bessel_zeros(0.0, 3).unwrap();
        let expect = [2.404_825_557_695_773, 5.520_078_110_286_311, 8.653_727_912_911_013];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn zeros_are_roots_of_the_series() {
        for nu in [0.0, 2.0 / 3.0, -2.0 / 3.0, 0.5] {
            for &j in &bessel_zeros(nu, 4).unwrap() {
                let slope = (bessel_j(nu, j + 1e-6) - bessel_j(nu, j - 1e-6)).abs() / 2e-6;
                assert!(bessel_j(nu, j).abs() < 1e-10 * slope.max(1.0), "nu={nu} j={j}");
            }
        }
    }

    #[test]
    fn half_order_zeros_are_multiples_of_pi() {
        // J_{1/2}(x) ∝ sin x / √x
        for (k, j) in bessel_zeros(0.5, 20).unwrap().iter().enumerate() {
            assert!((j - (k + 1) as f64 * PI).abs() < 1e-11);
        }
        // J_{-1/2}(x) ∝ cos x / √x
        for (k, j) in bessel_zeros(-0.5, 20).unwrap().iter().enumerate() {
            assert!((j - (k as f64 + 0.5) * PI).abs() < 1e-11);
        }
    }

    #[test]
    fn large_zeros_follow_mcmahon() {
        for nu in [0.0, 2.0 / 3.0, 10.0 / 3.0] {
            let z = bessel_zeros(nu, 40).unwrap();
            for (k, zk) in z.iter().enumerate().skip(30) {
                assert!((zk - mcmahon(nu, k + 1)).abs() < 1e-6, "nu={nu} k={k}");
            }
        }
    }

    #[test]
    fn zeros_below_limit() {
        let z = bessel_zeros_below(2.0 / 3.0, 20.0).unwrap();
        assert!(z.iter().all(|&j| j < 20.0));
        assert_eq!(z.len(), bessel_zeros(2.0 / 3.0, 10).unwrap().iter().filter(|&&j| j < 20.0).count());
    }

    #[test]
    fn order_zero_trace_has_unit_log_coefficient() {
        let c = decaying_coefficients(0.0, Complex64::new(-4.0, 0.0));
        // z = 2, log(z/2) = 0
        assert!((c[0] + EULER_GAMMA).norm() < 1e-15);
        assert_eq!(c[1], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn decaying_coefficients_match_half_order_closed_form() {
        // K_{1/2}(w) = √(π/(2w)) e^{−w}: x^{1/2} and x^{−1/2} coefficients are
        // proportional to (−z, 1).
        let lambda = Complex64::new(-3.0, 2.0);
        let z = principal_sqrt_neg(lambda);
        let c = decaying_coefficients(0.5, lambda);
        assert!((c[0] / c[1] + z).norm() < 1e-12);
    }

    #[test]
    fn series_matches_sine_for_half_order() {
        // Γ(3/2)(2/w)^{1/2} J_{1/2}(w) = sin w / w
        let w = 3.7f64;
        let (s, _) = normalized_bessel_series(0.5, Complex64::new(-w * w / 4.0, 0.0));
        assert!((s.re - w.sin() / w).abs() < 1e-13);
    }

    #[test]
    fn series_derivatives_match_differences() {
        let z = Complex64::new(-7.0, 3.0);
        let h = 1e-6;
        for mu in [0.0, 2.0 / 3.0, -2.0 / 3.0] {
            let (_, d) = normalized_bessel_series(mu, z);
            let fd = (normalized_bessel_series(mu, z + h).0 - normalized_bessel_series(mu, z - h).0) / (2.0 * h);
            assert!((d - fd).norm() < 1e-7 * d.norm().max(1.0));
        }
        let (_, d) = harmonic_bessel_series(z);
        let fd = (harmonic_bessel_series(z + h).0 - harmonic_bessel_series(z - h).0) / (2.0 * h);
        assert!((d - fd).norm() < 1e-7 * d.norm().max(1.0));
    }
}
