//! Thin helpers over `faer` for the small and mid-sized complex matrices used
//! throughout the crate.

use std::sync::Once;

use faer::{Mat, MatRef, Par, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Runs dense kernels single-threaded so results are bitwise reproducible;
/// parallelism lives at the level of independent problems instead.
pub fn sequential_kernels() {
    static INIT: Once = Once::new();
    INIT.call_once(|| faer::set_global_parallelism(Par::Seq));
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn from_rows(rows: &[Vec<Complex64>], ncols: usize) -> CMat {
    Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

pub fn to_rows(m: MatRef<'_, Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn column(m: MatRef<'_, Complex64>, j: usize) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(u: &[Complex64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis of the column span, Gram-Schmidt with one
/// reorthogonalization pass. Fails if a column is dependent on the previous
/// ones to relative tolerance `1e-12`.
pub fn orthonormalize(m: MatRef<'_, Complex64>) -> Result<CMat> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = column(m, j);
        let original = norm(&v);
        if original == 0.0 || !original.is_finite() {
            return Err(Error::RankDeficient);
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
            }
        }
        let n = norm(&v);
        if n <= 1e-12 * original {
            return Err(Error::RankDeficient);
        }
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
    }
    Ok(Mat::from_fn(rows, cols, |i, j| basis[j][i]))
}

/// Sine of the largest principal angle between the spans of two matrices with
/// orthonormal columns: `‖(I − Q₁Q₁*)Q₂‖₂`.
pub fn sin_largest_angle(q1: MatRef<'_, Complex64>, q2: MatRef<'_, Complex64>) -> f64 {
    if q2.ncols() == 0 {
        return 0.0;
    }
    let proj = q1 * (q1.adjoint() * q2);
    let resid = q2 - &proj;
    largest_singular_value(resid.as_ref()).min(1.0)
}

pub fn largest_singular_value(m: MatRef<'_, Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values()
        .ok()
        .and_then(|s| s.first().copied())
        .unwrap_or(f64::NAN)
}

pub fn singular_values(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    m.singular_values()
        .map_err(|e| Error::Linalg(format!("svd: {e:?}")))
}

/// Lower Cholesky factor `L` of a Hermitian positive-definite matrix, `A = L L*`.
pub fn cholesky_lower(a: MatRef<'_, Complex64>) -> Result<CMat> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Linalg(format!("cholesky: {e:?}")))?;
    Ok(llt.L().to_owned())
}

/// `L⁻¹ A L⁻*` for lower-triangular `L`.
pub fn congruence_inverse(l: MatRef<'_, Complex64>, a: MatRef<'_, Complex64>) -> CMat {
    let mut x = a.to_owned();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut y = x.adjoint().to_owned();
    l.solve_lower_triangular_in_place(y.as_mut());
    y.adjoint().to_owned()
}

/// Solves `L* x = b` in place for lower-triangular `L`.
pub fn solve_lower_adjoint(l: MatRef<'_, Complex64>, b: &mut CMat) {
    l.adjoint().solve_upper_triangular_in_place(b.as_mut());
}

pub fn frobenius(m: MatRef<'_, Complex64>) -> f64 {
    m.norm_l2()
}

pub fn hermitian_defect(m: MatRef<'_, Complex64>) -> f64 {
    let d = m - m.adjoint();
    d.norm_l2()
}

pub fn mat_vec(m: MatRef<'_, Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn orthonormalize_rejects_dependent_columns() {
        let m = from_rows(&[vec![c(1.0), c(2.0)], vec![c(1.0), c(2.0)]], 2);
        assert!(matches!(orthonormalize(m.as_ref()), Err(Error::RankDeficient)));
    }

    #[test]
    fn gap_between_axes() {
        let a = from_rows(&[vec![c(1.0)], vec![c(0.0)]], 1);
        let b = from_rows(&[vec![c(0.0)], vec![c(1.0)]], 1);
        assert!((sin_largest_angle(a.as_ref(), b.as_ref()) - 1.0).abs() < 1e-15);
        assert!(sin_largest_angle(a.as_ref(), a.as_ref()) < 1e-15);
    }

    #[test]
    fn congruence_matches_explicit_inverse() {
        let a = from_rows(
            &[
                vec![c(4.0), Complex64::new(1.0, 1.0)],
                vec![Complex64::new(1.0, -1.0), c(3.0)],
            ],
            2,
        );
        let k = from_rows(&[vec![c(1.0), c(2.0)], vec![c(3.0), c(4.0)]], 2);
        let l = cholesky_lower(a.as_ref()).unwrap();
        let c_mat = congruence_inverse(l.as_ref(), k.as_ref());
        let back = &l * &c_mat * l.adjoint();
        let diff = &back - &k;
        assert!(diff.norm_l2() < 1e-12);
    }
}
