//! Dense spectral computations on mode pencils.
//!
//! Every pencil here has Hermitian positive-definite `M = LL*`, so `K v = λ M v`
//! is reduced to the standard problem for `C = L⁻¹ K L⁻*`, whose eigenvectors
//! `u` give `v = L⁻* u` with `‖v‖_M = ‖u‖₂`. The same `C` drives the
//! resolvent: `‖(A − λ)⁻¹‖_M = 1/σ_min(C − λ)`.

pub mod completeness;
pub mod fits;
pub mod oracle;
pub mod resolvent;

use num_complex::Complex64;

use crate::discretize::DiscreteOperatorPencil;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

pub use completeness::{completeness_certificate, completeness_residual, CompletenessCertificate};
pub use fits::{friedrichs_sector_eigenvalues, schatten_fit, weyl_fit, SchattenFit, WeylFit};
pub use oracle::{oracle_eigenvalues, SecularFunction};
pub use resolvent::{ray_minimal_growth_full, resolvent_norm, ray_verdict, Resolvent, RayVerdict, Verdict};

/// Largest accepted condition number of the diagonally scaled mass matrix.
pub const MAX_MASS_CONDITION: f64 = 1e12;
/// Fraction of the spectrum (smallest `|λ|`) trusted as converged.
pub const RETAINED_FRACTION: f64 = 0.8;

const CLUSTER_GAP: f64 = 1e-6;
const CLUSTER_ANGLE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Sorted by `|λ|`, ties by real then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Columns in the pencil basis, unit `M`-norm. Inside a defective cluster
    /// the columns are an `M`-orthonormal basis of its generalized eigenspace.
    pub eigenvectors: CMat,
    /// `‖K v − λ M v‖ / ‖v‖` per computed eigenpair.
    pub residuals: Vec<f64>,
    /// Leading pairs that are trusted.
    pub retained: usize,
    /// Index groups replaced by generalized eigenspace bases.
    pub defective_clusters: Vec<Vec<usize>>,
    /// Frobenius norm of `K`.
    pub k_norm: f64,
}

impl SpectralResult {
    pub fn retained_eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues[..self.retained]
    }

    pub fn eigenvector(&self, j: usize) -> Vec<Complex64> {
        linalg::column(self.eigenvectors.as_ref(), j)
    }

    /// Largest `|λ|` among retained pairs.
    pub fn trusted_modulus(&self) -> f64 {
        self.retained_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Condition number of `D M D` with `D = diag(M)^{−1/2}`.
pub fn scaled_mass_condition(m: &CMat) -> Result<f64> {
    let n = m.nrows();
    let mut d = vec![0.0; n];
    for (i, di) in d.iter_mut().enumerate() {
        let v = m[(i, i)].re;
        if !(v > 0.0) {
            return Ok(f64::INFINITY);
        }
        *di = 1.0 / v.sqrt();
    }
    let scaled = CMat::from_fn(n, n, |i, j| m[(i, j)] * (d[i] * d[j]));
    let s = linalg::singular_values(scaled.as_ref())?;
    let (hi, lo) = (s[0], *s.last().unwrap_or(&0.0));
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// `(L, C = L⁻¹ K L⁻*)` after the mass-conditioning check.
pub(crate) fn reduce(pencil: &DiscreteOperatorPencil) -> Result<(CMat, CMat)> {
    reduce_matrices(&pencil.k, &pencil.m)
}

pub(crate) fn reduce_matrices(k: &CMat, m: &CMat) -> Result<(CMat, CMat)> {
    linalg::sequential_kernels();
    if k.nrows() != m.nrows() || k.ncols() != m.ncols() || k.nrows() != k.ncols() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            found: m.nrows(),
        });
    }
    let condition = scaled_mass_condition(m)?;
    if !(condition <= MAX_MASS_CONDITION) {
        return Err(Error::IllConditionedMass { condition });
    }
    let l = linalg::cholesky_lower(m.as_ref())?;
    let c = linalg::congruence_inverse(l.as_ref(), k.as_ref());
    Ok((l, c))
}

fn modulus_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.norm()
        .total_cmp(&b.norm())
        .then(a.re.total_cmp(&b.re))
        .then(a.im.total_cmp(&b.im))
}

/// Full eigendecomposition of the pencil `(K, M)`.
pub fn solve_pencil(pencil: &DiscreteOperatorPencil) -> Result<SpectralResult> {
    solve_matrices(&pencil.k, &pencil.m)
}

/// [`solve_pencil`] on bare matrices.
pub fn solve_matrices(k: &CMat, m: &CMat) -> Result<SpectralResult> {
    let (l, c) = reduce_matrices(k, m)?;
    let n = c.nrows();
    let evd = c.eigen().map_err(|e| Error::Linalg(format!("eigensolve: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| modulus_order(&s[i], &s[j]));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| s[i]).collect();

    // u columns, unit 2-norm, in sorted order
    let mut u = CMat::from_fn(n, n, |r, j| evd.U()[(r, order[j])]);
    for j in 0..n {
        let nrm = linalg::norm(&linalg::column(u.as_ref(), j));
        for r in 0..n {
            u[(r, j)] /= nrm;
        }
    }
    let retained = ((n as f64) * RETAINED_FRACTION).floor() as usize;
    let clusters = defective_clusters(&eigenvalues, &u, retained);
    for cl in &clusters {
        replace_with_generalized_basis(&c, &mut u, &eigenvalues, cl)?;
    }

    let mut v = u.clone();
    linalg::solve_lower_adjoint(l.as_ref(), &mut v);
    let residuals = (0..n)
        .map(|j| {
            let vj = linalg::column(v.as_ref(), j);
            let kv = linalg::mat_vec(k.as_ref(), &vj);
            let mv = linalg::mat_vec(m.as_ref(), &vj);
            let r: Vec<Complex64> = kv.iter().zip(&mv).map(|(a, b)| a - b * eigenvalues[j]).collect();
            linalg::norm(&r) / linalg::norm(&vj)
        })
        .collect();
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: v,
        residuals,
        retained,
        defective_clusters: clusters,
        k_norm: linalg::frobenius(k.as_ref()),
    })
}

/// Groups of retained indices whose eigenvalues nearly coincide and whose
/// eigenvectors are nearly parallel.
fn defective_clusters(eigenvalues: &[Complex64], u: &CMat, retained: usize) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut assigned = vec![false; retained];
    for i in 0..retained {
        if assigned[i] {
            continue;
        }
        let mut group = vec![i];
        let ui = linalg::column(u.as_ref(), i);
        for j in i + 1..retained {
            let close = (eigenvalues[i] - eigenvalues[j]).norm() < CLUSTER_GAP * eigenvalues[i].norm().max(1.0);
            if !close || assigned[j] {
                continue;
            }
            let uj = linalg::column(u.as_ref(), j);
            let cos = linalg::dot(&ui, &uj).norm().min(1.0);
            if cos.acos() < CLUSTER_ANGLE {
                group.push(j);
            }
        }
        if group.len() > 1 {
            group.iter().for_each(|&g| assigned[g] = true);
            clusters.push(group);
        }
    }
    clusters
}

/// Orthonormal basis of `ker (C − μ)^k`, `k` the cluster size, from the
/// smallest right singular vectors.
fn replace_with_generalized_basis(c: &CMat, u: &mut CMat, eigenvalues: &[Complex64], cluster: &[usize]) -> Result<()> {
    let n = c.nrows();
    let mu = cluster.iter().map(|&i| eigenvalues[i]).sum::<Complex64>() / cluster.len() as f64;
    let shifted = c - &(linalg::identity(n) * faer::Scale(mu));
    let mut power = shifted.clone();
    for _ in 1..cluster.len() {
        power = &power * &shifted;
    }
    let svd = power.svd().map_err(|e| Error::Linalg(format!("svd: {e:?}")))?;
    let vmat = svd.V();
    for (slot, &idx) in cluster.iter().enumerate() {
        let col = n - 1 - slot;
        for r in 0..n {
            u[(r, idx)] = vmat[(r, col)];
        }
    }
    Ok(())
}
