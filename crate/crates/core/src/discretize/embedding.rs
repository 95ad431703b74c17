//! Gram matrices of `x^γ H^s_b` norms in the log coordinate `t = −log x`, for
//! measuring approximation numbers of weighted embeddings.
//!
//! With `v = e^{γt} u` the norms read `∫ |v|² dt` (`s = 0`) and
//! `∫ |v|² + |v'|² dt` (`s = 1`) on `[0, t_max]`, discretized by hats at every
//! node (natural ends). The mesh is graded so cells grow like `e^{t}`
//! until a cap: the embedding's singular functions concentrate where the
//! weight ratio `e^{(γ−γ')t}` is still moderate.

use faer::{Mat, Side};

use super::quadrature::gauss8;
use crate::error::{Error, Result};
use crate::model::WeightedSobolevParams;

/// Largest cell length of the graded log mesh.
const CELL_CAP: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct EmbeddingGrams {
    pub t_nodes: Vec<f64>,
    pub g_high: Mat<f64>,
    pub g_low: Mat<f64>,
}

/// `n_cells` cells on `[0, t_max]` with lengths `min(h₀ e^{t}, CELL_CAP)`.
pub fn graded_log_mesh(t_max: f64, n_cells: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) || n_cells < 2 {
        return Err(Error::InvalidGrid(format!("log mesh needs t_max > 0 and ≥ 2 cells (t_max={t_max}, cells={n_cells})")));
    }
    let build = |h0: f64| {
        let mut t = vec![0.0];
        while *t.last().unwrap() < t_max && t.len() <= 4 * n_cells + 8 {
            let last = *t.last().unwrap();
            t.push(last + (h0 * last.exp()).min(CELL_CAP));
        }
        t
    };
    // cell count decreases in h0
    let (mut lo, mut hi) = (1e-12f64, CELL_CAP);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if build(mid).len() - 1 > n_cells {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = build(hi);
    let end = *t.last().unwrap();
    t.iter_mut().for_each(|x| *x *= t_max / end);
    Ok(t)
}

fn check(p: &WeightedSobolevParams) -> Result<()> {
    if p.smoothness_s != 0.0 && p.smoothness_s != 1.0 {
        return Err(Error::UnsupportedSmoothness(p.smoothness_s));
    }
    if p.dim_n != 1 {
        return Err(Error::ScopeViolation(format!("embedding Grams are one-dimensional, got n = {}", p.dim_n)));
    }
    Ok(())
}

/// `(G_high, G_low)` on a graded log mesh of `n_h` cells.
pub fn assemble_embedding_grams(
    high: &WeightedSobolevParams,
    low: &WeightedSobolevParams,
    t_max: f64,
    n_h: usize,
) -> Result<EmbeddingGrams> {
    check(high)?;
    check(low)?;
    if !(high.smoothness_s > low.smoothness_s) || !(high.weight > low.weight) {
        return Err(Error::ScopeViolation(
            "the source space needs strictly more smoothness and weight than the target".into(),
        ));
    }
    let t = graded_log_mesh(t_max, n_h)?;
    let n = t.len();
    let mut gh = Mat::<f64>::zeros(n, n);
    let mut gl = Mat::<f64>::zeros(n, n);
    for c in 0..n - 1 {
        let (a, b) = (t[c], t[c + 1]);
        let h = b - a;
        for (q, w) in gauss8(a, b) {
            let phi = [(b - q) / h, (q - a) / h];
            let dphi = [-1.0 / h, 1.0 / h];
            for i in 0..2 {
                for j in 0..2 {
                    gh[(c + i, c + j)] += w * density(high, q, phi[i], dphi[i], phi[j], dphi[j]);
                    gl[(c + i, c + j)] += w * density(low, q, phi[i], dphi[i], phi[j], dphi[j]);
                }
            }
        }
    }
    Ok(EmbeddingGrams {
        t_nodes: t,
        g_high: gh,
        g_low: gl,
    })
}

/// Integrand of the norm of `v = e^{γt}u`: `e^{2γt}(u_i u_j + s·(u_i' + γu_i)(u_j' + γu_j))`.
fn density(p: &WeightedSobolevParams, t: f64, pi: f64, dpi: f64, pj: f64, dpj: f64) -> f64 {
    let g = p.weight;
    let scale = (2.0 * g * t).exp();
    let mut v = pi * pj;
    if p.smoothness_s == 1.0 {
        v += (dpi + g * pi) * (dpj + g * pj);
    }
    scale * v
}

/// Approximation numbers of the embedding, descending: square roots of the
/// generalized eigenvalues of `(G_low, G_high)`.
pub fn embedding_singular_values(grams: &EmbeddingGrams) -> Result<Vec<f64>> {
    let l = grams
        .g_high
        .llt(Side::Lower)
        .map_err(|e| Error::Linalg(format!("high Gram is not positive definite: {e:?}")))?
        .L()
        .to_owned();
    let mut x = grams.g_low.clone();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut y = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(y.as_mut());
    let ev = y
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("embedding eigensolve: {e:?}")))?;
    Ok(ev.iter().rev().map(|v| v.max(0.0).sqrt()).collect())
}
