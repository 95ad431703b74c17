//! Enriched Galerkin discretization of one angular mode of the truncated cone
//! operator, and Gram matrices for weighted Sobolev embeddings.
//!
//! Mode `k` reduces `A` to `L_ν u = −u'' − u'/x + ν²u/x²` on `(0, R]` with
//! `u(R) = 0`, in the pairing `⟨u, v⟩ = ∫ u v̄ x^p dx`, `p = −2γ − 1`. The
//! trial space is the hats vanishing at the first node and at `R`, plus one
//! enrichment `s = ω(x)·g(x)` carrying the domain's singular behavior, placed
//! as the last column.

pub mod container;
pub mod embedding;
pub mod quadrature;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicial::singular_basis;
use crate::linalg::{self, CMat, ZERO};
use crate::model::{ConeModelOperator, ExtensionDomain};
use quadrature::{gauss8, geometric_subcells, split_at};

pub use embedding::{assemble_embedding_grams, embedding_singular_values, graded_log_mesh, EmbeddingGrams};

/// Geometric subcells per mesh cell inside the enrichment's support.
const ENRICHED_SUBCELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Grading {
    Uniform,
    /// Cell lengths shrink by `ratio` toward the tip; first node `R·ratio^{N−1}`.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialGrid {
    /// Strictly increasing, positive, last node equal to `R`.
    pub nodes: Vec<f64>,
    pub grading: Grading,
}

impl RadialGrid {
    pub fn new(outer_radius: f64, n_h: usize, grading: Grading) -> Result<Self> {
        if n_h < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 nodes, got {n_h}")));
        }
        if !(outer_radius > 0.0 && outer_radius.is_finite()) {
            return Err(Error::InvalidGrid(format!("outer radius {outer_radius} must be positive")));
        }
        let nodes: Vec<f64> = match grading {
            Grading::Uniform => (1..=n_h).map(|j| outer_radius * j as f64 / n_h as f64).collect(),
            Grading::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::InvalidGrid(format!("grading ratio {ratio} outside (0, 1)")));
                }
                (1..=n_h)
                    .map(|j| outer_radius * ratio.powi((n_h - j) as i32))
                    .collect()
            }
        };
        let grid = RadialGrid { nodes, grading };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.nodes.len() >= 4
            && self.nodes[0] > 0.0
            && self.nodes.windows(2).all(|w| w[1] > w[0])
            && self.nodes.iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid("nodes must be positive, finite and strictly increasing".into()))
        }
    }

    pub fn outer_radius(&self) -> f64 {
        *self.nodes.last().expect("checked nonempty")
    }

    pub fn hat_count(&self) -> usize {
        self.nodes.len() - 2
    }
}

/// Cutoff `ω`: 1 on `[0, R/4]`, 0 on `[R/2, ∞)`, quintic smoothstep between.
/// Returns `(ω, ω', ω'')`.
pub fn cutoff(x: f64, outer_radius: f64) -> (f64, f64, f64) {
    let q = outer_radius / 4.0;
    let t = (x - q) / q;
    if t <= 0.0 {
        (1.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let v = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let d1 = -30.0 * t * t * (1.0 - t) * (1.0 - t) / q;
        let d2 = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (q * q);
        (v, d1, d2)
    }
}

/// `g = a·x^{ν} + b·x^{−ν}` (or `a + b·log x` when `ν = 0`), the tip
/// behavior of the enrichment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Enrichment {
    pub nu: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub outer_radius: f64,
}

impl Enrichment {
    /// `(g, g')` at `x > 0`.
    pub fn tip(&self, x: f64) -> (Complex64, Complex64) {
        if self.nu == 0.0 {
            (self.a + self.b * x.ln(), self.b / x)
        } else {
            let (up, down) = (x.powf(self.nu), x.powf(-self.nu));
            (
                self.a * up + self.b * down,
                (self.a * up - self.b * down) * (self.nu / x),
            )
        }
    }

    /// `(s, s')`.
    pub fn value(&self, x: f64) -> (Complex64, Complex64) {
        let (w, w1, _) = cutoff(x, self.outer_radius);
        if w == 0.0 && w1 == 0.0 {
            return (ZERO, ZERO);
        }
        let (g, g1) = self.tip(x);
        (g * w, g * w1 + g1 * w)
    }

    /// `L_ν s`; vanishes off `[R/4, R/2]` because `L_ν g = 0`.
    pub fn applied(&self, x: f64) -> Complex64 {
        let (_, w1, w2) = cutoff(x, self.outer_radius);
        if w1 == 0.0 && w2 == 0.0 {
            return ZERO;
        }
        let (g, g1) = self.tip(x);
        -(g * w2) - g1 * (2.0 * w1) - g * (w1 / x)
    }

    /// `∫₀^X |g|² x^p dx` in closed form.
    fn tip_mass(&self, upper: f64, p: f64) -> f64 {
        let q = p + 1.0;
        let cross = 2.0 * (self.a * self.b.conj()).re;
        if self.nu == 0.0 {
            let l = upper.ln();
            let xq = upper.powf(q);
            let i0 = xq / q;
            let i1 = xq * (l / q - 1.0 / (q * q));
            let i2 = xq * (l * l / q - 2.0 * l / (q * q) + 2.0 / (q * q * q));
            self.a.norm_sqr() * i0 + cross * i1 + self.b.norm_sqr() * i2
        } else {
            let nu = self.nu;
            self.a.norm_sqr() * upper.powf(q + 2.0 * nu) / (q + 2.0 * nu)
                + cross * upper.powf(q) / q
                + self.b.norm_sqr() * upper.powf(q - 2.0 * nu) / (q - 2.0 * nu)
        }
    }
}

/// Stiffness/mass pencil `K c = λ M c` for one mode.
#[derive(Debug, Clone)]
pub struct DiscreteOperatorPencil {
    pub mode_k: i64,
    pub nu: f64,
    pub measure_power: f64,
    pub grid: RadialGrid,
    pub enrichment: Option<Enrichment>,
    /// `K[i][j] = ⟨L ψ_j, ψ_i⟩` in the energy sense.
    pub k: CMat,
    /// `M[i][j] = ⟨ψ_j, ψ_i⟩`.
    pub m: CMat,
    pub basis_labels: Vec<String>,
}

impl DiscreteOperatorPencil {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// `u(x) = Σ c_j ψ_j(x)`.
    pub fn evaluate(&self, coeffs: &[Complex64], x: f64) -> Complex64 {
        let nodes = &self.grid.nodes;
        let mut u = ZERO;
        if let Some(c) = cell_of(nodes, x) {
            let (xl, xr) = (nodes[c], nodes[c + 1]);
            let h = xr - xl;
            let nh = self.grid.hat_count();
            if c >= 1 && c <= nh {
                u += coeffs[c - 1] * ((xr - x) / h);
            }
            if c < nh {
                u += coeffs[c] * ((x - xl) / h);
            }
        }
        if let Some(e) = &self.enrichment {
            u += coeffs[self.dim() - 1] * e.value(x).0;
        }
        u
    }

    /// `(c* M c)^{1/2}`.
    pub fn mass_norm(&self, c: &[Complex64]) -> f64 {
        let mc = linalg::mat_vec(self.m.as_ref(), c);
        linalg::dot(c, &mc).re.max(0.0).sqrt()
    }

    /// `M`-orthogonal projection of `f` onto the trial space, as coefficients.
    pub fn project(&self, f: impl Fn(f64) -> Complex64 + Sync) -> Result<Vec<Complex64>> {
        let n = self.dim();
        let nodes = &self.grid.nodes;
        let p = self.measure_power;
        let mut rhs = vec![ZERO; n];
        let nh = self.grid.hat_count();
        for c in 0..nodes.len() - 1 {
            for (l, r) in self.subcells(nodes[c], nodes[c + 1]) {
                for (x, wq) in gauss8(l, r) {
                    let w = wq * x.powf(p);
                    let fx = f(x);
                    for (i, phi, _) in hats_on_cell(nodes, nh, c, x) {
                        rhs[i] += fx * (phi * w);
                    }
                    if let Some(e) = &self.enrichment {
                        rhs[n - 1] += fx * e.value(x).0.conj() * w;
                    }
                }
            }
        }
        if let Some(e) = &self.enrichment {
            for (l, r) in geometric_subcells(nodes[0] * 1e-14, nodes[0], 48) {
                for (x, wq) in gauss8(l, r) {
                    rhs[n - 1] += f(x) * e.value(x).0.conj() * (wq * x.powf(p));
                }
            }
        }
        let l = linalg::cholesky_lower(self.m.as_ref())?;
        let mut b = Mat::from_fn(n, 1, |i, _| rhs[i]);
        l.solve_lower_triangular_in_place(b.as_mut());
        linalg::solve_lower_adjoint(l.as_ref(), &mut b);
        Ok(linalg::column(b.as_ref(), 0))
    }

    fn subcells(&self, xl: f64, xr: f64) -> Vec<(f64, f64)> {
        subcells(xl, xr, self.grid.outer_radius(), self.enrichment.is_some())
    }
}

fn subcells(xl: f64, xr: f64, outer: f64, enriched: bool) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (l, r) in split_at(xl, xr, &[outer / 4.0, outer / 2.0]) {
        if enriched && l < outer / 2.0 {
            out.extend(geometric_subcells(l, r, ENRICHED_SUBCELLS));
        } else {
            out.push((l, r));
        }
    }
    out
}

fn cell_of(nodes: &[f64], x: f64) -> Option<usize> {
    if x < nodes[0] || x > *nodes.last()? {
        return None;
    }
    let idx = nodes.partition_point(|&n| n <= x);
    Some(idx.saturating_sub(1).min(nodes.len() - 2))
}

/// Hats supported on cell `c` at `x`: `(hat index, value, derivative)`.
fn hats_on_cell(nodes: &[f64], nh: usize, c: usize, x: f64) -> impl Iterator<Item = (usize, f64, f64)> {
    let (xl, xr) = (nodes[c], nodes[c + 1]);
    let h = xr - xl;
    let left = (c >= 1 && c <= nh).then(|| (c - 1, (xr - x) / h, -1.0 / h));
    let right = (c < nh).then(|| (c, (x - xl) / h, 1.0 / h));
    left.into_iter().chain(right)
}

/// A matrix entry contribution `(row, col, K value, M value)`.
type Entry = (usize, usize, Complex64, Complex64);

fn cell_entries(
    nodes: &[f64],
    nh: usize,
    c: usize,
    nu: f64,
    p: f64,
    enrichment: Option<&Enrichment>,
) -> Vec<Entry> {
    let outer = *nodes.last().expect("nonempty");
    let e_idx = nh;
    let mut local: Vec<Entry> = Vec::new();
    let mut add = |i: usize, j: usize, k: Complex64, m: Complex64| {
        match local.iter_mut().find(|(a, b, _, _)| *a == i && *b == j) {
            Some(slot) => {
                slot.2 += k;
                slot.3 += m;
            }
            None => local.push((i, j, k, m)),
        }
    };
    for (l, r) in subcells(nodes[c], nodes[c + 1], outer, enrichment.is_some()) {
        for (x, wq) in gauss8(l, r) {
            let w = wq * x.powf(p);
            let hats: Vec<(usize, f64, f64)> = hats_on_cell(nodes, nh, c, x).collect();
            for &(i, pi, dpi) in &hats {
                for &(j, pj, dpj) in &hats {
                    let k = dpj * dpi + (p - 1.0) * dpj * pi / x + nu * nu * pj * pi / (x * x);
                    add(i, j, Complex64::new(k * w, 0.0), Complex64::new(pj * pi * w, 0.0));
                }
            }
            if let Some(e) = enrichment {
                let (s, ds) = e.value(x);
                let ls = e.applied(x);
                for &(i, pi, dpi) in &hats {
                    add(i, e_idx, ls * (pi * w), s * (pi * w));
                    let k_row = if p == 1.0 {
                        (ls * (pi * w)).conj()
                    } else {
                        (ds.conj() * dpi + s.conj() * ((p - 1.0) * dpi / x) + s.conj() * (nu * nu * pi / (x * x))) * w
                    };
                    add(e_idx, i, k_row, (s * (pi * w)).conj());
                }
            }
        }
    }
    local
}

/// Enrichment–enrichment entries `(K_ss, M_ss)`.
fn enrichment_diagonal(e: &Enrichment, p: f64) -> (Complex64, Complex64) {
    let outer = e.outer_radius;
    let mut k = ZERO;
    let mut m = e.tip_mass(outer / 4.0, p);
    for i in 0..16 {
        let l = outer / 4.0 + outer / 4.0 * i as f64 / 16.0;
        let r = l + outer / 64.0;
        for (x, wq) in gauss8(l, r) {
            let w = wq * x.powf(p);
            let (s, _) = e.value(x);
            k += e.applied(x) * s.conj() * w;
            m += s.norm_sqr() * w;
        }
    }
    (k, Complex64::new(m, 0.0))
}

/// Enrichment coefficients `(a, b)` of `domain` on mode `mode_k`, or `None`
/// when the domain adds nothing on this mode.
fn mode_enrichment(model: &ConeModelOperator, mode_k: i64, domain: &ExtensionDomain) -> Result<Option<(Complex64, Complex64)>> {
    let basis = singular_basis(model)?;
    if domain.quotient_dim != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: domain.quotient_dim,
        });
    }
    domain.check()?;
    let d = domain.subspace_dim();
    if d > 1 {
        return Err(Error::ScopeViolation(format!("pencils support d ∈ {{0, 1}}, got d = {d}")));
    }
    let slots: Vec<usize> = (0..basis.len()).filter(|&i| basis[i].mode_k == mode_k).collect();
    if d == 0 {
        return Ok(None);
    }
    if slots.len() != 2 {
        return Err(Error::ScopeViolation(format!(
            "mode {mode_k} has no singular functions and accepts only the minimal domain"
        )));
    }
    for &i in &slots {
        let e = basis[i].exponent_e.re;
        if e <= model.weight_gamma {
            return Err(Error::EnrichmentNotWeighted(e));
        }
    }
    let v = domain.column(0);
    let others = (0..v.len()).filter(|i| !slots.contains(i)).any(|i| v[i] != ZERO);
    if others {
        return Err(Error::ScopeViolation("domain couples several modes".into()));
    }
    Ok(Some((v[slots[0]], v[slots[1]])))
}

/// Assemble the enriched pencil of mode `mode_k` for `domain`.
pub fn assemble_mode_pencil(
    model: &ConeModelOperator,
    mode_k: i64,
    grid: &RadialGrid,
    domain: &ExtensionDomain,
) -> Result<DiscreteOperatorPencil> {
    model.validate()?;
    grid.check()?;
    if !model.geometry.has_mode(mode_k) {
        return Err(Error::ScopeViolation(format!("mode {mode_k} does not exist for this link")));
    }
    if (grid.outer_radius() - model.outer_radius_r).abs() > 1e-12 * model.outer_radius_r {
        return Err(Error::InvalidGrid("grid must end at the outer radius R".into()));
    }
    let nu = model.geometry.mode_order(mode_k);
    let p = model.measure_power();
    let enrichment = mode_enrichment(model, mode_k, domain)?.map(|(a, b)| Enrichment {
        nu,
        a,
        b,
        outer_radius: model.outer_radius_r,
    });
    let nodes = &grid.nodes;
    let nh = grid.hat_count();
    let n = nh + usize::from(enrichment.is_some());
    let per_cell: Vec<Vec<Entry>> = (0..nodes.len() - 1)
        .into_par_iter()
        .map(|c| cell_entries(nodes, nh, c, nu, p, enrichment.as_ref()))
        .collect();
    let mut k = CMat::zeros(n, n);
    let mut m = CMat::zeros(n, n);
    for (i, j, kv, mv) in per_cell.into_iter().flatten() {
        k[(i, j)] += kv;
        m[(i, j)] += mv;
    }
    let mut labels: Vec<String> = (1..=nh).map(|j| format!("hat(x={:.6e})", nodes[j])).collect();
    if let Some(e) = &enrichment {
        let (kss, mss) = enrichment_diagonal(e, p);
        k[(n - 1, n - 1)] = kss;
        m[(n - 1, n - 1)] = mss;
        let basis = singular_basis(model)?;
        let fs: Vec<&str> = basis
            .iter()
            .filter(|f| f.mode_k == mode_k)
            .map(|f| f.description.as_str())
            .collect();
        labels.push(format!(
            "enrichment: ({:.6}{:+.6}i)·{} + ({:.6}{:+.6}i)·{}",
            e.a.re, e.a.im, fs[0], e.b.re, e.b.im, fs[1]
        ));
    }
    Ok(DiscreteOperatorPencil {
        mode_k,
        nu,
        measure_power: p,
        grid: grid.clone(),
        enrichment,
        k,
        m,
        basis_labels: labels,
    })
}

/// `C^∞` bump supported on `[0.2R, 0.8R]`.
pub fn smooth_bump(outer_radius: f64) -> impl Fn(f64) -> Complex64 + Sync {
    move |x: f64| {
        let (l, r) = (0.2 * outer_radius, 0.8 * outer_radius);
        if x <= l || x >= r {
            ZERO
        } else {
            let t = (x - l) / (r - l);
            Complex64::new((-1.0 / (t * (1.0 - t)) + 4.0).exp(), 0.0)
        }
    }
}

/// Unit-mass-norm projection of [`smooth_bump`].
pub fn bump_test_vector(pencil: &DiscreteOperatorPencil) -> Result<Vec<Complex64>> {
    let c = pencil.project(smooth_bump(pencil.grid.outer_radius()))?;
    let n = pencil.mass_norm(&c);
    Ok(c.into_iter().map(|z| z / n).collect())
}
