//! Dilation action `κ_ρ u(x) = u(ρx)` on the quotient `D_∧,max / D_∧,min`,
//! the flow it induces on Grassmannians of extension domains, and the limit
//! set of that flow as `ρ → 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicial::SingularFunction;
use crate::linalg::{self, ZERO};
use crate::model::ExtensionDomain;

/// Default clustering threshold for [`omega_minus`].
pub const DEFAULT_LIMIT_TOL: f64 = 0.05;

/// Matrix of `κ_ρ` in the singular-function basis, acting on coordinate columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaMatrix {
    pub rho: f64,
    pub matrix: Vec<Vec<Complex64>>,
}

impl KappaMatrix {
    pub fn to_mat(&self) -> linalg::CMat {
        linalg::from_rows(&self.matrix, self.matrix.len())
    }
}

/// Index ranges of consecutive basis entries sharing a root (same mode and exponent).
fn root_blocks(basis: &[SingularFunction]) -> Vec<std::ops::Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=basis.len() {
        let split = i == basis.len()
            || basis[i].mode_k != basis[start].mode_k
            || basis[i].exponent_e != basis[start].exponent_e;
        if split {
            blocks.push(start..i);
            start = i;
        }
    }
    blocks
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `κ_ρ(x^e (log x)^q) = ρ^e Σ_p C(q,p) (log ρ)^{q−p} x^e (log x)^p`, one
/// upper-triangular block per root.
pub fn kappa_matrix(basis: &[SingularFunction], rho: f64) -> Result<KappaMatrix> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonpositiveRho(rho));
    }
    let n = basis.len();
    let log_rho = rho.ln();
    let mut m = vec![vec![ZERO; n]; n];
    for block in root_blocks(basis) {
        let scale = (basis[block.start].exponent_e * log_rho).exp();
        for i in block.clone() {
            for j in block.clone() {
                let (p, q) = (basis[i].log_power, basis[j].log_power);
                if q >= p {
                    m[i][j] = scale * binomial(q, p) * log_rho.powi((q - p) as i32);
                }
            }
        }
    }
    Ok(KappaMatrix { rho, matrix: m })
}

fn check_dim(domain: &ExtensionDomain, basis: &[SingularFunction]) -> Result<()> {
    if domain.quotient_dim != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: domain.quotient_dim,
        });
    }
    Ok(())
}

/// `κ_ρ(D / D_min)`, returned with an orthonormal basis.
pub fn flow(domain: &ExtensionDomain, basis: &[SingularFunction], rho: f64) -> Result<ExtensionDomain> {
    check_dim(domain, basis)?;
    if domain.subspace_dim() == 0 {
        kappa_matrix(basis, rho)?;
        return Ok(domain.clone());
    }
    let k = kappa_matrix(basis, rho)?.to_mat();
    let moved = &k * domain.matrix();
    let q = linalg::orthonormalize(moved.as_ref())?;
    Ok(ExtensionDomain {
        quotient_dim: domain.quotient_dim,
        basis_matrix: linalg::to_rows(q.as_ref()),
    })
}

/// Gap metric: sine of the largest principal angle between the spans.
pub fn grassmann_distance(s1: &ExtensionDomain, s2: &ExtensionDomain) -> Result<f64> {
    if s1.quotient_dim != s2.quotient_dim {
        return Err(Error::DimensionMismatch {
            expected: s1.quotient_dim,
            found: s2.quotient_dim,
        });
    }
    if s1.subspace_dim() != s2.subspace_dim() {
        return Err(Error::DimensionMismatch {
            expected: s1.subspace_dim(),
            found: s2.subspace_dim(),
        });
    }
    if s1.subspace_dim() == 0 {
        return Ok(0.0);
    }
    let q1 = linalg::orthonormalize(s1.matrix().as_ref())?;
    let q2 = linalg::orthonormalize(s2.matrix().as_ref())?;
    Ok(linalg::sin_largest_angle(q1.as_ref(), q2.as_ref()))
}

/// `ρ_j = 10^{−j/4}`, `j = 1..=64`.
pub fn default_schedule() -> Vec<f64> {
    (1..=64).map(|j| 10f64.powf(-(j as f64) / 4.0)).collect()
}

/// Eigenspaces of `κ_ρ` (ρ ≠ 1): for each distinct exponent, the span of the
/// leading vector of every root block with that exponent.
fn invariant_eigenspaces(basis: &[SingularFunction]) -> Vec<Vec<usize>> {
    let mut spaces: Vec<(Complex64, Vec<usize>)> = Vec::new();
    for block in root_blocks(basis) {
        let e = basis[block.start].exponent_e;
        match spaces.iter_mut().find(|(f, _)| *f == e) {
            Some((_, idx)) => idx.push(block.start),
            None => spaces.push((e, vec![block.start])),
        }
    }
    spaces.into_iter().map(|(_, idx)| idx).collect()
}

/// One-dimensional `κ`-invariant subspaces spanned by single leading basis
/// vectors; these are the candidate limits of the flow on lines.
pub fn invariant_lines(basis: &[SingularFunction]) -> Vec<ExtensionDomain> {
    let n = basis.len();
    invariant_eigenspaces(basis)
        .into_iter()
        .flatten()
        .map(|i| {
            let mut v = vec![ZERO; n];
            v[i] = Complex64::new(1.0, 0.0);
            ExtensionDomain::line(&v).expect("unit vector")
        })
        .collect()
}

/// Snap a line within `tol` of a `κ`-eigenspace onto its projection there.
fn snap_line(rep: &ExtensionDomain, basis: &[SingularFunction], tol: f64) -> ExtensionDomain {
    let v = rep.column(0);
    for space in invariant_eigenspaces(basis) {
        let mut p = vec![ZERO; v.len()];
        for &i in &space {
            p[i] = v[i];
        }
        if linalg::norm(&p) == 0.0 {
            continue;
        }
        if let Ok(candidate) = ExtensionDomain::line(&p) {
            if grassmann_distance(rep, &candidate).is_ok_and(|d| d < tol) {
                return candidate.orthonormalized().unwrap_or(candidate);
            }
        }
    }
    rep.clone()
}

fn cluster(points: &[ExtensionDomain], tol: f64) -> Result<Vec<ExtensionDomain>> {
    let mut reps: Vec<ExtensionDomain> = Vec::new();
    for p in points {
        let mut placed = false;
        for r in reps.iter_mut() {
            if grassmann_distance(r, p)? < tol {
                // keep the point furthest along the schedule
                *r = p.clone();
                placed = true;
                break;
            }
        }
        if !placed {
            reps.push(p.clone());
        }
    }
    Ok(reps)
}

fn tail(points: &[ExtensionDomain]) -> &[ExtensionDomain] {
    let len = points.len().div_ceil(4).max(1);
    &points[points.len() - len..]
}

/// Limit set `Ω⁻(D_∧)` of `κ_ρ(D_∧)` along `rho_schedule`.
///
/// Flowed domains in the last quarter of the schedule are clustered under the
/// gap metric with threshold `tol`. For lines, a cluster representative within
/// `tol` of a `κ`-eigenspace is replaced by the invariant line itself.
pub fn omega_minus(
    domain: &ExtensionDomain,
    basis: &[SingularFunction],
    rho_schedule: &[f64],
    tol: f64,
) -> Result<Vec<ExtensionDomain>> {
    check_dim(domain, basis)?;
    if !(tol > 0.0) {
        return Err(Error::ScopeViolation(format!("tolerance must be positive, got {tol}")));
    }
    let decreasing = rho_schedule.windows(2).all(|w| w[1] < w[0]);
    let last = rho_schedule.last().copied().unwrap_or(1.0);
    if rho_schedule.len() < 4 || !decreasing || rho_schedule[0] <= 0.0 || last >= 1e-8 {
        return Err(Error::ScopeViolation(
            "rho schedule must be strictly decreasing, positive, and end below 1e-8".into(),
        ));
    }
    if domain.subspace_dim() == 0 || domain.subspace_dim() == domain.quotient_dim {
        return Ok(vec![domain.clone()]);
    }
    let flowed: Vec<ExtensionDomain> = rho_schedule
        .par_iter()
        .map(|&rho| flow(domain, basis, rho))
        .collect::<Result<_>>()?;

    let reps = cluster(tail(&flowed), tol)?;
    let shorter = &flowed[..flowed.len() * 3 / 4];
    let earlier = cluster(tail(shorter), tol)?;
    let d = domain.subspace_dim();
    if (d == 1 && reps.len() > 1) || reps.len() > earlier.len() {
        return Err(Error::NonConvergent { clusters: reps.len() });
    }

    let mut out: Vec<ExtensionDomain> = Vec::new();
    for r in reps {
        let r = if d == 1 { snap_line(&r, basis, tol) } else { r };
        if !out.iter().any(|o| o.same_span(&r)) {
            out.push(r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicial::singular_basis;
    use crate::model::ConeModelOperator;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn log_basis() -> Vec<SingularFunction> {
        singular_basis(&ConeModelOperator::cone_laplacian()).unwrap()
    }

    fn sector_basis() -> Vec<SingularFunction> {
        singular_basis(&ConeModelOperator::sector_dirichlet_laplacian(1.5 * PI)).unwrap()
    }

    fn assert_mat_close(a: &[Vec<Complex64>], b: &[Vec<Complex64>], tol: f64) {
        for (ra, rb) in a.iter().zip(b) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).norm() < tol, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn unipotent_block_for_log_pair() {
        let rho: f64 = 0.3;
        let k = kappa_matrix(&log_basis(), rho).unwrap();
        let expect = vec![vec![c(1.0, 0.0), c(rho.ln(), 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
        assert_mat_close(&k.matrix, &expect, 1e-15);
    }

    #[test]
    fn diagonal_block_for_power_pair() {
        let rho: f64 = 0.3;
        let k = kappa_matrix(&sector_basis(), rho).unwrap();
        let expect = vec![
            vec![c(rho.powf(2.0 / 3.0), 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(rho.powf(-2.0 / 3.0), 0.0)],
        ];
        assert_mat_close(&k.matrix, &expect, 1e-14);
    }

    #[test]
    fn kappa_at_one_is_identity() {
        for basis in [log_basis(), sector_basis()] {
            let k = kappa_matrix(&basis, 1.0).unwrap();
            let id: Vec<Vec<Complex64>> = (0..2)
                .map(|i| (0..2).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
                .collect();
            assert_mat_close(&k.matrix, &id, 1e-15);
        }
    }

    #[test]
    fn nonpositive_rho_rejected() {
        assert!(matches!(kappa_matrix(&log_basis(), 0.0), Err(Error::NonpositiveRho(_))));
        assert!(matches!(kappa_matrix(&log_basis(), -1.0), Err(Error::NonpositiveRho(_))));
    }

    #[test]
    fn flow_of_log_domain_matches_closed_form() {
        let (a, b, rho) = (0.7, -1.3, 0.02f64);
        let d = ExtensionDomain::from_pair(c(a, 0.0), c(b, 0.0)).unwrap();
        let moved = flow(&d, &log_basis(), rho).unwrap();
        let expect = ExtensionDomain::from_pair(c(a + b * rho.ln(), 0.0), c(b, 0.0)).unwrap();
        assert!(grassmann_distance(&moved, &expect).unwrap() < 1e-14);
    }

    #[test]
    fn growing_power_line_is_fixed() {
        let d = ExtensionDomain::from_pair(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        for rho in [1e-6, 0.5, 3.0] {
            assert!(flow(&d, &sector_basis(), rho).unwrap().same_span(&d));
        }
    }

    #[test]
    fn distance_examples() {
        let e1 = ExtensionDomain::from_pair(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let e2 = ExtensionDomain::from_pair(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let diag = ExtensionDomain::from_pair(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(grassmann_distance(&e1, &e1).unwrap(), 0.0);
        assert!((grassmann_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        assert!((grassmann_distance(&diag, &e1).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    /// Independent oracle: maximize the distance from unit vectors of one line
    /// to the other line over a fine sweep of directions in a plane.
    #[test]
    fn distance_matches_brute_force_sweep() {
        let u = [c(1.0, 0.0), c(1.0, 0.0)];
        let v = [c(1.0, 0.0), c(0.0, 0.0)];
        let du = ExtensionDomain::line(&u).unwrap();
        let dv = ExtensionDomain::line(&v).unwrap();
        // For lines, sin θ = min over unit w ∈ span(v) of the distance from û
        // to w; sweep w = e^{iφ}·v̂ and scalar multiples.
        let nu = linalg::norm(&u);
        let uhat: Vec<Complex64> = u.iter().map(|z| z / nu).collect();
        let mut best = f64::INFINITY;
        for i in 0..=20000 {
            let t = -2.0 + 4.0 * i as f64 / 20000.0;
            let r: Vec<Complex64> = uhat.iter().zip(&v).map(|(a, b)| a - b * t).collect();
            best = best.min(linalg::norm(&r));
        }
        assert!((grassmann_distance(&du, &dv).unwrap() - best).abs() < 1e-6);
    }

    #[test]
    fn omega_minus_log_pair_is_friedrichs() {
        let basis = log_basis();
        let friedrichs = ExtensionDomain::from_pair(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        for (a, b) in [(1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (-3.0, 0.5)] {
            let d = ExtensionDomain::from_pair(c(a, 0.0), c(b, 0.0)).unwrap();
            let lim = omega_minus(&d, &basis, &default_schedule(), DEFAULT_LIMIT_TOL).unwrap();
            assert_eq!(lim.len(), 1);
            assert!(lim[0].same_span(&friedrichs), "(a,b)=({a},{b})");
        }
    }

    #[test]
    fn omega_minus_sector_depends_on_b() {
        let basis = sector_basis();
        let up = ExtensionDomain::from_pair(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let down = ExtensionDomain::from_pair(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let d = ExtensionDomain::from_pair(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        let lim = omega_minus(&d, &basis, &default_schedule(), DEFAULT_LIMIT_TOL).unwrap();
        assert_eq!(lim.len(), 1);
        assert!(lim[0].same_span(&down));
        let lim = omega_minus(&up, &basis, &default_schedule(), DEFAULT_LIMIT_TOL).unwrap();
        assert!(lim[0].same_span(&up));
    }

    #[test]
    fn oscillating_exponents_do_not_converge() {
        // Exponents ±i give ρ^{±i}: the line rotates forever on the torus.
        let basis: Vec<SingularFunction> = [c(0.0, 1.0), c(0.0, -1.0)]
            .iter()
            .map(|&e| SingularFunction {
                mode_k: 1,
                exponent_e: e,
                log_power: 0,
                description: String::new(),
            })
            .collect();
        let d = ExtensionDomain::from_pair(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(matches!(
            omega_minus(&d, &basis, &default_schedule(), 1e-3),
            Err(Error::NonConvergent { .. })
        ));
    }

    #[test]
    fn schedule_must_decrease_far_enough() {
        let d = ExtensionDomain::from_pair(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let sched: Vec<f64> = (1..=9).map(|j| 10f64.powi(-j)).collect();
        assert!(omega_minus(&d, &log_basis(), &sched[..8], 0.05).is_err());
        assert!(omega_minus(&d, &log_basis(), &sched, 0.05).is_ok());
        let mut rising = sched.clone();
        rising.swap(0, 1);
        assert!(omega_minus(&d, &log_basis(), &rising, 0.05).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let d = ExtensionDomain::line(&[c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            flow(&d, &log_basis(), 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn arb_c() -> impl Strategy<Value = Complex64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| c(re, im))
    }

    proptest! {
        #[test]
        fn flow_is_a_group_action(a in arb_c(), b in arb_c(), l1 in -6.0..6.0f64, l2 in -6.0..6.0f64) {
            prop_assume!(a.norm() + b.norm() > 1e-3);
            for basis in [log_basis(), sector_basis()] {
                let d = ExtensionDomain::from_pair(a, b).unwrap();
                let (r1, r2) = (l1.exp(), l2.exp());
                let twice = flow(&flow(&d, &basis, r1).unwrap(), &basis, r2).unwrap();
                let once = flow(&d, &basis, r1 * r2).unwrap();
                prop_assert!(grassmann_distance(&twice, &once).unwrap() < 1e-10);
            }
        }

        #[test]
        fn kappa_group_law(l1 in -5.0..5.0f64, l2 in -5.0..5.0f64) {
            for basis in [log_basis(), sector_basis()] {
                let k1 = kappa_matrix(&basis, l1.exp()).unwrap().to_mat();
                let k2 = kappa_matrix(&basis, l2.exp()).unwrap().to_mat();
                let k12 = kappa_matrix(&basis, (l1 + l2).exp()).unwrap().to_mat();
                let diff = &(&k1 * &k2) - &k12;
                prop_assert!(diff.norm_l2() < 1e-12 * k12.norm_l2().max(1.0));
            }
        }

        #[test]
        fn distance_is_a_metric(a in arb_c(), b in arb_c(), p in arb_c(), q in arb_c(), u in arb_c(), v in arb_c()) {
            prop_assume!(a.norm() + b.norm() > 1e-2 && p.norm() + q.norm() > 1e-2 && u.norm() + v.norm() > 1e-2);
            let s1 = ExtensionDomain::from_pair(a, b).unwrap();
            let s2 = ExtensionDomain::from_pair(p, q).unwrap();
            let s3 = ExtensionDomain::from_pair(u, v).unwrap();
            let d12 = grassmann_distance(&s1, &s2).unwrap();
            let d21 = grassmann_distance(&s2, &s1).unwrap();
            let d13 = grassmann_distance(&s1, &s3).unwrap();
            let d32 = grassmann_distance(&s3, &s2).unwrap();
            prop_assert!((d12 - d21).abs() < 1e-12);
            prop_assert!(d12 <= d13 + d32 + 1e-12);
        }

        #[test]
        fn span_is_invariant_under_rescaling(a in arb_c(), b in arb_c(), s in arb_c()) {
            prop_assume!(a.norm() + b.norm() > 1e-2 && s.norm() > 1e-2);
            let d = ExtensionDomain::from_pair(a, b).unwrap();
            let scaled = ExtensionDomain::from_pair(a * s, b * s).unwrap();
            prop_assert!(d.same_span(&scaled));
        }

        #[test]
        fn log_pair_converges_at_logarithmic_rate(a in -5.0..5.0f64, b in -1.0..1.0f64) {
            prop_assume!(b.abs() > 0.05 && a.abs() <= 5.0 * b.abs());
            let rho = 1e-8f64;
            let d = ExtensionDomain::from_pair(c(a, 0.0), c(b, 0.0)).unwrap();
            let friedrichs = ExtensionDomain::from_pair(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
            let dist = grassmann_distance(&flow(&d, &log_basis(), rho).unwrap(), &friedrichs).unwrap();
            prop_assert!(dist < 10.0 / rho.ln().abs());
        }

        #[test]
        fn limits_are_flow_invariant(a in arb_c(), b in arb_c(), l in -10.0..10.0f64) {
            prop_assume!(a.norm() > 1e-2 && b.norm() > 1e-2);
            for basis in [log_basis(), sector_basis()] {
                let d = ExtensionDomain::from_pair(a, b).unwrap();
                let lim = omega_minus(&d, &basis, &default_schedule(), DEFAULT_LIMIT_TOL).unwrap();
                for s in &lim {
                    let moved = flow(s, &basis, l.exp()).unwrap();
                    prop_assert!(lim.iter().any(|t| grassmann_distance(&moved, t).unwrap() < DEFAULT_LIMIT_TOL));
                }
            }
        }
    }
}
