//! Pipeline stages. Each stage returns a serializable summary plus the rows
//! of its CSV artifact, and tags numerical failures with its name.

use conespectra_core::discretize::{bump_test_vector, RadialGrid};
use conespectra_core::grassmann::{default_schedule, invariant_lines, DEFAULT_LIMIT_TOL};
use conespectra_core::indicial::{boundary_spectrum, critical_strip, dmin_is_weighted_sobolev, singular_basis};
use conespectra_core::normalop::{ray_minimal_growth_normal, NormalRayVerdict};
use conespectra_core::special::bessel_zeros;
use conespectra_core::spectral::oracle::relative_errors;
use conespectra_core::spectral::resolvent::{scaled_probe_radii, Resolvent, DEFAULT_PROBE_RADII, TRUST_FRACTION};
use conespectra_core::spectral::{
    completeness_certificate, completeness_residual, friedrichs_sector_eigenvalues, oracle_eigenvalues, ray_verdict,
    schatten_fit, solve_pencil, weyl_fit, CompletenessCertificate, RayVerdict, SchattenFit, SpectralResult, WeylFit,
};
use conespectra_core::{
    assemble_embedding_grams, assemble_mode_pencil, embedding_singular_values, flow, grassmann_distance, omega_minus,
    ConeModelOperator, DiscreteOperatorPencil, ExtensionDomain, Geometry, IndicialRoot, Ray, SingularFunction,
    WeightedSobolevParams,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Discretization, Extension};
use crate::error::{CliError, Stage};

/// Radii for the model-operator test; the criterion is scale invariant.
pub const NORMAL_PROBE_RADII: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const ORACLE_COUNT: usize = 5;
pub const ORACLE_TOLERANCE: f64 = 5e-3;
pub const RESIDUAL_DECAY: f64 = 0.05;
pub const TERMINAL_RHO: f64 = 1e-8;
pub const TERMINAL_TOLERANCE: f64 = 1e-3;
/// Largest expansion length examined; the decay check compares it with 5.
pub const MAX_EXPANSION: usize = 40;
/// Friedrichs eigenvalues below `WEYL_CEILING / R²` enter the Weyl fit.
pub const WEYL_CEILING: f64 = 4000.0;

#[derive(Debug, Clone, Serialize)]
pub struct IndicialStage {
    pub strip: (f64, f64),
    pub roots: Vec<IndicialRoot>,
    pub singular_basis: Vec<SingularFunction>,
    pub quotient_dim: usize,
    pub dmin_is_weighted_sobolev: bool,
}

pub fn indicial(model: &ConeModelOperator) -> Result<IndicialStage, CliError> {
    let strip = critical_strip(model);
    let roots = boundary_spectrum(model, strip).stage("indicial")?;
    let basis = singular_basis(model).stage("indicial")?;
    Ok(IndicialStage {
        strip,
        roots,
        quotient_dim: basis.len(),
        dmin_is_weighted_sobolev: dmin_is_weighted_sobolev(model).stage("indicial")?,
        singular_basis: basis,
    })
}

/// The `d = 1` domain spanned by `a·f₁ + b·f₂` on the first two singular
/// functions; `None` when there are none.
pub fn extension_domain(basis: &[SingularFunction], ext: &Extension) -> Result<Option<ExtensionDomain>, CliError> {
    if basis.is_empty() {
        return Ok(None);
    }
    let mut v = vec![Complex64::new(0.0, 0.0); basis.len()];
    v[0] = ext.a;
    v[1] = ext.b;
    ExtensionDomain::line(&v).stage("extension").map(Some)
}

/// Mode carrying the singular functions, else the lowest mode of the link.
pub fn pencil_mode(model: &ConeModelOperator, basis: &[SingularFunction]) -> i64 {
    match (basis.first(), model.geometry) {
        (Some(f), _) => f.mode_k,
        (None, Geometry::ClosedLink) => 0,
        (None, Geometry::SectorLink { .. }) => 1,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowStage {
    pub candidates: Vec<ExtensionDomain>,
    pub limits: Vec<ExtensionDomain>,
    pub terminal_rho: f64,
    pub terminal_distance: f64,
    /// `10/|log ρ|` when a logarithmic singular function slows the flow.
    pub rate_bound: Option<f64>,
    pub passed: bool,
}

pub fn flow_stage(basis: &[SingularFunction], domain: &ExtensionDomain) -> Result<(FlowStage, Vec<Vec<f64>>), CliError> {
    let schedule = default_schedule();
    let candidates = invariant_lines(basis);
    let limits = omega_minus(domain, basis, &schedule, DEFAULT_LIMIT_TOL).stage("flow")?;
    let rows = schedule
        .iter()
        .map(|&rho| {
            let d = flow(domain, basis, rho)?;
            let mut row = vec![rho];
            for c in &candidates {
                row.push(grassmann_distance(&d, c)?);
            }
            Ok(row)
        })
        .collect::<conespectra_core::Result<Vec<_>>>()
        .stage("flow")?;
    let terminal = flow(domain, basis, TERMINAL_RHO).stage("flow")?;
    let terminal_distance = limits
        .iter()
        .map(|l| grassmann_distance(&terminal, l))
        .collect::<conespectra_core::Result<Vec<_>>>()
        .stage("flow")?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let logarithmic = basis.iter().any(|f| f.log_power > 0);
    let rate_bound = logarithmic.then(|| 10.0 / TERMINAL_RHO.ln().abs());
    let passed = match rate_bound {
        Some(bound) => terminal_distance <= bound,
        None => terminal_distance < TERMINAL_TOLERANCE,
    };
    Ok((
        FlowStage {
            candidates,
            limits,
            terminal_rho: TERMINAL_RHO,
            terminal_distance,
            rate_bound,
            passed,
        },
        rows,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalStage {
    pub radii: Vec<f64>,
    pub verdicts: Vec<NormalRayVerdict>,
    pub all_minimal: bool,
}

pub fn normal_stage(model: &ConeModelOperator, domain: &ExtensionDomain, rays: &[f64]) -> Result<NormalStage, CliError> {
    let verdicts = rays
        .par_iter()
        .map(|&t| ray_minimal_growth_normal(model, domain, &Ray::new(t), &NORMAL_PROBE_RADII))
        .collect::<conespectra_core::Result<Vec<_>>>()
        .stage("normal-check")?;
    Ok(NormalStage {
        radii: NORMAL_PROBE_RADII.to_vec(),
        all_minimal: verdicts.iter().all(NormalRayVerdict::is_minimal),
        verdicts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    /// `secular` for enriched modes, `bessel_zeros` for the Friedrichs-only case.
    pub source: &'static str,
    pub oracle: Vec<Complex64>,
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumStage {
    pub mode_k: i64,
    pub nu: f64,
    pub n_h: usize,
    pub dimension: usize,
    pub retained: usize,
    pub trust_limit: f64,
    /// Largest retained `‖Kv − λMv‖/‖v‖` relative to `‖K‖_F`.
    pub max_relative_residual: f64,
    pub defective_clusters: Vec<Vec<usize>>,
    pub lowest: Vec<Complex64>,
    pub oracle: Option<OracleComparison>,
}

pub struct Solved {
    pub pencil: DiscreteOperatorPencil,
    pub spectrum: SpectralResult,
}

pub fn solve(
    model: &ConeModelOperator,
    mode_k: i64,
    disc: &Discretization,
    domain: Option<&ExtensionDomain>,
) -> Result<Solved, CliError> {
    let grid = RadialGrid::new(model.outer_radius_r, disc.n_h, disc.grading()).stage("discretize")?;
    let minimal = ExtensionDomain::minimal(0);
    let pencil = assemble_mode_pencil(model, mode_k, &grid, domain.unwrap_or(&minimal)).stage("discretize")?;
    let spectrum = solve_pencil(&pencil).stage("spectrum")?;
    Ok(Solved { pencil, spectrum })
}

fn oracle_for(pencil: &DiscreteOperatorPencil, outer_radius: f64) -> Result<Option<(&'static str, Vec<Complex64>)>, CliError> {
    let how_many = ORACLE_COUNT + 2;
    match &pencil.enrichment {
        Some(e) if e.nu < 1.0 => {
            let v = oracle_eigenvalues(e.nu, e.a, e.b, outer_radius, how_many).stage("oracle")?;
            Ok(Some(("secular", v)))
        }
        Some(_) => Ok(None),
        None => {
            let zeros = bessel_zeros(pencil.nu, how_many).stage("oracle")?;
            let v = zeros.iter().map(|j| Complex64::new((j / outer_radius).powi(2), 0.0)).collect();
            Ok(Some(("bessel_zeros", v)))
        }
    }
}

pub fn spectrum_stage(solved: &Solved, outer_radius: f64) -> Result<(SpectrumStage, Vec<Vec<f64>>), CliError> {
    let s = &solved.spectrum;
    let p = &solved.pencil;
    let max_relative_residual = s.residuals[..s.retained].iter().fold(0.0, |m: f64, r| m.max(*r)) / s.k_norm;
    let oracle = oracle_for(p, outer_radius)?.map(|(source, values)| {
        let errors = relative_errors(&s.eigenvalues, &values, ORACLE_COUNT);
        let max = errors.iter().copied().fold(0.0, f64::max);
        OracleComparison {
            source,
            oracle: values[..ORACLE_COUNT].to_vec(),
            relative_errors: errors,
            max_relative_error: max,
            tolerance: ORACLE_TOLERANCE,
            passed: max < ORACLE_TOLERANCE,
        }
    });
    let rows = s
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, z)| vec![(j + 1) as f64, z.re, z.im, s.residuals[j], f64::from(u8::from(j < s.retained))])
        .collect();
    Ok((
        SpectrumStage {
            mode_k: p.mode_k,
            nu: p.nu,
            n_h: p.grid.nodes.len(),
            dimension: p.dim(),
            retained: s.retained,
            trust_limit: TRUST_FRACTION * s.trusted_modulus(),
            max_relative_residual,
            defective_clusters: s.defective_clusters.clone(),
            lowest: s.eigenvalues.iter().take(10).copied().collect(),
            oracle,
        },
        rows,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessStage {
    pub residuals: Vec<(usize, f64)>,
    pub nonincreasing: bool,
    /// `residual(40)/residual(5)`.
    pub decay_ratio: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub fn completeness_stage(solved: &Solved) -> Result<CompletenessStage, CliError> {
    let f = bump_test_vector(&solved.pencil).stage("complete")?;
    let top = MAX_EXPANSION.min(solved.spectrum.retained);
    let n_list: Vec<usize> = (1..=top).collect();
    let residuals = completeness_residual(&solved.spectrum, &solved.pencil.m, &f, &n_list).stage("complete")?;
    let nonincreasing = residuals.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    let decay_ratio = if top >= MAX_EXPANSION {
        residuals[MAX_EXPANSION - 1].1 / residuals[4].1
    } else {
        f64::NAN
    };
    Ok(CompletenessStage {
        nonincreasing,
        decay_ratio,
        threshold: RESIDUAL_DECAY,
        passed: nonincreasing && decay_ratio < RESIDUAL_DECAY,
        residuals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventStage {
    pub trust_limit: f64,
    pub radii: Vec<f64>,
    pub verdicts: Vec<RayVerdict>,
}

pub fn resolvent_stage(solved: &Solved, rays: &[f64]) -> Result<(ResolventStage, Vec<Vec<f64>>), CliError> {
    let resolvent = Resolvent::new(&solved.pencil).stage("resolvent")?;
    let radii = scaled_probe_radii(&DEFAULT_PROBE_RADII, &solved.spectrum);
    let verdicts = rays
        .iter()
        .map(|&t| ray_verdict(&resolvent, &solved.spectrum, &Ray::new(t), &radii))
        .collect::<conespectra_core::Result<Vec<_>>>()
        .stage("resolvent")?;
    let rows = verdicts
        .iter()
        .flat_map(|v| {
            v.radii
                .iter()
                .zip(&v.resolvent_norms)
                .map(|(&r, &n)| vec![r, v.ray.angle_theta, n, r * n])
                .collect::<Vec<_>>()
        })
        .collect();
    Ok((
        ResolventStage {
            trust_limit: TRUST_FRACTION * solved.spectrum.trusted_modulus(),
            radii,
            verdicts,
        },
        rows,
    ))
}

pub fn certificate(model: &ConeModelOperator, verdicts: &[RayVerdict]) -> CompletenessCertificate {
    completeness_certificate(model.dim_n, model.order_m, verdicts)
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbedStage {
    pub high: WeightedSobolevParams,
    pub low: WeightedSobolevParams,
    pub t_max: f64,
    pub count: usize,
    pub schatten: SchattenFit,
    pub weyl: Option<WeylFit>,
}

pub struct EmbedRows {
    pub singular_values: Vec<Vec<f64>>,
    pub weyl: Option<Vec<Vec<f64>>>,
}

pub fn embed_stage(model: &ConeModelOperator, disc: &Discretization) -> Result<(EmbedStage, EmbedRows), CliError> {
    let high = WeightedSobolevParams {
        smoothness_s: 1.0,
        weight: 1.0,
        dim_n: 1,
    };
    let low = WeightedSobolevParams {
        smoothness_s: 0.0,
        weight: 0.0,
        dim_n: 1,
    };
    let grams = assemble_embedding_grams(&high, &low, disc.t_max, disc.n_h).stage("embed")?;
    let s = embedding_singular_values(&grams).stage("embed")?;
    let window = ((s.len() / 40).max(2), s.len() / 4);
    let schatten = schatten_fit(&s, window).stage("embed")?;
    let (weyl, weyl_rows) = match model.geometry {
        Geometry::SectorLink { alpha } => {
            let r = model.outer_radius_r;
            let eig = friedrichs_sector_eigenvalues(alpha, r, WEYL_CEILING / (r * r)).stage("embed")?;
            let fit = weyl_fit(&eig).stage("embed")?;
            let rows = eig.iter().enumerate().map(|(j, v)| vec![(j + 1) as f64, *v]).collect();
            (Some(fit), Some(rows))
        }
        Geometry::ClosedLink => (None, None),
    };
    let rows = s.iter().enumerate().map(|(j, v)| vec![(j + 1) as f64, *v]).collect();
    Ok((
        EmbedStage {
            high,
            low,
            t_max: disc.t_max,
            count: s.len(),
            schatten,
            weyl,
        },
        EmbedRows {
            singular_values: rows,
            weyl: weyl_rows,
        },
    ))
}
