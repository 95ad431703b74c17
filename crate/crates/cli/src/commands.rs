//! Subcommands: single stages with their artifacts, and the two end-to-end
//! example pipelines with a versioned report.

use std::f64::consts::PI;

use conespectra_core::{ConeModelOperator, CompletenessCertificate, Geometry};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Artifacts;
use crate::pipeline::{self, CompletenessStage, FlowStage, IndicialStage, NormalStage, ResolventStage, SpectrumStage};

pub const SCHEMA_VERSION: u32 = 1;

const SPECTRUM_HEADER: [&str; 5] = ["j", "re", "im", "residual", "retained"];
const RAYS_HEADER: [&str; 4] = ["r", "theta", "resolvent_norm", "r_times_norm"];
const COMPLETENESS_HEADER: [&str; 2] = ["N", "residual"];
const FITS_HEADER: [&str; 2] = ["j", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Indicial,
    Flow,
    NormalCheck,
    Spectrum,
    Resolvent,
    Complete,
    Embed,
    Certify,
    Example52,
    Example53,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Indicial => "indicial",
            Command::Flow => "flow",
            Command::NormalCheck => "normal-check",
            Command::Spectrum => "spectrum",
            Command::Resolvent => "resolvent",
            Command::Complete => "complete",
            Command::Embed => "embed",
            Command::Certify => "certify",
            Command::Example52 => "example52",
            Command::Example53 => "example53",
        }
    }
}

/// Run `command`; on success returns the artifact names.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let mut out = Artifacts::new(&config.outputs_dir)?;
    match command {
        Command::Example52 | Command::Example53 => example(command, config, &mut out)?,
        _ => single(command, config, &mut out)?,
    }
    Ok(out.written().to_vec())
}

fn flow_header(stage: &FlowStage) -> Vec<String> {
    let mut h = vec!["rho".to_string()];
    h.extend((1..=stage.candidates.len()).map(|i| format!("dist_to_candidate_{i}")));
    h
}

fn write_flow(out: &mut Artifacts, stage: &FlowStage, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let header = flow_header(stage);
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("flow.csv", &refs, rows)?;
    out.json("flow.json", stage)
}

fn completeness_rows(stage: &CompletenessStage) -> Vec<Vec<f64>> {
    stage.residuals.iter().map(|&(n, r)| vec![n as f64, r]).collect()
}

fn require_domain(
    indicial: &IndicialStage,
    config: &ExperimentConfig,
) -> Result<conespectra_core::ExtensionDomain, CliError> {
    pipeline::extension_domain(&indicial.singular_basis, &config.extension)?
        .ok_or_else(|| CliError::Config("the model has no singular functions, so D_min = D_max and no extension exists".into()))
}

fn single(command: Command, config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = &config.geometry;
    let indicial = pipeline::indicial(model)?;
    let domain = pipeline::extension_domain(&indicial.singular_basis, &config.extension)?;
    let mode = pipeline::pencil_mode(model, &indicial.singular_basis);
    match command {
        Command::Indicial => out.json("indicial.json", &indicial)?,
        Command::Flow => {
            let d = require_domain(&indicial, config)?;
            let (stage, rows) = pipeline::flow_stage(&indicial.singular_basis, &d)?;
            write_flow(out, &stage, &rows)?;
        }
        Command::NormalCheck => {
            let d = require_domain(&indicial, config)?;
            out.json("normal_check.json", &pipeline::normal_stage(model, &d, &config.rays)?)?;
        }
        Command::Spectrum => {
            let solved = pipeline::solve(model, mode, &config.discretization, domain.as_ref())?;
            let (stage, rows) = pipeline::spectrum_stage(&solved, model.outer_radius_r)?;
            out.csv("spectrum.csv", &SPECTRUM_HEADER, &rows)?;
            out.json("spectrum.json", &stage)?;
        }
        Command::Resolvent | Command::Certify => {
            let solved = pipeline::solve(model, mode, &config.discretization, domain.as_ref())?;
            let (stage, rows) = pipeline::resolvent_stage(&solved, &config.rays)?;
            out.csv("rays.csv", &RAYS_HEADER, &rows)?;
            if command == Command::Resolvent {
                out.json("rays.json", &stage)?;
            } else {
                let cert = pipeline::certificate(model, &stage.verdicts);
                out.json("certificate.json", &cert)?;
                if !cert.complete {
                    return Err(CliError::Threshold(format!(
                        "certificate incomplete (largest gap {:.6}, bound {:.6})",
                        cert.max_gap,
                        PI * cert.m as f64 / cert.n as f64
                    )));
                }
            }
        }
        Command::Complete => {
            let solved = pipeline::solve(model, mode, &config.discretization, domain.as_ref())?;
            let stage = pipeline::completeness_stage(&solved)?;
            out.csv("completeness.csv", &COMPLETENESS_HEADER, &completeness_rows(&stage))?;
            out.json("completeness.json", &stage)?;
        }
        Command::Embed => {
            let (stage, rows) = pipeline::embed_stage(model, &config.discretization)?;
            out.csv("fits.csv", &FITS_HEADER, &rows.singular_values)?;
            if let Some(w) = &rows.weyl {
                out.csv("weyl.csv", &FITS_HEADER, w)?;
            }
            out.json("fits.json", &stage)?;
        }
        Command::Example52 | Command::Example53 => unreachable!("handled by `example`"),
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub stage: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub model: ConeModelOperator,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub all_thresholds_met: bool,
    pub indicial: IndicialStage,
    pub flow: Option<FlowStage>,
    pub normal_check: Option<NormalStage>,
    pub spectrum: SpectrumStage,
    pub completeness: Option<CompletenessStage>,
    pub resolvent: Option<ResolventStage>,
    pub certificate: Option<CompletenessCertificate>,
    pub artifacts: Vec<String>,
}

fn example_model(command: Command, config: &ExperimentConfig) -> Result<ConeModelOperator, CliError> {
    let mut model = config.geometry;
    match (command, model.geometry) {
        (Command::Example52, Geometry::SectorLink { .. }) => {
            // the closed cone; only the radius and weight carry over
            model.geometry = Geometry::ClosedLink;
        }
        (Command::Example53, Geometry::ClosedLink) => {
            return Err(CliError::Config("example53 needs a sector geometry (use --alpha)".into()));
        }
        _ => {}
    }
    Ok(model)
}

fn example(command: Command, config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = example_model(command, config)?;
    let indicial = pipeline::indicial(&model)?;
    out.json("indicial.json", &indicial)?;
    let mode = pipeline::pencil_mode(&model, &indicial.singular_basis);
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let domain = pipeline::extension_domain(&indicial.singular_basis, &config.extension)?;

    let (mut flow, mut normal, mut completeness, mut resolvent, mut certificate) = (None, None, None, None, None);
    let spectrum;
    match &domain {
        None => {
            notes.push("D_min = D_max: no singular functions, so the closure is the only extension".into());
            notes.push("pipeline short-circuits to the Friedrichs spectrum of the lowest mode".into());
            checks.push(Check {
                stage: "indicial",
                passed: indicial.quotient_dim == 0,
                detail: "empty singular basis".into(),
            });
            let solved = pipeline::solve(&model, mode, &config.discretization, None)?;
            let (stage, rows) = pipeline::spectrum_stage(&solved, model.outer_radius_r)?;
            out.csv("spectrum.csv", &SPECTRUM_HEADER, &rows)?;
            spectrum = stage;
        }
        Some(d) => {
            checks.push(Check {
                stage: "indicial",
                passed: indicial.quotient_dim == 2,
                detail: format!("dim D_max/D_min = {}", indicial.quotient_dim),
            });

            let (f, rows) = pipeline::flow_stage(&indicial.singular_basis, d)?;
            write_flow(out, &f, &rows)?;
            checks.push(Check {
                stage: "flow",
                passed: f.passed,
                detail: match f.rate_bound {
                    Some(b) => format!("distance {:.3e} at ρ = {:e}, rate bound {b:.3e}", f.terminal_distance, f.terminal_rho),
                    None => format!("distance {:.3e} at ρ = {:e}, tolerance {TERMINAL_TOL:e}", f.terminal_distance, f.terminal_rho, TERMINAL_TOL = pipeline::TERMINAL_TOLERANCE),
                },
            });
            flow = Some(f);

            let n = pipeline::normal_stage(&model, d, &config.rays)?;
            out.json("normal_check.json", &n)?;
            checks.push(Check {
                stage: "normal-check",
                passed: n.all_minimal,
                detail: format!("{} of {} rays minimal", n.verdicts.iter().filter(|v| v.is_minimal()).count(), n.verdicts.len()),
            });
            normal = Some(n);

            let solved = pipeline::solve(&model, mode, &config.discretization, Some(d))?;
            let (stage, rows) = pipeline::spectrum_stage(&solved, model.outer_radius_r)?;
            out.csv("spectrum.csv", &SPECTRUM_HEADER, &rows)?;
            spectrum = stage;

            let c = pipeline::completeness_stage(&solved)?;
            out.csv("completeness.csv", &COMPLETENESS_HEADER, &completeness_rows(&c))?;
            checks.push(Check {
                stage: "complete",
                passed: c.passed,
                detail: format!("residual(40)/residual(5) = {:.3e}, nonincreasing = {}", c.decay_ratio, c.nonincreasing),
            });
            completeness = Some(c);

            let (r, rows) = pipeline::resolvent_stage(&solved, &config.rays)?;
            out.csv("rays.csv", &RAYS_HEADER, &rows)?;
            let cert = pipeline::certificate(&model, &r.verdicts);
            checks.push(Check {
                stage: "certify",
                passed: cert.complete,
                detail: format!("largest gap {:.6}, bound π·m/n = {:.6}", cert.max_gap, PI * cert.m as f64 / cert.n as f64),
            });
            resolvent = Some(r);
            certificate = Some(cert);
        }
    }
    match &spectrum.oracle {
        Some(o) => checks.push(Check {
            stage: "spectrum",
            passed: o.passed,
            detail: format!("max relative error {:.3e} against {} ({} values)", o.max_relative_error, o.source, o.oracle.len()),
        }),
        None => notes.push("no oracle for this mode; spectrum unchecked".into()),
    }
    // the report names itself among the artifacts
    let mut artifacts = out.written().to_vec();
    artifacts.push("report.json".into());
    artifacts.sort();
    let all = checks.iter().all(|c| c.passed);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: command.name(),
        config: config.clone(),
        model,
        notes,
        all_thresholds_met: all,
        checks,
        indicial,
        flow,
        normal_check: normal,
        spectrum,
        completeness,
        resolvent,
        certificate,
        artifacts,
    };
    out.json("report.json", &report)?;
    if all {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.stage).collect();
        Err(CliError::Threshold(format!("stages {}", failed.join(", "))))
    }
}
