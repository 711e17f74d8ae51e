//! Subcommand dispatch for the `kinkwire` binary. Every subcommand validates
//! the whole configuration first, writes `resolved_config.json`, then its
//! own outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::convergence::{angle_scan, solve_singular, sweep, AnglePoint, Problem, SweepResult};
use crate::error::Error;
use crate::geometry::{
    default_pose, reconstruct_trace, trace_distance, trace_distance_bound, CurveTrace, CurvatureSpec,
};
use crate::output::{fmt_g12, numeric_rows, write_csv, write_json};
use crate::regularization::{
    assess_admissibility, defect_plateau, geometric_potential, perturb_with_bump, regularize, AdmissibilityReport,
    RegularizationFamily,
};
use crate::spectral::{assemble_regular, eigen_lowest, Formulation, Mesh, Spectrum};
use crate::validate::{run_oracles, OracleCheck};

#[derive(Debug, Parser)]
#[command(name = "kinkwire", version, about = "Bound states on a plane curve with a curvature singularity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Curve family and its limit as `s,x,y,gamma` CSVs.
    Trace,
    /// Lowest eigenpairs at one ε (or of the singular problem with --formulation quasi).
    Spectrum,
    /// ε-sweep with track pairing, extrapolation and overlaps.
    Sweep,
    /// Extrapolated ground energy against the opening angle.
    Anglescan,
    /// L¹ curvature and L² primitive errors of the regularized family.
    Admissibility,
    /// Closed-form oracle checks.
    Validate,
}

impl Command {
    fn stage(self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Anglescan => "anglescan",
            Command::Admissibility => "admissibility",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Regular,
    Quasi,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Opening angle in radians.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub ncells: Option<usize>,
    #[arg(long, global = true)]
    pub kstates: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub formulation: Option<FormulationArg>,
    /// dirichlet | neumann | robin:<rho_a>,<rho_b>
    #[arg(long, global = true)]
    pub bc: Option<String>,
}

/// A failed run: where it stopped and why, plus the process exit code.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stage: String,
    pub detail: String,
    #[serde(skip)]
    pub code: u8,
}

impl Failure {
    fn new(stage: &str, e: Error) -> Self {
        let code = if matches!(e, Error::Io { .. }) { 2 } else { 1 };
        Failure {
            stage: stage.to_string(),
            detail: e.to_string(),
            code,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"stage\":\"{}\"}}", self.stage))
    }
}

/// What a successful run reports: exit code (1 when a check failed) and
/// summary lines for standard output.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: u8,
    pub lines: Vec<String>,
}

pub fn resolve_config(flags: &Flags) -> Result<RunConfig, Failure> {
    let stage = "config";
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::new(stage, e))?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        out: flags.out.clone(),
        epsilon: flags.epsilon,
        theta: flags.theta,
        n_cells: flags.ncells,
        k_states: flags.kstates,
        formulation: flags.formulation.map(|f| match f {
            FormulationArg::Regular => Formulation::Regular,
            FormulationArg::Quasi => Formulation::QuasiDerivative,
        }),
        bc: flags.bc.clone(),
    });
    cfg.resolve().map_err(|e| Failure::new(stage, e))?;
    cfg.validate().map_err(|e| Failure::new(stage, e))?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let cfg = resolve_config(&cli.flags)?;
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir).map_err(|e| Failure::new("output", Error::io(&dir, e)))?;
    write_resolved(&cfg, &dir).map_err(|e| Failure::new("output", e))?;
    let stage = cli.command.stage();
    let result = match cli.command {
        Command::Trace => cmd_trace(&cfg, &dir),
        Command::Spectrum => cmd_spectrum(&cfg, &dir),
        Command::Sweep => cmd_sweep(&cfg, &dir),
        Command::Anglescan => cmd_anglescan(&cfg, &dir),
        Command::Admissibility => cmd_admissibility(&cfg, &dir),
        Command::Validate => cmd_validate(&dir),
    };
    result.map_err(|e| Failure::new(stage, e))
}

fn write_resolved(cfg: &RunConfig, dir: &Path) -> crate::Result<()> {
    // full precision, so re-ingesting reproduces the run exactly
    let path = dir.join("resolved_config.json");
    let mut text = serde_json::to_string_pretty(cfg)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn member_spec(base: &CurvatureSpec, eps: f64) -> crate::Result<CurvatureSpec> {
    if base.is_singular() {
        regularize(base, eps)
    } else {
        Ok(base.clone())
    }
}

fn write_trace(path: &Path, t: &CurveTrace) -> crate::Result<()> {
    let x: Vec<f64> = t.positions.iter().map(|p| p[0]).collect();
    let y: Vec<f64> = t.positions.iter().map(|p| p[1]).collect();
    write_csv(path, "s,x,y,gamma", numeric_rows(&[&t.s_grid, &x, &y, &t.angles]))
}

#[derive(Serialize)]
struct TraceEntry {
    epsilon: f64,
    file: String,
    distance_to_limit: f64,
    bound: f64,
}

fn cmd_trace(cfg: &RunConfig, dir: &Path) -> crate::Result<Outcome> {
    let params = cfg.params()?;
    let base = cfg.base_curvature()?;
    let pose = default_pose(&base, &params)?;
    let n = cfg.numerics.trace_points;
    let limit = reconstruct_trace(&base, &params, n, pose)?;
    write_trace(&dir.join("trace_limit.csv"), &limit)?;
    let mut entries = Vec::new();
    for &eps in &cfg.numerics.trace_epsilons {
        let spec = member_spec(&base, eps)?;
        let trace = reconstruct_trace(&spec, &params, n, pose)?;
        let file = format!("trace_eps_{}.csv", fmt_g12(eps));
        write_trace(&dir.join(&file), &trace)?;
        // a bounded base is its own limit
        let bound = match spec.singular_limit() {
            Some(_) => trace_distance_bound(&spec, &params)?,
            None => 0.0,
        };
        entries.push(TraceEntry {
            epsilon: eps,
            file,
            distance_to_limit: trace_distance(&trace, &limit)?,
            bound,
        });
    }
    write_json(&dir.join("trace_summary.json"), &entries)?;
    Ok(Outcome {
        code: 0,
        lines: vec![format!("wrote {} traces to {}", entries.len() + 1, dir.display())],
    })
}

#[derive(Serialize)]
struct SpectrumBundle<'a> {
    epsilon: Option<f64>,
    bc: &'a str,
    formulation: Formulation,
    n_cells: usize,
    eigenvalues: &'a [f64],
    residuals: &'a [f64],
}

fn cmd_spectrum(cfg: &RunConfig, dir: &Path) -> crate::Result<Outcome> {
    let params = cfg.params()?;
    let base = cfg.base_curvature()?;
    let bc = cfg.bc()?;
    let n = &cfg.numerics;
    let (spectrum, curvature): (Spectrum, CurvatureSpec) = match n.formulation {
        Formulation::Regular => {
            let spec = member_spec(&base, n.epsilon)?;
            let mesh = Mesh::staggered(params.a, params.b, n.n_cells)?;
            let pot = geometric_potential(&spec, &params, &mesh)?;
            let op = assemble_regular(&pot, &params, &mesh, &bc)?;
            let mut s = eigen_lowest(&op, n.k_states)?;
            s.epsilon = spec.epsilon();
            (s, spec)
        }
        Formulation::QuasiDerivative => (solve_singular(&base, &params, &bc, n.n_cells, n.k_states)?, base.clone()),
    };
    let idx: Vec<String> = (0..spectrum.len()).map(|i| i.to_string()).collect();
    write_csv(
        &dir.join("eigenvalues.csv"),
        "n,eigenvalue_meV",
        idx.iter().zip(&spectrum.eigenvalues).map(|(i, e)| vec![i.clone(), fmt_g12(*e)]),
    )?;
    for i in 0..spectrum.len() {
        write_csv(
            &dir.join(format!("psi_{i}.csv")),
            "s,psi",
            numeric_rows(&[&spectrum.s, &spectrum.eigenfunctions[i]]),
        )?;
    }
    let density = spectrum.density(0);
    write_csv(&dir.join("density.csv"), "s,psi_sq", numeric_rows(&[&spectrum.s, &density]))?;
    let (s_k, kappa): (Vec<f64>, Vec<f64>) = spectrum
        .s
        .iter()
        .filter_map(|&s| curvature.eval(s).ok().map(|k| (s, k)))
        .unzip();
    write_csv(&dir.join("curvature.csv"), "s,kappa", numeric_rows(&[&s_k, &kappa]))?;
    write_json(
        &dir.join("spectrum.json"),
        &SpectrumBundle {
            epsilon: spectrum.epsilon,
            bc: &spectrum.bc,
            formulation: spectrum.formulation,
            n_cells: spectrum.n_cells,
            eigenvalues: &spectrum.eigenvalues,
            residuals: &spectrum.residuals,
        },
    )?;
    let lines = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, e)| format!("E{i} = {} meV", fmt_g12(*e)))
        .collect();
    Ok(Outcome { code: 0, lines })
}

fn problem_of(cfg: &RunConfig) -> crate::Result<Problem> {
    let mut p = Problem::new(
        cfg.base_curvature()?,
        cfg.params()?,
        cfg.bc()?,
        cfg.numerics.k_states,
        cfg.numerics.n_cells,
    );
    if let Some(height) = cfg.numerics.defect_height {
        p.defect = Some(crate::regularization::Defect {
            height,
            center: cfg.numerics.defect_center,
        });
    }
    Ok(p)
}

fn admissibility_of(cfg: &RunConfig) -> crate::Result<(AdmissibilityReport, Option<f64>)> {
    let params = cfg.params()?;
    let mut family = RegularizationFamily::new(cfg.base_curvature()?, cfg.numerics.admissibility_epsilons.clone())?;
    if let Some(h) = cfg.numerics.defect_height {
        family = perturb_with_bump(&family, h, cfg.numerics.defect_center, &params)?;
    }
    let plateau = family.defect.map(|d| defect_plateau(&d, &params));
    Ok((assess_admissibility(&family, &params, &Default::default())?, plateau))
}

#[derive(Serialize)]
struct SweepReport<'a> {
    #[serde(flatten)]
    result: &'a SweepResult,
    admissibility: AdmissibilityReport,
}

fn cmd_sweep(cfg: &RunConfig, dir: &Path) -> crate::Result<Outcome> {
    let problem = problem_of(cfg)?;
    let result = sweep(&problem, &cfg.epsilons())?;
    let (admissibility, _) = admissibility_of(cfg)?;
    write_json(
        &dir.join("sweep.json"),
        &SweepReport {
            result: &result,
            admissibility,
        },
    )?;
    let header = std::iter::once("epsilon".to_string())
        .chain((0..result.tracks.len()).map(|t| format!("E{t}_meV")))
        .collect::<Vec<_>>()
        .join(",");
    let rows = (0..result.epsilons.len()).map(|i| {
        std::iter::once(fmt_g12(result.epsilons[i]))
            .chain(result.tracks.iter().map(|t| fmt_g12(t.values[i])))
            .collect()
    });
    write_csv(&dir.join("sweep_eigenvalues.csv"), &header, rows)?;
    let lines = result
        .tracks
        .iter()
        .map(|t| {
            format!(
                "level {}: limit {} +/- {} meV{}",
                t.n,
                fmt_g12(t.limit),
                fmt_g12(t.uncertainty),
                if t.warning { " (non-monotone tail)" } else { "" }
            )
        })
        .collect();
    Ok(Outcome { code: 0, lines })
}

fn cmd_anglescan(cfg: &RunConfig, dir: &Path) -> crate::Result<Outcome> {
    let problem = problem_of(cfg)?;
    let points: Vec<AnglePoint> = angle_scan(&problem, cfg.problem.alpha, &cfg.thetas(), &cfg.epsilons());
    let rows = points
        .iter()
        .filter_map(|p| p.e0.map(|e| vec![fmt_g12(p.theta), fmt_g12(e)]));
    write_csv(&dir.join("anglescan.csv"), "theta,E0_meV", rows)?;
    write_json(&dir.join("anglescan.json"), &points)?;
    let failed = points.iter().filter(|p| p.e0.is_none()).count();
    Ok(Outcome {
        code: 0,
        lines: vec![format!("{} angles, {failed} failed", points.len())],
    })
}

#[derive(Serialize)]
struct AdmissibilityFile {
    #[serde(flatten)]
    report: AdmissibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    defect_plateau: Option<f64>,
}

fn cmd_admissibility(cfg: &RunConfig, dir: &Path) -> crate::Result<Outcome> {
    let (report, defect_plateau) = admissibility_of(cfg)?;
    let line = format!("verdict: {:?}", report.verdict);
    write_json(
        &dir.join("admissibility.json"),
        &AdmissibilityFile {
            report,
            defect_plateau,
        },
    )?;
    Ok(Outcome {
        code: 0,
        lines: vec![line],
    })
}

fn cmd_validate(dir: &Path) -> crate::Result<Outcome> {
    let checks: Vec<OracleCheck> = run_oracles()?;
    write_json(&dir.join("validate.json"), &checks)?;
    let lines = checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: {} (expected {}, tol {})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                fmt_g12(c.value),
                fmt_g12(c.expected),
                fmt_g12(c.tolerance)
            )
        })
        .collect();
    let code = if checks.iter().all(|c| c.passed) { 0 } else { 1 };
    Ok(Outcome { code, lines })
}
