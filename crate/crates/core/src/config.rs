//! Run configuration: one JSON document, every field optional, defaults
//! reproducing the bent-wire example (J = (−5, 5) nm, α = 1/2, θ = π/8,
//! m = mₑ, Dirichlet).

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{power_law_amplitude, CurvatureSpec, PhysicalParams, ALPHA_MAX};
use crate::spectral::{canonical_bc, BcPreset, BoundaryConditions, Formulation, Mesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub theta_rad: f64,
    pub a_nm: f64,
    pub b_nm: f64,
    pub mass_ratio: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            alpha: 0.5,
            theta_rad: PI / 8.0,
            a_nm: -5.0,
            b_nm: 5.0,
            mass_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub n_cells: usize,
    pub k_states: usize,
    /// Explicit sweep sequence; when absent it is generated from
    /// eps_max·eps_factor^i down to eps_min.
    pub epsilons: Option<Vec<f64>>,
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_factor: f64,
    /// Single ε for `spectrum`.
    pub epsilon: f64,
    pub trace_epsilons: Vec<f64>,
    pub trace_points: usize,
    pub admissibility_epsilons: Vec<f64>,
    /// Opening angles for `anglescan`; default k·π/16, k = 1..=16.
    pub thetas: Option<Vec<f64>>,
    pub bc: String,
    pub formulation: Formulation,
    /// Optional defect bump (height P, centre s₀) for `admissibility` and `sweep`.
    pub defect_height: Option<f64>,
    pub defect_center: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            n_cells: 8000,
            k_states: 4,
            epsilons: None,
            eps_max: 1.0,
            eps_min: 0.5f64.powi(14),
            eps_factor: 0.5,
            epsilon: 0.01,
            trace_epsilons: vec![1.0, 0.5, 0.1, 0.01],
            trace_points: 2000,
            admissibility_epsilons: (0..=8).map(|i| 10f64.powi(-i)).collect(),
            thetas: None,
            bc: "dirichlet".into(),
            formulation: Formulation::Regular,
            defect_height: None,
            defect_center: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub n_cells: Option<usize>,
    pub k_states: Option<usize>,
    pub formulation: Option<Formulation>,
    pub bc: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.out {
            self.output.directory = d.clone();
        }
        if let Some(e) = o.epsilon {
            self.numerics.epsilon = e;
        }
        if let Some(t) = o.theta {
            self.problem.theta_rad = t;
        }
        if let Some(n) = o.n_cells {
            self.numerics.n_cells = n;
        }
        if let Some(k) = o.k_states {
            self.numerics.k_states = k;
        }
        if let Some(f) = o.formulation {
            self.numerics.formulation = f;
        }
        if let Some(bc) = &o.bc {
            self.numerics.bc = bc.clone();
        }
    }

    /// Replaces generated sequences by explicit lists so the written config
    /// re-runs identically.
    pub fn resolve(&mut self) -> Result<()> {
        if self.numerics.epsilons.is_none() {
            self.numerics.epsilons = Some(self.generated_epsilons()?);
        }
        if self.numerics.thetas.is_none() {
            self.numerics.thetas = Some((1..=16).map(|k| k as f64 * PI / 16.0).collect());
        }
        Ok(())
    }

    fn generated_epsilons(&self) -> Result<Vec<f64>> {
        let n = &self.numerics;
        if !(n.eps_factor > 0.0 && n.eps_factor < 1.0) {
            return Err(Error::invalid(format!(
                "eps_factor = {} must lie in (0, 1) for a decreasing sequence",
                n.eps_factor
            )));
        }
        if !(n.eps_max > 0.0 && n.eps_min > 0.0 && n.eps_min <= n.eps_max) {
            return Err(Error::invalid("need 0 < eps_min <= eps_max"));
        }
        let mut out = Vec::new();
        let mut i = 0;
        loop {
            let e = n.eps_max * n.eps_factor.powi(i);
            if e < n.eps_min * (1.0 - 1e-12) {
                break;
            }
            out.push(e);
            i += 1;
        }
        Ok(out)
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.numerics.epsilons.clone().unwrap_or_default()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.numerics.thetas.clone().unwrap_or_default()
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.problem.a_nm, self.problem.b_nm, self.problem.mass_ratio)
    }

    pub fn bc_preset(&self) -> Result<BcPreset> {
        self.numerics.bc.parse()
    }

    pub fn bc(&self) -> Result<BoundaryConditions> {
        Ok(canonical_bc(self.bc_preset()?))
    }

    /// The singular power law, or the zero curvature when θ = π.
    pub fn base_curvature(&self) -> Result<CurvatureSpec> {
        let p = &self.problem;
        let k = power_law_amplitude(p.alpha, p.theta_rad, p.a_nm, p.b_nm)?;
        if k == 0.0 {
            Ok(CurvatureSpec::Zero)
        } else {
            CurvatureSpec::power_law(k, p.alpha)
        }
    }

    /// Every precondition of every subcommand, checked before anything runs.
    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        let n = &self.numerics;
        let params = self.params()?;
        if !(p.alpha > 0.0 && p.alpha < ALPHA_MAX) {
            return Err(Error::invalid(format!("alpha = {} must lie in (0, 3/4)", p.alpha)));
        }
        if !(p.a_nm < 0.0 && p.b_nm > 0.0) {
            return Err(Error::invalid("the interval must contain the singular point s = 0"));
        }
        self.base_curvature()?;
        if n.n_cells < 2 {
            return Err(Error::invalid(format!("n_cells = {}, need at least 2", n.n_cells)));
        }
        if n.k_states < 1 || n.k_states > n.n_cells - 1 {
            return Err(Error::invalid(format!("k_states = {} out of range", n.k_states)));
        }
        let preset = self.bc_preset()?;
        let eps = self.epsilons();
        if eps.len() < 4 {
            return Err(Error::invalid(format!("the sweep needs at least 4 epsilons, got {}", eps.len())));
        }
        check_decreasing("epsilons", &eps)?;
        check_decreasing("admissibility_epsilons", &n.admissibility_epsilons)?;
        if n.trace_epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("trace_epsilons must be positive"));
        }
        if !(n.epsilon > 0.0 && n.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon = {} must be positive", n.epsilon)));
        }
        if n.trace_points < 2 {
            return Err(Error::invalid("trace_points must be at least 2"));
        }
        if self.thetas().iter().any(|t| !(*t > 0.0 && *t <= PI)) {
            return Err(Error::invalid("thetas must lie in (0, π]"));
        }
        if let Some(h) = n.defect_height {
            if !h.is_finite() || !(n.defect_center > p.a_nm && n.defect_center < p.b_nm) {
                return Err(Error::invalid("defect needs a finite height and a centre inside J"));
            }
        }
        if n.formulation == Formulation::QuasiDerivative {
            if preset != BcPreset::Dirichlet {
                return Err(Error::invalid("the quasi-derivative formulation supports Dirichlet only"));
            }
            let mesh = Mesh::nodal(params.a, params.b, n.n_cells)?;
            if !mesh.is_cell_edge(0.0) {
                return Err(Error::invalid("quasi-derivative mesh must put s = 0 on a cell boundary"));
            }
        }
        Ok(())
    }
}

fn check_decreasing(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|e| !(*e > 0.0 && e.is_finite())) || v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid(format!("{name} must be positive and strictly decreasing")));
    }
    Ok(())
}
