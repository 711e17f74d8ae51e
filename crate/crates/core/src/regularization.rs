//! Geometric potentials V = −(ħ²/8m)κ², their primitives U (U′ = V away from
//! the singular point), ε-families of curvatures and the admissibility test:
//! L¹ convergence of the curvatures together with L² convergence of the
//! primitives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{l1_difference, CurvatureSpec, PhysicalParams};
use crate::quadrature::{self, Tolerance};
use crate::spectral::Mesh;

/// Δ(s) = (P/ε)·b((s − s₀)/ε) with the C¹ cosine bump b(x) = (1 + cos πx)/2
/// on |x| < 1, which has unit integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub height: f64,
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, s: f64) -> f64 {
        let x = (s - self.center) / self.width;
        if x.abs() >= 1.0 {
            0.0
        } else {
            self.height / self.width * 0.5 * (1.0 + (PI * x).cos())
        }
    }

    /// ∫_{−∞}^s Δ, rising from 0 to P across the support.
    pub fn primitive(&self, s: f64) -> f64 {
        let x = (s - self.center) / self.width;
        if x <= -1.0 {
            0.0
        } else if x >= 1.0 {
            self.height
        } else {
            self.height * (0.5 * (x + 1.0) + (PI * x).sin() / (2.0 * PI))
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }
}

/// The antiderivative of −(ħ²/8m)(κ² + Δ), fixed up to the additive constant.
///
/// For the regularized power law this is the closed form
/// −(ħ²K²/8m)·sgn(s)·ln(|s| + ε), which matches the singular
/// −(ħ²K²/8m)·sgn(s)·ln|s| as ε → 0 but jumps by 2(ħ²K²/8m)|ln ε| at s = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    spec: CurvatureSpec,
    bump: Option<Bump>,
    /// ħ²/8m in meV·nm².
    scale: f64,
    pub constant: f64,
}

fn power_primitive(s: f64, alpha: f64, shift: f64) -> f64 {
    let r = s.abs() + shift;
    let body = if (alpha - 0.5).abs() < 1e-14 {
        r.ln()
    } else {
        r.powf(1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha)
    };
    s.signum() * body
}

impl Primitive {
    pub fn spec(&self) -> &CurvatureSpec {
        &self.spec
    }

    pub fn bump(&self) -> Option<Bump> {
        self.bump
    }

    pub fn is_singular(&self) -> bool {
        self.spec.is_singular()
    }

    /// U(s) in meV·nm. At the singular point the odd part is taken as zero.
    pub fn eval(&self, s: f64) -> f64 {
        let body = match &self.spec {
            CurvatureSpec::Zero => 0.0,
            CurvatureSpec::Constant { value } => value * value * s,
            CurvatureSpec::PowerLawSingular { amplitude, alpha } => {
                if s == 0.0 {
                    0.0
                } else {
                    amplitude * amplitude * power_primitive(s, *alpha, 0.0)
                }
            }
            CurvatureSpec::PowerLawRegularized {
                amplitude,
                alpha,
                epsilon,
            } => amplitude * amplitude * power_primitive(s, *alpha, *epsilon),
            CurvatureSpec::Tabulated(t) => t.square_primitive(s),
        };
        let bump = self.bump.map_or(0.0, |b| b.primitive(s));
        -self.scale * (body + bump) + self.constant
    }

    /// V(s) = −(ħ²/8m)(κ²(s) + Δ(s)) in meV.
    pub fn potential(&self, s: f64) -> Result<f64> {
        let k = self.spec.eval(s)?;
        let bump = self.bump.map_or(0.0, |b| b.eval(s));
        Ok(-self.scale * (k * k + bump))
    }

    /// Same primitive with the constant chosen so that U has zero mean on (a, b).
    pub fn with_zero_mean(mut self, params: &PhysicalParams) -> Result<Self> {
        self.constant = 0.0;
        let breaks = self.breakpoints();
        let q = quadrature::integrate(|s| self.eval(s), params.a, params.b, &breaks, Tolerance::default())?;
        self.constant = -q.value / params.length();
        Ok(self)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        if let Some(b) = self.bump {
            let (lo, hi) = b.support();
            out.extend([lo, b.center, hi]);
        }
        out
    }
}

/// Potential on the unknown nodes of a mesh together with its primitive.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    pub nodes: Vec<f64>,
    pub v_samples: Vec<f64>,
    pub primitive: Primitive,
    /// ħ²K²/8m in meV·nm^(2α) for the power-law kinds.
    pub amplitude: Option<f64>,
    pub epsilon: Option<f64>,
}

impl PotentialModel {
    pub fn constant(&self) -> f64 {
        self.primitive.constant
    }
}

fn scale(params: &PhysicalParams) -> f64 {
    params.kinetic() / 4.0
}

fn amplitude_of(spec: &CurvatureSpec, params: &PhysicalParams) -> Option<f64> {
    spec.power_law_params().map(|(k, _)| scale(params) * k * k)
}

/// κ_ε(s) = K(|s| + ε)^(−α) for a singular power law.
pub fn regularize(base: &CurvatureSpec, epsilon: f64) -> Result<CurvatureSpec> {
    match base {
        CurvatureSpec::PowerLawSingular { amplitude, alpha } => {
            CurvatureSpec::power_law_regularized(*amplitude, *alpha, epsilon)
        }
        _ => Err(Error::invalid("only a singular power law can be regularized")),
    }
}

fn build_primitive(
    spec: &CurvatureSpec,
    bump: Option<Bump>,
    params: &PhysicalParams,
    constant: f64,
) -> Result<Primitive> {
    params.validate()?;
    if let CurvatureSpec::Tabulated(t) = spec {
        if !t.covers(params.a, params.b) {
            return Err(Error::invalid("tabulated curvature does not cover the interval"));
        }
    }
    Ok(Primitive {
        spec: spec.clone(),
        bump,
        scale: scale(params),
        constant,
    })
}

fn sample_potential(primitive: &Primitive, mesh: &Mesh) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = mesh.unknown_nodes();
    let mut v = Vec::with_capacity(nodes.len());
    for (index, &s) in nodes.iter().enumerate() {
        match primitive.potential(s) {
            Ok(x) => v.push(x),
            Err(Error::SingularPoint(_)) => return Err(Error::GridContainsSingularity { index }),
            Err(e) => return Err(e),
        }
    }
    Ok((nodes, v))
}

/// V = −(ħ²/8m)κ² sampled on the unknown nodes of `mesh`; the primitive is
/// attached with C = 0.
pub fn geometric_potential(spec: &CurvatureSpec, params: &PhysicalParams, mesh: &Mesh) -> Result<PotentialModel> {
    potential_of(&FamilyMember::plain(spec.clone()), params, mesh)
}

/// Potential of a family member (curvature plus optional bump) on a mesh.
pub fn potential_of(member: &FamilyMember, params: &PhysicalParams, mesh: &Mesh) -> Result<PotentialModel> {
    let primitive = build_primitive(&member.spec, member.bump, params, 0.0)?;
    let (nodes, v_samples) = sample_potential(&primitive, mesh)?;
    Ok(PotentialModel {
        nodes,
        v_samples,
        amplitude: amplitude_of(&member.spec, params),
        epsilon: member.spec.epsilon(),
        primitive,
    })
}

/// The primitive U with additive constant `constant`, without point samples.
/// Closed form for every kind: logarithmic at α = 1/2, a power otherwise,
/// exact piecewise-cubic for tables.
pub fn potential_primitive(spec: &CurvatureSpec, params: &PhysicalParams, constant: f64) -> Result<PotentialModel> {
    Ok(PotentialModel {
        nodes: Vec::new(),
        v_samples: Vec::new(),
        amplitude: amplitude_of(spec, params),
        epsilon: spec.epsilon(),
        primitive: build_primitive(spec, None, params, constant)?,
    })
}

/// One curvature of a family, possibly carrying a defect bump in κ².
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub spec: CurvatureSpec,
    pub bump: Option<Bump>,
}

impl FamilyMember {
    pub fn plain(spec: CurvatureSpec) -> Self {
        FamilyMember { spec, bump: None }
    }

    /// √(κ² + Δ), the curvature whose square carries the bump.
    pub fn curvature(&self, s: f64) -> f64 {
        let k = self.spec.eval_or_inf(s);
        match self.bump {
            None => k,
            Some(b) => (k * k + b.eval(s)).sqrt(),
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.spec.epsilon()
    }
}

/// Height and centre of the defect bump; its width follows ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub height: f64,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationFamily {
    pub base: CurvatureSpec,
    pub epsilons: Vec<f64>,
    pub defect: Option<Defect>,
}

impl RegularizationFamily {
    pub fn new(base: CurvatureSpec, epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::invalid("a family needs at least one epsilon"));
        }
        if epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("epsilons must be strictly decreasing"));
        }
        if !(epsilons[epsilons.len() - 1] > 0.0) || epsilons.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("epsilons must be finite and positive"));
        }
        Ok(RegularizationFamily {
            base,
            epsilons,
            defect: None,
        })
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::invalid(format!("family index {index} out of range (len {})", self.len())))
        }
    }

    /// The member at `index`. Bounded bases do not depend on ε.
    pub fn member(&self, index: usize) -> Result<FamilyMember> {
        self.check_index(index)?;
        let eps = self.epsilons[index];
        let spec = if self.base.is_singular() {
            regularize(&self.base, eps)?
        } else {
            self.base.clone()
        };
        let bump = self.defect.map(|d| Bump {
            height: d.height,
            center: d.center,
            width: eps,
        });
        Ok(FamilyMember { spec, bump })
    }
}

fn member_breakpoints(member: &FamilyMember) -> Vec<f64> {
    let mut out = vec![0.0];
    if let Some(b) = member.bump {
        let (lo, hi) = b.support();
        out.extend([lo, b.center, hi]);
    }
    out
}

/// ‖κ_ε − κ‖_{L¹(J)} for member `index`.
pub fn l1_curvature_error(family: &RegularizationFamily, index: usize, params: &PhysicalParams) -> Result<f64> {
    let member = family.member(index)?;
    if member.bump.is_none() {
        return l1_difference(&member.spec, &family.base, params);
    }
    let base = &family.base;
    let q = quadrature::integrate(
        |s| (member.curvature(s) - base.eval_or_inf(s)).abs(),
        params.a,
        params.b,
        &member_breakpoints(&member),
        Tolerance::default(),
    )?;
    Ok(q.value)
}

/// min over constants C of ‖U_ε − U − C‖_{L²(J)} for member `index`.
pub fn l2_primitive_error(family: &RegularizationFamily, index: usize, params: &PhysicalParams) -> Result<f64> {
    let member = family.member(index)?;
    let u_eps = build_primitive(&member.spec, member.bump, params, 0.0)?;
    let u = build_primitive(&family.base, None, params, 0.0)?;
    let breaks = member_breakpoints(&member);
    let d = |s: f64| u_eps.eval(s) - u.eval(s);
    let tol = Tolerance::default();
    let mean = quadrature::integrate(d, params.a, params.b, &breaks, tol)?.value;
    let square = quadrature::integrate(|s| d(s).powi(2), params.a, params.b, &breaks, tol)?.value;
    Ok((square - mean * mean / params.length()).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Admissible,
    PreAdmissibleOnly,
    Inconclusive,
}

/// Finite-ε stand-ins for the two limits in the admissibility definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityTolerances {
    /// Final L¹ curvature error must be below this fraction of ‖κ‖₁.
    pub l1_relative: f64,
    /// Minimum log-log slope of the L² primitive errors over the last points.
    pub l2_min_slope: f64,
    pub slope_points: usize,
}

impl Default for AdmissibilityTolerances {
    fn default() -> Self {
        AdmissibilityTolerances {
            l1_relative: 1e-3,
            l2_min_slope: 0.2,
            slope_points: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub epsilons: Vec<f64>,
    pub l1_errors: Vec<f64>,
    pub l2_errors: Vec<f64>,
    pub verdict: Verdict,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn all_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

/// Least-squares slope of ln y against ln x.
pub(crate) fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Both error sequences per ε, and the verdict: Admissible when both converge,
/// PreAdmissibleOnly when only the curvatures do.
pub fn assess_admissibility(
    family: &RegularizationFamily,
    params: &PhysicalParams,
    tol: &AdmissibilityTolerances,
) -> Result<AdmissibilityReport> {
    let mut l1_errors = Vec::with_capacity(family.len());
    let mut l2_errors = Vec::with_capacity(family.len());
    for i in 0..family.len() {
        l1_errors.push(l1_curvature_error(family, i, params)?);
        l2_errors.push(l2_primitive_error(family, i, params)?);
    }
    let verdict = if family.len() < 3 {
        Verdict::Inconclusive
    } else {
        let kappa_l1 = family.base.l1_norm(params.a, params.b)?;
        let l1_ok = all_zero(&l1_errors)
            || (strictly_decreasing(&l1_errors) && *l1_errors.last().unwrap() < tol.l1_relative * kappa_l1);
        let tail = tol.slope_points.min(family.len()).max(2);
        let start = family.len() - tail;
        let l2_ok = all_zero(&l2_errors)
            || (strictly_decreasing(&l2_errors)
                && log_log_slope(&family.epsilons[start..], &l2_errors[start..])
                    .is_some_and(|p| p > tol.l2_min_slope));
        match (l1_ok, l2_ok) {
            (true, true) => Verdict::Admissible,
            (true, false) => Verdict::PreAdmissibleOnly,
            _ => Verdict::Inconclusive,
        }
    };
    Ok(AdmissibilityReport {
        epsilons: family.epsilons.clone(),
        l1_errors,
        l2_errors,
        verdict,
    })
}

/// Adds the bump Δ_ε = (P/ε)·b((s − s₀)/ε) to κ_ε² for every member. The
/// bump vanishes pointwise off s₀ but its primitive keeps a step of height
/// (ħ²/8m)·P, so the L² primitive error cannot go to zero.
pub fn perturb_with_bump(
    family: &RegularizationFamily,
    height: f64,
    center: f64,
    params: &PhysicalParams,
) -> Result<RegularizationFamily> {
    if !height.is_finite() || !center.is_finite() {
        return Err(Error::invalid("bump height and centre must be finite"));
    }
    let mut out = family.clone();
    if height == 0.0 {
        return Ok(out);
    }
    if center <= params.a || center >= params.b {
        return Err(Error::invalid(format!("bump centre {center} outside ({}, {})", params.a, params.b)));
    }
    out.defect = Some(Defect { height, center });
    if height < 0.0 {
        // a negative bump is allowed only where κ_ε² dominates it
        for i in 0..out.len() {
            let member = out.member(i)?;
            let bump = member.bump.expect("defect set above");
            let (lo, hi) = bump.support();
            for j in 0..=400 {
                let s = lo + (hi - lo) * j as f64 / 400.0;
                let k = member.spec.eval_or_inf(s);
                if k * k + bump.eval(s) < 0.0 {
                    return Err(Error::invalid(format!(
                        "bump makes κ² negative at s = {s} for ε = {}",
                        out.epsilons[i]
                    )));
                }
            }
        }
    }
    Ok(out)
}

/// L² norm of a unit step at s₀ after removing its mean over (a, b); the
/// defective family's primitive error tends to (ħ²/8m)·P times this.
pub fn step_l2_norm(center: f64, params: &PhysicalParams) -> f64 {
    ((center - params.a) * (params.b - center) / params.length()).sqrt()
}

/// (ħ²/8m)·P·step_l2_norm: the plateau of the bumped family's L² error.
pub fn defect_plateau(defect: &Defect, params: &PhysicalParams) -> f64 {
    scale(params) * defect.height.abs() * step_l2_norm(defect.center, params)
}
