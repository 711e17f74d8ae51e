//! ε-sweeps, eigenvalue tracks across ε, extrapolation to ε → 0, eigenspace
//! overlaps and θ-scans.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{power_law_amplitude, CurvatureSpec, PhysicalParams};
use crate::regularization::{potential_of, potential_primitive, Defect, RegularizationFamily};
use crate::spectral::{
    assemble_quasi, assemble_regular, eigen_lowest, group_degenerate, BoundaryConditions, Mesh, Spectrum,
    DEGENERACY_RTOL,
};

/// What gets swept: a base curvature on J with boundary conditions and the
/// discretization shared by every ε.
#[derive(Debug, Clone)]
pub struct Problem {
    pub base: CurvatureSpec,
    pub params: PhysicalParams,
    pub bc: BoundaryConditions,
    pub k: usize,
    pub n_cells: usize,
    pub defect: Option<Defect>,
}

impl Problem {
    pub fn new(base: CurvatureSpec, params: PhysicalParams, bc: BoundaryConditions, k: usize, n_cells: usize) -> Self {
        Problem {
            base,
            params,
            bc,
            k,
            n_cells,
            defect: None,
        }
    }

    fn family(&self, epsilons: &[f64]) -> Result<RegularizationFamily> {
        let mut family = RegularizationFamily::new(self.base.clone(), epsilons.to_vec())?;
        family.defect = self.defect;
        Ok(family)
    }

    fn mesh(&self) -> Result<Mesh> {
        Mesh::staggered(self.params.a, self.params.b, self.n_cells)
    }
}

/// ε = 2⁰, 2⁻¹, …, 2⁻¹⁴ nm.
pub fn default_epsilons() -> Vec<f64> {
    (0..=14).map(|i| 0.5f64.powi(i)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub uncertainty: f64,
    /// Fitted exponent p in v₀ + c·ε^p; absent when the data do not move.
    pub rate: Option<f64>,
    /// Set when the tail is not Cauchy-like and the last value was returned.
    pub warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenTrack {
    pub n: usize,
    /// Eigen-indices at the smallest ε that converge to this level.
    pub l_n_members: Vec<usize>,
    /// Per-ε values (mean over members), aligned with the sweep's epsilons.
    pub values: Vec<f64>,
    #[serde(skip)]
    pub member_indices: Vec<Vec<usize>>,
    pub limit: f64,
    pub uncertainty: f64,
    pub rate: Option<f64>,
    pub warning: bool,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFailure {
    pub epsilon: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    /// The ε values that were solved, in sweep order.
    pub epsilons: Vec<f64>,
    pub tracks: Vec<EigenTrack>,
    /// overlaps[t][i]: eigenspace overlap of track t at epsilons[i] with the
    /// reference states (direct singular solve when available, otherwise the
    /// smallest-ε solution).
    pub overlaps: Vec<Vec<f64>>,
    pub overlap_reference: String,
    pub failures: Vec<SweepFailure>,
    #[serde(skip)]
    pub spectra: Vec<Spectrum>,
}

impl SweepResult {
    pub fn ground(&self) -> &EigenTrack {
        &self.tracks[0]
    }
}

/// Tracks through the columns of a sweep, before extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    /// One entry per limit level: the raw tracks (as eigen-index paths) it owns.
    pub groups: Vec<Vec<Vec<usize>>>,
    pub ambiguous: Vec<bool>,
}

/// Nearest-continuation matching of ascending eigenvalue columns, then
/// grouping of tracks that are degenerate at the last column.
pub fn pair_tracks(columns: &[Vec<f64>]) -> Result<Pairing> {
    let first = columns.first().ok_or_else(|| Error::invalid("no eigenvalue columns to pair"))?;
    let k = first.len();
    if columns.iter().any(|c| c.len() != k) {
        return Err(Error::invalid("eigenvalue columns differ in length"));
    }
    let mut paths: Vec<Vec<usize>> = (0..k).map(|j| vec![j]).collect();
    let mut ambiguous = vec![false; k];
    for w in columns.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
        for (t, path) in paths.iter().enumerate() {
            let v = prev[*path.last().unwrap()];
            for (j, &x) in next.iter().enumerate() {
                pairs.push(((x - v).abs(), t, j));
            }
        }
        // ties are broken by index so the matching is deterministic
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_done = vec![false; k];
        let mut taken = vec![false; k];
        let mut chosen = vec![0; k];
        for &(_, t, j) in &pairs {
            if !track_done[t] && !taken[j] {
                track_done[t] = true;
                taken[j] = true;
                chosen[t] = j;
            }
        }
        for (t, path) in paths.iter_mut().enumerate() {
            let v = prev[*path.last().unwrap()];
            let tol = DEGENERACY_RTOL * (1.0 + v.abs());
            let mut d: Vec<f64> = next.iter().map(|x| (x - v).abs()).collect();
            d.sort_by(f64::total_cmp);
            if d.len() > 1 && d[1] - d[0] <= tol && d[1] > tol {
                ambiguous[t] = true;
            }
            path.push(chosen[t]);
        }
    }
    let last = columns.last().unwrap();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| last[*paths[x].last().unwrap()].total_cmp(&last[*paths[y].last().unwrap()]));
    let finals: Vec<f64> = order.iter().map(|&t| last[*paths[t].last().unwrap()]).collect();
    let groups = group_degenerate(&finals);
    let mut out_groups = Vec::with_capacity(groups.len());
    let mut out_amb = Vec::with_capacity(groups.len());
    for g in groups {
        out_amb.push(g.iter().any(|&i| ambiguous[order[i]]));
        out_groups.push(g.iter().map(|&i| paths[order[i]].clone()).collect());
    }
    Ok(Pairing {
        groups: out_groups,
        ambiguous: out_amb,
    })
}

fn fit_limit(eps: &[f64], v: &[f64]) -> Option<(f64, f64)> {
    let incr: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let p = if incr.len() == 2 {
        solve_rate(eps, incr[0], incr[1])?
    } else {
        crate::regularization::log_log_slope(&eps[..incr.len()], &incr)?
    };
    if !(p > 0.0) {
        return None;
    }
    // least squares for v = v0 + c·ε^p
    let x: Vec<f64> = eps.iter().map(|e| e.powf(p)).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxv: f64 = x.iter().zip(v).map(|(a, b)| (a - mx) * (b - mv)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let c = sxv / sxx;
    Some((mv - c * mx, p))
}

/// p such that (ε₀^p − ε₁^p)/(ε₁^p − ε₂^p) equals d0/d1, by bisection.
fn solve_rate(eps: &[f64], d0: f64, d1: f64) -> Option<f64> {
    if !(d0 > 0.0 && d1 > 0.0) {
        return None;
    }
    let target = (d0 / d1).ln();
    let g = |p: f64| {
        let (a, b, c) = (eps[0].powf(p), eps[1].powf(p), eps[2].powf(p));
        ((a - b) / (b - c)).ln() - target
    };
    let (mut lo, mut hi) = (1e-6, 20.0);
    if g(lo) * g(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Fits v(ε) = v₀ + c·ε^p to the tail of a track. The limit comes from the
/// last 3 points, the uncertainty from comparing with the 4-point fit.
pub fn extrapolate_track(epsilons: &[f64], values: &[f64]) -> Result<Extrapolation> {
    let n = values.len();
    if n < 3 || epsilons.len() != n {
        return Err(Error::invalid("extrapolation needs at least 3 matching (ε, value) points"));
    }
    let last = values[n - 1];
    let d1 = values[n - 1] - values[n - 2];
    let d0 = values[n - 2] - values[n - 3];
    if d0 == 0.0 && d1 == 0.0 {
        return Ok(Extrapolation {
            limit: last,
            uncertainty: 0.0,
            rate: None,
            warning: false,
        });
    }
    let fallback = Extrapolation {
        limit: last,
        uncertainty: d1.abs(),
        rate: None,
        warning: true,
    };
    if d0 * d1 <= 0.0 || d1.abs() >= d0.abs() {
        return Ok(fallback);
    }
    let Some((v3, p)) = fit_limit(&epsilons[n - 3..], &values[n - 3..]) else {
        return Ok(fallback);
    };
    let uncertainty = if n >= 4 {
        match fit_limit(&epsilons[n - 4..], &values[n - 4..]) {
            Some((v4, _)) => (v3 - v4).abs(),
            None => d1.abs(),
        }
    } else {
        d1.abs()
    };
    Ok(Extrapolation {
        limit: v3,
        uncertainty,
        rate: Some(p),
        warning: false,
    })
}

fn check_same_mesh(a: &Spectrum, b: &Spectrum) -> Result<()> {
    let same = a.s.len() == b.s.len()
        && (a.h - b.h).abs() <= 1e-12 * a.h
        && a.s.iter().zip(&b.s).all(|(x, y)| (x - y).abs() <= 1e-9 * a.h);
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch("eigenspace overlap needs both spectra on one mesh".into()))
    }
}

/// Σ_{i∈group, j∈refs} |⟨ψ_i, φ_j⟩|² / |refs| with the discrete inner product.
pub fn eigenspace_overlap(spec_eps: &Spectrum, spec_ref: &Spectrum, group: &[usize], refs: &[usize]) -> Result<f64> {
    check_same_mesh(spec_eps, spec_ref)?;
    if refs.is_empty() || group.iter().any(|&i| i >= spec_eps.len()) || refs.iter().any(|&j| j >= spec_ref.len()) {
        return Err(Error::invalid("overlap indices out of range"));
    }
    let h = spec_eps.h;
    let mut acc = 0.0;
    for &i in group {
        for &j in refs {
            let ip: f64 = h * spec_eps.eigenfunctions[i]
                .iter()
                .zip(&spec_ref.eigenfunctions[j])
                .map(|(a, b)| a * b)
                .sum::<f64>();
            acc += ip * ip;
        }
    }
    Ok(acc / refs.len() as f64)
}

/// `reference` carried over to the nodes of `target` by linear interpolation
/// and renormalized, so spectra from different meshes can be overlapped.
pub fn resample_onto(reference: &Spectrum, target: &Spectrum) -> Spectrum {
    let eigenfunctions = (0..reference.len())
        .map(|i| {
            let mut v = reference.resample(i, &target.s);
            let norm = (target.h * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            v
        })
        .collect();
    Spectrum {
        s: target.s.clone(),
        h: target.h,
        eigenfunctions,
        pinned_ends: target.pinned_ends,
        ..reference.clone()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceFit {
    pub c_hat: f64,
    /// ‖y − Ĉx‖₂ / ‖y‖₂.
    pub relative_residual: f64,
}

/// Through-origin least squares of |λ_ε − λ| against ‖u_ε − u‖₂.
pub fn fit_convergence_constant(deviations: &[f64], primitive_errors: &[f64]) -> Result<ConvergenceFit> {
    if deviations.len() != primitive_errors.len() || deviations.is_empty() {
        return Err(Error::invalid("fit needs matching, non-empty sequences"));
    }
    let hi = primitive_errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = primitive_errors.iter().copied().fold(f64::INFINITY, f64::min);
    if !(hi - lo > 1e-14 * hi.abs().max(lo.abs())) {
        return Err(Error::invalid("primitive errors are all equal; the fit is degenerate"));
    }
    let sxx: f64 = primitive_errors.iter().map(|x| x * x).sum();
    let sxy: f64 = primitive_errors.iter().zip(deviations).map(|(x, y)| x * y).sum();
    let c_hat = sxy / sxx;
    let res: f64 = primitive_errors
        .iter()
        .zip(deviations)
        .map(|(x, y)| (y - c_hat * x).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = deviations.iter().map(|y| y * y).sum::<f64>().sqrt();
    Ok(ConvergenceFit {
        c_hat,
        relative_residual: if norm > 0.0 { res / norm } else { 0.0 },
    })
}

/// Direct solve of the singular problem in the quasi-derivative weak form on
/// an endpoint-inclusive mesh (Dirichlet only), with the zero-mean primitive.
pub fn solve_singular(
    base: &CurvatureSpec,
    params: &PhysicalParams,
    bc: &BoundaryConditions,
    n_cells: usize,
    k: usize,
) -> Result<Spectrum> {
    let mesh = Mesh::nodal(params.a, params.b, n_cells)?;
    let mut model = potential_primitive(base, params, 0.0)?;
    model.primitive = model.primitive.with_zero_mean(params)?;
    let op = assemble_quasi(&model, params, &mesh, bc)?;
    eigen_lowest(&op, k)
}

fn solve_member(problem: &Problem, family: &RegularizationFamily, mesh: &Mesh, i: usize) -> Result<Spectrum> {
    let member = family.member(i)?;
    let pot = potential_of(&member, &problem.params, mesh)?;
    let op = assemble_regular(&pot, &problem.params, mesh, &problem.bc)?;
    let mut spec = eigen_lowest(&op, problem.k)?;
    spec.epsilon = Some(family.epsilons[i]);
    Ok(spec)
}

/// Regularize → potential → finite differences → lowest k, for every ε on
/// one shared staggered mesh. Failing ε are reported and skipped.
pub fn sweep(problem: &Problem, epsilons: &[f64]) -> Result<SweepResult> {
    if epsilons.len() < 4 {
        return Err(Error::invalid(format!("a sweep needs at least 4 epsilons, got {}", epsilons.len())));
    }
    problem.params.validate()?;
    let family = problem.family(epsilons)?;
    let mesh = problem.mesh()?;
    let solved: Vec<Result<Spectrum>> = (0..family.len())
        .into_par_iter()
        .map(|i| solve_member(problem, &family, &mesh, i))
        .collect();

    let mut eps_ok = Vec::new();
    let mut spectra = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in solved.into_iter().enumerate() {
        match r {
            Ok(s) => {
                eps_ok.push(epsilons[i]);
                spectra.push(s);
            }
            Err(e) => failures.push(SweepFailure {
                epsilon: epsilons[i],
                detail: e.to_string(),
            }),
        }
    }
    if spectra.len() < 3 {
        return Err(Error::invalid(format!(
            "only {} of {} epsilons solved: {}",
            spectra.len(),
            epsilons.len(),
            failures.first().map_or(String::new(), |f| f.detail.clone())
        )));
    }
    let columns: Vec<Vec<f64>> = spectra.iter().map(|s| s.eigenvalues.clone()).collect();
    let pairing = pair_tracks(&columns)?;

    let mut tracks = Vec::with_capacity(pairing.groups.len());
    for (n, group) in pairing.groups.iter().enumerate() {
        let values: Vec<f64> = (0..columns.len())
            .map(|c| group.iter().map(|path| columns[c][path[c]]).sum::<f64>() / group.len() as f64)
            .collect();
        let member_indices: Vec<Vec<usize>> = (0..columns.len())
            .map(|c| group.iter().map(|path| path[c]).collect())
            .collect();
        let ex = extrapolate_track(&eps_ok, &values)?;
        tracks.push(EigenTrack {
            n,
            l_n_members: member_indices.last().unwrap().clone(),
            values,
            member_indices,
            limit: ex.limit,
            uncertainty: ex.uncertainty,
            rate: ex.rate,
            warning: ex.warning,
            ambiguous: pairing.ambiguous[n],
        });
    }

    let direct = if problem.base.is_singular() && problem.bc.is_dirichlet() && problem.defect.is_none() {
        Mesh::nodal(problem.params.a, problem.params.b, problem.n_cells)
            .ok()
            .filter(|m| m.is_cell_edge(0.0))
            .and_then(|_| solve_singular(&problem.base, &problem.params, &problem.bc, problem.n_cells, problem.k).ok())
    } else {
        None
    };
    let (reference, overlap_reference) = match direct {
        Some(d) => (resample_onto(&d, &spectra[0]), "direct singular solve".to_string()),
        None => (
            spectra.last().unwrap().clone(),
            format!("epsilon = {}", eps_ok.last().unwrap()),
        ),
    };
    let mut overlaps = Vec::with_capacity(tracks.len());
    for track in &tracks {
        let refs: Vec<usize> = track.l_n_members.iter().copied().filter(|&j| j < reference.len()).collect();
        let mut row = Vec::with_capacity(spectra.len());
        for (c, spec) in spectra.iter().enumerate() {
            row.push(eigenspace_overlap(spec, &reference, &track.member_indices[c], &refs)?);
        }
        overlaps.push(row);
    }

    Ok(SweepResult {
        epsilons: eps_ok,
        tracks,
        overlaps,
        overlap_reference,
        failures,
        spectra,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnglePoint {
    pub theta: f64,
    pub e0: Option<f64>,
    pub uncertainty: Option<f64>,
    pub warning: bool,
    pub error: Option<String>,
}

/// Extrapolated ground energy per opening angle θ for the power law with
/// exponent `alpha`; the template supplies J, bc and the discretization.
pub fn angle_scan(template: &Problem, alpha: f64, thetas: &[f64], epsilons: &[f64]) -> Vec<AnglePoint> {
    thetas
        .par_iter()
        .map(|&theta| {
            let run = || -> Result<Extrapolation> {
                let p = &template.params;
                let k = power_law_amplitude(alpha, theta, p.a, p.b)?;
                let base = if k == 0.0 {
                    CurvatureSpec::Zero
                } else {
                    CurvatureSpec::power_law(k, alpha)?
                };
                let problem = Problem {
                    base,
                    k: 1,
                    ..template.clone()
                };
                let result = sweep_values_only(&problem, epsilons)?;
                extrapolate_track(epsilons, &result)
            };
            match run() {
                Ok(ex) => AnglePoint {
                    theta,
                    e0: Some(ex.limit),
                    uncertainty: Some(ex.uncertainty),
                    warning: ex.warning,
                    error: None,
                },
                Err(e) => AnglePoint {
                    theta,
                    e0: None,
                    uncertainty: None,
                    warning: true,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Ground energy per ε, without pairing or overlaps.
fn sweep_values_only(problem: &Problem, epsilons: &[f64]) -> Result<Vec<f64>> {
    let family = problem.family(epsilons)?;
    let mesh = problem.mesh()?;
    (0..family.len())
        .into_par_iter()
        .map(|i| solve_member(problem, &family, &mesh, i).map(|s| s.eigenvalues[0]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::power_law_amplitude;
    use crate::regularization::PotentialModel;
    use std::f64::consts::PI;

    fn geometric(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.5f64.powi(i as i32)).collect()
    }

    #[test]
    fn extrapolation_recovers_power_law() {
        let eps = geometric(8);
        let v: Vec<f64> = eps.iter().map(|e| 1.0 + e.sqrt()).collect();
        let ex = extrapolate_track(&eps, &v).unwrap();
        assert!((ex.limit - 1.0).abs() < 1e-10, "{ex:?}");
        assert!((ex.rate.unwrap() - 0.5).abs() < 1e-8);
        assert!(ex.uncertainty < 1e-10 && !ex.warning);
    }

    #[test]
    fn extrapolation_of_constant_is_exact() {
        let eps = geometric(5);
        let ex = extrapolate_track(&eps, &[3.7603; 5]).unwrap();
        assert_eq!(ex.limit, 3.7603);
        assert_eq!(ex.uncertainty, 0.0);
        assert!(!ex.warning);
    }

    #[test]
    fn non_monotone_tail_falls_back() {
        let eps = geometric(5);
        let ex = extrapolate_track(&eps, &[1.0, 0.5, 0.3, 0.4, 0.35]).unwrap();
        assert!(ex.warning);
        assert_eq!(ex.limit, 0.35);
        assert!((ex.uncertainty - 0.05).abs() < 1e-12);
        assert!(extrapolate_track(&eps[..2], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn convergence_constant_fit() {
        let x = [0.5, 0.3, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = fit_convergence_constant(&y, &x).unwrap();
        assert!((fit.c_hat - 2.0).abs() < 1e-12 && fit.relative_residual < 1e-12);
        assert!(fit_convergence_constant(&[0.1, 0.2], &[0.0, 0.0]).is_err());
        assert!(fit_convergence_constant(&[0.1, 0.2], &[0.3, 0.3]).is_err());
    }

    #[test]
    fn monotone_columns_pair_by_identity() {
        let cols = vec![vec![-1.0, 2.0, 5.0], vec![-1.5, 1.9, 4.8], vec![-1.8, 1.85, 4.7]];
        let p = pair_tracks(&cols).unwrap();
        assert_eq!(p.groups, vec![vec![vec![0, 0, 0]], vec![vec![1, 1, 1]], vec![vec![2, 2, 2]]]);
        assert!(p.ambiguous.iter().all(|a| !a));
    }

    fn double_well(barrier: f64, mesh: &Mesh, params: &PhysicalParams) -> Spectrum {
        let nodes = mesh.unknown_nodes();
        let v_samples = nodes.iter().map(|s| if s.abs() < 1.0 { barrier } else { 0.0 }).collect();
        let model = PotentialModel {
            nodes,
            v_samples,
            ..potential_primitive(&CurvatureSpec::Zero, params, 0.0).unwrap()
        };
        let op = assemble_regular(&model, params, mesh, &BoundaryConditions::dirichlet()).unwrap();
        eigen_lowest(&op, 4).unwrap()
    }

    #[test]
    fn double_well_pairs_merge_into_one_level() {
        let params = PhysicalParams::default();
        let mesh = Mesh::staggered(-5.0, 5.0, 1000).unwrap();
        let cols: Vec<Vec<f64>> = [50.0, 200.0, 1000.0, 5000.0]
            .iter()
            .map(|&b| double_well(b, &mesh, &params).eigenvalues)
            .collect();
        let p = pair_tracks(&cols).unwrap();
        assert_eq!(p.groups.len(), 2, "{cols:?}");
        assert!(p.groups.iter().all(|g| g.len() == 2));
        // splitting shrinks along the way
        let split: Vec<f64> = cols.iter().map(|c| c[1] - c[0]).collect();
        assert!(split.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn overlaps_of_box_states() {
        let params = PhysicalParams::default();
        let mesh = Mesh::staggered(-5.0, 5.0, 400).unwrap();
        let s = double_well(0.0, &mesh, &params);
        assert!((eigenspace_overlap(&s, &s, &[0], &[0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(eigenspace_overlap(&s, &s, &[0], &[1]).unwrap() < 1e-12);
        assert!((eigenspace_overlap(&s, &s, &[0, 1], &[0, 1]).unwrap() - 1.0).abs() < 1e-12);
        let other = double_well(0.0, &Mesh::staggered(-5.0, 5.0, 402).unwrap(), &params);
        assert!(matches!(
            eigenspace_overlap(&s, &other, &[0], &[0]),
            Err(Error::GridMismatch(_))
        ));
        let moved = resample_onto(&other, &s);
        assert!(eigenspace_overlap(&s, &moved, &[0], &[0]).unwrap() > 1.0 - 1e-4);
    }

    #[test]
    fn bounded_base_gives_flat_tracks() {
        let problem = Problem::new(
            CurvatureSpec::constant(0.2).unwrap(),
            PhysicalParams::default(),
            BoundaryConditions::dirichlet(),
            3,
            300,
        );
        let r = sweep(&problem, &geometric(5)).unwrap();
        assert_eq!(r.tracks.len(), 3);
        for t in &r.tracks {
            assert!(t.values.iter().all(|&v| v == t.values[0]));
            assert_eq!(t.limit, t.values[0]);
        }
        assert!(r.overlaps.iter().flatten().all(|&o| (o - 1.0).abs() < 1e-10));
    }

    #[test]
    fn sweep_rejects_short_sequences() {
        let problem = Problem::new(
            CurvatureSpec::Zero,
            PhysicalParams::default(),
            BoundaryConditions::dirichlet(),
            1,
            100,
        );
        assert!(sweep(&problem, &[1.0, 0.5, 0.25]).is_err());
    }

    #[test]
    fn angle_scan_at_straight_angle_is_the_box() {
        let template = Problem::new(
            CurvatureSpec::Zero,
            PhysicalParams::default(),
            BoundaryConditions::dirichlet(),
            1,
            2000,
        );
        let pts = angle_scan(&template, 0.5, &[PI, 3.0 * PI / 4.0], &geometric(6));
        let box_e = PI * PI * PhysicalParams::default().kinetic() / 100.0;
        assert!((pts[0].e0.unwrap() - box_e).abs() < 1e-3);
        assert!(pts[1].e0.unwrap() < box_e);
    }

    #[test]
    fn weak_form_family_converges_to_direct_solution() {
        // operators built from the regularized primitive itself (not from the
        // point potential) approach the singular quasi-derivative solution
        let params = PhysicalParams::default();
        let k = power_law_amplitude(0.5, PI / 8.0, -5.0, 5.0).unwrap();
        let base = CurvatureSpec::power_law(k, 0.5).unwrap();
        let bc = BoundaryConditions::dirichlet();
        let n = 2000;
        let direct = solve_singular(&base, &params, &bc, n, 2).unwrap();
        let mesh = Mesh::nodal(-5.0, 5.0, n).unwrap();
        let mut gaps = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let spec = CurvatureSpec::power_law_regularized(k, 0.5, eps).unwrap();
            let u = potential_primitive(&spec, &params, 0.0).unwrap();
            let e = eigen_lowest(&assemble_quasi(&u, &params, &mesh, &bc).unwrap(), 2).unwrap();
            gaps.push((e.eigenvalues[0] - direct.eigenvalues[0]).abs());
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[3] < 0.05, "{gaps:?}");
        assert!(direct.eigenvalues[0] > 0.0);
    }
}
