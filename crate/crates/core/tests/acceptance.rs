//! Acceptance gate. Each test prints one `[PASS]`/`[FAIL]` line (written
//! straight to stderr so it shows up under the default capture) and then
//! asserts. Tolerances are pinned below.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use kinkwire::convergence::{
    default_epsilons, extrapolate_track, fit_convergence_constant, solve_singular, sweep, Problem, SweepResult,
};
use kinkwire::geometry::{
    default_pose, power_law_amplitude, reconstruct_trace, trace_distance, trace_distance_bound, CurvatureSpec,
    PhysicalParams,
};
use kinkwire::regularization::{
    assess_admissibility, defect_plateau, geometric_potential, l2_primitive_error, perturb_with_bump, regularize,
    RegularizationFamily, Verdict,
};
use kinkwire::spectral::{assemble_regular, eigen_lowest, sturm_count, BoundaryConditions, Mesh};
use kinkwire::validate::run_oracles;
use rand::{Rng, SeedableRng};

const TARGET_E0: f64 = -4.59;
const TARGET_E0_TOL: f64 = 0.10;
const RUNTIME_BUDGET: Duration = Duration::from_secs(120);
const BOX_E0: f64 = 3.76030;
const CROSS_FLOOR: f64 = 0.05;
const PLATEAU_RTOL: f64 = 0.05;
const RATE_FIT_RTOL: f64 = 0.20;
const ORTHONORMAL_TOL: f64 = 1e-8;
const RICHARDSON_RATIO: (f64, f64) = (3.2, 4.8);
const N_CELLS: usize = 8000;
const K: usize = 4;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("[{}] criterion {id:>2}: {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn params() -> PhysicalParams {
    PhysicalParams::default()
}

fn base(theta: f64) -> CurvatureSpec {
    let k = power_law_amplitude(0.5, theta, -5.0, 5.0).unwrap();
    if k == 0.0 {
        CurvatureSpec::Zero
    } else {
        CurvatureSpec::power_law(k, 0.5).unwrap()
    }
}

fn problem(n_cells: usize) -> Problem {
    Problem::new(base(PI / 8.0), params(), BoundaryConditions::dirichlet(), K, n_cells)
}

/// The default sweep, and how long it took.
fn default_sweep() -> &'static (SweepResult, Duration) {
    static CELL: OnceLock<(SweepResult, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let r = sweep(&problem(N_CELLS), &default_epsilons()).unwrap();
        (r, t.elapsed())
    })
}

#[test]
fn c01_extrapolated_ground_energy() {
    let (r, elapsed) = default_sweep();
    let eps_min = *r.epsilons.last().unwrap();
    let g = r.ground();
    let pass = (g.limit - TARGET_E0).abs() <= TARGET_E0_TOL && eps_min <= 1e-4 && *elapsed < RUNTIME_BUDGET;
    report(
        1,
        "extrapolated ground energy",
        pass,
        &format!(
            "E0 = {:.4} +/- {:.4} meV (target {TARGET_E0} +/- {TARGET_E0_TOL}), eps_min = {eps_min:.3e}, n = {N_CELLS}, {:.2?}",
            g.limit, g.uncertainty, elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn c02_only_ground_state_negative() {
    let (r, _) = default_sweep();
    let limits: Vec<f64> = r.tracks.iter().map(|t| t.limit).collect();
    let pass = limits.len() == 4 && limits[0] < 0.0 && limits[1..].iter().all(|&e| e > 0.0);
    report(2, "sign pattern of four lowest limits", pass, &format!("{limits:.4?}"));
    assert!(pass);
}

#[test]
fn c03_angle_scan_monotone_with_box_endpoint() {
    let eps = default_epsilons();
    let ground = |theta: f64, n: usize| {
        let p = Problem::new(base(theta), params(), BoundaryConditions::dirichlet(), 1, n);
        let r = sweep(&p, &eps).unwrap();
        extrapolate_track(&r.epsilons, &r.ground().values).unwrap().limit
    };
    let thetas: Vec<f64> = (1..=15).map(|k| k as f64 * PI / 16.0).collect();
    let e0: Vec<f64> = thetas.iter().map(|&t| ground(t, N_CELLS)).collect();
    let increasing = e0.windows(2).all(|w| w[1] > w[0]);
    let sign_change = e0[0] < 0.0 && *e0.last().unwrap() > 0.0;
    // θ = π: straight wire; O(h²) from the h / h/2 pair
    let straight = ground(PI, N_CELLS);
    let coarse = ground(PI, N_CELLS / 2);
    let richardson = (coarse - straight).abs() / 3.0;
    let exact = PI * PI * params().kinetic() / 100.0;
    let box_ok = (straight - exact).abs() <= 2.0 * richardson && (straight - BOX_E0).abs() < 5e-6;
    let pass = increasing && sign_change && box_ok;
    report(
        3,
        "ground energy against opening angle",
        pass,
        &format!(
            "increasing = {increasing}, sign change = {sign_change} ({:.3} .. {:.3} meV), E0(pi) = {straight:.7} (box {exact:.7}, 2*O(h^2) = {:.1e})",
            e0[0],
            e0[14],
            2.0 * richardson
        ),
    );
    assert!(pass);
}

#[test]
fn c04_direct_solve_matches_extrapolation() {
    let (fine, _) = default_sweep();
    let coarse = sweep(&problem(N_CELLS / 2), &default_epsilons()).unwrap();
    let direct = solve_singular(&base(PI / 8.0), &params(), &BoundaryConditions::dirichlet(), N_CELLS, K).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, track) in fine.tracks.iter().enumerate() {
        let richardson = (track.limit - coarse.tracks[n].limit).abs() / 3.0;
        let tol = CROSS_FLOOR.max(3.0 * richardson);
        let gap = (direct.eigenvalues[n] - track.limit).abs();
        pass &= gap <= tol;
        parts.push(format!(
            "n={n}: direct {:.4} vs limit {:.4} (gap {gap:.3}, tol {tol:.3})",
            direct.eigenvalues[n], track.limit
        ));
    }
    report(4, "direct singular solve vs extrapolated limits", pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn c05_oracle_suite() {
    let checks = run_oracles().unwrap();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let pass = failed.is_empty();
    report(
        5,
        "closed-form oracles",
        pass,
        &format!("{} checks, failed: {failed:?}", checks.len()),
    );
    assert!(pass);
}

#[test]
fn c06_admissible_and_defective_families() {
    let p = params();
    let eps: Vec<f64> = (0..=8).map(|i| 10f64.powi(-i)).collect();
    let family = RegularizationFamily::new(base(PI / 8.0), eps).unwrap();
    let good = assess_admissibility(&family, &p, &Default::default()).unwrap();
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let good_ok = good.verdict == Verdict::Admissible && decreasing(&good.l1_errors) && decreasing(&good.l2_errors);

    let height = 0.5;
    let bumped = perturb_with_bump(&family, height, 0.0, &p).unwrap();
    let bad = assess_admissibility(&bumped, &p, &Default::default()).unwrap();
    let plateau = defect_plateau(&bumped.defect.unwrap(), &p);
    let last = *bad.l2_errors.last().unwrap();
    let bad_ok = bad.verdict == Verdict::PreAdmissibleOnly && (last - plateau).abs() <= PLATEAU_RTOL * plateau;

    // spectra: bump widths must stay resolved by the mesh (ε ≥ 3h)
    let n = 16000;
    let sweep_eps: Vec<f64> = (0..=8).map(|i| 0.5f64.powi(i)).collect();
    let mut plain = problem(n);
    plain.k = 1;
    let mut defective = plain.clone();
    defective.defect = bumped.defect;
    let a = sweep(&plain, &sweep_eps).unwrap();
    let b = sweep(&defective, &sweep_eps).unwrap();
    let (ga, gb) = (a.ground(), b.ground());
    let gap = (ga.limit - gb.limit).abs();
    let spectra_ok = gap > ga.uncertainty + gb.uncertainty;
    let pass = good_ok && bad_ok && spectra_ok;
    report(
        6,
        "admissible vs bumped family",
        pass,
        &format!(
            "plain: {:?}; bumped: {:?}, L2 tail {last:.4} vs plateau {plateau:.4}; ground limits {:.3} vs {:.3} (gap {gap:.3} > {:.3})",
            good.verdict,
            bad.verdict,
            ga.limit,
            gb.limit,
            ga.uncertainty + gb.uncertainty
        ),
    );
    assert!(pass);
}

#[test]
fn c07_trace_distance_bound() {
    let p = params();
    let limit_spec = base(PI / 8.0);
    let pose = default_pose(&limit_spec, &p).unwrap();
    let limit = reconstruct_trace(&limit_spec, &p, 2000, pose).unwrap();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for eps in default_epsilons() {
        let spec = regularize(&limit_spec, eps).unwrap();
        let t = reconstruct_trace(&spec, &p, 2000, pose).unwrap();
        let d = trace_distance(&t, &limit).unwrap();
        let bound = trace_distance_bound(&spec, &p).unwrap();
        pass &= d < bound;
        worst = worst.max(d / bound);
    }
    report(
        7,
        "trace distance under the Gronwall bound",
        pass,
        &format!("max distance/bound over the sweep = {worst:.3e}"),
    );
    assert!(pass);
}

#[test]
fn c08_eigenvalue_rate_linear_in_primitive_error() {
    let (r, _) = default_sweep();
    let g = r.ground();
    let family = RegularizationFamily::new(base(PI / 8.0), r.epsilons.clone()).unwrap();
    let n = r.epsilons.len();
    let idx: Vec<usize> = (n - 5..n).collect();
    let dev: Vec<f64> = idx.iter().map(|&i| (g.values[i] - g.limit).abs()).collect();
    let err: Vec<f64> = idx.iter().map(|&i| l2_primitive_error(&family, i, &params()).unwrap()).collect();
    let fit = fit_convergence_constant(&dev, &err).unwrap();
    let pass = fit.relative_residual < RATE_FIT_RTOL;
    report(
        8,
        "ground deviation linear in primitive error",
        pass,
        &format!("C_hat = {:.3}, relative residual = {:.3}", fit.c_hat, fit.relative_residual),
    );
    assert!(pass);
}

#[test]
fn c09_ground_density_peak() {
    let (r, _) = default_sweep();
    let mut peaks = Vec::new();
    let mut curvatures = Vec::new();
    let mut at_centre = true;
    for spec in r.spectra.iter().filter(|s| s.epsilon.unwrap() <= 0.1) {
        let rho = spec.density(0);
        let argmax = (0..rho.len()).max_by(|&i, &j| rho[i].total_cmp(&rho[j])).unwrap();
        // the two nodes at ±h/2 are mirror images; either counts as nearest
        let mut nearest: Vec<usize> = (0..rho.len()).collect();
        nearest.sort_by(|&i, &j| spec.s[i].abs().total_cmp(&spec.s[j].abs()));
        at_centre &= nearest[..2].contains(&argmax);
        peaks.push(rho[argmax]);
        let h = spec.h;
        let j = argmax.clamp(1, rho.len() - 2);
        curvatures.push(((rho[j - 1] - 2.0 * rho[j] + rho[j + 1]) / (h * h)).abs());
    }
    let peak_up = peaks.windows(2).all(|w| w[1] > w[0]);
    let curv_up = curvatures.windows(2).all(|w| w[1] > w[0]);
    let pass = at_centre && peak_up && curv_up;
    report(
        9,
        "ground density peak at the kink",
        pass,
        &format!(
            "peak at centre = {at_centre}, peak {:.4} -> {:.4}, |second difference| {:.3} -> {:.3}",
            peaks[0],
            peaks[peaks.len() - 1],
            curvatures[0],
            curvatures[curvatures.len() - 1]
        ),
    );
    assert!(pass);
}

fn run_cli(dir: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_kinkwire"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success());
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn c10_property_suites() {
    // orthonormality of the smallest-ε spectrum
    let (r, _) = default_sweep();
    let spec = r.spectra.last().unwrap();
    let mut ortho: f64 = 0.0;
    for i in 0..spec.len() {
        for j in 0..spec.len() {
            let want = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((spec.inner(i, j) - want).abs());
        }
    }
    let ortho_ok = ortho < ORTHONORMAL_TOL;

    // Sturm counts against the full bisection spectrum
    let p = params();
    let mesh = Mesh::staggered(-5.0, 5.0, 300).unwrap();
    let member = regularize(&base(PI / 8.0), 0.01).unwrap();
    let pot = geometric_potential(&member, &p, &mesh).unwrap();
    let op = assemble_regular(&pot, &p, &mesh, &BoundaryConditions::dirichlet()).unwrap();
    let all = eigen_lowest(&op, op.dim()).unwrap().eigenvalues;
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let (lo, hi) = op.gershgorin();
    let sturm_ok = (0..100).all(|_| {
        let sigma = rng.gen_range(lo..hi);
        sturm_count(&op, sigma) == all.iter().filter(|&&x| x < sigma).count()
    });

    // second-order convergence on a smooth potential
    let smooth = CurvatureSpec::tabulated(&[(-5.0, 0.3), (5.0, 0.9)]).unwrap();
    let e = |n: usize| {
        let m = Mesh::staggered(-5.0, 5.0, n).unwrap();
        let pot = geometric_potential(&smooth, &p, &m).unwrap();
        eigen_lowest(&assemble_regular(&pot, &p, &m, &BoundaryConditions::dirichlet()).unwrap(), 1)
            .unwrap()
            .eigenvalues[0]
    };
    let (e1, e2, e4) = (e(200), e(400), e(800));
    let ratio = (e1 - e2) / (e2 - e4);
    let ratio_ok = ratio > RICHARDSON_RATIO.0 && ratio < RICHARDSON_RATIO.1;

    // byte-identical CLI output; same directory, since the resolved config records it
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = (0..2)
        .map(|_| {
            for cmd in ["trace", "spectrum", "sweep", "anglescan", "admissibility"] {
                run_cli(dir.path(), &[cmd]);
            }
            let files = dir_bytes(dir.path());
            for (name, _) in &files {
                std::fs::remove_file(dir.path().join(name)).unwrap();
            }
            files
        })
        .collect();
    let deterministic = runs[0] == runs[1];

    let pass = ortho_ok && sturm_ok && ratio_ok && deterministic;
    report(
        10,
        "property suites",
        pass,
        &format!(
            "orthonormality {ortho:.1e}, sturm counts {sturm_ok}, Richardson ratio {ratio:.3}, deterministic CLI {deterministic} ({} files)",
            runs[0].len()
        ),
    );
    assert!(pass);
}
