use serde::Serialize;

use super::assemble::{Formulation, TridiagonalOperator};
use super::mesh::NodeRule;
use crate::error::{Error, Result};

/// Relative gap below which two eigenvalues are treated as one level.
pub const DEGENERACY_RTOL: f64 = 1e-6;

const BISECTION_RTOL: f64 = 1e-12;
const MAX_INVERSE_ITERATIONS: usize = 50;

/// Lowest eigenpairs of a discrete operator together with the mesh they live on.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub s: Vec<f64>,
    pub h: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    /// ‖Tψ − λψ‖ in the discrete norm, one per pair.
    pub residuals: Vec<f64>,
    pub bc: String,
    pub epsilon: Option<f64>,
    pub formulation: Formulation,
    pub n_cells: usize,
    /// Whether the eigenfunctions vanish at the interval ends (nodal Dirichlet).
    #[serde(skip)]
    pub pinned_ends: Option<(f64, f64)>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Discrete inner product h·Σ ψ_i φ_i.
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        self.h * dot(&self.eigenfunctions[i], &self.eigenfunctions[j])
    }

    /// Linear interpolation of eigenfunction `i` at `x`. Outside the node range
    /// the function goes to zero at a pinned end and is held constant otherwise.
    pub fn sample(&self, i: usize, x: f64) -> f64 {
        let psi = &self.eigenfunctions[i];
        let s = &self.s;
        let n = s.len();
        if x <= s[0] {
            return match self.pinned_ends {
                Some((a, _)) if x > a => psi[0] * (x - a) / (s[0] - a),
                Some(_) => 0.0,
                None => psi[0],
            };
        }
        if x >= s[n - 1] {
            return match self.pinned_ends {
                Some((_, b)) if x < b => psi[n - 1] * (b - x) / (b - s[n - 1]),
                Some(_) => 0.0,
                None => psi[n - 1],
            };
        }
        let k = s.partition_point(|&t| t <= x).min(n - 1);
        let t = (x - s[k - 1]) / (s[k] - s[k - 1]);
        psi[k - 1] * (1.0 - t) + psi[k] * t
    }

    /// Eigenfunction `i` resampled onto `nodes`.
    pub fn resample(&self, i: usize, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.sample(i, x)).collect()
    }

    /// |ψ_i|² on the nodes.
    pub fn density(&self, i: usize) -> Vec<f64> {
        self.eigenfunctions[i].iter().map(|p| p * p).collect()
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Number of eigenvalues strictly below `sigma`, from the signs of the LDLᵀ
/// pivots of T − σI.
pub fn sturm_count(op: &TridiagonalOperator, sigma: f64) -> usize {
    let tiny = f64::EPSILON * op.norm_inf().max(f64::MIN_POSITIVE);
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..op.dim() {
        let coupling = if i == 0 { 0.0 } else { op.offdiag[i - 1] * op.offdiag[i - 1] / d };
        d = op.diag[i] - sigma - coupling;
        if d == 0.0 {
            d = -tiny;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
fn bisect(op: &TridiagonalOperator, index: usize, mut lo: f64, mut hi: f64) -> f64 {
    let floor = 4.0 * f64::EPSILON * op.norm_inf();
    loop {
        let mid = 0.5 * (lo + hi);
        let width = hi - lo;
        if width <= BISECTION_RTOL * lo.abs().max(hi.abs()) || width <= floor || mid <= lo || mid >= hi {
            return mid;
        }
        if sturm_count(op, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Solve (T − σI)x = b by Gaussian elimination with partial pivoting.
/// Zero pivots are nudged so the solve never breaks down.
fn shifted_solve(op: &TridiagonalOperator, sigma: f64, rhs: &[f64]) -> Vec<f64> {
    let n = op.dim();
    let tiny = f64::EPSILON * op.norm_inf().max(f64::MIN_POSITIVE);
    if n == 1 {
        let p = op.diag[0] - sigma;
        return vec![rhs[0] / if p == 0.0 { tiny } else { p }];
    }
    // row i after elimination: u0[i] x_i + u1[i] x_{i+1} + u2[i] x_{i+2}
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut b = rhs.to_vec();
    // pending row: (diag, super, super2 is zero) starting with row 0
    let mut cur = [op.diag[0] - sigma, op.offdiag[0], 0.0];
    for i in 0..n - 1 {
        let below = [
            op.offdiag[i],
            op.diag[i + 1] - sigma,
            if i + 2 < n { op.offdiag[i + 1] } else { 0.0 },
        ];
        let mut rb = b[i + 1];
        let (mut top, mut bot) = (cur, below);
        if below[0].abs() > cur[0].abs() {
            std::mem::swap(&mut top, &mut bot);
            std::mem::swap(&mut b[i], &mut rb);
        }
        if top[0] == 0.0 {
            top[0] = tiny;
        }
        let m = bot[0] / top[0];
        u0[i] = top[0];
        u1[i] = top[1];
        u2[i] = top[2];
        cur = [bot[1] - m * top[1], bot[2] - m * top[2], 0.0];
        b[i + 1] = rb - m * b[i];
    }
    u0[n - 1] = if cur[0] == 0.0 { tiny } else { cur[0] };
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = b[i];
        if i + 1 < n {
            v -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= u2[i] * x[i + 2];
        }
        x[i] = v / u0[i];
    }
    x
}

fn normalize_euclid(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

fn residual_norm(op: &TridiagonalOperator, lambda: f64, x: &[f64]) -> f64 {
    let tx = op.apply(x);
    tx.iter().zip(x).map(|(t, v)| (t - lambda * v).powi(2)).sum::<f64>().sqrt()
}

/// Deterministic start vector with components along every eigenvector.
fn start_vector(n: usize, index: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (0.7548776662 + 0.1 * index as f64)).sin())
        .collect()
}

/// The `k` lowest eigenpairs, ascending. Eigenvalues come from Sturm
/// bisection, eigenvectors from inverse iteration with re-orthogonalization.
/// Vectors are normalized to h·Σψ² = 1 with the first significant entry
/// positive.
pub fn eigen_lowest(op: &TridiagonalOperator, k: usize) -> Result<Spectrum> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    if op.diag.iter().chain(&op.offdiag).any(|v| !v.is_finite()) {
        return Err(Error::invalid("operator has non-finite entries"));
    }
    let (glo, ghi) = op.gershgorin();
    let pad = 1e-12 * (glo.abs().max(ghi.abs())).max(1.0);
    let (glo, ghi) = (glo - pad, ghi + pad);
    let eigenvalues: Vec<f64> = (0..k).map(|i| bisect(op, i, glo, ghi)).collect();

    let norm = op.norm_inf().max(f64::MIN_POSITIVE);
    let tol = 1e-10 * norm;
    let h = op.mesh.h();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (index, &lambda) in eigenvalues.iter().enumerate() {
        // repeated shifts would return the same direction; nudge them apart
        let repeats = eigenvalues[..index]
            .iter()
            .filter(|&&mu| (mu - lambda).abs() <= 1e3 * f64::EPSILON * norm)
            .count();
        let sigma = lambda + repeats as f64 * 10.0 * f64::EPSILON * norm;
        let mut x = start_vector(n, index);
        normalize_euclid(&mut x);
        let mut converged = None;
        for iteration in 1..=MAX_INVERSE_ITERATIONS {
            x = shifted_solve(op, sigma, &x);
            for _ in 0..2 {
                for v in &vectors {
                    let p = dot(&x, v);
                    x.iter_mut().zip(v).for_each(|(a, b)| *a -= p * b);
                }
            }
            if normalize_euclid(&mut x) == 0.0 || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonConvergence { index, iterations: iteration });
            }
            let r = residual_norm(op, lambda, &x);
            if r <= tol {
                converged = Some(r);
                break;
            }
        }
        let r = converged.ok_or(Error::NonConvergence {
            index,
            iterations: MAX_INVERSE_ITERATIONS,
        })?;
        residuals.push(r);
        vectors.push(x);
    }

    let scale = 1.0 / h.sqrt();
    for v in &mut vectors {
        v.iter_mut().for_each(|a| *a *= scale);
        if let Some(first) = v.iter().find(|a| a.abs() > 1e-8) {
            if *first < 0.0 {
                v.iter_mut().for_each(|a| *a = -*a);
            }
        }
    }
    let pinned_ends = (op.mesh.rule == NodeRule::EndpointInclusive).then_some((op.mesh.a, op.mesh.b));
    Ok(Spectrum {
        s: op.nodes.clone(),
        h,
        eigenvalues,
        eigenfunctions: vectors,
        residuals,
        bc: op.meta.bc.clone(),
        epsilon: op.meta.epsilon,
        formulation: op.meta.formulation,
        n_cells: op.mesh.n_cells,
        pinned_ends,
    })
}

/// Consecutive runs of eigenvalues closer than DEGENERACY_RTOL·(1 + |λ|).
pub fn group_degenerate(eigenvalues: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (lambda - eigenvalues[*g.last().unwrap()]).abs() <= DEGENERACY_RTOL * (1.0 + lambda.abs()) => {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::mesh::Mesh;
    use std::f64::consts::PI;

    fn laplacian(n_cells: usize, c: f64) -> TridiagonalOperator {
        let mut op = TridiagonalOperator::from_parts(vec![0.0; n_cells - 1], vec![0.0; n_cells - 2]).unwrap();
        op.mesh = Mesh::nodal(0.0, 1.0, n_cells).unwrap();
        op.nodes = op.mesh.unknown_nodes();
        let h = op.mesh.h();
        op.diag.iter_mut().for_each(|d| *d = 2.0 * c / (h * h));
        op.offdiag.iter_mut().for_each(|e| *e = -c / (h * h));
        op
    }

    #[test]
    fn discrete_laplacian_matches_closed_form() {
        let n_cells = 400;
        let op = laplacian(n_cells, 1.0);
        let spec = eigen_lowest(&op, 5).unwrap();
        let h = 1.0 / n_cells as f64;
        for (j, &lambda) in spec.eigenvalues.iter().enumerate() {
            let exact = 2.0 / (h * h) * (1.0 - ((j + 1) as f64 * PI * h).cos());
            // absolute accuracy is limited by ε·‖T‖
            assert!((lambda - exact).abs() <= 1e-9 * exact, "{lambda} vs {exact}");
        }
        // ground state ≈ √2 sin(πs), positive
        let mid = spec.eigenfunctions[0][n_cells / 2 - 1];
        assert!((mid - 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn eigenvectors_are_orthonormal_in_discrete_norm() {
        let op = laplacian(300, 2.5);
        let spec = eigen_lowest(&op, 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((spec.inner(i, j) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sturm_count_brackets_eigenvalues() {
        let op = laplacian(50, 1.0);
        let spec = eigen_lowest(&op, 3).unwrap();
        for (j, &lambda) in spec.eigenvalues.iter().enumerate() {
            assert_eq!(sturm_count(&op, lambda * (1.0 - 1e-9)), j);
            assert_eq!(sturm_count(&op, lambda * (1.0 + 1e-9)), j + 1);
        }
    }

    #[test]
    fn degenerate_pair_gets_two_orthogonal_vectors() {
        // two decoupled identical blocks
        let mut diag = vec![2.0; 20];
        let mut off = vec![-1.0; 19];
        off[9] = 0.0;
        diag[0] = 2.0;
        let op = TridiagonalOperator::from_parts(std::mem::take(&mut diag), std::mem::take(&mut off)).unwrap();
        let spec = eigen_lowest(&op, 2).unwrap();
        assert!((spec.eigenvalues[0] - spec.eigenvalues[1]).abs() < 1e-12);
        assert!(spec.inner(0, 1).abs() < 1e-10);
        assert_eq!(group_degenerate(&spec.eigenvalues), vec![vec![0, 1]]);
    }

    #[test]
    fn grouping_separates_distinct_levels() {
        assert_eq!(group_degenerate(&[1.0, 1.0 + 1e-9, 2.0]), vec![vec![0, 1], vec![2]]);
        assert_eq!(group_degenerate(&[]), Vec::<Vec<usize>>::new());
    }

    #[test]
    fn rejects_bad_requests() {
        let op = laplacian(10, 1.0);
        assert!(eigen_lowest(&op, 0).is_err());
        assert!(eigen_lowest(&op, 10).is_err());
    }

    #[test]
    fn sampling_interpolates_and_pins_ends() {
        let op = laplacian(100, 1.0);
        let spec = eigen_lowest(&op, 1).unwrap();
        assert_eq!(spec.sample(0, 0.0), 0.0);
        assert_eq!(spec.sample(0, 1.0), 0.0);
        let x = 0.3333;
        assert!((spec.sample(0, x) - 2f64.sqrt() * (PI * x).sin()).abs() < 1e-3);
    }

    #[test]
    fn three_by_three_closed_form() {
        let op = TridiagonalOperator::from_parts(vec![2.0; 3], vec![-1.0; 2]).unwrap();
        let spec = eigen_lowest(&op, 3).unwrap();
        let exact = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (a, b) in spec.eigenvalues.iter().zip(exact) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn full_spectrum_reproduces_trace() {
        let diag: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let off: Vec<f64> = (0..39).map(|i| 0.5 + (i as f64 * 1.3).cos()).collect();
        let trace: f64 = diag.iter().sum();
        let op = TridiagonalOperator::from_parts(diag, off).unwrap();
        let spec = eigen_lowest(&op, 40).unwrap();
        let sum: f64 = spec.eigenvalues.iter().sum();
        assert!((sum - trace).abs() < 1e-9 * trace.abs().max(1.0));
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}
