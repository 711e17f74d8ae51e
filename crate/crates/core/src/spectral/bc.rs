//! Boundary conditions as coefficient matrices of the boundary linear forms
//! U_j[φ] = A_j1 φ(a) + A_j2 φ'(a) + B_j1 φ(b) + B_j2 φ'(b), j = 1, 2.
//!
//! For the singular equation the derivative is read as the quasi-derivative
//! φ^[1] = φ' − uφ; the matrices and the self-adjointness test are the same.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcPreset {
    Dirichlet,
    Neumann,
    /// ρ_a φ(a) + φ'(a) = 0 and ρ_b φ(b) + φ'(b) = 0.
    Robin { rho_a: f64, rho_b: f64 },
    General,
}

impl fmt::Display for BcPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BcPreset::Dirichlet => write!(f, "dirichlet"),
            BcPreset::Neumann => write!(f, "neumann"),
            BcPreset::Robin { rho_a, rho_b } => write!(f, "robin:{rho_a},{rho_b}"),
            BcPreset::General => write!(f, "general"),
        }
    }
}

impl FromStr for BcPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "dirichlet" => return Ok(BcPreset::Dirichlet),
            "neumann" => return Ok(BcPreset::Neumann),
            _ => {}
        }
        if let Some(rest) = lower.strip_prefix("robin:") {
            let mut parts = rest.split(',');
            let parse = |p: Option<&str>| -> Result<f64> {
                p.and_then(|x| x.trim().parse::<f64>().ok())
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::invalid(format!("bad robin coefficients in '{s}'")))
            };
            let rho_a = parse(parts.next())?;
            let rho_b = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::invalid(format!("bad robin coefficients in '{s}'")));
            }
            return Ok(BcPreset::Robin { rho_a, rho_b });
        }
        Err(Error::invalid(format!(
            "unknown boundary condition '{s}' (dirichlet | neumann | robin:<rho_a>,<rho_b>)"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub a: Mat2,
    pub b: Mat2,
    pub preset: BcPreset,
}

/// A real separated condition `value·φ + slope·φ' = 0` at one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideCondition {
    pub value: f64,
    pub slope: f64,
}

pub fn canonical_bc(preset: BcPreset) -> BoundaryConditions {
    let (a, b) = match preset {
        BcPreset::Dirichlet => ([[ONE, ZERO], [ZERO, ZERO]], [[ZERO, ZERO], [ONE, ZERO]]),
        // no canonical matrices; the caller fills them in
        BcPreset::General => ([[ZERO; 2]; 2], [[ZERO; 2]; 2]),
        BcPreset::Neumann => ([[ZERO, ONE], [ZERO, ZERO]], [[ZERO, ZERO], [ZERO, ONE]]),
        BcPreset::Robin { rho_a, rho_b } => (
            [[re(rho_a), ONE], [ZERO, ZERO]],
            [[ZERO, ZERO], [re(rho_b), ONE]],
        ),
    };
    BoundaryConditions { a, b, preset }
}

impl BoundaryConditions {
    pub fn general(a: Mat2, b: Mat2) -> Self {
        BoundaryConditions {
            a,
            b,
            preset: BcPreset::General,
        }
    }

    pub fn dirichlet() -> Self {
        canonical_bc(BcPreset::Dirichlet)
    }

    pub fn label(&self) -> String {
        self.preset.to_string()
    }

    /// Split into one real condition per endpoint, if the forms are separated.
    pub fn separated(&self) -> Option<(SideCondition, SideCondition)> {
        let is_zero = |r: &[Complex64; 2]| r.iter().all(|z| z.norm() == 0.0);
        let real = |r: &[Complex64; 2]| r.iter().all(|z| z.im == 0.0);
        let mut left = None;
        let mut right = None;
        for j in 0..2 {
            let (ra, rb) = (&self.a[j], &self.b[j]);
            match (is_zero(ra), is_zero(rb)) {
                (false, true) if real(ra) && left.is_none() => {
                    left = Some(SideCondition {
                        value: ra[0].re,
                        slope: ra[1].re,
                    })
                }
                (true, false) if real(rb) && right.is_none() => {
                    right = Some(SideCondition {
                        value: rb[0].re,
                        slope: rb[1].re,
                    })
                }
                _ => return None,
            }
        }
        Some((left?, right?))
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self.separated(), Some((l, r)) if l.slope == 0.0 && l.value != 0.0 && r.slope == 0.0 && r.value != 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfAdjointCheck {
    /// Frobenius norm of A E A† − B E B† after scaling (A|B) to unit norm.
    pub residual: f64,
    pub rank: usize,
    pub self_adjoint: bool,
}

const E: Mat2 = [
    [ZERO, Complex64::new(-1.0, 0.0)],
    [ONE, ZERO],
];

fn mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

fn dagger(x: &Mat2) -> Mat2 {
    [[x[0][0].conj(), x[1][0].conj()], [x[0][1].conj(), x[1][1].conj()]]
}

/// Rank of a 2×4 complex matrix by Gaussian elimination with full pivoting.
fn rank_2x4(rows: [[Complex64; 4]; 2], tol: f64) -> usize {
    let mut m = rows;
    let mut rank = 0;
    let mut used_cols = [false; 4];
    for r in 0..2 {
        // pivot: largest entry in the remaining rows / unused columns
        let mut best = (0.0, r, 0);
        for (i, row) in m.iter().enumerate().skip(r) {
            for (j, z) in row.iter().enumerate() {
                if !used_cols[j] && z.norm() > best.0 {
                    best = (z.norm(), i, j);
                }
            }
        }
        if best.0 <= tol {
            break;
        }
        m.swap(r, best.1);
        used_cols[best.2] = true;
        rank += 1;
        if r == 0 {
            let f = m[1][best.2] / m[0][best.2];
            let top = m[0];
            for (x, t) in m[1].iter_mut().zip(top) {
                *x -= f * t;
            }
        }
    }
    rank
}

/// A E A† = B E B† and rank(A|B) = 2, both checked to 1e-12 on (A|B)
/// scaled to unit Frobenius norm.
pub fn check_self_adjoint(bc: &BoundaryConditions) -> SelfAdjointCheck {
    let norm: f64 = bc
        .a
        .iter()
        .chain(bc.b.iter())
        .flat_map(|r| r.iter())
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return SelfAdjointCheck {
            residual: 0.0,
            rank: 0,
            self_adjoint: false,
        };
    }
    let scale = |m: &Mat2| -> Mat2 { [[m[0][0] / norm, m[0][1] / norm], [m[1][0] / norm, m[1][1] / norm]] };
    let (a, b) = (scale(&bc.a), scale(&bc.b));
    let lhs = mul(&mul(&a, &E), &dagger(&a));
    let rhs = mul(&mul(&b, &E), &dagger(&b));
    let residual = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (lhs[i][j] - rhs[i][j]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let rows = [
        [a[0][0], a[0][1], b[0][0], b[0][1]],
        [a[1][0], a[1][1], b[1][0], b[1][1]],
    ];
    let rank = rank_2x4(rows, 1e-12);
    SelfAdjointCheck {
        residual,
        rank,
        self_adjoint: residual < 1e-12 && rank == 2,
    }
}
