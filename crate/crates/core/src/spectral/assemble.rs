use std::fmt;

use serde::{Deserialize, Serialize};

use super::bc::{BoundaryConditions, SideCondition};
use super::mesh::{Mesh, NodeRule};
use crate::error::{Error, Result};
use crate::geometry::PhysicalParams;
use crate::quadrature::gl4_point;
use crate::regularization::PotentialModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Regular,
    #[serde(alias = "quasi")]
    QuasiDerivative,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Regular => "regular",
            Formulation::QuasiDerivative => "quasi",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorMeta {
    pub bc: String,
    pub epsilon: Option<f64>,
    pub formulation: Formulation,
}

/// Symmetric tridiagonal matrix in meV acting on the unknowns of `mesh`.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub mesh: Mesh,
    pub nodes: Vec<f64>,
    pub meta: OperatorMeta,
}

impl TridiagonalOperator {
    pub fn from_parts(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || offdiag.len() + 1 != n {
            return Err(Error::invalid("tridiagonal operator needs n diagonal and n-1 off-diagonal entries"));
        }
        let mesh = Mesh::staggered(0.0, n as f64, n.max(2))?;
        let nodes = (0..n).map(|j| j as f64 + 0.5).collect();
        Ok(TridiagonalOperator {
            diag,
            offdiag,
            mesh,
            nodes,
            meta: OperatorMeta {
                bc: "none".into(),
                epsilon: None,
                formulation: Formulation::Regular,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
                let right = self.offdiag.get(i).map_or(0.0, |e| e.abs());
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = self.offdiag.get(i).map_or(0.0, |e| e.abs());
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Ghost-node factor g with φ_ghost = g·φ_first for a condition imposed half
/// a cell beyond the first staggered node. `outward` is +1 at b, −1 at a.
fn ghost_factor(side: SideCondition, h: f64, outward: f64) -> Result<f64> {
    // value·(φ_g + φ_0)/2 + slope·outward·(φ_g − φ_0)/h = 0
    let num = 0.5 * side.value - outward * side.slope / h;
    let den = 0.5 * side.value + outward * side.slope / h;
    if den.abs() < 1e-300 {
        return Err(Error::UnsupportedBoundary(format!(
            "Robin coefficient {} resonates with mesh spacing {h}",
            side.value / side.slope
        )));
    }
    Ok(-num / den)
}

fn check_nodes(potential: &PotentialModel, mesh: &Mesh) -> Result<()> {
    let nodes = mesh.unknown_nodes();
    if potential.nodes.len() != nodes.len() || potential.v_samples.len() != nodes.len() {
        return Err(Error::GridMismatch(format!(
            "potential has {} samples, mesh has {} unknowns",
            potential.v_samples.len(),
            nodes.len()
        )));
    }
    let h = mesh.h();
    if potential
        .nodes
        .iter()
        .zip(&nodes)
        .any(|(p, q)| (p - q).abs() > 1e-9 * h)
    {
        return Err(Error::GridMismatch("potential nodes differ from mesh nodes".into()));
    }
    Ok(())
}

/// Central differences for −(ħ²/2m)ψ'' + Vψ with point samples of V.
///
/// On the staggered mesh every separated real condition is folded in by
/// ghost-node elimination; the endpoint-inclusive mesh takes Dirichlet only.
pub fn assemble_regular(
    potential: &PotentialModel,
    params: &PhysicalParams,
    mesh: &Mesh,
    bc: &BoundaryConditions,
) -> Result<TridiagonalOperator> {
    check_nodes(potential, mesh)?;
    if potential.v_samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("regular assembly needs a bounded potential on every node"));
    }
    let (left, right) = bc
        .separated()
        .ok_or_else(|| Error::UnsupportedBoundary(format!("{} is not a separated real condition", bc.label())))?;
    let c = params.kinetic();
    let h = mesh.h();
    let k = c / (h * h);
    let mut diag: Vec<f64> = potential.v_samples.iter().map(|v| 2.0 * k + v).collect();
    let n = diag.len();
    match mesh.rule {
        NodeRule::Staggered => {
            diag[0] -= k * ghost_factor(left, h, -1.0)?;
            diag[n - 1] -= k * ghost_factor(right, h, 1.0)?;
        }
        NodeRule::EndpointInclusive => {
            if !bc.is_dirichlet() {
                return Err(Error::UnsupportedBoundary(format!(
                    "{} on an endpoint-inclusive mesh (Dirichlet only)",
                    bc.label()
                )));
            }
        }
    }
    Ok(TridiagonalOperator {
        diag,
        offdiag: vec![-k; n - 1],
        mesh: *mesh,
        nodes: potential.nodes.clone(),
        meta: OperatorMeta {
            bc: bc.label(),
            epsilon: potential.epsilon,
            formulation: Formulation::Regular,
        },
    })
}

/// Linear-element weak form of the quasi-derivative operator,
/// (ħ²/2m)∫ψ'φ' − ∫U(ψ'φ + ψφ'), with lumped mass h and a 4-point Gauss rule
/// per cell for U. Only the primitive enters, never the pointwise potential.
pub fn assemble_quasi(
    primitive: &PotentialModel,
    params: &PhysicalParams,
    mesh: &Mesh,
    bc: &BoundaryConditions,
) -> Result<TridiagonalOperator> {
    if mesh.rule != NodeRule::EndpointInclusive {
        return Err(Error::invalid("quasi-derivative assembly needs an endpoint-inclusive mesh"));
    }
    if !bc.is_dirichlet() {
        return Err(Error::UnsupportedBoundary(format!(
            "{} in the quasi-derivative formulation (Dirichlet only)",
            bc.label()
        )));
    }
    let u = &primitive.primitive;
    if u.is_singular() && mesh.a < 0.0 && mesh.b > 0.0 && !mesh.is_cell_edge(0.0) {
        return Err(Error::GridMismatch("singular point s = 0 must be a cell boundary".into()));
    }
    let c = params.kinetic();
    let h = mesh.h();
    let edges = mesh.cell_edges();
    let n = mesh.n_cells;
    let mut kd = vec![0.0; n + 1];
    let mut ko = vec![0.0; n];
    for e in 0..n {
        let (lo, hi) = (edges[e], edges[e + 1]);
        let (mut moment_l, mut moment_r) = (0.0, 0.0);
        for i in 0..4 {
            let (s, w) = gl4_point(lo, hi, i);
            let t = (s - lo) / (hi - lo);
            let us = u.eval(s);
            moment_l += w * us * (1.0 - t);
            moment_r += w * us * t;
        }
        kd[e] += c / h + 2.0 * moment_l / h;
        kd[e + 1] += c / h - 2.0 * moment_r / h;
        ko[e] += -c / h + (moment_r - moment_l) / h;
    }
    let diag: Vec<f64> = kd[1..n].iter().map(|x| x / h).collect();
    let offdiag: Vec<f64> = ko[1..n - 1].iter().map(|x| x / h).collect();
    Ok(TridiagonalOperator {
        diag,
        offdiag,
        mesh: *mesh,
        nodes: mesh.unknown_nodes(),
        meta: OperatorMeta {
            bc: bc.label(),
            epsilon: primitive.epsilon,
            formulation: Formulation::QuasiDerivative,
        },
    })
}
