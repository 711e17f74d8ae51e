use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRule {
    /// s_j = a + (j + ½)h, j = 0..n_cells; no node on the boundary.
    Staggered,
    /// s_j = a + j h, j = 0..=n_cells; unknowns live on the interior nodes.
    EndpointInclusive,
}

/// Uniform mesh on (a, b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
    pub rule: NodeRule,
}

impl Mesh {
    pub fn new(a: f64, b: f64, n_cells: usize, rule: NodeRule) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::invalid(format!("n_cells = {n_cells}, need at least 2")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::invalid(format!("mesh interval ({a}, {b}) must satisfy a < b")));
        }
        Ok(Mesh { a, b, n_cells, rule })
    }

    pub fn staggered(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        Self::new(a, b, n_cells, NodeRule::Staggered)
    }

    pub fn nodal(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        Self::new(a, b, n_cells, NodeRule::EndpointInclusive)
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n_cells as f64
    }

    /// Coordinates carrying unknowns: all staggered nodes, or the interior
    /// nodes of an endpoint-inclusive mesh.
    pub fn unknown_nodes(&self) -> Vec<f64> {
        let h = self.h();
        match self.rule {
            NodeRule::Staggered => (0..self.n_cells).map(|j| self.a + (j as f64 + 0.5) * h).collect(),
            NodeRule::EndpointInclusive => (1..self.n_cells).map(|j| self.a + j as f64 * h).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self.rule {
            NodeRule::Staggered => self.n_cells,
            NodeRule::EndpointInclusive => self.n_cells - 1,
        }
    }

    /// Cell boundaries a = x_0 < … < x_n = b.
    pub fn cell_edges(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.n_cells)
            .map(|j| if j == self.n_cells { self.b } else { self.a + j as f64 * h })
            .collect()
    }

    /// Whether `s` coincides with a cell boundary (to rounding).
    pub fn is_cell_edge(&self, s: f64) -> bool {
        let x = (s - self.a) / self.h();
        (x - x.round()).abs() < 1e-9 && x.round() >= 0.0 && x.round() <= self.n_cells as f64
    }

    pub fn same_as(&self, other: &Mesh) -> bool {
        self.rule == other.rule
            && self.n_cells == other.n_cells
            && (self.a - other.a).abs() <= 1e-12 * (1.0 + self.a.abs())
            && (self.b - other.b).abs() <= 1e-12 * (1.0 + self.b.abs())
    }
}
