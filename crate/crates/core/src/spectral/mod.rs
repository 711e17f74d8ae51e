//! Discrete self-adjoint operators for the regularized equation (point
//! potential, finite differences) and for the singular equation
//! (quasi-derivative weak form, linear elements), plus the tridiagonal
//! eigensolver both feed into.

mod assemble;
mod bc;
mod eigen;
mod mesh;

pub use assemble::{assemble_quasi, assemble_regular, Formulation, OperatorMeta, TridiagonalOperator};
pub use bc::{canonical_bc, check_self_adjoint, BcPreset, BoundaryConditions, SelfAdjointCheck, SideCondition};
pub use eigen::{eigen_lowest, group_degenerate, sturm_count, Spectrum, DEGENERACY_RTOL};
pub use mesh::{Mesh, NodeRule};
