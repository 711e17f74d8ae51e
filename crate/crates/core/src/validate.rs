//! Built-in oracle suite: problems with closed-form answers that the solver
//! must reproduce.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{power_law_amplitude, reconstruct_trace, total_turn, CurvatureSpec, PhysicalParams, Pose};
use crate::regularization::geometric_potential;
use crate::spectral::{assemble_regular, eigen_lowest, BoundaryConditions, Mesh, TridiagonalOperator};

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    fn abs(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        OracleCheck {
            name: name.into(),
            passed: (value - expected).abs() <= tolerance,
            value,
            expected,
            tolerance,
        }
    }
}

/// Box levels E_n = n²π²(ħ²/2m)/L², agreement to 4 significant figures.
pub fn box_spectrum(n_cells: usize) -> Result<Vec<OracleCheck>> {
    let params = PhysicalParams::default();
    let mesh = Mesh::staggered(params.a, params.b, n_cells)?;
    let pot = geometric_potential(&CurvatureSpec::Zero, &params, &mesh)?;
    let op = assemble_regular(&pot, &params, &mesh, &BoundaryConditions::dirichlet())?;
    let spec = eigen_lowest(&op, 4)?;
    Ok(spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let n = (i + 1) as f64;
            let exact = n * n * PI * PI * params.kinetic() / params.length().powi(2);
            // 4 significant figures: half a unit in the 4th digit
            let tol = 0.5 * 10f64.powf(exact.abs().log10().floor() - 3.0);
            OracleCheck::abs(format!("box level {}", i + 1), e, exact, tol)
        })
        .collect())
}

/// Largest |‖x − centre‖ − R| over a reconstructed circle of radius R.
pub fn circle_deviation(radius: f64, n_points: usize) -> Result<f64> {
    let params = PhysicalParams::new(0.0, 2.0 * PI * radius * 0.9, 1.0)?;
    let spec = CurvatureSpec::constant(1.0 / radius)?;
    let trace = reconstruct_trace(&spec, &params, n_points, Pose::ORIGIN)?;
    // starting at the origin heading along +x, the centre is (0, R)
    Ok(trace
        .positions
        .iter()
        .map(|p| ((p[0].powi(2) + (p[1] - radius).powi(2)).sqrt() - radius).abs())
        .fold(0.0, f64::max))
}

pub fn run_oracles() -> Result<Vec<OracleCheck>> {
    let mut checks = box_spectrum(16000)?;

    let radius = 2.0;
    let dev = circle_deviation(radius, 10_000)?;
    checks.push(OracleCheck::abs("circle radial deviation", dev, 0.0, 1e-6 * radius));

    let op = TridiagonalOperator::from_parts(vec![2.0; 3], vec![-1.0; 2])?;
    let ev = eigen_lowest(&op, 3)?.eigenvalues;
    for (i, exact) in [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()].into_iter().enumerate() {
        checks.push(OracleCheck::abs(format!("3x3 eigenvalue {i}"), ev[i], exact, 1e-12));
    }

    let params = PhysicalParams::default();
    for theta in [PI / 8.0, PI / 2.0, 7.0 * PI / 8.0] {
        let k = power_law_amplitude(0.5, theta, params.a, params.b)?;
        let turn = total_turn(&CurvatureSpec::power_law(k, 0.5)?, &params)?;
        let expected = PI - theta;
        checks.push(OracleCheck::abs(
            format!("turn at theta = {theta:.6}"),
            turn,
            expected,
            1e-9 * expected,
        ));
    }
    Ok(checks)
}
