//! Recovery-based error indicators `eta_T = ||beta^(1/2) (G_h^I u_h - grad u_h)||_T`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::FemSolution;
use crate::mesh::Mesh;
use crate::problems::LevelSetProblem;
use crate::quadrature::TriangleRule;
use crate::recovery::TwoValuedGradientField;

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    pub eta: Vec<f64>,
    pub eta_global: f64,
}

impl IndicatorField {
    pub fn from_local(eta: Vec<f64>) -> IndicatorField {
        let eta_global = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        IndicatorField { eta, eta_global }
    }
}

pub fn indicators(
    mesh: &Mesh,
    sol: &FemSolution,
    grad: &TwoValuedGradientField,
    problem: &dyn LevelSetProblem,
) -> IndicatorField {
    let rule = TriangleRule::degree4();
    let eta = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let c = mesh.corners(t);
            let gh = sol.element_gradient(mesh, t);
            let region = mesh.triangle_region[t];
            let area = mesh.area(t);
            rule.map(&c)
                .map(|(p, l, w)| w * area * problem.beta(region, p) * (grad.eval(mesh, t, l) - gh).norm_squared())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    IndicatorField::from_local(eta)
}

/// `kappa = eta / ||beta^(1/2) grad (u - u_h)||`.
pub fn effective_index(eta_global: f64, true_energy_error: f64) -> Result<f64> {
    if !(true_energy_error > 0.0) {
        return Err(Error::DivisionByZero);
    }
    Ok(eta_global / true_energy_error)
}
