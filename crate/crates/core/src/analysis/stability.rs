use serde::Serialize;

use crate::error::Result;
use crate::grid::{ExteriorData, Grid1D};
use crate::operator::Discretization;
use crate::solver::{extremal_solution, solve_linear_dirichlet, Side, Solution, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub labels: Vec<String>,
    /// `||u_k - u||_inf` over the interior for each perturbation.
    pub distances: Vec<f64>,
    /// Distances nonincreasing up to `2 continuation_tol`.
    pub decreasing: bool,
    pub final_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn maximal(disc: &Discretization, cfg: &SolverConfig) -> Result<Solution> {
    let zero = vec![0.0; disc.grid().n_interior()];
    let w = solve_linear_dirichlet(disc, &zero)?;
    extremal_solution(disc, cfg, Side::Maximal, Some(&w.u))
}

/// Maximal solutions for perturbed data `g_k` against the one for `g`.
pub fn stability_experiment(
    g: &ExteriorData,
    perturbations: &[(String, ExteriorData)],
    s: f64,
    grid: &Grid1D,
    cfg: &SolverConfig,
    r_far: f64,
) -> Result<StabilityReport> {
    let base = Discretization::new(*grid, s, r_far, g.clone())?;
    let reference = maximal(&base, cfg)?;
    let mut distances = Vec::with_capacity(perturbations.len());
    for (_, gk) in perturbations {
        let disc = base.with_datum(gk.clone())?;
        let uk = maximal(&disc, cfg)?;
        distances.push(uk.u.interior_distance(&reference.u));
    }
    let tolerance = 2.0 * cfg.continuation_tol;
    let decreasing = distances.windows(2).all(|d| d[1] <= d[0] + tolerance);
    let final_distance = distances.last().copied().unwrap_or(0.0);
    Ok(StabilityReport {
        labels: perturbations.iter().map(|p| p.0.clone()).collect(),
        distances,
        decreasing,
        final_distance,
        tolerance,
        pass: decreasing && final_distance <= tolerance,
    })
}

/// `g_k = g + 1/k`.
pub fn shifted_family(g: &ExteriorData, ks: &[u32]) -> Vec<(String, ExteriorData)> {
    ks.iter()
        .map(|&k| (format!("k={k}"), g.shifted(1.0 / k as f64)))
        .collect()
}

/// `g_k = g (1 + (-1)^k / k)`.
pub fn alternating_family(g: &ExteriorData, ks: &[u32]) -> Vec<(String, ExteriorData)> {
    ks.iter()
        .map(|&k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (format!("k={k}"), g.scaled(1.0 + sign / k as f64))
        })
        .collect()
}
