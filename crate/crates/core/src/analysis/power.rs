use serde::Serialize;

use crate::error::Result;
use crate::grid::{ExteriorData, Grid1D};
use crate::operator::Discretization;
use crate::solver::{vanishing_viscosity, Solution, SolverConfig};

use super::exponent::{critical_point, fit_exponent, geometric_radii, ExponentFit};
use super::oracles::{calibrate_power_constant, PowerCalibration};

/// Sharp gradient-Hölder exponent `(2s - 1) / (1 + gamma)`.
pub fn alpha_formula(s: f64, gamma: f64) -> f64 {
    (2.0 * s - 1.0) / (1.0 + gamma)
}

/// Default fitting windows: ten radii from 0.5 down to `max(0.05, 10 h)`.
///
/// The windows do not shrink with `h`: the monotone scheme is first-order
/// accurate at the critical point, and windows of a few cells would carry
/// that error into the slope at every resolution.
pub fn default_radii(grid: &Grid1D) -> Vec<f64> {
    geometric_radii(0.5, (10.0 * grid.h()).max(0.05), 10)
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerStudy {
    pub calibration: PowerCalibration,
    pub n: usize,
    /// `sup |u - C|x|^beta|` over `[-0.5, 0.5]` divided by `sup |u|` there.
    pub relative_error: f64,
    pub fit: ExponentFit,
    pub alpha_formula: f64,
    /// `|alpha_hat - alpha| / alpha`.
    pub alpha_relative_error: f64,
    pub residual_sup: f64,
    pub converged: bool,
    #[serde(skip)]
    pub solution: Option<Solution>,
}

/// Solves with the calibrated power datum and `f = 1` by vanishing
/// viscosity, then compares with the power profile and fits the exponent
/// at the computed critical point.
pub fn power_solution_study(
    s: f64,
    cfg: &SolverConfig,
    grid: &Grid1D,
    calibration_grid: &Grid1D,
    r_far: f64,
) -> Result<PowerStudy> {
    let calibration = calibrate_power_constant(cfg.gamma, s, calibration_grid, r_far)?;
    let (c, beta) = (calibration.constant, calibration.beta);
    let datum = ExteriorData::power(c, beta)?;
    let disc = Discretization::new(*grid, s, r_far, datum)?;
    let f = vec![1.0; grid.n_interior()];
    let sol = vanishing_viscosity(&disc, cfg, &f, None)?;
    let (mut err, mut size) = (0.0f64, 0.0f64);
    for j in grid.interior() {
        let x = grid.x(j);
        if x.abs() <= 0.5 {
            let u = sol.u.values()[j];
            err = err.max((u - c * x.abs().powf(beta)).abs());
            size = size.max(u.abs());
        }
    }
    let center = critical_point(&sol.u);
    let fit = fit_exponent(&sol.u, center, &default_radii(grid))?;
    let alpha = alpha_formula(s, cfg.gamma);
    Ok(PowerStudy {
        calibration,
        n: grid.n_interior(),
        relative_error: err / size,
        alpha_relative_error: (fit.alpha_hat - alpha).abs() / alpha,
        fit,
        alpha_formula: alpha,
        residual_sup: sol.residual_sup,
        converged: sol.converged,
        solution: Some(sol),
    })
}
