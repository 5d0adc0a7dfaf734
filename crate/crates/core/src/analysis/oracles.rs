use serde::Serialize;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::grid::{ExteriorData, Grid1D};
use crate::operator::{tail_integral, OperatorSpec, TailSpec};

/// `u_s(x) = (1+x)_+^s + (1-x)_+^s`, s-harmonic in `(-1, 1)`.
pub fn oracle_us(s: f64, x: f64) -> f64 {
    (1.0 + x).max(0.0).powf(s) + (1.0 - x).max(0.0).powf(s)
}

/// Growth exponent `beta = (2s + gamma) / (1 + gamma)` of the power solution.
pub fn power_beta(s: f64, gamma: f64) -> f64 {
    (2.0 * s + gamma) / (1.0 + gamma)
}

/// `Delta^s |x|^beta = kappa |x|^{beta - 2s}` for `0 < beta < 2s`, in closed form.
pub fn power_kappa_exact(s: f64, beta: f64) -> f64 {
    let num = gamma_fn(0.5 * (beta + 1.0)) * gamma_fn(s - 0.5 * beta);
    let den = gamma_fn(0.5 * (beta + 1.0) - s) * gamma_fn(-0.5 * beta);
    -(4f64.powf(s)) * num / den
}

/// `C` with `|D(C|x|^beta)|^gamma Delta^s (C|x|^beta) = 1`, given `kappa`.
pub fn power_constant(beta: f64, gamma: f64, kappa: f64) -> f64 {
    (beta.powf(gamma) * kappa).powf(-1.0 / (1.0 + gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCalibration {
    pub s: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Probe abscissae actually used (grid nodes).
    pub probes: Vec<f64>,
    /// `kappa` estimated at each probe.
    pub kappas: Vec<f64>,
    pub kappa: f64,
    /// `(max - min) / mean` of the probe estimates.
    pub spread: f64,
    pub constant: f64,
}

/// Probe abscissae used by [`calibrate_power_constant`].
pub const CALIBRATION_PROBES: [f64; 3] = [0.2, 0.4, 0.6];

/// Measures `kappa` by applying the discrete operator to `|x|^beta` at a few
/// interior nodes of `grid` and returns the power-solution constant.
pub fn calibrate_power_constant(gamma: f64, s: f64, grid: &Grid1D, r_far: f64) -> Result<PowerCalibration> {
    if !(gamma > 0.0) {
        return Err(Error::Calibration(format!(
            "gamma = {gamma} gives beta = 2s, outside the admissible range beta < 2s"
        )));
    }
    let beta = power_beta(s, gamma);
    let spec = OperatorSpec::build(s, grid, r_far)?;
    let tail = TailSpec::new(ExteriorData::power(1.0, beta)?, &spec, 1e-12)?;
    let power = |x: f64| x.abs().powf(beta);
    let mut probes = Vec::new();
    let mut kappas = Vec::new();
    for target in CALIBRATION_PROBES {
        let j = grid.nearest_interior(target);
        let x = grid.x(j);
        let ux = power(x);
        let mut lattice = 0.0;
        for (k, w) in spec.weights().iter().enumerate() {
            let z = (k + 1) as f64 * grid.h();
            lattice += w * ((power(x + z) - ux) + (power(x - z) - ux));
        }
        let t = tail_integral(&tail, &spec, x, ux)?;
        probes.push(x);
        kappas.push((lattice + t.value) / x.abs().powf(beta - 2.0 * s));
    }
    let mean = kappas.iter().sum::<f64>() / kappas.len() as f64;
    let (lo, hi) = kappas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &k| (l.min(k), h.max(k)));
    let spread = (hi - lo) / mean.abs();
    if !(mean > 0.0) || !(spread <= 0.01) {
        return Err(Error::Calibration(format!(
            "inconsistent kappa across probes: {kappas:?} (spread {spread:.3e})"
        )));
    }
    Ok(PowerCalibration {
        s,
        gamma,
        beta,
        probes,
        kappas,
        kappa: mean,
        spread,
        constant: power_constant(beta, gamma, mean),
    })
}
