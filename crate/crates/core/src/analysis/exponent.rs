use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub center: f64,
    pub radii: Vec<f64>,
    /// Oscillation of `u - u(center)` over each window.
    pub oscillations: Vec<f64>,
    /// Fitted `1 + alpha`.
    pub slope: f64,
    pub alpha_hat: f64,
    pub r2: f64,
}

/// Interior node minimizing the central `|D_h u|`, ties broken toward the
/// middle of the interval.
pub fn critical_point(u: &GridFunction) -> f64 {
    let grid = u.grid();
    let v = u.values();
    let mid = grid.midpoint();
    let mut best = (f64::INFINITY, f64::INFINITY, mid);
    for j in grid.interior() {
        let d = ((v[j + 1] - v[j - 1]) / (2.0 * grid.h())).abs();
        let x = grid.x(j);
        let key = (d, (x - mid).abs());
        if key.0 < best.0 || (key.0 == best.0 && key.1 < best.1) {
            best = (key.0, key.1, x);
        }
    }
    best.2
}

/// `count` geometric radii from `r_max` down to `r_min`.
pub fn geometric_radii(r_max: f64, r_min: f64, count: usize) -> Vec<f64> {
    let steps = count.max(2) - 1;
    (0..=steps)
        .map(|k| r_max * (r_min / r_max).powf(k as f64 / steps as f64))
        .collect()
}

/// Regresses `log osc_r(u - u(center))` on `log r`; `alpha_hat = slope - 1`.
pub fn fit_exponent(u: &GridFunction, center: f64, radii: &[f64]) -> Result<ExponentFit> {
    let grid = u.grid();
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("radii must be strictly decreasing"));
    }
    if radii
        .iter()
        .any(|&r| !(r > 0.0 && center - r > grid.a() && center + r < grid.b()))
    {
        return Err(Error::invalid("every window must lie inside the interval"));
    }
    let c = grid.nearest_interior(center);
    let uc = u.values()[c];
    let xc = grid.x(c);
    let mut logs = Vec::new();
    let mut oscillations = Vec::new();
    for &r in radii {
        // regress on the distance the window actually reaches on the lattice,
        // which can fall short of r by up to a cell
        let (reach, osc) = grid
            .interior()
            .filter(|&j| (grid.x(j) - xc).abs() <= r * (1.0 + 1e-12))
            .fold((0.0f64, 0.0f64), |(d, o), j| {
                (d.max((grid.x(j) - xc).abs()), o.max((u.values()[j] - uc).abs()))
            });
        oscillations.push(osc);
        if osc > 0.0 && reach > 0.0 {
            logs.push((reach.ln(), osc.ln()));
        }
    }
    if logs.len() < 4 {
        return Err(Error::invalid(format!(
            "only {} usable radii, need at least 4",
            logs.len()
        )));
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ExponentFit {
        center: xc,
        radii: radii.to_vec(),
        oscillations,
        slope,
        alpha_hat: slope - 1.0,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    #[test]
    fn too_few_radii() {
        let g = Grid1D::new(-1.0, 1.0, 99, 2.0).unwrap();
        let u = GridFunction::from_fn(g, |x| x * x).unwrap();
        assert!(fit_exponent(&u, 0.0, &[0.5, 0.4, 0.3]).is_err());
        assert!(fit_exponent(&u, 0.0, &[0.5, 0.6, 0.3, 0.2]).is_err());
        assert!(fit_exponent(&u, 0.8, &[0.5, 0.4, 0.3, 0.2]).is_err());
    }

    #[test]
    fn critical_point_tie_break() {
        let g = Grid1D::new(-1.0, 1.0, 9, 2.0).unwrap();
        let flat = GridFunction::from_fn(g, |_| 1.0).unwrap();
        assert_eq!(critical_point(&flat), 0.0);
        let shifted = GridFunction::from_fn(g, |x| (x - 0.4).powi(2)).unwrap();
        assert!((critical_point(&shifted) - 0.4).abs() < 1e-12);
    }
}
