use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ExteriorData, Grid1D, GridFunction};
use crate::operator::{Discretization, OperatorSpec, PucciSign, DEFAULT_R_FAR, DEFAULT_TAIL_TOL};
use crate::quadrature;
use crate::solver::Solution;

/// Outcome of a property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    /// Signed slack of the checked inequality; negative means violated.
    pub margin: f64,
    /// Abscissa of the tightest node, if any.
    pub location: Option<f64>,
    pub vacuous: bool,
}

/// `u <= v + 10 residual_tol` at every interior node.
pub fn check_comparison(u: &GridFunction, v: &GridFunction, residual_tol: f64) -> Result<Verdict> {
    let grid = u.grid();
    if !grid.same_as(v.grid()) {
        return Err(Error::GridMismatch("comparison of functions on different grids".into()));
    }
    let slack = 10.0 * residual_tol;
    let (mut margin, mut location) = (f64::INFINITY, None);
    for j in grid.interior() {
        let m = v.values()[j] + slack - u.values()[j];
        if m < margin {
            margin = m;
            location = Some(grid.x(j));
        }
    }
    Ok(Verdict {
        pass: margin >= 0.0,
        margin,
        location,
        vacuous: false,
    })
}

/// Largest value of `g` on the stored exterior nodes and on a log-spaced
/// sample out to `r_far`.
pub fn exterior_sup(u: &GridFunction, g: &ExteriorData, r_far: f64) -> f64 {
    let grid = u.grid();
    let mut best = grid.exterior().map(|j| u.values()[j]).fold(f64::NEG_INFINITY, f64::max);
    let r0 = grid.r_trunc();
    let count = 400;
    for k in 0..=count {
        let r = r0 * (r_far / r0).powf(k as f64 / count as f64);
        best = best.max(g.eval(r)).max(g.eval(-r));
    }
    best
}

/// If the interior maximum reaches the exterior supremum, the solution must
/// be constant up to `10 residual_tol`; otherwise the check is vacuous.
pub fn check_strong_max(u: &Solution, g: &ExteriorData, r_far: f64, residual_tol: f64) -> Verdict {
    let inside = u.u.interior_values();
    let max = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = inside.iter().copied().fold(f64::INFINITY, f64::min);
    let outside = exterior_sup(&u.u, g, r_far);
    let slack = 10.0 * residual_tol;
    if max < outside - slack {
        return Verdict {
            pass: true,
            margin: outside - max,
            location: None,
            vacuous: true,
        };
    }
    let margin = slack - (max - min);
    Verdict {
        pass: margin >= 0.0,
        margin,
        location: None,
        vacuous: false,
    }
}

/// Discrete `L^1_{2s}` norm: `int |g(y)| / (1 + |y|^{1+2s}) dy` over the
/// exterior, with lattice sums up to `r_trunc` and quadrature beyond.
pub fn l1_2s_norm(grid: &Grid1D, g: &ExteriorData, s: f64) -> f64 {
    let weight = |y: f64| g.eval(y).abs() / (1.0 + y.abs().powf(1.0 + 2.0 * s));
    let h = grid.h();
    let lattice: f64 = grid.exterior().map(|j| weight(grid.x(j)) * h).sum();
    let r = grid.r_trunc();
    // y = r / t maps (r, inf) onto (0, 1)
    let far = quadrature::integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            (weight(r / t) + weight(-r / t)) * r / (t * t)
        },
        0.0,
        1.0,
        1e-10,
        1e-10,
        2000,
    );
    lattice + far.value
}

/// Ratio `||u||_inf / (1 + ||f||_inf + sup_near |g| + ||g||_{L^1_{2s}})`, with
/// `sup_near` over exterior nodes within a quarter of the interval length.
pub fn check_linf_bound(u: &Solution, f: &[f64], g: &ExteriorData, s: f64) -> f64 {
    let grid = u.u.grid();
    let reach = 0.25 * (grid.b() - grid.a());
    let near = grid
        .exterior()
        .filter(|&j| {
            let x = grid.x(j);
            x >= grid.a() - reach && x <= grid.b() + reach
        })
        .map(|j| u.u.values()[j].abs())
        .fold(0.0, f64::max);
    let fsup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    u.u.interior_sup() / (1.0 + fsup + near + l1_2s_norm(grid, g, s))
}

/// `min <= candidate <= max` at interior nodes up to `tol`.
pub fn check_ordering(min: &GridFunction, candidate: &GridFunction, max: &GridFunction, tol: f64) -> Result<Verdict> {
    let below = check_comparison(min, candidate, tol / 10.0)?;
    let above = check_comparison(candidate, max, tol / 10.0)?;
    Ok(if below.margin <= above.margin { below } else { above })
}

/// Barrier `phi_M(x) = (M^2 - x^2)_+`.
pub fn barrier_datum(m: f64) -> ExteriorData {
    ExteriorData::new(format!("barrier(M={m})"), m * m, crate::grid::BOUNDED_SIGMA, move |x: f64| {
        (m * m - x * x).max(0.0)
    })
    .expect("barrier datum is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierCheck {
    pub s: f64,
    pub m: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    /// Largest value of `M+ phi_M` over the interior nodes of `(-1, 1)`.
    pub max_value: f64,
    pub pass: bool,
}

/// Evaluates `M+ phi_M` at every interior node of `(-1, 1)`.
pub fn barrier_check(s: f64, m: f64, lambda: f64, big_lambda: f64, n: usize) -> Result<BarrierCheck> {
    let grid = Grid1D::new(-1.0, 1.0, n, 2.0 * m)?;
    let spec = OperatorSpec::build(s, &grid, DEFAULT_R_FAR)?.with_ellipticity(lambda, big_lambda)?;
    let datum = barrier_datum(m);
    let disc = Discretization::from_spec(grid, spec, datum.clone(), DEFAULT_TAIL_TOL)?;
    let phi = GridFunction::from_fn(grid, |x| datum.eval(x))?;
    let mut max_value = f64::NEG_INFINITY;
    for j in grid.interior() {
        max_value = max_value.max(disc.pucci(&phi, j, PucciSign::Plus)?);
    }
    Ok(BarrierCheck {
        s,
        m,
        lambda,
        big_lambda,
        max_value,
        pass: max_value < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_examples() {
        let g = Grid1D::new(-1.0, 1.0, 9, 2.0).unwrap();
        let u = GridFunction::from_fn(g, |x| x * x).unwrap();
        let same = check_comparison(&u, &u, 1e-9).unwrap();
        assert!(same.pass);
        let mut bad = u.clone();
        let j = g.nearest_interior(0.4);
        bad.values_mut()[j] -= 1.0;
        let v = check_comparison(&u, &bad, 1e-9).unwrap();
        assert!(!v.pass);
        assert!((v.location.unwrap() - g.x(j)).abs() < 1e-15);
    }

    #[test]
    fn l1_norm_of_constant() {
        let g = Grid1D::new(-1.0, 1.0, 199, 8.0).unwrap();
        // 2 int_1^inf dy / (1 + y^2) = pi/2 for s = 1/2
        let v = l1_2s_norm(&g, &ExteriorData::constant(1.0), 0.5);
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 2e-2);
    }
}
