//! Uniform 1D discretization of an interval `(a, b)` together with the
//! exterior lattice needed by the nonlocal operator.
//!
//! Nodes are indexed `0..len()`. Storage index `j` corresponds to the
//! lattice label `k = j - k_ext`, so the boundary nodes `x = a` and `x = b`
//! sit at `k = 0` and `k = n_interior + 1`.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `(a, b)` extended by exterior nodes up to `r_trunc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n_interior: usize,
    h: f64,
    r_trunc: f64,
    k_ext: usize,
}

impl Grid1D {
    /// Builds the grid, validating `a < b`, `n_interior >= 3` and
    /// `r_trunc >= 2 max(|a|, |b|)`.
    pub fn new(a: f64, b: f64, n_interior: usize, r_trunc: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid(format!("need a < b, got a = {a}, b = {b}")));
        }
        if n_interior < 3 {
            return Err(Error::invalid(format!(
                "need at least 3 interior nodes, got {n_interior}"
            )));
        }
        let reach = a.abs().max(b.abs());
        if !(r_trunc.is_finite() && r_trunc >= 2.0 * reach) {
            return Err(Error::invalid(format!(
                "truncation radius {r_trunc} is below 2 max(|a|,|b|) = {}",
                2.0 * reach
            )));
        }
        let h = (b - a) / (n_interior as f64 + 1.0);
        // Cover [-r_trunc, r_trunc] on both sides and keep every lattice
        // offset beyond the cut pointing outside (a, b).
        let span = (r_trunc + a).max(r_trunc - b).max(b - a);
        let k_ext = (span / h - 1e-9).ceil().max(1.0) as usize;
        Ok(Grid1D {
            a,
            b,
            n_interior,
            h,
            r_trunc,
            k_ext,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn r_trunc(&self) -> f64 {
        self.r_trunc
    }

    /// Number of exterior nodes on each side beyond the boundary nodes.
    pub fn k_ext(&self) -> usize {
        self.k_ext
    }

    /// Total number of stored nodes.
    pub fn len(&self) -> usize {
        self.n_interior + 2 + 2 * self.k_ext
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Coordinate of storage index `j`.
    ///
    /// Measured from the midpoint so that a symmetric interval yields
    /// exactly mirrored coordinates.
    pub fn x(&self, j: usize) -> f64 {
        let centre = (self.n_interior as f64 + 1.0) * 0.5 + self.k_ext as f64;
        self.midpoint() + (j as f64 - centre) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    /// Storage indices of the interior nodes.
    pub fn interior(&self) -> Range<usize> {
        self.k_ext + 1..self.k_ext + 1 + self.n_interior
    }

    pub fn interior_nodes(&self) -> Vec<f64> {
        self.interior().map(|j| self.x(j)).collect()
    }

    pub fn is_interior(&self, j: usize) -> bool {
        self.interior().contains(&j)
    }

    /// Storage indices of all nodes outside `(a, b)`, boundary nodes included.
    pub fn exterior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| !self.is_interior(j))
    }

    /// Storage index of the `i`-th interior node (0-based).
    pub fn interior_index(&self, i: usize) -> usize {
        self.k_ext + 1 + i
    }

    pub(crate) fn check_interior(&self, j: usize) -> Result<()> {
        if self.is_interior(j) {
            Ok(())
        } else {
            let r = self.interior();
            Err(Error::NotInterior {
                index: j,
                first: r.start,
                last: r.end - 1,
            })
        }
    }

    /// Interior storage index nearest to `x`.
    pub fn nearest_interior(&self, x: f64) -> usize {
        let r = self.interior();
        let centre = (self.n_interior as f64 + 1.0) * 0.5 + self.k_ext as f64;
        let j = ((x - self.midpoint()) / self.h + centre).round();
        (j.max(r.start as f64) as usize).min(r.end - 1)
    }

    /// Same geometry up to round-off.
    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n_interior == other.n_interior
            && self.k_ext == other.k_ext
            && (self.a - other.a).abs() <= 1e-14 * (1.0 + self.a.abs())
            && (self.b - other.b).abs() <= 1e-14 * (1.0 + self.b.abs())
    }
}

/// Closed-form exterior datum `g` with a declared growth bound
/// `|g(x)| <= M (1 + |x|)^sigma`.
#[derive(Clone)]
pub struct ExteriorData {
    label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    growth_m: f64,
    growth_sigma: f64,
}

impl fmt::Debug for ExteriorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExteriorData")
            .field("label", &self.label)
            .field("growth_m", &self.growth_m)
            .field("growth_sigma", &self.growth_sigma)
            .finish()
    }
}

/// Growth exponent declared for bounded data.
pub const BOUNDED_SIGMA: f64 = 1e-6;

impl ExteriorData {
    pub fn new<F>(label: impl Into<String>, growth_m: f64, growth_sigma: f64, eval: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(growth_m >= 0.0 && growth_m.is_finite()) {
            return Err(Error::invalid(format!("growth constant M must be >= 0, got {growth_m}")));
        }
        if !(growth_sigma > 0.0 && growth_sigma < 2.0) {
            return Err(Error::invalid(format!(
                "growth exponent sigma must lie in (0, 2), got {growth_sigma}"
            )));
        }
        Ok(ExteriorData {
            label: label.into(),
            eval: Arc::new(eval),
            growth_m,
            growth_sigma,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), c.abs(), BOUNDED_SIGMA, move |_| c)
            .expect("constant datum is valid")
    }

    /// `g(x) = slope x + offset`.
    pub fn linear(slope: f64, offset: f64) -> Self {
        Self::new(
            format!("linear({slope},{offset})"),
            slope.abs() + offset.abs(),
            1.0,
            move |x| slope * x + offset,
        )
        .expect("linear datum is valid")
    }

    /// `g_s(x) = (1+x)_+^s + (1-x)_+^s`.
    pub fn figure1(s: f64) -> Self {
        Self::new(format!("figure1(s={s})"), 2.0, s, move |x| {
            crate::analysis::oracle_us(s, x)
        })
        .expect("figure1 datum is valid")
    }

    /// `g(x) = clamp(|x| - 1, 0, 1)`: zero on the unit ball, one beyond radius 2.
    pub fn two_solutions() -> Self {
        Self::new("two_solutions", 1.0, BOUNDED_SIGMA, |x: f64| {
            (x.abs() - 1.0).clamp(0.0, 1.0)
        })
        .expect("ramp datum is valid")
    }

    /// Odd ramp `g(x) = sign(x) clamp(|x| - 1, 0, 1)`.
    pub fn four_solutions() -> Self {
        Self::new("four_solutions", 1.0, BOUNDED_SIGMA, |x: f64| {
            x.signum() * (x.abs() - 1.0).clamp(0.0, 1.0)
        })
        .expect("odd ramp datum is valid")
    }

    /// `g(x) = c |x|^beta`.
    pub fn power(c: f64, beta: f64) -> Result<Self> {
        Self::new(format!("power({c},{beta})"), c.abs(), beta, move |x: f64| {
            c * x.abs().powf(beta)
        })
    }

    /// Same datum shifted by a constant.
    pub fn shifted(&self, shift: f64) -> Self {
        let inner = self.eval.clone();
        ExteriorData {
            label: format!("{}+{shift}", self.label),
            eval: Arc::new(move |x| inner(x) + shift),
            growth_m: self.growth_m + shift.abs(),
            growth_sigma: self.growth_sigma,
        }
    }

    /// Same datum multiplied by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        let inner = self.eval.clone();
        ExteriorData {
            label: format!("{}*{factor}", self.label),
            eval: Arc::new(move |x| factor * inner(x)),
            growth_m: self.growth_m * factor.abs(),
            growth_sigma: self.growth_sigma,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn growth_m(&self) -> f64 {
        self.growth_m
    }

    pub fn growth_sigma(&self) -> f64 {
        self.growth_sigma
    }

    /// Raw evaluation, no finiteness check.
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        let v = (self.eval)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                label: self.label.clone(),
                x,
            })
        }
    }

    /// Spot-checks the growth bound on a log-spaced exterior sample.
    /// Returns the worst ratio `|g(x)| / (M (1+|x|)^sigma)`.
    pub fn check_growth(&self, grid: &Grid1D, r_max: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let lo = grid.b().abs().max(grid.a().abs()).max(1e-3);
        let count = 200;
        for m in 0..=count {
            let r = lo * (r_max / lo).powf(m as f64 / count as f64);
            for x in [r, -r] {
                if x > grid.a() && x < grid.b() {
                    continue;
                }
                let v = self.try_eval(x)?;
                let bound = self.growth_m * (1.0 + x.abs()).powf(self.growth_sigma);
                let ratio = if bound > 0.0 {
                    v.abs() / bound
                } else if v == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(ratio);
            }
        }
        Ok(worst)
    }
}

/// How interior nodes are filled when sampling a datum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InteriorFill {
    Constant(f64),
    /// Linear interpolation between `g(a)` and `g(b)`.
    #[default]
    Interpolate,
}

impl From<f64> for InteriorFill {
    fn from(v: f64) -> Self {
        InteriorFill::Constant(v)
    }
}

/// Values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at node {j}")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interior_values(&self) -> &[f64] {
        &self.values[self.grid.interior()]
    }

    pub fn set_interior(&mut self, interior: &[f64]) {
        let r = self.grid.interior();
        self.values[r].copy_from_slice(interior);
    }

    /// Sup norm over interior nodes.
    pub fn interior_sup(&self) -> f64 {
        self.interior_values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup distance over interior nodes.
    pub fn interior_distance(&self, other: &GridFunction) -> f64 {
        self.interior_values()
            .iter()
            .zip(other.interior_values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Writes `x,u` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,u")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.grid.x(j), v)?;
        }
        Ok(())
    }

    /// Reads values written by [`GridFunction::write_csv`] back onto `grid`.
    pub fn read_csv<R: BufRead>(grid: Grid1D, r: R) -> Result<Self> {
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "x,u" => {}
            _ => return Err(Error::invalid("missing `x,u` header")),
        }
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let _x = parts.next();
            let u = parts
                .next()
                .ok_or_else(|| Error::invalid(format!("malformed row `{line}`")))?;
            let u: f64 = u
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("malformed value `{u}`")))?;
            values.push(u);
        }
        Self::new(grid, values)
    }
}

/// Samples `g` on every exterior node and fills the interior.
pub fn sample_function(grid: &Grid1D, g: &ExteriorData, fill: impl Into<InteriorFill>) -> Result<GridFunction> {
    let fill = fill.into();
    let mut values = vec![0.0; grid.len()];
    for j in grid.exterior() {
        values[j] = g.try_eval(grid.x(j))?;
    }
    match fill {
        InteriorFill::Constant(c) => {
            for j in grid.interior() {
                values[j] = c;
            }
        }
        InteriorFill::Interpolate => {
            let ga = values[grid.k_ext()];
            let gb = values[grid.k_ext() + grid.n_interior() + 1];
            let span = grid.b() - grid.a();
            for j in grid.interior() {
                let t = (grid.x(j) - grid.a()) / span;
                values[j] = (1.0 - t) * ga + t * gb;
            }
        }
    }
    GridFunction::new(*grid, values)
}

/// Central difference `(u_{j+1} - u_{j-1}) / 2h` at interior node `j`.
pub fn gradient_central(u: &GridFunction, j: usize) -> Result<f64> {
    let grid = u.grid();
    grid.check_interior(j)?;
    let v = u.values();
    Ok((v[j + 1] - v[j - 1]) / (2.0 * grid.h()))
}

/// Orientation of the one-sided gradient magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bias {
    /// `max(D+u, -D-u, 0)`: grows with the neighbours, used where the
    /// right-hand side is nonnegative.
    Convex,
    /// `max(-D+u, D-u, 0)`: grows with the centre value, used where the
    /// right-hand side is negative.
    Concave,
}

impl Bias {
    pub fn for_rhs(f: f64, at_zero: Bias) -> Bias {
        if f > 0.0 {
            Bias::Convex
        } else if f < 0.0 {
            Bias::Concave
        } else {
            at_zero
        }
    }
}

/// Discrete gradient magnitude used inside the degenerate factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GradientScheme {
    Central,
    /// One-sided magnitude oriented by the sign of the right-hand side;
    /// `at_zero` applies where it vanishes.
    Upwind { at_zero: Bias },
}

/// Which neighbour a gradient magnitude depends on, for Jacobians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stencil {
    /// Magnitude is zero; `next` is the one-sided stencil that becomes
    /// active first when the node is lowered (convex) or raised (concave).
    Flat { next: (isize, f64) },
    /// `p = coef * (u_{j+off} - u_j) / h` with `off = ±1` and `coef = ±1`.
    OneSided { off: isize, coef: f64 },
    /// `p = |u_{j+1} - u_{j-1}| / 2h` with the sign of the difference.
    Central { sign: f64 },
}

/// Gradient magnitude from the three values around a node, and the
/// active stencil.
pub(crate) fn gradient_magnitude(
    left: f64,
    centre: f64,
    right: f64,
    h: f64,
    scheme: GradientScheme,
    f: f64,
) -> (f64, Stencil) {
    match scheme {
        GradientScheme::Central => {
            let d = (right - left) / (2.0 * h);
            (d.abs(), Stencil::Central { sign: d.signum() })
        }
        GradientScheme::Upwind { at_zero } => {
            let dp = (right - centre) / h;
            let dm = (centre - left) / h;
            let (fwd, bwd, coef) = match Bias::for_rhs(f, at_zero) {
                Bias::Convex => (dp, -dm, 1.0),
                Bias::Concave => (-dp, dm, -1.0),
            };
            if fwd <= 0.0 && bwd <= 0.0 {
                let off = if fwd >= bwd { 1 } else { -1 };
                (0.0, Stencil::Flat { next: (off, coef) })
            } else if fwd >= bwd {
                (fwd, Stencil::OneSided { off: 1, coef })
            } else {
                (bwd, Stencil::OneSided { off: -1, coef })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_interior_nodes() {
        let g = Grid1D::new(-1.0, 1.0, 999, 8.0).unwrap();
        assert!((g.h() - 0.002).abs() < 1e-15);
        let xs = g.interior_nodes();
        assert_eq!(xs.len(), 999);
        assert!((xs[0] + 0.998).abs() < 1e-12);
        assert!((xs[998] - 0.998).abs() < 1e-12);
        assert!(xs.iter().all(|&x| x > -1.0 && x < 1.0));
        // every node with |x| <= r_trunc exists
        assert!(g.x(0) <= -8.0 + 1e-9);
        assert!(g.x(g.len() - 1) >= 8.0 - 1e-9);
    }

    #[test]
    fn three_interior_nodes() {
        let g = Grid1D::new(-1.0, 1.0, 3, 8.0).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.interior_nodes(), vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn rejects_small_truncation_radius() {
        let err = Grid1D::new(-1.0, 1.0, 999, 1.5).unwrap_err();
        assert!(err.to_string().contains("truncation radius"));
        assert!(Grid1D::new(1.0, -1.0, 10, 8.0).is_err());
        assert!(Grid1D::new(-1.0, 1.0, 2, 8.0).is_err());
    }

    #[test]
    fn asymmetric_interval_covers_truncation_ball() {
        let g = Grid1D::new(0.0, 1.0, 9, 2.0).unwrap();
        assert!(g.x(0) <= -2.0 + 1e-12);
        assert!(g.x(g.len() - 1) >= 2.0 - 1e-12);
        assert_eq!(g.interior_nodes().len(), 9);
        assert!(g.interior_nodes().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn sampling_fills_interior() {
        let g = Grid1D::new(-1.0, 1.0, 9, 4.0).unwrap();
        let zero = sample_function(&g, &ExteriorData::constant(0.0), 3.5).unwrap();
        for j in 0..g.len() {
            let expect = if g.is_interior(j) { 3.5 } else { 0.0 };
            assert_eq!(zero.values()[j], expect);
        }
        let lin = sample_function(&g, &ExteriorData::linear(2.0, 1.0), InteriorFill::Interpolate).unwrap();
        for j in 0..g.len() {
            assert!((lin.values()[j] - (2.0 * g.x(j) + 1.0)).abs() < 1e-13);
        }
        let gs = ExteriorData::figure1(0.75);
        let u = sample_function(&g, &gs, 0.0).unwrap();
        for j in g.exterior() {
            let x = g.x(j);
            let expect = (1.0 + x).max(0.0).powf(0.75) + (1.0 - x).max(0.0).powf(0.75);
            assert_eq!(u.values()[j], expect);
        }
    }

    #[test]
    fn failing_datum_propagates() {
        let g = Grid1D::new(-1.0, 1.0, 5, 4.0).unwrap();
        let bad = ExteriorData::new("bad", 1.0, 0.5, |x: f64| if x > 3.0 { f64::NAN } else { 0.0 }).unwrap();
        assert!(matches!(sample_function(&g, &bad, 0.0), Err(Error::Evaluation { .. })));
    }

    #[test]
    fn central_gradient_examples() {
        let g = Grid1D::new(-1.0, 1.0, 3, 4.0).unwrap();
        let c = GridFunction::from_fn(g, |_| 2.0).unwrap();
        let lin = GridFunction::from_fn(g, |x| x).unwrap();
        let sq = GridFunction::from_fn(g, |x| x * x).unwrap();
        for j in g.interior() {
            assert_eq!(gradient_central(&c, j).unwrap(), 0.0);
            assert!((gradient_central(&lin, j).unwrap() - 1.0).abs() < 1e-15);
        }
        let centre = g.nearest_interior(0.0);
        assert_eq!(gradient_central(&sq, centre).unwrap(), 0.0);
        assert!(matches!(gradient_central(&c, 0), Err(Error::NotInterior { .. })));
    }

    #[test]
    fn upwind_magnitude_orientation() {
        let h = 0.5;
        // increasing data: convex bias uses the forward difference
        let (p, st) = gradient_magnitude(0.0, 1.0, 3.0, h, GradientScheme::Upwind { at_zero: Bias::Convex }, 1.0);
        assert_eq!(p, 4.0);
        assert_eq!(st, Stencil::OneSided { off: 1, coef: 1.0 });
        // concave bias uses the backward difference
        let (p, _) = gradient_magnitude(0.0, 1.0, 3.0, h, GradientScheme::Upwind { at_zero: Bias::Convex }, -1.0);
        assert_eq!(p, 2.0);
        // strict local max is flat for the convex bias
        let (p, st) = gradient_magnitude(0.0, 1.0, 0.0, h, GradientScheme::Upwind { at_zero: Bias::Convex }, 1.0);
        assert_eq!(p, 0.0);
        assert!(matches!(st, Stencil::Flat { .. }));
        let (p, _) = gradient_magnitude(0.0, 1.0, 0.0, h, GradientScheme::Upwind { at_zero: Bias::Concave }, 0.0);
        assert_eq!(p, 2.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid1D::new(-1.0, 1.0, 5, 2.0).unwrap();
        let u = GridFunction::from_fn(g, |x| (3.0 * x).sin() / 7.0).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,u\n"));
        let back = GridFunction::read_csv(g, std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, u);
    }
}
