//! Discrete fractional Laplacian `Delta_h^s = -(-Delta)^s` and the Pucci
//! extremal operators on a [`Grid1D`].
//!
//! The symmetric form is used throughout:
//! `Delta^s u(x) = c_{1,s} int_0^inf (u(x+z) + u(x-z) - 2u(x)) z^{-1-2s} dz`.
//! Offsets `1..=K` are summed on the lattice; `|z| > (K + 1/2) h` is
//! integrated against the closed-form exterior datum.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fast::LatticeConvolver;
use crate::grid::{ExteriorData, Grid1D, GridFunction};
use crate::quadrature;

/// Default absolute tolerance (relative to the datum's scale) for tails.
pub const DEFAULT_TAIL_TOL: f64 = 1e-11;
/// Default end of the numeric tail segment.
pub const DEFAULT_R_FAR: f64 = 1e4;

/// `C_{1,s} = 4^s s Gamma(1/2 + s) / (sqrt(pi) Gamma(1 - s))`.
pub fn c_norm(s: f64) -> f64 {
    4f64.powf(s) * s * gamma(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma(1.0 - s))
}

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("s must lie in (0,1), got {s}")))
    }
}

/// Lattice weights and normalization for a fixed order and spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorSpec {
    s: f64,
    c_norm: f64,
    lambda_ell: f64,
    big_lambda_ell: f64,
    h: f64,
    weights: Vec<f64>,
    r_trunc: f64,
    r_far: f64,
    z0: f64,
    tail_mass: f64,
}

/// Unnormalized weight of offset `k >= 1` at unit spacing.
fn unit_weight(s: f64, k: usize) -> f64 {
    if k == 1 {
        1.5f64.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    } else {
        // (k-1/2)^{-2s} - (k+1/2)^{-2s} without cancellation
        let kf = k as f64;
        (kf + 0.5).powf(-2.0 * s) * (2.0 * s * (1.0 / (kf - 0.5)).ln_1p()).exp_m1() / (2.0 * s)
    }
}

impl OperatorSpec {
    pub fn build(s: f64, grid: &Grid1D, r_far: f64) -> Result<Self> {
        check_order(s)?;
        if !(r_far >= grid.r_trunc() && r_far.is_finite()) {
            return Err(Error::invalid(format!(
                "r_far = {r_far} must be at least r_trunc = {}",
                grid.r_trunc()
            )));
        }
        let c = c_norm(s);
        let h = grid.h();
        let scale = c * h.powf(-2.0 * s);
        let k_max = grid.k_ext();
        let weights = (1..=k_max).map(|k| scale * unit_weight(s, k)).collect();
        let z0 = (k_max as f64 + 0.5) * h;
        let tail_mass = 2.0 * c * z0.powf(-2.0 * s) / (2.0 * s);
        Ok(OperatorSpec {
            s,
            c_norm: c,
            lambda_ell: 1.0,
            big_lambda_ell: 1.0,
            h,
            weights,
            r_trunc: grid.r_trunc(),
            r_far: r_far.max(z0),
            z0,
            tail_mass,
        })
    }

    /// Sets the ellipticity pair used by the Pucci operators.
    pub fn with_ellipticity(mut self, lambda: f64, big_lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
            )));
        }
        self.lambda_ell = lambda;
        self.big_lambda_ell = big_lambda;
        Ok(self)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    pub fn lambda_ell(&self) -> f64 {
        self.lambda_ell
    }

    pub fn big_lambda_ell(&self) -> f64 {
        self.big_lambda_ell
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r_trunc(&self) -> f64 {
        self.r_trunc
    }

    pub fn r_far(&self) -> f64 {
        self.r_far
    }

    /// `weights()[k - 1] = w_k`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w_k` for `k >= 1`, zero beyond the stored range.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.weights.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// Largest lattice offset.
    pub fn k_max(&self) -> usize {
        self.weights.len()
    }

    /// Start of the tail region.
    pub fn z0(&self) -> f64 {
        self.z0
    }

    /// `2 c int_{z0}^inf z^{-1-2s} dz`, the coefficient of `-u(x)` in the tail.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Diagonal entry of the interior matrix: `-(2 sum_k w_k + tail_mass)`.
    pub fn diagonal(&self) -> f64 {
        -(2.0 * self.weights.iter().sum::<f64>() + self.tail_mass)
    }
}

pub fn build_operator(s: f64, grid: &Grid1D, r_far: f64) -> Result<OperatorSpec> {
    OperatorSpec::build(s, grid, r_far)
}

/// Exterior datum together with the quadrature settings for its tail.
#[derive(Debug, Clone)]
pub struct TailSpec {
    g: ExteriorData,
    r_trunc: f64,
    r_far: f64,
    tol: f64,
}

impl TailSpec {
    /// Rejects data whose declared growth is not integrable against the kernel.
    pub fn new(g: ExteriorData, spec: &OperatorSpec, tol: f64) -> Result<Self> {
        if g.growth_sigma() >= 2.0 * spec.s() {
            return Err(Error::invalid(format!(
                "growth exponent sigma = {} must be below 2s = {} for the tail integral to converge",
                g.growth_sigma(),
                2.0 * spec.s()
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid(format!("tail tolerance must be positive, got {tol}")));
        }
        Ok(TailSpec {
            g,
            r_trunc: spec.r_trunc(),
            r_far: spec.r_far(),
            tol,
        })
    }

    pub fn g(&self) -> &ExteriorData {
        &self.g
    }

    pub fn r_trunc(&self) -> f64 {
        self.r_trunc
    }

    pub fn r_far(&self) -> f64 {
        self.r_far
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Tail contribution at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailValue {
    pub value: f64,
    /// Growth-based bound on the part beyond `r_far`.
    pub remainder_bound: f64,
    /// Quadrature error estimate of the computed value.
    pub error_estimate: f64,
}

/// `int_{z0}^inf phi(z) z^{-1-2s} dz` for `|phi(z)| <~ (1+z)^sigma`, `sigma < 2s`.
///
/// `(z0, r_far)` is integrated in `log z`; beyond `r_far` the substitution
/// `z = r_far t^{-1/(2s)}`, `t = tau^m` removes the decay and the endpoint
/// singularity.
pub(crate) fn kernel_moment<F: Fn(f64) -> f64>(
    phi: F,
    s: f64,
    sigma: f64,
    z0: f64,
    r_far: f64,
    abs_tol: f64,
) -> (f64, f64) {
    let two_s = 2.0 * s;
    let near = quadrature::integrate(
        |t: f64| {
            let z = t.exp();
            phi(z) * (-two_s * t).exp()
        },
        z0.ln(),
        r_far.ln(),
        0.5 * abs_tol,
        1e-13,
        4000,
    );
    let m = 1.0 / (1.0 - sigma / two_s) + 1.0;
    let far = quadrature::integrate(
        |tau: f64| {
            if tau <= 0.0 {
                return 0.0;
            }
            let t = tau.powf(m);
            let z = r_far * t.powf(-1.0 / two_s);
            if !(z < 1e150) {
                return 0.0;
            }
            phi(z) * m * tau.powf(m - 1.0)
        },
        0.0,
        1.0,
        0.5 * abs_tol * two_s * r_far.powf(two_s),
        1e-13,
        4000,
    );
    let far_scale = r_far.powf(-two_s) / two_s;
    (
        near.value + far_scale * far.value,
        near.error + far_scale * far.error,
    )
}

fn datum_scale(g: &ExteriorData, s: f64, x: f64, z0: f64) -> f64 {
    let sigma = g.growth_sigma();
    1.0 + g.growth_m() * (1.0 + x.abs() + z0).powf(sigma) * z0.powf(-2.0 * s)
}

/// Tail `c int_{z0}^inf (g(x+z) + g(x-z) - 2 u_x) z^{-1-2s} dz` with the
/// far-field bound `2 c M (1 + r_far + |x|)^sigma r_far^{-2s} / (2s - sigma)`.
pub fn tail_integral(tail: &TailSpec, spec: &OperatorSpec, x: f64, u_x: f64) -> Result<TailValue> {
    let (load, err) = tail_load(tail, spec, x)?;
    Ok(TailValue {
        value: load - spec.tail_mass() * u_x,
        remainder_bound: remainder_bound(tail, spec, x),
        error_estimate: err,
    })
}

fn remainder_bound(tail: &TailSpec, spec: &OperatorSpec, x: f64) -> f64 {
    let g = tail.g();
    let (s, sigma, r) = (spec.s(), g.growth_sigma(), tail.r_far());
    2.0 * spec.c_norm() * g.growth_m() * (1.0 + r + x.abs()).powf(sigma) * r.powf(-2.0 * s)
        / (2.0 * s - sigma)
}

/// The `u`-independent part of the tail: value at `u_x = 0` and its error.
///
/// Integrates `g(x+z) + g(x-z) - 2 rho` with a reference level `rho` taken
/// from `g` itself, so constant data cancel exactly.
fn tail_load(tail: &TailSpec, spec: &OperatorSpec, x: f64) -> Result<(f64, f64)> {
    let g = tail.g();
    let s = spec.s();
    let z0 = spec.z0();
    let rho = 0.5 * (g.try_eval(x + z0)? + g.try_eval(x - z0)?);
    let scale = datum_scale(g, s, x, z0);
    let abs_tol = tail.tol() * scale;
    let bad = std::cell::Cell::new(None);
    let phi = |z: f64| {
        let v = g.eval(x + z) + g.eval(x - z);
        if !v.is_finite() {
            bad.set(Some(x + z));
            return 0.0;
        }
        v - 2.0 * rho
    };
    let (moment, err) = kernel_moment(phi, s, g.growth_sigma(), z0, tail.r_far(), abs_tol);
    if let Some(at) = bad.get() {
        return Err(Error::Evaluation {
            label: g.label().to_string(),
            x: at,
        });
    }
    if !(err <= 10.0 * abs_tol) {
        return Err(Error::TailTolerance {
            tol: abs_tol,
            estimate: err,
        });
    }
    let c = spec.c_norm();
    Ok((c * moment + rho * spec.tail_mass(), c * err))
}

/// Tail loads for every interior node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTable {
    load: Vec<f64>,
    tail_mass: f64,
    remainder_bound: f64,
    error_estimate: f64,
}

impl TailTable {
    pub fn build(tail: &TailSpec, spec: &OperatorSpec, grid: &Grid1D) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = grid
            .interior()
            .into_par_iter()
            .map(|j| tail_load(tail, spec, grid.x(j)))
            .collect::<Result<_>>()?;
        let remainder_bound = grid
            .interior()
            .map(|j| remainder_bound(tail, spec, grid.x(j)))
            .fold(0.0, f64::max);
        Ok(TailTable {
            error_estimate: pairs.iter().map(|p| p.1).fold(0.0, f64::max),
            load: pairs.into_iter().map(|p| p.0).collect(),
            tail_mass: spec.tail_mass(),
            remainder_bound,
        })
    }

    /// Tail at interior node `i` (0-based interior numbering) given `u_i`.
    pub fn value(&self, i: usize, u_i: f64) -> f64 {
        self.load[i] - self.tail_mass * u_i
    }

    pub fn loads(&self) -> &[f64] {
        &self.load
    }

    /// Largest far-field bound over interior nodes.
    pub fn remainder_bound(&self) -> f64 {
        self.remainder_bound
    }

    /// Largest quadrature error estimate over interior nodes.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }
}

/// Sign of a Pucci operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PucciSign {
    Plus,
    Minus,
}

/// Everything needed to apply the operator to grid functions carrying one
/// exterior datum.
#[derive(Debug)]
pub struct Discretization {
    grid: Grid1D,
    spec: OperatorSpec,
    tail: TailSpec,
    table: TailTable,
    convolver: OnceLock<LatticeConvolver>,
}

impl Clone for Discretization {
    fn clone(&self) -> Self {
        Discretization {
            grid: self.grid,
            spec: self.spec.clone(),
            tail: self.tail.clone(),
            table: self.table.clone(),
            convolver: OnceLock::new(),
        }
    }
}

impl Discretization {
    pub fn new(grid: Grid1D, s: f64, r_far: f64, g: ExteriorData) -> Result<Self> {
        let spec = OperatorSpec::build(s, &grid, r_far)?;
        Self::from_spec(grid, spec, g, DEFAULT_TAIL_TOL)
    }

    pub fn from_spec(grid: Grid1D, spec: OperatorSpec, g: ExteriorData, tol: f64) -> Result<Self> {
        if (spec.h() - grid.h()).abs() > 1e-14 * grid.h() || spec.k_max() != grid.k_ext() {
            return Err(Error::GridMismatch("operator was built for another grid".into()));
        }
        let tail = TailSpec::new(g, &spec, tol)?;
        let table = TailTable::build(&tail, &spec, &grid)?;
        Ok(Discretization {
            grid,
            spec,
            tail,
            table,
            convolver: OnceLock::new(),
        })
    }

    /// Same grid and operator with another exterior datum.
    pub fn with_datum(&self, g: ExteriorData) -> Result<Self> {
        Self::from_spec(self.grid, self.spec.clone(), g, self.tail.tol())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn tail(&self) -> &TailSpec {
        &self.tail
    }

    pub fn table(&self) -> &TailTable {
        &self.table
    }

    pub fn datum(&self) -> &ExteriorData {
        self.tail.g()
    }

    pub fn s(&self) -> f64 {
        self.spec.s()
    }

    fn check_grid(&self, u: &GridFunction) -> Result<()> {
        if self.grid.same_as(u.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch("grid function lives on another grid".into()))
        }
    }

    /// Lattice sum at storage index `j` without the tail.
    fn lattice(&self, v: &[f64], j: usize) -> f64 {
        let uj = v[j];
        let mut acc = 0.0;
        for (k, w) in self.spec.weights().iter().enumerate() {
            let k = k + 1;
            acc += w * ((v[j + k] - uj) + (v[j - k] - uj));
        }
        acc
    }

    /// `Delta_h^s u` at storage index `j`.
    pub fn apply(&self, u: &GridFunction, j: usize) -> Result<f64> {
        self.check_grid(u)?;
        self.grid.check_interior(j)?;
        let v = u.values();
        let i = j - self.grid.interior().start;
        Ok(self.lattice(v, j) + self.table.value(i, v[j]))
    }

    /// `Delta_h^s u` at every interior node, summed directly.
    pub fn apply_interior(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check_grid(u)?;
        Ok(self.apply_values(u.values()))
    }

    pub(crate) fn apply_values(&self, v: &[f64]) -> Vec<f64> {
        let start = self.grid.interior().start;
        self.grid
            .interior()
            .into_par_iter()
            .map(|j| self.lattice(v, j) + self.table.value(j - start, v[j]))
            .collect()
    }

    fn convolver(&self) -> &LatticeConvolver {
        self.convolver
            .get_or_init(|| LatticeConvolver::new(self.spec.weights(), self.grid.len()))
    }

    /// Same as [`Discretization::apply_interior`] through an FFT convolution.
    pub fn apply_fast(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check_grid(u)?;
        let v = u.values();
        let conv = self.convolver().apply(v);
        let wsum2 = 2.0 * self.spec.weights().iter().sum::<f64>();
        let start = self.grid.interior().start;
        Ok(self
            .grid
            .interior()
            .map(|j| conv[j] - wsum2 * v[j] + self.table.value(j - start, v[j]))
            .collect())
    }

    /// Matrix-free product with the interior matrix (no exterior load).
    pub(crate) fn interior_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.grid.len()];
        let r = self.grid.interior();
        full[r.clone()].copy_from_slice(x);
        let conv = self.convolver().apply(&full);
        let d = self.spec.diagonal();
        r.zip(x).map(|(j, xi)| conv[j] + d * xi).collect()
    }

    /// Affine part `b` of `Delta_h^s u = A u_I + b`: the operator applied to
    /// the exterior values with zero interior values.
    pub fn exterior_load(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check_grid(u)?;
        let mut v = u.values().to_vec();
        for j in self.grid.interior() {
            v[j] = 0.0;
        }
        Ok(self.apply_values(&v))
    }

    /// Pucci extremal operator over the raw kernel class at storage index `j`.
    pub fn pucci(&self, u: &GridFunction, j: usize, sign: PucciSign) -> Result<f64> {
        self.check_grid(u)?;
        self.grid.check_interior(j)?;
        let (lo, hi) = (self.spec.lambda_ell(), self.spec.big_lambda_ell());
        let (pos, neg) = match sign {
            PucciSign::Plus => (hi, lo),
            PucciSign::Minus => (lo, hi),
        };
        let extremal = |d: f64| if d >= 0.0 { pos * d } else { neg * d };
        let v = u.values();
        let uj = v[j];
        let c = self.spec.c_norm();
        let mut acc = 0.0;
        for (k, w) in self.spec.weights().iter().enumerate() {
            let k = k + 1;
            acc += (w / c) * extremal(v[j + k] + v[j - k] - 2.0 * uj);
        }
        let g = self.datum();
        let x = self.grid.x(j);
        let z0 = self.spec.z0();
        let abs_tol = self.tail.tol() * datum_scale(g, self.s(), x, z0) * (1.0 + uj.abs());
        let (tail, _) = kernel_moment(
            |z| extremal(g.eval(x + z) + g.eval(x - z) - 2.0 * uj),
            self.s(),
            g.growth_sigma(),
            z0,
            self.tail.r_far(),
            abs_tol,
        );
        Ok(acc + tail)
    }
}

/// `Delta_h^s u` at storage index `j`.
pub fn apply_frac_laplacian(disc: &Discretization, u: &GridFunction, j: usize) -> Result<f64> {
    disc.apply(u, j)
}

/// `Delta_h^s u` at every interior node through the FFT path.
pub fn apply_frac_laplacian_fast(disc: &Discretization, u: &GridFunction) -> Result<Vec<f64>> {
    disc.apply_fast(u)
}

pub fn apply_pucci(disc: &Discretization, u: &GridFunction, j: usize, sign: PucciSign) -> Result<f64> {
    disc.pucci(u, j, sign)
}
