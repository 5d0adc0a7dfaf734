//! Linear, regularized and degenerate solves, and the continuation drivers.
//!
//! Each regularized stage solves `(eps + |D_h u|^gamma) Delta_h^s u = f` at
//! the interior nodes. The default method is Newton with a backtracking line
//! search; the lagged-coefficient (Picard) iteration remains selectable.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient_magnitude, sample_function, Bias, GradientScheme, GridFunction, Stencil};
use crate::linalg::{self, NegCholesky, DENSE_LIMIT};
use crate::operator::Discretization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Newton,
    Picard,
}

/// Discrete gradient used in the degenerate factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKind {
    /// One-sided magnitude oriented by the sign of the right-hand side.
    Upwind,
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub gamma: f64,
    pub eps_schedule: Vec<f64>,
    pub eta_schedule: Vec<f64>,
    /// Relaxation of the Picard update.
    pub damping: f64,
    pub residual_tol: f64,
    /// Iteration cap per stage, for either method.
    pub picard_max: usize,
    pub continuation_tol: f64,
    pub method: Method,
    /// Regularization of an extremal stage: `eps_k = eps_eta_ratio * eta_k`.
    pub eps_eta_ratio: f64,
    pub gradient: GradientKind,
}

/// `per_decade` points per decade from `start` down to `end`, both included.
pub fn geometric_schedule(start: f64, end: f64, per_decade: usize) -> Vec<f64> {
    let decades = (start / end).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=steps)
        .map(|k| start * (end / start).powf(k as f64 / steps as f64))
        .collect()
}

impl SolverConfig {
    pub fn new(gamma: f64) -> Self {
        SolverConfig {
            gamma,
            eps_schedule: geometric_schedule(1e-2, 1e-8, 3),
            eta_schedule: geometric_schedule(1e-2, 1e-8, 3),
            damping: 0.5,
            residual_tol: 1e-9,
            picard_max: 200,
            continuation_tol: 1e-4,
            method: Method::Newton,
            eps_eta_ratio: 1e-2,
            gradient: GradientKind::Upwind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", format!("gamma must be positive, got {}", self.gamma)));
        }
        for (name, sched) in [("eps_schedule", &self.eps_schedule), ("eta_schedule", &self.eta_schedule)] {
            if sched.is_empty() {
                return Err(Error::config(name, "schedule is empty"));
            }
            if sched.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::config(name, "entries must be positive and finite"));
            }
            if sched.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::config(name, "schedule must be strictly decreasing"));
            }
            if sched[sched.len() - 1] > 1e-6 * sched[0] {
                return Err(Error::config(name, "schedule must decrease to at most 1e-6 times its first entry"));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config("damping", "damping must lie in (0,1]"));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::config("residual_tol", "tolerance must be positive"));
        }
        if !(self.continuation_tol > 0.0) {
            return Err(Error::config("continuation_tol", "tolerance must be positive"));
        }
        if self.picard_max == 0 {
            return Err(Error::config("picard_max", "need at least one iteration"));
        }
        if !(self.eps_eta_ratio > 0.0 && self.eps_eta_ratio.is_finite()) {
            return Err(Error::config("eps_eta_ratio", "ratio must be positive"));
        }
        Ok(())
    }

    fn scheme(&self, at_zero: Bias) -> GradientScheme {
        match self.gradient {
            GradientKind::Upwind => GradientScheme::Upwind { at_zero },
            GradientKind::Central => GradientScheme::Central,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Harmonic,
    Regularized,
    Degenerate,
    Maximal,
    Minimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Maximal,
    Minimal,
}

impl Side {
    /// Bias of the gradient where the limiting right-hand side vanishes.
    pub fn bias(self) -> Bias {
        match self {
            Side::Maximal => Bias::Concave,
            Side::Minimal => Bias::Convex,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: GridFunction,
    pub kind: SolutionKind,
    pub residual_sup: f64,
    pub iterations: usize,
    pub final_eps: f64,
    pub final_eta: f64,
    pub converged: bool,
    pub gamma: f64,
    /// Gradient used by the residual of this solution.
    pub scheme: GradientScheme,
    /// Right-hand side at the interior nodes.
    pub rhs: Vec<f64>,
    /// Sup-norm change between consecutive continuation stages.
    pub continuation_steps: Vec<f64>,
    /// Largest violation of the expected monotone ordering of the stages.
    pub monotonicity_violation: f64,
}

impl Solution {
    /// Recomputes the residual of the equation this solution claims to solve.
    pub fn recompute_residual(&self, disc: &Discretization) -> Result<f64> {
        match self.kind {
            SolutionKind::Harmonic => linear_residual(disc, &self.u, &self.rhs),
            SolutionKind::Regularized => {
                regularized_residual(disc, &self.u, self.gamma, self.final_eps, &self.rhs, self.scheme)
            }
            _ => residual_degenerate(disc, &self.u, self.gamma, &self.rhs, self.scheme),
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn check_rhs(disc: &Discretization, f: &[f64]) -> Result<()> {
    if f.len() != disc.grid().n_interior() {
        return Err(Error::invalid(format!(
            "right-hand side has {} entries, grid has {} interior nodes",
            f.len(),
            disc.grid().n_interior()
        )));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("right-hand side is not finite"));
    }
    Ok(())
}

/// Gradient magnitudes and active stencils at the interior nodes.
fn gradients(disc: &Discretization, v: &[f64], f: &[f64], scheme: GradientScheme) -> (Vec<f64>, Vec<Stencil>) {
    let h = disc.grid().h();
    disc.grid()
        .interior()
        .zip(f)
        .map(|(j, &fi)| gradient_magnitude(v[j - 1], v[j], v[j + 1], h, scheme, fi))
        .unzip()
}

fn linear_residual(disc: &Discretization, u: &GridFunction, f: &[f64]) -> Result<f64> {
    let lu = disc.apply_interior(u)?;
    Ok(sup_diff(&lu, f))
}

fn regularized_residual(
    disc: &Discretization,
    u: &GridFunction,
    gamma: f64,
    eps: f64,
    f: &[f64],
    scheme: GradientScheme,
) -> Result<f64> {
    check_rhs(disc, f)?;
    let lu = disc.apply_interior(u)?;
    let (p, _) = gradients(disc, u.values(), f, scheme);
    Ok((0..lu.len())
        .map(|i| ((eps + p[i].powf(gamma)) * lu[i] - f[i]).abs())
        .fold(0.0, f64::max))
}

/// `sup_i | |D_h u|^gamma Delta_h^s u - f |` over interior nodes.
pub fn residual_degenerate(
    disc: &Discretization,
    u: &GridFunction,
    gamma: f64,
    f: &[f64],
    scheme: GradientScheme,
) -> Result<f64> {
    regularized_residual(disc, u, gamma, 0.0, f, scheme)
}

enum LinearSolver {
    Dense(NegCholesky),
    Iterative,
}

/// Shared state for all solves with one discretization.
struct Problem<'a> {
    disc: &'a Discretization,
    /// Exterior datum with zero interior.
    base: GridFunction,
    load: Vec<f64>,
    matrix: Option<Mat<f64>>,
    linear: Option<LinearSolver>,
}

impl<'a> Problem<'a> {
    fn new(disc: &'a Discretization) -> Result<Self> {
        let base = sample_function(disc.grid(), disc.datum(), 0.0)?;
        let load = disc.exterior_load(&base)?;
        Ok(Problem {
            disc,
            base,
            load,
            matrix: None,
            linear: None,
        })
    }

    fn n(&self) -> usize {
        self.disc.grid().n_interior()
    }

    fn dense(&self) -> bool {
        self.n() <= DENSE_LIMIT
    }

    fn full(&self, interior: &[f64]) -> GridFunction {
        let mut u = self.base.clone();
        u.set_interior(interior);
        u
    }

    fn matrix(&mut self) -> &Mat<f64> {
        let n = self.n();
        let spec = self.disc.spec();
        self.matrix.get_or_insert_with(|| linalg::interior_matrix(spec, n))
    }

    /// Solves `Delta_h^s v = rhs` for the interior values of `v`.
    fn solve_linear(&mut self, rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        if self.linear.is_none() {
            self.linear = Some(if self.dense() {
                LinearSolver::Dense(NegCholesky::new(self.disc.spec(), self.n())?)
            } else {
                LinearSolver::Iterative
            });
        }
        let b: Vec<f64> = rhs.iter().zip(&self.load).map(|(r, l)| r - l).collect();
        match self.linear.as_ref().expect("initialised above") {
            LinearSolver::Dense(chol) => chol.solve(&b),
            LinearSolver::Iterative => {
                let disc = self.disc;
                linalg::cg_negative(|x| disc.interior_matvec(x), &b, guess, 1e-13, 20 * self.n())
            }
        }
    }

    /// Residual vector of the regularized equation and the data for its Jacobian.
    fn evaluate(&self, interior: &[f64], f: &[f64], eps: f64, gamma: f64, scheme: GradientScheme) -> Stage {
        let u = self.full(interior);
        // with the interior matrix at hand this is a dense product instead
        // of a sum over the whole truncated lattice
        let lu = match &self.matrix {
            Some(a) => linalg::matvec(a, interior).iter().zip(&self.load).map(|(x, l)| x + l).collect(),
            None => self.disc.apply_values(u.values()),
        };
        let (p, stencils) = gradients(self.disc, u.values(), f, scheme);
        let residual = (0..lu.len())
            .map(|i| (eps + p[i].powf(gamma)) * lu[i] - f[i])
            .collect();
        Stage {
            residual,
            lu,
            p,
            stencils,
        }
    }

    /// One regularized solve, accepted once the residual is at most `tol`.
    fn stage(
        &mut self,
        u: &mut Vec<f64>,
        f: &[f64],
        eps: f64,
        cfg: &SolverConfig,
        scheme: GradientScheme,
        tol: f64,
    ) -> Result<StageOutcome> {
        let method = if self.dense() { cfg.method } else { Method::Picard };
        if method == Method::Newton {
            self.matrix();
        }
        let mut trial = u.clone();
        let out = match method {
            Method::Newton => self.newton(&mut trial, f, eps, cfg, scheme, tol),
            Method::Picard => self.picard(&mut trial, f, eps, cfg, scheme, tol),
        }?;
        *u = trial;
        Ok(out)
    }

    /// Moves a converged stage at `from = (eta, eps)` to `to` along the
    /// geometric segment between them, starting with the fraction `step` of
    /// the segment, doubling it after each converged stage and halving it
    /// after each failed one. `rhs(eta)` is the right-hand side.
    /// Intermediate points only serve as warm starts and are solved to
    /// `auxiliary_tol`.
    #[allow(clippy::too_many_arguments)]
    fn path(
        &mut self,
        u: &mut Vec<f64>,
        from: (f64, f64),
        to: (f64, f64),
        rhs: &dyn Fn(f64) -> Vec<f64>,
        cfg: &SolverConfig,
        scheme: GradientScheme,
        step: f64,
    ) -> Result<usize> {
        let min_step = 0.5f64.powi(MAX_BISECTIONS as i32);
        let (mut t, mut dt, mut iterations) = (0.0, step, 0);
        loop {
            let next = (t + dt).min(1.0);
            let (at, tol) = if next >= 1.0 {
                (to, cfg.residual_tol)
            } else {
                let at = (from.0 * (to.0 / from.0).powf(next), from.1 * (to.1 / from.1).powf(next));
                (at, auxiliary_tol(cfg, at.1))
            };
            match self.stage(u, &rhs(at.0), at.1, cfg, scheme, tol) {
                Ok(out) => {
                    iterations += out.iterations;
                    if next >= 1.0 {
                        return Ok(iterations);
                    }
                    t = next;
                    dt *= 2.0;
                }
                Err(Error::NonConvergence { .. }) if dt > min_step => dt *= 0.5,
                Err(e) => return Err(e),
            }
        }
    }

    /// Converges the first stage `to`, if need be by lowering the
    /// regularization from `START_EPS_FACTOR * to.eps`, where the equation is
    /// nearly linear.
    fn first_stage(
        &mut self,
        u: &mut Vec<f64>,
        to: (f64, f64),
        rhs: &dyn Fn(f64) -> Vec<f64>,
        cfg: &SolverConfig,
        scheme: GradientScheme,
    ) -> Result<usize> {
        if let Ok(out) = self.stage(u, &rhs(to.0), to.1, cfg, scheme, cfg.residual_tol) {
            return Ok(out.iterations);
        }
        let start = (to.0, START_EPS_FACTOR * to.1);
        let first = self.stage(u, &rhs(start.0), start.1, cfg, scheme, auxiliary_tol(cfg, start.1))?;
        Ok(first.iterations + self.path(u, start, to, rhs, cfg, scheme, 0.25)?)
    }

    /// Stage target: the acceptance tolerance, tightened for tiny right-hand sides.
    fn target(f: &[f64], tol: f64) -> f64 {
        let fmin = f.iter().map(|v| v.abs()).filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        tol.min(1e-2 * fmin).max(1e-13)
    }

    /// Jacobian of `G = Delta_h^s u - phi(p)` with `phi(p) = f / (eps + p^gamma)`.
    ///
    /// With `secant`, `phi'(p)` is replaced by the slope of the chord to the
    /// gradient `p*` that would balance the current `Delta_h^s u`, and flat
    /// nodes use the stencil that opens first. The exact derivative is
    /// unbounded at `p = 0` for `gamma < 1` and vanishes on flat nodes, and
    /// either stalls Newton where the solution must develop a corner.
    fn jacobian(&mut self, st: &Stage, f: &[f64], eps: f64, gamma: f64, secant: bool) -> Mat<f64> {
        let h = self.disc.grid().h();
        let n = st.p.len();
        let mut jac = self.matrix().clone();
        for i in 0..n {
            let p = st.p[i];
            let phi = f[i] / (eps + p.powf(gamma));
            let balance = f[i] / st.lu[i] - eps;
            let chord = (secant && st.lu[i] != 0.0 && balance > 0.0)
                .then(|| balance.powf(1.0 / gamma))
                .filter(|target| (target - p).abs() > 1e-12 * (1.0 + p))
                .map(|target| (phi - st.lu[i]) / (target - p));
            let coef = match chord {
                Some(c) => c,
                None => {
                    let denom = eps + p.powf(gamma);
                    f[i] * gamma * p.max(1e-14).powf(gamma - 1.0) / (denom * denom)
                }
            };
            let mut add = |col: isize, d: f64| {
                if col >= 0 && (col as usize) < n {
                    jac[(i, col as usize)] += coef * d;
                }
            };
            let one_sided = match st.stencils[i] {
                Stencil::Flat { next } if chord.is_some() => Some(next),
                Stencil::Flat { .. } => None,
                Stencil::OneSided { off, coef } => Some((off, coef)),
                Stencil::Central { sign } => {
                    add(i as isize + 1, sign / (2.0 * h));
                    add(i as isize - 1, -sign / (2.0 * h));
                    None
                }
            };
            if let Some((off, c)) = one_sided {
                add(i as isize + off, c / h);
                add(i as isize, -c / h);
            }
        }
        jac
    }

    fn newton(
        &mut self,
        u: &mut Vec<f64>,
        f: &[f64],
        eps: f64,
        cfg: &SolverConfig,
        scheme: GradientScheme,
        tol: f64,
    ) -> Result<StageOutcome> {
        let gamma = cfg.gamma;
        let target = Self::target(f, tol);
        let mut st = self.evaluate(u, f, eps, gamma, scheme);
        let mut norm = l2(&scaled_residual(&st, f, eps, gamma));
        let mut history = vec![sup(&st.residual)];
        for it in 0..cfg.picard_max {
            let res = sup(&st.residual);
            if res <= target {
                return Ok(StageOutcome { iterations: it, residual: res });
            }
            // Newton on G = Delta_h^s u - f / (eps + p^gamma), which has the
            // same roots and an M-matrix Jacobian for the upwind gradient;
            // the exact Jacobian is the fallback when the secant step fails.
            let g = scaled_residual(&st, f, eps, gamma);
            let minus_g: Vec<f64> = g.iter().map(|r| -r).collect();
            let mut accepted = None;
            for secant in [true, false] {
                let jac = self.jacobian(&st, f, eps, gamma, secant);
                let step = linalg::lu_solve(&jac, &minus_g)?;
                let mut t = 1.0;
                accepted = loop {
                    let trial: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x + t * d).collect();
                    let cand = self.evaluate(&trial, f, eps, gamma, scheme);
                    let cn = l2(&scaled_residual(&cand, f, eps, gamma));
                    if cn < (1.0 - 1e-4 * t) * norm {
                        break Some((trial, cand, cn));
                    }
                    t *= 0.5;
                    if t < 1e-3 {
                        break None;
                    }
                };
                if accepted.is_some() {
                    break;
                }
            }
            match accepted {
                Some((trial, cand, cn)) => {
                    *u = trial;
                    st = cand;
                    norm = cn;
                    history.push(sup(&st.residual));
                }
                None => break,
            }
            // give up early on a stalled stage; the caller shortens the step
            let k = history.len();
            if k > STALL_WINDOW && history[k - 1] > 0.9 * history[k - 1 - STALL_WINDOW] {
                break;
            }
        }
        let res = sup(&st.residual);
        if res <= tol {
            return Ok(StageOutcome {
                iterations: history.len() - 1,
                residual: res,
            });
        }
        Err(Error::NonConvergence {
            iterations: history.len() - 1,
            last: res,
            history,
        })
    }

    fn picard(
        &mut self,
        u: &mut [f64],
        f: &[f64],
        eps: f64,
        cfg: &SolverConfig,
        scheme: GradientScheme,
        tol: f64,
    ) -> Result<StageOutcome> {
        let gamma = cfg.gamma;
        let target = Self::target(f, tol);
        let mut history = Vec::new();
        for it in 0..cfg.picard_max {
            let st = self.evaluate(u, f, eps, gamma, scheme);
            let res = sup(&st.residual);
            history.push(res);
            if res <= target {
                return Ok(StageOutcome { iterations: it, residual: res });
            }
            let rhs: Vec<f64> = (0..u.len()).map(|i| f[i] / (eps + st.p[i].powf(gamma))).collect();
            let v = self.solve_linear(&rhs, u)?;
            for (x, y) in u.iter_mut().zip(&v) {
                *x = (1.0 - cfg.damping) * *x + cfg.damping * y;
            }
        }
        let res = sup(&self.evaluate(u, f, eps, gamma, scheme).residual);
        if res <= tol {
            return Ok(StageOutcome {
                iterations: cfg.picard_max,
                residual: res,
            });
        }
        Err(Error::NonConvergence {
            iterations: cfg.picard_max,
            last: res,
            history,
        })
    }
}

struct Stage {
    residual: Vec<f64>,
    lu: Vec<f64>,
    p: Vec<f64>,
    stencils: Vec<Stencil>,
}

fn scaled_residual(st: &Stage, f: &[f64], eps: f64, gamma: f64) -> Vec<f64> {
    (0..f.len())
        .map(|i| st.lu[i] - f[i] / (eps + st.p[i].powf(gamma)))
        .collect()
}

/// Acceptance tolerance of warm-start stages; the residual scales with `1 + eps`.
fn auxiliary_tol(cfg: &SolverConfig, eps: f64) -> f64 {
    cfg.residual_tol.max(1e-6 * (1.0 + eps))
}

/// Newton iterations over which the residual must drop by 10%.
const STALL_WINDOW: usize = 20;
/// Number of halvings after which a continuation step is abandoned.
const MAX_BISECTIONS: usize = 10;
/// Regularization of the auxiliary start of a continuation, relative to its first stage.
const START_EPS_FACTOR: f64 = 1e4;

struct StageOutcome {
    iterations: usize,
    residual: f64,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `Delta_h^s u = f` in the interval with `u = g` outside.
pub fn solve_linear_dirichlet(disc: &Discretization, f: &[f64]) -> Result<Solution> {
    check_rhs(disc, f)?;
    let mut prob = Problem::new(disc)?;
    let guess = vec![0.0; prob.n()];
    let interior = prob.solve_linear(f, &guess)?;
    let u = prob.full(&interior);
    let residual_sup = linear_residual(disc, &u, f)?;
    Ok(Solution {
        u,
        kind: SolutionKind::Harmonic,
        residual_sup,
        iterations: 1,
        final_eps: 0.0,
        final_eta: 0.0,
        converged: true,
        gamma: 0.0,
        scheme: GradientScheme::Central,
        rhs: f.to_vec(),
        continuation_steps: Vec::new(),
        monotonicity_violation: 0.0,
    })
}

fn initial_interior(prob: &mut Problem<'_>, f: &[f64], eps: f64, initial: Option<&GridFunction>) -> Result<Vec<f64>> {
    match initial {
        Some(u) => {
            if !u.grid().same_as(prob.disc.grid()) {
                return Err(Error::GridMismatch("initial guess lives on another grid".into()));
            }
            Ok(u.interior_values().to_vec())
        }
        None => {
            let rhs: Vec<f64> = f.iter().map(|v| v / eps.max(1.0)).collect();
            let guess = vec![0.0; prob.n()];
            prob.solve_linear(&rhs, &guess)
        }
    }
}

/// Solves `(eps + |D_h u|^gamma) Delta_h^s u = f` for one fixed `eps`.
pub fn solve_regularized(
    disc: &Discretization,
    cfg: &SolverConfig,
    eps: f64,
    f: &[f64],
    initial: Option<&GridFunction>,
) -> Result<Solution> {
    cfg.validate()?;
    check_rhs(disc, f)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let scheme = cfg.scheme(Bias::Convex);
    let mut prob = Problem::new(disc)?;
    let mut u = initial_interior(&mut prob, f, eps, initial)?;
    let out = prob.stage(&mut u, f, eps, cfg, scheme, cfg.residual_tol)?;
    let u = prob.full(&u);
    let residual_sup = regularized_residual(disc, &u, cfg.gamma, eps, f, scheme)?;
    Ok(Solution {
        u,
        kind: SolutionKind::Regularized,
        residual_sup,
        iterations: out.iterations,
        final_eps: eps,
        final_eta: 0.0,
        converged: out.residual <= cfg.residual_tol,
        gamma: cfg.gamma,
        scheme,
        rhs: f.to_vec(),
        continuation_steps: Vec::new(),
        monotonicity_violation: 0.0,
    })
}

/// Runs the regularized solve along `cfg.eps_schedule` with warm starts.
///
/// The whole schedule is traversed; the result is flagged converged when
/// every stage converged and the last stage moved the solution by at most
/// `continuation_tol`. A failing stage ends the run with the previous
/// iterate, flagged non-converged.
pub fn vanishing_viscosity(
    disc: &Discretization,
    cfg: &SolverConfig,
    f: &[f64],
    initial: Option<&GridFunction>,
) -> Result<Solution> {
    cfg.validate()?;
    check_rhs(disc, f)?;
    let scheme = cfg.scheme(Bias::Convex);
    let mut prob = Problem::new(disc)?;
    let mut u = initial_interior(&mut prob, f, cfg.eps_schedule[0], initial)?;
    let mut steps = Vec::new();
    let mut iterations = 0;
    let mut final_eps = cfg.eps_schedule[0];
    let mut stages_ok = true;
    let rhs = |_: f64| f.to_vec();
    let mut previous: Option<f64> = None;
    for &eps in &cfg.eps_schedule {
        let mut next = u.clone();
        let outcome = match previous {
            None => prob.first_stage(&mut next, (1.0, eps), &rhs, cfg, scheme),
            Some(prev) => prob.path(&mut next, (1.0, prev), (1.0, eps), &rhs, cfg, scheme, 1.0),
        };
        match outcome {
            Ok(its) => {
                iterations += its;
                if previous.is_some() {
                    steps.push(sup_diff(&next, &u));
                }
                u = next;
                final_eps = eps;
                previous = Some(eps);
            }
            Err(Error::NonConvergence { .. }) => {
                stages_ok = false;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let u = prob.full(&u);
    let residual_sup = residual_degenerate(disc, &u, cfg.gamma, f, scheme)?;
    let converged = stages_ok && steps.last().is_some_and(|&d| d <= cfg.continuation_tol);
    Ok(Solution {
        u,
        kind: SolutionKind::Degenerate,
        residual_sup,
        iterations,
        final_eps,
        final_eta: 0.0,
        converged,
        gamma: cfg.gamma,
        scheme,
        rhs: f.to_vec(),
        continuation_steps: steps,
        monotonicity_violation: 0.0,
    })
}

/// Maximal (`f = -eta`) or minimal (`f = +eta`) solution of the homogeneous
/// degenerate problem, by continuation in `eta` from the s-harmonic function.
///
/// Each stage uses `|D_h u|^gamma` with `eps = eps_eta_ratio * eta`.
pub fn extremal_solution(
    disc: &Discretization,
    cfg: &SolverConfig,
    side: Side,
    initial: Option<&GridFunction>,
) -> Result<Solution> {
    cfg.validate()?;
    let n = disc.grid().n_interior();
    let mut prob = Problem::new(disc)?;
    let mut u = match initial {
        Some(_) => initial_interior(&mut prob, &vec![0.0; n], 1.0, initial)?,
        None => prob.solve_linear(&vec![0.0; n], &vec![0.0; n])?,
    };
    let scheme = cfg.scheme(side.bias());
    let sign = match side {
        Side::Maximal => -1.0,
        Side::Minimal => 1.0,
    };
    let mut steps = Vec::new();
    let mut violation: f64 = 0.0;
    let mut iterations = 0;
    let mut final_eta = cfg.eta_schedule[0];
    let mut stages_ok = true;
    let mut previous: Option<Vec<f64>> = None;
    let mut final_stage: Option<f64> = None;
    let rhs = |eta: f64| vec![sign * eta; n];
    let ratio = cfg.eps_eta_ratio;
    for &eta in &cfg.eta_schedule {
        let mut next = u.clone();
        let outcome = match final_stage {
            None => prob.first_stage(&mut next, (eta, ratio * eta), &rhs, cfg, scheme),
            Some(prev) => prob.path(&mut next, (prev, ratio * prev), (eta, ratio * eta), &rhs, cfg, scheme, 1.0),
        };
        match outcome {
            Ok(its) => {
                iterations += its;
                if let Some(prev) = &previous {
                    steps.push(sup_diff(&next, prev));
                    // maximal iterates decrease as eta decreases, minimal ones increase
                    let worst = next
                        .iter()
                        .zip(prev)
                        .map(|(a, b)| match side {
                            Side::Maximal => a - b,
                            Side::Minimal => b - a,
                        })
                        .fold(0.0, f64::max);
                    violation = violation.max(worst);
                }
                previous = Some(next.clone());
                u = next;
                final_eta = eta;
                final_stage = Some(eta);
            }
            Err(Error::NonConvergence { .. }) => {
                stages_ok = false;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let u = prob.full(&u);
    let zero = vec![0.0; n];
    let residual_sup = residual_degenerate(disc, &u, cfg.gamma, &zero, scheme)?;
    let converged = stages_ok && steps.last().is_some_and(|&d| d <= cfg.continuation_tol);
    Ok(Solution {
        u,
        kind: match side {
            Side::Maximal => SolutionKind::Maximal,
            Side::Minimal => SolutionKind::Minimal,
        },
        residual_sup,
        iterations,
        final_eps: cfg.eps_eta_ratio * final_eta,
        final_eta,
        converged,
        gamma: cfg.gamma,
        scheme,
        rhs: zero,
        continuation_steps: steps,
        monotonicity_violation: violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ExteriorData, Grid1D};

    fn disc(n: usize, s: f64, g: ExteriorData) -> Discretization {
        let grid = Grid1D::new(-1.0, 1.0, n, 4.0).unwrap();
        Discretization::new(grid, s, 1e4, g).unwrap()
    }

    #[test]
    fn schedule_shape() {
        let s = geometric_schedule(1.0, 1e-6, 3);
        assert_eq!(s.len(), 19);
        assert!((s[18] - 1e-6).abs() < 1e-18);
        assert!(SolverConfig::new(1.0).validate().is_ok());
        let mut bad = SolverConfig::new(1.0);
        bad.eps_schedule = vec![1.0, 0.1];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn constants_are_harmonic() {
        let d = disc(60, 0.75, ExteriorData::constant(2.5));
        let sol = solve_linear_dirichlet(&d, &vec![0.0; 60]).unwrap();
        for &v in sol.u.interior_values() {
            assert!((v - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_regularized_equals_linear() {
        let d = disc(60, 0.75, ExteriorData::figure1(0.75));
        let zero = vec![0.0; 60];
        let lin = solve_linear_dirichlet(&d, &zero).unwrap();
        let reg = solve_regularized(&d, &SolverConfig::new(1.0), 0.1, &zero, None).unwrap();
        assert!(lin.u.interior_distance(&reg.u) < 1e-9);
    }

    #[test]
    fn picard_and_newton_agree() {
        let d = disc(80, 0.75, ExteriorData::constant(0.0));
        let f = vec![1.0; 80];
        let mut cfg = SolverConfig::new(1.0);
        let newton = solve_regularized(&d, &cfg, 0.5, &f, None).unwrap();
        cfg.method = Method::Picard;
        let picard = solve_regularized(&d, &cfg, 0.5, &f, None).unwrap();
        assert!(newton.converged && picard.converged);
        assert!(newton.u.interior_distance(&picard.u) < 1e-8);
    }

    #[test]
    fn limit_does_not_depend_on_the_schedule() {
        let d = disc(120, 0.75, ExteriorData::figure1(0.75));
        let f = vec![1.0; 120];
        for gamma in [0.5, 1.0] {
            let mut cfg = SolverConfig::new(gamma);
            let a = vanishing_viscosity(&d, &cfg, &f, None).unwrap();
            // starts inside the stiff range eps ~ 1 and takes other steps
            cfg.eps_schedule = geometric_schedule(1.0, 1e-8, 4);
            let b = vanishing_viscosity(&d, &cfg, &f, None).unwrap();
            assert!(a.converged && b.converged);
            assert!(a.u.interior_distance(&b.u) <= 2.0 * cfg.continuation_tol, "gamma {gamma}");
        }
    }

    #[test]
    fn recorded_residual_matches_recomputation() {
        let d = disc(80, 0.6, ExteriorData::two_solutions());
        let cfg = SolverConfig::new(1.0);
        let sol = extremal_solution(&d, &cfg, Side::Minimal, None).unwrap();
        let again = sol.recompute_residual(&d).unwrap();
        assert!((again - sol.residual_sup).abs() <= 1e-14);
        let base = sample_function(d.grid(), d.datum(), 0.0).unwrap();
        for j in d.grid().exterior() {
            assert_eq!(sol.u.values()[j].to_bits(), base.values()[j].to_bits());
        }
    }
}
