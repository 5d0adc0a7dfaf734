use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample_function, ExteriorData, GradientScheme, Grid1D, GridFunction};
use crate::operator::Discretization;
use crate::solver::{
    extremal_solution, residual_degenerate, solve_linear_dirichlet, Side, Solution, SolutionKind, SolverConfig,
};

use super::checks::check_ordering;
use super::oracles::oracle_us;

/// Sup distance above which two candidates count as different.
pub const DIST_TOL: f64 = 1e-2;
/// Residual every listed candidate must meet.
pub const MEMBERSHIP_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Figure1,
    TwoSolutions,
    FourSolutions,
    LinearUnique,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [
        CaseId::Figure1,
        CaseId::TwoSolutions,
        CaseId::FourSolutions,
        CaseId::LinearUnique,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Figure1 => "figure1",
            CaseId::TwoSolutions => "two_solutions",
            CaseId::FourSolutions => "four_solutions",
            CaseId::LinearUnique => "linear_unique",
        }
    }

    /// Exterior datum of the case; the linear case uses `g(x) = x`.
    pub fn datum(self, s: f64) -> ExteriorData {
        match self {
            CaseId::Figure1 => ExteriorData::figure1(s),
            CaseId::TwoSolutions => ExteriorData::two_solutions(),
            CaseId::FourSolutions => ExteriorData::four_solutions(),
            CaseId::LinearUnique => ExteriorData::linear(1.0, 0.0),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown case `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: String,
    pub solution: Solution,
    /// Residual of the homogeneous degenerate equation.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

impl Assertion {
    /// Passes when `value <= bound`; margin is `bound - value`.
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Assertion {
            name: name.to_string(),
            pass: value <= bound,
            margin: bound - value,
        }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Assertion {
            name: name.to_string(),
            pass: value >= bound,
            margin: value - bound,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiplicityReport {
    pub case_id: CaseId,
    pub s: f64,
    pub gamma: f64,
    pub n: usize,
    pub continuation_tol: f64,
    pub candidates: Vec<Candidate>,
    /// `pairwise[i][j]` is the interior sup distance of candidates `i` and `j`.
    pub pairwise: Vec<Vec<f64>>,
    pub distinct_count: usize,
    pub assertions: Vec<Assertion>,
}

impl MultiplicityReport {
    pub fn candidate(&self, label: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.label == label)
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn distance(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.candidates.iter().position(|c| c.label == a)?;
        let j = self.candidates.iter().position(|c| c.label == b)?;
        Some(self.pairwise[i][j])
    }
}

/// Number of candidates kept when each is accepted only if it is at least
/// `dist_tol` away from every candidate accepted before it.
pub fn distinct_count(pairwise: &[Vec<f64>], dist_tol: f64) -> usize {
    let mut kept: Vec<usize> = Vec::new();
    for (i, row) in pairwise.iter().enumerate() {
        if kept.iter().all(|&k| row[k] >= dist_tol) {
            kept.push(i);
        }
    }
    kept.len()
}

fn explicit_candidate(disc: &Discretization, label: &str, interior: f64, gamma: f64) -> Result<Candidate> {
    let u = sample_function(disc.grid(), disc.datum(), interior)?;
    let zero = vec![0.0; disc.grid().n_interior()];
    let residual = residual_degenerate(disc, &u, gamma, &zero, GradientScheme::Central)?;
    let solution = Solution {
        u,
        kind: SolutionKind::Degenerate,
        residual_sup: residual,
        iterations: 0,
        final_eps: 0.0,
        final_eta: 0.0,
        converged: true,
        gamma,
        scheme: GradientScheme::Central,
        rhs: zero,
        continuation_steps: Vec::new(),
        monotonicity_violation: 0.0,
    };
    Ok(Candidate {
        label: label.to_string(),
        solution,
        residual,
    })
}

fn solved_candidate(disc: &Discretization, label: &str, mut solution: Solution, gamma: f64) -> Result<Candidate> {
    let zero = vec![0.0; disc.grid().n_interior()];
    let residual = residual_degenerate(disc, &solution.u, gamma, &zero, solution.scheme)?;
    if solution.kind == SolutionKind::Harmonic {
        solution.gamma = gamma;
    }
    Ok(Candidate {
        label: label.to_string(),
        solution,
        residual,
    })
}

/// Computes the candidates of one example and evaluates its assertions.
pub fn run_multiplicity_experiment(
    case_id: CaseId,
    s: f64,
    gamma: f64,
    grid: &Grid1D,
    cfg: &SolverConfig,
    r_far: f64,
) -> Result<MultiplicityReport> {
    let cfg = SolverConfig { gamma, ..cfg.clone() };
    cfg.validate()?;
    let disc = Discretization::new(*grid, s, r_far, case_id.datum(s))?;
    let zero = vec![0.0; grid.n_interior()];
    let w = solve_linear_dirichlet(&disc, &zero)?;
    let maximal = extremal_solution(&disc, &cfg, Side::Maximal, Some(&w.u))?;
    let minimal = extremal_solution(&disc, &cfg, Side::Minimal, Some(&w.u))?;

    let mut candidates = vec![solved_candidate(&disc, "harmonic", w, gamma)?];
    match case_id {
        CaseId::Figure1 => candidates.push(explicit_candidate(&disc, "constant", 2f64.powf(s), gamma)?),
        CaseId::TwoSolutions | CaseId::FourSolutions => {
            candidates.push(explicit_candidate(&disc, "zero_extension", 0.0, gamma)?)
        }
        CaseId::LinearUnique => {}
    }
    candidates.push(solved_candidate(&disc, "maximal", maximal, gamma)?);
    candidates.push(solved_candidate(&disc, "minimal", minimal, gamma)?);

    let pairwise: Vec<Vec<f64>> = candidates
        .iter()
        .map(|a| candidates.iter().map(|b| a.solution.u.interior_distance(&b.solution.u)).collect())
        .collect();
    let distinct = distinct_count(&pairwise, DIST_TOL);

    let mut report = MultiplicityReport {
        case_id,
        s,
        gamma,
        n: grid.n_interior(),
        continuation_tol: cfg.continuation_tol,
        candidates,
        pairwise,
        distinct_count: distinct,
        assertions: Vec::new(),
    };
    report.assertions = assertions(&report, &disc)?;
    Ok(report)
}

fn get<'a>(report: &'a MultiplicityReport, label: &str) -> &'a GridFunction {
    &report.candidate(label).expect("candidate present").solution.u
}

fn assertions(report: &MultiplicityReport, disc: &Discretization) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    let grid = disc.grid();
    let tol = 2.0 * report.continuation_tol;
    for c in &report.candidates {
        out.push(Assertion::at_most(&format!("residual_{}", c.label), c.residual, MEMBERSHIP_TOL));
    }
    let (max, min) = (get(report, "maximal"), get(report, "minimal"));
    for c in &report.candidates {
        let v = check_ordering(min, &c.solution.u, max, tol)?;
        out.push(Assertion::at_least(&format!("ordering_{}", c.label), v.margin, 0.0));
    }
    let w = get(report, "harmonic");
    let dist = |a: &str, b: &str| report.distance(a, b).expect("candidate present");
    match report.case_id {
        CaseId::Figure1 => {
            let constant = report.candidate("constant").expect("candidate present");
            out.push(Assertion::at_most("constant_residual_exact", constant.residual, 0.0));
            let oracle = grid
                .interior()
                .map(|j| (max.values()[j] - oracle_us(report.s, grid.x(j))).abs())
                .fold(0.0, f64::max);
            out.push(Assertion::at_most("maximal_meets_us", oracle, 1e-2));
            out.push(Assertion::at_least("distinct_count", report.distinct_count as f64, 2.0));
        }
        CaseId::TwoSolutions => {
            let wmin = w.interior_values().iter().copied().fold(f64::INFINITY, f64::min);
            out.push(Assertion::at_least("harmonic_positive", wmin, 1e-3));
            out.push(Assertion::at_most("minimal_is_zero", min.interior_sup(), 1e-2));
        }
        CaseId::FourSolutions => {
            out.push(Assertion::at_least("distinct_count", report.distinct_count as f64, 4.0));
            let labels = ["harmonic", "zero_extension", "maximal", "minimal"];
            let mut closest = f64::INFINITY;
            for (i, a) in labels.iter().enumerate() {
                for b in &labels[i + 1..] {
                    closest = closest.min(dist(a, b));
                }
            }
            out.push(Assertion::at_least("pairwise_distance", closest, DIST_TOL));
            let vals = w.values();
            let len = vals.len();
            let odd = (0..len).map(|j| (vals[j] + vals[len - 1 - j]).abs()).fold(0.0, f64::max);
            out.push(Assertion::at_most("harmonic_odd", odd, 1e-6));
            let inside = w.interior_values();
            let lo = inside.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.push(Assertion::at_least("harmonic_sign_change", (-lo).min(hi), 1e-12));
            let below = grid
                .interior()
                .map(|j| w.values()[j] - min.values()[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let above = grid
                .interior()
                .map(|j| max.values()[j] - w.values()[j])
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(Assertion::at_least("minimal_below_harmonic_somewhere", below, tol));
            out.push(Assertion::at_least("maximal_above_harmonic_somewhere", above, tol));
        }
        CaseId::LinearUnique => {
            let spread = dist("maximal", "minimal")
                .max(dist("maximal", "harmonic"))
                .max(dist("minimal", "harmonic"));
            out.push(Assertion::at_most("extremals_coincide", spread, tol));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchingVerdict {
    pub pass: bool,
    pub maximal_touches: bool,
    pub minimal_touches: bool,
    pub extremals_touch: bool,
    pub touch_tol: f64,
}

/// Fraction of the interval length excluded next to each endpoint when
/// looking for touching points. All candidates share the boundary values of
/// the datum, so they approach each other there without touching in the
/// interior.
pub const TOUCH_MARGIN: f64 = 0.025;

/// If an extremal solution comes within `touch_tol` of the s-harmonic
/// function at an interior point it must coincide with it, and if the
/// extremals touch each other all three must coincide.
pub fn check_touching_criteria(report: &MultiplicityReport) -> TouchingVerdict {
    let touch_tol = 5.0 * report.continuation_tol;
    let harmonic = get(report, "harmonic");
    let grid = harmonic.grid();
    let margin = TOUCH_MARGIN * (grid.b() - grid.a());
    let inner: Vec<usize> = grid
        .interior()
        .filter(|&j| grid.x(j) - grid.a() >= margin && grid.b() - grid.x(j) >= margin)
        .map(|j| j - grid.interior().start)
        .collect();
    let w = harmonic.interior_values();
    let max = get(report, "maximal").interior_values();
    let min = get(report, "minimal").interior_values();
    let gap_min = |a: &[f64], b: &[f64]| inner.iter().map(|&i| a[i] - b[i]).fold(f64::INFINITY, f64::min);
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let maximal_touches = gap_min(max, w) <= touch_tol;
    let minimal_touches = gap_min(w, min) <= touch_tol;
    let extremals_touch = gap_min(max, min) <= touch_tol;
    let bound = 10.0 * touch_tol;
    let mut pass = true;
    if maximal_touches {
        pass &= sup(max, w) <= bound;
    }
    if minimal_touches {
        pass &= sup(min, w) <= bound;
    }
    if extremals_touch {
        pass &= sup(max, min) <= bound && sup(max, w) <= bound && sup(min, w) <= bound;
    }
    TouchingVerdict {
        pass,
        maximal_touches,
        minimal_touches,
        extremals_touch,
        touch_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_distinct_count() {
        let d = vec![
            vec![0.0, 0.5, 0.001],
            vec![0.5, 0.0, 0.5],
            vec![0.001, 0.5, 0.0],
        ];
        assert_eq!(distinct_count(&d, 1e-2), 2);
    }

    #[test]
    fn case_names_round_trip() {
        for c in CaseId::ALL {
            assert_eq!(c.name().parse::<CaseId>().unwrap(), c);
        }
        assert!("five".parse::<CaseId>().is_err());
    }
}
