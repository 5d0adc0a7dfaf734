//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit status
//! if any criterion fails.

use std::time::Instant;

use fracdeg::analysis::{
    benchmark_fast_path, check_touching_criteria, oracle_us, power_solution_study, run_multiplicity_experiment,
    shifted_family, stability_experiment, structural_suite, CaseId, MultiplicityReport, SuiteParams, DIST_TOL,
    MEMBERSHIP_TOL,
};
use fracdeg::{solve_linear_dirichlet, Discretization, ExteriorData, Grid1D, GridFunction, SolverConfig};

const R_FAR: f64 = 1e4;
const R_TRUNC: f64 = 8.0;

struct Gate {
    failures: usize,
}

impl Gate {
    fn report(&mut self, id: usize, title: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} [{id:>2}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn run(&mut self, id: usize, title: &str, limit_seconds: f64, body: impl FnOnce() -> Result<(bool, String), String>) {
        let start = Instant::now();
        let outcome = body();
        let elapsed = start.elapsed().as_secs_f64();
        let timely = elapsed <= limit_seconds;
        match outcome {
            Ok((pass, detail)) => self.report(
                id,
                title,
                pass && timely,
                format!("{detail}; {elapsed:.1} s (limit {limit_seconds} s)"),
            ),
            Err(e) => self.report(id, title, false, format!("error: {e}; {elapsed:.1} s")),
        }
    }
}

fn grid(n: usize) -> Grid1D {
    Grid1D::new(-1.0, 1.0, n, R_TRUNC).expect("valid grid")
}

fn us_residual(n: usize) -> Result<f64, String> {
    let s = 0.75;
    let g = grid(n);
    let disc = Discretization::new(g, s, R_FAR, ExteriorData::figure1(s)).map_err(|e| e.to_string())?;
    let u = GridFunction::from_fn(g, |x| oracle_us(s, x)).map_err(|e| e.to_string())?;
    let lu = disc.apply_interior(&u).map_err(|e| e.to_string())?;
    Ok(g.interior()
        .zip(lu)
        .filter(|(j, _)| g.x(*j).abs() <= 0.9)
        .fold(0.0, |m, (_, v)| m.max(v.abs())))
}

fn harmonic_error(s: f64, n: usize) -> Result<f64, String> {
    let g = grid(n);
    let disc = Discretization::new(g, s, R_FAR, ExteriorData::figure1(s)).map_err(|e| e.to_string())?;
    let sol = solve_linear_dirichlet(&disc, &vec![0.0; n]).map_err(|e| e.to_string())?;
    Ok(g.interior()
        .map(|j| (sol.u.values()[j] - oracle_us(s, g.x(j))).abs())
        .fold(0.0, f64::max))
}

fn multiplicity(case: CaseId, n: usize) -> Result<MultiplicityReport, String> {
    run_multiplicity_experiment(case, 0.75, 1.0, &grid(n), &SolverConfig::new(1.0), R_FAR).map_err(|e| e.to_string())
}

fn residuals_ok(report: &MultiplicityReport) -> bool {
    report.candidates.iter().all(|c| c.residual <= MEMBERSHIP_TOL)
}

fn main() {
    let mut gate = Gate { failures: 0 };
    let cfg = SolverConfig::new(1.0);

    gate.run(1, "operator consistency on u_s", 5.0, || {
        let coarse = us_residual(2000)?;
        let fine = us_residual(4001)?;
        let ratio = coarse / fine;
        Ok((
            coarse <= 5e-3 && ratio >= 1.3,
            format!("sup |Delta_h u_s| on [-0.9,0.9] = {coarse:.3e} (<= 5e-3), halving h reduces it by {ratio:.2} (>= 1.3)"),
        ))
    });

    gate.run(2, "constant annihilation", 1.0, || {
        let mut worst = 0.0f64;
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            for n in [3, 10, 100, 1000] {
                let g = Grid1D::new(-1.0, 1.0, n, 2.0).map_err(|e| e.to_string())?;
                let disc = Discretization::new(g, s, R_FAR, ExteriorData::constant(1.0)).map_err(|e| e.to_string())?;
                let u = GridFunction::from_fn(g, |_| 1.0).map_err(|e| e.to_string())?;
                let lu = disc.apply_interior(&u).map_err(|e| e.to_string())?;
                worst = lu.iter().fold(worst, |m, v| m.max(v.abs()));
            }
        }
        Ok((worst == 0.0, format!("max |Delta_h 1| = {worst:e} over 20 (s, n) pairs")))
    });

    for s in [0.6, 0.75, 0.9] {
        gate.run(3, &format!("s-harmonic solve, s = {s}"), 30.0, || {
            let coarse = harmonic_error(s, 1000)?;
            let fine = harmonic_error(s, 2000)?;
            Ok((
                fine <= 1e-2 && fine < coarse,
                format!("sup |u - u_s| = {fine:.3e} at n = 2000 (<= 1e-2), {coarse:.3e} at n = 1000"),
            ))
        });
    }

    let calibration_grid = Grid1D::new(-1.0, 1.0, 16000, 2.0).expect("valid grid");
    let mut sweep = Vec::new();
    gate.run(4, "power solution reproduction", 300.0, || {
        let study = power_solution_study(0.75, &cfg, &grid(4000), &calibration_grid, R_FAR).map_err(|e| e.to_string())?;
        let line = (
            study.relative_error <= 1e-2 && study.converged,
            format!(
                "sup |u - C|x|^1.25| / sup |u| on [-0.5,0.5] = {:.3e} (<= 1e-2), C = {:.6}, converged {}",
                study.relative_error, study.calibration.constant, study.converged
            ),
        );
        sweep.push(study);
        Ok(line)
    });

    gate.run(5, "gradient exponent sweep", 1800.0, || {
        for s in [0.6, 0.75, 0.9] {
            for gamma in [0.5, 1.0, 2.0] {
                if s == 0.75 && gamma == 1.0 && !sweep.is_empty() {
                    continue;
                }
                let c = SolverConfig::new(gamma);
                let study = power_solution_study(s, &c, &grid(4000), &calibration_grid, R_FAR).map_err(|e| e.to_string())?;
                sweep.push(study);
            }
        }
        let mut worst = 0.0f64;
        let mut detail = Vec::new();
        for st in &sweep {
            worst = worst.max(st.alpha_relative_error);
            detail.push(format!(
                "(s {}, gamma {}) {:.4}/{:.4}",
                st.calibration.s, st.calibration.gamma, st.fit.alpha_hat, st.alpha_formula
            ));
        }
        Ok((
            sweep.len() == 9 && worst <= 0.05,
            format!("worst relative error {worst:.4} (<= 0.05); {}", detail.join(", ")),
        ))
    });

    gate.run(6, "multiplicity, figure1", 600.0, || {
        let coarse = multiplicity(CaseId::Figure1, 1000)?;
        let fine = multiplicity(CaseId::Figure1, 2000)?;
        let constant = fine.candidate("constant").ok_or("missing constant candidate")?;
        let maximal = &fine.candidate("maximal").ok_or("missing maximal candidate")?.solution.u;
        let g = maximal.grid();
        let oracle = g
            .interior()
            .map(|j| (maximal.values()[j] - oracle_us(0.75, g.x(j))).abs())
            .fold(0.0, f64::max);
        let d_fine = fine.distance("constant", "maximal").unwrap_or(0.0);
        let d_coarse = coarse.distance("constant", "maximal").unwrap_or(0.0);
        let stable = (d_fine - d_coarse).abs() <= 0.1 * d_fine;
        let pass = constant.residual == 0.0
            && oracle <= 1e-2
            && fine.distinct_count >= 2
            && coarse.distinct_count >= 2
            && d_fine >= DIST_TOL
            && stable;
        Ok((
            pass,
            format!(
                "constant residual {:e} (= 0), |max - u_s| = {oracle:.3e} (<= 1e-2), distinct {} / {} at n = 1000 / 2000 (>= 2), distance {d_coarse:.4} -> {d_fine:.4} (>= 1e-2, stable to 10%)",
                constant.residual, coarse.distinct_count, fine.distinct_count
            ),
        ))
    });

    gate.run(7, "multiplicity, two_solutions", 600.0, || {
        let report = multiplicity(CaseId::TwoSolutions, 2000)?;
        let w = report.candidate("harmonic").ok_or("missing harmonic")?;
        let wmin = w.solution.u.interior_values().iter().copied().fold(f64::INFINITY, f64::min);
        let minimal = report.candidate("minimal").ok_or("missing minimal")?.solution.u.interior_sup();
        Ok((
            wmin >= 1e-3 && minimal <= 1e-2,
            format!("min w = {wmin:.3e} (>= 1e-3), sup |minimal| = {minimal:.3e} (<= 1e-2)"),
        ))
    });

    gate.run(8, "multiplicity, four_solutions", 900.0, || {
        let report = multiplicity(CaseId::FourSolutions, 2000)?;
        let labels = ["harmonic", "zero_extension", "maximal", "minimal"];
        let mut closest = f64::INFINITY;
        for (i, a) in labels.iter().enumerate() {
            for b in &labels[i + 1..] {
                closest = closest.min(report.distance(a, b).ok_or("missing candidate")?);
            }
        }
        let w = &report.candidate("harmonic").ok_or("missing harmonic")?.solution.u;
        let v = w.values();
        let len = v.len();
        let oddness = w.grid().interior().map(|j| (v[j] + v[len - 1 - j]).abs()).fold(0.0, f64::max);
        let inside = w.interior_values();
        let sign_change = inside.iter().any(|&x| x > 0.0) && inside.iter().any(|&x| x < 0.0);
        let worst_residual = report.candidates.iter().map(|c| c.residual).fold(0.0, f64::max);
        Ok((
            closest >= DIST_TOL && residuals_ok(&report) && oddness <= 1e-6 && sign_change,
            format!(
                "closest pair {closest:.4} (>= 1e-2), worst residual {worst_residual:.3e} (<= 1e-4), oddness {oddness:.1e} (<= 1e-6), sign change {sign_change}"
            ),
        ))
    });

    gate.run(9, "uniqueness for linear data", 600.0, || {
        let report = multiplicity(CaseId::LinearUnique, 2000)?;
        let mut spread = 0.0f64;
        for (a, b) in [("maximal", "minimal"), ("maximal", "harmonic"), ("minimal", "harmonic")] {
            spread = spread.max(report.distance(a, b).ok_or("missing candidate")?);
        }
        let touching = check_touching_criteria(&report);
        Ok((
            spread <= 2e-4 && touching.pass,
            format!("mutual sup distance {spread:.3e} (<= 2e-4), touching verdict {}", touching.pass),
        ))
    });

    gate.run(10, "structural suite", 1800.0, || {
        let report = structural_suite(&SuiteParams::default(), &cfg).map_err(|e| e.to_string())?;
        let barrier = report
            .barrier
            .iter()
            .map(|b| format!("s {} max {:.3e}", b.s, b.max_value))
            .collect::<Vec<_>>()
            .join(", ");
        Ok((
            report.pass(),
            format!(
                "comparison {}/{} ok, strong max {}/{} ok, L-infinity {}/{} ok, ordering {}/{} ok, barrier [{barrier}]",
                report.comparison.checked - report.comparison.failures,
                report.comparison.checked,
                report.strong_max.checked - report.strong_max.failures,
                report.strong_max.checked,
                report.linf.checked - report.linf.failures,
                report.linf.checked,
                report.ordering.checked - report.ordering.failures,
                report.ordering.checked,
            ),
        ))
    });

    gate.run(11, "stability of maximal solutions", 1200.0, || {
        let g = ExteriorData::figure1(0.75);
        let family = shifted_family(&g, &[1, 2, 4, 8, 16]);
        let report = stability_experiment(&g, &family, 0.75, &grid(1000), &cfg, R_FAR).map_err(|e| e.to_string())?;
        let distances: Vec<String> = report.distances.iter().map(|d| format!("{d:.3e}")).collect();
        Ok((
            report.pass,
            format!(
                "distances [{}], decreasing {}, final {:.3e} (<= {:.1e})",
                distances.join(", "),
                report.decreasing,
                report.final_distance,
                report.tolerance
            ),
        ))
    });

    gate.run(12, "fast path equivalence and speed", 120.0, || {
        let mut worst = 0.0f64;
        for (k, n) in [50, 500, 2000].into_iter().enumerate() {
            for s in [0.3, 0.75] {
                worst = worst.max(benchmark_fast_path(n, s, 7 + k as u64, 1).map_err(|e| e.to_string())?.max_rel_diff);
            }
        }
        let row = benchmark_fast_path(4000, 0.75, 20240601, 3).map_err(|e| e.to_string())?;
        worst = worst.max(row.max_rel_diff);
        let speedup = row.direct_seconds / row.fast_seconds;
        Ok((
            worst <= 1e-12 && speedup >= 5.0,
            format!("max relative difference {worst:.2e} (<= 1e-12), n = 4000 speedup {speedup:.1}x (>= 5)"),
        ))
    });

    if gate.failures > 0 {
        println!("{} criteria failed", gate.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
