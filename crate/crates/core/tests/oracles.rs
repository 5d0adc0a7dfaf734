use fracdeg::analysis::{
    barrier_check, calibrate_power_constant, check_comparison, check_strong_max, oracle_us, power_beta,
    power_constant, power_kappa_exact, run_multiplicity_experiment, CaseId,
};
use fracdeg::{
    build_operator, c_norm, extremal_solution, residual_degenerate, sample_function, solve_linear_dirichlet,
    tail_integral, Discretization, ExteriorData, GradientScheme, Grid1D, GridFunction, Side, SolverConfig, TailSpec,
};

const R_FAR: f64 = 1e4;

/// `int_{z0}^inf phi(z) z^{-1-2s} dz` through `z = z0 tau^{-1/s}` and the
/// composite midpoint rule with one Richardson step. The midpoint rule never
/// touches `tau = 0`, where the integrand only has a limit.
fn reference_moment(phi: impl Fn(f64) -> f64, s: f64, z0: f64) -> f64 {
    let integrand = |tau: f64| tau * phi(z0 * tau.powf(-1.0 / s));
    let midpoint = |m: usize| {
        let h = 1.0 / m as f64;
        (0..m).map(|k| integrand((k as f64 + 0.5) * h)).sum::<f64>() * h
    };
    let (coarse, fine) = (midpoint(1 << 19), midpoint(1 << 20));
    let value = fine + (fine - coarse) / 3.0;
    value * z0.powf(-2.0 * s) / s
}

#[test]
fn figure1_tail_matches_independent_quadrature() {
    let s = 0.75;
    let grid = Grid1D::new(-1.0, 1.0, 2000, 8.0).unwrap();
    let spec = build_operator(s, &grid, R_FAR).unwrap();
    let tail = TailSpec::new(ExteriorData::figure1(s), &spec, 1e-12).unwrap();
    let computed = tail_integral(&tail, &spec, 0.0, 2.0).unwrap();
    let phi = |z: f64| oracle_us(s, z) + oracle_us(s, -z) - 4.0;
    let reference = c_norm(s) * reference_moment(phi, s, spec.z0());
    assert!(
        (computed.value - reference).abs() <= 1e-8,
        "{} vs {reference}",
        computed.value
    );
}

#[test]
fn calibrated_kappa_matches_closed_form() {
    let s = 0.75;
    let gamma = 1.0;
    let grid = Grid1D::new(-1.0, 1.0, 16000, 2.0).unwrap();
    let cal = calibrate_power_constant(gamma, s, &grid, R_FAR).unwrap();
    let exact = power_kappa_exact(s, power_beta(s, gamma));
    assert!(cal.spread <= 1e-2, "spread {}", cal.spread);
    assert!((cal.kappa - exact).abs() <= 1e-2 * exact, "{} vs {exact}", cal.kappa);
    let c_exact = power_constant(cal.beta, gamma, exact);
    assert!((cal.constant - c_exact).abs() <= 1e-2 * c_exact);
}

#[test]
fn calibration_rejects_degenerate_exponent() {
    let grid = Grid1D::new(-1.0, 1.0, 100, 2.0).unwrap();
    assert!(calibrate_power_constant(0.0, 0.75, &grid, R_FAR).is_err());
}

#[test]
fn figure1_harmonic_solve_approaches_us() {
    let s = 0.75;
    let mut errors = Vec::new();
    for n in [250, 500, 1000] {
        let grid = Grid1D::new(-1.0, 1.0, n, 8.0).unwrap();
        let disc = Discretization::new(grid, s, R_FAR, ExteriorData::figure1(s)).unwrap();
        let sol = solve_linear_dirichlet(&disc, &vec![0.0; n]).unwrap();
        errors.push(
            grid.interior()
                .map(|j| (sol.u.values()[j] - oracle_us(s, grid.x(j))).abs())
                .fold(0.0, f64::max),
        );
    }
    assert!(errors.windows(2).all(|e| e[1] < e[0]), "{errors:?}");
    assert!(errors[2] <= 1e-2);
}

#[test]
fn constant_data_give_constant_extremals() {
    let grid = Grid1D::new(-1.0, 1.0, 60, 2.0).unwrap();
    let disc = Discretization::new(grid, 0.6, R_FAR, ExteriorData::constant(1.5)).unwrap();
    let cfg = SolverConfig::new(1.0);
    for side in [Side::Maximal, Side::Minimal] {
        let sol = extremal_solution(&disc, &cfg, side, None).unwrap();
        assert!(sol.converged);
        assert!(sol.u.interior_values().iter().all(|v| (v - 1.5).abs() <= 2.0 * cfg.continuation_tol));
        let verdict = check_strong_max(&sol, disc.datum(), R_FAR, cfg.continuation_tol);
        assert!(verdict.pass && !verdict.vacuous);
    }
}

#[test]
fn strong_max_flags_a_bumped_constant() {
    let grid = Grid1D::new(-1.0, 1.0, 60, 2.0).unwrap();
    let disc = Discretization::new(grid, 0.6, R_FAR, ExteriorData::constant(1.0)).unwrap();
    let cfg = SolverConfig::new(1.0);
    let mut sol = extremal_solution(&disc, &cfg, Side::Maximal, None).unwrap();
    let j = grid.interior().start + 30;
    sol.u.values_mut()[j] += 0.5;
    assert!(!check_strong_max(&sol, disc.datum(), R_FAR, cfg.continuation_tol).pass);
}

#[test]
fn comparison_locates_a_corrupted_node() {
    let grid = Grid1D::new(-1.0, 1.0, 50, 2.0).unwrap();
    let u = GridFunction::from_fn(grid, |x| x * x).unwrap();
    assert!(check_comparison(&u, &u, 1e-9).unwrap().pass);
    let mut v = u.clone();
    let j = grid.interior().start + 10;
    v.values_mut()[j] -= 1.0;
    let verdict = check_comparison(&u, &v, 1e-9).unwrap();
    assert!(!verdict.pass);
    assert_eq!(verdict.location, Some(grid.x(j)));
}

#[test]
fn constant_candidate_has_zero_residual() {
    let s = 0.75;
    let grid = Grid1D::new(-1.0, 1.0, 300, 8.0).unwrap();
    let disc = Discretization::new(grid, s, R_FAR, ExteriorData::figure1(s)).unwrap();
    let mut v = sample_function(&grid, disc.datum(), 0.0).unwrap();
    v.set_interior(&vec![2f64.powf(s); grid.n_interior()]);
    let zero = vec![0.0; grid.n_interior()];
    for scheme in [GradientScheme::Central, GradientScheme::Upwind { at_zero: fracdeg::Bias::Concave }] {
        assert_eq!(residual_degenerate(&disc, &v, 1.0, &zero, scheme).unwrap(), 0.0);
    }
}

#[test]
fn barrier_is_negative_on_the_unit_ball() {
    for s in [0.6, 0.75, 0.9] {
        let b = barrier_check(s, 4.0, 1.0, 2.0, 400).unwrap();
        assert!(b.pass && b.max_value < 0.0, "s {s}: {}", b.max_value);
    }
}

#[test]
fn linear_data_have_a_unique_solution() {
    let grid = Grid1D::new(-1.0, 1.0, 200, 8.0).unwrap();
    let report = run_multiplicity_experiment(CaseId::LinearUnique, 0.75, 1.0, &grid, &SolverConfig::new(1.0), R_FAR)
        .unwrap();
    assert!(report.passed(), "{:?}", report.assertions);
    assert_eq!(report.distinct_count, 1);
}

#[test]
fn two_solution_example_at_moderate_resolution() {
    let grid = Grid1D::new(-1.0, 1.0, 300, 8.0).unwrap();
    let report = run_multiplicity_experiment(CaseId::TwoSolutions, 0.75, 1.0, &grid, &SolverConfig::new(1.0), R_FAR)
        .unwrap();
    assert!(report.passed(), "{:?}", report.assertions);
    assert!(report.distinct_count >= 2);
}
