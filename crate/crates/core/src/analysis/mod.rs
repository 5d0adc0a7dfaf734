//! Oracles, exponent estimation, structural checks and the multiplicity
//! and stability experiments.

mod bench;
mod checks;
mod exponent;
mod multiplicity;
mod oracles;
mod power;
mod stability;
mod structural;

pub use checks::{
    barrier_check, barrier_datum, check_comparison, check_linf_bound, check_ordering, check_strong_max,
    exterior_sup, l1_2s_norm, BarrierCheck, Verdict,
};
pub use exponent::{critical_point, fit_exponent, geometric_radii, ExponentFit};
pub use multiplicity::{
    check_touching_criteria, distinct_count, run_multiplicity_experiment, Assertion, Candidate, CaseId,
    MultiplicityReport, TouchingVerdict, DIST_TOL, MEMBERSHIP_TOL,
};
pub use oracles::{
    calibrate_power_constant, oracle_us, power_beta, power_constant, power_kappa_exact, PowerCalibration,
    CALIBRATION_PROBES,
};
pub use power::{alpha_formula, default_radii, power_solution_study, PowerStudy};
pub use stability::{alternating_family, shifted_family, stability_experiment, StabilityReport};
pub use bench::{benchmark_fast_path, BenchRow};
pub use structural::{structural_suite, StructuralReport, SuiteItem, SuiteParams, LINF_CONSTANT};
