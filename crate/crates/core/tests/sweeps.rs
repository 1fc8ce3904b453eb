mod common;

use common::*;
use wed_core::assumptions::verify_assumptions;
use wed_core::experiments::{causal_sweep, lambda_sweep, BuiltinInstance, SweepSettings, SWEEP_HEADER};
use wed_core::optimizer::OptimizeConfig;
use wed_core::reference::solve_flow;
use wed_core::*;

#[test]
fn heat_errors_decrease_with_epsilon() {
    let inst = heat(16);
    let eps = [0.5, 0.25, 0.125, 0.0625];
    let run = causal_sweep(&inst, &eps, 0.0, &OptimizeConfig::default(), &SweepSettings::new(64)).unwrap();
    assert_eq!(run.table.rows.len(), eps.len());
    let errs: Vec<f64> = run.table.rows.iter().map(|r| r.err_l2h).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(run.table.log_slope().unwrap() > 0.0);

    let reference = solve_flow(&inst, &SweepSettings::new(64).reference).unwrap();
    assert_eq!(run.target, reference);

    let csv = run.table.to_csv(false);
    assert_eq!(csv.lines().next().unwrap(), SWEEP_HEADER);
    assert_eq!(csv.lines().count(), eps.len() + 1);
}

#[test]
fn zero_datum_has_zero_error() {
    let inst = instance(8, Mobility::unit(), 1.0, delta, ConvexPotential::zero(), zero);
    let run = causal_sweep(&inst, &[0.05], 0.0, &OptimizeConfig::default(), &SweepSettings::new(16)).unwrap();
    assert_eq!(run.table.rows.len(), 1);
    assert_eq!(run.table.rows[0].err_l2h, 0.0);
    assert_eq!(run.table.rows[0].err_final, 0.0);
}

#[test]
fn cold_and_warm_sweeps_agree() {
    let inst = kirchhoff(12);
    let eps = [0.5, 0.25, 0.125];
    let mut settings = SweepSettings::new(24);
    let warm = causal_sweep(&inst, &eps, 0.0, &OptimizeConfig::default(), &settings).unwrap();
    settings.warm_start = false;
    let cold = causal_sweep(&inst, &eps, 0.0, &OptimizeConfig::default(), &settings).unwrap();
    for (w, c) in warm.table.rows.iter().zip(&cold.table.rows) {
        assert!((w.err_l2h - c.err_l2h).abs() <= 1e-7, "{} vs {}", w.err_l2h, c.err_l2h);
    }
}

#[test]
fn lambda_sweep_approaches_the_unregularized_minimizer() {
    let inst = kirchhoff(16);
    let run = lambda_sweep(&inst, 0.25, &[0.1, 0.01, 0.0], &OptimizeConfig::default(), &SweepSettings::new(32)).unwrap();
    let errs: Vec<f64> = run.table.rows.iter().map(|r| r.err_l2h).collect();
    assert_eq!(errs[2], 0.0);
    assert!(errs[1] < errs[0], "{errs:?}");
    assert_eq!(run.successive.len(), 2);
}

#[test]
fn lambda_only_touches_phi1_for_zero_beta() {
    let inst = heat(16);
    let run = lambda_sweep(&inst, 0.25, &[0.1, 0.01, 0.001], &OptimizeConfig::default(), &SweepSettings::new(32)).unwrap();
    assert!(run.successive.windows(2).all(|w| w[1] < w[0]), "{:?}", run.successive);
    let single = lambda_sweep(&inst, 0.25, &[0.1], &OptimizeConfig::default(), &SweepSettings::new(32)).unwrap();
    assert_eq!(single.table.rows.len(), 1);
}

#[test]
fn bad_sweep_lists_are_configuration_errors() {
    let inst = BuiltinInstance::BoundedSign.build(8).unwrap();
    let opt = OptimizeConfig::default();
    let s = SweepSettings::new(16);
    assert!(causal_sweep(&inst, &[0.1, 0.2], 0.01, &opt, &s).unwrap_err().is_configuration());
    assert!(causal_sweep(&inst, &[], 0.01, &opt, &s).unwrap_err().is_configuration());
    assert!(lambda_sweep(&inst, 0.25, &[0.1, 0.0], &opt, &s).unwrap_err().is_configuration());
}

#[test]
fn non_converged_rows_are_flagged() {
    let inst = kirchhoff(12);
    let opt = OptimizeConfig { max_iters: 1, ..OptimizeConfig::default() };
    let run = causal_sweep(&inst, &[0.5, 0.25], 0.0, &opt, &SweepSettings::new(24)).unwrap();
    assert!(run.table.rows.iter().all(|r| !r.converged && r.failure.is_none()));
}

#[test]
fn constant_mobility_has_vanishing_mobility_checks() {
    let inst = BuiltinInstance::Heat.build(16).unwrap();
    let rep = verify_assumptions(&inst, 1.5, 200, 1).unwrap();
    for name in ["c5_R", "c6_R", "c8_R", "c9_R"] {
        assert_eq!(rep.record(name).unwrap().worst_ratio, 0.0, "{name}");
    }
    assert!(rep.all_pass());
}

#[test]
fn kirchhoff_constants_and_monotonicity() {
    let inst = BuiltinInstance::Kirchhoff.build(16).unwrap();
    let rep = verify_assumptions(&inst, 2.0, 1000, 3).unwrap();
    assert_eq!(rep.constants.c4, 2.0);
    assert_eq!(rep.constants.c10, 1.0);
    assert_eq!(rep.constants.c12, 0.5);
    let c4 = rep.record("c4").unwrap();
    assert!(c4.pass && c4.constant_used == 2.0 && c4.sample_count == 1000);
    assert!(rep.record("c12_c13_R").unwrap().pass);
    assert!(rep.records.iter().all(|r| r.witness.is_none()));
    assert_eq!(rep, verify_assumptions(&inst, 2.0, 1000, 3).unwrap());
}

#[test]
fn inconsistent_mobility_data_is_caught_with_a_witness() {
    // g'' reported as zero while g' varies: the d1 psi Lipschitz check must fail
    let wrong = Mobility::new("wrong", |s| 1.0 + s * s, |s| 2.0 * s, |_| 0.0);
    let inst = instance(8, wrong, 1.0, gaussian, ConvexPotential::zero(), sine);
    let rep = verify_assumptions(&inst, 1.0, 100, 0).unwrap();
    let c6 = rep.record("c6_R").unwrap();
    assert!(!c6.pass && c6.worst_ratio.is_infinite());
    assert!(c6.witness.as_ref().is_some_and(|w| !w.is_empty()));
    assert!(!rep.all_pass());
    assert!(verify_assumptions(&inst, 1.0, 99, 0).unwrap_err().is_configuration());
}
