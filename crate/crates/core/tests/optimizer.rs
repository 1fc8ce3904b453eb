mod common;

use common::*;
use wed_core::experiments::BuiltinInstance;
use wed_core::optimizer::{continuation_minimize, minimize, Init, Method, OptimizeConfig, SOLUTION_LABEL};
use wed_core::*;

fn both_methods() -> [OptimizeConfig; 2] {
    [
        OptimizeConfig::default(),
        OptimizeConfig { method: Method::GradientDescentArmijo, max_iters: 20_000, ..OptimizeConfig::default() },
    ]
}

#[test]
fn zero_datum_is_already_optimal() {
    let inst = instance(8, Mobility::unit(), 1.0, delta, ConvexPotential::linear(1.0).unwrap(), zero);
    for opt in both_methods() {
        let rep = minimize(&inst, &WedConfig::new(0.25, 0.0, 16).unwrap(), &opt, &Init::ConstantU0).unwrap();
        assert!(rep.converged && rep.iterations <= 2);
        assert_eq!(rep.value.total, 0.0);
        assert!(rep.minimizer.states().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert_eq!(rep.label, SOLUTION_LABEL);
    }
}

#[test]
fn descent_and_admissibility_on_builtin_instances() {
    for b in BuiltinInstance::ALL {
        let inst = b.build(16).unwrap();
        let cfg = WedConfig::new(0.2, b.default_lambda(), 32).unwrap();
        for opt in both_methods() {
            let rep = minimize(&inst, &cfg, &opt, &Init::ConstantU0).unwrap();
            assert!(rep.converged, "{} {:?}", b.name(), opt.method);
            // descent holds to the roundoff of the value (a few ulps of the total)
            let slack = |f: f64| 8.0 * f64::EPSILON * f.abs();
            assert!(rep.value_history.windows(2).all(|w| w[1] <= w[0] + slack(w[0])), "{} {:?}", b.name(), opt.method);
            assert!(rep.value.total <= rep.value_history[0]);
            assert_eq!(rep.minimizer.state(0).as_slice(), inst.u0.as_slice());
            assert!(rep.grad_norm <= opt.g_tol);
        }
    }
}

#[test]
fn methods_agree_on_the_minimizer() {
    let inst = BuiltinInstance::Kirchhoff.build(12).unwrap();
    let cfg = WedConfig::new(0.25, 0.0, 24).unwrap();
    let [q, g] = both_methods().map(|opt| minimize(&inst, &cfg, &opt, &Init::ConstantU0).unwrap());
    let d = q.minimizer.l2h_distance(&g.minimizer, &inst.grid).unwrap();
    assert!(d < 1e-7, "{d:e}");
}

#[test]
fn quasi_newton_resolves_quadratic_instances() {
    let inst = instance(10, Mobility::unit(), 1.0, delta, ConvexPotential::linear(2.0).unwrap(), sine);
    let steps = 20;
    let opt = OptimizeConfig { g_tol: 1e-10, max_iters: 5 * steps * 10, ..OptimizeConfig::default() };
    let rep = minimize(&inst, &WedConfig::new(0.1, 0.0, steps).unwrap(), &opt, &Init::ConstantU0).unwrap();
    assert!(rep.converged && rep.grad_norm <= 1e-10);
}

#[test]
fn warm_start_from_a_given_trajectory() {
    let inst = BuiltinInstance::Kirchhoff.build(12).unwrap();
    let cfg = WedConfig::new(0.25, 0.0, 24).unwrap();
    let first = minimize(&inst, &cfg, &OptimizeConfig::default(), &Init::ConstantU0).unwrap();
    let again = minimize(&inst, &cfg, &OptimizeConfig::default(), &Init::Trajectory(first.minimizer.clone())).unwrap();
    assert!(again.iterations <= 1);

    let mut bad = first.minimizer.clone();
    bad.state_mut(0)[0] = 7.0;
    assert!(minimize(&inst, &cfg, &OptimizeConfig::default(), &Init::Trajectory(bad)).unwrap_err().is_configuration());
}

#[test]
fn continuation_orders_reports_and_reuses_minimizers() {
    let inst = BuiltinInstance::Kirchhoff.build(16).unwrap();
    let opt = OptimizeConfig::default();
    let single = continuation_minimize(&inst, &[WedConfig::new(0.5, 0.0, 32).unwrap()], &opt).unwrap();
    let direct = minimize(&inst, &WedConfig::new(0.5, 0.0, 32).unwrap(), &opt, &Init::ConstantU0).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].minimizer, direct.minimizer);
    assert_eq!(single[0].value, direct.value);

    let cfgs = [WedConfig::new(0.5, 0.0, 32).unwrap(), WedConfig::new(0.25, 0.0, 32).unwrap()];
    let reps = continuation_minimize(&inst, &cfgs, &opt).unwrap();
    assert_eq!(reps.iter().map(|r| r.config.epsilon).collect::<Vec<_>>(), vec![0.5, 0.25]);
    assert!(reps.iter().all(|r| r.value.total.is_finite() && r.converged));
    let cold = minimize(&inst, &cfgs[1], &opt, &Init::ConstantU0).unwrap();
    println!("eps 0.25: warm {} iterations, cold {}", reps[1].iterations, cold.iterations);

    let rising = [WedConfig::new(0.25, 0.0, 32).unwrap(), WedConfig::new(0.5, 0.0, 32).unwrap()];
    assert!(continuation_minimize(&inst, &rising, &opt).unwrap_err().is_configuration());
    let mixed = [WedConfig::new(0.5, 0.0, 32).unwrap(), WedConfig::new(0.25, 0.0, 16).unwrap()];
    assert!(continuation_minimize(&inst, &mixed, &opt).unwrap_err().is_configuration());
}

#[test]
fn identical_inputs_give_identical_reports() {
    let inst = BuiltinInstance::BoundedSign.build(16).unwrap();
    let cfg = WedConfig::new(0.2, 0.01, 32).unwrap();
    let opt = OptimizeConfig { seed: 42, ..OptimizeConfig::default() };
    let a = minimize(&inst, &cfg, &opt, &Init::ConstantU0).unwrap();
    let b = minimize(&inst, &cfg, &opt, &Init::ConstantU0).unwrap();
    assert_eq!(a.minimizer, b.minimizer);
    assert_eq!(a.value_history, b.value_history);
    assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
}

#[test]
fn iteration_limit_is_reported_not_hidden() {
    let inst = BuiltinInstance::Kirchhoff.build(16).unwrap();
    let opt = OptimizeConfig { max_iters: 2, ..OptimizeConfig::default() };
    let rep = minimize(&inst, &WedConfig::new(0.1, 0.0, 32).unwrap(), &opt, &Init::ConstantU0).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 2);
    assert!(rep.grad_norm > opt.g_tol);
}

#[test]
fn set_valued_beta_needs_regularization() {
    // u0 = 0 sits on the jump of beta, where no value is selected
    let sign = ConvexPotential::linear_plus_sign(1.0, 1.0).unwrap().with_selection(None);
    let inst = instance(8, Mobility::bounded(0.5), 0.5, gaussian, sign, zero);
    let cfg = WedConfig::new(0.2, 0.0, 8).unwrap();
    let err = minimize(&inst, &cfg, &OptimizeConfig::default(), &Init::ConstantU0).unwrap_err();
    assert!(matches!(err, WedError::SetValued { .. }), "{err}");
    let cfg = WedConfig::new(0.2, 0.01, 8).unwrap();
    assert!(minimize(&inst, &cfg, &OptimizeConfig::default(), &Init::ConstantU0).unwrap().converged);
}
