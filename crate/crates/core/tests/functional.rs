mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wed_core::functional::{chain_rule_check, el_residual, wed_gradient, wed_penalized_value, wed_value};
use wed_core::optimizer::{minimize, Init, OptimizeConfig};
use wed_core::*;

#[test]
fn constant_trajectory_reduces_to_weighted_energy() {
    let inst = heat(8);
    let phi1 = inst.phi1(&inst.u0).unwrap();
    let eps = 0.3;
    for steps in [16usize, 100_000] {
        let traj = Trajectory::constant(&inst.u0, steps, 1.0).unwrap();
        let v = wed_value(&traj, &inst, &WedConfig::new(eps, 0.0, steps).unwrap()).unwrap();
        assert_eq!(v.dissipation_part, 0.0);
        assert_eq!(v.phi2_part, 0.0);
        let tau = 1.0 / steps as f64;
        let weights: f64 = (1..=steps).map(|m| tau * (-(m as f64) * tau / eps).exp()).sum();
        assert!((v.phi1_part - phi1 * weights).abs() <= 1e-12 * v.phi1_part);
        // rectangle rule on a decreasing integrand: error below tau * (f(0) - f(T))
        let exact = eps * (1.0 - (-1.0 / eps).exp()) * phi1;
        assert!((v.phi1_part - exact).abs() <= tau * phi1);
    }
}

#[test]
fn zero_data_gives_zero_value_gradient_and_residual() {
    let inst = instance(6, Mobility::quadratic(), 1.0, gaussian, ConvexPotential::linear(2.0).unwrap(), zero);
    let cfg = WedConfig::new(0.25, 0.0, 10).unwrap();
    let traj = Trajectory::constant(&inst.u0, 10, 1.0).unwrap();
    assert_eq!(wed_value(&traj, &inst, &cfg).unwrap().total, 0.0);
    assert!(wed_gradient(&traj, &inst, &cfg).unwrap().flat().iter().all(|&g| g == 0.0));
    let el = el_residual(&traj, &inst, &cfg).unwrap();
    assert!(el.residual_norms.iter().all(|&r| r == 0.0));
    assert_eq!(el.terminal_xi_norm, 0.0);
}

#[test]
fn value_matches_direct_summation() {
    let inst = kirchhoff(10);
    let traj = random_trajectory(&inst, 12, 3, 0.8);
    for eps in [0.2, 0.4] {
        let v = wed_value(&traj, &inst, &WedConfig::new(eps, 0.0, 12).unwrap()).unwrap();
        let tau = traj.tau();
        let mut total = 0.0;
        for m in 1..=12 {
            let w = tau * (-(m as f64) * tau / eps).exp();
            let u = traj.state(m);
            total += w * (eps * inst.psi(u, &traj.rate(m)).unwrap() + inst.phi1(u).unwrap() + inst.phi2(u).unwrap());
        }
        assert!((v.total - total).abs() <= 1e-13 * total, "{} vs {total}", v.total);
        assert!((v.dissipation_part + v.phi1_part + v.phi2_part - v.total).abs() <= 1e-14 * v.total);
    }
}

#[test]
fn gradient_matches_differences_per_node() {
    let inst = instance(8, Mobility::unit(), 1.0, delta, ConvexPotential::linear(1.0).unwrap(), sine);
    let cfg = WedConfig::new(0.25, 0.0, 8).unwrap();
    let traj = random_trajectory(&inst, 8, 9, 1.0);
    let grad = wed_gradient(&traj, &inst, &cfg).unwrap();
    let x0 = traj.free_values();
    let step = 1e-6;
    let f = |x: &[f64]| {
        let mut t = traj.clone();
        t.set_free_values(x).unwrap();
        wed_value(&t, &inst, &cfg).unwrap().total
    };
    let n = inst.n();
    for m in 1..=8 {
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let k = (m - 1) * n + i;
                let (mut p, mut q) = (x0.clone(), x0.clone());
                p[k] += step;
                q[k] -= step;
                (f(&p) - f(&q)) / (2.0 * step) / inst.h()
            })
            .collect();
        let g = grad.node(m);
        let rel = h_norm(&inst.grid, &fd, g) / inst.grid.norm(g);
        assert!(rel <= 1e-6, "node {m}: {rel:e}");
    }
}

#[test]
fn directional_derivative_is_second_order_consistent() {
    let inst = kirchhoff(8);
    let cfg = WedConfig::new(0.2, 0.05, 10).unwrap();
    let traj = random_trajectory(&inst, 10, 4, 0.5);
    let grad = wed_gradient(&traj, &inst, &cfg).unwrap().flat();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dir: Vec<f64> = (0..grad.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let exact: f64 = inst.h() * grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
    let x0 = traj.free_values();
    let central = |s: f64| {
        let shifted = |sign: f64| {
            let x: Vec<f64> = x0.iter().zip(&dir).map(|(x, d)| x + sign * s * d).collect();
            let mut t = traj.clone();
            t.set_free_values(&x).unwrap();
            wed_value(&t, &inst, &cfg).unwrap().total
        };
        (shifted(1.0) - shifted(-1.0)) / (2.0 * s)
    };
    let e1 = (central(1e-2) - exact).abs();
    let e2 = (central(5e-3) - exact).abs();
    let order = (e1 / e2).log2();
    assert!((1.8..2.2).contains(&order), "observed order {order}, errors {e1:e} {e2:e}");
}

#[test]
fn residual_at_optimizer_output_scales_with_tau() {
    let inst = kirchhoff(16);
    let opt = OptimizeConfig::default();
    let mut consts = Vec::new();
    for steps in [32usize, 64, 128] {
        let rep = minimize(&inst, &WedConfig::new(0.25, 0.0, steps).unwrap(), &opt, &Init::ConstantU0).unwrap();
        assert!(rep.converged);
        let tau = 1.0 / steps as f64;
        consts.push(rep.el.residual_l2 / (opt.g_tol / tau + tau));
    }
    let (lo, hi) = consts.iter().fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi / lo < 2.0, "residual constants {consts:?}");
}

#[test]
fn penalized_value_adds_weighted_distance() {
    let inst = kirchhoff(6);
    let cfg = WedConfig::new(0.3, 0.0, 8).unwrap();
    let traj = random_trajectory(&inst, 8, 1, 0.6);
    let base = wed_value(&traj, &inst, &cfg).unwrap().total;
    assert_eq!(wed_penalized_value(&traj, &traj, &inst, &cfg).unwrap(), base);

    let anchor = random_trajectory(&inst, 8, 2, 0.6);
    let tau = traj.tau();
    let penalty: f64 = (1..=8)
        .map(|m| {
            let w = tau * (-(m as f64) * tau / 0.3).exp();
            0.5 * w * h_norm(&inst.grid, traj.state(m), anchor.state(m)).powi(2)
        })
        .sum();
    let got = wed_penalized_value(&traj, &anchor, &inst, &cfg).unwrap();
    assert!((got - base - penalty).abs() <= 1e-13 * got);
}

#[test]
fn chain_rule_defect_of_constant_trajectory_vanishes() {
    let inst = kirchhoff(8);
    let traj = Trajectory::constant(&inst.u0, 12, 1.0).unwrap();
    assert_eq!(chain_rule_check(&traj, &inst, &WedConfig::new(0.3, 0.0, 12).unwrap()).unwrap(), 0.0);
}

#[test]
fn chain_rule_defect_for_constant_mobility_is_the_rate_jump() {
    // g = 1: psi = |r|^2/2, the defect at node m is |r_m - r_{m-1}|^2 / (2 tau)
    let inst = heat(10);
    let traj = random_trajectory(&inst, 9, 6, 1.0);
    let got = chain_rule_check(&traj, &inst, &WedConfig::new(0.3, 0.0, 9).unwrap()).unwrap();
    let want = (2..=9)
        .map(|m| h_norm(&inst.grid, &traj.rate(m), &traj.rate(m - 1)).powi(2) / (2.0 * traj.tau()))
        .fold(0.0, f64::max);
    assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
}

#[test]
fn inadmissible_trajectories_are_rejected() {
    let inst = heat(6);
    let cfg = WedConfig::new(0.3, 0.0, 4).unwrap();
    let mut traj = Trajectory::constant(&inst.u0, 4, 1.0).unwrap();
    traj.state_mut(0)[2] += 1e-15;
    assert!(wed_value(&traj, &inst, &cfg).unwrap_err().is_configuration());
    let wrong_steps = Trajectory::constant(&inst.u0, 5, 1.0).unwrap();
    assert!(wed_value(&wrong_steps, &inst, &cfg).unwrap_err().is_configuration());
    assert!(WedConfig::new(0.0, 0.0, 4).is_err());
    assert!(WedConfig::new(0.1, -1.0, 4).is_err());
}
