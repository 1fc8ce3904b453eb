//! Implicit Euler for `g(k * u) u_t + A u + beta(u) = 0`, the causal oracle
//! against which WED minimizers are compared.
//!
//! Each step solves `G (u - u_prev) / tau + A u + beta(u) = 0` by Newton's
//! method on the convex step energy
//! `|u - u_prev|_G^2 / (2 tau) + phi1(u) + phi2(u)` with `G` frozen. A set-valued
//! `beta` is replaced by its Yosida approximation with `lambda = tau`.

use crate::error::{Result, WedError};
use crate::grid::{StateVector, Trajectory};
use crate::linalg::Tridiagonal;
use crate::moreau_yosida::{d_phi2_lambda_scalar, phi2_lambda};
use crate::problem::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GEvaluation {
    /// Mobility evaluated at the previous state.
    #[default]
    Lagged,
    /// Mobility evaluated at the new state, by fixed-point iteration on `G`.
    Implicit,
}

impl GEvaluation {
    pub fn name(self) -> &'static str {
        match self {
            GEvaluation::Lagged => "lagged",
            GEvaluation::Implicit => "implicit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lagged" => Ok(GEvaluation::Lagged),
            "implicit" => Ok(GEvaluation::Implicit),
            other => Err(WedError::config(format!("unknown g evaluation '{other}' (expected lagged or implicit)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub steps: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub g_evaluation: GEvaluation,
}

impl StepperConfig {
    pub fn new(steps: usize) -> Self {
        StepperConfig { steps, newton_tol: 1e-11, newton_max: 50, g_evaluation: GEvaluation::Lagged }
    }

    pub fn with_g_evaluation(mut self, g_evaluation: GEvaluation) -> Self {
        self.g_evaluation = g_evaluation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(WedError::config("reference solver needs M >= 1"));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(WedError::config(format!("newton_tol must be positive, got {}", self.newton_tol)));
        }
        if self.newton_max < 1 {
            return Err(WedError::config("newton_max must be at least 1"));
        }
        Ok(())
    }
}

/// Trajectory plus per-step bookkeeping.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub trajectory: Trajectory,
    /// `phi1 + phi2` at every node (the regularized `phi2` when `beta` jumps).
    pub energies: Vec<f64>,
    pub newton_iterations: Vec<usize>,
}

fn mobility_at(inst: &ProblemInstance, u: &[f64]) -> Result<Vec<f64>> {
    let w = inst.convolve(u)?;
    Ok(w.iter().map(|&s| inst.dissipation.mobility.g(s)).collect())
}

/// `(value, derivative)` of the possibly regularized `beta` at every node.
fn beta_with_slope(inst: &ProblemInstance, u: &[f64], lambda_step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let pot = &inst.potential;
    let mut vals = Vec::with_capacity(u.len());
    let mut slopes = Vec::with_capacity(u.len());
    for &r in u {
        if pot.is_smooth() {
            vals.push(pot.beta(r)?);
            slopes.push(pot.dbeta(r));
        } else {
            let (v, s) = d_phi2_lambda_scalar(pot, r, lambda_step)?;
            vals.push(v);
            slopes.push(s);
        }
    }
    Ok((vals, slopes))
}

fn step_potential(inst: &ProblemInstance, u: &[f64], lambda_step: f64) -> Result<f64> {
    if inst.potential.is_smooth() {
        inst.phi2(u)
    } else {
        phi2_lambda(inst, u, lambda_step)
    }
}

struct FrozenStep<'a> {
    inst: &'a ProblemInstance,
    u_prev: &'a [f64],
    mob: Vec<f64>,
    tau: f64,
}

impl FrozenStep<'_> {
    fn residual(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let au = self.inst.apply_a(u)?;
        let (b, slope) = beta_with_slope(self.inst, u, self.tau)?;
        let f = (0..u.len())
            .map(|i| self.mob[i] * (u[i] - self.u_prev[i]) / self.tau + au[i] + b[i])
            .collect();
        Ok((f, slope))
    }

    fn energy(&self, u: &[f64]) -> Result<f64> {
        let h = self.inst.h();
        let kinetic: f64 =
            (0..u.len()).map(|i| self.mob[i] * (u[i] - self.u_prev[i]).powi(2)).sum::<f64>() * h / (2.0 * self.tau);
        Ok(kinetic + self.inst.phi1(u)? + step_potential(self.inst, u, self.tau)?)
    }

    /// Damped Newton from `start`; returns the solution and the iteration count.
    fn solve(&self, start: &[f64], tol: f64, max: usize) -> std::result::Result<(Vec<f64>, usize), String> {
        let inst = self.inst;
        let h = inst.h();
        let n = inst.n();
        let mut u = start.to_vec();
        let fail = |e: WedError| e.to_string();
        let (mut f, mut slope) = self.residual(&u).map_err(fail)?;
        let mut e = self.energy(&u).map_err(fail)?;
        for it in 0..max {
            let rn = inst.grid.norm(&f);
            if rn <= tol {
                return Ok((u, it));
            }
            let diag: Vec<f64> = (0..n).map(|i| self.mob[i] / self.tau + 2.0 / (h * h) + slope[i]).collect();
            let jac = Tridiagonal::symmetric(diag, -1.0 / (h * h)).map_err(fail)?;
            let delta = jac.solve(&f).map_err(fail)?;
            let mut t = 1.0;
            let mut next = None;
            for _ in 0..40 {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a - t * d).collect();
                let et = self.energy(&trial).map_err(fail)?;
                let (ft, st) = self.residual(&trial).map_err(fail)?;
                // near the solution the energy decrease is below roundoff; accept
                // by residual decrease instead
                if et <= e || inst.grid.norm(&ft) < rn {
                    next = Some((trial, ft, st, et));
                    break;
                }
                t *= 0.5;
            }
            let Some((un, fnew, snew, en)) = next else {
                return Err(format!("no descent after 40 halvings, residual {rn:.3e}"));
            };
            u = un;
            f = fnew;
            slope = snew;
            e = en;
        }
        let rn = inst.grid.norm(&f);
        if rn <= tol {
            Ok((u, max))
        } else {
            Err(format!("Newton did not converge in {max} iterations, residual {rn:.3e}"))
        }
    }
}

fn step_counted(
    u_prev: &[f64],
    t: f64,
    tau: f64,
    inst: &ProblemInstance,
    cfg: &StepperConfig,
) -> Result<(StateVector, usize)> {
    cfg.validate()?;
    if !(tau > 0.0) {
        return Err(WedError::config(format!("tau must be positive, got {tau}")));
    }
    inst.grid.check(u_prev)?;
    let fail = |diagnostics: String| WedError::StepFailure { t, diagnostics };
    let mut frozen = FrozenStep { inst, u_prev, mob: mobility_at(inst, u_prev)?, tau };
    let (mut u, mut total) = frozen.solve(u_prev, cfg.newton_tol, cfg.newton_max).map_err(fail)?;
    if cfg.g_evaluation == GEvaluation::Implicit {
        let mut converged = false;
        for _ in 0..100 {
            frozen.mob = mobility_at(inst, &u)?;
            let (next, its) = frozen.solve(&u, cfg.newton_tol, cfg.newton_max).map_err(fail)?;
            total += its;
            let change = inst.grid.distance(&next, &u);
            u = next;
            if change <= cfg.newton_tol * (1.0 + inst.grid.norm(&u)) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(fail("fixed-point iteration on the mobility did not converge".into()));
        }
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(fail("non-finite state".into()));
    }
    Ok((u.into(), total))
}

/// One implicit Euler step from `u_prev` at time `t - tau` to `t`.
pub fn step(u_prev: &[f64], tau: f64, inst: &ProblemInstance, cfg: &StepperConfig) -> Result<StateVector> {
    Ok(step_counted(u_prev, tau, tau, inst, cfg)?.0)
}

/// Steps from `u0` to the horizon and records the energy at every node. A
/// step that raises the energy is reported as a step failure.
pub fn solve_flow_detailed(inst: &ProblemInstance, cfg: &StepperConfig) -> Result<FlowSolution> {
    cfg.validate()?;
    let tau = inst.horizon / cfg.steps as f64;
    let energy = |u: &[f64]| -> Result<f64> { Ok(inst.phi1(u)? + step_potential(inst, u, tau)?) };
    let mut states = vec![inst.u0.clone()];
    let mut energies = vec![energy(&inst.u0)?];
    let mut newton_iterations = Vec::with_capacity(cfg.steps);
    for m in 1..=cfg.steps {
        let (u, its) = step_counted(&states[m - 1], m as f64 * tau, tau, inst, cfg)?;
        let e = energy(&u)?;
        let prev = energies[m - 1];
        if e > prev + 1e-12 * (1.0 + prev.abs()) {
            return Err(WedError::StepFailure {
                t: m as f64 * tau,
                diagnostics: format!("energy increased from {prev:.17e} to {e:.17e}"),
            });
        }
        energies.push(e);
        newton_iterations.push(its);
        states.push(u);
    }
    Ok(FlowSolution { trajectory: Trajectory::new(states, inst.horizon)?, energies, newton_iterations })
}

pub fn solve_flow(inst: &ProblemInstance, cfg: &StepperConfig) -> Result<Trajectory> {
    Ok(solve_flow_detailed(inst, cfg)?.trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::kernel::Kernel;
    use crate::models::{ConvexPotential, Mobility};
    use crate::problem::DissipationModel;

    fn heat(n: usize, potential: ConvexPotential, u0: impl Fn(&SpatialGrid) -> StateVector) -> ProblemInstance {
        let grid = SpatialGrid::unit(n).unwrap();
        let diss = DissipationModel::new(Mobility::unit(), 1.0, Kernel::delta(&grid)).unwrap();
        let u0 = u0(&grid);
        ProblemInstance::new(grid, diss, potential, u0, 1.0).unwrap()
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let inst = heat(6, ConvexPotential::linear(1.0).unwrap(), |g| g.zeros());
        let u = step(&inst.u0, 0.1, &inst, &StepperConfig::new(10)).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sine_mode_decays_by_the_scheme_factor() {
        let tau = 0.05;
        for a in [0.0, 1.0] {
            let pot = if a == 0.0 { ConvexPotential::zero() } else { ConvexPotential::linear(a).unwrap() };
            let inst = heat(9, pot, |g| g.sine_mode(1));
            let u = step(&inst.u0, tau, &inst, &StepperConfig::new(20)).unwrap();
            let factor = 1.0 / (1.0 + tau * (inst.grid.stencil_eigenvalue(1) + a));
            for (x, y) in u.iter().zip(inst.u0.iter()) {
                assert!((x - factor * y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn implicit_and_lagged_agree_for_constant_mobility() {
        let inst = heat(7, ConvexPotential::linear(2.0).unwrap(), |g| g.sample(|x| x * (1.0 - x)));
        let a = solve_flow(&inst, &StepperConfig::new(8)).unwrap();
        let b = solve_flow(&inst, &StepperConfig::new(8).with_g_evaluation(GEvaluation::Implicit)).unwrap();
        assert!(a.l2h_distance(&b, &inst.grid).unwrap() < 1e-12);
    }
}
