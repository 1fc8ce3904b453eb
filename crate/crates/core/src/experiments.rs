//! Parameter sweeps: `eps -> 0` against the implicit Euler reference and
//! `lambda -> 0` at fixed `eps`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Result, WedError};
use crate::functional::{ElResidual, WedConfig};
use crate::grid::{SpatialGrid, Trajectory};
use crate::kernel::Kernel;
use crate::models::{ConvexPotential, Mobility};
use crate::moreau_yosida::{phi1_lambda, phi2_lambda};
use crate::optimizer::{minimize, Init, OptimizeConfig, SolveReport};
use crate::problem::{DissipationModel, ProblemInstance};
use crate::reference::{solve_flow, StepperConfig};

pub const SWEEP_HEADER: &str = "epsilon,lambda,err_L2H,err_final,el_residual,terminal_xi,energy_slack,iterations,wall_time_s";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub lambda: f64,
    pub err_l2h: f64,
    pub err_final: f64,
    pub el_residual: f64,
    pub terminal_xi: f64,
    pub energy_slack: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub converged: bool,
    /// Set when the solve for this row failed; numeric fields are then NaN.
    pub failure: Option<String>,
}

impl SweepRow {
    fn failed(epsilon: f64, lambda: f64, err: &WedError) -> Self {
        SweepRow {
            epsilon,
            lambda,
            err_l2h: f64::NAN,
            err_final: f64::NAN,
            el_residual: f64::NAN,
            terminal_xi: f64::NAN,
            energy_slack: f64::NAN,
            iterations: 0,
            wall_time: 0.0,
            converged: false,
            failure: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV with 17 significant digits. Wall times are written as 0 unless
    /// `with_timing`, which keeps repeated runs byte-identical.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        for r in &self.rows {
            let wall = if with_timing { r.wall_time } else { 0.0 };
            out += &format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
                r.epsilon,
                r.lambda,
                r.err_l2h,
                r.err_final,
                r.el_residual,
                r.terminal_xi,
                r.energy_slack,
                r.iterations,
                wall
            );
        }
        out
    }

    /// Least-squares slope of `log err_L2H` against `log eps` over finite positive rows.
    pub fn log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.err_l2h > 0.0 && r.err_l2h.is_finite())
            .map(|r| (r.epsilon.ln(), r.err_l2h.ln()))
            .collect();
        fit_slope(&pts)
    }
}

pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub steps: usize,
    pub reference: StepperConfig,
    /// Warm-start each row from the previous minimizer; otherwise rows are
    /// independent cold starts and may run concurrently.
    pub warm_start: bool,
}

impl SweepSettings {
    pub fn new(steps: usize) -> Self {
        SweepSettings { steps, reference: StepperConfig::new(steps), warm_start: true }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub table: SweepTable,
    pub target: Trajectory,
    pub minimizers: Vec<Option<Trajectory>>,
    /// `lambda` sweeps only: L2(0,T;H) distance between consecutive minimizers.
    pub successive: Vec<f64>,
}

/// `phi_l(u0) - (sum_m tau (xi_m, rate_m) + phi_l(u_M))`; nonnegative when the
/// discrete energy estimate holds.
pub fn energy_slack(inst: &ProblemInstance, lambda: f64, traj: &Trajectory, el: &ElResidual) -> Result<f64> {
    let grid = &inst.grid;
    let tau = traj.tau();
    let mut dissipated = 0.0;
    for m in 1..=traj.steps() {
        dissipated += tau * grid.inner(&el.xi[m - 1], &traj.rate(m));
    }
    let energy = |u: &[f64]| -> Result<f64> { Ok(phi1_lambda(inst, u, lambda)? + phi2_lambda(inst, u, lambda)?) };
    Ok(energy(&inst.u0)? - (dissipated + energy(traj.last())?))
}

fn row_from(inst: &ProblemInstance, report: &SolveReport, target: &Trajectory) -> Result<SweepRow> {
    let grid = &inst.grid;
    Ok(SweepRow {
        epsilon: report.config.epsilon,
        lambda: report.config.lambda,
        err_l2h: report.minimizer.l2h_distance(target, grid)?,
        err_final: grid.distance(report.minimizer.last(), target.last()),
        el_residual: report.el.residual_l2,
        terminal_xi: report.el.terminal_xi_norm,
        energy_slack: energy_slack(inst, report.config.lambda, &report.minimizer, &report.el)?,
        iterations: report.iterations,
        wall_time: report.wall_time,
        converged: report.converged,
        failure: None,
    })
}

fn strictly_descending(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(WedError::config(format!("{what} list is empty")));
    }
    if values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(WedError::config(format!("{what} values must be strictly decreasing")));
    }
    Ok(())
}

/// Solves `cfgs` in order, warm-started or independently; a failed row keeps
/// its error and the next warm start falls back to the last good minimizer.
fn solve_rows(
    inst: &ProblemInstance,
    cfgs: &[WedConfig],
    opt: &OptimizeConfig,
    warm_start: bool,
) -> Vec<Result<SolveReport>> {
    if warm_start {
        let mut out: Vec<Result<SolveReport>> = Vec::with_capacity(cfgs.len());
        let mut last: Option<Trajectory> = None;
        for cfg in cfgs {
            let init = match &last {
                Some(t) => Init::Trajectory(t.clone()),
                None => Init::ConstantU0,
            };
            let res = minimize(inst, cfg, opt, &init);
            if let Ok(r) = &res {
                last = Some(r.minimizer.clone());
            }
            out.push(res);
        }
        return out;
    }
    #[cfg(feature = "parallel")]
    {
        cfgs.par_iter().map(|cfg| minimize(inst, cfg, opt, &Init::ConstantU0)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cfgs.iter().map(|cfg| minimize(inst, cfg, opt, &Init::ConstantU0)).collect()
    }
}

pub fn causal_sweep(
    inst: &ProblemInstance,
    epsilons: &[f64],
    lambda: f64,
    opt: &OptimizeConfig,
    settings: &SweepSettings,
) -> Result<SweepRun> {
    strictly_descending(epsilons, "epsilon")?;
    let cfgs = epsilons
        .iter()
        .map(|&e| WedConfig::new(e, lambda, settings.steps))
        .collect::<Result<Vec<_>>>()?;
    opt.validate()?;
    let mut reference_cfg = settings.reference;
    reference_cfg.steps = settings.steps;
    let reference = solve_flow(inst, &reference_cfg)?;
    let solved = solve_rows(inst, &cfgs, opt, settings.warm_start);
    let mut rows = Vec::with_capacity(cfgs.len());
    let mut minimizers = Vec::with_capacity(cfgs.len());
    for (cfg, res) in cfgs.iter().zip(solved) {
        match res {
            Ok(report) => {
                rows.push(row_from(inst, &report, &reference)?);
                minimizers.push(Some(report.minimizer));
            }
            Err(e) if e.is_configuration() => return Err(e),
            Err(e) => {
                rows.push(SweepRow::failed(cfg.epsilon, cfg.lambda, &e));
                minimizers.push(None);
            }
        }
    }
    Ok(SweepRun { table: SweepTable { rows }, target: reference, minimizers, successive: Vec::new() })
}

/// Rows measure the distance to the `lambda = 0` minimizer when `beta` is
/// smooth and to the smallest-`lambda` minimizer otherwise.
pub fn lambda_sweep(
    inst: &ProblemInstance,
    epsilon: f64,
    lambdas: &[f64],
    opt: &OptimizeConfig,
    settings: &SweepSettings,
) -> Result<SweepRun> {
    strictly_descending(lambdas, "lambda")?;
    let smooth = inst.potential.is_smooth();
    if !smooth && lambdas.contains(&0.0) {
        return Err(WedError::config("lambda = 0 needs a single-valued beta"));
    }
    let mut cfgs = lambdas
        .iter()
        .map(|&l| WedConfig::new(epsilon, l, settings.steps))
        .collect::<Result<Vec<_>>>()?;
    let extra_target = smooth && *lambdas.last().expect("non-empty") != 0.0;
    if extra_target {
        cfgs.push(WedConfig::new(epsilon, 0.0, settings.steps)?);
    }
    let mut solved = solve_rows(inst, &cfgs, opt, settings.warm_start);
    let target = if extra_target {
        cfgs.pop();
        solved.pop().expect("non-empty")?.minimizer
    } else {
        match solved.last().expect("non-empty") {
            Ok(r) => r.minimizer.clone(),
            Err(_) => return Err(solved.pop().expect("non-empty").expect_err("checked")),
        }
    };
    let grid = &inst.grid;
    let mut rows = Vec::with_capacity(cfgs.len());
    let mut minimizers: Vec<Option<Trajectory>> = Vec::with_capacity(cfgs.len());
    for (cfg, res) in cfgs.iter().zip(solved) {
        match res {
            Ok(report) => {
                rows.push(row_from(inst, &report, &target)?);
                minimizers.push(Some(report.minimizer));
            }
            Err(e) if e.is_configuration() => return Err(e),
            Err(e) => {
                rows.push(SweepRow::failed(cfg.epsilon, cfg.lambda, &e));
                minimizers.push(None);
            }
        }
    }
    let successive = minimizers
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Some(a), Some(b)) => a.l2h_distance(b, grid).unwrap_or(f64::NAN),
            _ => f64::NAN,
        })
        .collect();
    Ok(SweepRun { table: SweepTable { rows }, target, minimizers, successive })
}

/// Named instances used by the command line, the demo and the test suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinInstance {
    /// `g = 1`, point kernel, `beta = 0`.
    Heat,
    /// `g(s) = 1 + s^2`, gaussian kernel of width 0.1, `beta(r) = r`.
    Kirchhoff,
    /// `g(s) = 1/2 + 1 / (1 + s^2)`, gaussian kernel, `beta(r) = r + sign(r)`.
    BoundedSign,
}

impl BuiltinInstance {
    pub const ALL: [BuiltinInstance; 3] = [BuiltinInstance::Heat, BuiltinInstance::Kirchhoff, BuiltinInstance::BoundedSign];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinInstance::Heat => "heat",
            BuiltinInstance::Kirchhoff => "kirchhoff",
            BuiltinInstance::BoundedSign => "bounded-sign",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| WedError::config(format!("unknown built-in instance '{s}' (expected heat, kirchhoff or bounded-sign)")))
    }

    /// Unit interval, horizon 1, `u0` the first sine mode.
    pub fn build(self, n: usize) -> Result<ProblemInstance> {
        let grid = SpatialGrid::unit(n)?;
        let (mobility, alpha, kernel, potential) = match self {
            BuiltinInstance::Heat => (Mobility::unit(), 1.0, Kernel::delta(&grid), ConvexPotential::zero()),
            BuiltinInstance::Kirchhoff => {
                (Mobility::quadratic(), 1.0, Kernel::gaussian(&grid, 0.1)?, ConvexPotential::linear(1.0)?)
            }
            BuiltinInstance::BoundedSign => (
                Mobility::bounded(0.5),
                0.5,
                Kernel::gaussian(&grid, 0.1)?,
                ConvexPotential::linear_plus_sign(1.0, 1.0)?,
            ),
        };
        let u0 = grid.sine_mode(1);
        ProblemInstance::new(grid, DissipationModel::new(mobility, alpha, kernel)?, potential, u0, 1.0)
    }

    /// Smallest `lambda` at which the functional is differentiable.
    pub fn default_lambda(self) -> f64 {
        match self {
            BuiltinInstance::BoundedSign => 0.01,
            _ => 0.0,
        }
    }
}
