//! Browser bindings: reference flow, WED minimization and a causal sweep.
//!
//! Every entry point takes run-configuration text in the same `key = value`
//! format as the command line tool.

use wasm_bindgen::prelude::*;
use wed_core::config::RunConfig;
use wed_core::experiments::causal_sweep;
use wed_core::optimizer::{minimize, Init};
use wed_core::reference::solve_flow;
use wed_core::{Trajectory, WedError};

const PRESETS: [(&str, &str); 3] = [
    ("heat", include_str!("../../cli/instances/heat.cfg")),
    ("kirchhoff", include_str!("../../cli/instances/kirchhoff.cfg")),
    ("bounded-sign", include_str!("../../cli/instances/bounded-sign.cfg")),
];

fn js(e: WedError) -> JsError {
    JsError::new(&e.to_string())
}

/// Shipped instance file text, or an empty string for unknown names.
#[wasm_bindgen]
pub fn preset(name: &str) -> String {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| t.to_string()).unwrap_or_default()
}

/// Space-time field on the interior nodes, row `m` holding `u(t_m)`.
#[wasm_bindgen]
pub struct Field {
    nodes: Vec<f64>,
    times: Vec<f64>,
    values: Vec<f64>,
    reference: Vec<f64>,
    summary: String,
}

#[wasm_bindgen]
impl Field {
    pub fn nodes(&self) -> Vec<f64> {
        self.nodes.clone()
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// Row-major `(M + 1) x N` values.
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Reference flow on the same grid, empty when not computed.
    pub fn reference(&self) -> Vec<f64> {
        self.reference.clone()
    }

    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

fn flatten(t: &Trajectory) -> Vec<f64> {
    t.states().iter().flat_map(|s| s.iter().copied()).collect()
}

fn times(t: &Trajectory) -> Vec<f64> {
    (0..=t.steps()).map(|m| t.time(m)).collect()
}

/// Implicit Euler reference flow.
#[wasm_bindgen]
pub fn reference_flow(config: &str) -> Result<Field, JsError> {
    let cfg = RunConfig::parse(config).map_err(js)?;
    let inst = cfg.instance().map_err(js)?;
    let stepper = cfg.stepper().map_err(js)?;
    let traj = solve_flow(&inst, &stepper).map_err(js)?;
    let e0 = inst.energy(&inst.u0).map_err(js)?;
    let e1 = inst.energy(traj.last()).map_err(js)?;
    Ok(Field {
        nodes: inst.grid.nodes(),
        times: times(&traj),
        values: flatten(&traj),
        reference: Vec::new(),
        summary: format!("{} steps, energy {e0:.6} -> {e1:.6}", traj.steps()),
    })
}

/// Minimizer at `epsilon`, `lambda`, together with the reference flow.
#[wasm_bindgen]
pub fn minimize_wed(config: &str, epsilon: f64, lambda: f64) -> Result<Field, JsError> {
    let mut cfg = RunConfig::parse(config).map_err(js)?;
    cfg.set("wed.epsilon", &format!("{epsilon:e}")).map_err(js)?;
    cfg.set("wed.lambda", &format!("{lambda:e}")).map_err(js)?;
    let inst = cfg.instance().map_err(js)?;
    let rep = minimize(&inst, &cfg.wed().map_err(js)?, &cfg.optimize().map_err(js)?, &Init::ConstantU0).map_err(js)?;
    let reference = solve_flow(&inst, &cfg.stepper().map_err(js)?).map_err(js)?;
    let err = rep.minimizer.l2h_distance(&reference, &inst.grid).map_err(js)?;
    Ok(Field {
        nodes: inst.grid.nodes(),
        times: times(&rep.minimizer),
        values: flatten(&rep.minimizer),
        reference: flatten(&reference),
        summary: format!(
            "{}; W = {:.6e}, gradient norm {:.2e} after {} iterations{}; distance to reference {err:.4e}",
            rep.label,
            rep.value.total,
            rep.grad_norm,
            rep.iterations,
            if rep.converged { "" } else { " (not converged)" }
        ),
    })
}

/// Sweep CSV over `sweep.epsilons` (comma-separated override if non-empty).
#[wasm_bindgen]
pub fn causal_sweep_csv(config: &str, epsilons: &str) -> Result<String, JsError> {
    let mut cfg = RunConfig::parse(config).map_err(js)?;
    if !epsilons.trim().is_empty() {
        cfg.set("sweep.epsilons", epsilons).map_err(js)?;
    }
    let inst = cfg.instance().map_err(js)?;
    let run = causal_sweep(
        &inst,
        &cfg.epsilons().map_err(js)?,
        cfg.wed().map_err(js)?.lambda,
        &cfg.optimize().map_err(js)?,
        &cfg.sweep().map_err(js)?,
    )
    .map_err(js)?;
    Ok(run.table.to_csv(false))
}
