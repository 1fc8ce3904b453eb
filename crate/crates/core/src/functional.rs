//! The discrete weighted energy-dissipation functional
//!
//! ```text
//! W(u) = sum_{m=1..M} a_m eps psi(J u_m, (u_m - u_{m-1}) / tau) + b_m (phi1_l(u_m) + phi2_l(u_m))
//! ```
//!
//! over trajectories with `u_0` pinned to the initial datum, its exact gradient,
//! the Euler–Lagrange residual and two diagnostics. The dissipation weights
//! `a_m` and energy weights `b_m` discretize `exp(-t / eps)` and coincide for
//! the right-endpoint rule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{check_len, Result, WedError};
use crate::grid::{StateVector, Trajectory};
use crate::moreau_yosida::{phi2_lambda_with_gradient, RegularizationLevel, ResolventA};
use crate::problem::ProblemInstance;

/// Placement of the exponential weight on the time grid. Only the
/// right-endpoint rule `tau exp(-t_m / eps)` on every term at node `m` exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    RightEndpoint,
}

impl Quadrature {
    pub fn name(self) -> &'static str {
        match self {
            Quadrature::RightEndpoint => "right-endpoint",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "right-endpoint" => Ok(Quadrature::RightEndpoint),
            other => Err(WedError::config(format!("unknown quadrature '{other}' (expected right-endpoint)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedConfig {
    pub epsilon: f64,
    pub lambda: f64,
    pub steps: usize,
    pub quadrature: Quadrature,
}

impl WedConfig {
    pub fn new(epsilon: f64, lambda: f64, steps: usize) -> Result<Self> {
        let cfg = WedConfig { epsilon, lambda, steps, quadrature: Quadrature::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(WedError::config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        RegularizationLevel::new(self.lambda)?;
        if self.steps < 2 {
            return Err(WedError::config(format!("need M >= 2 time steps, got {}", self.steps)));
        }
        Ok(())
    }

    pub fn tau(&self, horizon: f64) -> f64 {
        horizon / self.steps as f64
    }

    /// `(a, b)`: dissipation and energy weights for nodes `0..=M` (entry 0 unused).
    pub fn weights(&self, horizon: f64) -> (Vec<f64>, Vec<f64>) {
        let tau = self.tau(horizon);
        let mut w = vec![0.0; self.steps + 1];
        match self.quadrature {
            Quadrature::RightEndpoint => {
                for (m, wm) in w.iter_mut().enumerate().skip(1) {
                    *wm = tau * (-(m as f64) * tau / self.epsilon).exp();
                }
            }
        }
        (w.clone(), w)
    }
}

/// The three summands of the functional after quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WedBreakdown {
    pub total: f64,
    pub dissipation_part: f64,
    pub phi1_part: f64,
    pub phi2_part: f64,
}

/// Gradient with respect to nodes `1..=M` as H-representers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGradient {
    pub nodes: Vec<StateVector>,
}

impl TrajectoryGradient {
    pub fn node(&self, m: usize) -> &StateVector {
        &self.nodes[m - 1]
    }

    pub fn flat(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|s| s.iter().copied()).collect()
    }
}

/// Euler–Lagrange quantities along a trajectory, nodes `1..=M` (vector index `m - 1`).
#[derive(Debug, Clone)]
pub struct ElResidual {
    pub xi: Vec<StateVector>,
    pub gamma: Vec<StateVector>,
    pub eta1: Vec<StateVector>,
    pub eta2: Vec<StateVector>,
    pub residual: Vec<StateVector>,
    pub residual_norms: Vec<f64>,
    pub xi_norms: Vec<f64>,
    pub residual_max: f64,
    pub residual_l2: f64,
    pub terminal_xi_norm: f64,
    pub tau: f64,
}

struct NodeEval {
    psi: f64,
    xi: Vec<f64>,
    gamma: Vec<f64>,
    phi1: f64,
    phi2: f64,
    eta1: Vec<f64>,
    eta2: Vec<f64>,
}

/// A functional bound to one instance and configuration.
#[derive(Debug, Clone)]
pub struct WedFunctional<'a> {
    inst: &'a ProblemInstance,
    cfg: WedConfig,
    tau: f64,
    resolvent: ResolventA,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> WedFunctional<'a> {
    pub fn new(inst: &'a ProblemInstance, cfg: WedConfig) -> Result<Self> {
        cfg.validate()?;
        let resolvent = ResolventA::new(&inst.grid, RegularizationLevel::new(cfg.lambda)?)?;
        let (a, b) = cfg.weights(inst.horizon);
        Ok(WedFunctional { inst, cfg, tau: cfg.tau(inst.horizon), resolvent, a, b })
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.inst
    }

    pub fn config(&self) -> &WedConfig {
        &self.cfg
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn resolvent(&self) -> &ResolventA {
        &self.resolvent
    }

    pub fn dissipation_weights(&self) -> &[f64] {
        &self.a
    }

    pub fn energy_weights(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.cfg.steps * self.inst.n()
    }

    /// Checks `states[0] = u0` bit for bit and the discretization.
    pub fn check_admissible(&self, traj: &Trajectory) -> Result<()> {
        if traj.steps() != self.cfg.steps {
            return Err(WedError::config(format!(
                "trajectory has {} steps, configuration expects {}",
                traj.steps(),
                self.cfg.steps
            )));
        }
        check_len(self.inst.n(), traj.space_len())?;
        if (traj.horizon() - self.inst.horizon).abs() > 1e-12 * self.inst.horizon {
            return Err(WedError::config("trajectory horizon differs from the instance horizon"));
        }
        if traj.state(0) != &self.inst.u0 {
            return Err(WedError::config("trajectory is not admissible: node 0 differs from u0"));
        }
        Ok(())
    }

    fn views<'t>(&'t self, traj: &'t Trajectory) -> Vec<&'t [f64]> {
        traj.states().iter().map(|s| s.as_slice()).collect()
    }

    /// Views of `u0, x_1, ..., x_M` for a flat vector of free nodes.
    pub(crate) fn flat_views<'t>(&'t self, x: &'t [f64]) -> Result<Vec<&'t [f64]>> {
        let n = self.inst.n();
        check_len(self.dim(), x.len())?;
        let mut v = Vec::with_capacity(self.cfg.steps + 1);
        v.push(self.inst.u0.as_slice());
        v.extend(x.chunks_exact(n));
        Ok(v)
    }

    fn eval_node(&self, states: &[&[f64]], m: usize, with_derivatives: bool) -> Result<NodeEval> {
        let inst = self.inst;
        let inv_tau = 1.0 / self.tau;
        let u = states[m];
        let rate: Vec<f64> = u.iter().zip(states[m - 1]).map(|(a, b)| (a - b) * inv_tau).collect();
        let (phi1, ju) = self.resolvent.phi1_lambda(u)?;
        let bundle = inst.psi_bundle(&ju, &rate)?;
        let (phi2, eta2) = phi2_lambda_with_gradient(inst, u, self.cfg.lambda)?;
        let (gamma, eta1) = if with_derivatives {
            let eta1 = if self.cfg.lambda == 0.0 {
                crate::problem::apply_stencil(inst.h(), u)
            } else {
                u.iter().zip(&ju).map(|(a, b)| (a - b) / self.cfg.lambda).collect()
            };
            (bundle.gamma, eta1)
        } else {
            (Vec::new(), Vec::new())
        };
        let node = NodeEval { psi: bundle.value, xi: bundle.xi, gamma, phi1, phi2, eta1, eta2 };
        let finite = node.psi.is_finite() && node.phi1.is_finite() && node.phi2.is_finite();
        if !finite {
            return Err(WedError::Evaluation { node: m, what: "non-finite functional summand".into() });
        }
        if with_derivatives
            && !(node.xi.iter().chain(&node.gamma).chain(&node.eta1).chain(&node.eta2)).all(|x| x.is_finite())
        {
            return Err(WedError::Evaluation { node: m, what: "non-finite derivative".into() });
        }
        Ok(node)
    }

    fn eval_nodes(&self, states: &[&[f64]], with_derivatives: bool) -> Result<Vec<NodeEval>> {
        let m_max = self.cfg.steps;
        #[cfg(feature = "parallel")]
        {
            if m_max * self.inst.n() >= 2048 {
                return (1..=m_max)
                    .into_par_iter()
                    .map(|m| self.eval_node(states, m, with_derivatives))
                    .collect();
            }
        }
        (1..=m_max).map(|m| self.eval_node(states, m, with_derivatives)).collect()
    }

    fn breakdown(&self, nodes: &[NodeEval]) -> WedBreakdown {
        let eps = self.cfg.epsilon;
        let mut out = WedBreakdown::default();
        // fixed summation order keeps results independent of the worker count
        for (i, node) in nodes.iter().enumerate() {
            let m = i + 1;
            out.dissipation_part += self.a[m] * eps * node.psi;
            out.phi1_part += self.b[m] * node.phi1;
            out.phi2_part += self.b[m] * node.phi2;
        }
        out.total = out.dissipation_part + out.phi1_part + out.phi2_part;
        out
    }

    pub(crate) fn value_states(&self, states: &[&[f64]]) -> Result<WedBreakdown> {
        let nodes = self.eval_nodes(states, false)?;
        Ok(self.breakdown(&nodes))
    }

    /// Weighted contribution of each node `m = 1..M` to the total.
    fn node_terms(&self, nodes: &[NodeEval]) -> Vec<f64> {
        let eps = self.cfg.epsilon;
        nodes
            .iter()
            .enumerate()
            .map(|(i, n)| self.a[i + 1] * eps * n.psi + self.b[i + 1] * (n.phi1 + n.phi2))
            .collect()
    }

    /// Breakdown, per-node terms and per-node gradients.
    pub(crate) fn value_and_gradient_states(
        &self,
        states: &[&[f64]],
    ) -> Result<(WedBreakdown, Vec<f64>, Vec<Vec<f64>>)> {
        let nodes = self.eval_nodes(states, true)?;
        let eps = self.cfg.epsilon;
        let inv_tau = 1.0 / self.tau;
        let m_max = self.cfg.steps;
        let mut grads = Vec::with_capacity(m_max);
        for m in 1..=m_max {
            let node = &nodes[m - 1];
            let j_gamma = self.resolvent.apply(&node.gamma)?;
            let mut g: Vec<f64> = (0..node.xi.len())
                .map(|i| {
                    self.a[m] * eps * (node.xi[i] * inv_tau + j_gamma[i])
                        + self.b[m] * (node.eta1[i] + node.eta2[i])
                })
                .collect();
            if m < m_max {
                let next = &nodes[m];
                let c = self.a[m + 1] * eps * inv_tau;
                for (gi, xi) in g.iter_mut().zip(&next.xi) {
                    *gi -= c * xi;
                }
            }
            grads.push(g);
        }
        Ok((self.breakdown(&nodes), self.node_terms(&nodes), grads))
    }

    pub fn value(&self, traj: &Trajectory) -> Result<WedBreakdown> {
        self.check_admissible(traj)?;
        self.value_states(&self.views(traj))
    }

    pub fn gradient(&self, traj: &Trajectory) -> Result<(WedBreakdown, TrajectoryGradient)> {
        self.check_admissible(traj)?;
        let (value, _, grads) = self.value_and_gradient_states(&self.views(traj))?;
        Ok((value, TrajectoryGradient { nodes: grads.into_iter().map(Into::into).collect() }))
    }

    /// Residual of the Euler–Lagrange system at every node.
    ///
    /// `xi_dot` uses backward differences for `m >= 2` and the forward
    /// difference at `m = 1`.
    pub fn el_residual(&self, traj: &Trajectory) -> Result<ElResidual> {
        self.check_admissible(traj)?;
        let states = self.views(traj);
        let nodes = self.eval_nodes(&states, true)?;
        let grid = &self.inst.grid;
        let eps = self.cfg.epsilon;
        let tau = self.tau;
        let m_max = self.cfg.steps;
        let mut out = ElResidual {
            xi: Vec::with_capacity(m_max),
            gamma: Vec::with_capacity(m_max),
            eta1: Vec::with_capacity(m_max),
            eta2: Vec::with_capacity(m_max),
            residual: Vec::with_capacity(m_max),
            residual_norms: Vec::with_capacity(m_max),
            xi_norms: Vec::with_capacity(m_max),
            residual_max: 0.0,
            residual_l2: 0.0,
            terminal_xi_norm: 0.0,
            tau,
        };
        let mut l2 = 0.0;
        for m in 1..=m_max {
            let node = &nodes[m - 1];
            let (prev, next) = if m == 1 { (&nodes[0].xi, &nodes[1].xi) } else { (&nodes[m - 2].xi, &node.xi) };
            let j_gamma = self.resolvent.apply(&node.gamma)?;
            let res: Vec<f64> = (0..node.xi.len())
                .map(|i| {
                    let xi_dot = (next[i] - prev[i]) / tau;
                    -eps * xi_dot + node.xi[i] + eps * j_gamma[i] + node.eta1[i] + node.eta2[i]
                })
                .collect();
            if res.iter().any(|x| !x.is_finite()) {
                return Err(WedError::Evaluation { node: m, what: "non-finite Euler-Lagrange residual".into() });
            }
            let rn = grid.norm(&res);
            out.residual_max = out.residual_max.max(rn);
            l2 += tau * rn * rn;
            out.residual_norms.push(rn);
            out.xi_norms.push(grid.norm(&node.xi));
            out.residual.push(res.into());
            out.xi.push(node.xi.clone().into());
            out.gamma.push(node.gamma.clone().into());
            out.eta1.push(node.eta1.clone().into());
            out.eta2.push(node.eta2.clone().into());
        }
        out.residual_l2 = l2.sqrt();
        out.terminal_xi_norm = *out.xi_norms.last().expect("M >= 2");
        Ok(out)
    }

    /// Value plus `sum_m b_m |u_m - anchor_m|_H^2 / 2`.
    pub fn penalized_value(&self, traj: &Trajectory, anchor: &Trajectory) -> Result<f64> {
        self.check_admissible(anchor)?;
        let base = self.value(traj)?;
        let grid = &self.inst.grid;
        let penalty: f64 = (1..=self.cfg.steps)
            .map(|m| self.b[m] * 0.5 * grid.distance(traj.state(m), anchor.state(m)).powi(2))
            .sum();
        Ok(base.total + penalty)
    }

    /// Largest defect of the discrete chain rule for `t -> psi(J u, u')` over
    /// interior nodes `m = 2..=M`.
    pub fn chain_rule_check(&self, traj: &Trajectory) -> Result<f64> {
        if traj.steps() < 3 {
            return Err(WedError::config("chain-rule check needs M >= 3"));
        }
        self.check_admissible(traj)?;
        let inst = self.inst;
        let grid = &inst.grid;
        let tau = self.tau;
        let m_max = traj.steps();
        let rates: Vec<StateVector> = (1..=m_max).map(|m| traj.rate(m)).collect();
        let bundles = (1..=m_max)
            .map(|m| {
                let ju = self.resolvent.apply(traj.state(m))?;
                inst.psi_bundle(&ju, &rates[m - 1])
            })
            .collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for m in 2..=m_max {
            let cur = &bundles[m - 1];
            let left = (cur.value - bundles[m - 2].value) / tau;
            let accel: Vec<f64> =
                rates[m - 1].iter().zip(rates[m - 2].iter()).map(|(a, b)| (a - b) / tau).collect();
            let j_rate = self.resolvent.apply(&rates[m - 1])?;
            let right = grid.inner(&cur.xi, &accel) + grid.inner(&cur.gamma, &j_rate);
            worst = worst.max((left - right).abs());
        }
        Ok(worst)
    }
}

pub fn wed_value(traj: &Trajectory, inst: &ProblemInstance, cfg: &WedConfig) -> Result<WedBreakdown> {
    WedFunctional::new(inst, *cfg)?.value(traj)
}

pub fn wed_gradient(traj: &Trajectory, inst: &ProblemInstance, cfg: &WedConfig) -> Result<TrajectoryGradient> {
    Ok(WedFunctional::new(inst, *cfg)?.gradient(traj)?.1)
}

pub fn el_residual(traj: &Trajectory, inst: &ProblemInstance, cfg: &WedConfig) -> Result<ElResidual> {
    WedFunctional::new(inst, *cfg)?.el_residual(traj)
}

pub fn wed_penalized_value(
    traj: &Trajectory,
    anchor: &Trajectory,
    inst: &ProblemInstance,
    cfg: &WedConfig,
) -> Result<f64> {
    WedFunctional::new(inst, *cfg)?.penalized_value(traj, anchor)
}

pub fn chain_rule_check(traj: &Trajectory, inst: &ProblemInstance, cfg: &WedConfig) -> Result<f64> {
    WedFunctional::new(inst, *cfg)?.chain_rule_check(traj)
}
