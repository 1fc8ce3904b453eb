//! Minimization of the discrete functional over admissible trajectories.
//!
//! The unknowns are nodes `1..=M`; node 0 is never part of the variable
//! vector. Both methods are preconditioned by the exact inverse Hessian of a
//! frozen quadratic model (constant mobility per time node, linearized
//! potential), which is diagonal in the sine basis and tridiagonal in time.

use crate::error::{Result, WedError};
use crate::functional::{ElResidual, WedBreakdown, WedConfig, WedFunctional};
use crate::grid::Trajectory;
use crate::linalg::{SineBasis, Tridiagonal};
use crate::problem::ProblemInstance;

pub const SOLUTION_LABEL: &str = "stationary point; global minimizer candidate";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GradientDescentArmijo,
    LimitedMemoryQuasiNewton,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GradientDescentArmijo => "gradient-descent-armijo",
            Method::LimitedMemoryQuasiNewton => "limited-memory-quasi-newton",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gradient-descent-armijo" => Ok(Method::GradientDescentArmijo),
            "limited-memory-quasi-newton" => Ok(Method::LimitedMemoryQuasiNewton),
            other => Err(WedError::config(format!(
                "unknown method '{other}' (expected gradient-descent-armijo or limited-memory-quasi-newton)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub method: Method,
    /// Tolerance on the weight-normalized gradient norm, see [`SolveReport::grad_norm`].
    pub g_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub memory: usize,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            method: Method::LimitedMemoryQuasiNewton,
            g_tol: 1e-8,
            max_iters: 5000,
            armijo_c: 1e-4,
            backtrack: 0.5,
            memory: 10,
            seed: 0,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_tol.is_finite() && self.g_tol > 0.0) {
            return Err(WedError::config(format!("g_tol must be positive, got {}", self.g_tol)));
        }
        if self.max_iters < 1 {
            return Err(WedError::config("max_iters must be at least 1"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(WedError::config(format!("armijo c must lie in (0, 1), got {}", self.armijo_c)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(WedError::config(format!("backtrack factor must lie in (0, 1), got {}", self.backtrack)));
        }
        if self.method == Method::LimitedMemoryQuasiNewton && self.memory == 0 {
            return Err(WedError::config("quasi-newton memory must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Init {
    ConstantU0,
    Trajectory(Trajectory),
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub minimizer: Trajectory,
    pub value: WedBreakdown,
    /// `sqrt(sum_m tau |G_m / b_m|_H^2)` with `G_m` the H-gradient at node `m`
    /// and `b_m` the energy weight of that node.
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub el: ElResidual,
    pub wall_time: f64,
    /// Objective after each accepted step, starting with the initial value.
    /// Non-increasing up to the roundoff of the objective: near convergence a
    /// step may be accepted on gradient information alone.
    pub value_history: Vec<f64>,
    pub method: Method,
    pub config: WedConfig,
    pub label: &'static str,
}

pub(crate) struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    pub(crate) fn start() -> Self {
        Clock(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Smooth objective on a flat vector, with gradients given as representers
/// for [`Objective::inner`].
pub(crate) trait Objective {
    fn dim(&self) -> usize;
    /// Value, additive parts of the value, and gradient. Step acceptance
    /// compares parts one by one, which resolves changes far below the
    /// roundoff of the total.
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)>;
    fn inner(&self, a: &[f64], b: &[f64]) -> f64;
    fn grad_norm(&self, g: &[f64]) -> f64;
    /// Approximate inverse Hessian applied to a gradient.
    fn precondition(&self, g: &[f64]) -> Result<Vec<f64>>;
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when 60 backtracks found no acceptable step; `x` is the last iterate.
    pub stalled: bool,
    pub history: Vec<f64>,
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn two_loop<O: Objective>(obj: &O, grad: &[f64], pairs: &[(Vec<f64>, Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let mut q = grad.to_vec();
    let mut alphas = vec![0.0; pairs.len()];
    for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
        let a = rho * obj.inner(s, &q);
        alphas[i] = a;
        axpy(&mut q, -a, y);
    }
    let mut r = obj.precondition(&q)?;
    for (i, (s, y, rho)) in pairs.iter().enumerate() {
        let b = rho * obj.inner(y, &r);
        axpy(&mut r, alphas[i] - b, s);
    }
    for v in r.iter_mut() {
        *v = -*v;
    }
    Ok(r)
}

pub(crate) fn run<O: Objective>(obj: &O, x0: Vec<f64>, opt: &OptimizeConfig) -> Result<Outcome> {
    opt.validate()?;
    let mut x = x0;
    let (mut f, mut parts, mut g) = obj.eval(&x)?;
    let mut evaluations = 1;
    let mut history = vec![f];
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut last_step: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut gn = obj.grad_norm(&g);
    let mut stalled = false;
    while gn > opt.g_tol && iterations < opt.max_iters {
        let (mut d, mut alpha) = match opt.method {
            Method::LimitedMemoryQuasiNewton => (two_loop(obj, &g, &pairs)?, 1.0),
            Method::GradientDescentArmijo => {
                let mut d = obj.precondition(&g)?;
                d.iter_mut().for_each(|v| *v = -*v);
                // preconditioned Barzilai–Borwein step from the previous pair
                let alpha = match &last_step {
                    Some((s, y)) => {
                        let py = obj.precondition(y)?;
                        let sy = obj.inner(s, y);
                        let ypy = obj.inner(y, &py);
                        if sy > 0.0 && ypy > 0.0 { (sy / ypy).clamp(1e-3, 1e3) } else { 1.0 }
                    }
                    None => 1.0,
                };
                (d, alpha)
            }
        };
        let mut slope = obj.inner(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = obj.precondition(&g)?;
            d.iter_mut().for_each(|v| *v = -*v);
            slope = obj.inner(&g, &d);
            alpha = 1.0;
            if !(slope < 0.0) {
                break;
            }
        }
        let mut accepted = None;
        for _ in 0..=60 {
            let mut trial = x.clone();
            axpy(&mut trial, alpha, &d);
            let (ft, pt, gt) = obj.eval(&trial)?;
            evaluations += 1;
            let change: f64 = pt.iter().zip(&parts).map(|(a, b)| a - b).sum();
            let armijo = change <= opt.armijo_c * alpha * slope;
            // once the change is at the roundoff level of the parts, judge the
            // step by the trapezoidal estimate built from directional derivatives
            let noise = 8.0 * f64::EPSILON * parts.iter().map(|p| p.abs()).sum::<f64>();
            let approx = change <= noise && 0.5 * alpha * (slope + obj.inner(&gt, &d)) <= opt.armijo_c * alpha * slope;
            if armijo || approx {
                accepted = Some((trial, ft, pt, gt));
                break;
            }
            alpha *= opt.backtrack;
        }
        let Some((xn, fnew, pnew, gnew)) = accepted else {
            stalled = true;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = obj.inner(&s, &y);
        if opt.method == Method::LimitedMemoryQuasiNewton && sy > 1e-14 * obj.inner(&s, &s).sqrt() * obj.inner(&y, &y).sqrt() {
            if pairs.len() == opt.memory {
                pairs.remove(0);
            }
            pairs.push((s.clone(), y.clone(), 1.0 / sy));
        }
        last_step = Some((s, y));
        x = xn;
        f = fnew;
        parts = pnew;
        g = gnew;
        history.push(f);
        iterations += 1;
        gn = obj.grad_norm(&g);
    }
    Ok(Outcome { x, value: f, grad: g, grad_norm: gn, iterations, evaluations, converged: gn <= opt.g_tol, stalled, history })
}

/// Frozen quadratic model: per sine mode `k`, a symmetric tridiagonal matrix
/// in time whose inverse is applied to the modal coefficients of a gradient.
struct Preconditioner {
    basis: SineBasis,
    modes: Vec<Tridiagonal>,
    n: usize,
    steps: usize,
}

impl Preconditioner {
    fn new(wed: &WedFunctional<'_>, states: &[&[f64]]) -> Result<Self> {
        let inst = wed.instance();
        let cfg = wed.config();
        let n = inst.n();
        let steps = cfg.steps;
        let tau = wed.tau();
        let a = wed.dissipation_weights();
        let b = wed.energy_weights();
        let lambda = cfg.lambda;
        let mut g_bar = vec![0.0; steps + 2];
        for m in 1..=steps {
            let ju = wed.resolvent().apply(states[m])?;
            let w = inst.convolve(&ju)?;
            let mob = &inst.dissipation.mobility;
            g_bar[m] = w.iter().map(|&s| mob.g(s)).sum::<f64>() / n as f64;
        }
        let kappa = inst.potential.curvature_hint().max(0.0);
        let kappa = kappa / (1.0 + lambda * kappa);
        let eps = cfg.epsilon;
        let coupling: Vec<f64> = (0..=steps + 1)
            .map(|m| if (1..=steps).contains(&m) { eps * g_bar[m] * a[m] / (tau * tau) } else { 0.0 })
            .collect();
        let mut modes = Vec::with_capacity(n);
        for k in 1..=n {
            let mu = inst.grid.stencil_eigenvalue(k);
            let stiff = mu / (1.0 + lambda * mu) + kappa;
            let diag: Vec<f64> = (1..=steps).map(|m| coupling[m] + coupling[m + 1] + b[m] * stiff).collect();
            let lower: Vec<f64> = (1..=steps).map(|m| if m == 1 { 0.0 } else { -coupling[m] }).collect();
            let upper: Vec<f64> = (1..=steps).map(|m| if m == steps { 0.0 } else { -coupling[m + 1] }).collect();
            modes.push(Tridiagonal::new(lower, diag, upper)?);
        }
        Ok(Preconditioner { basis: SineBasis::new(n), modes, n, steps })
    }

    fn apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        let (n, steps) = (self.n, self.steps);
        let mut modal = vec![0.0; n * steps];
        let mut buf = vec![0.0; n];
        for m in 0..steps {
            self.basis.transform(&g[m * n..(m + 1) * n], &mut buf);
            for k in 0..n {
                modal[k * steps + m] = buf[k];
            }
        }
        for k in 0..n {
            self.modes[k].solve_in_place(&mut modal[k * steps..(k + 1) * steps])?;
        }
        let mut out = vec![0.0; n * steps];
        let mut col = vec![0.0; n];
        for m in 0..steps {
            for k in 0..n {
                col[k] = modal[k * steps + m];
            }
            self.basis.transform(&col, &mut out[m * n..(m + 1) * n]);
        }
        Ok(out)
    }
}

struct WedObjective<'w, 'a> {
    wed: &'w WedFunctional<'a>,
    precond: Preconditioner,
    norm_weights: Vec<f64>,
}

impl<'w, 'a> WedObjective<'w, 'a> {
    fn new(wed: &'w WedFunctional<'a>, x: &[f64]) -> Result<Self> {
        let b = wed.energy_weights();
        if b[1..].iter().any(|&w| !(w > 1e-280)) {
            return Err(WedError::config(
                "epsilon is too small for the horizon: exponential weights underflow",
            ));
        }
        let h = wed.instance().h();
        let tau = wed.tau();
        let norm_weights = b[1..].iter().map(|w| tau * h / (w * w)).collect();
        let precond = Preconditioner::new(wed, &wed.flat_views(x)?)?;
        Ok(WedObjective { wed, precond, norm_weights })
    }
}

impl Objective for WedObjective<'_, '_> {
    fn dim(&self) -> usize {
        self.wed.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let (v, parts, grads) = self.wed.value_and_gradient_states(&self.wed.flat_views(x)?)?;
        Ok((v.total, parts, grads.concat()))
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.wed.instance().h() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    fn grad_norm(&self, g: &[f64]) -> f64 {
        let n = self.wed.instance().n();
        g.chunks_exact(n)
            .zip(&self.norm_weights)
            .map(|(c, w)| w * c.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    fn precondition(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.precond.apply(g)
    }
}

pub fn minimize(inst: &ProblemInstance, cfg: &WedConfig, opt: &OptimizeConfig, init: &Init) -> Result<SolveReport> {
    let clock = Clock::start();
    let wed = WedFunctional::new(inst, *cfg)?;
    let start = match init {
        Init::ConstantU0 => Trajectory::constant(&inst.u0, cfg.steps, inst.horizon)?,
        Init::Trajectory(t) => {
            wed.check_admissible(t)?;
            t.clone()
        }
    };
    let x0 = start.free_values();
    let obj = WedObjective::new(&wed, &x0)?;
    let outcome = run(&obj, x0, opt)?;
    let mut minimizer = start;
    minimizer.set_free_values(&outcome.x)?;
    if outcome.stalled {
        return Err(WedError::StalledLineSearch {
            iteration: outcome.iterations,
            value: outcome.value,
            last: Box::new(minimizer),
        });
    }
    let value = wed.value(&minimizer)?;
    let el = wed.el_residual(&minimizer)?;
    debug_assert_eq!(outcome.grad.len(), obj.dim());
    Ok(SolveReport {
        minimizer,
        value,
        grad_norm: outcome.grad_norm,
        iterations: outcome.iterations,
        evaluations: outcome.evaluations,
        converged: outcome.converged,
        el,
        wall_time: clock.seconds(),
        value_history: outcome.history,
        method: opt.method,
        config: *cfg,
        label: SOLUTION_LABEL,
    })
}

/// Solves each configuration in turn, warm-starting from the previous minimizer.
pub fn continuation_minimize(
    inst: &ProblemInstance,
    cfgs: &[WedConfig],
    opt: &OptimizeConfig,
) -> Result<Vec<SolveReport>> {
    let Some(first) = cfgs.first() else {
        return Err(WedError::config("continuation needs at least one configuration"));
    };
    for pair in cfgs.windows(2) {
        if pair[1].steps != first.steps || pair[1].quadrature != first.quadrature {
            return Err(WedError::config("continuation configurations must share M and the quadrature"));
        }
        if pair[1].epsilon > pair[0].epsilon || pair[1].lambda > pair[0].lambda {
            return Err(WedError::config("continuation configurations must be sorted by decreasing epsilon and lambda"));
        }
    }
    let mut reports: Vec<SolveReport> = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let init = match reports.last() {
            Some(r) => Init::Trajectory(r.minimizer.clone()),
            None => Init::ConstantU0,
        };
        reports.push(minimize(inst, cfg, opt, &init)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `f(x) = sum_i c_i x_i^2 / 2 + x_0^4 / 4` in the Euclidean pairing.
    struct Toy {
        c: Vec<f64>,
    }

    impl Objective for Toy {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
            let mut parts: Vec<f64> = x.iter().zip(&self.c).map(|(x, c)| 0.5 * c * x * x).collect();
            parts[0] += 0.25 * x[0].powi(4);
            let mut g: Vec<f64> = x.iter().zip(&self.c).map(|(x, c)| c * x).collect();
            g[0] += x[0].powi(3);
            Ok((parts.iter().sum(), parts, g))
        }
        fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        }
        fn grad_norm(&self, g: &[f64]) -> f64 {
            self.inner(g, g).sqrt()
        }
        fn precondition(&self, g: &[f64]) -> Result<Vec<f64>> {
            Ok(g.to_vec())
        }
    }

    #[test]
    fn both_methods_reach_the_origin_with_monotone_values() {
        let toy = Toy { c: (1..=12).map(|i| i as f64).collect() };
        for method in [Method::LimitedMemoryQuasiNewton, Method::GradientDescentArmijo] {
            let opt = OptimizeConfig { method, g_tol: 1e-10, max_iters: 2000, ..Default::default() };
            let out = run(&toy, vec![1.0; toy.dim()], &opt).unwrap();
            assert!(out.converged, "{method:?}");
            assert!(out.x.iter().all(|v| v.abs() < 1e-9));
            assert!(out.history.windows(2).all(|w| w[1] <= w[0] + 8.0 * f64::EPSILON * w[0].abs()));
        }
    }

    #[test]
    fn invalid_options_are_rejected() {
        let toy = Toy { c: vec![1.0] };
        let bad = OptimizeConfig { g_tol: 0.0, ..Default::default() };
        assert!(matches!(run(&toy, vec![1.0], &bad), Err(WedError::Config(_))));
        let bad = OptimizeConfig { backtrack: 1.0, ..Default::default() };
        assert!(run(&toy, vec![1.0], &bad).is_err());
    }
}
