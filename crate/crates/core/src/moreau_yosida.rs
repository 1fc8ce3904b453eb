//! Moreau–Yosida regularization of the two energy parts.
//!
//! `J` is the resolvent `(I + lambda A)^{-1}` of the Dirichlet stencil, `I` the
//! pointwise resolvent of `beta`. For `lambda = 0` every resolvent is the
//! identity and every regularized energy equals the unregularized one.

use crate::error::{Result, WedError};
use crate::grid::{SpatialGrid, StateVector};
use crate::linalg::Tridiagonal;
use crate::models::ConvexPotential;
use crate::problem::{apply_stencil, dirichlet_energy, ProblemInstance};

const SCALAR_TOL: f64 = 1e-12;
const SCALAR_MAX_ITERS: usize = 60;
const MAX_DOUBLINGS: usize = 100;

/// `lambda >= 0`; zero means no regularization.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RegularizationLevel(f64);

impl RegularizationLevel {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(RegularizationLevel(lambda))
        } else {
            Err(WedError::config(format!("lambda must be finite and >= 0, got {lambda}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

/// Factorized `(I + lambda A_h)` for one grid and one `lambda`; read-only after construction.
#[derive(Debug, Clone)]
pub struct ResolventA {
    grid: SpatialGrid,
    lambda: f64,
    factor: Option<Tridiagonal>,
}

impl ResolventA {
    pub fn new(grid: &SpatialGrid, lambda: RegularizationLevel) -> Result<Self> {
        let lambda = lambda.value();
        let factor = if lambda == 0.0 {
            None
        } else {
            let r = lambda / (grid.h() * grid.h());
            Some(Tridiagonal::symmetric(vec![1.0 + 2.0 * r; grid.n()], -r)?)
        };
        Ok(ResolventA { grid: *grid, lambda, factor })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `J u`. Self-adjoint in `(.,.)_H`, so this is also `J^* u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.grid.check(u)?;
        let Some(factor) = &self.factor else {
            return Ok(u.to_vec());
        };
        let w = factor.solve(u)?;
        let residual: f64 = factor
            .apply(&w)
            .iter()
            .zip(u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if residual > 1e-10 * scale.max(f64::MIN_POSITIVE) && residual > 0.0 {
            return Err(WedError::Internal(format!(
                "resolvent solve residual {residual:e} exceeds tolerance for |u| = {scale:e}"
            )));
        }
        Ok(w)
    }

    /// `A_lambda u = (u - J u) / lambda`, or `A u` when `lambda = 0`.
    pub fn yosida(&self, u: &[f64]) -> Result<Vec<f64>> {
        if self.lambda == 0.0 {
            self.grid.check(u)?;
            return Ok(apply_stencil(self.grid.h(), u));
        }
        let ju = self.apply(u)?;
        Ok(u.iter().zip(&ju).map(|(a, b)| (a - b) / self.lambda).collect())
    }

    /// `phi1_lambda(u)` together with `J u`.
    pub fn phi1_lambda(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        if self.lambda == 0.0 {
            self.grid.check(u)?;
            return Ok((dirichlet_energy(self.grid.h(), u), u.to_vec()));
        }
        let ju = self.apply(u)?;
        let gap = self.grid.distance(u, &ju);
        Ok((gap * gap / (2.0 * self.lambda) + dirichlet_energy(self.grid.h(), &ju), ju))
    }
}

/// Solution of `(I + lambda A_h) w = u`.
pub fn resolve_a(grid: &SpatialGrid, u: &[f64], lambda: f64) -> Result<StateVector> {
    ResolventA::new(grid, RegularizationLevel::new(lambda)?)?.apply(u).map(Into::into)
}

/// `(u - J u) / lambda`; requires `lambda > 0`.
pub fn yosida_a(grid: &SpatialGrid, u: &[f64], lambda: f64) -> Result<StateVector> {
    if !(lambda > 0.0) {
        return Err(WedError::Domain("yosida approximation needs lambda > 0; use apply_a".into()));
    }
    ResolventA::new(grid, RegularizationLevel::new(lambda)?)?.yosida(u).map(Into::into)
}

/// The unique `r` with `r + lambda beta(r) ∋ s`.
pub fn resolve_beta(potential: &ConvexPotential, s: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(s);
    }
    if !(lambda > 0.0) || !s.is_finite() {
        return Err(WedError::Domain(format!("resolvent needs lambda >= 0 and finite s, got ({s}, {lambda})")));
    }
    for j in potential.jumps() {
        if s >= j.at + lambda * j.lower && s <= j.at + lambda * j.upper {
            return Ok(j.at);
        }
    }
    let f = |r: f64| r + lambda * potential.beta_branch(r) - s;
    let f0 = f(s);
    if f0 == 0.0 {
        return Ok(s);
    }
    // for monotone beta the slope of f is at least 1, so the root is within |f0| of s
    let mut width = f0.abs().max(SCALAR_TOL);
    let dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let mut far = s + dir * width;
    let mut doublings = 0;
    while f(far).signum() == f0.signum() {
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !far.is_finite() {
            return Err(WedError::ResolventBracket { s, lambda });
        }
        width *= 2.0;
        far = s + dir * width;
    }
    let (mut lo, mut hi) = if dir < 0.0 { (far, s) } else { (s, far) };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..SCALAR_MAX_ITERS {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = 1.0 + lambda * potential.dbeta(x);
        let newton = x - fx / slope;
        let next = if slope.is_finite() && slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= SCALAR_TOL || hi - lo <= SCALAR_TOL {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Pointwise `I_lambda u`.
pub fn resolve_phi2(potential: &ConvexPotential, u: &[f64], lambda: f64) -> Result<StateVector> {
    u.iter().map(|&s| resolve_beta(potential, s, lambda)).collect::<Result<Vec<_>>>().map(Into::into)
}

/// `phi1_lambda(u) = |u - J u|^2 / 2 lambda + phi1(J u)`.
pub fn phi1_lambda(inst: &ProblemInstance, u: &[f64], lambda: f64) -> Result<f64> {
    Ok(ResolventA::new(&inst.grid, RegularizationLevel::new(lambda)?)?.phi1_lambda(u)?.0)
}

/// `phi2_lambda(u) = |u - I u|^2 / 2 lambda + phi2(I u)`.
pub fn phi2_lambda(inst: &ProblemInstance, u: &[f64], lambda: f64) -> Result<f64> {
    inst.grid.check(u)?;
    RegularizationLevel::new(lambda)?;
    if lambda == 0.0 {
        return inst.phi2(u);
    }
    let iu = resolve_phi2(&inst.potential, u, lambda)?;
    let gap = inst.grid.distance(u, &iu);
    Ok(gap * gap / (2.0 * lambda) + inst.phi2(&iu)?)
}

/// Gradient of `phi2_lambda`: `(u - I u) / lambda`, or `beta(u)` when `lambda = 0`.
pub fn d_phi2_lambda(inst: &ProblemInstance, u: &[f64], lambda: f64) -> Result<StateVector> {
    inst.grid.check(u)?;
    RegularizationLevel::new(lambda)?;
    if lambda == 0.0 {
        return inst.eval_beta(u);
    }
    u.iter()
        .map(|&s| Ok((s - resolve_beta(&inst.potential, s, lambda)?) / lambda))
        .collect::<Result<Vec<_>>>()
        .map(Into::into)
}

/// Scalar value and slope of `d phi2_lambda` at `s` (one component).
pub(crate) fn d_phi2_lambda_scalar(potential: &ConvexPotential, s: f64, lambda: f64) -> Result<(f64, f64)> {
    if lambda == 0.0 {
        return Ok((potential.beta(s)?, potential.dbeta(s)));
    }
    let r = resolve_beta(potential, s, lambda)?;
    let value = (s - r) / lambda;
    let slope = if potential.jump_at(r).is_some() {
        1.0 / lambda
    } else {
        let db = potential.dbeta(r);
        db / (1.0 + lambda * db)
    };
    Ok((value, slope))
}

/// `(phi2_lambda(u), d phi2_lambda(u))` in one pass.
pub(crate) fn phi2_lambda_with_gradient(inst: &ProblemInstance, u: &[f64], lambda: f64) -> Result<(f64, Vec<f64>)> {
    let h = inst.h();
    let p = &inst.potential;
    if lambda == 0.0 {
        let value = h * u.iter().map(|&r| p.beta_hat(r)).sum::<f64>();
        let grad = u.iter().map(|&r| p.beta(r)).collect::<Result<Vec<_>>>()?;
        return Ok((value, grad));
    }
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(u.len());
    for &s in u {
        let r = resolve_beta(p, s, lambda)?;
        value += (s - r) * (s - r) / (2.0 * lambda) + p.beta_hat(r);
        grad.push((s - r) / lambda);
    }
    Ok((h * value, grad))
}
