//! Discrete problem data and the pointwise quantities of the nonlocal flow
//! `g(k * u) u_t - u_xx + beta(u) = 0` on an interval with Dirichlet ends.
//!
//! All derivative operations return H-representers: vectors `r` such that the
//! directional derivative along `w` equals `(r, w)_H = h * sum r_i w_i`.

use crate::error::{check_len, Result, WedError};
use crate::grid::{SpatialGrid, StateVector};
use crate::kernel::Kernel;
use crate::models::{ConvexPotential, Mobility};

/// Mobility `g`, its positive lower bound and the convolution kernel.
#[derive(Debug, Clone)]
pub struct DissipationModel {
    pub mobility: Mobility,
    pub alpha: f64,
    pub kernel: Kernel,
}

impl DissipationModel {
    pub fn new(mobility: Mobility, alpha: f64, kernel: Kernel) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(WedError::config(format!("alpha must be positive, got {alpha}")));
        }
        let model = DissipationModel { mobility, alpha, kernel };
        model.check_lower_bound(&default_g_samples())?;
        Ok(model)
    }

    /// Spot-checks `g(s) >= alpha` on the given samples.
    pub fn check_lower_bound(&self, samples: &[f64]) -> Result<()> {
        for &s in samples {
            let g = self.mobility.g(s);
            if !(g >= self.alpha) {
                return Err(WedError::config(format!(
                    "g({s}) = {g} violates the lower bound alpha = {}",
                    self.alpha
                )));
            }
        }
        Ok(())
    }
}

fn default_g_samples() -> Vec<f64> {
    (0..=2000).map(|i| -10.0 + 0.01 * i as f64).collect()
}

/// Everything needed to pose the flow and its weighted energy-dissipation functional.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub grid: SpatialGrid,
    pub dissipation: DissipationModel,
    pub potential: ConvexPotential,
    pub u0: StateVector,
    pub horizon: f64,
}

/// `psi`, `d2 psi` and `d1 psi` evaluated together at one `(u, v)`.
#[derive(Debug, Clone)]
pub struct PsiBundle {
    pub value: f64,
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(
        grid: SpatialGrid,
        dissipation: DissipationModel,
        potential: ConvexPotential,
        u0: StateVector,
        horizon: f64,
    ) -> Result<Self> {
        dissipation.kernel.check_grid(&grid)?;
        grid.check(&u0)?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(WedError::config(format!("time horizon must be positive, got {horizon}")));
        }
        let inst = ProblemInstance { grid, dissipation, potential, u0, horizon };
        let e1 = inst.phi1(&inst.u0)?;
        let e2 = inst.phi2(&inst.u0)?;
        if !(e1.is_finite() && e2.is_finite()) {
            return Err(WedError::config("initial datum has non-finite energy"));
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    fn check2(&self, a: &[f64], b: &[f64]) -> Result<()> {
        self.grid.check(a)?;
        check_len(a.len(), b.len())
    }

    /// `k * u` with zero extension.
    pub fn convolve(&self, u: &[f64]) -> Result<StateVector> {
        crate::kernel::convolve(&self.dissipation.kernel, &self.grid, u)
    }

    /// Adjoint of [`Self::convolve`] under `(.,.)_H`: convolution with the reflected kernel.
    pub fn convolve_adjoint(&self, u: &[f64]) -> Result<StateVector> {
        crate::kernel::convolve(&self.dissipation.kernel.reflect(), &self.grid, u)
    }

    /// `psi(u, v) = h * sum g((k*u)_i) v_i^2 / 2`.
    pub fn psi(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check2(u, v)?;
        let s = self.convolve(u)?;
        let g = &self.dissipation.mobility;
        Ok(self.h() * s.iter().zip(v).map(|(&si, &vi)| g.g(si) * vi * vi * 0.5).sum::<f64>())
    }

    /// `d2 psi(u, v) = g(k*u) v`.
    pub fn d2_psi(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        self.check2(u, v)?;
        let s = self.convolve(u)?;
        let g = &self.dissipation.mobility;
        Ok(s.iter().zip(v).map(|(&si, &vi)| g.g(si) * vi).collect::<Vec<_>>().into())
    }

    /// `d1 psi(u, v)`: the reflected-kernel convolution of `g'(k*u) v^2 / 2`.
    pub fn d1_psi(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        self.check2(u, v)?;
        let s = self.convolve(u)?;
        let g = &self.dissipation.mobility;
        let c: Vec<f64> = s.iter().zip(v).map(|(&si, &vi)| g.dg(si) * vi * vi * 0.5).collect();
        self.convolve_adjoint(&c)
    }

    /// Derivative of `d2 psi(u, v)` in the state slot along `w`: `g'(k*u) (k*w) v`.
    pub fn d21_psi_apply(&self, u: &[f64], v: &[f64], w: &[f64]) -> Result<StateVector> {
        self.check2(u, v)?;
        check_len(u.len(), w.len())?;
        let s = self.convolve(u)?;
        let kw = self.convolve(w)?;
        let g = &self.dissipation.mobility;
        Ok((0..u.len()).map(|i| g.dg(s[i]) * kw[i] * v[i]).collect::<Vec<_>>().into())
    }

    /// Derivative of `d2 psi(u, v)` in the rate slot along `w`: `g(k*u) w`.
    pub fn d22_psi_apply(&self, u: &[f64], v: &[f64], w: &[f64]) -> Result<StateVector> {
        self.check2(u, v)?;
        check_len(u.len(), w.len())?;
        let s = self.convolve(u)?;
        let g = &self.dissipation.mobility;
        Ok(s.iter().zip(w).map(|(&si, &wi)| g.g(si) * wi).collect::<Vec<_>>().into())
    }

    /// `psi`, `d2 psi`, `d1 psi` at once, sharing the convolution.
    pub fn psi_bundle(&self, u: &[f64], v: &[f64]) -> Result<PsiBundle> {
        self.check2(u, v)?;
        let n = u.len();
        let h = self.h();
        let kernel = &self.dissipation.kernel;
        let g = &self.dissipation.mobility;
        let mut s = vec![0.0; n];
        kernel.convolve_into(h, u, &mut s);
        let mut value = 0.0;
        let mut xi = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut any_dg = false;
        for i in 0..n {
            let gi = g.g(s[i]);
            let half_v2 = 0.5 * v[i] * v[i];
            value += gi * half_v2;
            xi[i] = gi * v[i];
            c[i] = g.dg(s[i]) * half_v2;
            any_dg |= c[i] != 0.0;
        }
        let mut gamma = vec![0.0; n];
        if any_dg {
            kernel.reflect().convolve_into(h, &c, &mut gamma);
        }
        Ok(PsiBundle { value: h * value, xi, gamma })
    }

    /// Three-point Dirichlet stencil `(-u_{i-1} + 2 u_i - u_{i+1}) / h^2`.
    pub fn apply_a(&self, u: &[f64]) -> Result<StateVector> {
        self.grid.check(u)?;
        Ok(apply_stencil(self.h(), u).into())
    }

    /// `1/2 |u_x|^2` integrated with forward differences, boundary intervals included.
    pub fn phi1(&self, u: &[f64]) -> Result<f64> {
        self.grid.check(u)?;
        Ok(dirichlet_energy(self.h(), u))
    }

    /// `h * sum beta_hat(u_i)`.
    pub fn phi2(&self, u: &[f64]) -> Result<f64> {
        self.grid.check(u)?;
        Ok(self.h() * u.iter().map(|&r| self.potential.beta_hat(r)).sum::<f64>())
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        Ok(self.phi1(u)? + self.phi2(u)?)
    }

    /// Componentwise `beta(u_i)`, using the configured selection at jumps.
    pub fn eval_beta(&self, u: &[f64]) -> Result<StateVector> {
        self.grid.check(u)?;
        u.iter().map(|&r| self.potential.beta(r)).collect::<Result<Vec<_>>>().map(Into::into)
    }
}

pub(crate) fn apply_stencil(h: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let inv = 1.0 / (h * h);
    (0..n)
        .map(|i| {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            (2.0 * u[i] - left - right) * inv
        })
        .collect()
}

pub(crate) fn dirichlet_energy(h: f64, u: &[f64]) -> f64 {
    let n = u.len();
    let mut sum = 0.0;
    let mut prev = 0.0;
    for &ui in u {
        sum += (ui - prev) * (ui - prev);
        prev = ui;
    }
    sum += u[n - 1] * u[n - 1];
    0.5 * sum / h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Mobility;

    fn instance(n: usize, mobility: Mobility, kernel: impl Fn(&SpatialGrid) -> Kernel) -> ProblemInstance {
        let grid = SpatialGrid::unit(n).unwrap();
        let k = kernel(&grid);
        let diss = DissipationModel::new(mobility, 0.5, k).unwrap();
        let u0 = grid.sine_mode(1);
        ProblemInstance::new(grid, diss, ConvexPotential::zero(), u0, 1.0).unwrap()
    }

    fn sample(n: usize, seed: u64) -> Vec<f64> {
        (0..n).map(|i| ((i as f64 + 1.0) * (seed as f64 * 0.77 + 1.3)).sin() * 0.8).collect()
    }

    #[test]
    fn psi_special_cases() {
        let inst = instance(5, Mobility::unit(), Kernel::delta);
        let u = sample(5, 1);
        let v = sample(5, 2);
        assert_eq!(inst.psi(&u, &[0.0; 5]).unwrap(), 0.0);
        let half = 0.5 * inst.grid.norm_sq(&v);
        assert!((inst.psi(&u, &v).unwrap() - half).abs() < 1e-15);
        assert_eq!(inst.d2_psi(&u, &v).unwrap().as_slice(), v.as_slice());
        assert!(inst.d1_psi(&u, &v).unwrap().iter().all(|&x| x == 0.0));
        assert!(inst.d21_psi_apply(&u, &v, &u).unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(inst.d22_psi_apply(&u, &v, &u).unwrap().as_slice(), u.as_slice());
        assert!(inst.psi(&u, &v[..3]).is_err());
    }

    #[test]
    fn psi_small_case_against_scalar_loop() {
        let inst = instance(3, Mobility::quadratic(), Kernel::delta);
        let u = [1.0, 0.0, 2.0];
        let v = [1.0, 1.0, 1.0];
        // delta kernel: k*u = u, so psi = h * sum (1 + u_i^2) / 2 = 0.25 * (2 + 1 + 5) / 2
        let mut oracle = 0.0;
        for i in 0..3 {
            oracle += (1.0 + u[i] * u[i]) * v[i] * v[i] / 2.0;
        }
        oracle *= 0.25;
        assert_eq!(oracle, 1.0);
        assert!((inst.psi(&u, &v).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let inst = instance(7, Mobility::bounded(0.5), |g| Kernel::gaussian(g, 0.2).unwrap());
        let u = sample(7, 3);
        let v = sample(7, 4);
        let w = sample(7, 5);
        let e = 1e-5;
        let shift = |x: &[f64], t: f64| x.iter().zip(&w).map(|(a, b)| a + t * b).collect::<Vec<_>>();

        let fd2 = (inst.psi(&u, &shift(&v, e)).unwrap() - inst.psi(&u, &shift(&v, -e)).unwrap()) / (2.0 * e);
        let an2 = inst.grid.inner(&inst.d2_psi(&u, &v).unwrap(), &w);
        assert!((fd2 - an2).abs() <= 1e-6 * an2.abs().max(1e-3));

        let fd1 = (inst.psi(&shift(&u, e), &v).unwrap() - inst.psi(&shift(&u, -e), &v).unwrap()) / (2.0 * e);
        let an1 = inst.grid.inner(&inst.d1_psi(&u, &v).unwrap(), &w);
        assert!((fd1 - an1).abs() <= 1e-6 * an1.abs().max(1e-3));

        let d21 = inst.d21_psi_apply(&u, &v, &w).unwrap();
        let d22 = inst.d22_psi_apply(&u, &v, &w).unwrap();
        let plus = inst.d2_psi(&shift(&u, e), &v).unwrap();
        let minus = inst.d2_psi(&shift(&u, -e), &v).unwrap();
        let plus_v = inst.d2_psi(&u, &shift(&v, e)).unwrap();
        let minus_v = inst.d2_psi(&u, &shift(&v, -e)).unwrap();
        for i in 0..7 {
            let fd = (plus[i] - minus[i]) / (2.0 * e);
            assert!((fd - d21[i]).abs() <= 1e-5 * d21[i].abs().max(1e-3));
            let fdv = (plus_v[i] - minus_v[i]) / (2.0 * e);
            assert!((fdv - d22[i]).abs() <= 1e-5 * d22[i].abs().max(1e-3));
        }

        let bundle = inst.psi_bundle(&u, &v).unwrap();
        assert!((bundle.value - inst.psi(&u, &v).unwrap()).abs() < 1e-15);
        for i in 0..7 {
            assert!((bundle.gamma[i] - inst.d1_psi(&u, &v).unwrap()[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn stencil_on_first_sine_mode() {
        let inst = instance(9, Mobility::unit(), Kernel::delta);
        let u = inst.grid.sine_mode(1);
        let mu = (2.0 - 2.0 * (std::f64::consts::PI * inst.h()).cos()) / (inst.h() * inst.h());
        assert!((inst.grid.stencil_eigenvalue(1) - mu).abs() < 1e-12);
        let au = inst.apply_a(&u).unwrap();
        for i in 0..9 {
            assert!((au[i] - mu * u[i]).abs() < 1e-11);
        }
        let phi1 = inst.phi1(&u).unwrap();
        assert!((phi1 - 0.5 * mu * inst.grid.norm_sq(&u)).abs() < 1e-12);
        assert!(inst.apply_a(&[0.0; 9]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn potentials_and_beta() {
        let grid = SpatialGrid::unit(4).unwrap();
        let diss = DissipationModel::new(Mobility::unit(), 1.0, Kernel::delta(&grid)).unwrap();
        let inst = ProblemInstance::new(
            grid,
            diss,
            ConvexPotential::linear(1.0).unwrap(),
            grid.zeros(),
            1.0,
        )
        .unwrap();
        assert_eq!(inst.phi1(&[0.0; 4]).unwrap(), 0.0);
        assert_eq!(inst.phi2(&[0.0; 4]).unwrap(), 0.0);
        let u = [1.0, -2.0, 0.5, 3.0];
        assert!((inst.phi2(&u).unwrap() - 0.5 * grid.norm_sq(&u)).abs() < 1e-15);
        assert_eq!(inst.eval_beta(&u).unwrap().as_slice(), &u);

        let mut sign = inst.clone();
        sign.potential = ConvexPotential::linear_plus_sign(1.0, 1.0).unwrap().with_selection(None);
        assert!(matches!(sign.eval_beta(&[0.0, 1.0, 2.0, 3.0]), Err(WedError::SetValued { .. })));
        assert!(sign.eval_beta(&u).is_ok());
    }

    #[test]
    fn lower_bound_violation_is_rejected() {
        let grid = SpatialGrid::unit(4).unwrap();
        assert!(DissipationModel::new(Mobility::bounded(0.2), 0.5, Kernel::delta(&grid)).is_err());
        assert!(DissipationModel::new(Mobility::unit(), 0.0, Kernel::delta(&grid)).is_err());
    }
}
