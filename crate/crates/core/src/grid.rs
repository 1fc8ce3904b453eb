//! Spatial grid, state vectors and space-time trajectories.
//!
//! The domain is an interval `(0, L)` with homogeneous Dirichlet ends. Only the
//! `N` interior nodes `x_i = i h`, `i = 1..=N`, are stored; `h = L / (N + 1)`.
//! Every inner product carries the weight `h`, so discrete quantities
//! approximate their integrals.

use std::ops::{Deref, DerefMut};

use crate::error::{check_len, Result, WedError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    n: usize,
    h: f64,
}

impl SpatialGrid {
    /// Grid with `n` interior nodes on an interval of the given length.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 {
            return Err(WedError::config(format!("grid needs N >= 2 interior nodes, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(WedError::config(format!("domain length must be positive, got {length}")));
        }
        Ok(SpatialGrid { n, h: length / (n as f64 + 1.0) })
    }

    /// Grid on the unit interval.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain_length(&self) -> f64 {
        (self.n as f64 + 1.0) * self.h
    }

    /// Coordinates of the interior nodes.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|i| i as f64 * self.h).collect()
    }

    /// `(a, b)_H = h * sum a_i b_i`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    pub fn norm_sq(&self, a: &[f64]) -> f64 {
        self.inner(a, a)
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.norm_sq(a).sqrt()
    }

    /// H-norm of `a - b`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        (self.h * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).sqrt()
    }

    pub fn zeros(&self) -> StateVector {
        StateVector(vec![0.0; self.n])
    }

    /// Samples `f` at the interior nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> StateVector {
        StateVector(self.nodes().into_iter().map(f).collect())
    }

    /// `sin(k pi x / L)` at the interior nodes.
    pub fn sine_mode(&self, k: usize) -> StateVector {
        let l = self.domain_length();
        self.sample(|x| (k as f64 * std::f64::consts::PI * x / l).sin())
    }

    /// Eigenvalue of the three-point Dirichlet Laplacian for the `k`-th sine mode.
    pub fn stencil_eigenvalue(&self, k: usize) -> f64 {
        let theta = k as f64 * std::f64::consts::PI / (self.n as f64 + 1.0);
        (2.0 - 2.0 * theta.cos()) / (self.h * self.h)
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        check_len(self.n, v.len())
    }
}

/// Samples of a state at the interior nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        StateVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for StateVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        StateVector(v)
    }
}

/// `M + 1` states on a uniform time grid, node 0 being the initial datum.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<StateVector>,
    tau: f64,
    horizon: f64,
}

impl Trajectory {
    pub fn new(states: Vec<StateVector>, horizon: f64) -> Result<Self> {
        if states.len() < 2 {
            return Err(WedError::config("trajectory needs at least two time nodes"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(WedError::config(format!("time horizon must be positive, got {horizon}")));
        }
        let n = states[0].len();
        for s in &states {
            check_len(n, s.len())?;
        }
        let steps = states.len() - 1;
        Ok(Trajectory { states, tau: horizon / steps as f64, horizon })
    }

    /// The trajectory that stays at `u0` for all `m = 0..=steps`.
    pub fn constant(u0: &StateVector, steps: usize, horizon: f64) -> Result<Self> {
        Self::new(vec![u0.clone(); steps + 1], horizon)
    }

    /// Samples `u(t, x)` on the time grid and the given spatial grid.
    pub fn from_fn(
        grid: &SpatialGrid,
        steps: usize,
        horizon: f64,
        u: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let tau = horizon / steps as f64;
        let states = (0..=steps)
            .map(|m| {
                let t = m as f64 * tau;
                grid.sample(|x| u(t, x))
            })
            .collect();
        Self::new(states, horizon)
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps() {
            self.horizon
        } else {
            m as f64 * self.tau
        }
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn state(&self, m: usize) -> &StateVector {
        &self.states[m]
    }

    pub fn state_mut(&mut self, m: usize) -> &mut StateVector {
        &mut self.states[m]
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn space_len(&self) -> usize {
        self.states[0].len()
    }

    /// Backward difference `(u_m - u_{m-1}) / tau` for `m >= 1`.
    pub fn rate(&self, m: usize) -> StateVector {
        let inv = 1.0 / self.tau;
        self.states[m]
            .iter()
            .zip(self.states[m - 1].iter())
            .map(|(a, b)| (a - b) * inv)
            .collect::<Vec<_>>()
            .into()
    }

    /// Nodes `1..=M` flattened in time-major order.
    pub fn free_values(&self) -> Vec<f64> {
        self.states[1..].iter().flat_map(|s| s.iter().copied()).collect()
    }

    /// Overwrites nodes `1..=M` from a flat time-major vector. Node 0 is untouched.
    pub fn set_free_values(&mut self, x: &[f64]) -> Result<()> {
        let n = self.space_len();
        check_len(n * self.steps(), x.len())?;
        for (state, chunk) in self.states[1..].iter_mut().zip(x.chunks_exact(n)) {
            state.0.copy_from_slice(chunk);
        }
        Ok(())
    }

    pub fn into_states(self) -> Vec<StateVector> {
        self.states
    }

    /// Discrete `L^2(0,T;H)` distance `sqrt(sum_{m=1..M} tau |a_m - b_m|_H^2)`.
    pub fn l2h_distance(&self, other: &Trajectory, grid: &SpatialGrid) -> Result<f64> {
        check_len(self.states.len(), other.states.len())?;
        let sum: f64 = (1..self.states.len())
            .map(|m| grid.distance(&self.states[m], &other.states[m]).powi(2))
            .sum();
        Ok((self.tau * sum).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate_sizes() {
        assert!(SpatialGrid::unit(1).is_err());
        assert!(SpatialGrid::new(4, 0.0).is_err());
        let g = SpatialGrid::unit(3).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.domain_length(), 1.0);
        assert_eq!(g.nodes(), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn weighted_inner_product() {
        let g = SpatialGrid::unit(3).unwrap();
        assert_eq!(g.inner(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), 1.5);
        assert_eq!(g.norm(&[2.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn free_values_round_trip_keeps_node_zero() {
        let g = SpatialGrid::unit(2).unwrap();
        let u0 = StateVector::new(vec![1.0, 2.0]);
        let mut traj = Trajectory::constant(&u0, 3, 1.5).unwrap();
        assert_eq!(traj.tau(), 0.5);
        traj.set_free_values(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(traj.state(0), &u0);
        assert_eq!(traj.free_values(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(traj.rate(1).as_slice(), &[-2.0, -2.0]);
        assert!(traj.set_free_values(&[0.0]).is_err());
        assert_eq!(traj.l2h_distance(&traj.clone(), &g).unwrap(), 0.0);
    }
}
