//! Convolution kernels sampled on the lattice and the discrete convolution
//! with the zero extension of a state.

use crate::error::{Result, WedError};
use crate::grid::{SpatialGrid, StateVector};

/// Kernel samples `k(d h)` for offsets `d = -(N-1)..=(N-1)`.
///
/// Offset `d` lives at index `d + N - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    samples: Vec<f64>,
}

impl Kernel {
    /// Wraps raw samples; the length must be `2N - 1` for the grid it is used on.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.len().is_multiple_of(2) {
            return Err(WedError::config(format!(
                "kernel needs an odd number of samples (2N-1), got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|k| !k.is_finite()) {
            return Err(WedError::config("kernel samples must be finite"));
        }
        Ok(Kernel { samples })
    }

    pub fn zero(grid: &SpatialGrid) -> Self {
        Kernel { samples: vec![0.0; 2 * grid.n() - 1] }
    }

    /// Discrete delta: `1/h` at offset 0. Convolution with it is the identity.
    pub fn delta(grid: &SpatialGrid) -> Self {
        let mut k = Self::zero(grid);
        k.samples[grid.n() - 1] = 1.0 / grid.h();
        k
    }

    /// Normalized Gaussian `exp(-x^2 / 2 sigma^2) / (sqrt(2 pi) sigma)`.
    pub fn gaussian(grid: &SpatialGrid, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(WedError::config(format!("gaussian width must be positive, got {sigma}")));
        }
        let n = grid.n() as i64;
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
        let samples = (-(n - 1)..n)
            .map(|d| {
                let x = d as f64 * grid.h();
                norm * (-x * x / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        Ok(Kernel { samples })
    }

    /// Number of interior nodes this kernel is sized for.
    pub fn grid_len(&self) -> usize {
        self.samples.len().div_ceil(2)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Sample at a signed lattice offset.
    pub fn at(&self, offset: i64) -> f64 {
        self.samples[(offset + self.grid_len() as i64 - 1) as usize]
    }

    /// `k(-x)`; the adjoint of convolution under the h-weighted inner product.
    pub fn reflect(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Kernel { samples }
    }

    /// `sqrt(h * sum k_d^2)` over all stored offsets.
    pub fn l2_norm(&self, h: f64) -> f64 {
        (h * self.samples.iter().map(|k| k * k).sum::<f64>()).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&k| k == 0.0)
    }

    pub(crate) fn check_grid(&self, grid: &SpatialGrid) -> Result<()> {
        if self.samples.len() != 2 * grid.n() - 1 {
            return Err(WedError::config(format!(
                "kernel has {} samples but a grid with N = {} needs {}",
                self.samples.len(),
                grid.n(),
                2 * grid.n() - 1
            )));
        }
        Ok(())
    }

    /// Convolution into a preallocated buffer. Lengths are assumed checked.
    pub(crate) fn convolve_into(&self, h: f64, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for (i, w) in out.iter_mut().enumerate() {
            // offset i - j runs from i down to i - (n - 1)
            let row = &self.samples[i..i + n];
            let mut acc = 0.0;
            for (k, uj) in row.iter().rev().zip(u) {
                acc += k * uj;
            }
            *w = h * acc;
        }
    }
}

/// `w_i = h * sum_j k[i - j] u_j` over interior nodes (zero extension outside).
pub fn convolve(kernel: &Kernel, grid: &SpatialGrid, u: &[f64]) -> Result<StateVector> {
    kernel.check_grid(grid)?;
    grid.check(u)?;
    let mut out = vec![0.0; grid.n()];
    kernel.convolve_into(grid.h(), u, &mut out);
    Ok(out.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_loop(kernel: &Kernel, h: f64, u: &[f64]) -> Vec<f64> {
        let n = u.len() as i64;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += kernel.at(i - j) * u[j as usize];
                }
                h * acc
            })
            .collect()
    }

    #[test]
    fn zero_kernel_annihilates() {
        let g = SpatialGrid::unit(5).unwrap();
        let w = convolve(&Kernel::zero(&g), &g, &[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap();
        assert!(w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = SpatialGrid::unit(4).unwrap();
        let u = [0.3, -1.7, 2.25, 8.0];
        let w = convolve(&Kernel::delta(&g), &g, &u).unwrap();
        for (a, b) in w.iter().zip(&u) {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs());
        }
    }

    #[test]
    fn small_case_matches_double_loop_bitwise() {
        let g = SpatialGrid::unit(3).unwrap();
        assert_eq!(g.h(), 0.25);
        let k = Kernel::from_samples(vec![0.0, 1.0, 2.0, 1.0, 0.0]).unwrap();
        let u = [1.0, 0.0, 2.0];
        let w = convolve(&k, &g, &u).unwrap();
        let oracle = double_loop(&k, g.h(), &u);
        assert_eq!(w.as_slice(), oracle.as_slice());
        // hand evaluation: 0.25 * (2*1 + 1*0 + 0*2), 0.25 * (1*1 + 2*0 + 1*2), 0.25 * (0*1 + 1*0 + 2*2)
        assert_eq!(w.as_slice(), &[0.5, 0.75, 1.0]);
    }

    #[test]
    fn asymmetric_kernel_matches_double_loop() {
        let g = SpatialGrid::unit(6).unwrap();
        let k = Kernel::from_samples((0..11).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect())
            .unwrap();
        let u: Vec<f64> = (0..6).map(|i| (i as f64).cos()).collect();
        let w = convolve(&k, &g, &u).unwrap();
        let oracle = double_loop(&k, g.h(), &u);
        for (a, b) in w.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-15 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn mismatched_kernel_is_a_configuration_error() {
        let g = SpatialGrid::unit(3).unwrap();
        let k = Kernel::from_samples(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(convolve(&k, &g, &[1.0, 2.0, 3.0]), Err(WedError::Config(_))));
        assert!(Kernel::from_samples(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn gaussian_is_normalized_and_symmetric() {
        let g = SpatialGrid::unit(63).unwrap();
        let k = Kernel::gaussian(&g, 0.1).unwrap();
        let mass: f64 = g.h() * k.samples().iter().sum::<f64>();
        assert!((mass - 1.0).abs() < 1e-6);
        assert_eq!(k.reflect(), k);
    }
}
