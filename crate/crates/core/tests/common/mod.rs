#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wed_core::*;

pub fn instance(
    n: usize,
    mobility: Mobility,
    alpha: f64,
    kernel: impl FnOnce(&SpatialGrid) -> Kernel,
    potential: ConvexPotential,
    u0: impl Fn(f64) -> f64,
) -> ProblemInstance {
    let grid = SpatialGrid::unit(n).unwrap();
    let k = kernel(&grid);
    let u0 = grid.sample(u0);
    ProblemInstance::new(grid, DissipationModel::new(mobility, alpha, k).unwrap(), potential, u0, 1.0).unwrap()
}

pub fn sine(x: f64) -> f64 {
    (std::f64::consts::PI * x).sin()
}

pub fn zero(_: f64) -> f64 {
    0.0
}

pub fn delta(grid: &SpatialGrid) -> Kernel {
    Kernel::delta(grid)
}

pub fn gaussian(grid: &SpatialGrid) -> Kernel {
    Kernel::gaussian(grid, 0.1).unwrap()
}

pub fn heat(n: usize) -> ProblemInstance {
    instance(n, Mobility::unit(), 1.0, delta, ConvexPotential::zero(), sine)
}

pub fn kirchhoff(n: usize) -> ProblemInstance {
    instance(n, Mobility::quadratic(), 1.0, gaussian, ConvexPotential::linear(1.0).unwrap(), sine)
}

pub fn random_trajectory(inst: &ProblemInstance, steps: usize, seed: u64, amp: f64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Trajectory::constant(&inst.u0, steps, inst.horizon).unwrap();
    let x: Vec<f64> = (0..steps * inst.n()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    t.set_free_values(&x).unwrap();
    t
}

pub fn h_norm(grid: &SpatialGrid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.norm(&d)
}
