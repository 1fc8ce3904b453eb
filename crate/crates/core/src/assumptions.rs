//! Sampled verification of the structural inequalities on `psi`, `phi1` and
//! `phi2`, each with its closed-form constant for the nonlocal model.
//!
//! Every check is stored as `small <= big`; the recorded ratio is
//! `small / big` (with `0 / 0 = 0`) and a check passes when its worst ratio
//! stays below `1 + 1e-9`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WedError};
use crate::grid::{SpatialGrid, StateVector};
use crate::linalg::Tridiagonal;
use crate::models::Mobility;
use crate::problem::ProblemInstance;

pub const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRecord {
    pub name: &'static str,
    pub statement: &'static str,
    pub sample_count: usize,
    pub worst_ratio: f64,
    pub constant_used: f64,
    pub pass: bool,
    /// Sample tuple attaining the worst ratio, stored when the check fails.
    pub witness: Option<Vec<StateVector>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub constants: ModelConstants,
    pub records: Vec<InequalityRecord>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn record(&self, name: &str) -> Option<&InequalityRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

/// Constants of the model at radius `R`, with `|k|` the discrete L2 norm of the
/// kernel and the suprema taken over `|s| <= |k| R` or `|s| <= 2 |k| R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    pub kernel_norm: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub c11: f64,
    pub c12: f64,
    pub c13: f64,
}

impl ModelConstants {
    pub fn new(inst: &ProblemInstance, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(WedError::config(format!("R must be positive, got {radius}")));
        }
        let diss = &inst.dissipation;
        let g = &diss.mobility;
        let alpha = diss.alpha;
        let kn = diss.kernel.l2_norm(inst.h());
        let near = kn * radius;
        let far = 2.0 * kn * radius;
        let sup_dg_near = g.sup_on(near, |m, s| m.dg(s).abs());
        let sup_dg_far = g.sup_on(far, |m, s| m.dg(s).abs());
        let sup_d2g_far = g.sup_on(far, |m, s| m.d2g(s).abs());
        let sup_g_near = g.sup_on(near, |m: &Mobility, s| m.g(s).abs());
        let c7 = sup_g_near * sup_g_near;
        let c8 = sup_dg_far * kn;
        let mu1 = inst.grid.stencil_eigenvalue(1);
        Ok(ModelConstants {
            kernel_norm: kn,
            c1: 2.0 * (1.0 + 1.0 / mu1),
            c2: 1.0,
            c3: potential_growth_constant(inst),
            c4: 2.0 / alpha,
            c5: 0.5 * kn * sup_dg_near,
            c6: 0.5 * sup_d2g_far * kn * kn,
            c7,
            c8,
            c9: sup_dg_near * kn,
            c10: alpha,
            c11: 0.5 * (c7 + 1.0),
            c12: 0.5 * alpha,
            c13: c8 * c8 / (2.0 * alpha),
        })
    }

    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("c5_R", self.c5),
            ("c6_R", self.c6),
            ("c7_R", self.c7),
            ("c8_R", self.c8),
            ("c9_R", self.c9),
            ("c10_R", self.c10),
            ("c11_R", self.c11),
            ("c12_R", self.c12),
            ("c13_R", self.c13),
        ]
    }
}

/// `c3` in `|eta|^2 <= c3 (1 + phi2(u))` for potentials of the form
/// `a r^2 / 2 + b |r|`: `2a` without a jump, `max(2 b^2 L, 4a)` with one.
fn potential_growth_constant(inst: &ProblemInstance) -> f64 {
    let pot = &inst.potential;
    let length = inst.grid.domain_length();
    let a = pot.curvature_hint();
    match pot.jumps().first() {
        None if a > 0.0 => 2.0 * a,
        None => 1.0,
        Some(j) => {
            let b = j.upper.abs().max(j.lower.abs());
            (2.0 * b * b * length).max(4.0 * a).max(f64::MIN_POSITIVE)
        }
    }
}

struct Check {
    name: &'static str,
    statement: &'static str,
    constant: f64,
    count: usize,
    worst: f64,
    witness: Option<Vec<StateVector>>,
}

impl Check {
    fn new(name: &'static str, statement: &'static str, constant: f64) -> Self {
        Check { name, statement, constant, count: 0, worst: 0.0, witness: None }
    }

    fn observe(&mut self, small: f64, big: f64, tuple: impl FnOnce() -> Vec<StateVector>) {
        self.count += 1;
        let ratio = if small <= 0.0 {
            0.0
        } else if big <= 0.0 {
            f64::INFINITY
        } else {
            small / big
        };
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        if ratio > self.worst || self.count == 1 {
            let failing = ratio > 1.0 + RATIO_TOLERANCE;
            if failing || self.witness.is_none() {
                self.witness = Some(tuple());
            }
            self.worst = self.worst.max(ratio);
        }
    }

    fn finish(self) -> InequalityRecord {
        let pass = self.worst <= 1.0 + RATIO_TOLERANCE;
        InequalityRecord {
            name: self.name,
            statement: self.statement,
            sample_count: self.count,
            worst_ratio: self.worst,
            constant_used: self.constant,
            pass,
            witness: if pass { None } else { self.witness },
        }
    }
}

/// Componentwise uniform in `[-R / sqrt(hN), R / sqrt(hN)]`, rescaled to H-norm `radius`.
fn draw(rng: &mut ChaCha8Rng, grid: &SpatialGrid, bound: f64, radius: f64) -> StateVector {
    let n = grid.n();
    let half = bound / (grid.h() * n as f64).sqrt();
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-half..=half)).collect();
    let norm = grid.norm(&v);
    if norm > 0.0 {
        let s = radius / norm;
        v.iter_mut().for_each(|x| *x *= s);
    }
    v.into()
}

/// Radius in `(0, R]`; every fourth draw sits on the sphere `|u| = R`.
fn draw_radius(rng: &mut ChaCha8Rng, i: usize, radius: f64) -> f64 {
    if i.is_multiple_of(4) {
        radius
    } else {
        radius * rng.gen_range(f64::EPSILON..=1.0)
    }
}

/// Free directions `v`, `w` get log-uniform norms in `[1e-2, 1e2]`.
fn draw_free(rng: &mut ChaCha8Rng, grid: &SpatialGrid, radius: f64) -> StateVector {
    let scale = 10f64.powf(rng.gen_range(-2.0..=2.0));
    draw(rng, grid, radius, scale)
}

/// `|A u|` in the dual norm of `|u|_X^2 = |u|_H^2 + |grad u|^2`.
fn dual_norm_of_au(inst: &ProblemInstance, u: &[f64]) -> Result<f64> {
    let h = inst.h();
    let au = inst.apply_a(u)?;
    let n = inst.n();
    let identity_plus_a = Tridiagonal::symmetric(vec![1.0 + 2.0 / (h * h); n], -1.0 / (h * h))?;
    let z = identity_plus_a.solve(&au)?;
    Ok(inst.grid.inner(&au, &z).max(0.0).sqrt())
}

fn x_norm_sq(inst: &ProblemInstance, u: &[f64]) -> Result<f64> {
    Ok(inst.grid.norm_sq(u) + 2.0 * inst.phi1(u)?)
}

pub fn verify_assumptions(inst: &ProblemInstance, radius: f64, samples: usize, seed: u64) -> Result<AssumptionReport> {
    if samples < 100 {
        return Err(WedError::config(format!("need at least 100 samples, got {samples}")));
    }
    let c = ModelConstants::new(inst, radius)?;
    let grid = &inst.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut c1 = Check::new("c1", "|u|_X^2 <= c1 (1 + phi1(u))", c.c1);
    let mut c2 = Check::new("c2", "|A u|_X* <= c2 |u|_X", c.c2);
    let mut c3 = Check::new("c3", "|eta2|^2 <= c3 (1 + phi2(u)), eta2 in beta(u)", c.c3);
    let mut c4 = Check::new("c4", "|v|^2 <= c4 psi(u, v)", c.c4);
    let mut c5 = Check::new("c5_R", "|d1 psi(u, v)| <= c5 (1 + |v|^2)", c.c5);
    let mut c6 = Check::new("c6_R", "|d1 psi(u1, v) - d1 psi(u2, v)| <= c6 |u1 - u2| |v|^2", c.c6);
    let mut c7 = Check::new("c7_R", "|d2 psi(u, v)|^2 <= c7 (1 + |v|^2)", c.c7);
    let mut c8 = Check::new("c8_R", "|d2 psi(u1, v) - d2 psi(u2, v)| <= c8 |u1 - u2| |v|", c.c8);
    let mut c9 = Check::new("c9_R", "|d21 psi(u, v) w| <= c9 |v| |w|", c.c9);
    let mut c10 = Check::new("c10_R", "c10 |w|^2 <= (d22 psi(u, v) w, w)", c.c10);
    let mut chain_lower = Check::new("chain_lower", "psi(u, v) <= (d2 psi(u, v), v)", 1.0);
    let mut c11 = Check::new("c11_R", "(d2 psi(u, v), v) <= c11 (1 + |v|^2)", c.c11);
    let mut mono = Check::new(
        "c12_c13_R",
        "c12 |v1 - v2|^2 <= (d2 psi(u1, v1) - d2 psi(u2, v2), v1 - v2) + c13 |u1 - u2|^2 |v2|^2",
        c.c12,
    );

    for i in 0..samples {
        let r1 = draw_radius(&mut rng, i, radius);
        let r2 = draw_radius(&mut rng, i + 1, radius);
        let u1 = draw(&mut rng, grid, radius, r1);
        let u2 = draw(&mut rng, grid, radius, r2);
        let v = draw_free(&mut rng, grid, radius);
        let v2 = draw_free(&mut rng, grid, radius);
        let w = draw_free(&mut rng, grid, radius);
        let nv = grid.norm(&v);
        let nw = grid.norm(&w);
        let du = grid.distance(&u1, &u2);

        // A1
        let phi1 = inst.phi1(&u1)?;
        c1.observe(x_norm_sq(inst, &u1)?, c.c1 * (1.0 + phi1), || vec![u1.clone()]);
        c2.observe(dual_norm_of_au(inst, &u1)?, c.c2 * x_norm_sq(inst, &u1)?.sqrt(), || vec![u1.clone()]);
        if let Ok(eta) = inst.eval_beta(&u1) {
            c3.observe(grid.norm_sq(&eta), c.c3 * (1.0 + inst.phi2(&u1)?), || vec![u1.clone()]);
        }

        // A2 and its consequences
        let psi = inst.psi(&u1, &v)?;
        c4.observe(nv * nv, c.c4 * psi, || vec![u1.clone(), v.clone()]);
        let d1a = inst.d1_psi(&u1, &v)?;
        let d1b = inst.d1_psi(&u2, &v)?;
        c5.observe(grid.norm(&d1a), c.c5 * (1.0 + nv * nv), || vec![u1.clone(), v.clone()]);
        c6.observe(grid.distance(&d1a, &d1b), c.c6 * du * nv * nv, || vec![u1.clone(), u2.clone(), v.clone()]);
        let d2a = inst.d2_psi(&u1, &v)?;
        let d2b = inst.d2_psi(&u2, &v)?;
        c7.observe(grid.norm_sq(&d2a), c.c7 * (1.0 + nv * nv), || vec![u1.clone(), v.clone()]);
        c8.observe(grid.distance(&d2a, &d2b), c.c8 * du * nv, || vec![u1.clone(), u2.clone(), v.clone()]);
        let d21 = inst.d21_psi_apply(&u1, &v, &w)?;
        c9.observe(grid.norm(&d21), c.c9 * nv * nw, || vec![u1.clone(), v.clone(), w.clone()]);
        let d22 = inst.d22_psi_apply(&u1, &v, &w)?;
        c10.observe(c.c10 * nw * nw, grid.inner(&d22, &w), || vec![u1.clone(), v.clone(), w.clone()]);
        let pairing = grid.inner(&d2a, &v);
        chain_lower.observe(psi, pairing, || vec![u1.clone(), v.clone()]);
        c11.observe(pairing, c.c11 * (1.0 + nv * nv), || vec![u1.clone(), v.clone()]);
        let d2c = inst.d2_psi(&u2, &v2)?;
        let diff: Vec<f64> = v.iter().zip(v2.iter()).map(|(a, b)| a - b).collect();
        let lhs: f64 = grid.inner(&d2a.iter().zip(d2c.iter()).map(|(a, b)| a - b).collect::<Vec<_>>(), &diff);
        let nv2 = grid.norm(&v2);
        mono.observe(c.c12 * grid.norm_sq(&diff), lhs + c.c13 * du * du * nv2 * nv2, || {
            vec![u1.clone(), u2.clone(), v.clone(), v2.clone()]
        });
    }

    let records = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, chain_lower, c11, mono]
        .into_iter()
        .filter(|ch| ch.count > 0)
        .map(Check::finish)
        .collect();
    Ok(AssumptionReport { radius, samples, seed, constants: c, records })
}
