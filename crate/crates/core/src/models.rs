//! Scalar model functions: the mobility `g` inside the dissipation and the
//! convex potential `beta_hat` with its (possibly set-valued) derivative.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, WedError};
use crate::linalg::Tridiagonal;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The mobility `g` with its first two derivatives.
#[derive(Clone)]
pub struct Mobility {
    name: String,
    g: ScalarFn,
    dg: ScalarFn,
    d2g: ScalarFn,
}

impl fmt::Debug for Mobility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mobility").field("name", &self.name).finish()
    }
}

impl Mobility {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Mobility { name: name.into(), g: Arc::new(g), dg: Arc::new(dg), d2g: Arc::new(d2g) }
    }

    /// `g = 1`.
    pub fn unit() -> Self {
        Self::new("unit", |_| 1.0, |_| 0.0, |_| 0.0)
    }

    /// `g(s) = 1 + s^2`.
    pub fn quadratic() -> Self {
        Self::new("quadratic", |s| 1.0 + s * s, |s| 2.0 * s, |_| 2.0)
    }

    /// `g(s) = alpha + 1 / (1 + s^2)`, bounded with bounded derivatives.
    pub fn bounded(alpha: f64) -> Self {
        Self::new(
            format!("bounded({alpha})"),
            move |s| alpha + 1.0 / (1.0 + s * s),
            |s| {
                let q = 1.0 + s * s;
                -2.0 * s / (q * q)
            },
            |s| {
                let q = 1.0 + s * s;
                (6.0 * s * s - 2.0) / (q * q * q)
            },
        )
    }

    /// Natural cubic spline through `(s, g)` points, extended linearly outside
    /// the table. The extension keeps `g` twice continuously differentiable.
    pub fn table(points: &[(f64, f64)]) -> Result<Self> {
        let spline = NaturalSpline::new(points)?;
        let (a, b, c) = (spline.clone(), spline.clone(), spline);
        Ok(Self::new("table", move |s| a.eval(s).0, move |s| b.eval(s).1, move |s| c.eval(s).2))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        (self.g)(s)
    }

    #[inline]
    pub fn dg(&self, s: f64) -> f64 {
        (self.dg)(s)
    }

    #[inline]
    pub fn d2g(&self, s: f64) -> f64 {
        (self.d2g)(s)
    }

    /// Largest of `f` on `[-r, r]`, estimated on a fine uniform sample.
    pub fn sup_on(&self, r: f64, f: impl Fn(&Self, f64) -> f64) -> f64 {
        const SAMPLES: usize = 20_001;
        (0..SAMPLES)
            .map(|i| -r + 2.0 * r * i as f64 / (SAMPLES - 1) as f64)
            .map(|s| f(self, s))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
struct NaturalSpline {
    s: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl NaturalSpline {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(WedError::config("g.table needs at least two points"));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) || pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(WedError::config("g.table abscissae must be finite and distinct"));
        }
        let s: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let n = s.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut lower = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = s[i] - s[i - 1];
                let h1 = s[i + 1] - s[i];
                lower[i - 1] = h0 / 6.0;
                diag[i - 1] = (h0 + h1) / 3.0;
                upper[i - 1] = h1 / 6.0;
                rhs[i - 1] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            }
            let inner = Tridiagonal::new(lower, diag, upper)?.solve(&rhs)?;
            m[1..n - 1].copy_from_slice(&inner);
        }
        Ok(NaturalSpline { s, y, m })
    }

    /// Value, first and second derivative.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.s.len();
        let slope_at = |i: usize, at_right: bool| {
            // derivative at knot i from segment (i, i+1) or (i-1, i)
            if at_right {
                let h = self.s[i] - self.s[i - 1];
                (self.y[i] - self.y[i - 1]) / h + h * (2.0 * self.m[i] + self.m[i - 1]) / 6.0
            } else {
                let h = self.s[i + 1] - self.s[i];
                (self.y[i + 1] - self.y[i]) / h - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0
            }
        };
        if x <= self.s[0] {
            let d = slope_at(0, false);
            return (self.y[0] + d * (x - self.s[0]), d, 0.0);
        }
        if x >= self.s[n - 1] {
            let d = slope_at(n - 1, true);
            return (self.y[n - 1] + d * (x - self.s[n - 1]), d, 0.0);
        }
        let i = match self.s.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.s[i + 1] - self.s[i];
        let a = (self.s[i + 1] - x) / h;
        let b = (x - self.s[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let value = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        (value, d1, d2)
    }
}

/// Which element of `beta` to use at a jump when a single value is required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSelection {
    Midpoint,
    Lower,
    Upper,
}

/// A point where `beta` is the whole interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub at: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Convex `beta_hat >= 0` with `beta_hat(0) = 0` and its subdifferential `beta`.
///
/// Away from the listed jumps `beta` is single-valued and given by `beta`;
/// `dbeta` is its classical derivative there.
#[derive(Clone)]
pub struct ConvexPotential {
    name: String,
    beta_hat: ScalarFn,
    beta: ScalarFn,
    dbeta: ScalarFn,
    jumps: Vec<Jump>,
    selection: Option<JumpSelection>,
    growth_c: f64,
    curvature: f64,
}

impl fmt::Debug for ConvexPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexPotential")
            .field("name", &self.name)
            .field("jumps", &self.jumps)
            .field("selection", &self.selection)
            .field("growth_c", &self.growth_c)
            .finish()
    }
}

impl ConvexPotential {
    /// A smooth potential. `curvature` is a representative value of `beta'`
    /// used only to build preconditioners.
    pub fn smooth(
        name: impl Into<String>,
        beta_hat: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dbeta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        growth_c: f64,
        curvature: f64,
    ) -> Self {
        ConvexPotential {
            name: name.into(),
            beta_hat: Arc::new(beta_hat),
            beta: Arc::new(beta),
            dbeta: Arc::new(dbeta),
            jumps: Vec::new(),
            selection: None,
            growth_c,
            curvature,
        }
    }

    /// `beta = 0`.
    pub fn zero() -> Self {
        Self::smooth("zero", |_| 0.0, |_| 0.0, |_| 0.0, 1.0, 0.0)
    }

    /// `beta(r) = a r`, `beta_hat(r) = a r^2 / 2`, with `a >= 0`.
    pub fn linear(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(WedError::config(format!("linear(a) needs a >= 0, got {a}")));
        }
        Ok(Self::smooth(
            format!("linear({a})"),
            move |r| 0.5 * a * r * r,
            move |r| a * r,
            move |_| a,
            a.max(1.0),
            a,
        ))
    }

    /// `beta(r) = a r + b sign(r)` with the full interval `[-b, b]` at `r = 0`.
    pub fn linear_plus_sign(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0 && b.is_finite() && b >= 0.0) {
            return Err(WedError::config(format!("linear_plus_sign(a, b) needs a, b >= 0, got ({a}, {b})")));
        }
        let mut p = Self::smooth(
            format!("linear_plus_sign({a},{b})"),
            move |r| 0.5 * a * r * r + b * r.abs(),
            move |r| a * r + b * r.signum(),
            move |_| a,
            (a + b).max(1.0),
            a,
        );
        if b > 0.0 {
            p.jumps.push(Jump { at: 0.0, lower: -b, upper: b });
            p.selection = Some(JumpSelection::Midpoint);
        }
        Ok(p)
    }

    pub fn with_jump(mut self, jump: Jump) -> Self {
        self.jumps.push(jump);
        self
    }

    pub fn with_selection(mut self, selection: Option<JumpSelection>) -> Self {
        self.selection = selection;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn selection(&self) -> Option<JumpSelection> {
        self.selection
    }

    pub fn growth_c(&self) -> f64 {
        self.growth_c
    }

    pub fn curvature_hint(&self) -> f64 {
        self.curvature
    }

    pub fn is_smooth(&self) -> bool {
        self.jumps.is_empty()
    }

    #[inline]
    pub fn beta_hat(&self, r: f64) -> f64 {
        (self.beta_hat)(r)
    }

    pub(crate) fn jump_at(&self, r: f64) -> Option<&Jump> {
        self.jumps.iter().find(|j| j.at == r)
    }

    /// Single-valued evaluation of `beta`, applying the configured selection at jumps.
    pub fn beta(&self, r: f64) -> Result<f64> {
        match self.jump_at(r) {
            None => Ok((self.beta)(r)),
            Some(j) => match self.selection {
                None => Err(WedError::SetValued { at: r }),
                Some(JumpSelection::Midpoint) => Ok(0.5 * (j.lower + j.upper)),
                Some(JumpSelection::Lower) => Ok(j.lower),
                Some(JumpSelection::Upper) => Ok(j.upper),
            },
        }
    }

    /// The branch of `beta` away from jumps; used where a jump point is never hit.
    #[inline]
    pub(crate) fn beta_branch(&self, r: f64) -> f64 {
        (self.beta)(r)
    }

    #[inline]
    pub fn dbeta(&self, r: f64) -> f64 {
        (self.dbeta)(r)
    }

    /// Whether `eta` lies in `beta(r)` up to `tol`.
    pub fn contains(&self, r: f64, eta: f64, tol: f64) -> bool {
        match self.jump_at(r) {
            Some(j) => eta >= j.lower - tol && eta <= j.upper + tol,
            None => (eta - (self.beta)(r)).abs() <= tol * (1.0 + eta.abs()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_mobility_derivatives_match_differences() {
        for g in [Mobility::unit(), Mobility::quadratic(), Mobility::bounded(0.5)] {
            for &s in &[-1.7, -0.3, 0.0, 0.4, 2.2] {
                let e = 1e-5;
                let d1 = (g.g(s + e) - g.g(s - e)) / (2.0 * e);
                let d2 = (g.dg(s + e) - g.dg(s - e)) / (2.0 * e);
                assert!((d1 - g.dg(s)).abs() < 1e-8, "{} g' at {s}", g.name());
                assert!((d2 - g.d2g(s)).abs() < 1e-7, "{} g'' at {s}", g.name());
            }
        }
    }

    #[test]
    fn spline_interpolates_and_is_c2() {
        let pts: Vec<(f64, f64)> = (-4..=4).map(|i| (i as f64 * 0.5, 1.0 + (i as f64 * 0.5).powi(2))).collect();
        let g = Mobility::table(&pts).unwrap();
        for &(s, y) in &pts {
            assert!((g.g(s) - y).abs() < 1e-12);
        }
        // continuity of g, g', g'' across the right end of the table
        let e = 1e-9;
        assert!((g.g(2.0 - e) - g.g(2.0 + e)).abs() < 1e-7);
        assert!((g.dg(2.0 - e) - g.dg(2.0 + e)).abs() < 1e-6);
        assert!((g.d2g(2.0 - e) - g.d2g(2.0 + e)).abs() < 1e-6);
        assert!(Mobility::table(&[(0.0, 1.0)]).is_err());
        assert!(Mobility::table(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn sign_potential_needs_selection_at_the_jump() {
        let p = ConvexPotential::linear_plus_sign(1.0, 2.0).unwrap();
        assert_eq!(p.beta(0.0).unwrap(), 0.0);
        assert_eq!(p.beta(1.0).unwrap(), 3.0);
        assert_eq!(p.beta(-1.0).unwrap(), -3.0);
        let bare = p.clone().with_selection(None);
        assert!(matches!(bare.beta(0.0), Err(WedError::SetValued { .. })));
        assert!(bare.beta(0.5).is_ok());
        assert_eq!(p.clone().with_selection(Some(JumpSelection::Upper)).beta(0.0).unwrap(), 2.0);
        assert!(p.contains(0.0, 1.5, 0.0));
        assert!(!p.contains(0.0, 2.5, 0.0));
    }

    #[test]
    fn builtin_potentials_are_monotone_and_coercive() {
        let pots = [
            ConvexPotential::zero(),
            ConvexPotential::linear(2.0).unwrap(),
            ConvexPotential::linear_plus_sign(1.0, 0.5).unwrap(),
        ];
        let samples: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.37).collect();
        for p in &pots {
            assert_eq!(p.beta_hat(0.0), 0.0);
            let c = p.growth_c();
            for &r1 in &samples {
                assert!(p.beta_hat(r1) >= 0.0);
                let b1 = p.beta(r1).unwrap();
                assert!(b1.abs() <= c * (1.0 + r1.abs()) + 1e-12);
                for &r2 in &samples {
                    let b2 = p.beta(r2).unwrap();
                    assert!((b1 - b2) * (r1 - r2) >= 0.0);
                }
            }
        }
        assert!(ConvexPotential::linear(-1.0).is_err());
    }
}
