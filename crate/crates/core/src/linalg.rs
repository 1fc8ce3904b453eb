//! Small dense helpers: tridiagonal elimination and the discrete sine basis
//! that diagonalizes the Dirichlet stencil.

use crate::error::{Result, WedError};

/// Tridiagonal matrix with a precomputed Thomas factorization.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is unused),
/// `upper[i]` multiplies `x[i+1]` (so `upper[n-1]` is unused).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    // modified upper coefficients and pivots of the forward sweep
    c_star: Vec<f64>,
    pivot: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(WedError::Internal("tridiagonal bands have inconsistent lengths".into()));
        }
        let mut c_star = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        pivot[0] = diag[0];
        for i in 0..n {
            if i > 0 {
                pivot[i] = diag[i] - lower[i] * c_star[i - 1];
            }
            if pivot[i] == 0.0 || !pivot[i].is_finite() {
                return Err(WedError::Internal(format!("zero pivot in tridiagonal elimination at row {i}")));
            }
            c_star[i] = upper[i] / pivot[i];
        }
        Ok(Tridiagonal { lower, diag, upper, c_star, pivot })
    }

    /// Symmetric matrix with constant off-diagonal `off` and the given diagonal.
    pub fn symmetric(diag: Vec<f64>, off: f64) -> Result<Self> {
        let n = diag.len();
        let mut lower = vec![off; n];
        let mut upper = vec![off; n];
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        Self::new(lower, diag, upper)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.len();
        if x.len() != n {
            return Err(WedError::Shape { expected: n, found: x.len() });
        }
        x[0] /= self.pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_star[i] * x[i + 1];
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Orthonormal (Euclidean) discrete sine basis of size `n`:
/// `S[k][i] = sqrt(2/(n+1)) sin((k+1)(i+1) pi / (n+1))`. `S` is symmetric and
/// its own inverse.
#[derive(Debug, Clone)]
pub struct SineBasis {
    n: usize,
    table: Vec<f64>,
}

impl SineBasis {
    pub fn new(n: usize) -> Self {
        let scale = (2.0 / (n as f64 + 1.0)).sqrt();
        let mut table = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                let arg = ((k + 1) * (i + 1)) as f64 * std::f64::consts::PI / (n as f64 + 1.0);
                table[k * n + i] = scale * arg.sin();
            }
        }
        SineBasis { n, table }
    }

    /// Applies `S` (forward and inverse transform coincide).
    pub fn transform(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.table[k * self.n..(k + 1) * self.n];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_random_diagonally_dominant_system() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { -0.3 - 0.01 * i as f64 }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i == n - 1 { 0.0 } else { 0.7 * (i as f64).sin() }).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + i as f64 * 0.1).collect();
        let t = Tridiagonal::new(lower, diag, upper).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
        let x = t.solve(&b).unwrap();
        for (r, bi) in t.apply(&x).iter().zip(&b) {
            assert!((r - bi).abs() < 1e-14);
        }
        assert!(t.solve(&b[..3]).is_err());
    }

    #[test]
    fn sine_basis_is_an_involution() {
        let s = SineBasis::new(9);
        let x: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
        let mut y = vec![0.0; 9];
        let mut z = vec![0.0; 9];
        s.transform(&x, &mut y);
        s.transform(&y, &mut z);
        for (a, b) in x.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
