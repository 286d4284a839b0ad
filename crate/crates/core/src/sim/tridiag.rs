//! Thomas algorithm for the tridiagonal systems produced by the implicit
//! radial diffusion stencils.

/// Tridiagonal system `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`.
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

    /// Solves `A x = rhs` without pivoting. The diffusion matrices built here
    /// are strictly diagonally dominant, so elimination is stable.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(rhs.len(), n, "rhs length must match system size");
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = if n > 1 { self.upper[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            if i + 1 < n {
                c[i] = self.upper[i] / denom;
            }
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(m: &Tridiagonal, rhs: &[f64]) -> Vec<f64> {
        let n = m.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][i] = m.diag[i];
            if i > 0 {
                a[i][i - 1] = m.lower[i];
            }
            if i + 1 < n {
                a[i][i + 1] = m.upper[i];
            }
            a[i][n] = rhs[i];
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
            x[i] = (a[i][n] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn single_equation() {
        let mut m = Tridiagonal::zeros(1);
        m.diag[0] = 4.0;
        assert_eq!(m.solve(&[2.0]), vec![0.5]);
    }

    proptest! {
        #[test]
        fn matches_dense_elimination(
            n in 2usize..40,
            seed in proptest::collection::vec(-1.0f64..1.0, 160),
        ) {
            let mut m = Tridiagonal::zeros(n);
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                m.lower[i] = seed[i];
                m.upper[i] = seed[40 + i];
                m.diag[i] = 2.5 + seed[80 + i].abs();
                rhs[i] = seed[120 + i] * 10.0;
            }
            let x = m.solve(&rhs);
            let oracle = dense_solve(&m, &rhs);
            for (a, b) in x.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            let back = m.apply(&x);
            for (a, b) in back.iter().zip(&rhs) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
