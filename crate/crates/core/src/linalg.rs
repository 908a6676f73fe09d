//! Small dense solvers used by the factorization and curve fitting code.

/// Cholesky factor of a symmetric positive semi-definite matrix.
///
/// Pivots that vanish (relative to the largest diagonal entry) are dropped:
/// the corresponding unknowns are pinned to zero, which still yields a
/// least-squares minimizer because a dropped column lies in the span of
/// the columns before it.
#[derive(Debug, Clone)]
pub struct SemidefiniteCholesky {
    n: usize,
    lower: Vec<f64>,
    dropped: Vec<bool>,
}

impl SemidefiniteCholesky {
    /// `gram` is row-major `n x n`.
    pub fn factor(gram: &[f64], n: usize) -> Self {
        assert_eq!(gram.len(), n * n);
        let max_diag = (0..n).map(|i| gram[i * n + i].abs()).fold(0.0, f64::max);
        let threshold = 1e-12 * max_diag.max(f64::MIN_POSITIVE);
        let mut lower = vec![0.0; n * n];
        let mut dropped = vec![false; n];
        for i in 0..n {
            let mut d = gram[i * n + i];
            for k in 0..i {
                d -= lower[i * n + k] * lower[i * n + k];
            }
            if d <= threshold {
                dropped[i] = true;
                continue;
            }
            let diag = d.sqrt();
            lower[i * n + i] = diag;
            for j in i + 1..n {
                let mut s = gram[j * n + i];
                for k in 0..i {
                    s -= lower[j * n + k] * lower[i * n + k];
                }
                lower[j * n + i] = s / diag;
            }
        }
        SemidefiniteCholesky { n, lower, dropped }
    }

    pub fn solve_into(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.n;
        // forward: L y = b
        for i in 0..n {
            if self.dropped[i] {
                out[i] = 0.0;
                continue;
            }
            let mut s = rhs[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * out[k];
            }
            out[i] = s / self.lower[i * n + i];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            if self.dropped[i] {
                out[i] = 0.0;
                continue;
            }
            let mut s = out[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * out[k];
            }
            out[i] = s / self.lower[i * n + i];
        }
    }
}

/// Least-squares solution of the `rows x cols` system `a x = b` by
/// Householder QR. `a` is row-major; requires `rows >= cols` and full
/// column rank.
pub fn least_squares(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(b.len(), rows);
    if rows < cols {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    for j in 0..cols {
        let norm = (j..rows).map(|i| a[i * cols + j].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[j * cols + j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..rows).map(|i| a[i * cols + j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..cols {
            let dot: f64 = (j..rows).map(|i| v[i - j] * a[i * cols + c]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..rows {
                a[i * cols + c] -= f * v[i - j];
            }
        }
        let dot: f64 = (j..rows).map(|i| v[i - j] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in j..rows {
            b[i] -= f * v[i - j];
        }
    }
    let scale = (0..cols).map(|j| a[j * cols + j].abs()).fold(0.0, f64::max);
    let mut x = vec![0.0; cols];
    for j in (0..cols).rev() {
        let r = a[j * cols + j];
        if r.abs() <= 1e-13 * scale {
            return None;
        }
        let mut s = b[j];
        for k in j + 1..cols {
            s -= a[j * cols + k] * x[k];
        }
        x[j] = s / r;
    }
    Some(x)
}
