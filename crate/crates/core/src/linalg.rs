//! Small sparse symmetric solver kit for the implicit parts of a step.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub(crate) struct Csr<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                let k = vals.len() - 1;
                vals[k] = vals[k] + v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for r in 0..self.n {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    fn diagonal(&self) -> Vec<T> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .find(|&k| self.cols[k] == r)
                    .map_or(T::zero(), |k| self.vals[k])
            })
            .collect()
    }

    fn is_tridiagonal(&self) -> bool {
        (0..self.n).all(|r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).all(|k| self.cols[k].abs_diff(r) <= 1)
        })
    }

    /// Direct solve for tridiagonal matrices, preconditioned CG otherwise.
    pub fn solve(&self, b: &[T], rel_tol: T, max_iter: usize) -> Result<Vec<T>> {
        if self.n == 0 {
            return Ok(Vec::new());
        }
        if self.is_tridiagonal() {
            self.thomas(b)
        } else {
            self.pcg(b, rel_tol, max_iter)
        }
    }

    fn thomas(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        let mut lower = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut upper = vec![T::zero(); n];
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                if c + 1 == r {
                    lower[r] = self.vals[k];
                } else if c == r {
                    diag[r] = self.vals[k];
                } else {
                    upper[r] = self.vals[k];
                }
            }
        }
        let mut cp = vec![T::zero(); n];
        let mut dp = vec![T::zero(); n];
        let mut denom = diag[0];
        if denom == T::zero() {
            return Err(singular());
        }
        cp[0] = upper[0] / denom;
        dp[0] = b[0] / denom;
        for i in 1..n {
            denom = diag[i] - lower[i] * cp[i - 1];
            if denom == T::zero() || !denom.is_finite() {
                return Err(singular());
            }
            cp[i] = upper[i] / denom;
            dp[i] = (b[i] - lower[i] * dp[i - 1]) / denom;
        }
        let mut x = vec![T::zero(); n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        Ok(x)
    }

    fn pcg(&self, b: &[T], rel_tol: T, max_iter: usize) -> Result<Vec<T>> {
        let n = self.n;
        let inv_diag: Vec<T> = self
            .diagonal()
            .into_iter()
            .map(|d| if d > T::zero() { d.recip() } else { T::one() })
            .collect();
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>();
        let bnorm = dot(b, b).sqrt();
        let mut x = vec![T::zero(); n];
        if bnorm == T::zero() {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&a, &d)| a * d).collect();
        let mut p = z.clone();
        let mut ap = vec![T::zero(); n];
        let mut rz = dot(&r, &z);
        let mut rnorm = bnorm;
        for _ in 0..max_iter {
            self.matvec(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > T::zero()) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] = x[i] + alpha * p[i];
                r[i] = r[i] - alpha * ap[i];
            }
            rnorm = dot(&r, &r).sqrt();
            if rnorm <= rel_tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NoConvergence {
            solver: "conjugate gradient",
            iterations: max_iter,
            residual: (rnorm / bnorm).to_f64_lossy(),
        })
    }
}

fn singular() -> Error {
    Error::NoConvergence {
        solver: "tridiagonal elimination",
        iterations: 0,
        residual: f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_plus_identity(n: usize, shift: f64) -> Csr<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn thomas_and_cg_agree() {
        let a = laplace_plus_identity(50, 0.1);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = a.thomas(&b).unwrap();
        let x2 = a.pcg(&b, 1e-14, 500).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-10);
        }
        let mut ax = vec![0.0; 50];
        a.matvec(&x1, &mut ax);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]);
        assert_eq!(a.diagonal(), vec![3.0, 1.0]);
    }
}
