//! LU factorization with partial pivoting and resolvent solves.

use crate::error::{Error, Result};
use crate::numcore::matrix::{ComplexMatrix, C64, ZERO};

/// Pivots smaller than this multiple of the matrix scale are treated as zero.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-13;

/// `P A = L U` for a square matrix, stored compactly.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: ComplexMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
    scale: f64,
}

impl Lu {
    /// Factors `a`. Never fails on singular input; check [`Lu::is_singular`].
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        let n = a.require_square()?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            min_pivot = min_pivot.min(pmag);
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            if pivot == ZERO {
                continue;
            }
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            min_pivot,
            scale,
        })
    }

    pub fn is_singular(&self) -> bool {
        self.min_pivot <= SINGULAR_PIVOT_RTOL * self.scale.max(f64::MIN_POSITIVE) * self.n as f64
    }

    /// Smallest pivot magnitude relative to the largest entry of the input.
    pub fn relative_min_pivot(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.min_pivot / self.scale
        }
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(b.rows(), self.n);
        let mut out = ComplexMatrix::zeros(self.n, b.cols());
        for j in 0..b.cols() {
            out.set_column(j, &self.solve_vec(&b.column(j)));
        }
        out
    }

    pub fn determinant(&self) -> C64 {
        let mut det = C64::new(1.0, 0.0);
        for i in 0..self.n {
            det *= self.lu[(i, i)];
        }
        // sign of the permutation
        let mut seen = vec![false; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

/// Solves `(A - λI) X = V`, reporting λ in the spectrum when the shifted
/// matrix is singular to tolerance.
pub fn resolvent_apply(a: &ComplexMatrix, lambda: C64, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    if v.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, A is {n}x{n}",
            v.rows()
        )));
    }
    let lu = Lu::factor(&a.shift_diagonal(-lambda))?;
    if lu.is_singular() {
        return Err(Error::InSpectrum { lambda });
    }
    Ok(lu.solve(v))
}

/// Inverse of a square matrix.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    let lu = Lu::factor(a)?;
    if lu.is_singular() {
        return Err(Error::InSpectrum { lambda: ZERO });
    }
    Ok(lu.solve(&ComplexMatrix::identity(n)))
}
