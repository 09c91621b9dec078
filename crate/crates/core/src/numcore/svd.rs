//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! The sweep orthogonalizes the columns of `M`, which diagonalizes `M*M`
//! implicitly; singular values come out with small relative error, which
//! the destabilizer singularity certificates depend on.

use crate::error::{Error, Result};
use crate::numcore::matrix::{vec_norm2, ComplexMatrix, C64, ZERO};

const MAX_SWEEPS: usize = 60;

/// `M = U diag(σ) Vᴴ` with σ sorted in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// Left singular vectors (columns), `rows x k` with `k = min(rows, cols)`.
    pub u: ComplexMatrix,
    /// Right singular vectors (columns), `cols x k`.
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn largest(&self) -> f64 {
        self.singular_values[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.singular_values.last().unwrap()
    }

    /// Unit right singular vector for the largest singular value.
    pub fn top_right_vector(&self) -> Vec<C64> {
        self.v.column(0)
    }

    /// Numerical rank: singular values above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > threshold).count()
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if m.rows() >= m.cols() {
        tall_svd(m)
    } else {
        let t = tall_svd(&m.adjoint())?;
        Ok(Svd {
            singular_values: t.singular_values,
            u: t.v,
            v: t.u,
        })
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values)
}

fn tall_svd(m: &ComplexMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let mut g: Vec<Vec<C64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..cols)
        .map(|j| {
            let mut e = vec![ZERO; cols];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    let eps = f64::EPSILON;
    let negligible = eps * eps * m.frobenius_norm().powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for j in 0..cols {
            for k in j + 1..cols {
                let alpha: f64 = g[j].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = g[k].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = g[j].iter().zip(&g[k]).map(|(a, b)| a.conj() * b).sum();
                let gmag = gamma.norm();
                if gmag == 0.0 || gmag <= eps * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                // rotate column k by the phase of gamma so the pair is real
                let phase = gamma / gmag;
                let zeta = (beta - alpha) / (2.0 * gmag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut g, j, k, phase, c, s);
                rotate(&mut v, j, k, phase, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: MAX_SWEEPS,
        });
    }

    let mut order: Vec<(usize, f64)> = g.iter().map(|col| vec_norm2(col)).enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut u = ComplexMatrix::zeros(rows, cols);
    let mut vm = ComplexMatrix::zeros(cols, cols);
    let mut sv = Vec::with_capacity(cols);
    for (dst, &(src, sigma)) in order.iter().enumerate() {
        sv.push(sigma);
        if sigma > 0.0 {
            let col: Vec<C64> = g[src].iter().map(|z| z / sigma).collect();
            u.set_column(dst, &col);
        }
        vm.set_column(dst, &v[src]);
    }
    Ok(Svd {
        singular_values: sv,
        u,
        v: vm,
    })
}

fn rotate(cols: &mut [Vec<C64>], j: usize, k: usize, phase: C64, c: f64, s: f64) {
    let conj_phase = phase.conj();
    let (left, right) = cols.split_at_mut(k);
    let a = &mut left[j];
    let b = &mut right[0];
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let yk = *y * conj_phase;
        let xj = *x;
        *x = xj * c - yk * s;
        *y = xj * s + yk * c;
    }
}

/// Induced Euclidean norm (largest singular value).
pub fn norm2(m: &ComplexMatrix) -> Result<f64> {
    Ok(svd(m)?.largest())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(rows: usize, cols: usize, seed: f64) -> ComplexMatrix {
        ComplexMatrix::new(
            rows,
            cols,
            (0..rows * cols)
                .map(|k| {
                    let x = k as f64 + seed;
                    C64::new((1.7 * x).sin(), (0.9 * x + 0.3).cos())
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn reconstructs_matrix() {
        for (r, c) in [(3, 3), (4, 2), (2, 5)] {
            let m = sample(r, c, 0.4);
            let d = svd(&m).unwrap();
            let k = r.min(c);
            let mut sigma = ComplexMatrix::zeros(k, k);
            for i in 0..k {
                sigma[(i, i)] = C64::new(d.singular_values[i], 0.0);
            }
            let u = if d.u.cols() > k {
                ComplexMatrix::new(r, k, (0..r).flat_map(|i| d.u.row(i)[..k].to_vec()).collect()).unwrap()
            } else {
                d.u.clone()
            };
            let v = if d.v.cols() > k {
                ComplexMatrix::new(c, k, (0..c).flat_map(|i| d.v.row(i)[..k].to_vec()).collect()).unwrap()
            } else {
                d.v.clone()
            };
            let back = &(&u * &sigma) * &v.adjoint();
            assert!((&back - &m).max_abs() < 1e-13, "{r}x{c}");
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn frobenius_identity() {
        let m = sample(4, 4, 2.0);
        let sv = singular_values(&m).unwrap();
        let fro2: f64 = sv.iter().map(|s| s * s).sum();
        assert_relative_eq!(fro2.sqrt(), m.frobenius_norm(), max_relative = 1e-14);
    }

    #[test]
    fn rank_deficient() {
        let m = ComplexMatrix::outer(
            &[C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-1.0, 1.0)],
            &[C64::new(0.5, 0.0), C64::new(1.0, -1.0)],
        );
        let d = svd(&m).unwrap();
        assert_eq!(d.rank(1e-12), 1);
    }
}
