//! Eigenvalues of dense complex matrices: Householder reduction to upper
//! Hessenberg form followed by single-shift complex QR iteration with
//! Wilkinson shifts and deflation.

use crate::error::{Error, Result};
use crate::numcore::lu::Lu;
use crate::numcore::matrix::{vec_norm2, ComplexMatrix, C64, ONE, ZERO};

/// Limits for the QR eigenvalue iteration.
#[derive(Clone, Copy, Debug)]
pub struct EigenConfig {
    /// Largest accepted dimension.
    pub max_dim: usize,
    /// QR sweeps allowed per deflated eigenvalue.
    pub max_iterations_per_eigenvalue: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            max_dim: 64,
            max_iterations_per_eigenvalue: 60,
        }
    }
}

/// All eigenvalues with multiplicity, using the default configuration.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    eigenvalues_with(m, &EigenConfig::default())
}

pub fn eigenvalues_with(m: &ComplexMatrix, config: &EigenConfig) -> Result<Vec<C64>> {
    let n = m.require_square()?;
    if n > config.max_dim {
        return Err(Error::TooLarge {
            dim: n,
            cap: config.max_dim,
        });
    }
    let mut h = hessenberg(m);
    let mut eig = vec![ZERO; n];
    if n == 1 {
        eig[0] = h[(0, 0)];
        return Ok(eig);
    }

    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let cap = config.max_iterations_per_eigenvalue;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // look for a negligible subdiagonal entry in the active block
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if scale == 0.0 {
                scale = h.max_abs();
            }
            if sub <= eps * scale || sub < f64::MIN_POSITIVE {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > cap {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_step(&mut h, l, hi, shift);
    }
    Ok(eig)
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Givens rotation `[c s; -s̄ c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, ONE);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// One explicitly shifted QR step on the active block `l..=hi`.
fn qr_step(h: &mut ComplexMatrix, l: usize, hi: usize, shift: C64) {
    for i in l..=hi {
        h[(i, i)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - l);
    for k in l..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (off, &(c, s)) in rots.iter().enumerate() {
        let k = l + off;
        let top = (k + 2).min(hi);
        for i in l..=top {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
    }
    for i in l..=hi {
        h[(i, i)] += shift;
    }
}

/// Unitary similarity to upper Hessenberg form.
pub fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut h = m.clone();
    if n < 3 {
        return h;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            ONE
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = vec_norm2(&v);
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2vv*) H
        for j in 0..n {
            let dot: C64 = (k + 1..n).map(|i| v[i - k - 1].conj() * h[(i, j)]).sum();
            for i in k + 1..n {
                h[(i, j)] -= v[i - k - 1] * dot * 2.0;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let dot: C64 = (k + 1..n).map(|j| h[(i, j)] * v[j - k - 1]).sum();
            for j in k + 1..n {
                h[(i, j)] -= dot * v[j - k - 1].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

/// Unit eigenvector for a computed eigenvalue by inverse iteration.
pub fn eigenvector(m: &ComplexMatrix, lambda: C64) -> Result<Vec<C64>> {
    let n = m.require_square()?;
    let scale = m.max_abs().max(1.0);
    // perturb the shift slightly so the shifted matrix factors
    let mut shifted = m.shift_diagonal(-(lambda + C64::new(scale * 1e-13, scale * 1e-13)));
    let mut lu = Lu::factor(&shifted)?;
    if lu.relative_min_pivot() == 0.0 {
        shifted = m.shift_diagonal(-(lambda + C64::new(scale * 1e-10, 0.0)));
        lu = Lu::factor(&shifted)?;
    }
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0, 0.1 * i as f64)).collect();
    for _ in 0..4 {
        let y = lu.solve_vec(&x);
        let nrm = vec_norm2(&y);
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        x = y.iter().map(|z| z / nrm).collect();
    }
    let nrm = vec_norm2(&x);
    Ok(x.iter().map(|z| z / nrm).collect())
}

/// Largest real part over all eigenvalues.
pub fn spectral_abscissa(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}
