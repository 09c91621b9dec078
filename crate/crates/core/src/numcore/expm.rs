//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13, chosen from the ℓ1 norm.

use crate::error::{Error, Result};
use crate::numcore::lu::Lu;
use crate::numcore::matrix::ComplexMatrix;

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^{tM}`.
pub fn expm(m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let n = m.require_square()?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("expm time {t} is not finite")));
    }
    if t == 0.0 || m.is_zero() {
        return Ok(ComplexMatrix::identity(n));
    }
    let a = m.scale_real(t);
    if n == 1 {
        return ComplexMatrix::new(1, 1, vec![a[(0, 0)].exp()]);
    }
    let norm = a.norm_one();
    for &(deg, theta) in &THETA[..4] {
        if norm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(&a, coeffs);
        }
    }
    let theta13 = THETA[4].1;
    let squarings = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings));
    let mut r = pade13(&scaled)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low(a: &ComplexMatrix, b: &[f64]) -> Result<ComplexMatrix> {
    let n = a.rows();
    let ident = ComplexMatrix::identity(n);
    let a2 = a * a;
    // even powers I, A², A⁴, ...
    let mut powers = vec![ident.clone(), a2.clone()];
    while powers.len() < b.len() / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u_inner = &u_inner + &p.scale_real(b[2 * k + 1]);
        v = &v + &p.scale_real(b[2 * k]);
    }
    let u = a * &u_inner;
    solve_pade(&u, &v)
}

fn pade13(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    let b = &B13;
    let ident = ComplexMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> ComplexMatrix {
        let mut m = &a6.scale_real(c6) + &a4.scale_real(c4);
        m = &m + &a2.scale_real(c2);
        if c0 != 0.0 {
            m = &m + &ident.scale_real(c0);
        }
        m
    };
    let u_hi = lin(b[13], b[11], b[9], 0.0);
    let u_inner = &(&a6 * &u_hi) + &lin(b[7], b[5], b[3], b[1]);
    let u = a * &u_inner;
    let v_hi = lin(b[12], b[10], b[8], 0.0);
    let v = &(&a6 * &v_hi) + &lin(b[6], b[4], b[2], b[0]);
    solve_pade(&u, &v)
}

/// `(V - U)⁻¹ (V + U)`.
fn solve_pade(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = Lu::factor(&(v - u))?;
    Ok(lu.solve(&(v + u)))
}
