//! ℓp vector norms, norming functionals and induced matrix norms.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numcore::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::numcore::svd::svd;

/// The ℓp norm carried by a finite-dimensional space, `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    p: f64,
}

impl NormSpec {
    pub const L1: NormSpec = NormSpec { p: 1.0 };
    pub const L2: NormSpec = NormSpec { p: 2.0 };
    pub const LINF: NormSpec = NormSpec { p: f64::INFINITY };

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(p));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_l1(&self) -> bool {
        self.p == 1.0
    }

    pub fn is_l2(&self) -> bool {
        self.p == 2.0
    }

    pub fn is_linf(&self) -> bool {
        self.p == f64::INFINITY
    }

    /// Norm of the dual space: `1/p + 1/p' = 1`.
    pub fn dual(&self) -> NormSpec {
        let q = if self.is_l1() {
            f64::INFINITY
        } else if self.is_linf() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        };
        NormSpec { p: q }
    }

    pub fn norm(&self, v: &[C64]) -> f64 {
        if self.is_linf() {
            v.iter().map(|z| z.norm()).fold(0.0, f64::max)
        } else if self.is_l1() {
            v.iter().map(|z| z.norm()).sum()
        } else if self.is_l2() {
            v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        } else {
            let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            m * v.iter().map(|z| (z.norm() / m).powf(self.p)).sum::<f64>().powf(1.0 / self.p)
        }
    }

    /// `v / ‖v‖`; the zero vector is returned unchanged.
    pub fn normalize(&self, v: &[C64]) -> Vec<C64> {
        let n = self.norm(v);
        if n == 0.0 {
            v.to_vec()
        } else {
            v.iter().map(|z| z / n).collect()
        }
    }

    /// Unit dual element `y*` with `Σ y*_j h_j = ‖h‖` and `‖y*‖_dual ≤ 1`.
    ///
    /// ℓ2 gives the normalized conjugate, ℓ1 the sign (phase) pattern, ℓ∞ a
    /// functional on one extreme coordinate, and other p the dual-exponent
    /// power functional. Returns `None` for the zero vector.
    pub fn norming_functional(&self, h: &[C64]) -> Option<Vec<C64>> {
        let nrm = self.norm(h);
        if nrm == 0.0 {
            return None;
        }
        let phase = |z: &C64| if z.norm() == 0.0 { ZERO } else { z.conj() / z.norm() };
        let out = if self.is_l1() {
            h.iter().map(phase).collect()
        } else if self.is_linf() {
            let (k, _) = h
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (i, z)| if z.norm() > b.1 { (i, z.norm()) } else { b });
            let mut y = vec![ZERO; h.len()];
            y[k] = phase(&h[k]);
            y
        } else if self.is_l2() {
            h.iter().map(|z| z.conj() / nrm).collect()
        } else {
            let p = self.p;
            h.iter()
                .map(|z| phase(z) * (z.norm() / nrm).powf(p - 1.0))
                .collect()
        };
        Some(out)
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_l1() {
            write!(f, "l1")
        } else if self.is_l2() {
            write!(f, "l2")
        } else if self.is_linf() {
            write!(f, "linf")
        } else {
            write!(f, "l{}", self.p)
        }
    }
}

/// Value of an induced norm together with a unit vector attaining it.
#[derive(Clone, Debug)]
pub struct InducedNorm {
    pub value: f64,
    /// False when the value comes from the sphere search and is only a
    /// certified lower bound.
    pub exact: bool,
    /// Unit vector in the domain norm with `‖Mx‖ = value`.
    pub witness: Vec<C64>,
}

/// Settings for the multi-start ascent used when no closed form exists.
#[derive(Clone, Copy, Debug)]
pub struct SphereSearch {
    pub starts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        Self {
            starts: 16,
            iterations: 200,
            seed: 0x5eed,
        }
    }
}

/// `sup{‖Mx‖_codomain : ‖x‖_domain = 1}`.
pub fn induced_pnorm(m: &ComplexMatrix, domain: NormSpec, codomain: NormSpec) -> Result<f64> {
    Ok(induced_norm(m, domain, codomain)?.value)
}

pub fn induced_norm(m: &ComplexMatrix, domain: NormSpec, codomain: NormSpec) -> Result<InducedNorm> {
    induced_norm_with(m, domain, codomain, &SphereSearch::default())
}

pub fn induced_norm_with(
    m: &ComplexMatrix,
    domain: NormSpec,
    codomain: NormSpec,
    search: &SphereSearch,
) -> Result<InducedNorm> {
    let cols = m.cols();
    if domain.is_l1() {
        // extreme points of the ℓ1 ball are phases of basis vectors
        let (j, v) = (0..cols)
            .map(|j| (j, codomain.norm(&m.column(j))))
            .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        let mut w = vec![ZERO; cols];
        w[j] = ONE;
        return Ok(InducedNorm {
            value: v,
            exact: true,
            witness: w,
        });
    }
    if codomain.is_linf() {
        // max over rows of the dual norm of the row
        let dual = domain.dual();
        let (i, v) = (0..m.rows())
            .map(|i| (i, dual.norm(m.row(i))))
            .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        let witness = dual
            .norming_functional(m.row(i))
            .unwrap_or_else(|| basis(cols, 0, domain));
        return Ok(InducedNorm {
            value: v,
            exact: true,
            witness,
        });
    }
    if domain.is_l2() && codomain.is_l2() {
        let d = svd(m)?;
        return Ok(InducedNorm {
            value: d.largest(),
            exact: true,
            witness: d.top_right_vector(),
        });
    }
    Ok(sphere_ascent(m, domain, codomain, search))
}

fn basis(n: usize, j: usize, norm: NormSpec) -> Vec<C64> {
    let mut e = vec![ZERO; n];
    e[j] = ONE;
    norm.normalize(&e)
}

/// Multi-start dual power iteration; each step cannot decrease `‖Mx‖`.
fn sphere_ascent(m: &ComplexMatrix, domain: NormSpec, codomain: NormSpec, search: &SphereSearch) -> InducedNorm {
    let n = m.cols();
    let mt = m.transpose();
    let dual_domain = domain.dual();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut starts: Vec<Vec<C64>> = (0..n.min(search.starts)).map(|j| basis(n, j, domain)).collect();
    while starts.len() < search.starts.max(1) {
        let x: Vec<C64> = (0..n)
            .map(|_| C64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        starts.push(domain.normalize(&x));
    }

    let mut best = InducedNorm {
        value: 0.0,
        exact: false,
        witness: basis(n, 0, domain),
    };
    for mut x in starts {
        let mut value = codomain.norm(&m.mul_vec(&x));
        for _ in 0..search.iterations {
            let y = m.mul_vec(&x);
            let Some(w) = codomain.norming_functional(&y) else { break };
            let z = mt.mul_vec(&w);
            let Some(next) = dual_domain.norming_functional(&z) else { break };
            let next = domain.normalize(&next);
            let v = codomain.norm(&m.mul_vec(&next));
            if v <= value * (1.0 + 1e-15) {
                if v > value {
                    value = v;
                    x = next;
                }
                break;
            }
            value = v;
            x = next;
        }
        if value > best.value {
            best = InducedNorm {
                value,
                exact: false,
                witness: x,
            };
        }
    }
    best
}

/// Rigorous upper bound on an induced norm: exact where a closed form
/// exists, otherwise `‖M‖_{1→q} · n^{1-1/p}` from `‖x‖₁ ≤ n^{1-1/p}‖x‖_p`.
pub fn induced_norm_upper_bound(m: &ComplexMatrix, domain: NormSpec, codomain: NormSpec) -> Result<f64> {
    let exact = induced_norm(m, domain, codomain)?;
    if exact.exact {
        return Ok(exact.value);
    }
    let one_to_q = induced_pnorm(m, NormSpec::L1, codomain)?;
    let p = domain.p();
    Ok(one_to_q * (m.cols() as f64).powf(1.0 - 1.0 / p))
}
