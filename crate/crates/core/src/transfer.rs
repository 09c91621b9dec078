//! Transfer functions `H(λ) = C(A − λ)⁻¹B` of linear time-invariant
//! systems, their suprema over the imaginary axis and over shifted integer
//! frequencies, and spectral summaries of the generator.
//!
//! The sign convention `C(A − λ)⁻¹B` is used throughout. The alternative
//! `C(λ − A)⁻¹B` differs only by sign, so every norm below is unaffected.

use crate::error::{Error, Result};
use crate::numcore::{
    eigenvalues, induced_norm, induced_norm_upper_bound, maximize_on_line, resolvent_apply, ComplexMatrix, InducedNorm,
    LineSearch, NormSpec, C64,
};
use crate::par;

/// Eigenvalues with `|Re λ|` below this are treated as lying on the axis.
pub const AXIS_GAP: f64 = 1e-9;

/// `x' = Ax + Bu`, `y = Cx` with norms on state, input and output spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct LtiSystem {
    a: ComplexMatrix,
    b: ComplexMatrix,
    c: ComplexMatrix,
    pub norm_x: NormSpec,
    pub norm_u: NormSpec,
    pub norm_y: NormSpec,
}

impl LtiSystem {
    pub fn new(
        a: ComplexMatrix,
        b: ComplexMatrix,
        c: ComplexMatrix,
        norm_x: NormSpec,
        norm_u: NormSpec,
        norm_y: NormSpec,
    ) -> Result<Self> {
        let n = a.require_square()?;
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!("B has {} rows, A is {n}x{n}", b.rows())));
        }
        if c.cols() != n {
            return Err(Error::DimensionMismatch(format!("C has {} columns, A is {n}x{n}", c.cols())));
        }
        Ok(Self {
            a,
            b,
            c,
            norm_x,
            norm_u,
            norm_y,
        })
    }

    /// `B = C = I` with the same norm on every space.
    pub fn unstructured(a: ComplexMatrix, norm: NormSpec) -> Result<Self> {
        let n = a.require_square()?;
        let id = ComplexMatrix::identity(n);
        Self::new(a, id.clone(), id, norm, norm, norm)
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }

    /// Same system with generator `A + shift·I`.
    pub fn shifted(&self, shift: C64) -> Self {
        Self {
            a: self.a.shift_diagonal(shift),
            ..self.clone()
        }
    }

    pub fn with_b(&self, b: ComplexMatrix) -> Result<Self> {
        Self::new(self.a.clone(), b, self.c.clone(), self.norm_x, self.norm_u, self.norm_y)
    }

    pub fn with_c(&self, c: ComplexMatrix) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), c, self.norm_x, self.norm_u, self.norm_y)
    }

    /// Same matrices with every space carrying `norm`.
    pub fn with_norm(&self, norm: NormSpec) -> Self {
        Self {
            norm_x: norm,
            norm_u: norm,
            norm_y: norm,
            ..self.clone()
        }
    }

    /// True when both input and output spaces carry the Euclidean norm.
    pub fn is_hilbert(&self) -> bool {
        self.norm_u.is_l2() && self.norm_y.is_l2()
    }
}

/// `C (A − λ)⁻¹ B`.
pub fn transfer_eval(sys: &LtiSystem, lambda: C64) -> Result<ComplexMatrix> {
    Ok(sys.c() * &resolvent_apply(sys.a(), lambda, sys.b())?)
}

/// Induced `U → Y` norm of `H(is)` with an attaining input direction.
pub fn transfer_norm_at(sys: &LtiSystem, s: f64) -> Result<InducedNorm> {
    induced_norm(&transfer_eval(sys, C64::new(0.0, s))?, sys.norm_u, sys.norm_y)
}

/// Spectral data of a generator. At finite dimension the spectral
/// abscissa, the abscissa of uniform resolvent boundedness and the growth
/// bound all coincide.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<C64>,
    pub abscissa: f64,
    /// Smallest `|Re λ|` over the spectrum.
    pub axis_gap: f64,
    pub hyperbolic: bool,
    pub stable: bool,
    pub growth_bound: f64,
}

pub fn spectral_summary(a: &ComplexMatrix) -> Result<SpectralSummary> {
    let ev = eigenvalues(a)?;
    let abscissa = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let axis_gap = ev.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(SpectralSummary {
        abscissa,
        axis_gap,
        hyperbolic: axis_gap >= AXIS_GAP,
        stable: abscissa < -AXIS_GAP,
        growth_bound: abscissa,
        eigenvalues: ev,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupremumKind {
    RealAxis,
    /// Frequencies `k + shift`, `k ∈ ℤ`; `k` is the maximizing integer.
    IntegerLattice { shift: f64, k: i64 },
}

/// A supremum of `‖H(is)‖` together with where it is attained.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySupremum {
    pub value: f64,
    /// Maximizing frequency `s*` (equal to `k + shift` on the lattice).
    pub argmax: f64,
    pub kind: SupremumKind,
    pub tolerance: f64,
    /// False when the pointwise induced norm is itself a lower-bound search.
    pub exact_norm: bool,
}

/// Constants `(‖A‖_X, ‖C‖‖B‖)` of the tail bound
/// `‖H(is)‖ ≤ ‖C‖‖B‖ / (|s| − ‖A‖)` valid for `|s| > ‖A‖`.
fn resolvent_envelope(sys: &LtiSystem) -> Result<(f64, f64)> {
    let a = induced_norm_upper_bound(sys.a(), sys.norm_x, sys.norm_x)?;
    let b = induced_norm_upper_bound(sys.b(), sys.norm_u, sys.norm_x)?;
    let c = induced_norm_upper_bound(sys.c(), sys.norm_x, sys.norm_y)?;
    Ok((a, b * c))
}

fn envelope_at(a_norm: f64, cb: f64, s: f64) -> f64 {
    if s.abs() > a_norm {
        cb / (s.abs() - a_norm)
    } else {
        f64::INFINITY
    }
}

fn require_off_axis(spec: &SpectralSummary) -> Result<()> {
    if let Some(&z) = spec.eigenvalues.iter().find(|z| z.re.abs() < AXIS_GAP) {
        return Err(Error::AxisSpectrum { eigenvalue: z });
    }
    Ok(())
}

/// `sup_{s ∈ ℝ} ‖C(A − is)⁻¹B‖` in the induced `U → Y` norm.
pub fn sup_transfer_real_axis(sys: &LtiSystem, tol: f64) -> Result<FrequencySupremum> {
    let spec = spectral_summary(sys.a())?;
    require_off_axis(&spec)?;
    let exact_norm = transfer_norm_at(sys, 0.0)?.exact;
    if sys.b().is_zero() || sys.c().is_zero() {
        return Ok(FrequencySupremum {
            value: 0.0,
            argmax: 0.0,
            kind: SupremumKind::RealAxis,
            tolerance: tol,
            exact_norm,
        });
    }
    let (a_norm, cb) = resolvent_envelope(sys)?;
    let window = a_norm + 10.0;
    // peaks have width of order the distance of the spectrum to the axis
    let step = (2.0 * window / 2000.0).min(spec.axis_gap / 8.0).max(2.0 * window / 200_000.0);
    let mut search = LineSearch::new(window, step, tol);
    search.seeds = spec.eigenvalues.iter().map(|z| z.im).chain([0.0]).collect();
    let g = |s: f64| transfer_norm_at(sys, s).map(|n| n.value).unwrap_or(f64::INFINITY);
    let best = maximize_on_line(g, |s| envelope_at(a_norm, cb, s), &search)?;
    if !best.value.is_finite() {
        return Err(Error::InSpectrum {
            lambda: C64::new(0.0, best.argmax),
        });
    }
    Ok(FrequencySupremum {
        value: best.value,
        argmax: best.argmax,
        kind: SupremumKind::RealAxis,
        tolerance: tol,
        exact_norm,
    })
}

/// `max_{k ∈ ℤ} ‖C(A − iξ − ik)⁻¹B‖`. Ties go to the smallest `|k|`, then
/// the smaller `k`.
pub fn sup_transfer_integers(sys: &LtiSystem, xi: f64, tol: f64) -> Result<FrequencySupremum> {
    let (a_norm, cb) = resolvent_envelope(sys)?;
    let value_at = |k: i64| -> Result<InducedNorm> { transfer_norm_at(sys, k as f64 + xi) };
    let exact_norm = value_at(0)?.exact;

    let mut half = (a_norm.ceil() as i64 + xi.abs().ceil() as i64 + 2).max(4);
    let mut best: Option<(i64, f64)> = None;
    let mut done_lo = 1i64;
    let mut done_hi = 0i64;
    loop {
        let ks: Vec<i64> = (-half..done_lo).chain(done_hi + 1..=half).collect();
        let vals = par::map_slice(&ks, |&k| value_at(k).map(|n| n.value));
        for (&k, v) in ks.iter().zip(vals) {
            let v = v?;
            best = match best {
                None => Some((k, v)),
                Some((bk, bv)) => {
                    let better = v > bv || (v == bv && (k.abs(), k) < (bk.abs(), bk));
                    Some(if better { (k, v) } else { (bk, bv) })
                }
            };
        }
        done_lo = -half;
        done_hi = half;
        let (_, bv) = best.expect("non-empty lattice window");
        // every frequency beyond the window satisfies |k + ξ| ≥ half + 1 − |ξ|
        let edge = (half + 1) as f64 - xi.abs();
        if envelope_at(a_norm, cb, edge) < bv || bv == 0.0 && envelope_at(a_norm, cb, edge) <= tol {
            break;
        }
        if half > 1 << 22 {
            return Err(Error::EnvelopeNotDominated {
                envelope: envelope_at(a_norm, cb, edge),
                best: bv,
            });
        }
        half *= 2;
    }
    let (k, value) = best.expect("non-empty lattice window");
    Ok(FrequencySupremum {
        value,
        argmax: k as f64 + xi,
        kind: SupremumKind::IntegerLattice { shift: xi, k },
        tolerance: tol,
        exact_norm,
    })
}
