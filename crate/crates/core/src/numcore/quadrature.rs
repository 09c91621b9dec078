//! Adaptive Gauss–Kronrod (7/15) quadrature on kink-free panels, with
//! truncation of `[0, ∞)` integrals from an exponential decay envelope.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Quadrature settings.
#[derive(Clone, Debug)]
pub struct Quadrature {
    /// Absolute tolerance on the reported value.
    pub tolerance: f64,
    /// Interior points where the integrand is not smooth, in any order.
    pub kinks: Vec<f64>,
    /// Subdivision budget.
    pub max_intervals: usize,
}

impl Quadrature {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            kinks: Vec::new(),
            max_intervals: 50_000,
        }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

/// Envelope `|f(t)| ≤ amplitude · e^{-rate·t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEnvelope {
    pub amplitude: f64,
    pub rate: f64,
}

impl DecayEnvelope {
    /// Smallest `T ≥ 0` with tail bound `M e^{-βT}/β ≤ tol/2`.
    pub fn horizon(&self, tol: f64) -> Result<f64> {
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidDecay { rate: self.rate });
        }
        let t = (2.0 * self.amplitude / (self.rate * tol)).ln() / self.rate;
        Ok(t.max(0.0))
    }

    pub fn tail_bound(&self, horizon: f64) -> f64 {
        self.amplitude * (-self.rate * horizon).exp() / self.rate
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureResult {
    pub value: f64,
    /// Discretization error estimate plus truncated tail bound.
    pub error_estimate: f64,
    /// Truncation point (the upper limit for finite intervals).
    pub horizon: f64,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
    }
}

/// Adaptive integral of `f` over `[a, b]`, splitting first at the kinks.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, quad: &Quadrature) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            horizon: b,
            intervals: 0,
        });
    }
    let (value, error, intervals) = adaptive(&f, a, b, &quad.kinks, quad.tolerance, quad.max_intervals)?;
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        horizon: b,
        intervals,
    })
}

/// `∫₀^∞ f` for an integrand bounded by `decay`, truncated at the horizon
/// where the tail is at most half the tolerance.
pub fn integrate_decaying<F: Fn(f64) -> f64>(f: F, decay: DecayEnvelope, quad: &Quadrature) -> Result<QuadratureResult> {
    let horizon = decay.horizon(quad.tolerance)?;
    let tail = decay.tail_bound(horizon);
    if horizon == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: tail,
            horizon,
            intervals: 0,
        });
    }
    let (value, error, intervals) = adaptive(&f, 0.0, horizon, &quad.kinks, 0.5 * quad.tolerance, quad.max_intervals)?;
    Ok(QuadratureResult {
        value,
        error_estimate: error + tail,
        horizon,
        intervals,
    })
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    kinks: &[f64],
    tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64, usize)> {
    let mut breaks: Vec<f64> = kinks.iter().copied().filter(|&k| k > a && k < b).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(a);
    edges.extend(breaks);
    edges.push(b);

    let mut heap: BinaryHeap<Panel> = edges.windows(2).map(|w| gauss_kronrod(f, w[0], w[1])).collect();
    let mut done: Vec<Panel> = Vec::new();
    let mut total_err: f64 = heap.iter().map(|p| p.error).sum();

    while total_err > tol {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-13 * (1.0 + worst.a.abs()) {
            // cannot split further; keep it as is
            done.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = gauss_kronrod(f, worst.a, mid);
        let right = gauss_kronrod(f, mid, worst.b);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.len() + done.len() > max_intervals {
            return Err(Error::ToleranceNotReached {
                tolerance: tol,
                estimate: total_err,
                intervals: heap.len() + done.len(),
            });
        }
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    // recompute from the panels to avoid drift in the running estimate
    let err: f64 = panels.iter().map(|p| p.error).sum();
    if err > tol {
        return Err(Error::ToleranceNotReached {
            tolerance: tol,
            estimate: err,
            intervals: panels.len(),
        });
    }
    let value = panels.iter().map(|p| p.value).sum();
    Ok((value, err, panels.len()))
}
