//! Norms of the input-output operator `u ↦ C ∫₀^t e^{(t-τ)A} B u(τ) dτ`
//! on `L^p(ℝ₊)`: the exact `L¹` time-domain formula, the exact `L²`
//! frequency formula for Hilbert input and output spaces, a Fourier
//! multiplier lower-bound search for general `p`, and the periodic
//! multiplier norm on `L^p(0, 2π)`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::numcore::matrix::{ONE, ZERO};
use crate::numcore::{
    expm, integrate_decaying, induced_norm, ComplexMatrix, DecayEnvelope, NormSpec, Quadrature, QuadratureResult, C64,
};
use crate::par;
use crate::transfer::{spectral_summary, sup_transfer_integers, sup_transfer_real_axis, transfer_eval, transfer_norm_at, LtiSystem, SpectralSummary};

/// Quadrature tolerance used by [`io_norm_l1`] unless overridden.
pub const L1_TOLERANCE: f64 = 1e-10;
/// Default evaluation budget of the multiplier searches.
pub const DEFAULT_BUDGET: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IoNormMode {
    ExactL1,
    ExactL2,
    /// Best ratio over a finite family of inputs; a lower bound only.
    LowerBoundSearch,
}

impl IoNormMode {
    pub fn is_exact(self) -> bool {
        !matches!(self, IoNormMode::LowerBoundSearch)
    }
}

/// Gaussian-windowed frequency comb in a fixed input direction:
/// `û(s) = Σ_j c_j exp(-(s - center - j·spacing)² / 2 width²) · direction`
/// with `j` running symmetrically around zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub center: f64,
    pub width: f64,
    pub spacing: f64,
    pub coefficients: Vec<C64>,
    pub direction: Vec<C64>,
}

/// `u(t) = Σ_k c_k e^{ikt} · direction` for `k = first_mode, first_mode + 1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    pub first_mode: i64,
    pub coefficients: Vec<C64>,
    pub direction: Vec<C64>,
}

/// What attains (or approximately attains) the reported value.
#[derive(Clone, Debug, PartialEq)]
pub enum IoWitness {
    /// Canonical basis input `e_j`.
    BasisColumn(usize),
    /// Constant input direction in `U`.
    Direction(Vec<C64>),
    /// Frequency `s*` of the transfer supremum.
    Frequency(f64),
    /// Lattice frequency `k + shift`.
    Lattice { k: i64, shift: f64 },
    Test(TestFunction),
    Periodic(TrigPolynomial),
    /// Zero operator: nothing to attain.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IoNormEstimate {
    /// Time-integrability exponent.
    pub p: f64,
    pub value: f64,
    pub mode: IoNormMode,
    pub witness: IoWitness,
    /// Number of ratio or integral evaluations spent.
    pub evaluations: usize,
}

fn require_stable(sys: &LtiSystem) -> Result<SpectralSummary> {
    let spec = spectral_summary(sys.a())?;
    if !spec.stable {
        return Err(Error::Unstable {
            abscissa: spec.abscissa,
        });
    }
    Ok(spec)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidNorm(p));
    }
    Ok(())
}

/// `∫₀^∞ ‖C e^{tA} B u‖_Y dt` with a kink-aware quadrature.
pub fn l1_witness_integral(sys: &LtiSystem, u: &[C64], tol: f64) -> Result<QuadratureResult> {
    let spec = require_stable(sys)?;
    if u.len() != sys.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} entries, B has {} columns",
            u.len(),
            sys.input_dim()
        )));
    }
    let x0 = sys.b().mul_vec(u);
    trajectory_integral(sys, &spec, &x0, tol)
}

fn output_at(sys: &LtiSystem, x0: &[C64], t: f64) -> Vec<C64> {
    let e = expm(sys.a(), t).expect("square generator");
    sys.c().mul_vec(&e.mul_vec(x0))
}

fn trajectory_integral(sys: &LtiSystem, spec: &SpectralSummary, x0: &[C64], tol: f64) -> Result<QuadratureResult> {
    let norm_y = sys.norm_y;
    let rate = -spec.abscissa / 2.0;
    // amplitude of the envelope, sampled on [0, 10/|s(A)|] with a factor 2 margin
    let window = 10.0 / spec.abscissa.abs();
    let samples = 400;
    let h = window / samples as f64;
    let step = expm(sys.a(), h)?;
    let mut x = x0.to_vec();
    let mut amp: f64 = 0.0;
    for i in 0..=samples {
        let t = i as f64 * h;
        amp = amp.max(norm_y.norm(&sys.c().mul_vec(&x)) * (rate * t).exp());
        x = step.mul_vec(&x);
    }
    let envelope = DecayEnvelope {
        amplitude: 2.0 * amp,
        rate,
    };
    if amp == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            horizon: 0.0,
            intervals: 0,
        });
    }
    let horizon = envelope.horizon(tol)?;
    let kinks = output_kinks(sys, x0, horizon)?;
    let f = |t: f64| norm_y.norm(&output_at(sys, x0, t));
    integrate_decaying(f, envelope, &Quadrature::new(tol).with_kinks(kinks))
}

/// Points in `(0, horizon)` where `t ↦ ‖y(t)‖_Y` may fail to be smooth:
/// zero crossings of output components (non-Euclidean norms) and switches
/// of the dominant component (ℓ∞).
fn output_kinks(sys: &LtiSystem, x0: &[C64], horizon: f64) -> Result<Vec<f64>> {
    let norm_y = sys.norm_y;
    if norm_y.is_l2() || horizon <= 0.0 {
        return Ok(Vec::new());
    }
    let a_scale = sys.a().norm_one().max(1.0);
    let steps = ((horizon * a_scale / 0.01).ceil() as usize).clamp(2000, 400_000);
    let h = horizon / steps as f64;
    let step = expm(sys.a(), h)?;
    let mut x = x0.to_vec();
    let mut prev = sys.c().mul_vec(&x);
    let scale = prev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let tiny = 1e-12 * scale;
    let mut kinks = Vec::new();
    let comp = |t: f64, i: usize| output_at(sys, x0, t)[i];

    for k in 1..=steps {
        x = step.mul_vec(&x);
        let cur = sys.c().mul_vec(&x);
        let (t0, t1) = ((k - 1) as f64 * h, k as f64 * h);
        for i in 0..cur.len() {
            let (a, b) = (prev[i], cur[i]);
            if a.re * b.re < 0.0 && a.im.abs() <= tiny && b.im.abs() <= tiny {
                kinks.push(bisect(t0, t1, |t| comp(t, i).re));
            } else if a.im * b.im < 0.0 && a.re.abs() <= tiny && b.re.abs() <= tiny {
                kinks.push(bisect(t0, t1, |t| comp(t, i).im));
            }
        }
        if norm_y.is_linf() {
            let (ia, ib) = (dominant(&prev), dominant(&cur));
            if ia != ib {
                kinks.push(bisect(t0, t1, |t| {
                    let y = output_at(sys, x0, t);
                    y[ia].norm() - y[ib].norm()
                }));
            }
        }
        prev = cur;
    }
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    Ok(kinks)
}

fn dominant(y: &[C64]) -> usize {
    let mut best = 0;
    for (i, z) in y.iter().enumerate() {
        if z.norm() > y[best].norm() {
            best = i;
        }
    }
    best
}

fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> f64 {
    let mut flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Norm of the input-output operator on `L¹(ℝ₊)`.
///
/// With ℓ1 on the input space the supremum over the unit ball is attained
/// at a basis column and the value is exact. Other input norms fall back
/// to a seeded sphere search whose result is a lower bound.
pub fn io_norm_l1(sys: &LtiSystem, tol: f64) -> Result<IoNormEstimate> {
    let spec = require_stable(sys)?;
    let m = sys.input_dim();
    let column_integral = |j: usize| -> Result<f64> {
        let mut e = vec![ZERO; m];
        e[j] = ONE;
        Ok(trajectory_integral(sys, &spec, &sys.b().mul_vec(&e), tol)?.value)
    };
    if sys.norm_u.is_l1() {
        let vals = par::map_range(m, column_integral);
        let mut best = (0, f64::NEG_INFINITY);
        for (j, v) in vals.into_iter().enumerate() {
            let v = v?;
            if v > best.1 {
                best = (j, v);
            }
        }
        return Ok(IoNormEstimate {
            p: 1.0,
            value: best.1,
            mode: IoNormMode::ExactL1,
            witness: IoWitness::BasisColumn(best.0),
            evaluations: m,
        });
    }
    sphere_search_l1(sys, &spec, tol, 0x10_0001)
}

fn sphere_search_l1(sys: &LtiSystem, spec: &SpectralSummary, tol: f64, seed: u64) -> Result<IoNormEstimate> {
    let m = sys.input_dim();
    let norm_u = sys.norm_u;
    let integral = |u: &[C64]| -> Result<f64> {
        Ok(trajectory_integral(sys, spec, &sys.b().mul_vec(u), tol)?.value)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<C64>> = (0..m)
        .map(|j| {
            let mut e = vec![ZERO; m];
            e[j] = ONE;
            e
        })
        .collect();
    for _ in 0..8 {
        let v: Vec<C64> = (0..m)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        starts.push(norm_u.normalize(&v));
    }
    let vals = par::map_slice(&starts, |u| integral(u));
    let mut evaluations = starts.len();
    let mut best_u = starts[0].clone();
    let mut best = f64::NEG_INFINITY;
    for (u, v) in starts.iter().zip(vals) {
        let v = v?;
        if v > best {
            best = v;
            best_u = u.clone();
        }
    }
    // seeded random-perturbation hill climb
    let mut radius = 0.3;
    while radius > 1e-3 {
        let mut improved = false;
        for _ in 0..4 {
            let trial: Vec<C64> = best_u
                .iter()
                .map(|z| z + C64::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)))
                .collect();
            if norm_u.norm(&trial) == 0.0 {
                continue;
            }
            let trial = norm_u.normalize(&trial);
            let v = integral(&trial)?;
            evaluations += 1;
            if v > best {
                best = v;
                best_u = trial;
                improved = true;
            }
        }
        if !improved {
            radius /= 2.0;
        }
    }
    Ok(IoNormEstimate {
        p: 1.0,
        value: best,
        mode: IoNormMode::LowerBoundSearch,
        witness: IoWitness::Direction(best_u),
        evaluations,
    })
}

/// Norm of the input-output operator on `L²(ℝ₊)` for Hilbert input and
/// output spaces, equal to `sup_s ‖H(is)‖₂`.
pub fn io_norm_l2_hilbert(sys: &LtiSystem, tol: f64) -> Result<IoNormEstimate> {
    if !sys.is_hilbert() {
        return Err(Error::UnsupportedNorm(format!(
            "the L2 frequency formula needs Euclidean input and output norms, got {} -> {}",
            sys.norm_u, sys.norm_y
        )));
    }
    require_stable(sys)?;
    let sup = sup_transfer_real_axis(sys, tol)?;
    Ok(IoNormEstimate {
        p: 2.0,
        value: sup.value,
        mode: IoNormMode::ExactL2,
        witness: IoWitness::Frequency(sup.argmax),
        evaluations: 1,
    })
}

/// Transfer function sampled on `center + (m - N/2)·ds`, `m = 0..N`.
struct SpectralGrid {
    center: f64,
    ds: f64,
    h: Vec<ComplexMatrix>,
    fft: Arc<dyn Fft<f64>>,
}

impl SpectralGrid {
    fn new(sys: &LtiSystem, center: f64, width: f64, gap: f64, reach: f64) -> Result<Self> {
        let half_time = 12.0 / width + 40.0 / gap;
        // N·ds must cover ±reach·width, with ds = π / half_time
        let need = (2.0 * reach * width * half_time / PI).ceil() as usize;
        let n = need.next_power_of_two().clamp(1 << 14, 1 << 17);
        let ds = PI / half_time;
        let h = par::map_range(n, |m| {
            let s = center + (m as f64 - (n / 2) as f64) * ds;
            transfer_eval(sys, C64::new(0.0, s))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self { center, ds, h, fft })
    }

    fn len(&self) -> usize {
        self.h.len()
    }

    fn frequency(&self, m: usize) -> f64 {
        self.center + (m as f64 - (self.len() / 2) as f64) * self.ds
    }

    /// `(Σ_n ‖y_n‖^p / Σ_n ‖u_n‖^p)^{1/p}` for the synthesized input and
    /// output. The time grid, its offset and the common phase factors do
    /// not affect the ratio.
    fn ratio(&self, sys: &LtiSystem, tf: &TestFunction, p: f64) -> Option<f64> {
        let n = self.len();
        let half = (tf.coefficients.len() / 2) as f64;
        let weight: Vec<C64> = (0..n)
            .map(|m| {
                let s = self.frequency(m);
                tf.coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let d = (s - tf.center - (j as f64 - half) * tf.spacing) / tf.width;
                        c * (-0.5 * d * d).exp()
                    })
                    .sum()
            })
            .collect();

        let mut w: Vec<Complex<f64>> = weight.iter().map(|z| Complex::new(z.re, z.im)).collect();
        self.fft.process(&mut w);
        let u_norm = sys.norm_u.norm(&tf.direction);
        let den: f64 = w.iter().map(|z| z.norm().powf(p)).sum::<f64>() * u_norm.powf(p);

        let k = sys.output_dim();
        let mut outputs: Vec<Vec<Complex<f64>>> = vec![vec![Complex::new(0.0, 0.0); n]; k];
        for m in 0..n {
            let hu = self.h[m].mul_vec(&tf.direction);
            for i in 0..k {
                let z = hu[i] * weight[m];
                outputs[i][m] = Complex::new(z.re, z.im);
            }
        }
        for out in outputs.iter_mut() {
            self.fft.process(out);
        }
        let mut y = vec![ZERO; k];
        let mut num = 0.0;
        for t in 0..n {
            for i in 0..k {
                y[i] = C64::new(outputs[i][t].re, outputs[i][t].im);
            }
            num += sys.norm_y.norm(&y).powf(p);
        }
        if !(den > 0.0) || !num.is_finite() {
            return None;
        }
        Some((num / den).powf(1.0 / p))
    }
}

const COMB_TERMS: usize = 5;
const WIDTH_STEPS: usize = 12;

fn basis_direction(m: usize, j: usize, norm: NormSpec) -> Vec<C64> {
    let mut e = vec![ZERO; m];
    e[j] = ONE;
    norm.normalize(&e)
}

/// Widths on a log grid from `gap·1e-3` to `gap·1e2`, visited from both
/// ends towards the middle so small budgets see narrow and wide inputs.
fn width_order(gap: f64) -> Vec<f64> {
    let grid: Vec<f64> = (0..WIDTH_STEPS)
        .map(|i| gap * 10f64.powf(-3.0 + 5.0 * i as f64 / (WIDTH_STEPS - 1) as f64))
        .collect();
    let mut out = Vec::with_capacity(WIDTH_STEPS);
    let (mut lo, mut hi) = (0, WIDTH_STEPS - 1);
    while lo <= hi {
        out.push(grid[lo]);
        if hi != lo {
            out.push(grid[hi]);
        }
        lo += 1;
        if hi == 0 {
            break;
        }
        hi -= 1;
    }
    out
}

/// Lower bound on the `L^p(ℝ₊)` norm of the input-output operator as a
/// Fourier multiplier, from Gaussian-windowed frequency combs.
///
/// Candidates are visited in a fixed order (center, then width, then
/// direction) and the best one is refined by coordinate ascent on the comb
/// coefficients, so the value is non-decreasing in `budget`.
pub fn multiplier_lower_bound(sys: &LtiSystem, p: f64, budget: usize) -> Result<IoNormEstimate> {
    check_exponent(p)?;
    let spec = require_stable(sys)?;
    if sys.b().is_zero() || sys.c().is_zero() {
        return Ok(IoNormEstimate {
            p,
            value: 0.0,
            mode: IoNormMode::LowerBoundSearch,
            witness: IoWitness::None,
            evaluations: 0,
        });
    }
    if budget == 0 {
        return Err(Error::BudgetExhausted);
    }
    let gap = spec.axis_gap;
    let sup = sup_transfer_real_axis(sys, 1e-9)?;
    let witness = transfer_norm_at(sys, sup.argmax)?.witness;
    let m = sys.input_dim();

    let mut centers = vec![sup.argmax];
    if sup.argmax.abs() > 1e-12 {
        centers.push(0.0);
    }
    let mut directions = vec![sys.norm_u.normalize(&witness)];
    for j in 0..m {
        let e = basis_direction(m, j, sys.norm_u);
        if !directions.iter().any(|d| d == &e) {
            directions.push(e);
        }
    }
    let mut single = vec![ZERO; COMB_TERMS];
    single[COMB_TERMS / 2] = ONE;
    let reach = 10.0 + (COMB_TERMS / 2) as f64 * 2.0;

    let mut evaluations = 0;
    let mut best: Option<(f64, TestFunction, usize)> = None;
    let mut grids: Vec<SpectralGrid> = Vec::new();
    'outer: for &center in &centers {
        for width in width_order(gap) {
            if evaluations >= budget {
                break 'outer;
            }
            let grid = SpectralGrid::new(sys, center, width, gap, reach)?;
            let take = directions.len().min(budget - evaluations);
            let candidates: Vec<TestFunction> = directions[..take]
                .iter()
                .map(|d| TestFunction {
                    center,
                    width,
                    spacing: 2.0 * width,
                    coefficients: single.clone(),
                    direction: d.clone(),
                })
                .collect();
            let ratios = par::map_slice(&candidates, |tf| grid.ratio(sys, tf, p));
            evaluations += take;
            for (tf, r) in candidates.into_iter().zip(ratios) {
                if let Some(r) = r {
                    if best.as_ref().map_or(true, |b| r > b.0) {
                        best = Some((r, tf, grids.len()));
                    }
                }
            }
            grids.push(grid);
        }
    }
    let (mut value, mut tf, grid_index) = best.ok_or(Error::BudgetExhausted)?;
    let grid = &grids[grid_index];

    let moves = [ONE, -ONE, C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
    let mut delta = 0.5;
    'ascent: while delta >= 1.0 / 64.0 {
        let mut improved = false;
        for j in 0..COMB_TERMS {
            for mv in moves {
                if evaluations >= budget {
                    break 'ascent;
                }
                let mut trial = tf.clone();
                trial.coefficients[j] += mv * delta;
                evaluations += 1;
                if let Some(r) = grid.ratio(sys, &trial, p) {
                    if r > value {
                        value = r;
                        tf = trial;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            delta /= 2.0;
        }
    }
    Ok(IoNormEstimate {
        p,
        value,
        mode: IoNormMode::LowerBoundSearch,
        witness: IoWitness::Test(tf),
        evaluations,
    })
}

const PERIODIC_HALF_WIDTH: i64 = 10;
const PERIODIC_SAMPLES: usize = 512;

/// Norm of `u ↦ Σ_k C(A − iξ − ik)⁻¹B û_k e^{ikt}` on `L^p(0, 2π)`.
///
/// For `p = 2` with Hilbert input and output spaces this is exactly the
/// lattice supremum (Parseval). Otherwise the ratio is maximized over trig
/// polynomials with at most 21 coefficients and the result is a lower bound.
pub fn periodic_multiplier_norm(sys: &LtiSystem, xi: f64, p: f64, budget: usize) -> Result<IoNormEstimate> {
    check_exponent(p)?;
    let lattice = sup_transfer_integers(sys, xi, 1e-12)?;
    let k_star = match lattice.kind {
        crate::transfer::SupremumKind::IntegerLattice { k, .. } => k,
        crate::transfer::SupremumKind::RealAxis => unreachable!("lattice search returns lattice kind"),
    };
    if p == 2.0 && sys.is_hilbert() && lattice.exact_norm {
        return Ok(IoNormEstimate {
            p,
            value: lattice.value,
            mode: IoNormMode::ExactL2,
            witness: IoWitness::Lattice { k: k_star, shift: xi },
            evaluations: 1,
        });
    }
    if lattice.value == 0.0 {
        return Ok(IoNormEstimate {
            p,
            value: 0.0,
            mode: IoNormMode::LowerBoundSearch,
            witness: IoWitness::None,
            evaluations: 1,
        });
    }
    if budget == 0 {
        return Err(Error::BudgetExhausted);
    }
    let direction = sys.norm_u.normalize(&transfer_norm_at(sys, k_star as f64 + xi)?.witness);
    let first = k_star - PERIODIC_HALF_WIDTH;
    let modes = (2 * PERIODIC_HALF_WIDTH + 1) as usize;
    let responses: Vec<Vec<C64>> = (0..modes)
        .map(|j| {
            let k = first + j as i64;
            Ok(transfer_eval(sys, C64::new(0.0, k as f64 + xi))?.mul_vec(&direction))
        })
        .collect::<Result<_>>()?;
    let u_norm = sys.norm_u.norm(&direction);
    let phases: Vec<Vec<C64>> = (0..PERIODIC_SAMPLES)
        .map(|n| {
            let t = TAU * n as f64 / PERIODIC_SAMPLES as f64;
            (0..modes)
                .map(|j| C64::from_polar(1.0, (first + j as i64) as f64 * t))
                .collect()
        })
        .collect();
    let ratio = |c: &[C64]| -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        let k = sys.output_dim();
        for ph in &phases {
            let w: C64 = c.iter().zip(ph).map(|(a, b)| a * b).sum();
            den += (w.norm() * u_norm).powf(p);
            let mut y = vec![ZERO; k];
            for (j, resp) in responses.iter().enumerate() {
                let cj = c[j] * ph[j];
                if cj == ZERO {
                    continue;
                }
                for i in 0..k {
                    y[i] += resp[i] * cj;
                }
            }
            num += sys.norm_y.norm(&y).powf(p);
        }
        if den > 0.0 {
            Some((num / den).powf(1.0 / p))
        } else {
            None
        }
    };

    let mut candidates: Vec<Vec<C64>> = Vec::new();
    let centre = PERIODIC_HALF_WIDTH as usize;
    let mut order: Vec<usize> = vec![centre];
    for d in 1..=centre {
        order.push(centre - d);
        order.push(centre + d);
    }
    for &j in &order {
        let mut c = vec![ZERO; modes];
        c[j] = ONE;
        candidates.push(c);
    }
    // Fejér kernel centred on the best mode
    candidates.insert(
        1,
        (0..modes)
            .map(|j| {
                let d = (j as f64 - centre as f64).abs();
                C64::new(1.0 - d / (centre as f64 + 1.0), 0.0)
            })
            .collect(),
    );
    candidates.truncate(budget);
    let vals = par::map_slice(&candidates, |c| ratio(c));
    let mut evaluations = candidates.len();
    let mut best: Option<(f64, Vec<C64>)> = None;
    for (c, v) in candidates.into_iter().zip(vals) {
        if let Some(v) = v {
            if best.as_ref().map_or(true, |b| v > b.0) {
                best = Some((v, c));
            }
        }
    }
    let (mut value, mut coeffs) = best.ok_or(Error::BudgetExhausted)?;

    let moves = [ONE, -ONE, C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
    let mut delta = 0.5;
    'ascent: while delta >= 1.0 / 64.0 {
        let mut improved = false;
        for &j in &order {
            for mv in moves {
                if evaluations >= budget {
                    break 'ascent;
                }
                let mut trial = coeffs.clone();
                trial[j] += mv * delta;
                evaluations += 1;
                if let Some(r) = ratio(&trial) {
                    if r > value {
                        value = r;
                        coeffs = trial;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            delta /= 2.0;
        }
    }
    Ok(IoNormEstimate {
        p,
        value,
        mode: IoNormMode::LowerBoundSearch,
        witness: IoWitness::Periodic(TrigPolynomial {
            first_mode: first,
            coefficients: coeffs,
            direction,
        }),
        evaluations,
    })
}

/// Evaluates the periodic ratio for a single Fourier mode `k` in direction
/// `u`: a pure exponential passes through with the one transfer value.
pub fn periodic_single_mode_ratio(sys: &LtiSystem, xi: f64, k: i64, u: &[C64]) -> Result<f64> {
    let h = transfer_eval(sys, C64::new(0.0, k as f64 + xi))?;
    Ok(sys.norm_y.norm(&h.mul_vec(u)) / sys.norm_u.norm(u))
}

/// Best induced norm of `H(is)` over a set of frequencies, for callers that
/// compare the multiplier bound against single-frequency values.
pub fn best_pointwise(sys: &LtiSystem, frequencies: &[f64]) -> Result<f64> {
    let vals = par::map_slice(frequencies, |&s| {
        induced_norm(&transfer_eval(sys, C64::new(0.0, s))?, sys.norm_u, sys.norm_y).map(|n| n.value)
    });
    vals.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rotation(norm: NormSpec) -> LtiSystem {
        LtiSystem::unstructured(ComplexMatrix::real(&[&[-1.0, 1.0], &[-1.0, -1.0]]), norm).unwrap()
    }

    fn non_normal(norm: NormSpec) -> LtiSystem {
        LtiSystem::unstructured(ComplexMatrix::real(&[&[4.5, -2.5], &[12.5, -6.5]]), norm).unwrap()
    }

    fn minus_identity(n: usize, norm: NormSpec) -> LtiSystem {
        LtiSystem::unstructured(ComplexMatrix::identity(n).scale_real(-1.0), norm).unwrap()
    }

    #[test]
    fn l1_norm_of_rotation_example() {
        let r = io_norm_l1(&rotation(NormSpec::L1), L1_TOLERANCE).unwrap();
        assert_eq!(r.mode, IoNormMode::ExactL1);
        assert_abs_diff_eq!(r.value, 1.262_434_309, epsilon = 1e-8);
        assert_abs_diff_eq!(r.value, 1.0 / (1.0 - (-PI / 2.0).exp()), epsilon = 1e-9);
    }

    #[test]
    fn l1_norm_of_minus_identity() {
        let r = io_norm_l1(&minus_identity(3, NormSpec::L1), L1_TOLERANCE).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn euclidean_witness_integral_at_first_basis_vector() {
        let sys = non_normal(NormSpec::L2);
        let r = l1_witness_integral(&sys, &[ONE, ZERO], 1e-10).unwrap();
        assert_abs_diff_eq!(r.value, 7.748_310_791, epsilon = 1e-7);
    }

    #[test]
    fn euclidean_input_falls_back_to_search() {
        let sys = non_normal(NormSpec::L2);
        let r = io_norm_l1(&sys, 1e-8).unwrap();
        assert_eq!(r.mode, IoNormMode::LowerBoundSearch);
        assert!(r.value >= 7.748_310_791 - 1e-6);
    }

    #[test]
    fn l1_homogeneous_in_b() {
        let sys = rotation(NormSpec::L1);
        let base = io_norm_l1(&sys, 1e-11).unwrap().value;
        let scaled = sys.with_b(sys.b().scale_real(3.5)).unwrap();
        let v = io_norm_l1(&scaled, 1e-11).unwrap().value;
        assert_abs_diff_eq!(v, 3.5 * base, epsilon = 1e-9);
    }

    #[test]
    fn l1_rejects_unstable() {
        let sys = LtiSystem::unstructured(ComplexMatrix::real(&[&[1.0, 0.0], &[0.0, -1.0]]), NormSpec::L1).unwrap();
        assert!(matches!(io_norm_l1(&sys, 1e-8), Err(Error::Unstable { .. })));
    }

    #[test]
    fn hilbert_norms() {
        let r = io_norm_l2_hilbert(&minus_identity(2, NormSpec::L2), 1e-9).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-9);
        let sys = LtiSystem::unstructured(
            ComplexMatrix::from_diag(&[C64::new(-1.0, 0.0), C64::new(-3.0, 0.0)]),
            NormSpec::L2,
        )
        .unwrap();
        assert_abs_diff_eq!(io_norm_l2_hilbert(&sys, 1e-9).unwrap().value, 1.0, epsilon = 1e-9);
        assert!(matches!(
            io_norm_l2_hilbert(&rotation(NormSpec::L1), 1e-9),
            Err(Error::UnsupportedNorm(_))
        ));
    }

    #[test]
    fn multiplier_p2_reaches_transfer_supremum() {
        let sys = non_normal(NormSpec::L2);
        let sup = sup_transfer_real_axis(&sys, 1e-9).unwrap().value;
        let r = multiplier_lower_bound(&sys, 2.0, 24).unwrap();
        assert!(r.value <= sup * (1.0 + 1e-6));
        assert!(r.value >= sup * 0.98, "{} vs {sup}", r.value);
    }

    #[test]
    fn multiplier_p1_bounded_by_exact_l1() {
        let sys = rotation(NormSpec::L1);
        let exact = io_norm_l1(&sys, L1_TOLERANCE).unwrap().value;
        let r = multiplier_lower_bound(&sys, 1.0, DEFAULT_BUDGET).unwrap();
        assert!(r.value <= exact + 1e-6, "{} > {exact}", r.value);
        assert!(r.value >= 1.15, "{}", r.value);
    }

    #[test]
    fn multiplier_zero_operator() {
        let sys = rotation(NormSpec::L1).with_b(ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(multiplier_lower_bound(&sys, 3.0, 10).unwrap().value, 0.0);
    }

    #[test]
    fn multiplier_monotone_in_budget() {
        let sys = rotation(NormSpec::L1);
        let mut last = 0.0;
        for budget in [1, 4, 12, 40] {
            let v = multiplier_lower_bound(&sys, 1.5, budget).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn periodic_exact_for_hilbert() {
        let r = periodic_multiplier_norm(&minus_identity(1, NormSpec::L2), 0.0, 2.0, 10).unwrap();
        assert_eq!(r.mode, IoNormMode::ExactL2);
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn periodic_rotation_example() {
        let sys = rotation(NormSpec::L2);
        let r = periodic_multiplier_norm(&sys, 0.0, 2.0, 10).unwrap();
        // Euclidean norm of the lattice resolvent, maximized at k = ±1
        let want = sup_transfer_integers(&sys, 0.0, 1e-12).unwrap().value;
        assert_abs_diff_eq!(r.value, want, epsilon = 1e-14);

        let l1 = rotation(NormSpec::L1);
        let r = periodic_multiplier_norm(&l1, 0.0, 2.0, 200).unwrap();
        assert_eq!(r.mode, IoNormMode::LowerBoundSearch);
        assert!(r.value >= (2f64.sqrt() + 1.0) / 5f64.sqrt() - 1e-12);
    }

    #[test]
    fn periodic_single_mode_passes_through() {
        let sys = rotation(NormSpec::L1);
        let u = [C64::new(0.3, -0.2), C64::new(-1.0, 0.5)];
        for p in [1.0, 1.7, 4.0] {
            let mut c = vec![ZERO; 21];
            c[13] = ONE;
            let single = periodic_single_mode_ratio(&sys, 0.25, 3, &u).unwrap();
            let h = transfer_eval(&sys, C64::new(0.0, 3.25)).unwrap();
            assert_abs_diff_eq!(single, NormSpec::L1.norm(&h.mul_vec(&u)) / NormSpec::L1.norm(&u), epsilon = 1e-15);
            let r = periodic_multiplier_norm(&sys, 0.25, p, 30).unwrap();
            assert!(r.value >= sup_transfer_integers(&sys, 0.25, 1e-12).unwrap().value - 1e-12);
        }
    }

    #[test]
    fn width_order_alternates_ends() {
        let w = width_order(1.0);
        assert_eq!(w.len(), WIDTH_STEPS);
        assert_abs_diff_eq!(w[0], 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 1e2, epsilon = 1e-12);
    }
}
