//! Nonautonomous systems `x' = A(t)x + B(t)u`, `y = C(t)x`: evolution
//! families from exponential-midpoint stepping on a global time lattice,
//! Datko integral tests, perturbed families with mild-solution residuals,
//! and the frequency response to `u(τ) = e^{iωτ}u₀`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numcore::matrix::{ONE, ZERO};
use crate::numcore::{eigenvalues, expm, induced_norm_upper_bound, ComplexMatrix, NormSpec, C64};
use crate::par;
use crate::transfer::LtiSystem;

/// Matrix-valued function of time.
#[derive(Clone)]
pub enum MatrixPath {
    Constant(ComplexMatrix),
    /// `[[−1 + a cos²t, 1 − a sin t cos t], [−1 − a sin t cos t, −1 + a sin²t]]`:
    /// frozen eigenvalues have real part `(a − 2)/2` for every `t`, yet
    /// `e^{(a−1)t}(cos t, −sin t)` solves the equation.
    Hale { a: f64 },
    /// `R(ωt) A₀ R(ωt)ᵀ` with `R` the rotation of the first coordinate plane.
    Rotating { base: ComplexMatrix, omega: f64 },
    /// Piecewise-linear interpolation through `(time, matrix)` samples,
    /// held constant outside the sampled range.
    Tabulated { times: Vec<f64>, matrices: Vec<ComplexMatrix> },
    /// Arbitrary function with a fixed shape `(rows, cols)`.
    Custom {
        shape: (usize, usize),
        f: Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>,
    },
}

impl fmt::Debug for MatrixPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixPath::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MatrixPath::Hale { a } => f.debug_struct("Hale").field("a", a).finish(),
            MatrixPath::Rotating { base, omega } => f
                .debug_struct("Rotating")
                .field("base", base)
                .field("omega", omega)
                .finish(),
            MatrixPath::Tabulated { times, .. } => f.debug_struct("Tabulated").field("samples", &times.len()).finish(),
            MatrixPath::Custom { shape, .. } => f.debug_struct("Custom").field("shape", shape).finish(),
        }
    }
}

fn plane_rotation(n: usize, angle: f64) -> ComplexMatrix {
    let mut r = ComplexMatrix::identity(n);
    let (s, c) = angle.sin_cos();
    r[(0, 0)] = C64::new(c, 0.0);
    r[(0, 1)] = C64::new(-s, 0.0);
    r[(1, 0)] = C64::new(s, 0.0);
    r[(1, 1)] = C64::new(c, 0.0);
    r
}

impl MatrixPath {
    pub fn tabulated(times: Vec<f64>, matrices: Vec<ComplexMatrix>) -> Result<Self> {
        if times.is_empty() || times.len() != matrices.len() {
            return Err(Error::InvalidArgument(format!(
                "tabulated path needs matching non-empty samples, got {} times and {} matrices",
                times.len(),
                matrices.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("tabulated times must be finite and strictly increasing".into()));
        }
        let shape = matrices[0].shape();
        if let Some((i, m)) = matrices.iter().enumerate().find(|(_, m)| m.shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} is {}x{}, sample 0 is {}x{}",
                m.rows(),
                m.cols(),
                shape.0,
                shape.1
            )));
        }
        Ok(MatrixPath::Tabulated { times, matrices })
    }

    pub fn rotating(base: ComplexMatrix, omega: f64) -> Result<Self> {
        let n = base.require_square()?;
        if n < 2 {
            return Err(Error::InvalidArgument("rotating generator needs dimension at least 2".into()));
        }
        Ok(MatrixPath::Rotating { base, omega })
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixPath::Constant(m) => m.shape(),
            MatrixPath::Hale { .. } => (2, 2),
            MatrixPath::Rotating { base, .. } => base.shape(),
            MatrixPath::Tabulated { matrices, .. } => matrices[0].shape(),
            MatrixPath::Custom { shape, .. } => *shape,
        }
    }

    pub fn at(&self, t: f64) -> ComplexMatrix {
        match self {
            MatrixPath::Constant(m) => m.clone(),
            MatrixPath::Hale { a } => {
                let (s, c) = t.sin_cos();
                ComplexMatrix::real(&[
                    &[-1.0 + a * c * c, 1.0 - a * s * c],
                    &[-1.0 - a * s * c, -1.0 + a * s * s],
                ])
            }
            MatrixPath::Rotating { base, omega } => {
                let r = plane_rotation(base.rows(), omega * t);
                &(&r * base) * &r.transpose()
            }
            MatrixPath::Tabulated { times, matrices } => {
                if t <= times[0] {
                    return matrices[0].clone();
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return matrices[last].clone();
                }
                let i = times.partition_point(|&x| x <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                &matrices[i].scale_real(1.0 - w) + &matrices[i + 1].scale_real(w)
            }
            MatrixPath::Custom { f, .. } => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MatrixPath::Constant(_))
    }

    /// Largest sampled induced norm on `[0, horizon]`.
    pub fn sampled_bound(&self, horizon: f64, domain: NormSpec, codomain: NormSpec) -> Result<f64> {
        let samples = if self.is_constant() { 1 } else { 257 };
        let mut best: f64 = 0.0;
        for i in 0..samples {
            let t = horizon * i as f64 / (samples.max(2) - 1) as f64;
            let m = self.at(t);
            if !m.all_finite() {
                return Err(Error::InvalidArgument(format!("matrix path is not finite at t = {t}")));
            }
            best = best.max(induced_norm_upper_bound(&m, domain, codomain)?);
        }
        Ok(best)
    }
}

/// Exact propagator `U(t, 0)` of the Hale family:
/// `R(t) diag(e^{(a−1)t}, e^{−t})` with `R(t) = [[cos t, sin t], [−sin t, cos t]]`.
pub fn hale_exact(a: f64, t: f64) -> ComplexMatrix {
    let (s, c) = t.sin_cos();
    let (g, d) = (((a - 1.0) * t).exp(), (-t).exp());
    ComplexMatrix::real(&[&[c * g, s * d], &[-s * g, c * d]])
}

/// `U(t, τ)` of the Hale family.
pub fn hale_exact_between(a: f64, t: f64, tau: f64) -> Result<ComplexMatrix> {
    Ok(&hale_exact(a, t) * &crate::numcore::inverse(&hale_exact(a, tau))?)
}

/// Two-parameter propagator of `x' = A(t)x`, built from one matrix
/// exponential per lattice cell `[kh, (k+1)h]` evaluated at the midpoint.
/// Cell matrices are cached; fractional cells at the ends are computed on
/// demand.
pub struct EvolutionFamily {
    generator: MatrixPath,
    step: f64,
    cache: RwLock<HashMap<i64, ComplexMatrix>>,
}

impl Clone for EvolutionFamily {
    fn clone(&self) -> Self {
        Self {
            generator: self.generator.clone(),
            step: self.step,
            cache: RwLock::new(self.cache.read().expect("cache lock").clone()),
        }
    }
}

impl fmt::Debug for EvolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionFamily")
            .field("generator", &self.generator)
            .field("step", &self.step)
            .finish()
    }
}

impl EvolutionFamily {
    pub fn new(generator: MatrixPath, step: f64) -> Result<Self> {
        let (r, c) = generator.shape();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(format!("step {step} must be positive")));
        }
        Ok(Self {
            generator,
            step,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn generator(&self) -> &MatrixPath {
        &self.generator
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.generator.shape().0
    }

    /// Same generator on a different lattice, with an empty cache.
    pub fn with_step(&self, step: f64) -> Result<Self> {
        Self::new(self.generator.clone(), step)
    }

    fn cell(&self, k: i64) -> ComplexMatrix {
        if let Some(m) = self.cache.read().expect("cache lock").get(&k) {
            return m.clone();
        }
        let h = self.step;
        let m = expm(&self.generator.at((k as f64 + 0.5) * h), h).expect("square generator");
        self.cache.write().expect("cache lock").entry(k).or_insert(m).clone()
    }

    /// Propagator over `[a, b]` within one lattice cell.
    fn segment(&self, a: f64, b: f64) -> ComplexMatrix {
        let h = self.step;
        let k = (a / h).round();
        if (a - k * h).abs() <= 1e-9 * h && (b - (k + 1.0) * h).abs() <= 1e-9 * h {
            return self.cell(k as i64);
        }
        expm(&self.generator.at(0.5 * (a + b)), b - a).expect("square generator")
    }

    /// Nodes `τ = n₀ < n₁ < ... = t`: the interior lattice points plus
    /// both ends. Ends within `1e-9·h` of a lattice point snap to it.
    pub fn nodes(&self, tau: f64, t: f64) -> Vec<f64> {
        let h = self.step;
        let snap = |x: f64| {
            let k = (x / h).round();
            if (x - k * h).abs() <= 1e-9 * h {
                k * h
            } else {
                x
            }
        };
        let (tau, t) = (snap(tau), snap(t));
        let mut out = vec![tau];
        let mut k = (tau / h).floor() as i64 + 1;
        while (k as f64) * h < t {
            let x = k as f64 * h;
            if x > tau {
                out.push(x);
            }
            k += 1;
        }
        if t > tau {
            out.push(t);
        }
        out
    }

    /// Per-segment propagators along [`EvolutionFamily::nodes`].
    fn segments(&self, nodes: &[f64]) -> Vec<ComplexMatrix> {
        nodes.windows(2).map(|w| self.segment(w[0], w[1])).collect()
    }

    fn check_times(t: f64, tau: f64) -> Result<()> {
        if !(t.is_finite() && tau.is_finite()) || t < tau {
            return Err(Error::InvalidArgument(format!("propagation needs t ≥ τ, got t = {t}, τ = {tau}")));
        }
        Ok(())
    }

    /// `U(t, τ)`.
    pub fn propagate(&self, t: f64, tau: f64) -> Result<ComplexMatrix> {
        Self::check_times(t, tau)?;
        let mut u = ComplexMatrix::identity(self.dim());
        if t == tau {
            return Ok(u);
        }
        let nodes = self.nodes(tau, t);
        for w in nodes.windows(2) {
            u = &self.segment(w[0], w[1]) * &u;
        }
        Ok(u)
    }

    /// `U(t, τ) x`.
    pub fn propagate_vec(&self, t: f64, tau: f64, x: &[C64]) -> Result<Vec<C64>> {
        Self::check_times(t, tau)?;
        let mut v = x.to_vec();
        for w in self.nodes(tau, t).windows(2) {
            v = self.segment(w[0], w[1]).mul_vec(&v);
        }
        Ok(v)
    }

    /// Trajectory `(t_j, U(t_j, τ) x)` on the nodes from `τ` to `t`.
    pub fn trajectory(&self, t: f64, tau: f64, x: &[C64]) -> Result<Vec<(f64, Vec<C64>)>> {
        Self::check_times(t, tau)?;
        let nodes = self.nodes(tau, t);
        let mut out = Vec::with_capacity(nodes.len());
        let mut v = x.to_vec();
        out.push((nodes[0], v.clone()));
        for w in nodes.windows(2) {
            v = self.segment(w[0], w[1]).mul_vec(&v);
            out.push((w[1], v.clone()));
        }
        Ok(out)
    }

    /// `(M, ω)` with `‖U(t, 0)‖ ≤ M e^{ωt}` on the samples: `ω` from a
    /// least-squares fit of `log ‖U(t, 0)‖`, `M` the smallest constant
    /// making the bound hold at every sample.
    pub fn exponential_bound(&self, horizon: f64, norm: NormSpec) -> Result<(f64, f64)> {
        let samples = 64;
        let mut u = ComplexMatrix::identity(self.dim());
        let mut pts = vec![(0.0, 0.0)];
        let mut last = 0.0;
        for i in 1..=samples {
            let t = horizon * i as f64 / samples as f64;
            u = &self.propagate(t, last)? * &u;
            last = t;
            let n = induced_norm_upper_bound(&u, norm, norm)?;
            pts.push((t, n.max(f64::MIN_POSITIVE).ln()));
        }
        let k = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let omega = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let log_m = pts.iter().map(|p| p.1 - omega * p.0).fold(f64::NEG_INFINITY, f64::max);
        Ok((log_m.exp(), omega))
    }
}

/// Nonautonomous system with time-dependent input and output maps.
#[derive(Clone, Debug)]
pub struct TimeVaryingSystem {
    pub family: EvolutionFamily,
    pub b: MatrixPath,
    pub c: MatrixPath,
    pub norm_x: NormSpec,
    pub norm_u: NormSpec,
    pub norm_y: NormSpec,
}

/// Horizon over which the uniform bounds of `B(·)` and `C(·)` are sampled.
const BOUND_HORIZON: f64 = 100.0;

impl TimeVaryingSystem {
    pub fn new(
        family: EvolutionFamily,
        b: MatrixPath,
        c: MatrixPath,
        norm_x: NormSpec,
        norm_u: NormSpec,
        norm_y: NormSpec,
    ) -> Result<Self> {
        let n = family.dim();
        if b.shape().0 != n {
            return Err(Error::DimensionMismatch(format!("B(t) has {} rows, A(t) is {n}x{n}", b.shape().0)));
        }
        if c.shape().1 != n {
            return Err(Error::DimensionMismatch(format!("C(t) has {} columns, A(t) is {n}x{n}", c.shape().1)));
        }
        b.sampled_bound(BOUND_HORIZON, norm_u, norm_x)?;
        c.sampled_bound(BOUND_HORIZON, norm_x, norm_y)?;
        Ok(Self {
            family,
            b,
            c,
            norm_x,
            norm_u,
            norm_y,
        })
    }

    /// Constant-coefficient embedding of an autonomous system.
    pub fn autonomous(sys: &LtiSystem, step: f64) -> Result<Self> {
        Self::new(
            EvolutionFamily::new(MatrixPath::Constant(sys.a().clone()), step)?,
            MatrixPath::Constant(sys.b().clone()),
            MatrixPath::Constant(sys.c().clone()),
            sys.norm_x,
            sys.norm_u,
            sys.norm_y,
        )
    }

    /// `B = C = I` with one norm everywhere.
    pub fn unstructured(family: EvolutionFamily, norm: NormSpec) -> Result<Self> {
        let id = ComplexMatrix::identity(family.dim());
        Self::new(
            family,
            MatrixPath::Constant(id.clone()),
            MatrixPath::Constant(id),
            norm,
            norm,
            norm,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.b.shape().1
    }

    pub fn output_dim(&self) -> usize {
        self.c.shape().0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatkoVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatkoProbe {
    pub tau: f64,
    pub x: Vec<C64>,
    /// `∫_τ^{τ+T} ‖U(t, τ)x‖^p dt`.
    pub integral: f64,
    pub half_integral: f64,
    pub three_quarter_integral: f64,
    /// Fitted exponential rate of `‖U(t, τ)x‖` over the second half.
    pub growth_exponent: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatkoReport {
    pub p: f64,
    pub horizon: f64,
    pub sup_integral: f64,
    pub verdict: DatkoVerdict,
    pub growth_exponent: f64,
    pub probes: Vec<DatkoProbe>,
}

/// Initial times probed by [`datko_test`].
pub const DATKO_TAUS: [f64; 3] = [0.0, 1.3, 2.9];
/// Number of seeded random unit states per initial time.
pub const DATKO_RANDOM_STATES: usize = 4;

/// Datko integrals `∫_τ^{τ+T} ‖U(t, τ)x‖^p dt` over a few initial times
/// and unit states, by the trapezoid rule on the propagation lattice.
///
/// Stable when every probe saturates (the last quarter adds less than
/// `1e-6` of the total), unstable when some probe more than doubles
/// between `T/2` and `T` by a margin (super-linear growth), inconclusive
/// otherwise.
pub fn datko_test(sys: &TimeVaryingSystem, p: f64, horizon: f64, seed: u64) -> Result<DatkoReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidNorm(p));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let n = sys.family.dim();
    let norm = sys.norm_x;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = ONE;
            e
        })
        .collect();
    for _ in 0..DATKO_RANDOM_STATES {
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        states.push(norm.normalize(&v));
    }
    let h = sys.family.step();
    let jobs: Vec<(f64, Vec<C64>)> = DATKO_TAUS
        .iter()
        .map(|&tau| (tau / h).round() * h)
        .flat_map(|tau| states.iter().map(move |x| (tau, x.clone())))
        .collect();
    let probes = par::map_slice(&jobs, |(tau, x)| datko_probe(sys, p, *tau, x, horizon))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let sup_integral = probes.iter().map(|q| q.integral).fold(0.0, f64::max);
    let growth = probes.iter().map(|q| q.growth_exponent).fold(f64::NEG_INFINITY, f64::max);
    let saturated = probes
        .iter()
        .all(|q| q.integral - q.three_quarter_integral < 1e-6 * q.integral || q.integral == 0.0);
    let superlinear = probes.iter().any(|q| q.integral > 2.1 * q.half_integral);
    let verdict = if saturated {
        DatkoVerdict::Stable
    } else if superlinear {
        DatkoVerdict::Unstable
    } else {
        DatkoVerdict::Inconclusive
    };
    Ok(DatkoReport {
        p,
        horizon,
        sup_integral,
        verdict,
        growth_exponent: growth,
        probes,
    })
}

fn datko_probe(sys: &TimeVaryingSystem, p: f64, tau: f64, x: &[C64], horizon: f64) -> Result<DatkoProbe> {
    let traj = sys.family.trajectory(tau + horizon, tau, x)?;
    let norm = sys.norm_x;
    let vals: Vec<(f64, f64)> = traj.iter().map(|(t, v)| (t - tau, norm.norm(v))).collect();
    let mut running = 0.0;
    let mut half = None;
    let mut three_quarter = None;
    for w in vals.windows(2) {
        let (t0, a) = w[0];
        let (t1, b) = w[1];
        if half.is_none() && t0 >= 0.5 * horizon {
            half = Some(running);
        }
        if three_quarter.is_none() && t0 >= 0.75 * horizon {
            three_quarter = Some(running);
        }
        running += 0.5 * (t1 - t0) * (a.powf(p) + b.powf(p));
    }
    let pick = |frac: f64| -> (f64, f64) {
        let i = vals.partition_point(|v| v.0 < frac * horizon).min(vals.len() - 1);
        vals[i]
    };
    let (ta, na) = pick(0.5);
    let (tb, nb) = pick(1.0);
    let growth = if na > 0.0 && nb > 0.0 && tb > ta {
        (nb.ln() - na.ln()) / (tb - ta)
    } else {
        f64::NEG_INFINITY
    };
    Ok(DatkoProbe {
        tau,
        x: x.to_vec(),
        integral: running,
        half_integral: half.unwrap_or(running),
        three_quarter_integral: three_quarter.unwrap_or(running),
        growth_exponent: growth,
    })
}

/// Family generated by `A(t) + B(t)Δ(t)C(t)` on the same lattice.
pub fn perturbed_family(sys: &TimeVaryingSystem, delta: &MatrixPath) -> Result<EvolutionFamily> {
    let (m, k) = (sys.input_dim(), sys.output_dim());
    if delta.shape() != (m, k) {
        return Err(Error::DimensionMismatch(format!(
            "Δ(t) must be {m}x{k}, got {}x{}",
            delta.shape().0,
            delta.shape().1
        )));
    }
    let bound = delta.sampled_bound(BOUND_HORIZON, sys.norm_y, sys.norm_u)?;
    if !bound.is_finite() {
        return Err(Error::InvalidArgument("Δ(t) samples are unbounded".into()));
    }
    let h = sys.family.step();
    if let MatrixPath::Constant(d) = delta {
        if d.is_zero() {
            return EvolutionFamily::new(sys.family.generator().clone(), h);
        }
        if let (MatrixPath::Constant(a), MatrixPath::Constant(b), MatrixPath::Constant(c)) =
            (sys.family.generator(), &sys.b, &sys.c)
        {
            return EvolutionFamily::new(MatrixPath::Constant(a + &(&(b * d) * c)), h);
        }
    }
    let (a, b, c, d) = (sys.family.generator().clone(), sys.b.clone(), sys.c.clone(), delta.clone());
    let n = sys.family.dim();
    EvolutionFamily::new(
        MatrixPath::Custom {
            shape: (n, n),
            f: Arc::new(move |t| &a.at(t) + &(&(&b.at(t) * &d.at(t)) * &c.at(t))),
        },
        h,
    )
}

/// Residual of the variation-of-parameters identity
/// `U₁(t,0)x = U(t,0)x + ∫₀^t U(t,τ)B(τ)Δ(τ)C(τ)U₁(τ,0)x dτ`,
/// relative to `‖U₁(t,0)x‖`, with the integral by the trapezoid rule on the
/// lattice.
pub fn mild_residual(
    sys: &TimeVaryingSystem,
    perturbed: &EvolutionFamily,
    delta: &MatrixPath,
    x: &[C64],
    t: f64,
) -> Result<f64> {
    let fam = &sys.family;
    let nodes = fam.nodes(0.0, t);
    let pert = perturbed.trajectory(t, 0.0, x)?;
    let forcing: Vec<Vec<C64>> = pert
        .iter()
        .map(|(tau, v)| {
            let g = &(&sys.b.at(*tau) * &delta.at(*tau)) * &sys.c.at(*tau);
            g.mul_vec(v)
        })
        .collect();
    let segs = fam.segments(&nodes);
    // backward products W_j = U(t, τ_j)
    let count = nodes.len();
    let mut integral = vec![ZERO; fam.dim()];
    let mut w = ComplexMatrix::identity(fam.dim());
    let mut prev = w.mul_vec(&forcing[count - 1]);
    for j in (0..count - 1).rev() {
        w = &w * &segs[j];
        let cur = w.mul_vec(&forcing[j]);
        let dt = nodes[j + 1] - nodes[j];
        for i in 0..integral.len() {
            integral[i] += (prev[i] + cur[i]) * (0.5 * dt);
        }
        prev = cur;
    }
    let free = fam.propagate_vec(t, 0.0, x)?;
    let target = &pert.last().expect("non-empty trajectory").1;
    let resid: Vec<C64> = (0..free.len()).map(|i| target[i] - free[i] - integral[i]).collect();
    let scale = sys.norm_x.norm(target).max(f64::MIN_POSITIVE);
    Ok(sys.norm_x.norm(&resid) / scale)
}

/// `∫₀^t C(t)U(t,τ)B(τ)u₀ e^{−iω(t−τ)} dτ`, the response at time `t` to
/// `u(τ) = e^{iωτ}u₀` with the phase `e^{iωt}` removed.
///
/// The state part `z` solves `z' = (A(t) − iω)z + B(t)u₀`, `z(0) = 0`; each
/// lattice cell uses the family's propagator with the trapezoid rule for
/// the forcing.
pub fn nonaut_freq_response(sys: &TimeVaryingSystem, omega: f64, u0: &[C64], t: f64) -> Result<Vec<C64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} must be non-negative")));
    }
    if u0.len() != sys.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "u₀ has {} entries, B(t) has {} columns",
            u0.len(),
            sys.input_dim()
        )));
    }
    let fam = &sys.family;
    let mut z = vec![ZERO; fam.dim()];
    if t > 0.0 {
        let nodes = fam.nodes(0.0, t);
        let mut f_prev = sys.b.at(nodes[0]).mul_vec(u0);
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dt = b - a;
            let phase = C64::from_polar(1.0, -omega * dt);
            let seg = fam.segment(a, b);
            let f_next = sys.b.at(b).mul_vec(u0);
            let carried = seg.mul_vec(&z);
            let pushed = seg.mul_vec(&f_prev);
            for i in 0..z.len() {
                z[i] = phase * carried[i] + (phase * pushed[i] + f_next[i]) * (0.5 * dt);
            }
            f_prev = f_next;
        }
    }
    Ok(sys.c.at(t).mul_vec(&z))
}

/// Real parts of the frozen-time eigenvalues of `A(t)` at the given times.
pub fn frozen_abscissae(path: &MatrixPath, times: &[f64]) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            Ok(eigenvalues(&path.at(t))?
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::inverse;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rotation() -> ComplexMatrix {
        ComplexMatrix::real(&[&[-1.0, 1.0], &[-1.0, -1.0]])
    }

    fn hale(a: f64, h: f64) -> EvolutionFamily {
        EvolutionFamily::new(MatrixPath::Hale { a }, h).unwrap()
    }

    #[test]
    fn constant_family_matches_expm() {
        let fam = EvolutionFamily::new(MatrixPath::Constant(rotation()), 1e-3).unwrap();
        let u = fam.propagate(1.0, 0.0).unwrap();
        assert!((&u - &expm(&rotation(), 1.0).unwrap()).max_abs() < 1e-10);
        let u = fam.propagate(2.3456, 0.1234).unwrap();
        assert!((&u - &expm(&rotation(), 2.3456 - 0.1234).unwrap()).max_abs() < 1e-10);
    }

    #[test]
    fn identity_at_equal_times_and_order_check() {
        let fam = hale(1.5, 1e-2);
        assert_eq!(fam.propagate(0.7, 0.7).unwrap(), ComplexMatrix::identity(2));
        assert!(fam.propagate(0.1, 0.2).is_err());
    }

    #[test]
    fn hale_solution_along_first_axis() {
        let fam = hale(1.5, 1e-3);
        let x = fam.propagate_vec(2.0 * PI, 0.0, &[ONE, ZERO]).unwrap();
        let want = PI.exp();
        assert!((x[0].re - want).abs() < 5e-3 * want);
        assert!(x[1].norm() < 5e-3 * want);
    }

    #[test]
    fn hale_exact_solves_the_equation() {
        let a = 1.5;
        for t in [0.3, 1.0, 2.7] {
            let d = 1e-6;
            let deriv = (&hale_exact(a, t + d) - &hale_exact(a, t - d)).scale_real(0.5 / d);
            let rhs = &MatrixPath::Hale { a }.at(t) * &hale_exact(a, t);
            assert!((&deriv - &rhs).max_abs() < 1e-7);
        }
    }

    #[test]
    fn frozen_spectra_are_stable() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.13).collect();
        for r in frozen_abscissae(&MatrixPath::Hale { a: 1.5 }, &times).unwrap() {
            assert_abs_diff_eq!(r, -0.25, epsilon = 1e-10);
        }
    }

    #[test]
    fn second_order_against_exact_propagator() {
        let errs: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&h| {
                let u = hale(1.5, h).propagate(2.05, 0.31).unwrap();
                (&u - &hale_exact_between(1.5, 2.05, 0.31).unwrap()).max_abs()
            })
            .collect();
        let slope = (errs[0] / errs[2]).log2() / 2.0;
        assert!((slope - 2.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn tabulated_and_rotating_paths() {
        let m0 = ComplexMatrix::real(&[&[0.0, 1.0], &[2.0, 3.0]]);
        let m1 = ComplexMatrix::real(&[&[2.0, 1.0], &[0.0, -1.0]]);
        let path = MatrixPath::tabulated(vec![0.0, 2.0], vec![m0.clone(), m1.clone()]).unwrap();
        let mid = path.at(0.5);
        assert!((&mid - &(&m0.scale_real(0.75) + &m1.scale_real(0.25))).max_abs() < 1e-15);
        assert_eq!(path.at(-1.0), m0);
        assert_eq!(path.at(5.0), m1);
        assert!(MatrixPath::tabulated(vec![1.0, 0.0], vec![m0.clone(), m1]).is_err());

        let rot = MatrixPath::rotating(rotation(), 0.7).unwrap();
        // a rotation-invariant generator does not change
        assert!((&rot.at(1.3) - &rotation()).max_abs() < 1e-14);
        let rot = MatrixPath::rotating(m0.clone(), 0.7).unwrap();
        let ev: Vec<f64> = frozen_abscissae(&rot, &[0.0, 0.9, 2.2]).unwrap();
        assert!(ev.iter().all(|r| (r - ev[0]).abs() < 1e-10));
    }

    #[test]
    fn datko_scalar_decay() {
        let fam = EvolutionFamily::new(MatrixPath::Constant(ComplexMatrix::real(&[&[-1.0]])), 1e-3).unwrap();
        let sys = TimeVaryingSystem::unstructured(fam, NormSpec::L1).unwrap();
        let r = datko_test(&sys, 1.0, 40.0, 1).unwrap();
        assert_eq!(r.verdict, DatkoVerdict::Stable);
        assert_abs_diff_eq!(r.sup_integral, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn datko_flags_hale_growth() {
        let sys = TimeVaryingSystem::unstructured(hale(1.5, 1e-3), NormSpec::L2).unwrap();
        let r = datko_test(&sys, 2.0, 40.0, 1).unwrap();
        assert_eq!(r.verdict, DatkoVerdict::Unstable);
        assert_abs_diff_eq!(r.growth_exponent, 0.5, epsilon = 0.02);
    }

    #[test]
    fn datko_rotation_matches_l1_integral() {
        let fam = EvolutionFamily::new(MatrixPath::Constant(rotation()), 1e-3).unwrap();
        let sys = TimeVaryingSystem::unstructured(fam, NormSpec::L1).unwrap();
        let r = datko_test(&sys, 1.0, 40.0, 1).unwrap();
        assert_eq!(r.verdict, DatkoVerdict::Stable);
        let e1 = r.probes.iter().find(|q| q.tau == 0.0 && q.x == vec![ONE, ZERO]).unwrap();
        assert_abs_diff_eq!(e1.integral, 1.262_434_309, epsilon = 1e-6);
    }

    #[test]
    fn datko_rejects_bad_arguments() {
        let sys = TimeVaryingSystem::unstructured(hale(1.5, 1e-2), NormSpec::L2).unwrap();
        assert!(datko_test(&sys, 0.5, 10.0, 1).is_err());
        assert!(datko_test(&sys, 1.0, -1.0, 1).is_err());
    }

    #[test]
    fn zero_perturbation_keeps_family() {
        let sys = TimeVaryingSystem::unstructured(hale(1.5, 1e-2), NormSpec::L2).unwrap();
        let fam = perturbed_family(&sys, &MatrixPath::Constant(ComplexMatrix::zeros(2, 2))).unwrap();
        assert_eq!(fam.propagate(1.0, 0.0).unwrap(), sys.family.propagate(1.0, 0.0).unwrap());
    }

    #[test]
    fn constant_perturbation_matches_expm() {
        let fam = EvolutionFamily::new(MatrixPath::Constant(rotation()), 1e-3).unwrap();
        let sys = TimeVaryingSystem::unstructured(fam, NormSpec::L2).unwrap();
        let d = ComplexMatrix::real(&[&[0.2, -0.1], &[0.05, 0.3]]);
        let pf = perturbed_family(&sys, &MatrixPath::Constant(d.clone())).unwrap();
        let want = expm(&(&rotation() + &d), 1.5).unwrap();
        assert!((&pf.propagate(1.5, 0.0).unwrap() - &want).max_abs() < 1e-10);
        let r = mild_residual(&sys, &pf, &MatrixPath::Constant(d), &[ONE, ZERO], 3.0).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn mild_residual_second_order_for_time_varying_delta() {
        let d = MatrixPath::Custom {
            shape: (2, 2),
            f: Arc::new(|t: f64| ComplexMatrix::real(&[&[0.3 * t.sin(), 0.0], &[0.1, -0.2 * t.cos()]])),
        };
        let res: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&h| {
                let sys = TimeVaryingSystem::unstructured(hale(0.8, h), NormSpec::L2).unwrap();
                let pf = perturbed_family(&sys, &d).unwrap();
                mild_residual(&sys, &pf, &d, &[ONE, ONE], 2.0).unwrap()
            })
            .collect();
        assert!(res[1] < 1e-3);
        assert!(res[1] < 0.35 * res[0], "{res:?}");
    }

    #[test]
    fn perturbation_shape_checked() {
        let sys = TimeVaryingSystem::unstructured(hale(1.5, 1e-2), NormSpec::L2).unwrap();
        assert!(perturbed_family(&sys, &MatrixPath::Constant(ComplexMatrix::zeros(3, 2))).is_err());
    }

    #[test]
    fn frequency_response_of_minus_identity() {
        let lti = LtiSystem::unstructured(ComplexMatrix::identity(2).scale_real(-1.0), NormSpec::L2).unwrap();
        let sys = TimeVaryingSystem::autonomous(&lti, 1e-3).unwrap();
        for t in [0.5, 1.0, 5.0] {
            let y = nonaut_freq_response(&sys, 0.0, &[ONE, ZERO], t).unwrap();
            assert_abs_diff_eq!(y[0].re, 1.0 - (-t as f64).exp(), epsilon = 1e-6);
            assert!(y[1].norm() < 1e-15 && y[0].im.abs() < 1e-15);
        }
    }

    #[test]
    fn frequency_response_identity_with_transient() {
        let lti = LtiSystem::unstructured(rotation(), NormSpec::L2).unwrap();
        let sys = TimeVaryingSystem::autonomous(&lti, 1e-3).unwrap();
        let omega = 1.3;
        let u0 = [ONE, C64::new(0.0, -0.5)];
        // C(iω − A)⁻¹Bu₀ − Ce^{tA}x₀e^{−iωt} with x₀ = (iω − A)⁻¹Bu₀
        let res = inverse(&rotation().scale_real(-1.0).shift_diagonal(C64::new(0.0, omega))).unwrap();
        let x0 = res.mul_vec(&u0);
        for t in [0.7, 3.0] {
            let y = nonaut_freq_response(&sys, omega, &u0, t).unwrap();
            let tr = expm(&rotation(), t).unwrap().mul_vec(&x0);
            let ph = C64::from_polar(1.0, -omega * t);
            for i in 0..2 {
                assert!((y[i] - (x0[i] - tr[i] * ph)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_input_map_gives_zero_response() {
        let fam = hale(1.5, 1e-2);
        let sys = TimeVaryingSystem::new(
            fam,
            MatrixPath::Constant(ComplexMatrix::zeros(2, 1)),
            MatrixPath::Constant(ComplexMatrix::identity(2)),
            NormSpec::L2,
            NormSpec::L2,
            NormSpec::L2,
        )
        .unwrap();
        let y = nonaut_freq_response(&sys, 0.4, &[ONE], 3.0).unwrap();
        assert!(y.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn exponential_bound_of_hale_family() {
        let (m, omega) = hale(1.5, 1e-2).exponential_bound(10.0, NormSpec::L2).unwrap();
        assert!((omega - 0.5).abs() < 0.05, "omega {omega}");
        assert!(m >= 1.0);
    }
}
