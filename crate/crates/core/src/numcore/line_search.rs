//! Global maximization of a continuous function on the real line: dense
//! grid scan over a window, golden-section refinement of every grid-local
//! maximum, and a tail envelope that must drop below the best value.

use crate::error::{Error, Result};
use crate::par;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Scan configuration for [`maximize_on_line`].
#[derive(Clone, Debug)]
pub struct LineSearch {
    /// Half-width `S` of the scanned window `[-S, S]`.
    pub window: f64,
    /// Grid spacing.
    pub step: f64,
    /// Target accuracy of the reported maximum.
    pub tol: f64,
    /// Extra abscissae always evaluated (e.g. imaginary parts of eigenvalues).
    pub seeds: Vec<f64>,
    /// How many times the window may double while the envelope is not yet
    /// below the best value.
    pub max_doublings: u32,
    /// Cap on grid points per scan; the step is widened to respect it.
    pub max_points: usize,
}

impl LineSearch {
    pub fn new(window: f64, step: f64, tol: f64) -> Self {
        Self {
            window,
            step,
            tol,
            seeds: Vec::new(),
            max_doublings: 8,
            max_points: 400_001,
        }
    }

    /// Step from a Lipschitz estimate `L`: a grid of spacing `2·tol/L`
    /// would be certified; it is clamped to the point budget.
    pub fn from_lipschitz(window: f64, lipschitz: f64, tol: f64) -> Self {
        let step = if lipschitz > 0.0 { 2.0 * tol / lipschitz } else { window };
        Self::new(window, step, tol)
    }
}

/// Location and value of the maximum found.
#[derive(Clone, Debug)]
pub struct LineMax {
    pub argmax: f64,
    pub value: f64,
    /// Final window half-width.
    pub window: f64,
    /// Grid samples `(s, g(s))` of the last scan.
    pub samples: Vec<(f64, f64)>,
}

/// Maximizes `g` over ℝ. `envelope(S)` must bound `g(s)` for all `|s| ≥ S`
/// and be non-increasing in `S`.
pub fn maximize_on_line<G, E>(g: G, envelope: E, search: &LineSearch) -> Result<LineMax>
where
    G: Fn(f64) -> f64 + Sync + Send,
    E: Fn(f64) -> f64,
{
    if !(search.window > 0.0 && search.step > 0.0 && search.tol > 0.0) {
        return Err(Error::InvalidArgument(
            "line search needs positive window, step and tolerance".into(),
        ));
    }
    let mut window = search.window;
    let mut doublings = 0;
    loop {
        let best = scan(&g, window, search)?;
        let env = envelope(window);
        if env < best.value {
            return Ok(best);
        }
        if doublings >= search.max_doublings {
            return Err(Error::EnvelopeNotDominated {
                envelope: env,
                best: best.value,
            });
        }
        window *= 2.0;
        doublings += 1;
    }
}

fn scan<G>(g: &G, window: f64, search: &LineSearch) -> Result<LineMax>
where
    G: Fn(f64) -> f64 + Sync + Send,
{
    let span = 2.0 * window;
    let mut n = (span / search.step).ceil() as usize;
    n = n.clamp(2, search.max_points.max(3) - 1);
    let step = span / n as f64;
    let mut xs: Vec<f64> = (0..=n).map(|i| -window + i as f64 * step).collect();
    xs.extend(search.seeds.iter().copied().filter(|s| s.abs() < window));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals = par::map_slice(&xs, |&s| g(s));
    if vals.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("objective returned NaN".into()));
    }

    // grid-local maxima, refined on their bracketing cells
    let mut peaks: Vec<usize> = (0..xs.len())
        .filter(|&i| {
            let left = i == 0 || vals[i] >= vals[i - 1];
            let right = i + 1 == xs.len() || vals[i] >= vals[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    peaks.truncate(64);
    let refined = par::map_slice(&peaks, |&i| {
        let lo = if i == 0 { xs[0] } else { xs[i - 1] };
        let hi = if i + 1 == xs.len() { xs[i] } else { xs[i + 1] };
        golden_max(g, lo, hi, xs[i], vals[i])
    });

    let (mut arg, mut val) = (xs[0], vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v > val {
            arg = xs[i];
            val = v;
        }
    }
    for &(s, v) in &refined {
        if v > val {
            arg = s;
            val = v;
        }
    }
    Ok(LineMax {
        argmax: arg,
        value: val,
        window,
        samples: xs.into_iter().zip(vals).collect(),
    })
}

/// Golden-section search on `[lo, hi]`; never returns less than the seed.
pub fn golden_max<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64, seed_x: f64, seed_v: f64) -> (f64, f64) {
    let (mut best_x, mut best_v) = (seed_x, seed_v);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..200 {
        if (hi - lo) <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v > best_v {
                best_x = x;
                best_v = v;
            }
        }
    }
    (best_x, best_v)
}
