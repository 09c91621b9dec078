//! Internal versus external stability at finite dimension: Hautus rank
//! tests, closed right half-plane poles of the transfer function, and the
//! combined verdict.
//!
//! An eigenvalue counts as unstable when its real part is not below
//! `-AXIS_GAP`, the same cut the spectral summary uses for `stable`.

use crate::error::Result;
use crate::numcore::{norm2, svd, ComplexMatrix, C64};
use crate::radius::io_norm;
use crate::transfer::{spectral_summary, transfer_eval, LtiSystem, AXIS_GAP};

/// Relative singular-value cut for the rank tests.
pub const RANK_RTOL: f64 = 1e-10;
/// Quadrature nodes on each residue contour.
pub const CONTOUR_NODES: usize = 64;
/// Relative size above which a contour moment signals a pole.
pub const POLE_RTOL: f64 = 1e-8;
/// Search budget for io-norm estimates that are not exact.
const IO_BUDGET: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub internal: bool,
    pub stabilizable: bool,
    pub detectable: bool,
    /// `H` has no poles in the closed right half-plane, hence is bounded
    /// and analytic there.
    pub externally_bounded: bool,
    pub io_bounded: bool,
    /// `internal ⟺ stabilizable ∧ detectable ∧ io_bounded`.
    pub consistent: bool,
    /// Estimate of `‖𝕃‖` when the system is internally stable.
    pub io_norm: Option<f64>,
    pub unstable_eigenvalues: Vec<C64>,
    /// Unstable eigenvalue clusters (centers) at which `H` has a pole.
    pub unstable_poles: Vec<C64>,
}

fn unstable(ev: &[C64]) -> Vec<C64> {
    ev.iter().copied().filter(|z| z.re >= -AXIS_GAP).collect()
}

fn rank_threshold(a: &ComplexMatrix) -> Result<f64> {
    Ok(RANK_RTOL * norm2(a)?.max(1.0))
}

fn full_rank_at_unstable(sys: &LtiSystem, stack: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix>) -> Result<bool> {
    let n = sys.state_dim();
    let thr = rank_threshold(sys.a())?;
    for lambda in unstable(&spectral_summary(sys.a())?.eigenvalues) {
        let m = stack(&sys.a().shift_diagonal(-lambda))?;
        if svd(&m)?.rank(thr) < n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `rank [A − λI | B] = n` at every unstable eigenvalue.
pub fn hautus_stabilizable(sys: &LtiSystem) -> Result<bool> {
    full_rank_at_unstable(sys, |m| m.hstack(sys.b()))
}

/// `rank [A − λI ; C] = n` at every unstable eigenvalue.
pub fn hautus_detectable(sys: &LtiSystem) -> Result<bool> {
    full_rank_at_unstable(sys, |m| m.vstack(sys.c()))
}

/// Groups eigenvalues closer than `tol` (transitively). Returns
/// `(center, members)` per group.
fn clusters(ev: &[C64], tol: f64) -> Vec<(C64, Vec<C64>)> {
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for &z in ev {
        let hits: Vec<usize> = (0..groups.len())
            .filter(|&g| groups[g].iter().any(|w| (w - z).norm() <= tol))
            .collect();
        let mut merged = vec![z];
        for &g in hits.iter().rev() {
            merged.extend(groups.remove(g));
        }
        groups.push(merged);
    }
    groups
        .into_iter()
        .map(|g| {
            let c = g.iter().sum::<C64>() / g.len() as f64;
            (c, g)
        })
        .collect()
}

/// Unstable eigenvalue clusters at which `H(λ) = C(A − λ)⁻¹B` has a pole.
///
/// Around each cluster of multiplicity `m` the moments
/// `(1/2πi)∮ (z − c)^k H(z) dz`, `k < m`, are computed by the trapezoid
/// rule on a circle; any moment that is not negligible against
/// `max|H|·r^{k+1}` on the circle marks a pole.
pub fn unstable_poles(sys: &LtiSystem) -> Result<Vec<C64>> {
    let ev = spectral_summary(sys.a())?.eigenvalues;
    if sys.b().is_zero() || sys.c().is_zero() {
        return Ok(Vec::new());
    }
    let scale = norm2(sys.a())?.max(1.0);
    let mut poles = Vec::new();
    for (center, members) in clusters(&ev, 1e-4 * scale) {
        if center.re < -AXIS_GAP && members.iter().all(|z| z.re < -AXIS_GAP) {
            continue;
        }
        let spread = members.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
        let outside = ev
            .iter()
            .filter(|z| !members.contains(z))
            .map(|z| (z - center).norm())
            .fold(f64::INFINITY, f64::min);
        let r = (0.5 * outside).min(scale).max(4.0 * spread).max(1e-6 * scale);
        let m = members.len();
        let mut moments = vec![ComplexMatrix::zeros(sys.output_dim(), sys.input_dim()); m];
        let mut peak: f64 = 0.0;
        for j in 0..CONTOUR_NODES {
            let w = C64::from_polar(r, std::f64::consts::TAU * (j as f64 + 0.5) / CONTOUR_NODES as f64);
            let h = transfer_eval(sys, center + w)?;
            peak = peak.max(h.max_abs());
            let mut wk = w / CONTOUR_NODES as f64;
            for moment in moments.iter_mut() {
                *moment = &*moment + &h.scale(wk);
                wk *= w;
            }
        }
        let is_pole = moments
            .iter()
            .enumerate()
            .any(|(k, mk)| mk.max_abs() > POLE_RTOL * peak * r.powi(k as i32 + 1));
        if is_pole {
            poles.push(center);
        }
    }
    Ok(poles)
}

/// All flags of the finite-dimensional internal/external equivalence for
/// inputs in `L^p`.
pub fn internal_external_check(sys: &LtiSystem, p: f64) -> Result<StabilityVerdict> {
    let spec = spectral_summary(sys.a())?;
    let stabilizable = hautus_stabilizable(sys)?;
    let detectable = hautus_detectable(sys)?;
    let poles = unstable_poles(sys)?;
    let externally_bounded = poles.is_empty();
    let io = if spec.stable {
        io_norm(sys, p, 1e-8, IO_BUDGET).ok().map(|e| e.value)
    } else {
        None
    };
    let io_bounded = if spec.stable {
        io.map_or(false, f64::is_finite)
    } else {
        externally_bounded
    };
    let internal = spec.stable;
    Ok(StabilityVerdict {
        internal,
        stabilizable,
        detectable,
        externally_bounded,
        io_bounded,
        consistent: internal == (stabilizable && detectable && io_bounded),
        io_norm: io,
        unstable_eigenvalues: unstable(&spec.eigenvalues),
        unstable_poles: poles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{inverse, NormSpec};

    fn sys(a: &[&[f64]], b: &[&[f64]], c: &[&[f64]]) -> LtiSystem {
        LtiSystem::new(
            ComplexMatrix::real(a),
            ComplexMatrix::real(b),
            ComplexMatrix::real(c),
            NormSpec::L2,
            NormSpec::L2,
            NormSpec::L2,
        )
        .unwrap()
    }

    const SADDLE: &[&[f64]] = &[&[1.0, 0.0], &[0.0, -1.0]];
    const I2: &[&[f64]] = &[&[1.0, 0.0], &[0.0, 1.0]];

    #[test]
    fn stabilizability_examples() {
        let chain = sys(&[&[0.0, 1.0], &[0.0, 0.0]], &[&[0.0], &[1.0]], I2);
        assert!(hautus_stabilizable(&chain).unwrap());
        assert!(!hautus_stabilizable(&sys(SADDLE, &[&[0.0], &[1.0]], I2)).unwrap());
        let rot = sys(&[&[-1.0, 1.0], &[-1.0, -1.0]], &[&[0.0], &[0.0]], I2);
        assert!(hautus_stabilizable(&rot).unwrap());
    }

    #[test]
    fn detectability_examples() {
        assert!(hautus_detectable(&sys(SADDLE, I2, &[&[1.0, 0.0]])).unwrap());
        assert!(!hautus_detectable(&sys(SADDLE, I2, &[&[0.0, 1.0]])).unwrap());
        let stable = sys(&[&[-1.0, 3.0], &[0.0, -2.0]], I2, &[&[0.0, 0.0]]);
        assert!(hautus_detectable(&stable).unwrap());
    }

    #[test]
    fn rotation_all_flags() {
        let a = ComplexMatrix::real(&[&[-1.0, 1.0], &[-1.0, -1.0]]);
        let v = internal_external_check(&LtiSystem::unstructured(a, NormSpec::L1).unwrap(), 1.0).unwrap();
        assert!(v.internal && v.stabilizable && v.detectable && v.externally_bounded && v.io_bounded);
        assert!(v.consistent);
        assert!((v.io_norm.unwrap() - 1.262_434_309).abs() < 1e-6);
    }

    #[test]
    fn reachable_unstable_pole() {
        let v = internal_external_check(&sys(SADDLE, I2, I2), 2.0).unwrap();
        assert!(v.stabilizable && v.detectable);
        assert!(!v.io_bounded && !v.internal && !v.externally_bounded && v.consistent);
        assert_eq!(v.unstable_poles.len(), 1);
        assert!((v.unstable_poles[0] - C64::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn hidden_unstable_mode() {
        let v = internal_external_check(&sys(SADDLE, &[&[0.0], &[1.0]], &[&[0.0, 1.0]]), 2.0).unwrap();
        assert!(!v.stabilizable && !v.internal);
        assert!(v.io_bounded && v.externally_bounded && v.consistent);
    }

    #[test]
    fn jordan_block_double_pole_without_residue() {
        // H(λ) = −1/(1 − λ)², the first moment vanishes, the second does not
        let s = sys(&[&[1.0, 1.0], &[0.0, 1.0]], &[&[0.0], &[1.0]], &[&[1.0, 0.0]]);
        assert_eq!(unstable_poles(&s).unwrap().len(), 1);
    }

    #[test]
    fn axis_eigenvalue_counts_as_unstable() {
        let s = sys(&[&[0.0, 0.0], &[0.0, -1.0]], I2, I2);
        let v = internal_external_check(&s, 2.0).unwrap();
        assert!(!v.internal && !v.io_bounded && v.consistent);
    }

    #[test]
    fn similarity_and_duality() {
        let s = sys(SADDLE, &[&[0.0], &[1.0]], &[&[1.0, 0.0]]);
        let t = ComplexMatrix::real(&[&[2.0, 1.0], &[0.5, 1.5]]);
        let ti = inverse(&t).unwrap();
        let moved = LtiSystem::new(
            &(&t * s.a()) * &ti,
            &t * s.b(),
            s.c() * &ti,
            NormSpec::L2,
            NormSpec::L2,
            NormSpec::L2,
        )
        .unwrap();
        assert_eq!(hautus_stabilizable(&s).unwrap(), hautus_stabilizable(&moved).unwrap());
        assert_eq!(hautus_detectable(&s).unwrap(), hautus_detectable(&moved).unwrap());
        let dual = LtiSystem::new(
            s.a().adjoint(),
            s.c().adjoint(),
            s.b().adjoint(),
            NormSpec::L2,
            NormSpec::L2,
            NormSpec::L2,
        )
        .unwrap();
        assert_eq!(hautus_detectable(&s).unwrap(), hautus_stabilizable(&dual).unwrap());
        assert_eq!(hautus_stabilizable(&s).unwrap(), hautus_detectable(&dual).unwrap());
    }
}
