//! Complex stability radii of `x' = (A + BΔC)x`: the two-sided bound
//! `1/‖𝕃‖ ≤ r ≤ 1/sup_s ‖H(is)‖`, rank-one destabilizers at the optimal
//! frequency, pointwise and dichotomy radii on shifted integer lattices,
//! and the growth-bound scan.
//!
//! Every finite matrix generator is bounded, so the upper bound is the
//! exact constant-perturbation radius; the lower bound stays informative
//! because `‖𝕃‖` depends on the time exponent `p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ionorm::{
    io_norm_l1, io_norm_l2_hilbert, multiplier_lower_bound, periodic_multiplier_norm, IoNormEstimate, IoNormMode,
    DEFAULT_BUDGET, L1_TOLERANCE,
};
use crate::numcore::{golden_max, induced_norm, spectral_abscissa, svd, ComplexMatrix, C64};
use crate::par;
use crate::transfer::{
    spectral_summary, sup_transfer_integers, sup_transfer_real_axis, transfer_eval, FrequencySupremum, LtiSystem,
};

/// Rank-one perturbation `Δy = −⟨y*, y⟩ ū / ‖h‖` with `h = C(A − is*)⁻¹Bū`.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    /// `Δ : Y → U`, shape `input_dim × output_dim`.
    pub delta: ComplexMatrix,
    /// Induced `Y → U` norm of `Δ`.
    pub norm: f64,
    pub frequency: f64,
    /// Unit input maximizing `‖H(is*)ū‖`.
    pub u_bar: Vec<C64>,
    /// Norming functional of `h`: `Σ y*_j h_j = ‖h‖`, dual norm 1.
    pub y_star: Vec<C64>,
    /// `‖H(is*)‖` in the induced norm.
    pub transfer_norm: f64,
}

impl Perturbation {
    /// `A + BΔC`.
    pub fn perturbed_generator(&self, sys: &LtiSystem) -> ComplexMatrix {
        sys.a() + &(&(sys.b() * &self.delta) * sys.c())
    }

    /// Smallest singular value of `A − is* + BΔC`.
    pub fn singularity_residual(&self, sys: &LtiSystem) -> Result<f64> {
        let m = self.perturbed_generator(sys).shift_diagonal(C64::new(0.0, -self.frequency));
        Ok(svd(&m)?.smallest())
    }
}

/// Builds the destabilizer at frequency `s*`.
pub fn destabilizing_perturbation(sys: &LtiSystem, s_star: f64) -> Result<Perturbation> {
    let h_mat = transfer_eval(sys, C64::new(0.0, s_star))?;
    let ind = induced_norm(&h_mat, sys.norm_u, sys.norm_y)?;
    let u_bar = ind.witness;
    let h = h_mat.mul_vec(&u_bar);
    let h_norm = sys.norm_y.norm(&h);
    if h_norm == 0.0 {
        return Err(Error::ZeroTransfer(s_star));
    }
    let y_star = sys.norm_y.norming_functional(&h).ok_or(Error::ZeroTransfer(s_star))?;
    let delta = ComplexMatrix::outer(&u_bar, &y_star).scale_real(-1.0 / h_norm);
    // rank one: ‖Δ‖ = ‖ū‖ ‖y*‖_dual / ‖h‖
    let norm = sys.norm_u.norm(&u_bar) * sys.norm_y.dual().norm(&y_star) / h_norm;
    Ok(Perturbation {
        delta,
        norm,
        frequency: s_star,
        u_bar,
        y_star,
        transfer_norm: h_norm,
    })
}

/// Pointwise bounds at one lattice shift.
#[derive(Clone, Debug, PartialEq)]
pub struct PointwiseBounds {
    pub xi: f64,
    /// `1 / periodic multiplier norm`.
    pub lower: f64,
    /// `1 / sup_k ‖H(i(k + ξ))‖`.
    pub upper: f64,
    /// True when the periodic norm is a search value, so `lower` may
    /// over-estimate the true lower bound.
    pub lower_one_sided: bool,
    pub k: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusReport {
    pub p: f64,
    /// `1 / ‖𝕃‖`.
    pub lower: f64,
    /// `1 / sup_s ‖H(is)‖`.
    pub upper: f64,
    /// Exact constant-perturbation radius (equal to `upper` for bounded
    /// generators).
    pub exact: Option<f64>,
    pub gap_strict: bool,
    /// True when `‖𝕃‖` came from a lower-bound search, making `lower` an
    /// upper estimate of the true lower bound.
    pub lower_one_sided: bool,
    pub tolerance: f64,
    pub io_norm: IoNormEstimate,
    pub transfer_sup: FrequencySupremum,
    pub destabilizer: Option<Perturbation>,
    pub xi_trace: Vec<PointwiseBounds>,
}

fn reciprocal(v: f64) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else {
        1.0 / v
    }
}

/// Norm of `𝕃` on `L^p(ℝ₊)` along the most accurate available path.
pub fn io_norm(sys: &LtiSystem, p: f64, tol: f64, budget: usize) -> Result<IoNormEstimate> {
    if p == 1.0 {
        io_norm_l1(sys, tol.min(L1_TOLERANCE))
    } else if p == 2.0 && sys.is_hilbert() {
        io_norm_l2_hilbert(sys, tol)
    } else {
        multiplier_lower_bound(sys, p, budget)
    }
}

/// Lower and upper stability-radius bounds with certificates.
pub fn radius_bounds(sys: &LtiSystem, p: f64, tol: f64) -> Result<RadiusReport> {
    let spec = spectral_summary(sys.a())?;
    if !spec.stable {
        return Err(Error::Unstable {
            abscissa: spec.abscissa,
        });
    }
    let io = io_norm(sys, p, tol, DEFAULT_BUDGET)?;
    let sup = sup_transfer_real_axis(sys, tol)?;
    let lower = reciprocal(io.value);
    let upper = reciprocal(sup.value);
    let destabilizer = if sup.value > 0.0 {
        Some(destabilizing_perturbation(sys, sup.argmax)?)
    } else {
        None
    };
    // propagate the absolute tolerances through the reciprocals
    let slack = tol * (lower * lower + upper * upper) + 1e-12;
    Ok(RadiusReport {
        p,
        lower,
        upper,
        exact: Some(upper),
        gap_strict: upper - lower > slack,
        lower_one_sided: io.mode == IoNormMode::LowerBoundSearch,
        tolerance: tol,
        io_norm: io,
        transfer_sup: sup,
        destabilizer,
        xi_trace: Vec::new(),
    })
}

/// Pointwise radius bounds at lattice shift `ξ`.
pub fn pointwise_radius_bounds(sys: &LtiSystem, xi: f64, p: f64, budget: usize) -> Result<PointwiseBounds> {
    let lattice = sup_transfer_integers(sys, xi, 1e-12)?;
    let periodic = periodic_multiplier_norm(sys, xi, p, budget)?;
    let k = match lattice.kind {
        crate::transfer::SupremumKind::IntegerLattice { k, .. } => k,
        crate::transfer::SupremumKind::RealAxis => 0,
    };
    Ok(PointwiseBounds {
        xi,
        lower: reciprocal(periodic.value),
        upper: reciprocal(lattice.value),
        lower_one_sided: periodic.mode == IoNormMode::LowerBoundSearch,
        k,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyRadius {
    pub value: f64,
    /// Minimizing shift in `[0, 1)`.
    pub xi: f64,
    pub trace: Vec<PointwiseBounds>,
}

/// `inf_{ξ ∈ [0,1]}` of the pointwise upper bound, from a uniform grid of
/// `grid` cells refined by golden section around the best cell.
pub fn dichotomy_radius(sys: &LtiSystem, p: f64, grid: usize, budget: usize) -> Result<DichotomyRadius> {
    if grid == 0 {
        return Err(Error::InvalidArgument("xi grid needs at least one cell".into()));
    }
    let spec = spectral_summary(sys.a())?;
    if !spec.hyperbolic {
        return Err(Error::NonHyperbolic { gap: spec.axis_gap });
    }
    let xis: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let trace = par::map_slice(&xis, |&xi| pointwise_radius_bounds(sys, xi, p, budget))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, pt) in trace.iter().enumerate() {
        if pt.upper < trace[best].upper {
            best = i;
        }
    }
    let lattice_sup = |xi: f64| sup_transfer_integers(sys, xi, 1e-12).map(|r| r.value).unwrap_or(f64::INFINITY);
    let h = 1.0 / grid as f64;
    let (xi, sup) = golden_max(&lattice_sup, xis[best] - h, xis[best] + h, xis[best], reciprocal(trace[best].upper));
    Ok(DichotomyRadius {
        value: reciprocal(sup),
        xi: xi.rem_euclid(1.0),
        trace,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthProbe {
    pub alpha: f64,
    pub finite: bool,
    /// Spectral abscissa of `A − αI`.
    pub shifted_abscissa: f64,
    /// Multiplier values at the two budgets, when the spectrum allows them.
    pub multiplier: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthScan {
    pub omega0: f64,
    pub scan: Vec<GrowthProbe>,
}

/// Budgets of the stabilization test in [`growth_bound_scan`].
pub const GROWTH_BUDGETS: (usize, usize) = (32, 64);

/// Growth bound and, per `α`, whether `A − αI` passes the finiteness
/// probe: no spectrum in the closed right half-plane and a `p = 2`
/// multiplier value that changes by at most 10% when the budget doubles.
pub fn growth_bound_scan(sys: &LtiSystem, alphas: &[f64]) -> Result<GrowthScan> {
    if alphas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("alpha values must be sorted ascending".into()));
    }
    let omega0 = spectral_abscissa(sys.a())?;
    let scan = alphas
        .iter()
        .map(|&alpha| -> Result<GrowthProbe> {
            let shifted = sys.shifted(C64::new(-alpha, 0.0));
            let spec = spectral_summary(shifted.a())?;
            if !spec.stable {
                return Ok(GrowthProbe {
                    alpha,
                    finite: false,
                    shifted_abscissa: spec.abscissa,
                    multiplier: None,
                });
            }
            let small = multiplier_lower_bound(&shifted, 2.0, GROWTH_BUDGETS.0)?.value;
            let large = multiplier_lower_bound(&shifted, 2.0, GROWTH_BUDGETS.1)?.value;
            let settled = (large - small).abs() <= 0.1 * large.abs().max(f64::MIN_POSITIVE);
            Ok(GrowthProbe {
                alpha,
                finite: settled && large.is_finite(),
                shifted_abscissa: spec.abscissa,
                multiplier: Some((small, large)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthScan { omega0, scan })
}

/// Outcome of random perturbations at a fixed norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSummary {
    pub count: usize,
    pub target_norm: f64,
    /// Largest spectral abscissa of `A + BΔC` over the probes.
    pub worst_abscissa: f64,
    pub all_stable: bool,
}

/// Draws `count` seeded random `Δ` scaled to `target_norm` in the induced
/// `Y → U` norm and records the spectral abscissa of `A + BΔC`.
pub fn probe_random_perturbations(sys: &LtiSystem, target_norm: f64, count: usize, seed: u64) -> Result<ProbeSummary> {
    let (m, k) = (sys.input_dim(), sys.output_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas: Vec<ComplexMatrix> = (0..count)
        .map(|_| {
            let data = (0..m * k)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            ComplexMatrix::new(m, k, data)
        })
        .collect::<Result<_>>()?;
    let abscissae = par::map_slice(&deltas, |d| -> Result<f64> {
        let n = induced_norm(d, sys.norm_y, sys.norm_u)?.value;
        let scaled = d.scale_real(target_norm / n);
        spectral_abscissa(&(sys.a() + &(&(sys.b() * &scaled) * sys.c())))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let worst = abscissae.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ProbeSummary {
        count,
        target_norm,
        worst_abscissa: worst,
        all_stable: worst < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::NormSpec;
    use approx::assert_abs_diff_eq;

    fn rotation(norm: NormSpec) -> LtiSystem {
        LtiSystem::unstructured(ComplexMatrix::real(&[&[-1.0, 1.0], &[-1.0, -1.0]]), norm).unwrap()
    }

    fn non_normal(norm: NormSpec) -> LtiSystem {
        LtiSystem::unstructured(ComplexMatrix::real(&[&[4.5, -2.5], &[12.5, -6.5]]), norm).unwrap()
    }

    fn scalar(a: f64) -> LtiSystem {
        LtiSystem::unstructured(ComplexMatrix::real(&[&[a]]), NormSpec::L2).unwrap()
    }

    #[test]
    fn rotation_example_has_strict_gap() {
        let r = radius_bounds(&rotation(NormSpec::L1), 1.0, 1e-9).unwrap();
        assert_abs_diff_eq!(r.lower, 1.0 / 1.262_434_309, epsilon = 1e-8);
        assert_abs_diff_eq!(r.upper, 1.0 / 1.087_494_476, epsilon = 1e-8);
        assert_abs_diff_eq!(r.lower, 0.792_121, epsilon = 1e-6);
        assert_abs_diff_eq!(r.exact.unwrap(), 0.919_545, epsilon = 1e-6);
        assert!(r.gap_strict && !r.lower_one_sided);
    }

    #[test]
    fn minus_identity_bounds_coincide() {
        let sys = LtiSystem::unstructured(ComplexMatrix::identity(2).scale_real(-1.0), NormSpec::L2).unwrap();
        let r = radius_bounds(&sys, 2.0, 1e-9).unwrap();
        assert_abs_diff_eq!(r.lower, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.upper, 1.0, epsilon = 1e-9);
        assert!(!r.gap_strict);
    }

    #[test]
    fn hilbert_bounds_coincide_for_non_normal_example() {
        let r = radius_bounds(&non_normal(NormSpec::L2), 2.0, 1e-9).unwrap();
        assert_eq!(r.lower, r.upper);
        assert_abs_diff_eq!(r.upper, 1.0 / 7.5, epsilon = 1e-8);
    }

    #[test]
    fn scalar_destabilizer() {
        let d = destabilizing_perturbation(&scalar(-1.0), 0.0).unwrap();
        assert_abs_diff_eq!(d.delta[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.norm, 1.0, epsilon = 1e-15);
        assert!(d.perturbed_generator(&scalar(-1.0)).max_abs() < 1e-15);
    }

    #[test]
    fn destabilizer_certificates() {
        for sys in [rotation(NormSpec::L1), non_normal(NormSpec::L2), rotation(NormSpec::LINF)] {
            let sup = sup_transfer_real_axis(&sys, 1e-10).unwrap();
            let d = destabilizing_perturbation(&sys, sup.argmax).unwrap();
            assert_abs_diff_eq!(d.norm, 1.0 / sup.value, epsilon = 1e-10);
            // ΔC(A − is*)⁻¹Bū = −ū
            let h = transfer_eval(&sys, C64::new(0.0, sup.argmax)).unwrap();
            let back = d.delta.mul_vec(&h.mul_vec(&d.u_bar));
            for (x, u) in back.iter().zip(&d.u_bar) {
                assert!((x + u).norm() < 1e-10);
            }
            assert!(d.singularity_residual(&sys).unwrap() < 1e-8 * sys.a().frobenius_norm());
            let ev = crate::numcore::eigenvalues(&d.perturbed_generator(&sys)).unwrap();
            let hit = ev.iter().map(|z| (z - C64::new(0.0, sup.argmax)).norm()).fold(f64::INFINITY, f64::min);
            assert!(hit < 1e-6, "closest eigenvalue at distance {hit}");
        }
    }

    #[test]
    fn destabilizer_rejects_zero_transfer() {
        let sys = rotation(NormSpec::L1).with_c(ComplexMatrix::zeros(1, 2)).unwrap();
        assert!(matches!(destabilizing_perturbation(&sys, 0.3), Err(Error::ZeroTransfer(_))));
    }

    #[test]
    fn pointwise_bounds() {
        let sys = LtiSystem::unstructured(ComplexMatrix::identity(1).scale_real(-1.0), NormSpec::L2).unwrap();
        let b = pointwise_radius_bounds(&sys, 0.0, 2.0, 50).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper, 1.0, epsilon = 1e-14);

        let want = 5f64.sqrt() / (2f64.sqrt() + 1.0);
        let b = pointwise_radius_bounds(&rotation(NormSpec::L1), 0.0, 1.0, 200).unwrap();
        assert!(b.lower <= want + 1e-12 && want <= b.upper + 1e-12);
        assert_abs_diff_eq!(b.upper, want, epsilon = 1e-12);
        assert!(b.lower_one_sided);
    }

    #[test]
    fn dichotomy_recovers_axis_supremum() {
        let r = dichotomy_radius(&rotation(NormSpec::L1), 2.0, 64, 50).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 / 1.087_494_476, epsilon = 1e-7);
        let sys = LtiSystem::unstructured(ComplexMatrix::identity(1).scale_real(-1.0), NormSpec::L2).unwrap();
        assert_abs_diff_eq!(dichotomy_radius(&sys, 2.0, 64, 10).unwrap().value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dichotomy_of_hyperbolic_unstable_system() {
        let sys = LtiSystem::unstructured(ComplexMatrix::real(&[&[1.0, 0.0], &[0.0, -1.0]]), NormSpec::L2).unwrap();
        assert_abs_diff_eq!(dichotomy_radius(&sys, 2.0, 64, 10).unwrap().value, 1.0, epsilon = 1e-9);
        let shear = LtiSystem::unstructured(ComplexMatrix::real(&[&[0.0, 1.0], &[0.0, 0.0]]), NormSpec::L2).unwrap();
        assert!(matches!(dichotomy_radius(&shear, 2.0, 8, 10), Err(Error::NonHyperbolic { .. })));
    }

    #[test]
    fn growth_scans() {
        let r = growth_bound_scan(&rotation(NormSpec::L1), &[-1.5, -1.01, -0.99, 0.0]).unwrap();
        assert_abs_diff_eq!(r.omega0, -1.0, epsilon = 1e-12);
        let flags: Vec<bool> = r.scan.iter().map(|p| p.finite).collect();
        assert_eq!(flags, vec![false, false, true, true]);

        let r = growth_bound_scan(&scalar(-2.0), &[-3.0, 0.0]).unwrap();
        assert_eq!(r.omega0, -2.0);
        assert_eq!(r.scan.iter().map(|p| p.finite).collect::<Vec<_>>(), vec![false, true]);

        let shear = LtiSystem::unstructured(ComplexMatrix::real(&[&[0.0, 1.0], &[0.0, 0.0]]), NormSpec::L2).unwrap();
        let r = growth_bound_scan(&shear, &[-0.1, 0.1]).unwrap();
        assert_eq!(r.omega0, 0.0);
        assert_eq!(r.scan.iter().map(|p| p.finite).collect::<Vec<_>>(), vec![false, true]);

        assert!(growth_bound_scan(&shear, &[0.1, -0.1]).is_err());
    }

    #[test]
    fn random_probes_below_radius_stay_stable() {
        for sys in [rotation(NormSpec::L1), non_normal(NormSpec::L2)] {
            let exact = radius_bounds(&sys, 2.0, 1e-9).unwrap().exact.unwrap();
            let probe = probe_random_perturbations(&sys, 0.999 * exact, 200, 7).unwrap();
            assert!(probe.all_stable, "worst abscissa {}", probe.worst_abscissa);
        }
    }

    #[test]
    fn scaling_b_scales_radius() {
        let sys = rotation(NormSpec::L1);
        let base = radius_bounds(&sys, 1.0, 1e-9).unwrap().exact.unwrap();
        let scaled = sys.with_b(sys.b().scale_real(2.5)).unwrap();
        let r = radius_bounds(&scaled, 1.0, 1e-9).unwrap().exact.unwrap();
        assert_abs_diff_eq!(r, base / 2.5, epsilon = 1e-8);
    }
}
