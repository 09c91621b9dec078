mod common;

use common::{norm_spec, random_matrix, vector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stabradius::numcore::{
    eigenvalues, expm, induced_norm, induced_norm_upper_bound, integrate_decaying, maximize_on_line, norm2,
    DecayEnvelope, LineSearch, Quadrature,
};
use stabradius::{ComplexMatrix, NormSpec, C64};

fn close_sets(a: &[C64], b: &[C64], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.iter().all(|z| {
        let pick = (0..b.len())
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (b[i] - z).norm().total_cmp(&(b[j] - z).norm()));
        match pick {
            Some(j) if (b[j] - z).norm() <= tol => {
                used[j] = true;
                true
            }
            _ => false,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vector_norm_axioms(norm in norm_spec(), x in vector(4), y in vector(4), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let c = C64::new(re, im);
        let sum: Vec<C64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(norm.norm(&sum) <= (norm.norm(&x) + norm.norm(&y)) * (1.0 + 1e-12));
        let scaled: Vec<C64> = x.iter().map(|a| a * c).collect();
        prop_assert!((norm.norm(&scaled) - c.norm() * norm.norm(&x)).abs() <= 1e-10 * (1.0 + norm.norm(&scaled)));
        prop_assert!(norm.norm(&x) >= 0.0);
    }

    #[test]
    fn norming_functional_attains_the_norm(norm in norm_spec(), x in vector(5)) {
        prop_assume!(norm.norm(&x) > 1e-6);
        let y = norm.norming_functional(&x).unwrap();
        let pairing: C64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        prop_assert!((pairing.re - norm.norm(&x)).abs() <= 1e-10 * norm.norm(&x));
        prop_assert!(pairing.im.abs() <= 1e-10 * norm.norm(&x));
        prop_assert!((norm.dual().norm(&y) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn closed_form_induced_norms(seed in any::<u64>(), rows in 1usize..5, cols in 1usize..5) {
        let m = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), rows, cols);
        let one = induced_norm(&m, NormSpec::L1, NormSpec::L1).unwrap();
        prop_assert!((one.value - m.norm_one()).abs() <= 1e-12 * m.norm_one());
        let inf = induced_norm(&m, NormSpec::LINF, NormSpec::LINF).unwrap();
        prop_assert!((inf.value - m.norm_inf()).abs() <= 1e-12 * m.norm_inf());
        let two = induced_norm(&m, NormSpec::L2, NormSpec::L2).unwrap();
        prop_assert!((two.value - norm2(&m).unwrap()).abs() <= 1e-12 * two.value);
        for ind in [&one, &inf, &two] {
            prop_assert!(ind.exact);
        }
        prop_assert!((NormSpec::L2.norm(&m.mul_vec(&two.witness)) - two.value).abs() <= 1e-10 * two.value);
    }

    #[test]
    fn induced_norm_below_upper_bound(seed in any::<u64>(), dom in norm_spec(), cod in norm_spec()) {
        let m = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), 3, 3);
        let ind = induced_norm(&m, dom, cod).unwrap();
        let ub = induced_norm_upper_bound(&m, dom, cod).unwrap();
        prop_assert!(ind.value <= ub * (1.0 + 1e-10));
        prop_assert!((dom.norm(&ind.witness) - 1.0).abs() <= 1e-10);
        prop_assert!((cod.norm(&m.mul_vec(&ind.witness)) - ind.value).abs() <= 1e-9 * ind.value.max(1.0));
    }

    #[test]
    fn exponential_semigroup_law(seed in any::<u64>(), n in 1usize..5, s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let a = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, n);
        let lhs = expm(&a, s + t).unwrap();
        let rhs = &expm(&a, s).unwrap() * &expm(&a, t).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-10 * lhs.max_abs().max(1.0));
    }

    #[test]
    fn spectral_mapping(seed in any::<u64>(), n in 1usize..5) {
        let a = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, n).scale_real(0.5);
        let mapped: Vec<C64> = eigenvalues(&a).unwrap().iter().map(|z| z.exp()).collect();
        let direct = eigenvalues(&expm(&a, 1.0).unwrap()).unwrap();
        prop_assert!(close_sets(&mapped, &direct, 1e-6));
    }

    #[test]
    fn exponential_integral(beta in 0.05f64..20.0) {
        let r = integrate_decaying(|t| (-beta * t).exp(), DecayEnvelope { amplitude: 1.0, rate: beta }, &Quadrature::new(1e-11)).unwrap();
        prop_assert!((r.value - 1.0 / beta).abs() <= 1e-9 / beta);
    }

    #[test]
    fn line_maximum_dominates_grid(a in 0.5f64..4.0, w in 0.5f64..6.0, c in -3.0f64..3.0) {
        let g = move |s: f64| a * (w * s).cos() / (1.0 + (s - c).powi(2));
        let search = LineSearch::new(8.0, 0.02, 1e-10);
        let r = maximize_on_line(g, |s| a / (1.0 + (s - c.abs()).max(0.0).powi(2)), &search).unwrap();
        prop_assert!(r.samples.iter().all(|&(_, v)| v <= r.value));
        prop_assert!((g(r.argmax) - r.value).abs() <= 1e-12);
    }
}

#[test]
fn identity_exponential_is_scalar() {
    let e = expm(&ComplexMatrix::identity(3), 1.0).unwrap();
    assert!((&e - &ComplexMatrix::identity(3).scale_real(std::f64::consts::E)).max_abs() < 1e-13);
}
