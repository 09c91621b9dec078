mod common;

use common::random_matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabradius::numcore::inverse;
use stabradius::syscheck::{hautus_detectable, hautus_stabilizable, internal_external_check};
use stabradius::transfer::LtiSystem;
use stabradius::{ComplexMatrix, NormSpec, C64};

fn system(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix) -> LtiSystem {
    LtiSystem::new(a, b, c, NormSpec::L2, NormSpec::L2, NormSpec::L2).unwrap()
}

/// Block-triangular system whose first `hidden` states are unreachable
/// (`hide_input`) or unobservable, conjugated by a random similarity.
fn structured(seed: u64, n: usize, hidden: usize, hide_input: bool) -> LtiSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = random_matrix(&mut rng, n, n);
    let (m, k) = (1 + rng.gen_range(0..n), 1 + rng.gen_range(0..n));
    let mut b = random_matrix(&mut rng, n, m);
    let mut c = random_matrix(&mut rng, k, n);
    for i in 0..hidden {
        for j in hidden..n {
            if hide_input {
                a[(i, j)] = C64::new(0.0, 0.0);
            } else {
                a[(j, i)] = C64::new(0.0, 0.0);
            }
        }
        if hide_input {
            for j in 0..b.cols() {
                b[(i, j)] = C64::new(0.0, 0.0);
            }
        } else {
            for j in 0..c.rows() {
                c[(j, i)] = C64::new(0.0, 0.0);
            }
        }
    }
    let t = random_matrix(&mut rng, n, n).scale_real(0.3).shift_diagonal(C64::new(1.0, 0.0));
    let ti = inverse(&t).unwrap();
    system(&(&t * &a) * &ti, &t * &b, &c * &ti)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_systems_are_consistent(seed in any::<u64>(), n in 1usize..6, shift in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, n, n).shift_diagonal(C64::new(shift, 0.0));
        let m = 1 + rng.gen_range(0..n);
        let k = 1 + rng.gen_range(0..n);
        let sys = system(a, random_matrix(&mut rng, n, m), random_matrix(&mut rng, k, n));
        let v = internal_external_check(&sys, 2.0).unwrap();
        prop_assert!(v.consistent, "{v:?}");
    }

    #[test]
    fn hidden_modes_are_consistent(seed in any::<u64>(), n in 2usize..6, hide_input in any::<bool>()) {
        let sys = structured(seed, n, 1, hide_input);
        let v = internal_external_check(&sys, 2.0).unwrap();
        prop_assert!(v.consistent, "{v:?}");
    }

    #[test]
    fn hautus_tests_survive_similarity(seed in any::<u64>(), n in 2usize..6, hide_input in any::<bool>()) {
        let sys = structured(seed, n, 1, hide_input);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let t = random_matrix(&mut rng, n, n).scale_real(0.3).shift_diagonal(C64::new(1.0, 0.0));
        let ti = inverse(&t).unwrap();
        let moved = system(&(&t * sys.a()) * &ti, &t * sys.b(), sys.c() * &ti);
        prop_assert_eq!(hautus_stabilizable(&sys).unwrap(), hautus_stabilizable(&moved).unwrap());
        prop_assert_eq!(hautus_detectable(&sys).unwrap(), hautus_detectable(&moved).unwrap());
    }

    #[test]
    fn detectability_is_dual_stabilizability(seed in any::<u64>(), n in 2usize..6, hide_input in any::<bool>()) {
        let sys = structured(seed, n, 1, hide_input);
        let dual = system(sys.a().adjoint(), sys.c().adjoint(), sys.b().adjoint());
        prop_assert_eq!(hautus_detectable(&sys).unwrap(), hautus_stabilizable(&dual).unwrap());
    }
}
