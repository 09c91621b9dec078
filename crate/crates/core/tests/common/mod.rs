#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabradius::numcore::spectral_abscissa;
use stabradius::transfer::LtiSystem;
use stabradius::{ComplexMatrix, NormSpec, C64};

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols)
        .map(|_| C64::new(gaussian(rng), gaussian(rng)) / std::f64::consts::SQRT_2)
        .collect();
    ComplexMatrix::new(rows, cols, data).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect()
}

/// Random `A` shifted so its spectral abscissa is `-margin`.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize, margin: f64) -> ComplexMatrix {
    let m = random_matrix(rng, n, n);
    let s = spectral_abscissa(&m).unwrap();
    m.shift_diagonal(C64::new(-s - margin, 0.0))
}

pub fn random_system(seed: u64, n: usize, m: usize, k: usize, margin: f64, norm: NormSpec) -> LtiSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_stable(&mut rng, n, margin);
    let b = random_matrix(&mut rng, n, m);
    let c = random_matrix(&mut rng, k, n);
    LtiSystem::new(a, b, c, norm, norm, norm).unwrap()
}

pub fn rotation() -> ComplexMatrix {
    ComplexMatrix::real(&[&[-1.0, 1.0], &[-1.0, -1.0]])
}

pub fn saddle_focus() -> ComplexMatrix {
    ComplexMatrix::real(&[&[4.5, -2.5], &[12.5, -6.5]])
}

pub fn norm_spec() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::L1),
        Just(NormSpec::L2),
        Just(NormSpec::LINF),
        (1.1f64..6.0).prop_map(|p| NormSpec::new(p).unwrap()),
    ]
}

pub fn vector(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0).prop_map(|(r, i)| C64::new(r, i)), n)
}
