#![allow(dead_code)]

use num_complex::Complex64;
use qmor_core::linalg::{spectral_abscissa, CMatrix};
use qmor_core::{DensityMatrix, Matrix, PauliPolynomial, StateSpaceModel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sample by Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_pure(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let mut psi: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(normal(rng), normal(rng)))
        .collect();
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut psi {
        *a /= norm;
    }
    psi
}

/// Full-rank mixed state `GG†/Tr(GG†)` from a complex Gaussian `G`.
pub fn random_mixed(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let d = 1usize << n;
    let g = CMatrix::from_fn(d, d, |_, _| Complex64::new(normal(rng), normal(rng)));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    DensityMatrix::from_matrix(n, rho / tr).expect("valid random state")
}

pub fn random_bloch(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

/// `Tr(Pρ)` for a real polynomial, identity terms included.
pub fn poly_expectation(rho: &DensityMatrix, poly: &PauliPolynomial) -> f64 {
    poly.terms()
        .map(|(s, c)| {
            if s.is_identity() {
                c.re
            } else {
                c.re * rho.expectation(s)
            }
        })
        .sum()
}

/// Stable system of the given order: Gaussian entries shifted so the
/// spectral abscissa sits in `[-1.1, -0.1]`.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> StateSpaceModel {
    let mut a = Matrix::from_fn(n, n, |_, _| normal(rng) / (n as f64).sqrt());
    let abscissa = spectral_abscissa(&a).expect("eigenvalues");
    let shift = abscissa + 0.1 + rng.random::<f64>();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let b = Matrix::from_fn(n, m, |_, _| normal(rng));
    let c = Matrix::from_fn(p, n, |_, _| normal(rng));
    StateSpaceModel::unlabeled(a, b, c).expect("conforming sizes")
}

/// Fifty systems of order 1 to 12 with up to three inputs and outputs.
pub fn stable_family() -> Vec<StateSpaceModel> {
    let mut r = rng(20_24);
    (0..50)
        .map(|_| {
            let n = r.random_range(1..=12);
            let m = r.random_range(1..=3);
            let p = r.random_range(1..=3);
            random_stable(&mut r, n, m, p)
        })
        .collect()
}
