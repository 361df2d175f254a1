mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use qmor_core::eom::closure;
use qmor_core::linalg::{eigenvalues, lyapunov_solve, symmetry_defect, Matrix};
use qmor_core::models::independent_bit_flips;
use qmor_core::mor::balance;
use qmor_core::qec::{encode, encoded_expectations, logical_dynamics};
use qmor_core::sim::oracle::{lindblad_rhs, string_matrix, trace_with_string};
use qmor_core::{
    adjoint_generator, bitflip3, build_generator, commutator, decode_functional, multiply,
    LindbladModel, PauliPolynomial, PauliString, RecoveryChannel, StateSpaceModel, VariableSet,
};

fn string(n: usize) -> impl Strategy<Value = PauliString> {
    let mask = (1u64 << n) - 1;
    (any::<u64>(), any::<u64>())
        .prop_map(move |(x, z)| PauliString::from_masks(n, x & mask, z & mask).unwrap())
}

fn strings_3() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
    (1usize..=6).prop_flat_map(|n| (string(n), string(n), string(n)))
}

fn real_poly(n: usize, max_terms: usize) -> impl Strategy<Value = PauliPolynomial> {
    prop::collection::vec((string(n), -2.0f64..2.0), 1..=max_terms).prop_map(move |terms| {
        let mut p = PauliPolynomial::zero(n);
        for (s, c) in terms {
            p.add_term(s, Complex64::new(c, 0.0));
        }
        p
    })
}

fn complex_poly(n: usize, max_terms: usize) -> impl Strategy<Value = PauliPolynomial> {
    prop::collection::vec((string(n), -1.0f64..1.0, -1.0f64..1.0), 1..=max_terms).prop_map(
        move |terms| {
            let mut p = PauliPolynomial::zero(n);
            for (s, re, im) in terms {
                p.add_term(s, Complex64::new(re, im));
            }
            p
        },
    )
}

fn model(max_sites: usize) -> impl Strategy<Value = LindbladModel> {
    (1usize..=max_sites).prop_flat_map(|n| {
        (
            real_poly(n, 4),
            prop::collection::vec((0.05f64..2.0, complex_poly(n, 3)), 0..=2),
        )
            .prop_map(move |(h, ds)| LindbladModel::new(n, h, ds).unwrap())
    })
}

fn all_strings(n: usize) -> Vec<PauliString> {
    (0u64..1 << n)
        .flat_map(|x| (0u64..1 << n).map(move |z| PauliString::from_masks(n, x, z).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_is_associative((a, b, c) in strings_3()) {
        let ab = multiply(&a, &b).unwrap();
        let left = multiply(&ab.string, &c).unwrap();
        let bc = multiply(&b, &c).unwrap();
        let right = multiply(&a, &bc.string).unwrap();
        prop_assert_eq!(left.string, right.string);
        prop_assert_eq!(ab.phase * left.phase, bc.phase * right.phase);
    }

    #[test]
    fn multiplication_matches_dense_matrices(a in string(3), b in string(3)) {
        let prod = multiply(&a, &b).unwrap();
        let dense = string_matrix(&a) * string_matrix(&b);
        let expected = string_matrix(&prod.string) * prod.coefficient();
        prop_assert!((dense - expected).norm() < 1e-12);
    }

    #[test]
    fn strings_commute_or_anticommute((a, b, _) in strings_3()) {
        let c = commutator(&a, &b).unwrap();
        let ab = multiply(&a, &b).unwrap();
        let ba = multiply(&b, &a).unwrap();
        if a.commutes_with(&b) {
            prop_assert!(c.is_zero());
            prop_assert_eq!(ab.phase, ba.phase);
        } else {
            prop_assert_eq!(c.len(), 1);
            prop_assert!((c.coefficient(&ab.string) - ab.coefficient() * 2.0).norm() < 1e-15);
            prop_assert_eq!(ab.phase, ba.phase * qmor_core::Phase::MINUS_ONE);
        }
    }

    #[test]
    fn adjoint_generator_is_real_and_trace_preserving(m in model(3)) {
        let n = m.n_sites();
        prop_assert!(adjoint_generator(&PauliString::identity(n).unwrap(), &m).unwrap().is_zero());
        for p in all_strings(n) {
            let g = adjoint_generator(&p, &m).unwrap();
            for (_, c) in g.terms() {
                prop_assert_eq!(c.im, 0.0);
            }
        }
    }

    #[test]
    fn generator_matches_density_matrix_oracle(m in model(3)) {
        // Coefficient of Q in L†(P) equals Tr(P·L(Q))/2ⁿ.
        let n = m.n_sites();
        let d = (1u64 << n) as f64;
        let strings = all_strings(n);
        let scale = 1.0 + m.norm_bound();
        for p in strings.iter().filter(|p| !p.is_identity()) {
            let g = adjoint_generator(p, &m).unwrap();
            for q in &strings {
                let lq = lindblad_rhs(&m, &string_matrix(q));
                let oracle = trace_with_string(p, &lq) / d;
                let symbolic = g.coefficient(q);
                prop_assert!((oracle - symbolic).norm() < 1e-12 * scale, "{p} -> {q}: {oracle} vs {symbolic}");
            }
        }
    }

    #[test]
    fn closure_is_idempotent(m in model(3), seed in 0usize..64) {
        let n = m.n_sites();
        let candidates: Vec<PauliString> = all_strings(n).into_iter().filter(|p| !p.is_identity()).collect();
        let s = candidates[seed % candidates.len()];
        let once = closure(&VariableSet::new(vec![s]).unwrap(), &m, 4096).unwrap();
        let twice = closure(&once, &m, 4096).unwrap();
        prop_assert_eq!(once.as_slice(), twice.as_slice());
        // Non-unital dissipators can source the identity; otherwise the set is closed.
        if let Ok(g) = build_generator(&once, &m) {
            prop_assert_eq!(g.a.nrows(), once.len());
        }
    }

    #[test]
    fn eigenvalues_and_hankel_values_are_similarity_invariant(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = common::rng(seed);
        let s = common::random_stable(&mut r, n, 2, 2);
        let t = Matrix::identity(n, n) + Matrix::from_fn(n, n, |_, _| 0.2 * common::normal(&mut r));
        let Some(tinv) = t.clone().try_inverse() else { return Ok(()); };
        let moved = StateSpaceModel::unlabeled(&t * &s.a * &tinv, &t * &s.b, &s.c * &tinv).unwrap();
        let scale = s.a.norm();
        let mut e1: Vec<Complex64> = eigenvalues(&s.a).unwrap();
        let mut e2: Vec<Complex64> = eigenvalues(&moved.a).unwrap();
        let key = |z: &Complex64| (z.re, z.im);
        e1.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        e2.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (a, b) in e1.iter().zip(&e2) {
            prop_assert!((a - b).norm() < 1e-7 * scale.max(1.0), "{a} vs {b}");
        }
        let h1 = balance(&s).unwrap().hankel;
        let h2 = balance(&moved).unwrap().hankel;
        prop_assert_eq!(h1.len(), h2.len());
        for (a, b) in h1.iter().zip(&h2) {
            prop_assert!((a - b).abs() < 1e-8 * h1[0].max(1.0));
        }
    }

    #[test]
    fn gramians_are_symmetric_and_psd(seed in any::<u64>(), n in 1usize..=10) {
        let mut r = common::rng(seed);
        let s = common::random_stable(&mut r, n, 2, 1);
        let p = lyapunov_solve(&s.a, &(&s.b * s.b.transpose())).unwrap();
        prop_assert!(symmetry_defect(&p) < 1e-12);
        let sym = (&p + p.transpose()) * 0.5;
        let min = sym.symmetric_eigenvalues().min();
        prop_assert!(min > -1e-10 * p.norm().max(1.0));
    }

    #[test]
    fn decode_inverts_encode(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let norm = (x * x + y * y + z * z).sqrt();
        let b = if norm > 1.0 { [x / norm, y / norm, z / norm] } else { [x, y, z] };
        let code = bitflip3();
        let decode = decode_functional(&code, &RecoveryChannel::PERFECT).unwrap();
        let rho = encode(&code, b).unwrap();
        let ev = |p: &PauliString| {
            8.0 * qmor_core::identity_coefficient(&(&PauliPolynomial::from_real(*p, 1.0) * &rho)).re
        };
        let got = decode.evaluate(ev);
        for j in 0..3 {
            prop_assert!((got[j] - b[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn decoded_values_stay_in_range(em in 0.0f64..=1.0, er in 0.0f64..=1.0, seed in any::<u64>()) {
        let code = bitflip3();
        let ch = RecoveryChannel::new(em, er).unwrap();
        let decode = decode_functional(&code, &ch).unwrap();
        let mut r = common::rng(seed);
        let rho = common::random_mixed(&mut r, 3);
        for v in decode.evaluate(|p| rho.expectation(p)) {
            prop_assert!(v.abs() <= 1.0 + 1e-6);
        }
        for (_, p) in decode.entries() {
            prop_assert!(p.is_hermitian(1e-12));
        }
    }
}

#[test]
fn xbar_is_immune_to_independent_flips() {
    let m = independent_bit_flips(3, 0.8).unwrap();
    assert!(adjoint_generator(&"XXX".parse().unwrap(), &m)
        .unwrap()
        .is_zero());
}

#[test]
fn ybar_is_protected_to_second_order() {
    let code = bitflip3();
    for gamma in [0.1, 1.0] {
        let m = independent_bit_flips(3, gamma).unwrap();
        let ld = logical_dynamics(&code, &RecoveryChannel::PERFECT, &m).unwrap();
        let y = ld.sector("ybar").unwrap();
        let v0 = encoded_expectations(&code, [0.0, 1.0, 0.0], &y.closure).unwrap();
        assert!(y.initial_slope(&v0).abs() <= 1e-8 * gamma);
        for t in [0.1, 0.5, 2.0] {
            let exact = 0.5 * (3.0 * (-2.0 * gamma * t).exp() - (-6.0 * gamma * t).exp());
            assert!((y.value_at(&v0, t).unwrap() - exact).abs() < 1e-10);
        }
    }
}

#[test]
fn scaling_of_zbar_sector_with_levels() {
    let expected = [(1, 2), (2, 5)];
    for (levels, dim) in expected {
        let (code, _) = qmor_core::concatenate(&bitflip3(), levels).unwrap();
        let m = independent_bit_flips(code.n, 1.0).unwrap();
        let ld = logical_dynamics(&code, &RecoveryChannel::PERFECT, &m).unwrap();
        assert_eq!(ld.sector("zbar").unwrap().krylov_dim, dim);
    }
}
