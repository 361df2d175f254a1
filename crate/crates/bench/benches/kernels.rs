use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qmor_core::linalg::lyapunov_solve;
use qmor_core::models::{independent_bit_flips, two_spin};
use qmor_core::mor::balance;
use qmor_core::qec::{run_cycles, LogicalInitial};
use qmor_core::{
    bitflip3, build_generator, closure, concatenate, multiply, partition_and_factor, Matrix,
    PauliString, RecoveryChannel, StateSpaceModel, VariableSet,
};

// Deterministic stable test system: damped chain with sinusoidal couplings.
fn chain(n: usize) -> StateSpaceModel {
    let a = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            -1.0 - 0.1 * i as f64
        } else {
            0.3 * ((i * 7 + j * 3) as f64).sin() / n as f64
        }
    });
    let b = Matrix::from_fn(n, 2, |i, j| ((i + 2 * j) as f64).cos());
    let c = Matrix::from_fn(2, n, |i, j| ((3 * i + j) as f64).sin());
    StateSpaceModel::unlabeled(a, b, c).unwrap()
}

fn pauli(c: &mut Criterion) {
    let a: PauliString = "XYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZI".parse().unwrap();
    let b: PauliString = "ZZXXYYIIZZXXYYIIZZXXYYIIZZXXYYII".parse().unwrap();
    c.bench_function("multiply_32_sites", |bn| {
        bn.iter(|| multiply(black_box(&a), black_box(&b)))
    });
}

fn eom(c: &mut Criterion) {
    let m = two_spin(0.1, 0.1, 10.0, 2.0).unwrap();
    let seeds = VariableSet::new(vec!["ZI".parse().unwrap()]).unwrap();
    c.bench_function("two_spin_closure_and_generator", |bn| {
        bn.iter(|| {
            let vars = closure(black_box(&seeds), &m, 1024).unwrap();
            build_generator(&vars, &m).unwrap()
        })
    });
    let vars = closure(&seeds, &m, 1024).unwrap();
    let g = build_generator(&vars, &m).unwrap();
    c.bench_function("two_spin_partition", |bn| {
        bn.iter(|| partition_and_factor(black_box(&g), seeds.as_slice()).unwrap())
    });
}

fn mor(c: &mut Criterion) {
    let s = chain(12);
    let q = &s.b * s.b.transpose();
    c.bench_function("lyapunov_order_12", |bn| {
        bn.iter(|| lyapunov_solve(black_box(&s.a), &q).unwrap())
    });
    c.bench_function("balance_order_12", |bn| {
        bn.iter(|| balance(black_box(&s)).unwrap())
    });
}

fn qec(c: &mut Criterion) {
    let code = bitflip3();
    let m = independent_bit_flips(3, 0.1).unwrap();
    let start = LogicalInitial::Bloch([0.0, 0.0, 1.0]);
    c.bench_function("bitflip3_100_cycles", |bn| {
        bn.iter(|| run_cycles(&code, &RecoveryChannel::PERFECT, &m, 0.5, 100, &start).unwrap())
    });
    let (code9, _) = concatenate(&bitflip3(), 2).unwrap();
    let m9 = independent_bit_flips(9, 0.1).unwrap();
    let mut slow = c.benchmark_group("level2");
    slow.sample_size(10);
    slow.bench_function("bitflip9_10_cycles", |bn| {
        bn.iter(|| run_cycles(&code9, &RecoveryChannel::PERFECT, &m9, 0.5, 10, &start).unwrap())
    });
    slow.finish();
}

criterion_group!(benches, pauli, eom, mor, qec);
criterion_main!(benches);
