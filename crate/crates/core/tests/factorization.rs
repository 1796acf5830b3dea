#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use nalgebra::DMatrix;
use rt4sc::factorization::{
    factorize, factorize_from, initialize, objective, objective_gradients, FactorizationConfig,
};

fn cfg(k: usize, lambda: f64, max_iters: usize, tol: f64, seed: u64) -> FactorizationConfig {
    FactorizationConfig {
        k,
        lambda,
        max_iters,
        tol,
        seed,
    }
}

fn scalar_objective(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    w: &DMatrix<f64>,
    h: &DMatrix<f64>,
    lambda: f64,
) -> f64 {
    let (k, n, tt) = (w.nrows(), m.nrows(), t.nrows());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut pred = 0.0;
            for a in 0..k {
                for b in 0..tt {
                    pred += w[(a, i)] * h[(a, b)] * t[(b, j)];
                }
            }
            total += (m[(i, j)] - pred).powi(2);
        }
    }
    total + lambda * (fro_sq(w) + fro_sq(h))
}

#[test]
fn objective_matches_scalar_loops() {
    for seed in 0..30 {
        let m = random_matrix(4, 4, seed);
        let t = random_matrix(3, 4, seed + 100);
        let w = random_matrix(2, 4, seed + 200);
        let h = random_matrix(2, 3, seed + 300);
        let got = objective(&m, &t, &w, &h, 0.3).unwrap();
        let want = scalar_objective(&m, &t, &w, &h, 0.3);
        assert!(
            (got - want).abs() <= 1e-10 * want.max(1.0),
            "seed {seed}: {got} vs {want}"
        );
    }
}

fn planted_instance(seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let w = random_matrix(2, 6, seed) * 0.1;
    let h = random_matrix(2, 3, seed + 1) * 0.1;
    let t = random_matrix(3, 6, seed + 2);
    (matmul(&transpose(&w), &matmul(&h, &t)), t)
}

#[test]
fn planted_factors_are_recovered() {
    for seed in [11, 12, 13] {
        let (m, t) = planted_instance(seed);
        let model = factorize(&m, &t, &cfg(2, 1e-6, 50, 1e-12, 5)).unwrap();
        let last = *model.objective_trace.last().unwrap();
        assert!(model.objective_trace.len() <= 51);
        assert!(last <= 1e-6, "final objective {last}");
        let fit = objective(&m, &t, &model.w, &model.h, 0.0).unwrap();
        assert!(fit <= 1e-9, "residual {fit}");
    }
}

#[test]
fn objective_trace_is_monotone() {
    for seed in 0..50u64 {
        let n = 3 + seed as usize % 8;
        let tdim = 1 + seed as usize % 5;
        let k = 1 + seed as usize % 4;
        let lambda = [1e-3, 0.05, 0.2, 1.0][seed as usize % 4];
        let m = random_matrix(n, n, seed).abs();
        let t = random_matrix(tdim, n, seed + 500);
        let model = factorize(&m, &t, &cfg(k, lambda, 50, 1e-12, seed)).unwrap();
        for w in model.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..20u64 {
        let n = 3 + seed as usize % 4;
        let m = random_matrix(n, n, seed);
        let t = random_matrix(3, n, seed + 40);
        let w = random_matrix(2, n, seed + 80);
        let h = random_matrix(2, 3, seed + 120);
        let lambda = 0.2;
        let (gw, gh) = objective_gradients(&m, &t, &w, &h, lambda).unwrap();
        let fw = finite_diff(&w, 1e-5, |x| objective(&m, &t, x, &h, lambda).unwrap());
        let fh = finite_diff(&h, 1e-5, |x| objective(&m, &t, &w, x, lambda).unwrap());
        assert!(rel_err(&gw, &fw, 1e-8) <= 1e-4, "seed {seed} W");
        assert!(rel_err(&gh, &fh, 1e-8) <= 1e-4, "seed {seed} H");
    }
}

#[test]
fn relabelling_nodes_permutes_w_columns() {
    for seed in 0..10u64 {
        let n = 7;
        let m = random_matrix(n, n, seed).abs();
        let t = random_matrix(4, n, seed + 9);
        let c = cfg(3, 0.2, 20, 1e-12, seed);
        let (w0, h0) = initialize(3, n, 4, seed);
        let base = factorize_from(&m, &t, w0.clone(), h0.clone(), &c).unwrap();

        let p = random_perm(n, seed);
        let mp = DMatrix::from_fn(n, n, |i, j| m[(p[i], p[j])]);
        let tp = DMatrix::from_fn(4, n, |i, j| t[(i, p[j])]);
        let wp = DMatrix::from_fn(3, n, |i, j| w0[(i, p[j])]);
        let perm = factorize_from(&mp, &tp, wp, h0, &c).unwrap();

        for i in 0..3 {
            for j in 0..n {
                assert!(
                    (perm.w[(i, j)] - base.w[(i, p[j])]).abs() < 1e-8,
                    "seed {seed}"
                );
            }
        }
        assert!(rel_err(&perm.h, &base.h, 1e-12) < 1e-8, "seed {seed}");
    }
}

#[test]
fn same_seed_same_bits() {
    let m = random_matrix(8, 8, 4).abs();
    let t = random_matrix(3, 8, 5);
    let a = factorize(
        &m,
        &t,
        &FactorizationConfig {
            k: 3,
            seed: 9,
            ..Default::default()
        },
    )
    .unwrap();
    let b = factorize(
        &m,
        &t,
        &FactorizationConfig {
            k: 3,
            seed: 9,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(a.to_text(), b.to_text());
}
