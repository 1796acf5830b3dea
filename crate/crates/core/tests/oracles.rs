//! Sanity checks on the test oracles themselves.

mod common;

use common::*;
use nalgebra::DMatrix;

#[test]
fn jacobi_reconstructs() {
    let a = random_matrix(6, 6, 1);
    let s = &a + transpose(&a);
    let (vals, vecs) = jacobi_eigen(&s);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
    let back = matmul(&matmul(&vecs, &d), &transpose(&vecs));
    assert!(rel_err(&back, &s, 1e-12) < 1e-12);
}

#[test]
fn modular_rank_matches_known_cases() {
    assert_eq!(rank_q(&[vec![1, 2], vec![2, 4]]), 1);
    assert_eq!(rank_q(&[vec![1, 1], vec![1, -1]]), 2);
    assert_eq!(rank_gf2(&[vec![1, 1], vec![1, -1]]), 1);
}
