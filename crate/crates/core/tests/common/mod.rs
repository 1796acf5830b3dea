//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerical routines.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rt4sc::TextAttributedGraph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x0dd_ba11)
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> TextAttributedGraph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    TextAttributedGraph::structural(n, edges).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

/// Random permutation of `0..n`.
pub fn random_perm(n: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = r.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Triple-loop matrix product.
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

pub fn transpose(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

pub fn fro_sq(a: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s
}

const P61: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

/// Rank of an integer matrix over the prime field `F_p` by Gaussian elimination.
pub fn rank_mod(m: &[Vec<i64>], p: u64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut a: Vec<Vec<u64>> = m
        .iter()
        .map(|row| row.iter().map(|&v| v.rem_euclid(p as i64) as u64).collect())
        .collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..a.len()).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = powmod(a[rank][c], p - 2, p);
        for r in 0..a.len() {
            if r != rank && a[r][c] != 0 {
                let f = mulmod(a[r][c], inv, p);
                for k in c..cols {
                    let sub = mulmod(f, a[rank][k], p);
                    a[r][k] = (a[r][k] + p - sub) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank over the rationals (via a 61-bit prime field).
pub fn rank_q(m: &[Vec<i64>]) -> usize {
    rank_mod(m, P61)
}

pub fn rank_gf2(m: &[Vec<i64>]) -> usize {
    rank_mod(m, 2)
}

/// Oriented boundary matrices of a clique complex built by brute-force
/// clique enumeration: `(vertices, edges, triangles, ∂₁, ∂₂)`.
pub struct BruteComplex {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub triangles: Vec<(usize, usize, usize)>,
    pub d1: Vec<Vec<i64>>,
    pub d2: Vec<Vec<i64>>,
}

pub fn brute_complex(g: &TextAttributedGraph) -> BruteComplex {
    let n = g.n();
    let adj = |u: usize, v: usize| g.edges().contains(&(u.min(v), u.max(v)));
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if adj(u, v) {
                edges.push((u, v));
            }
        }
    }
    let mut triangles = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if adj(a, b) && adj(a, c) && adj(b, c) {
                    triangles.push((a, b, c));
                }
            }
        }
    }
    let mut d1 = vec![vec![0i64; edges.len()]; n];
    for (j, &(u, v)) in edges.iter().enumerate() {
        d1[u][j] = -1;
        d1[v][j] = 1;
    }
    let eid = |u: usize, v: usize| edges.iter().position(|&e| e == (u, v)).unwrap();
    let mut d2 = vec![vec![0i64; triangles.len()]; edges.len()];
    for (j, &(a, b, c)) in triangles.iter().enumerate() {
        d2[eid(b, c)][j] += 1;
        d2[eid(a, c)][j] -= 1;
        d2[eid(a, b)][j] += 1;
    }
    BruteComplex {
        n,
        edges,
        triangles,
        d1,
        d2,
    }
}

impl BruteComplex {
    /// `(β₀, β₁)` over the rationals.
    pub fn betti_q(&self) -> (usize, usize) {
        let r1 = rank_q(&self.d1);
        let r2 = rank_q(&self.d2);
        (self.n - r1, self.edges.len() - r1 - r2)
    }

    pub fn betti_gf2(&self) -> (usize, usize) {
        let r1 = rank_gf2(&self.d1);
        let r2 = rank_gf2(&self.d2);
        (self.n - r1, self.edges.len() - r1 - r2)
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues (unsorted) and eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().max(1e-300);
    for _ in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| m[i][i]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| v[i][j]);
    (vals, vecs)
}

/// Number of eigenvalues with magnitude below `tol`.
pub fn nullity(a: &DMatrix<f64>, tol: f64) -> usize {
    jacobi_eigen(a).0.iter().filter(|v| v.abs() < tol).count()
}

/// Best rank-`t` approximation of a PSD matrix from its Jacobi spectrum.
pub fn psd_truncation(a: &DMatrix<f64>, t: usize) -> DMatrix<f64> {
    let (vals, vecs) = jacobi_eigen(a);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for &k in order.iter().take(t) {
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vals[k] * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    out
}

/// Mann–Whitney AUC by a double loop over every positive–negative pair.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            total += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / total
}

/// Central finite difference of `f` at every entry of `x`.
pub fn finite_diff(x: &DMatrix<f64>, h: f64, f: impl Fn(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let mut plus = x.clone();
            plus[(i, j)] += h;
            let mut minus = x.clone();
            minus[(i, j)] -= h;
            g[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    g
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F, floor)`.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    let diff = fro_sq(&(a - b)).sqrt();
    diff / fro_sq(a).sqrt().max(fro_sq(b).sqrt()).max(floor)
}
