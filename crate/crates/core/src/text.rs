//! Text features: tf-idf over a lowercase alphanumeric tokenizer, reduced to
//! `t` dimensions with a seeded truncated SVD.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg;

/// Power-iteration budget for [`reduce_to_t`].
pub const MAX_SUBSPACE_ITERS: usize = 300;
/// Convergence threshold on the sine of the largest principal angle between
/// successive subspaces.
pub const SUBSPACE_TOL: f64 = 1e-10;
/// Ritz values at or below this fraction of the largest are treated as zero.
const RANK_EPS: f64 = 1e-12;

/// `|vocab| × n` tf-idf matrix. Column `j` is node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    pub vocab: Vec<String>,
    pub x: DMatrix<f64>,
}

/// Dense `t × n` text features. Column `j` is node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextFeatureMatrix {
    pub t: DMatrix<f64>,
    pub vocab: Vec<String>,
    /// Estimated eigenvalues of `XᵀX` (squared singular values), descending.
    pub eigenvalues: Vec<f64>,
}

impl TextFeatureMatrix {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn to_csv(&self) -> String {
        linalg::to_csv(&self.t)
    }
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(doc: &str) -> impl Iterator<Item = String> + '_ {
    doc.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
}

/// Raw-count tf times `ln(n / df)` idf. Vocabulary is sorted.
pub fn build_tfidf<S: AsRef<str>>(docs: &[S]) -> TermDocMatrix {
    let n = docs.len();
    let mut counts: Vec<BTreeMap<String, usize>> = Vec::with_capacity(n);
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let mut tf = BTreeMap::new();
        for tok in tokenize(doc.as_ref()) {
            *tf.entry(tok).or_insert(0) += 1;
        }
        for term in tf.keys() {
            *df.entry(term.clone()).or_insert(0) += 1;
        }
        counts.push(tf);
    }

    let vocab: Vec<String> = df.keys().cloned().collect();
    let index: BTreeMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let idf: Vec<f64> = vocab
        .iter()
        .map(|w| (n as f64 / df[w] as f64).ln())
        .collect();

    let mut x = DMatrix::zeros(vocab.len(), n);
    for (j, tf) in counts.iter().enumerate() {
        for (term, &c) in tf {
            let i = index[term.as_str()];
            x[(i, j)] = c as f64 * idf[i];
        }
    }
    TermDocMatrix { vocab, x }
}

/// Orthonormal basis of the column space of `z` (same column count).
fn orthonormalize(z: DMatrix<f64>) -> DMatrix<f64> {
    z.qr().q()
}

/// Flips each column so its largest-magnitude entry is positive.
fn canonical_signs(q: &mut DMatrix<f64>) {
    for mut col in q.column_iter_mut() {
        let mut best = 0.0f64;
        for &v in col.iter() {
            if v.abs() > best.abs() {
                best = v;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// `T = Σ_t^{1/2} V_tᵀ` from the rank-`t` truncated SVD of `X`, computed by
/// subspace iteration on `XᵀX` with Rayleigh-Ritz extraction. Rows past the
/// numerical rank of `X` are exactly zero.
pub fn reduce_to_t(x: &TermDocMatrix, t: usize, seed: u64) -> TextFeatureMatrix {
    assert!(t >= 1, "text feature dimension must be at least 1");
    let n = x.x.ncols();
    let b = t.min(n);
    let mut out = DMatrix::zeros(t, n);
    let mut eigenvalues = vec![0.0; t];
    if b == 0 || x.x.nrows() == 0 {
        return TextFeatureMatrix {
            t: out,
            vocab: x.vocab.clone(),
            eigenvalues,
        };
    }

    let gram = x.x.transpose() * &x.x;
    let mut r = linalg::rng(seed, 0x7e47);
    let mut q = orthonormalize(linalg::uniform_matrix(n, b, -1.0, 1.0, &mut r));
    let mut ritz = vec![0.0; b];

    for _ in 0..MAX_SUBSPACE_ITERS {
        let z = &gram * &q;
        let q_new = orthonormalize(z);
        let small = q_new.transpose() * &gram * &q_new;
        let small = (&small + small.transpose()) * 0.5;
        let eig = SymmetricEigen::new(small);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let vecs = DMatrix::from_fn(b, b, |i, j| eig.eigenvectors[(i, order[j])]);
        let mut q_next = q_new * vecs;
        canonical_signs(&mut q_next);
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

        // Only the numerically nonzero part of the spectrum has a stable
        // subspace; null directions are arbitrary.
        let top = values[0].max(0.0);
        let live = values.iter().filter(|&&v| v > RANK_EPS * top).count();
        let angle = if live == 0 {
            0.0
        } else {
            let qn = q_next.columns(0, live);
            let qo = q.columns(0, live);
            let resid = qn - qo * (qo.transpose() * qn);
            resid.norm()
        };
        q = q_next;
        ritz = values;
        if angle < SUBSPACE_TOL {
            break;
        }
    }

    let top = ritz[0].max(0.0);
    for i in 0..b {
        let lam = ritz[i];
        if top == 0.0 || lam <= RANK_EPS * top {
            continue;
        }
        eigenvalues[i] = lam;
        let scale = lam.sqrt();
        for j in 0..n {
            out[(i, j)] = scale * q[(j, i)];
        }
    }
    TextFeatureMatrix {
        t: out,
        vocab: x.vocab.clone(),
        eigenvalues,
    }
}
