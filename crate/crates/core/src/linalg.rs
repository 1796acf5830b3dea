//! Small dense helpers shared across modules.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for `seed`, with an independent `stream` per consumer so
/// that adding draws in one stage never shifts another stage's numbers.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Matrix with i.i.d. uniform(lo, hi) entries, filled column by column.
pub fn uniform_matrix(
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    rng: &mut impl Rng,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Largest eigenvalue of a symmetric matrix (0 for an empty matrix).
pub fn lambda_max_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
}

/// `‖A‖_F²`.
pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Row-major CSV with shortest round-trip float formatting.
pub fn to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Parses the output of [`to_csv`]. Every row must have `cols` fields.
pub fn from_csv_rows<'a>(
    lines: impl Iterator<Item = &'a str>,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>, String> {
    let mut m = DMatrix::zeros(rows, cols);
    let mut lines = lines;
    for i in 0..rows {
        let line = lines.next().ok_or_else(|| format!("missing row {i}"))?;
        let fields: Vec<&str> = if cols == 0 {
            Vec::new()
        } else {
            line.split(',').collect()
        };
        if fields.len() != cols {
            return Err(format!(
                "row {i}: expected {cols} fields, got {}",
                fields.len()
            ));
        }
        for (j, f) in fields.iter().enumerate() {
            m[(i, j)] = f
                .trim()
                .parse()
                .map_err(|_| format!("row {i}: bad number {f:?}"))?;
        }
    }
    Ok(m)
}

/// Permutes rows of `m`: row `v` moves to `perm[v]`.
pub fn permute_rows(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (v, &p) in perm.iter().enumerate() {
        out.set_row(p, &m.row(v));
    }
    out
}
