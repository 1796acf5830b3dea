//! Three-matrix factorization `M ≈ WᵀHT` with ridge penalties, solved by
//! alternating exact minimization over `W` and `H`.
//!
//! Shapes: `M` is `n×n`, `T` is `t×n`, `W` is `k×n`, `H` is `k×t`.
//!
//! The `W` half-step is an ordinary ridge regression. The `H` half-step
//! minimizes `‖M − WᵀHT‖² + λ‖H‖²`, whose normal equations
//! `(WWᵀ) H (TTᵀ) + λH = W M Tᵀ` decouple in the eigenbases of `WWᵀ` and
//! `TTᵀ`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg;

/// Magic string at the top of a saved model.
pub const MODEL_MAGIC: &str = "RT4SC1";

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationConfig {
    pub k: usize,
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FactorizationConfig {
    fn default() -> Self {
        Self {
            k: 40,
            lambda: 0.2,
            max_iters: 50,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl FactorizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("factorization k must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config("factorization tol must be > 0".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Config("factorization lambda must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub w: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// Objective at initialization followed by one value per full iteration.
    pub objective_trace: Vec<f64>,
    pub seed: u64,
}

impl FactorModel {
    pub fn k(&self) -> usize {
        self.w.nrows()
    }

    pub fn n(&self) -> usize {
        self.w.ncols()
    }

    pub fn t(&self) -> usize {
        self.h.ncols()
    }

    /// Text-format serialization: magic line, header, then `[W]`, `[H]` and
    /// `[trace]` sections of comma-separated rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_MAGIC}");
        let _ = writeln!(
            out,
            "k={},t={},n={},seed={},trace={}",
            self.k(),
            self.t(),
            self.n(),
            self.seed,
            self.objective_trace.len()
        );
        out.push_str("[W]\n");
        out.push_str(&linalg::to_csv(&self.w));
        out.push_str("[H]\n");
        out.push_str(&linalg::to_csv(&self.h));
        out.push_str("[trace]\n");
        for v in &self.objective_trace {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::invalid(format!("model file: {msg}"));
        let mut lines = text.lines();
        if lines.next() != Some(MODEL_MAGIC) {
            return Err(bad(format!("missing {MODEL_MAGIC} magic")));
        }
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let mut fields = std::collections::HashMap::new();
        for kv in header.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("bad header field {kv:?}")))?;
            let v: u64 = v
                .parse()
                .map_err(|_| bad(format!("bad header value {v:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| bad(format!("header lacks {k}")))
        };
        let (k, t, n, seed, trace_len) = (
            get("k")? as usize,
            get("t")? as usize,
            get("n")? as usize,
            get("seed")?,
            get("trace")? as usize,
        );
        let mut expect = |tag: &str| match lines.next() {
            Some(l) if l == tag => Ok(()),
            other => Err(bad(format!("expected {tag}, got {other:?}"))),
        };
        expect("[W]")?;
        let w = linalg::from_csv_rows(&mut lines, k, n).map_err(bad)?;
        let mut expect = |tag: &str| match lines.next() {
            Some(l) if l == tag => Ok(()),
            other => Err(bad(format!("expected {tag}, got {other:?}"))),
        };
        expect("[H]")?;
        let h = linalg::from_csv_rows(&mut lines, k, t).map_err(bad)?;
        match lines.next() {
            Some("[trace]") => {}
            other => return Err(bad(format!("expected [trace], got {other:?}"))),
        }
        let objective_trace = (0..trace_len)
            .map(|_| {
                let l = lines.next().ok_or_else(|| bad("short trace".into()))?;
                l.trim()
                    .parse()
                    .map_err(|_| bad(format!("bad trace value {l:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            w,
            h,
            objective_trace,
            seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn check_shapes(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    w: &DMatrix<f64>,
    h: &DMatrix<f64>,
) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape(format!(
            "M is {}x{}, expected square",
            n,
            m.ncols()
        )));
    }
    if t.ncols() != n {
        return Err(Error::Shape(format!(
            "T has {} columns, M has {n}",
            t.ncols()
        )));
    }
    if w.ncols() != n {
        return Err(Error::Shape(format!(
            "W has {} columns, M has {n}",
            w.ncols()
        )));
    }
    if h.nrows() != w.nrows() {
        return Err(Error::Shape(format!(
            "H has {} rows, W has {}",
            h.nrows(),
            w.nrows()
        )));
    }
    if h.ncols() != t.nrows() {
        return Err(Error::Shape(format!(
            "H has {} columns, T has {} rows",
            h.ncols(),
            t.nrows()
        )));
    }
    Ok(())
}

/// `‖M − WᵀHT‖_F² + λ(‖W‖_F² + ‖H‖_F²)`.
pub fn objective(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    w: &DMatrix<f64>,
    h: &DMatrix<f64>,
    lambda: f64,
) -> Result<f64> {
    check_shapes(m, t, w, h)?;
    let resid = m - w.transpose() * (h * t);
    Ok(linalg::frobenius_sq(&resid) + lambda * (linalg::frobenius_sq(w) + linalg::frobenius_sq(h)))
}

/// Analytic gradients of [`objective`] with respect to `W` and `H`.
pub fn objective_gradients(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    w: &DMatrix<f64>,
    h: &DMatrix<f64>,
    lambda: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_shapes(m, t, w, h)?;
    let b = h * t;
    let resid = m - w.transpose() * &b;
    let gw = (&b * resid.transpose()) * -2.0 + w * (2.0 * lambda);
    let gh = (w * &resid * t.transpose()) * -2.0 + h * (2.0 * lambda);
    Ok((gw, gh))
}

/// Exact minimizer over `W` with `H` fixed: `(BBᵀ+λI)⁻¹ B Mᵀ`, `B = HT`.
pub fn update_w(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    h: &DMatrix<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let b = h * t;
    let k = b.nrows();
    let gram = &b * b.transpose() + DMatrix::identity(k, k) * lambda;
    let rhs = &b * m.transpose();
    let chol = gram.cholesky().ok_or(Error::Singular("W update"))?;
    Ok(chol.solve(&rhs))
}

/// Exact minimizer over `H` with `W` fixed.
///
/// With `WWᵀ = U diag(a) Uᵀ` and `TTᵀ = V diag(b) Vᵀ`, the solution is
/// `H = U [(Uᵀ W M Tᵀ V) ⊘ (a bᵀ + λ)] Vᵀ`.
pub fn update_h(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    w: &DMatrix<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let ww = w * w.transpose();
    let tt = t * t.transpose();
    let ew = SymmetricEigen::new((&ww + ww.transpose()) * 0.5);
    let et = SymmetricEigen::new((&tt + tt.transpose()) * 0.5);
    let rhs = w * m * t.transpose();
    let mut core = ew.eigenvectors.transpose() * rhs * &et.eigenvectors;

    let a_max = ew.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v));
    let b_max = et.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v));
    let floor = if lambda > 0.0 {
        0.0
    } else {
        f64::EPSILON * (a_max * b_max).max(f64::MIN_POSITIVE) * (w.nrows().max(t.nrows()) as f64)
    };
    for i in 0..core.nrows() {
        for j in 0..core.ncols() {
            let denom = ew.eigenvalues[i].max(0.0) * et.eigenvalues[j].max(0.0) + lambda;
            if denom <= floor {
                return Err(Error::Singular("H update"));
            }
            core[(i, j)] /= denom;
        }
    }
    Ok(&ew.eigenvectors * core * et.eigenvectors.transpose())
}

/// Seeded uniform(−0.1, 0.1) initialization. `W` is drawn before `H`.
pub fn initialize(k: usize, n: usize, t: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut r = linalg::rng(seed, 0xfac7);
    let w = linalg::uniform_matrix(k, n, -0.1, 0.1, &mut r);
    let h = linalg::uniform_matrix(k, t, -0.1, 0.1, &mut r);
    (w, h)
}

/// Factorizes `M ≈ WᵀHT` from the seeded initialization.
pub fn factorize(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    cfg: &FactorizationConfig,
) -> Result<FactorModel> {
    cfg.validate()?;
    let (w0, h0) = initialize(cfg.k, m.nrows(), t.nrows(), cfg.seed);
    factorize_from(m, t, w0, h0, cfg)
}

/// Factorizes `M ≈ WᵀHT` from a caller-supplied initialization. Each
/// iteration updates `W` then `H`; stops after `max_iters` iterations or when
/// the relative objective decrease drops below `tol`.
pub fn factorize_from(
    m: &DMatrix<f64>,
    t: &DMatrix<f64>,
    w0: DMatrix<f64>,
    h0: DMatrix<f64>,
    cfg: &FactorizationConfig,
) -> Result<FactorModel> {
    cfg.validate()?;
    if m.nrows() == 0 {
        return Err(Error::invalid("factorization needs n >= 1"));
    }
    if t.nrows() == 0 {
        return Err(Error::invalid("factorization needs t >= 1"));
    }
    if w0.nrows() != cfg.k {
        return Err(Error::Shape(format!(
            "W0 has {} rows, k = {}",
            w0.nrows(),
            cfg.k
        )));
    }
    let mut w = w0;
    let mut h = h0;
    let mut trace = vec![objective(m, t, &w, &h, cfg.lambda)?];
    for _ in 0..cfg.max_iters {
        w = update_w(m, t, &h, cfg.lambda)?;
        h = update_h(m, t, &w, cfg.lambda)?;
        let prev = *trace.last().unwrap();
        let cur = objective(m, t, &w, &h, cfg.lambda)?;
        trace.push(cur);
        if !linalg::all_finite(&w) || !linalg::all_finite(&h) {
            return Err(Error::invalid(
                "factorization diverged to non-finite values",
            ));
        }
        let rel = if prev > 0.0 { (prev - cur) / prev } else { 0.0 };
        if rel < cfg.tol {
            break;
        }
    }
    Ok(FactorModel {
        w,
        h,
        objective_trace: trace,
        seed: cfg.seed,
    })
}

/// Node representations: row `i` is column `i` of `W` followed by column `i`
/// of `HT`, optionally L2-normalized (zero rows stay zero).
pub fn embed(model: &FactorModel, t: &DMatrix<f64>, normalize: bool) -> Result<DMatrix<f64>> {
    if model.h.ncols() != t.nrows() || model.w.ncols() != t.ncols() {
        return Err(Error::Shape(format!(
            "model (k={}, t={}, n={}) vs T {}x{}",
            model.k(),
            model.t(),
            model.n(),
            t.nrows(),
            t.ncols()
        )));
    }
    let k = model.k();
    let n = model.n();
    let ht = &model.h * t;
    let mut r = DMatrix::zeros(n, 2 * k);
    for i in 0..n {
        for j in 0..k {
            r[(i, j)] = model.w[(j, i)];
            r[(i, k + j)] = ht[(j, i)];
        }
    }
    if normalize {
        for mut row in r.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
    Ok(r)
}
