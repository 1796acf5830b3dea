//! Clique complexes up to dimension two, their boundary operators and Hodge
//! Laplacians, and a forward-only simplicial network over vertices and edges.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::TextAttributedGraph;
use crate::linalg;

/// Vertices `0..n`, edges and triangles in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    n: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    edge_index: HashMap<[usize; 2], usize>,
}

impl SimplicialComplex {
    /// Builds a complex from explicit simplices. Edges and triangles are
    /// sorted; every triangle's edges must be present.
    pub fn new(
        n: usize,
        mut edges: Vec<[usize; 2]>,
        mut triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        for e in &mut edges {
            e.sort_unstable();
            if e[0] == e[1] || e[1] >= n {
                return Err(Error::invalid(format!("bad edge {e:?} for {n} vertices")));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        for t in &mut triangles {
            t.sort_unstable();
        }
        triangles.sort_unstable();
        triangles.dedup();
        let edge_index: HashMap<_, _> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        for t in &triangles {
            for f in tri_faces(*t) {
                if !edge_index.contains_key(&f) {
                    return Err(Error::invalid(format!("triangle {t:?} lacks face {f:?}")));
                }
            }
        }
        Ok(Self {
            n,
            edges,
            triangles,
            edge_index,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_index.get(&[u.min(v), u.max(v)]).copied()
    }

    /// Number of `p`-simplices for `p ∈ {0, 1, 2}`.
    pub fn count(&self, p: usize) -> usize {
        match p {
            0 => self.n,
            1 => self.edges.len(),
            2 => self.triangles.len(),
            _ => 0,
        }
    }

    /// Text export with `[edges]` and `[triangles]` sections.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[vertices]\n{}", self.n);
        out.push_str("[edges]\n");
        for [u, v] in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out.push_str("[triangles]\n");
        for [a, b, c] in &self.triangles {
            let _ = writeln!(out, "{a} {b} {c}");
        }
        out
    }
}

/// Faces of `(a,b,c)` in the order `(b,c)`, `(a,c)`, `(a,b)`, i.e. with
/// vertex `i` removed for `i = 0, 1, 2`.
fn tri_faces([a, b, c]: [usize; 3]) -> [[usize; 2]; 3] {
    [[b, c], [a, c], [a, b]]
}

/// Clique complex of `g` truncated at dimension `max_dim` (1 or 2).
///
/// Triangles are enumerated per edge `(u,v)` from common neighbours `w > v`,
/// which yields lexicographic order directly; the per-edge work is spread
/// over the rayon pool and reassembled in edge order.
pub fn clique_lift(g: &TextAttributedGraph, max_dim: usize) -> SimplicialComplex {
    let edges: Vec<[usize; 2]> = g.edges().iter().map(|&(u, v)| [u, v]).collect();
    let triangles: Vec<[usize; 3]> = if max_dim >= 2 {
        edges
            .par_iter()
            .map(|&[u, v]| {
                let (nu, nv) = (g.neighbors(u), g.neighbors(v));
                let (mut i, mut j) = (0, 0);
                let mut found = Vec::new();
                while i < nu.len() && j < nv.len() {
                    match nu[i].cmp(&nv[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            if nu[i] > v {
                                found.push([u, v, nu[i]]);
                            }
                            i += 1;
                            j += 1;
                        }
                    }
                }
                found
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    } else {
        Vec::new()
    };
    let edge_index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    SimplicialComplex {
        n: g.n(),
        edges,
        triangles,
        edge_index,
    }
}

/// Signed sparse boundary operator, stored by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub dim: usize,
    pub rows: usize,
    /// `columns[j]` lists `(row, sign)` with rows ascending.
    pub columns: Vec<Vec<(usize, i8)>>,
}

impl BoundaryMatrix {
    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, s) in col {
                m[(i, j)] = s as f64;
            }
        }
        m
    }

    /// Integer product `self · other` as a dense `i64` row-major table.
    pub fn compose(&self, other: &BoundaryMatrix) -> Result<Vec<Vec<i64>>> {
        if self.cols() != other.rows {
            return Err(Error::Shape(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows,
                self.cols(),
                other.rows,
                other.cols()
            )));
        }
        let mut out = vec![vec![0i64; other.cols()]; self.rows];
        for (j, col) in other.columns.iter().enumerate() {
            for &(mid, s2) in col {
                for &(i, s1) in &self.columns[mid] {
                    out[i][j] += s1 as i64 * s2 as i64;
                }
            }
        }
        Ok(out)
    }
}

/// `∂₁` (vertices × edges) or `∂₂` (edges × triangles). Orientation follows
/// ascending vertex ids: `∂₁(u,w) = w − u` and
/// `∂₂(a,b,c) = (b,c) − (a,c) + (a,b)`.
pub fn boundary(cx: &SimplicialComplex, p: usize) -> Result<BoundaryMatrix> {
    match p {
        1 => Ok(BoundaryMatrix {
            dim: 1,
            rows: cx.n,
            columns: cx
                .edges
                .iter()
                .map(|&[u, w]| vec![(u, -1), (w, 1)])
                .collect(),
        }),
        2 => Ok(BoundaryMatrix {
            dim: 2,
            rows: cx.edges.len(),
            columns: cx
                .triangles
                .iter()
                .map(|&t| {
                    let mut col: Vec<(usize, i8)> = tri_faces(t)
                        .iter()
                        .zip([1i8, -1, 1])
                        .map(|(f, s)| (cx.edge_index[f], s))
                        .collect();
                    col.sort_unstable();
                    col
                })
                .collect(),
        }),
        _ => Err(Error::invalid(format!(
            "boundary dimension must be 1 or 2, got {p}"
        ))),
    }
}

/// `L₀ = ∂₁∂₁ᵀ` or `L₁ = ∂₁ᵀ∂₁ + ∂₂∂₂ᵀ`.
pub fn hodge_laplacian(cx: &SimplicialComplex, p: usize) -> Result<DMatrix<f64>> {
    let b1 = boundary(cx, 1)?.to_dense();
    match p {
        0 => Ok(&b1 * b1.transpose()),
        1 => {
            let b2 = boundary(cx, 2)?.to_dense();
            Ok(b1.transpose() * &b1 + &b2 * b2.transpose())
        }
        _ => Err(Error::invalid(format!(
            "Hodge Laplacian dimension must be 0 or 1, got {p}"
        ))),
    }
}

/// `I − L/λmax(L)`, with `λmax := 1` when `L` has no positive eigenvalue.
pub fn propagation_operator(lap: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lap.nrows();
    let mut lam = linalg::lambda_max_sym(lap);
    if lam <= 0.0 {
        lam = 1.0;
    }
    DMatrix::identity(n, n) - lap / lam
}

/// Per-layer weights for vertex (`theta0`) and edge (`theta1`) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnWeights {
    pub theta0: Vec<DMatrix<f64>>,
    pub theta1: Vec<DMatrix<f64>>,
    pub seed: u64,
}

impl SnnWeights {
    /// Glorot-uniform weights: first layer `d_in × hidden`, later layers
    /// `hidden × hidden`.
    pub fn seeded(d_in: usize, hidden: usize, layers: usize, seed: u64) -> Self {
        let mut r = linalg::rng(seed, 0x5_4e4e);
        let mut theta0 = Vec::with_capacity(layers);
        let mut theta1 = Vec::with_capacity(layers);
        for l in 0..layers {
            let rows = if l == 0 { d_in } else { hidden };
            let bound = (6.0 / (rows + hidden).max(1) as f64).sqrt();
            theta0.push(DMatrix::from_fn(rows, hidden, |_, _| {
                r.random_range(-bound..bound)
            }));
            theta1.push(DMatrix::from_fn(rows, hidden, |_, _| {
                r.random_range(-bound..bound)
            }));
        }
        Self {
            theta0,
            theta1,
            seed,
        }
    }

    /// Same shapes with every entry zero.
    pub fn zeros(d_in: usize, hidden: usize, layers: usize) -> Self {
        let mut w = Self::seeded(d_in, hidden, layers, 0);
        for m in w.theta0.iter_mut().chain(w.theta1.iter_mut()) {
            m.fill(0.0);
        }
        w
    }

    pub fn layers(&self) -> usize {
        self.theta0.len()
    }

    fn validate(&self, d_in: usize) -> Result<usize> {
        if self.theta0.len() != self.theta1.len() {
            return Err(Error::Shape("theta0 and theta1 layer counts differ".into()));
        }
        let mut width = d_in;
        for (l, (a, b)) in self.theta0.iter().zip(&self.theta1).enumerate() {
            if a.nrows() != width || b.nrows() != width || a.ncols() != b.ncols() {
                return Err(Error::Shape(format!(
                    "layer {l}: theta0 {}x{}, theta1 {}x{}, input width {width}",
                    a.nrows(),
                    a.ncols(),
                    b.nrows(),
                    b.ncols()
                )));
            }
            width = a.ncols();
        }
        Ok(width)
    }
}

/// Forward pass producing one row per vertex:
/// `[vertex channel | mean of incident edge channel]`.
///
/// The edge channel is an oriented cochain: it starts as `∂₁ᵀX₀/2` (half the
/// endpoint difference) and is pooled back through the signed incidence, so
/// each edge contributes as seen from the vertex. Each layer applies
/// `X ← tanh(P X Θ)` per channel with `P = I − L/λmax`.
pub fn snn_forward(
    cx: &SimplicialComplex,
    x0: &DMatrix<f64>,
    weights: &SnnWeights,
) -> Result<DMatrix<f64>> {
    let n = cx.num_vertices();
    if x0.nrows() != n {
        return Err(Error::Shape(format!(
            "X0 has {} rows, complex has {n} vertices",
            x0.nrows()
        )));
    }
    let width = weights.validate(x0.ncols())?;

    let b1 = boundary(cx, 1)?;
    let mut x_vert = x0.clone();
    let mut x_edge = b1.to_dense().transpose() * x0 * 0.5;

    let p0 = propagation_operator(&hodge_laplacian(cx, 0)?);
    let p1 = propagation_operator(&hodge_laplacian(cx, 1)?);
    for (t0, t1) in weights.theta0.iter().zip(&weights.theta1) {
        x_vert = (&p0 * &x_vert * t0).map(f64::tanh);
        x_edge = (&p1 * &x_edge * t1).map(f64::tanh);
    }

    let mut out = DMatrix::zeros(n, 2 * width);
    out.columns_mut(0, width).copy_from(&x_vert);
    let mut deg = vec![0usize; n];
    for (e, &[u, v]) in cx.edges().iter().enumerate() {
        for (end, sign) in [(u, -1.0), (v, 1.0)] {
            deg[end] += 1;
            for c in 0..width {
                out[(end, width + c)] += sign * x_edge[(e, c)];
            }
        }
    }
    for v in 0..n {
        if deg[v] > 0 {
            let inv = 1.0 / deg[v] as f64;
            for c in 0..width {
                out[(v, width + c)] *= inv;
            }
        }
    }
    Ok(out)
}
