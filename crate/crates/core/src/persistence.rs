//! Persistent homology of ego networks and its vectorization into node
//! side features.
//!
//! Each node's `r`-hop ego network is filtered by edge dissimilarity
//! `1 − Jaccard(N(u), N(v))` (neighbour sets taken inside the ego network);
//! vertices enter at 0 and triangles at the largest of their edge values.
//! Bars come from the standard left-to-right column reduction over GF(2).

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::TextAttributedGraph;
use crate::simplicial::clique_lift;

/// Number of statistics produced by [`vectorize`].
pub const TOPO_DIM: usize = 8;

/// Induced subgraph around a center node.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoNet {
    /// Nodes relabeled `0..nodes.len()` in ascending global id order.
    pub graph: TextAttributedGraph,
    /// Local index → global node id.
    pub nodes: Vec<usize>,
    /// Local index of the center.
    pub center: usize,
}

/// Induced subgraph on all nodes within `r` hops of `v`.
pub fn ego_subgraph(g: &TextAttributedGraph, v: usize, r: usize) -> Result<EgoNet> {
    if v >= g.n() {
        return Err(Error::invalid(format!(
            "node {v} out of range for {} nodes",
            g.n()
        )));
    }
    let mut dist = vec![usize::MAX; g.n()];
    dist[v] = 0;
    let mut queue = VecDeque::from([v]);
    let mut nodes = vec![v];
    while let Some(u) = queue.pop_front() {
        if dist[u] == r {
            continue;
        }
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                nodes.push(w);
                queue.push_back(w);
            }
        }
    }
    nodes.sort_unstable();
    let center = nodes.binary_search(&v).unwrap();
    Ok(EgoNet {
        graph: g.induced(&nodes),
        nodes,
        center,
    })
}

/// A simplex (sorted vertex list) with its filtration value.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSimplex {
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl FilteredSimplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Simplices in filtration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    simplices: Vec<FilteredSimplex>,
}

impl Filtration {
    /// Sorts by `(value, dimension, vertex list)`.
    pub fn sorted(mut simplices: Vec<FilteredSimplex>) -> Self {
        for s in &mut simplices {
            s.vertices.sort_unstable();
        }
        simplices.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.dim().cmp(&b.dim()))
                .then_with(|| a.vertices.cmp(&b.vertices))
        });
        Self { simplices }
    }

    /// Takes the order as given. Monotonicity is checked by
    /// [`compute_persistence`].
    pub fn in_order(simplices: Vec<FilteredSimplex>) -> Self {
        Self { simplices }
    }

    pub fn simplices(&self) -> &[FilteredSimplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Boundary columns as ascending filtration indices. Fails if a face is
    /// missing, appears later than its coface, or has a larger value.
    pub fn boundary_columns(&self) -> Result<Vec<Vec<usize>>> {
        let mut index: HashMap<&[usize], usize> = HashMap::with_capacity(self.simplices.len());
        let mut cols = Vec::with_capacity(self.simplices.len());
        for (j, s) in self.simplices.iter().enumerate() {
            if s.vertices.is_empty() || s.vertices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::NonMonotone(format!(
                    "simplex {:?} is not a sorted vertex set",
                    s.vertices
                )));
            }
            if !s.value.is_finite() {
                return Err(Error::NonMonotone(format!(
                    "simplex {:?} has value {}",
                    s.vertices, s.value
                )));
            }
            let mut col = Vec::new();
            if s.vertices.len() > 1 {
                for drop in 0..s.vertices.len() {
                    let face: Vec<usize> = s
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    let &i = index.get(face.as_slice()).ok_or_else(|| {
                        Error::NonMonotone(format!(
                            "face {face:?} of {:?} appears after it or not at all",
                            s.vertices
                        ))
                    })?;
                    if self.simplices[i].value > s.value {
                        return Err(Error::NonMonotone(format!(
                            "face {face:?} at {} exceeds coface {:?} at {}",
                            self.simplices[i].value, s.vertices, s.value
                        )));
                    }
                    col.push(i);
                }
                col.sort_unstable();
            }
            if index.insert(&s.vertices, j).is_some() {
                return Err(Error::NonMonotone(format!(
                    "duplicate simplex {:?}",
                    s.vertices
                )));
            }
            cols.push(col);
        }
        Ok(cols)
    }
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Jaccard similarity of the (open) neighbour sets of `u` and `v`.
pub fn jaccard(g: &TextAttributedGraph, u: usize, v: usize) -> f64 {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    let inter = sorted_intersection_len(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Vertices at 0, edges at `1 − J(u,v)`, triangles at their largest edge value.
pub fn build_filtration(sub: &TextAttributedGraph) -> Filtration {
    let cx = clique_lift(sub, 2);
    let mut edge_value = HashMap::with_capacity(cx.edges().len());
    let mut simplices = Vec::with_capacity(sub.n() + cx.edges().len() + cx.triangles().len());
    for v in 0..sub.n() {
        simplices.push(FilteredSimplex {
            vertices: vec![v],
            value: 0.0,
        });
    }
    for &[u, v] in cx.edges() {
        let value = 1.0 - jaccard(sub, u, v);
        edge_value.insert((u, v), value);
        simplices.push(FilteredSimplex {
            vertices: vec![u, v],
            value,
        });
    }
    for &[a, b, c] in cx.triangles() {
        let value = edge_value[&(a, b)]
            .max(edge_value[&(a, c)])
            .max(edge_value[&(b, c)]);
        simplices.push(FilteredSimplex {
            vertices: vec![a, b, c],
            value,
        });
    }
    Filtration::sorted(simplices)
}

/// One persistence bar. `death` is `f64::INFINITY` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl Bar {
    pub fn is_infinite(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Bars in dimensions 0 and 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    pub bars: Vec<Bar>,
}

impl PersistenceDiagram {
    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Bar> {
        self.bars.iter().filter(move |b| b.dim == dim)
    }

    /// CSV with a `dim,birth,death` header; infinite deaths are written `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death\n");
        for b in &self.bars {
            if b.is_infinite() {
                let _ = writeln!(out, "{},{},inf", b.dim, b.birth);
            } else {
                let _ = writeln!(out, "{},{},{}", b.dim, b.birth, b.death);
            }
        }
        out
    }
}

/// Reduced boundary matrix and the pairing read off from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    /// Reduced columns, each an ascending list of row (filtration) indices.
    pub columns: Vec<Vec<usize>>,
    /// `(creator, destroyer)` filtration indices.
    pub pairs: Vec<(usize, usize)>,
    /// Unpaired creators.
    pub essential: Vec<usize>,
}

/// `a ← a + b` over GF(2) for ascending index lists.
fn add_columns(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Standard column reduction: left to right, add the earlier column owning
/// the same lowest row until the lowest row is new or the column is empty.
pub fn reduce(f: &Filtration) -> Result<Reduction> {
    let mut columns = f.boundary_columns()?;
    let mut owner: Vec<Option<usize>> = vec![None; columns.len()];
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match owner[low] {
                Some(k) => {
                    let merged = add_columns(&columns[j], &columns[k]);
                    columns[j] = merged;
                }
                None => {
                    owner[low] = Some(j);
                    break;
                }
            }
        }
    }
    let mut pairs = Vec::new();
    let mut essential = Vec::new();
    for j in 0..columns.len() {
        if let Some(&low) = columns[j].last() {
            pairs.push((low, j));
        } else if owner[j].is_none() {
            essential.push(j);
        }
    }
    Ok(Reduction {
        columns,
        pairs,
        essential,
    })
}

/// Persistence diagram of dimensions 0 and 1. Zero-length bars are kept.
pub fn compute_persistence(f: &Filtration) -> Result<PersistenceDiagram> {
    let red = reduce(f)?;
    let s = f.simplices();
    let mut bars = Vec::with_capacity(red.pairs.len() + red.essential.len());
    let mut events: Vec<(usize, Bar)> = Vec::new();
    for &(c, d) in &red.pairs {
        events.push((
            c,
            Bar {
                dim: s[c].dim(),
                birth: s[c].value,
                death: s[d].value,
            },
        ));
    }
    for &c in &red.essential {
        events.push((
            c,
            Bar {
                dim: s[c].dim(),
                birth: s[c].value,
                death: f64::INFINITY,
            },
        ));
    }
    events.sort_by_key(|&(c, _)| c);
    bars.extend(events.into_iter().map(|(_, b)| b).filter(|b| b.dim <= 1));
    Ok(PersistenceDiagram { bars })
}

/// Per dimension 0 and 1: finite-bar count, total persistence, max
/// persistence (all over bars with positive length), infinite-bar count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopoFeatureVector(pub [f64; TOPO_DIM]);

pub fn vectorize(d: &PersistenceDiagram) -> TopoFeatureVector {
    let mut out = [0.0; TOPO_DIM];
    for b in &d.bars {
        if b.dim > 1 {
            continue;
        }
        let base = 4 * b.dim;
        if b.is_infinite() {
            out[base + 3] += 1.0;
        } else {
            let p = b.persistence();
            if p > 0.0 {
                out[base] += 1.0;
                out[base + 1] += p;
                out[base + 2] = out[base + 2].max(p);
            }
        }
    }
    TopoFeatureVector(out)
}

/// Raw topological features of one node's ego network.
pub fn node_features(g: &TextAttributedGraph, v: usize, r: usize) -> Result<TopoFeatureVector> {
    let ego = ego_subgraph(g, v, r)?;
    let diagram = compute_persistence(&build_filtration(&ego.graph))?;
    Ok(vectorize(&diagram))
}

/// `n × 8` raw feature matrix. Nodes are processed on the rayon pool and
/// assembled in id order.
pub fn topo_features(g: &TextAttributedGraph, r: usize) -> Result<DMatrix<f64>> {
    let rows: Vec<TopoFeatureVector> = (0..g.n())
        .into_par_iter()
        .map(|v| node_features(g, v, r))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(g.n(), TOPO_DIM, |i, j| rows[i].0[j]))
}

/// Per-column z-score with population standard deviation. Columns whose
/// spread is negligible relative to their mean become zero.
pub fn zscore_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, m.ncols());
    if n == 0 {
        return out;
    }
    for j in 0..m.ncols() {
        let col = m.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            continue;
        }
        for i in 0..n {
            out[(i, j)] = (m[(i, j)] - mean) / sd;
        }
    }
    out
}

/// Appends the normalized topological block to `r_emb`.
pub fn augment(r_emb: &DMatrix<f64>, g: &TextAttributedGraph, r: usize) -> Result<DMatrix<f64>> {
    if r_emb.nrows() != g.n() {
        return Err(Error::Shape(format!(
            "R has {} rows, graph has {} nodes",
            r_emb.nrows(),
            g.n()
        )));
    }
    let topo = zscore_columns(&topo_features(g, r)?);
    let d = r_emb.ncols();
    let mut out = DMatrix::zeros(g.n(), d + TOPO_DIM);
    out.columns_mut(0, d).copy_from(r_emb);
    out.columns_mut(d, TOPO_DIM).copy_from(&topo);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> TextAttributedGraph {
        TextAttributedGraph::structural(n, edges.iter().copied()).unwrap()
    }

    fn simplex(v: &[usize], value: f64) -> FilteredSimplex {
        FilteredSimplex {
            vertices: v.to_vec(),
            value,
        }
    }

    #[test]
    fn ego_radius_zero_is_single_vertex() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let ego = ego_subgraph(&g, 1, 0).unwrap();
        assert_eq!(ego.nodes, vec![1]);
        assert_eq!(ego.graph.num_edges(), 0);
        assert_eq!(ego.center, 0);
        assert!(ego_subgraph(&g, 3, 1).is_err());
    }

    #[test]
    fn ego_star_and_path() {
        let star = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let ego = ego_subgraph(&star, 0, 1).unwrap();
        assert_eq!(ego.nodes, vec![0, 1, 2, 3, 4]);
        assert_eq!(ego.graph.num_edges(), 4);

        let p5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let ego = ego_subgraph(&p5, 0, 2).unwrap();
        assert_eq!(ego.nodes, vec![0, 1, 2]);
        assert_eq!(ego.graph.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn k3_filtration() {
        let f = build_filtration(&graph(3, &[(0, 1), (1, 2), (0, 2)]));
        let s = f.simplices();
        assert_eq!(s.len(), 7);
        for e in &s[3..6] {
            assert_eq!(e.dim(), 1);
            assert!((e.value - 2.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(s[6].vertices, vec![0, 1, 2]);
        assert_eq!(s[6].value, s[5].value);
    }

    #[test]
    fn disjoint_neighbourhood_edge_at_one() {
        let f = build_filtration(&graph(2, &[(0, 1)]));
        assert_eq!(f.simplices()[2].value, 1.0);
    }

    #[test]
    fn single_edge_diagram() {
        let f = Filtration::sorted(vec![
            simplex(&[0], 0.0),
            simplex(&[1], 0.0),
            simplex(&[0, 1], 0.5),
        ]);
        let d = compute_persistence(&f).unwrap();
        let mut bars: Vec<_> = d.bars.iter().map(|b| (b.dim, b.birth, b.death)).collect();
        bars.sort_by(|a, b| a.2.total_cmp(&b.2));
        assert_eq!(bars, vec![(0, 0.0, 0.5), (0, 0.0, f64::INFINITY)]);
    }

    #[test]
    fn c4_has_one_essential_loop() {
        let mut s: Vec<_> = (0..4).map(|v| simplex(&[v], 0.0)).collect();
        s.push(simplex(&[0, 1], 0.1));
        s.push(simplex(&[1, 2], 0.2));
        s.push(simplex(&[2, 3], 0.3));
        s.push(simplex(&[0, 3], 0.4));
        let d = compute_persistence(&Filtration::sorted(s)).unwrap();
        let h1: Vec<_> = d.in_dim(1).collect();
        assert_eq!(h1.len(), 1);
        assert_eq!((h1[0].birth, h1[0].death), (0.4, f64::INFINITY));
        assert_eq!(d.in_dim(0).filter(|b| b.is_infinite()).count(), 1);
    }

    #[test]
    fn filled_triangle_has_zero_length_loop() {
        let f = build_filtration(&graph(3, &[(0, 1), (1, 2), (0, 2)]));
        let d = compute_persistence(&f).unwrap();
        let h1: Vec<_> = d.in_dim(1).collect();
        assert_eq!(h1.len(), 1);
        assert_eq!(h1[0].birth, h1[0].death);
        assert!((h1[0].birth - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(vectorize(&d).0[4..], [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_monotone() {
        let f = Filtration::in_order(vec![
            simplex(&[0], 0.0),
            simplex(&[0, 1], 0.5),
            simplex(&[1], 0.0),
        ]);
        assert!(matches!(
            compute_persistence(&f),
            Err(Error::NonMonotone(_))
        ));
        let f = Filtration::in_order(vec![
            simplex(&[0], 0.6),
            simplex(&[1], 0.0),
            simplex(&[0, 1], 0.5),
        ]);
        assert!(matches!(
            compute_persistence(&f),
            Err(Error::NonMonotone(_))
        ));
    }

    #[test]
    fn vectorize_examples() {
        assert_eq!(vectorize(&PersistenceDiagram::default()).0, [0.0; 8]);
        let d = PersistenceDiagram {
            bars: vec![Bar {
                dim: 0,
                birth: 0.0,
                death: f64::INFINITY,
            }],
        };
        assert_eq!(vectorize(&d).0, [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let d = PersistenceDiagram {
            bars: vec![
                Bar {
                    dim: 0,
                    birth: 0.0,
                    death: 0.5,
                },
                Bar {
                    dim: 1,
                    birth: 0.4,
                    death: f64::INFINITY,
                },
            ],
        };
        assert_eq!(vectorize(&d).0, [1.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn augment_shapes_and_degenerate_cases() {
        let g = graph(1, &[]);
        let out = augment(&DMatrix::from_element(1, 3, 2.0), &g, 2).unwrap();
        assert_eq!(out.shape(), (1, 11));
        assert!(out.columns(3, 8).iter().all(|&v| v == 0.0));

        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (0, 2), (3, 4)]);
        let r = DMatrix::from_fn(5, 2, |i, j| (i * 2 + j) as f64);
        let out = augment(&r, &g, 0).unwrap();
        assert_eq!(out.columns(0, 2), r.columns(0, 2));
        for i in 1..5 {
            assert_eq!(out.row(i).columns(2, 8), out.row(0).columns(2, 8));
        }
        assert!(augment(&r, &graph(4, &[]), 1).is_err());
    }

    #[test]
    fn diagram_csv() {
        let d = PersistenceDiagram {
            bars: vec![
                Bar {
                    dim: 0,
                    birth: 0.0,
                    death: 0.5,
                },
                Bar {
                    dim: 1,
                    birth: 0.25,
                    death: f64::INFINITY,
                },
            ],
        };
        assert_eq!(d.to_csv(), "dim,birth,death\n0,0,0.5\n1,0.25,inf\n");
    }
}
