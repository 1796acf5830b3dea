//! Graph ingestion and the affinity matrix consumed by the factorization.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Undirected simple graph whose nodes carry a text document.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted lexicographically.
/// Adjacency lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextAttributedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    docs: Vec<String>,
}

impl TextAttributedGraph {
    /// Builds a graph from an arbitrary edge iterator. Duplicate and reversed
    /// edges are merged. Self-loops are dropped and counted in the return value.
    ///
    /// `docs` shorter than `n` is padded with empty documents.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        mut docs: Vec<String>,
    ) -> Result<(Self, usize)> {
        let mut set = BTreeSet::new();
        let mut self_loops = 0;
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                self_loops += 1;
                continue;
            }
            set.insert((u.min(v), u.max(v)));
        }
        if docs.len() > n {
            return Err(Error::invalid(format!(
                "{} documents for {n} nodes",
                docs.len()
            )));
        }
        docs.resize(n, String::new());

        let edges: Vec<_> = set.into_iter().collect();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok((
            Self {
                n,
                edges,
                adj,
                docs,
            },
            self_loops,
        ))
    }

    /// Graph with no documents attached.
    pub fn structural(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges(n, edges, Vec::new()).map(|(g, _)| g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Induced subgraph on `nodes` (given in ascending order), relabeled
    /// `0..nodes.len()` in that order. Documents are carried over.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let local = |g: usize| nodes.binary_search(&g).ok();
        let edges = self.edges.iter().filter_map(|&(u, v)| {
            let a = local(u)?;
            let b = local(v)?;
            Some((a, b))
        });
        let docs = nodes.iter().map(|&v| self.docs[v].clone()).collect();
        Self::from_edges(nodes.len(), edges, docs)
            .map(|(g, _)| g)
            .expect("induced subgraph is always valid")
    }

    /// Applies a node relabeling: node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut docs = vec![String::new(); self.n];
        for (v, d) in self.docs.iter().enumerate() {
            docs[perm[v]] = d.clone();
        }
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        Self::from_edges(self.n, edges, docs)
            .map(|(g, _)| g)
            .expect("permutation of a valid graph")
    }

    /// Edge list in the on-disk format, one `u\tv` line per edge.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u}\t{v}");
        }
        out
    }

    /// Documents in the on-disk format. Every node gets a line so that the
    /// node count survives a round trip even for trailing isolated nodes.
    /// Tabs and newlines inside a document are folded to spaces.
    pub fn docs_text(&self) -> String {
        let mut out = String::new();
        for (v, d) in self.docs.iter().enumerate() {
            let clean: String = d
                .chars()
                .map(|c| {
                    if c == '\n' || c == '\r' || c == '\t' {
                        ' '
                    } else {
                        c
                    }
                })
                .collect();
            let _ = writeln!(out, "{v}\t{clean}");
        }
        out
    }

    pub fn write(&self, edge_path: &Path, docs_path: &Path) -> Result<()> {
        fs::write(edge_path, self.edge_list_text()).map_err(|e| Error::io(edge_path, e))?;
        fs::write(docs_path, self.docs_text()).map_err(|e| Error::io(docs_path, e))
    }
}

/// Result of [`load_edge_list`].
#[derive(Debug, Clone)]
pub struct Loaded {
    pub graph: TextAttributedGraph,
    pub self_loops: usize,
}

fn parse_id(field: &str, path: &Path, line: usize) -> Result<usize> {
    let field = field.trim();
    let parsed: i64 = field.parse().map_err(|_| Error::Parse {
        path: path.to_owned(),
        line,
        msg: format!("cannot parse node id {field:?}"),
    })?;
    if parsed < 0 {
        return Err(Error::Parse {
            path: path.to_owned(),
            line,
            msg: format!("negative node id {parsed}"),
        });
    }
    Ok(parsed as usize)
}

/// Parses edge-list and document text already read into memory. `edge_path`
/// and `docs_path` are used only in error messages.
pub fn parse_edge_list(
    edges_text: &str,
    edge_path: &Path,
    docs_text: &str,
    docs_path: &Path,
) -> Result<Loaded> {
    let mut max_id: Option<usize> = None;
    let mut bump = |id: usize| max_id = Some(max_id.map_or(id, |m| m.max(id)));

    let mut raw_edges = Vec::new();
    for (i, line) in edges_text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: edge_path.to_owned(),
                line: lineno,
                msg: format!("expected `u<TAB>v`, got {line:?}"),
            });
        }
        let u = parse_id(fields[0], edge_path, lineno)?;
        let v = parse_id(fields[1], edge_path, lineno)?;
        bump(u);
        bump(v);
        raw_edges.push((u, v));
    }

    let mut raw_docs = Vec::new();
    for (i, line) in docs_text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line.split_once('\t').unwrap_or((line, ""));
        let id = parse_id(id, docs_path, lineno)?;
        bump(id);
        raw_docs.push((id, text.to_owned()));
    }

    let n = max_id.map_or(0, |m| m + 1);
    let mut docs = vec![String::new(); n];
    for (id, text) in raw_docs {
        docs[id] = text;
    }
    let (graph, self_loops) = TextAttributedGraph::from_edges(n, raw_edges, docs)?;
    if self_loops > 0 {
        log::warn!(
            "{}: dropped {self_loops} self-loop{}",
            edge_path.display(),
            if self_loops == 1 { "" } else { "s" }
        );
    }
    Ok(Loaded { graph, self_loops })
}

/// Loads a tab-separated edge list plus a `id<TAB>text` document file.
///
/// The node count is one more than the largest id seen in either file.
pub fn load_edge_list(edge_path: &Path, docs_path: &Path) -> Result<Loaded> {
    let edges = fs::read_to_string(edge_path).map_err(|e| Error::io(edge_path, e))?;
    let docs = fs::read_to_string(docs_path).map_err(|e| Error::io(docs_path, e))?;
    parse_edge_list(&edges, edge_path, &docs, docs_path)
}

/// Random-walk transition matrix `D⁻¹A`. Rows of isolated nodes are zero.
pub fn transition_matrix(g: &TextAttributedGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut s = DMatrix::zeros(n, n);
    for v in 0..n {
        let deg = g.degree(v);
        if deg == 0 {
            continue;
        }
        let w = 1.0 / deg as f64;
        for &u in g.neighbors(v) {
            s[(v, u)] = w;
        }
    }
    s
}

/// Node-proximity matrix factorized by the embedding stage.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix(pub DMatrix<f64>);

impl AffinityMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// First- plus second-order proximity, `M = (S + S²)/2`.
pub fn affinity(s: &DMatrix<f64>) -> AffinityMatrix {
    let s2 = s * s;
    AffinityMatrix((s + s2) * 0.5)
}
