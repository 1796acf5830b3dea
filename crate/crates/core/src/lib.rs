//! Text-attributed node representations built from a three-matrix
//! factorization, enriched with local persistent homology and simplicial
//! (Hodge-Laplacian) propagation, together with the attack suite used to
//! measure how much graph structure those representations leak.
//!
//! The pipeline is:
//!
//! 1. [`graph`]: ingest a text-attributed graph and build the affinity
//!    matrix `M = (S + S²)/2` from the random-walk transition matrix `S`.
//! 2. [`text`]: tf-idf term-document matrix, reduced to `t` dimensions.
//! 3. [`factorization`]: `M ≈ WᵀHT` by alternating exact ridge updates;
//!    nodes are embedded as `[W | HT]ᵀ` (the `MF` family).
//! 4. [`persistence`]: persistent homology of each node's ego network,
//!    vectorized and appended (the `MF+TOPO` family).
//! 5. [`simplicial`]: clique lift, boundary operators, Hodge Laplacians and
//!    a forward-only simplicial network (the `SNN` family).
//! 6. [`attacks`]: distance-based and decoder-based graph reconstruction,
//!    and shadow-model membership inference.
//! 7. [`pipeline`]: runs every family against every attack and reports
//!    AUC and precision@k.

pub mod attacks;
pub mod config;
pub mod error;
pub mod factorization;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod persistence;
pub mod pipeline;
pub mod simplicial;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use graph::TextAttributedGraph;
