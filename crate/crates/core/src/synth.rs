//! Planted-partition benchmark graphs with community vocabularies.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::TextAttributedGraph;
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub n: usize,
    pub communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Distinct words owned by each community.
    pub vocab_per_community: usize,
    /// Words shared by all communities.
    pub noise_vocab: usize,
    /// Words per document.
    pub doc_len: usize,
    /// Probability that a document word is drawn from the shared noise words.
    pub noise_rate: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            n: 60,
            communities: 2,
            p_in: 0.3,
            p_out: 0.02,
            vocab_per_community: 30,
            noise_vocab: 20,
            doc_len: 20,
            noise_rate: 0.3,
        }
    }
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("noise_rate", self.noise_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        if self.communities == 0 {
            return Err(Error::Config("communities must be >= 1".into()));
        }
        if self.n < self.communities {
            return Err(Error::Config(
                "n must be at least the number of communities".into(),
            ));
        }
        if self.vocab_per_community == 0 && self.noise_rate < 1.0 && self.doc_len > 0 {
            return Err(Error::Config("vocab_per_community must be >= 1".into()));
        }
        if self.noise_vocab == 0 && self.noise_rate > 0.0 && self.doc_len > 0 {
            return Err(Error::Config(
                "noise_vocab must be >= 1 when noise_rate > 0".into(),
            ));
        }
        Ok(())
    }

    /// Community of node `v`: contiguous, near-equal blocks.
    pub fn community_of(&self, v: usize) -> usize {
        v * self.communities / self.n
    }
}

/// Graph plus each node's community.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub graph: TextAttributedGraph,
    pub labels: Vec<usize>,
}

/// Draws one edge per pair in lexicographic order, then one document per
/// node in id order, all from a single seeded stream.
pub fn generate_planted(spec: &PlantedSpec, seed: u64) -> Result<Planted> {
    spec.validate()?;
    let n = spec.n;
    let labels: Vec<usize> = (0..n).map(|v| spec.community_of(v)).collect();
    let mut r = linalg::rng(seed, 0x91a7);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] {
                spec.p_in
            } else {
                spec.p_out
            };
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let docs = (0..n)
        .map(|v| {
            (0..spec.doc_len)
                .map(|_| {
                    if r.random::<f64>() < spec.noise_rate {
                        format!("noise{}", r.random_range(0..spec.noise_vocab))
                    } else {
                        format!(
                            "c{}w{}",
                            labels[v],
                            r.random_range(0..spec.vocab_per_community)
                        )
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let (graph, _) = TextAttributedGraph::from_edges(n, edges, docs)?;
    Ok(Planted { graph, labels })
}
