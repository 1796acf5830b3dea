//! End-to-end experiment: build every selected representation family, run
//! every selected attack on each, and report AUC and precision@k.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{self, MembershipSplit};
use crate::config::{AttackKind, DecoderFeatures, ExperimentConfig, Family, GraphSource};
use crate::error::{Error, Result};
use crate::factorization::{self, FactorModel};
use crate::graph::{self, AffinityMatrix, TextAttributedGraph};
use crate::linalg;
use crate::metrics;
use crate::persistence;
use crate::simplicial::{self, SimplicialComplex, SnnWeights};
use crate::synth;
use crate::text::{self, TextFeatureMatrix};

/// Graph plus optional node class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: TextAttributedGraph,
    pub labels: Option<Vec<usize>>,
    pub self_loops: usize,
}

fn load_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = vec![None; n];
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            msg,
        };
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(format!("expected `id<TAB>label`, got {line:?}")))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad node id {id:?}")))?;
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad label {label:?}")))?;
        if id >= n {
            return Err(parse_err(format!("node {id} out of range for {n} nodes")));
        }
        labels[id] = Some(label);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| {
            l.ok_or_else(|| Error::invalid(format!("{}: node {v} has no label", path.display())))
        })
        .collect()
}

pub fn labels_text(labels: &[usize]) -> String {
    let mut out = String::new();
    for (v, l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{v}\t{l}");
    }
    out
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.source {
        GraphSource::Files {
            edges,
            docs,
            labels,
        } => {
            let loaded =
                graph::load_edge_list(edges, docs).map_err(|e| e.in_module("graph-core"))?;
            let labels = labels
                .as_deref()
                .map(|p| load_labels(p, loaded.graph.n()))
                .transpose()
                .map_err(|e| e.in_module("graph-core"))?;
            Ok(Dataset {
                graph: loaded.graph,
                labels,
                self_loops: loaded.self_loops,
            })
        }
        GraphSource::Planted(spec) => {
            let planted =
                synth::generate_planted(spec, cfg.seed).map_err(|e| e.in_module("eval-cli"))?;
            Ok(Dataset {
                graph: planted.graph,
                labels: Some(planted.labels),
                self_loops: 0,
            })
        }
    }
}

/// Stage-one outputs shared by every family.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub text: TextFeatureMatrix,
    pub affinity: AffinityMatrix,
    pub model: FactorModel,
    pub mf: DMatrix<f64>,
}

pub fn embed_stage(cfg: &ExperimentConfig, g: &TextAttributedGraph) -> Result<Embedding> {
    let tfidf = text::build_tfidf(g.docs());
    let text = text::reduce_to_t(&tfidf, cfg.text_dim, cfg.seed);
    let affinity = graph::affinity(&graph::transition_matrix(g));
    let model = factorization::factorize(affinity.matrix(), &text.t, &cfg.factorization)
        .map_err(|e| e.in_module("factorization"))?;
    let mf = factorization::embed(&model, &text.t, cfg.normalize_embeddings)
        .map_err(|e| e.in_module("factorization"))?;
    Ok(Embedding {
        text,
        affinity,
        model,
        mf,
    })
}

pub fn topo_stage(
    cfg: &ExperimentConfig,
    g: &TextAttributedGraph,
    mf: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    persistence::augment(mf, g, cfg.radius).map_err(|e| e.in_module("persistence"))
}

pub fn snn_stage(
    cfg: &ExperimentConfig,
    g: &TextAttributedGraph,
    input: &DMatrix<f64>,
) -> Result<(SimplicialComplex, DMatrix<f64>)> {
    let cx = simplicial::clique_lift(g, 2);
    let d = input.ncols();
    let weights = SnnWeights::seeded(d, cfg.snn_hidden.unwrap_or(d), cfg.snn_layers, cfg.seed);
    let out =
        simplicial::snn_forward(&cx, input, &weights).map_err(|e| e.in_module("simplicial"))?;
    Ok((cx, out))
}

/// Every representation family requested by `cfg`, plus the shared
/// intermediate results.
#[derive(Debug, Clone)]
pub struct Representations {
    pub embedding: Embedding,
    pub families: BTreeMap<Family, DMatrix<f64>>,
}

pub fn build_representations(
    cfg: &ExperimentConfig,
    g: &TextAttributedGraph,
) -> Result<Representations> {
    let embedding = embed_stage(cfg, g)?;
    let mut families = BTreeMap::new();
    let need_topo = cfg
        .families
        .iter()
        .any(|f| matches!(f, Family::MfTopo | Family::Snn));
    if cfg.families.contains(&Family::Mf) {
        families.insert(Family::Mf, embedding.mf.clone());
    }
    if need_topo {
        let topo = topo_stage(cfg, g, &embedding.mf)?;
        if cfg.families.contains(&Family::Snn) {
            let (_, snn) = snn_stage(cfg, g, &topo)?;
            families.insert(Family::Snn, snn);
        }
        if cfg.families.contains(&Family::MfTopo) {
            families.insert(Family::MfTopo, topo);
        }
    }
    Ok(Representations {
        embedding,
        families,
    })
}

/// One attack on one representation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: AttackKind,
    pub representation_family: Family,
    pub auc: f64,
    pub precision_at_k: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub version: String,
}

impl Environment {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<AttackReport>,
    pub environment: Environment,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("representation_family,attack,auc,precision_at_k\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.representation_family, r.attack, r.auc, r.precision_at_k
            );
        }
        out
    }

    pub fn get(&self, family: Family, attack: AttackKind) -> Option<&AttackReport> {
        self.rows
            .iter()
            .find(|r| r.representation_family == family && r.attack == attack)
    }
}

/// Scales `m` so its largest magnitude is `target` (zero matrices unchanged).
fn scale_to(m: &DMatrix<f64>, target: f64) -> DMatrix<f64> {
    let max = m.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if max > 0.0 {
        m * (target / max)
    } else {
        m.clone()
    }
}

/// Seeded split of all nodes into four disjoint quarters: target members,
/// target non-members, shadow members, shadow non-members.
pub fn membership_splits(n: usize, seed: u64) -> (MembershipSplit, MembershipSplit) {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut linalg::rng(seed, 0x5a17));
    let q = n / 4;
    let part = |i: usize| {
        let mut v = nodes[i * q..(i + 1) * q].to_vec();
        v.sort_unstable();
        v
    };
    (
        MembershipSplit {
            members: part(0),
            nonmembers: part(1),
        },
        MembershipSplit {
            members: part(2),
            nonmembers: part(3),
        },
    )
}

fn run_cell(
    cfg: &ExperimentConfig,
    data: &Dataset,
    reps: &Representations,
    family: Family,
    attack: AttackKind,
) -> Result<AttackReport> {
    let g = &data.graph;
    let r = &reps.families[&family];
    let mut loss_trace = None;
    let (auc, precision_at_k) = match attack {
        AttackKind::Distance => {
            let cand = attacks::candidate_pairs(g, cfg.max_all_pairs, cfg.seed);
            let res = attacks::distance_edge_attack(r, &cand.pairs)?;
            edge_metrics(&res.scores, &cand.labels)?
        }
        AttackKind::Decoder => {
            let cand = attacks::candidate_pairs(g, cfg.max_all_pairs, cfg.seed);
            let x = match cfg.decoder_features {
                DecoderFeatures::Known => scale_to(&reps.embedding.text.t.transpose(), 1.0),
                DecoderFeatures::Identity => DMatrix::identity(g.n(), g.n()),
            };
            // tanh outputs live in (−1, 1); the adversary rescales the
            // released matrix into that range.
            let target = scale_to(r, 0.9);
            let state = attacks::decoder_gra(&target, &x, &cfg.decoder)?;
            let scores = state.pair_scores(&cand.pairs);
            loss_trace = Some(state.loss_trace);
            edge_metrics(&scores, &cand.labels)?
        }
        AttackKind::Membership => {
            let labels = data.labels.as_ref().ok_or_else(|| {
                Error::Config("membership attack needs node labels ([graph-core] labels)".into())
            })?;
            let (target_split, shadow) = membership_splits(g.n(), cfg.seed);
            let target = attacks::train_softmax(r, labels, &target_split.members, &cfg.train)?;
            let report = attacks::membership_inference(
                &target,
                r,
                labels,
                &target_split,
                &shadow,
                &cfg.train,
            )?;
            let truth: Vec<bool> = report.records.iter().map(|rec| rec.member).collect();
            let p = metrics::precision_at_k(&report.scores, &truth, target_split.members.len())?;
            (report.auc, p)
        }
    };
    Ok(AttackReport {
        attack,
        representation_family: family,
        auc,
        precision_at_k,
        n: g.n(),
        seed: cfg.seed,
        loss_trace,
    })
}

/// AUC, and precision@k with `k` equal to the number of true edges.
fn edge_metrics(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    let k = labels.iter().filter(|&&l| l).count();
    let auc = metrics::auc(scores, labels)?;
    let p = metrics::precision_at_k(scores, labels, k)?;
    Ok((auc, p))
}

/// Runs every selected attack on every selected family of an already-built
/// representation set. Cells run on the rayon pool; rows are ordered by
/// family then attack as listed in `cfg`.
pub fn run_attacks(
    cfg: &ExperimentConfig,
    data: &Dataset,
    reps: &Representations,
) -> Result<Vec<AttackReport>> {
    let cells: Vec<(Family, AttackKind)> = cfg
        .families
        .iter()
        .flat_map(|&f| cfg.attacks.iter().map(move |&a| (f, a)))
        .collect();
    cells
        .par_iter()
        .map(|&(f, a)| run_cell(cfg, data, reps, f, a).map_err(|e| e.in_module("attacks")))
        .collect()
}

pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let reps = build_representations(cfg, &data.graph)?;
    let rows = run_attacks(cfg, &data, &reps)?;
    Ok(ComparisonReport {
        rows,
        environment: Environment::new(cfg.seed),
    })
}

/// Mean and standard deviation of one family×attack cell across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub representation_family: Family,
    pub attack: AttackKind,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub precision_at_k_mean: f64,
    pub precision_at_k_std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seeds: Vec<u64>,
    pub cells: Vec<BenchCell>,
    pub runs: Vec<ComparisonReport>,
    pub environment: Environment,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench report serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("representation_family,attack,runs,auc_mean,auc_std,precision_at_k_mean,precision_at_k_std\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.representation_family,
                c.attack,
                c.runs,
                c.auc_mean,
                c.auc_std,
                c.precision_at_k_mean,
                c.precision_at_k_std
            );
        }
        out
    }

    pub fn cell(&self, family: Family, attack: AttackKind) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.representation_family == family && c.attack == attack)
    }
}

/// Runs the pipeline for `cfg.bench_seeds` consecutive seeds starting at
/// `cfg.seed` and aggregates each cell.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.bench_seeds as u64).map(|i| cfg.seed + i).collect();
    let runs: Vec<ComparisonReport> = seeds
        .iter()
        .map(|&s| run_pipeline(&cfg.with_seed(s)))
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for &f in &cfg.families {
        for &a in &cfg.attacks {
            let rows: Vec<&AttackReport> = runs.iter().filter_map(|r| r.get(f, a)).collect();
            let aucs: Vec<f64> = rows.iter().map(|r| r.auc).collect();
            let precs: Vec<f64> = rows.iter().map(|r| r.precision_at_k).collect();
            let (auc_mean, auc_std) = metrics::mean_std(&aucs);
            let (p_mean, p_std) = metrics::mean_std(&precs);
            cells.push(BenchCell {
                representation_family: f,
                attack: a,
                auc_mean,
                auc_std,
                precision_at_k_mean: p_mean,
                precision_at_k_std: p_std,
                runs: rows.len(),
            });
        }
    }
    Ok(BenchReport {
        seeds,
        cells,
        runs,
        environment: Environment::new(cfg.seed),
    })
}
