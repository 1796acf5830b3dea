//! Attacks against released node representations.
//!
//! * [`distance_edge_attack`]: scores node pairs by negative embedding
//!   distance and splits them with 1-D 2-means.
//! * [`decoder_gra`]: fits a soft adjacency so that a one-layer graph decoder
//!   reproduces the released representations, then reads edges off it.
//! * [`membership_inference`]: shadow-model attack on a softmax classifier
//!   trained over the representations.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::TextAttributedGraph;
use crate::linalg;
use crate::metrics;

/// Iteration count of the 1-D 2-means threshold search.
pub const TWO_MEANS_ITERS: usize = 100;
/// Halvings allowed per backtracking line search.
pub const MAX_HALVINGS: usize = 20;

/// Node pairs `(u, v)` with `u < v` and whether each is a true edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePairs {
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<bool>,
}

impl CandidatePairs {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// All pairs when `n <= max_all_pairs`; otherwise every edge plus as many
/// seeded-random non-edges (or all of them, if fewer exist). Output is
/// sorted lexicographically.
pub fn candidate_pairs(g: &TextAttributedGraph, max_all_pairs: usize, seed: u64) -> CandidatePairs {
    let n = g.n();
    let pairs: Vec<(usize, usize)> = if n <= max_all_pairs {
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect()
    } else {
        let total_non_edges = n * (n - 1) / 2 - g.num_edges();
        let want = g.num_edges().min(total_non_edges);
        let mut set: BTreeSet<(usize, usize)> = g.edges().iter().copied().collect();
        let mut r = linalg::rng(seed, 0xca4d);
        let mut added = 0;
        while added < want {
            let u = r.random_range(0..n);
            let v = r.random_range(0..n);
            if u == v || g.has_edge(u, v) {
                continue;
            }
            if set.insert((u.min(v), u.max(v))) {
                added += 1;
            }
        }
        set.into_iter().collect()
    };
    let labels = pairs.iter().map(|&(u, v)| g.has_edge(u, v)).collect();
    CandidatePairs { pairs, labels }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAttackResult {
    pub pairs: Vec<(usize, usize)>,
    /// Higher means more likely an edge.
    pub scores: Vec<f64>,
    pub predictions: Vec<bool>,
    pub threshold: f64,
}

/// Threshold separating the two clusters of 1-D 2-means on `scores`.
///
/// Centers start at the minimum and maximum; a point equidistant from both
/// goes to the lower cluster. The threshold is the midpoint of the final
/// centers. When the upper cluster ends up empty (all scores equal), the
/// threshold is placed just above the largest score so that every pair is
/// predicted a non-edge.
pub fn two_means_threshold(scores: &[f64]) -> f64 {
    let lo0 = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi0 = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo0, hi0);
    let mut upper_nonempty = false;
    for _ in 0..TWO_MEANS_ITERS {
        let (mut sl, mut nl, mut sh, mut nh) = (0.0, 0usize, 0.0, 0usize);
        for &s in scores {
            if (s - hi).abs() < (s - lo).abs() {
                sh += s;
                nh += 1;
            } else {
                sl += s;
                nl += 1;
            }
        }
        let new_lo = if nl > 0 { sl / nl as f64 } else { lo };
        let new_hi = if nh > 0 { sh / nh as f64 } else { hi };
        upper_nonempty = nh > 0;
        if new_lo == lo && new_hi == hi {
            break;
        }
        lo = new_lo;
        hi = new_hi;
    }
    if upper_nonempty {
        0.5 * (lo + hi)
    } else {
        hi0.next_up()
    }
}

/// Scores each pair by `−‖R[u] − R[v]‖₂`.
pub fn distance_edge_attack(
    r: &DMatrix<f64>,
    pairs: &[(usize, usize)],
) -> Result<EdgeAttackResult> {
    if pairs.len() < 2 {
        return Err(Error::invalid(
            "distance attack needs at least 2 candidate pairs",
        ));
    }
    let n = r.nrows();
    let mut seen = BTreeSet::new();
    for &(u, v) in pairs {
        if u >= n || v >= n {
            return Err(Error::invalid(format!(
                "pair ({u}, {v}) out of range for {n} rows"
            )));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::invalid(format!("duplicate pair ({u}, {v})")));
        }
    }
    let scores: Vec<f64> = pairs
        .iter()
        .map(|&(u, v)| -(r.row(u) - r.row(v)).norm())
        .collect();
    let threshold = two_means_threshold(&scores);
    let predictions = scores.iter().map(|&s| s >= threshold).collect();
    Ok(EdgeAttackResult {
        pairs: pairs.to_vec(),
        scores,
        predictions,
        threshold,
    })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `σ(Z)` off the diagonal, zero on it.
pub fn soft_adjacency(z: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| {
        if i == j {
            0.0
        } else {
            sigmoid(z[(i, j)])
        }
    })
}

/// Row-normalized `σ(Z) + I`.
fn propagation(z: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let mut a = soft_adjacency(z);
    a.fill_diagonal(1.0);
    let sums = DVector::from_fn(a.nrows(), |i, _| a.row(i).sum());
    for i in 0..a.nrows() {
        let inv = 1.0 / sums[i];
        a.row_mut(i).scale_mut(inv);
    }
    (a, sums)
}

/// `tanh(rownorm(σ(Z) + I) · X · Θ)`.
pub fn decoder_forward(z: &DMatrix<f64>, x: &DMatrix<f64>, theta: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, _) = propagation(z);
    (p * x * theta).map(f64::tanh)
}

pub fn decoder_loss(
    z: &DMatrix<f64>,
    x: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> f64 {
    linalg::frobenius_sq(&(decoder_forward(z, x, theta) - target))
}

/// Analytic gradients of [`decoder_loss`] with respect to every entry of
/// `Z` (diagonal entries have zero gradient) and of `Θ`.
pub fn decoder_gradients(
    z: &DMatrix<f64>,
    x: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = z.nrows();
    let (p, sums) = propagation(z);
    let xt = x * theta;
    let y = (&p * &xt).map(f64::tanh);
    let g_pre = (&y - target).zip_map(&y, |d, yv| 2.0 * d * (1.0 - yv * yv));
    let g_theta = (&p * x).transpose() * &g_pre;
    let g_prop = &g_pre * xt.transpose();

    let mut g_z = DMatrix::zeros(n, n);
    for i in 0..n {
        let dot: f64 = (0..n).map(|k| g_prop[(i, k)] * p[(i, k)]).sum();
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = sigmoid(z[(i, j)]);
            g_z[(i, j)] = (g_prop[(i, j)] - dot) / sums[i] * s * (1.0 - s);
        }
    }
    (g_z, g_theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            lr: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    /// Symmetric logits; the diagonal is held at zero and never used.
    pub z: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    /// Loss at initialization followed by one value per step.
    pub loss_trace: Vec<f64>,
}

impl DecoderState {
    /// `σ(Z)` with a zero diagonal.
    pub fn edge_probabilities(&self) -> DMatrix<f64> {
        soft_adjacency(&self.z)
    }

    pub fn pair_scores(&self, pairs: &[(usize, usize)]) -> Vec<f64> {
        pairs
            .iter()
            .map(|&(u, v)| sigmoid(self.z[(u, v)]))
            .collect()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = 0.0;
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Gradient step on one parameter block with backtracking. Returns the new
/// loss; the block is left unchanged if no step within `MAX_HALVINGS`
/// halvings reduces the loss.
fn backtrack(
    param: &mut DMatrix<f64>,
    grad: &DMatrix<f64>,
    lr: f64,
    current: f64,
    post: impl Fn(&mut DMatrix<f64>),
    loss: impl Fn(&DMatrix<f64>) -> f64,
) -> f64 {
    let mut step = lr;
    for _ in 0..=MAX_HALVINGS {
        let mut cand = &*param - grad * step;
        post(&mut cand);
        let l = loss(&cand);
        if l <= current {
            *param = cand;
            return l;
        }
        step *= 0.5;
    }
    current
}

/// Reconstructs a soft adjacency from released representations by
/// alternating backtracking gradient descent on `Θ` and `Z`.
///
/// `x` is the adversary's node-feature matrix (pass the identity when the
/// adversary has no features).
pub fn decoder_gra(
    target: &DMatrix<f64>,
    x: &DMatrix<f64>,
    cfg: &DecoderConfig,
) -> Result<DecoderState> {
    let n = target.nrows();
    if n < 2 {
        return Err(Error::invalid("decoder attack needs at least 2 nodes"));
    }
    if x.nrows() != n {
        return Err(Error::Shape(format!(
            "X has {} rows, target has {n}",
            x.nrows()
        )));
    }
    if cfg.lr.is_nan() || cfg.lr <= 0.0 {
        return Err(Error::Config("decoder lr must be > 0".into()));
    }
    let mut r = linalg::rng(cfg.seed, 0xdec0);
    let mut z = linalg::uniform_matrix(n, n, -0.1, 0.1, &mut r);
    symmetrize(&mut z);
    let (f, d) = (x.ncols(), target.ncols());
    let bound = (6.0 / (f + d).max(1) as f64).sqrt();
    let mut theta = linalg::uniform_matrix(f, d, -bound, bound, &mut r);

    let mut loss = decoder_loss(&z, x, &theta, target);
    let mut trace = vec![loss];
    for _ in 0..cfg.steps {
        let (_, g_theta) = decoder_gradients(&z, x, &theta, target);
        loss = backtrack(
            &mut theta,
            &g_theta,
            cfg.lr,
            loss,
            |_| {},
            |th| decoder_loss(&z, x, th, target),
        );

        let (g_z, _) = decoder_gradients(&z, x, &theta, target);
        let g_sym = (&g_z + g_z.transpose()) * 0.5;
        loss = backtrack(&mut z, &g_sym, cfg.lr, loss, symmetrize, |zz| {
            decoder_loss(zz, x, &theta, target)
        });
        trace.push(loss);
    }
    Ok(DecoderState {
        z,
        theta,
        loss_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            lr: 0.5,
            seed: 0,
        }
    }
}

/// Single linear layer with softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    /// `d × C`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl SoftmaxClassifier {
    /// Zero weights: every input gets probability `1/C` for each class.
    pub fn uniform(d: usize, classes: usize) -> Self {
        Self {
            weights: DMatrix::zeros(d, classes),
            bias: DVector::zeros(classes),
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.ncols()
    }

    /// Row-wise class probabilities for the rows of `x`.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut logits = x * &self.weights;
        for mut row in logits.row_iter_mut() {
            row += self.bias.transpose();
            let max = row.max();
            row.apply(|v| *v = (*v - max).exp());
            let sum = row.sum();
            row /= sum;
        }
        logits
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        let p = self.predict_proba(x);
        p.row_iter()
            .map(|row| {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

fn select_rows(m: &DMatrix<f64>, ids: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(ids.len(), m.ncols(), |i, j| m[(ids[i], j)])
}

/// Full-batch gradient descent on mean cross-entropy over the rows `ids`.
/// The class count is `1 + max(labels)` over all nodes.
pub fn train_softmax(
    r: &DMatrix<f64>,
    labels: &[usize],
    ids: &[usize],
    cfg: &TrainConfig,
) -> Result<SoftmaxClassifier> {
    if labels.len() != r.nrows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            r.nrows()
        )));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= r.nrows()) {
        return Err(Error::invalid(format!("training id {bad} out of range")));
    }
    let present: BTreeSet<usize> = ids.iter().map(|&i| labels[i]).collect();
    if present.len() < 2 {
        return Err(Error::invalid(
            "training subset must contain at least 2 classes",
        ));
    }
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let d = r.ncols();
    let mut rng = linalg::rng(cfg.seed, 0x50f7);
    let mut clf = SoftmaxClassifier {
        weights: linalg::uniform_matrix(d, classes, -0.01, 0.01, &mut rng),
        bias: DVector::zeros(classes),
    };
    let x = select_rows(r, ids);
    let m = ids.len() as f64;
    for _ in 0..cfg.epochs {
        let mut g = clf.predict_proba(&x);
        for (row, &id) in ids.iter().enumerate() {
            g[(row, labels[id])] -= 1.0;
        }
        g /= m;
        let gw = x.transpose() * &g;
        let gb = DVector::from_fn(classes, |c, _| g.column(c).sum());
        clf.weights -= gw * cfg.lr;
        clf.bias -= gb * cfg.lr;
    }
    Ok(clf)
}

/// Attack features of one node: its three largest class probabilities
/// (descending, zero-padded) and the cross-entropy of its true label.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipRecord {
    pub node: usize,
    pub features: [f64; 4],
    pub member: bool,
}

pub fn membership_features(probs: &[f64], true_label: usize) -> [f64; 4] {
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut f = [0.0; 4];
    for (slot, p) in f.iter_mut().zip(sorted.iter().take(3)) {
        *slot = *p;
    }
    f[3] = -probs[true_label].max(f64::MIN_POSITIVE).ln();
    f
}

fn records(
    clf: &SoftmaxClassifier,
    r: &DMatrix<f64>,
    labels: &[usize],
    members: &[usize],
    nonmembers: &[usize],
) -> Vec<MembershipRecord> {
    let tagged: Vec<(usize, bool)> = members
        .iter()
        .map(|&v| (v, true))
        .chain(nonmembers.iter().map(|&v| (v, false)))
        .collect();
    let ids: Vec<usize> = tagged.iter().map(|&(v, _)| v).collect();
    let probs = clf.predict_proba(&select_rows(r, &ids));
    tagged
        .iter()
        .enumerate()
        .map(|(i, &(node, member))| {
            let row: Vec<f64> = probs.row(i).iter().copied().collect();
            MembershipRecord {
                node,
                features: membership_features(&row, labels[node]),
                member,
            }
        })
        .collect()
}

/// Logistic-regression attack model over standardized record features.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    mean: [f64; 4],
    scale: [f64; 4],
    weights: [f64; 4],
    bias: f64,
}

impl AttackModel {
    const EPOCHS: usize = 1000;
    const LR: f64 = 0.5;

    pub fn fit(records: &[MembershipRecord]) -> Self {
        let m = records.len() as f64;
        let mut mean = [0.0; 4];
        let mut scale = [1.0; 4];
        for j in 0..4 {
            mean[j] = records.iter().map(|r| r.features[j]).sum::<f64>() / m;
            let var = records
                .iter()
                .map(|r| (r.features[j] - mean[j]).powi(2))
                .sum::<f64>()
                / m;
            if var.sqrt() > 1e-12 {
                scale[j] = var.sqrt();
            }
        }
        let mut model = Self {
            mean,
            scale,
            weights: [0.0; 4],
            bias: 0.0,
        };
        let xs: Vec<[f64; 4]> = records
            .iter()
            .map(|r| model.standardize(&r.features))
            .collect();
        for _ in 0..Self::EPOCHS {
            let mut gw = [0.0; 4];
            let mut gb = 0.0;
            for (x, rec) in xs.iter().zip(records) {
                let p = model.prob_std(x);
                let err = p - if rec.member { 1.0 } else { 0.0 };
                for (g, xj) in gw.iter_mut().zip(x) {
                    *g += err * xj;
                }
                gb += err;
            }
            for (w, g) in model.weights.iter_mut().zip(gw) {
                *w -= Self::LR * g / m;
            }
            model.bias -= Self::LR * gb / m;
        }
        model
    }

    fn standardize(&self, f: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for j in 0..4 {
            out[j] = (f[j] - self.mean[j]) / self.scale[j];
        }
        out
    }

    fn prob_std(&self, x: &[f64; 4]) -> f64 {
        let z: f64 = self.bias + (0..4).map(|j| self.weights[j] * x[j]).sum::<f64>();
        sigmoid(z)
    }

    /// Probability that the record comes from a training member.
    pub fn score(&self, features: &[f64; 4]) -> f64 {
        self.prob_std(&self.standardize(features))
    }
}

/// Disjoint member / non-member node sets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MembershipSplit {
    pub members: Vec<usize>,
    pub nonmembers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub auc: f64,
    /// Accuracy of `score >= 0.5` as the membership decision.
    pub accuracy: f64,
    /// Records for the target's member and non-member nodes, in that order.
    pub records: Vec<MembershipRecord>,
    pub scores: Vec<f64>,
}

/// Shadow-model membership inference.
///
/// A shadow classifier is trained on `shadow.members` with `train`; its
/// outputs on the shadow members and non-members label the training set of
/// a logistic-regression attack model, which then scores the target's
/// outputs on `target_split`.
pub fn membership_inference(
    target: &SoftmaxClassifier,
    r: &DMatrix<f64>,
    labels: &[usize],
    target_split: &MembershipSplit,
    shadow: &MembershipSplit,
    train: &TrainConfig,
) -> Result<MembershipReport> {
    for (name, set) in [
        ("target members", &target_split.members),
        ("target non-members", &target_split.nonmembers),
        ("shadow members", &shadow.members),
        ("shadow non-members", &shadow.nonmembers),
    ] {
        if set.is_empty() {
            return Err(Error::invalid(format!("{name} split is empty")));
        }
        if let Some(&bad) = set.iter().find(|&&v| v >= r.nrows()) {
            return Err(Error::invalid(format!("{name}: node {bad} out of range")));
        }
    }
    let mut seen = BTreeSet::new();
    for &v in target_split
        .members
        .iter()
        .chain(&target_split.nonmembers)
        .chain(&shadow.members)
        .chain(&shadow.nonmembers)
    {
        if !seen.insert(v) {
            return Err(Error::invalid(format!(
                "node {v} appears in more than one split"
            )));
        }
    }
    if labels.len() != r.nrows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            r.nrows()
        )));
    }

    let shadow_clf = train_softmax(r, labels, &shadow.members, train)?;
    let shadow_records = records(&shadow_clf, r, labels, &shadow.members, &shadow.nonmembers);
    let attack = AttackModel::fit(&shadow_records);

    let target_records = records(
        target,
        r,
        labels,
        &target_split.members,
        &target_split.nonmembers,
    );
    let scores: Vec<f64> = target_records
        .iter()
        .map(|rec| attack.score(&rec.features))
        .collect();
    let truth: Vec<bool> = target_records.iter().map(|rec| rec.member).collect();
    let auc = metrics::auc(&scores, &truth)?;
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
    Ok(MembershipReport {
        auc,
        accuracy: metrics::accuracy(&predicted, &truth),
        records: target_records,
        scores,
    })
}
