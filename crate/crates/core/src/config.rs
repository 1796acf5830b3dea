//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers named after the pipeline stages.
//!
//! ```text
//! [eval-cli]
//! seed = 7
//! families = MF, MF+TOPO, SNN
//! attacks = distance, decoder
//! n = 60
//!
//! [factorization]
//! k = 16
//! ```
//!
//! Lines starting with `#` or `;` are comments. Unknown sections or keys are
//! errors. Relative paths are resolved against the config file's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attacks::{DecoderConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::factorization::FactorizationConfig;
use crate::synth::PlantedSpec;

/// Representation family under attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "MF")]
    Mf,
    #[serde(rename = "MF+TOPO")]
    MfTopo,
    #[serde(rename = "SNN")]
    Snn,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Mf, Family::MfTopo, Family::Snn];

    pub fn name(self) -> &'static str {
        match self {
            Family::Mf => "MF",
            Family::MfTopo => "MF+TOPO",
            Family::Snn => "SNN",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MF" => Ok(Family::Mf),
            "MF+TOPO" | "MF_TOPO" | "MFTOPO" => Ok(Family::MfTopo),
            "SNN" => Ok(Family::Snn),
            other => Err(Error::Config(format!(
                "unknown representation family {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Distance,
    Decoder,
    Membership,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Distance => "distance",
            AttackKind::Decoder => "decoder",
            AttackKind::Membership => "membership",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "distance" => Ok(AttackKind::Distance),
            "decoder" => Ok(AttackKind::Decoder),
            "membership" => Ok(AttackKind::Membership),
            other => Err(Error::Config(format!("unknown attack {other:?}"))),
        }
    }
}

/// What the decoder attack assumes about node features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderFeatures {
    /// The adversary knows the text features.
    Known,
    /// No features; the identity matrix stands in.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Files {
        edges: PathBuf,
        docs: PathBuf,
        labels: Option<PathBuf>,
    },
    Planted(PlantedSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: GraphSource,
    pub text_dim: usize,
    pub factorization: FactorizationConfig,
    pub normalize_embeddings: bool,
    pub radius: usize,
    pub snn_layers: usize,
    /// Hidden width of the simplicial network; input width when `None`.
    pub snn_hidden: Option<usize>,
    pub families: Vec<Family>,
    pub attacks: Vec<AttackKind>,
    pub decoder: DecoderConfig,
    pub decoder_features: DecoderFeatures,
    pub train: TrainConfig,
    /// Largest graph for which every node pair is a candidate.
    pub max_all_pairs: usize,
    /// Number of consecutive seeds for `bench`.
    pub bench_seeds: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: GraphSource::Planted(PlantedSpec::default()),
            text_dim: 80,
            factorization: FactorizationConfig::default(),
            normalize_embeddings: false,
            radius: 2,
            snn_layers: 2,
            snn_hidden: None,
            families: Family::ALL.to_vec(),
            attacks: vec![AttackKind::Distance, AttackKind::Decoder],
            decoder: DecoderConfig::default(),
            decoder_features: DecoderFeatures::Known,
            train: TrainConfig::default(),
            max_all_pairs: 300,
            bench_seeds: 10,
            seed: 0,
        }
    }
}

const SECTIONS: [&str; 7] = [
    "graph-core",
    "text-features",
    "factorization",
    "simplicial",
    "persistence",
    "attacks",
    "eval-cli",
];

fn parse_num<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse {value:?}")))
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "[{section}] {key}: expected a boolean, got {value:?}"
        ))),
    }
}

fn parse_list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    let mut out: Vec<T> = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(item.parse()?);
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn planted(&self) -> Option<&PlantedSpec> {
        match &self.source {
            GraphSource::Planted(spec) => Some(spec),
            GraphSource::Files { .. } => None,
        }
    }

    /// Copy of this config with a different seed (also used for the
    /// factorization).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c.factorization.seed = seed;
        c.decoder.seed = seed;
        c.train.seed = seed;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::Config(
                "select at least one representation family".into(),
            ));
        }
        if self.attacks.is_empty() {
            return Err(Error::Config("select at least one attack".into()));
        }
        if self.text_dim == 0 {
            return Err(Error::Config("[text-features] t must be >= 1".into()));
        }
        if self.bench_seeds == 0 {
            return Err(Error::Config("[eval-cli] seeds must be >= 1".into()));
        }
        if self.decoder.lr.is_nan() || self.decoder.lr <= 0.0 {
            return Err(Error::Config("[attacks] decoder_lr must be > 0".into()));
        }
        if self.train.lr.is_nan() || self.train.lr <= 0.0 {
            return Err(Error::Config("[attacks] train_lr must be > 0".into()));
        }
        if matches!(self.snn_hidden, Some(0)) {
            return Err(Error::Config("[simplicial] hidden must be >= 1".into()));
        }
        self.factorization.validate()?;
        if let GraphSource::Planted(spec) = &self.source {
            spec.validate()?;
        }
        Ok(())
    }

    /// Parses config text. `base` resolves relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut planted = PlantedSpec::default();
        let (mut edges, mut docs, mut labels) = (None, None, None);
        let mut seed_set = false;
        let mut section = String::new();
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        };

        for (i, raw) in text.lines().enumerate() {
            // A `#` preceded by whitespace starts a trailing comment.
            let line = match raw.find(" #").or_else(|| raw.find("\t#")) {
                Some(at) => &raw[..at],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!(
                        "line {}: unknown section [{name}]",
                        i + 1
                    )));
                }
                section = name.to_owned();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let s = section.as_str();
            match (s, key) {
                ("graph-core", "edges") => edges = Some(resolve(value)),
                ("graph-core", "docs") => docs = Some(resolve(value)),
                ("graph-core", "labels") => labels = Some(resolve(value)),
                ("text-features", "t") => cfg.text_dim = parse_num(s, key, value)?,
                ("factorization", "k") => cfg.factorization.k = parse_num(s, key, value)?,
                ("factorization", "lambda") => cfg.factorization.lambda = parse_num(s, key, value)?,
                ("factorization", "max_iters") => {
                    cfg.factorization.max_iters = parse_num(s, key, value)?
                }
                ("factorization", "tol") => cfg.factorization.tol = parse_num(s, key, value)?,
                ("factorization", "normalize") => {
                    cfg.normalize_embeddings = parse_bool(s, key, value)?
                }
                ("persistence", "radius") => cfg.radius = parse_num(s, key, value)?,
                ("simplicial", "layers") => cfg.snn_layers = parse_num(s, key, value)?,
                ("simplicial", "hidden") => cfg.snn_hidden = Some(parse_num(s, key, value)?),
                ("attacks", "decoder_steps") => cfg.decoder.steps = parse_num(s, key, value)?,
                ("attacks", "decoder_lr") => cfg.decoder.lr = parse_num(s, key, value)?,
                ("attacks", "decoder_features") => {
                    cfg.decoder_features = match value.to_ascii_lowercase().as_str() {
                        "known" => DecoderFeatures::Known,
                        "identity" => DecoderFeatures::Identity,
                        _ => {
                            return Err(Error::Config(format!(
                                "[attacks] decoder_features: {value:?}"
                            )))
                        }
                    }
                }
                ("attacks", "train_epochs") => cfg.train.epochs = parse_num(s, key, value)?,
                ("attacks", "train_lr") => cfg.train.lr = parse_num(s, key, value)?,
                ("attacks", "max_all_pairs") => cfg.max_all_pairs = parse_num(s, key, value)?,
                ("eval-cli", "seed") => {
                    cfg.seed = parse_num(s, key, value)?;
                    seed_set = true;
                }
                ("eval-cli", "seeds") => cfg.bench_seeds = parse_num(s, key, value)?,
                ("eval-cli", "families") => cfg.families = parse_list(value)?,
                ("eval-cli", "attacks") => cfg.attacks = parse_list(value)?,
                ("eval-cli", "n") => planted.n = parse_num(s, key, value)?,
                ("eval-cli", "communities") => planted.communities = parse_num(s, key, value)?,
                ("eval-cli", "p_in") => planted.p_in = parse_num(s, key, value)?,
                ("eval-cli", "p_out") => planted.p_out = parse_num(s, key, value)?,
                ("eval-cli", "vocab_per_community") => {
                    planted.vocab_per_community = parse_num(s, key, value)?
                }
                ("eval-cli", "noise_vocab") => planted.noise_vocab = parse_num(s, key, value)?,
                ("eval-cli", "doc_len") => planted.doc_len = parse_num(s, key, value)?,
                ("eval-cli", "noise_rate") => planted.noise_rate = parse_num(s, key, value)?,
                ("", _) => {
                    return Err(Error::Config(format!(
                        "line {}: key {key:?} outside any section",
                        i + 1
                    )));
                }
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {key:?} in [{s}]",
                        i + 1
                    )))
                }
            }
        }

        cfg.source =
            match (edges, docs) {
                (Some(edges), Some(docs)) => GraphSource::Files {
                    edges,
                    docs,
                    labels,
                },
                (None, None) if labels.is_none() => GraphSource::Planted(planted),
                _ => return Err(Error::Config(
                    "[graph-core] needs both `edges` and `docs` (or neither, for a planted graph)"
                        .into(),
                )),
            };
        let seed = cfg.seed;
        let cfg = if seed_set { cfg.with_seed(seed) } else { cfg };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = ExperimentConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn parses_sections() {
        let text = "\
# comment
[eval-cli]
seed = 9
families = MF, SNN
attacks = distance
n = 30
p_in = 0.5

[factorization]
k = 8   # trailing comment
lambda = 0.1	# tab too

[graph-core]
edges = g.tsv
docs = /abs/d.tsv
";
        let cfg = ExperimentConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.factorization.seed, 9);
        assert_eq!(cfg.families, vec![Family::Mf, Family::Snn]);
        assert_eq!(cfg.attacks, vec![AttackKind::Distance]);
        assert_eq!(cfg.factorization.k, 8);
        assert_eq!(
            cfg.source,
            GraphSource::Files {
                edges: PathBuf::from("/base/g.tsv"),
                docs: PathBuf::from("/abs/d.tsv"),
                labels: None
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new(".");
        assert!(ExperimentConfig::parse("[nope]\n", base).is_err());
        assert!(ExperimentConfig::parse("k = 3\n", base).is_err());
        assert!(ExperimentConfig::parse("[factorization]\nk = x\n", base).is_err());
        assert!(ExperimentConfig::parse("[factorization]\nbogus = 1\n", base).is_err());
        assert!(ExperimentConfig::parse("[eval-cli]\nfamilies =\n", base).is_err());
        assert!(ExperimentConfig::parse("[eval-cli]\nattacks = teleport\n", base).is_err());
        assert!(ExperimentConfig::parse("[graph-core]\nedges = a\n", base).is_err());
        let err = ExperimentConfig::parse("[factorization]\nk = 0\n", base).unwrap_err();
        assert!(err.is_config());
    }
}
