use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use rt4sc::config::ExperimentConfig;
use rt4sc::error::{Error, Result};
use rt4sc::pipeline::{self, AttackReport, ComparisonReport, Environment};
use rt4sc::{linalg, persistence};

#[derive(Debug, Parser)]
#[command(
    name = "rt4sc",
    version,
    about = "Topology-enriched text-attributed node embeddings and privacy attacks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Experiment config (key = value with [section] headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = rayon default). Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load or generate the graph and write it in canonical form.
    Ingest,
    /// Text features, affinity matrix, factorization and MF embeddings.
    Embed,
    /// Ego-network persistence diagrams and MF+TOPO embeddings.
    Persist,
    /// Clique complex and SNN representations.
    Lift,
    /// Run every selected attack on every selected family.
    Attack,
    /// Comparison table (JSON and CSV) from `attacks.json`, running the
    /// attacks first if that file is missing.
    Report,
    /// Repeat the experiment over consecutive seeds and aggregate.
    Bench {
        /// Number of seeds; defaults to `[eval-cli] seeds`.
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io { path, source: e })
}

fn load_config(global: &Global) -> Result<ExperimentConfig> {
    let cfg = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = match global.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let out = &cli.global.out;
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;

    match cli.command {
        Command::Ingest => {
            let data = pipeline::load_dataset(&cfg)?;
            let g = &data.graph;
            g.write(&out.join("graph.edges"), &out.join("graph.docs"))?;
            if let Some(labels) = &data.labels {
                write(out, "labels.tsv", pipeline::labels_text(labels))?;
            }
            let summary = json!({
                "n": g.n(),
                "edges": g.num_edges(),
                "self_loops": data.self_loops,
                "seed": cfg.seed,
            });
            write(
                out,
                "ingest.json",
                serde_json::to_string_pretty(&summary).unwrap() + "\n",
            )?;
        }
        Command::Embed => {
            let data = pipeline::load_dataset(&cfg)?;
            let emb = pipeline::embed_stage(&cfg, &data.graph)?;
            write(out, "text_features.csv", emb.text.to_csv())?;
            write(out, "affinity.csv", linalg::to_csv(emb.affinity.matrix()))?;
            emb.model.save(&out.join("model.rt4sc"))?;
            write(out, "embeddings_mf.csv", linalg::to_csv(&emb.mf))?;
        }
        Command::Persist => {
            let data = pipeline::load_dataset(&cfg)?;
            let g = &data.graph;
            let emb = pipeline::embed_stage(&cfg, g)?;
            let dir = out.join("diagrams");
            fs::create_dir_all(&dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            for v in 0..g.n() {
                let ego = persistence::ego_subgraph(g, v, cfg.radius)?;
                let diagram =
                    persistence::compute_persistence(&persistence::build_filtration(&ego.graph))?;
                write(&dir, &format!("node_{v}.csv"), diagram.to_csv())?;
            }
            write(
                out,
                "topo_features.csv",
                linalg::to_csv(&persistence::topo_features(g, cfg.radius)?),
            )?;
            let topo = pipeline::topo_stage(&cfg, g, &emb.mf)?;
            write(out, "embeddings_mf_topo.csv", linalg::to_csv(&topo))?;
        }
        Command::Lift => {
            let data = pipeline::load_dataset(&cfg)?;
            let g = &data.graph;
            let emb = pipeline::embed_stage(&cfg, g)?;
            let topo = pipeline::topo_stage(&cfg, g, &emb.mf)?;
            let (cx, snn) = pipeline::snn_stage(&cfg, g, &topo)?;
            write(out, "complex.txt", cx.export_text())?;
            write(out, "embeddings_snn.csv", linalg::to_csv(&snn))?;
        }
        Command::Attack => {
            let report = pipeline::run_pipeline(&cfg)?;
            write(
                out,
                "attacks.json",
                serde_json::to_string_pretty(&report.rows).unwrap() + "\n",
            )?;
        }
        Command::Report => {
            let path = out.join("attacks.json");
            let report = if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let rows: Vec<AttackReport> = serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
                let seed = rows.first().map_or(cfg.seed, |r| r.seed);
                ComparisonReport {
                    rows,
                    environment: Environment::new(seed),
                }
            } else {
                pipeline::run_pipeline(&cfg)?
            };
            write(out, "report.json", report.to_json())?;
            write(out, "report.csv", report.to_csv())?;
            print!("{}", report.to_csv());
        }
        Command::Bench { seeds } => {
            let mut cfg = cfg;
            if let Some(s) = seeds {
                cfg.bench_seeds = s;
            }
            let bench = pipeline::run_bench(&cfg)?;
            write(out, "bench.json", bench.to_json())?;
            write(out, "bench.csv", bench.to_csv())?;
            print!("{}", bench.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
