use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use trialmatch::config::{BackendKind, DenseMode};
use trialmatch::core::ranking::Feature;
use trialmatch::synth::{generate, SynthOptions};
use trialmatch::{pipeline, server, Config, Error};

#[derive(Debug, Parser)]
#[command(name = "trialmatch", version, about = "Patient-to-trial matching pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of `--config` (or the defaults).
#[derive(Debug, Args)]
struct Common {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<PathBuf>,
    #[arg(long, global = true)]
    patients: Option<PathBuf>,
    #[arg(long, global = true)]
    qrels: Option<PathBuf>,
    /// Precomputed trial embeddings; switches dense retrieval to file mode.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Candidates kept per patient after retrieval.
    #[arg(long, global = true)]
    top: Option<usize>,
    /// met_inc, not_inc, excl, not_excl, relevance, eligibility or combination.
    #[arg(long, global = true)]
    feature: Option<Feature>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    /// Mock backend fixture file.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the corpora and write corpus_summary.json.
    Ingest,
    /// Build the lexical and dense trial indexes.
    Index,
    /// Generate keywords and fuse lexical and dense candidates per patient.
    Retrieve,
    /// Predict criterion-level eligibility for retrieved pairs.
    Match,
    /// Score matched pairs and write per-feature run files.
    Rank,
    /// Compute metrics against the qrels.
    Evaluate,
    /// Run ingest through evaluate (evaluate only if qrels are given).
    Run,
    /// Serve the screening API.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Write a synthetic cohort with mock fixtures and a config.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        num_patients: usize,
        #[arg(long, default_value_t = 50)]
        num_trials: usize,
        /// Probability of replacing each criterion label with a random one.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Split top-ranked pairs between two annotators for screening.
    Assign {
        /// Exactly two annotator ids.
        #[arg(long, value_delimiter = ',', required = true)]
        annotators: Vec<String>,
        #[arg(long, default_value_t = 3)]
        per_patient: usize,
    },
    /// Score external baselines into run files.
    Baseline {
        /// JSONL of patient and criterion vectors per pair.
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// JSONL of per-criterion NLI labels per pair.
        #[arg(long)]
        nli: Option<PathBuf>,
    },
}

fn configure(common: &Common) -> trialmatch::Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let set = |dst: &mut Option<PathBuf>, src: &Option<PathBuf>| {
        if src.is_some() {
            dst.clone_from(src);
        }
    };
    set(&mut cfg.trials, &common.trials);
    set(&mut cfg.patients, &common.patients);
    set(&mut cfg.qrels, &common.qrels);
    set(&mut cfg.fixtures, &common.fixtures);
    if common.embeddings.is_some() {
        set(&mut cfg.embeddings, &common.embeddings);
        cfg.dense = DenseMode::File;
    }
    if let Some(v) = &common.out_dir {
        cfg.out_dir.clone_from(v);
    }
    if let Some(v) = common.top {
        cfg.top = v;
    }
    if let Some(v) = common.feature {
        cfg.feature = v;
    }
    if let Some(v) = common.backend {
        cfg.backend = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.parallelism {
        cfg.parallelism = v.max(1);
    }
    Ok(cfg)
}

fn print<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("summaries serialize"));
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = configure(&cli.common)?;
    match cli.command {
        Command::Ingest => print(&pipeline::ingest(&cfg)?),
        Command::Index => print(&pipeline::index(&cfg)?),
        Command::Retrieve => print(&pipeline::retrieve(&cfg, &cfg.gateway()?)?),
        Command::Match => print(&pipeline::match_stage(&cfg, &cfg.gateway()?)?),
        Command::Rank => print(&pipeline::rank(&cfg, &cfg.gateway()?)?),
        Command::Evaluate => {
            let out = pipeline::evaluate(&cfg)?;
            print!("{}", std::fs::read_to_string(cfg.artifact(pipeline::REPORT_TXT))?);
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Run => {
            let gw = cfg.gateway()?;
            print(&pipeline::ingest(&cfg)?);
            print(&pipeline::index(&cfg)?);
            print(&pipeline::retrieve(&cfg, &gw)?);
            print(&pipeline::match_stage(&cfg, &gw)?);
            print(&pipeline::rank(&cfg, &gw)?);
            if cfg.qrels.is_some() {
                pipeline::evaluate(&cfg)?;
                print!("{}", std::fs::read_to_string(cfg.artifact(pipeline::REPORT_TXT))?);
            }
        }
        Command::Serve { bind } => {
            if let Some(b) = bind {
                cfg.server.bind = b;
            }
            let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
            rt.block_on(server::serve(&cfg))?;
        }
        Command::Synth {
            dir,
            num_patients,
            num_trials,
            noise,
        } => {
            let options = SynthOptions {
                patients: num_patients,
                trials: num_trials,
                seed: cfg.seed,
                noise,
            };
            let cohort = generate(&options)?;
            let config = cohort.write(&dir, options.seed)?;
            println!("{}", config.display());
        }
        Command::Assign {
            annotators,
            per_patient,
        } => {
            let (assignment, dropped) = pipeline::assign(&cfg, &annotators, per_patient)?;
            if let Some((p, n)) = dropped {
                eprintln!("warning: odd number of pairs, left out {p} / {n}");
            }
            println!(
                "{} pairs assigned to {} and {} -> {}",
                assignment.pairs.len(),
                assignment.annotators[0],
                assignment.annotators[1],
                cfg.assignment_path().display()
            );
        }
        Command::Baseline { vectors, nli } => {
            print(&pipeline::baseline(&cfg, vectors.as_deref(), nli.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::MissingInput(_) | Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
