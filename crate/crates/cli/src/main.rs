use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsner_cli::commands::{
    cmd_cache_labels, cmd_eval, cmd_predict, cmd_sample, cmd_synth, cmd_train, find_checkpoints,
    Outcome,
};
use lsner_cli::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "lsner", version, about = "Few-shot NER by matching tokens against label names")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// Flat `key = value` config file; a run manifest works too.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Comma-separated shot counts.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip stage 1 (no source dataset).
    #[arg(long)]
    no_prefinetune: bool,
    /// original | meaningless | misleading | map:<file>
    #[arg(long)]
    rename: Option<String>,
    /// name-only | contextual:<SUB>[:budget]
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    zero_shot: bool,
    #[arg(long)]
    static_vectors: Option<PathBuf>,
    #[arg(long)]
    tie_embeddings: Option<bool>,
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    source_taxonomy: Option<PathBuf>,
    #[arg(long)]
    target_train: Option<PathBuf>,
    #[arg(long)]
    target_dev: Option<PathBuf>,
    #[arg(long)]
    target_test: Option<PathBuf>,
    #[arg(long)]
    target_taxonomy: Option<PathBuf>,
    /// dev | test
    #[arg(long)]
    split: Option<String>,
    /// Any config key, as KEY=VALUE. Named flags win over these.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut o: Vec<(String, String)> = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
            o.push((k.trim().into(), v.trim().into()));
        }
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.into(), v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("experiment.k", self.k.clone());
        put("experiment.repeats", self.repeats.map(|v| v.to_string()));
        put("experiment.seed", self.seed.map(|v| v.to_string()));
        put("experiment.prefinetune", self.no_prefinetune.then(|| "false".into()));
        put("experiment.rename", self.rename.clone());
        put("train.scheme", self.scheme.clone());
        put("experiment.zero_shot", self.zero_shot.then(|| "true".into()));
        put("data.static_vectors", path(&self.static_vectors));
        put("model.tie_embeddings", self.tie_embeddings.map(|v| v.to_string()));
        put("data.source", path(&self.source));
        put("data.source_taxonomy", path(&self.source_taxonomy));
        put("data.target_train", path(&self.target_train));
        put("data.target_dev", path(&self.target_dev));
        put("data.target_test", path(&self.target_test));
        put("data.target_taxonomy", path(&self.target_taxonomy));
        put("experiment.split", self.split.clone());
        ExperimentConfig::load(self.config.as_deref(), &o)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample K-shot support sets and tabulate their sizes.
    Sample(ExperimentArgs),
    /// Pre-finetune on the source, then finetune on each support set.
    Train(ExperimentArgs),
    /// Score checkpoints on the target test (or dev) split.
    Eval {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// A `train` output directory; every checkpoint below it is scored.
        #[arg(long)]
        runs: Option<PathBuf>,
    },
    /// Tag a token-per-line file.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Use prebuilt label vectors.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Build label vectors, save them here, and use them.
        #[arg(long)]
        cache_out: Option<PathBuf>,
    },
    /// Encode a label list once for later prediction.
    CacheLabels {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Cache name-only labels for this taxonomy instead.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
    },
    /// Write the synthetic word-family task and a config for it.
    Synth {
        #[arg(long, default_value = "synthetic")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn report(o: Outcome) -> ExitCode {
    if o.failed > 0 {
        eprintln!("{} of {} runs failed", o.failed, o.runs);
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    Ok(match cli.command {
        Command::Sample(a) => report(cmd_sample(&a.load()?, &a.out)?),
        Command::Train(a) => report(cmd_train(&a.load()?, &a.out)?),
        Command::Eval { exp, mut checkpoints, runs } => {
            if let Some(dir) = runs {
                checkpoints.extend(find_checkpoints(&dir)?);
            }
            report(cmd_eval(&exp.load()?, &exp.out, &checkpoints)?)
        }
        Command::Predict { checkpoint, input, output, cache, cache_out } => {
            cmd_predict(&checkpoint, &input, &output, cache.as_deref(), cache_out.as_deref())?;
            ExitCode::SUCCESS
        }
        Command::CacheLabels { checkpoint, output, taxonomy } => {
            cmd_cache_labels(&checkpoint, &output, taxonomy.as_deref())?;
            ExitCode::SUCCESS
        }
        Command::Synth { out, seed } => {
            cmd_synth(&out, seed)?;
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
