use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use lsner_core::corpus::{
    conll_string, filter_coarse_type, parse_conll, read_token_sentences, rename_taxonomy, Dataset,
    DatasetRole, LabelTaxonomy, Sentence,
};
use lsner_core::encoders::{LabelRepresentationScheme, StaticVectors, Vocabulary};
use lsner_core::eval::{aggregate_runs, evaluate_dataset, EvalReport};
use lsner_core::matcher::{
    build_label_cache, checkpoint_bytes, model_vocabulary, read_checkpoint, read_label_cache,
    render_entries, run_two_stage, train_stage, write_label_cache, ModelState, Predictor,
    StageReport, TrainingConfig,
};
use lsner_core::sampler::{sample_support, write_support_set, SupportHeader};
use lsner_core::synthetic::{SyntheticConfig, SyntheticTask};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Split};
use crate::experiment::{desk_model_config, desk_training_config};
use crate::manifest::{sha256_bytes, RunManifest};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Number of failed runs; the process exits nonzero when positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub runs: usize,
    pub failed: usize,
}

/// Files produced by one run, written by the sequential reducer.
struct RunOutput {
    id: String,
    files: Vec<(String, Vec<u8>)>,
    entries: Vec<(String, String)>,
}

/// Writes files under `root` and records their digests.
struct OutputDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    fn new(root: &Path, manifest: RunManifest) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    fn write(&mut self, relative: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.add_output(relative, bytes);
        Ok(())
    }

    fn absorb(&mut self, run: RunOutput) -> anyhow::Result<()> {
        for (k, v) in run.entries {
            self.manifest.run_entry(&run.id, &k, v);
        }
        for (rel, bytes) in &run.files {
            self.write(&format!("{}/{rel}", run.id), bytes)?;
        }
        Ok(())
    }

    fn finish(self) -> anyhow::Result<()> {
        let text = self.manifest.render();
        std::fs::write(self.root.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

fn failed_run(id: String, err: &anyhow::Error) -> RunOutput {
    RunOutput {
        id,
        files: Vec::new(),
        entries: vec![("status".into(), format!("failed: {err:#}"))],
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn read_taxonomy(path: &Option<PathBuf>, m: &mut RunManifest) -> anyhow::Result<Option<LabelTaxonomy>> {
    let Some(p) = path else { return Ok(None) };
    m.add_input(p)?;
    let f = File::open(p).with_context(|| format!("opening taxonomy {}", p.display()))?;
    Ok(Some(LabelTaxonomy::read(BufReader::new(f)).with_context(|| format!("in {}", p.display()))?))
}

fn read_dataset(
    path: &Path,
    taxonomy: Option<&LabelTaxonomy>,
    role: DatasetRole,
    m: &mut RunManifest,
) -> anyhow::Result<Dataset> {
    m.add_input(path)?;
    let f = File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    parse_conll(BufReader::new(f), &stem(path), taxonomy, role).with_context(|| format!("in {}", path.display()))
}

fn read_static_vectors(cfg: &ExperimentConfig, m: &mut RunManifest) -> anyhow::Result<Option<StaticVectors>> {
    let Some(p) = &cfg.data.static_vectors else { return Ok(None) };
    m.add_input(p)?;
    let f = File::open(p).with_context(|| format!("opening static vectors {}", p.display()))?;
    Ok(Some(StaticVectors::read(BufReader::new(f), cfg.model.dim).with_context(|| format!("in {}", p.display()))?))
}

fn require<'a>(p: &'a Option<PathBuf>, key: &str) -> anyhow::Result<&'a Path> {
    p.as_deref().ok_or_else(|| anyhow!("`{key}` is not set"))
}

fn coarse(cfg: &ExperimentConfig, d: Dataset) -> anyhow::Result<Dataset> {
    match &cfg.coarse {
        Some(c) => Ok(filter_coarse_type(&d, c, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?),
        None => Ok(d),
    }
}

/// Target training pool with the configured taxonomy and coarse filter.
fn target_pool(cfg: &ExperimentConfig, m: &mut RunManifest) -> anyhow::Result<Dataset> {
    let tax = read_taxonomy(&cfg.data.target_taxonomy, m)?;
    let path = require(&cfg.data.target_train, "data.target_train")?;
    coarse(cfg, read_dataset(path, tax.as_ref(), DatasetRole::Target, m)?)
}

fn target_eval_set(cfg: &ExperimentConfig, m: &mut RunManifest) -> anyhow::Result<Dataset> {
    let tax = read_taxonomy(&cfg.data.target_taxonomy, m)?;
    let (path, key) = match cfg.split {
        Split::Test => (&cfg.data.target_test, "data.target_test"),
        Split::Dev => (&cfg.data.target_dev, "data.target_dev"),
    };
    coarse(cfg, read_dataset(require(path, key)?, tax.as_ref(), DatasetRole::Target, m)?)
}

fn renamed(cfg: &ExperimentConfig, t: &LabelTaxonomy, m: &mut RunManifest) -> anyhow::Result<LabelTaxonomy> {
    if let Some(p) = cfg.rename.strip_prefix("map:") {
        m.add_input(Path::new(p))?;
    }
    let mode = cfg.rename_mode()?;
    Ok(rename_taxonomy(t, &mode, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?)
}

fn run_id(k: Option<usize>, i: usize) -> String {
    match k {
        Some(k) => format!("k{k}/run{i:02}"),
        None => format!("zero-shot/run{i:02}"),
    }
}

fn summary_table(title: &str, rows: &[(String, Vec<String>)], columns: &[String]) -> String {
    let mut out = format!("# {title}\n");
    let _ = writeln!(out, "{}", std::iter::once("").chain(columns.iter().map(String::as_str)).collect::<Vec<_>>().join("\t"));
    for (name, cells) in rows {
        let _ = writeln!(out, "{name}\t{}", cells.join("\t"));
    }
    out
}

/// Samples one support set per (K, repeat) and tabulates their sizes.
pub fn cmd_sample(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Outcome> {
    let mut manifest = RunManifest::new("sample", cfg.entries());
    let pool = target_pool(cfg, &mut manifest)?;
    let jobs: Vec<(usize, usize)> = cfg.ks.iter().flat_map(|&k| (0..cfg.repeats).map(move |i| (k, i))).collect();
    let results: Vec<(usize, Option<usize>, RunOutput)> = jobs
        .par_iter()
        .map(|&(k, i)| {
            let id = run_id(Some(k), i);
            let seed = cfg.sampling_seed(i);
            let res = (|| -> anyhow::Result<(usize, Vec<u8>)> {
                let s = sample_support(&pool, k, &mut ChaCha8Rng::seed_from_u64(seed))?;
                let header = SupportHeader {
                    dataset: pool.name.clone(),
                    shot: k,
                    seed,
                };
                let mut buf = Vec::new();
                write_support_set(&mut buf, &header, &s)?;
                Ok((s.len(), buf))
            })();
            match res {
                Ok((n, buf)) => (
                    k,
                    Some(n),
                    RunOutput {
                        id,
                        files: vec![("support.txt".into(), buf)],
                        entries: vec![
                            ("seed.sampling".into(), seed.to_string()),
                            ("sentences".into(), n.to_string()),
                            ("status".into(), "ok".into()),
                        ],
                    },
                ),
                Err(e) => (k, None, failed_run(id, &e)),
            }
        })
        .collect();

    let mut dir = OutputDir::new(out, manifest)?;
    let mut sizes: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut failed = 0;
    for (k, n, run) in results {
        match n {
            Some(n) => sizes.entry(k).or_default().push(n as f64),
            None => failed += 1,
        }
        dir.absorb(run)?;
    }
    let mut table = String::from("# support-set sentences per K (mean ± sample std)\nK\truns\tsentences\n");
    for &k in &cfg.ks {
        match sizes.get(&k) {
            Some(v) => {
                let s = aggregate_runs(v)?;
                let _ = writeln!(table, "{k}\t{}\t{s}", v.len());
            }
            None => {
                let _ = writeln!(table, "{k}\t0\tFAILED");
            }
        }
    }
    dir.write("sample_stats.txt", table.as_bytes())?;
    dir.finish()?;
    Ok(Outcome { runs: jobs.len(), failed })
}

struct TrainInputs {
    source: Option<Dataset>,
    pool: Option<Dataset>,
    vocab: Vocabulary,
    vectors: Option<StaticVectors>,
}

fn loss_trace(stages: &[StageReport]) -> String {
    let mut out = String::from("# stage\tdataset\tepoch\tloss\n");
    for (s, r) in stages.iter().enumerate() {
        for (e, l) in r.epoch_losses.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{l:e}", s + 1, r.dataset, e + 1);
        }
    }
    out
}

fn train_one(cfg: &ExperimentConfig, inp: &TrainInputs, k: Option<usize>, i: usize) -> anyhow::Result<RunOutput> {
    let id = run_id(k, i);
    let seed = cfg.training_seed(i);
    let model_cfg = lsner_core::matcher::ModelConfig { seed, ..cfg.model.clone() };
    let train_cfg = TrainingConfig { seed, ..cfg.train.clone() };
    let (mut m, _) = ModelState::init(model_cfg, inp.vocab.clone(), inp.vectors.as_ref())?;
    let mut files = Vec::new();
    let mut entries = vec![("seed.training".to_string(), seed.to_string())];

    let stages = match k {
        None => {
            let src = inp.source.as_ref().ok_or_else(|| anyhow!("zero-shot training needs `data.source`"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            vec![train_stage(&mut m, src, &train_cfg, train_cfg.prefinetune_epochs, &mut rng)?]
        }
        Some(k) => {
            let pool = inp.pool.as_ref().ok_or_else(|| anyhow!("`data.target_train` is not set"))?;
            let sampling = cfg.sampling_seed(i);
            let s = sample_support(pool, k, &mut ChaCha8Rng::seed_from_u64(sampling))?;
            let mut buf = Vec::new();
            let header = SupportHeader {
                dataset: pool.name.clone(),
                shot: k,
                seed: sampling,
            };
            write_support_set(&mut buf, &header, &s)?;
            files.push(("support.txt".to_string(), buf));
            entries.push(("seed.sampling".into(), sampling.to_string()));
            entries.push(("support_sentences".into(), s.len().to_string()));
            let support = s.dataset(pool)?;
            let source = if cfg.prefinetune {
                Some(inp.source.as_ref().ok_or_else(|| {
                    anyhow!("stage 1 needs `data.source`; pass --no-prefinetune to skip it")
                })?)
            } else {
                None
            };
            run_two_stage(&mut m, source, &support, &train_cfg)?.stages
        }
    };
    let stage_names: Vec<&str> = stages.iter().map(|s| s.dataset.as_str()).collect();
    entries.push(("stages".into(), stages.len().to_string()));
    entries.push(("stage_datasets".into(), stage_names.join(",")));
    m.echo = vec![
        ("run.id".into(), id.clone()),
        ("run.k".into(), k.unwrap_or(0).to_string()),
        ("run.stages".into(), stages.len().to_string()),
        ("run.rename".into(), cfg.rename.clone()),
    ];
    files.push(("model.ckpt".into(), checkpoint_bytes(&m)?));
    files.push(("loss.txt".into(), loss_trace(&stages).into_bytes()));
    files.push(("taxonomy.txt".into(), m.taxonomy.to_file_string().into_bytes()));
    entries.push(("status".into(), "ok".into()));
    Ok(RunOutput { id, files, entries })
}

/// Two-stage training per (K, repeat), or stage 1 only per repeat in
/// zero-shot mode.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Outcome> {
    let mut manifest = RunManifest::new("train", cfg.entries());
    let src_tax = read_taxonomy(&cfg.data.source_taxonomy, &mut manifest)?;
    let source = match &cfg.data.source {
        Some(p) if cfg.prefinetune || cfg.zero_shot => {
            Some(read_dataset(p, src_tax.as_ref(), DatasetRole::Source, &mut manifest)?)
        }
        _ => None,
    };
    let pool = match (&cfg.data.target_train, cfg.zero_shot) {
        (Some(_), _) => {
            let p = target_pool(cfg, &mut manifest)?;
            let t = renamed(cfg, &p.taxonomy, &mut manifest)?;
            Some(p.with_taxonomy(t)?)
        }
        (None, true) => None,
        (None, false) => bail!("`data.target_train` is not set"),
    };
    let vectors = read_static_vectors(cfg, &mut manifest)?;
    let corpora: Vec<&[Sentence]> = source.iter().chain(&pool).map(|d| d.sentences.as_slice()).collect();
    let taxonomies: Vec<&LabelTaxonomy> = source.iter().chain(&pool).map(|d| &d.taxonomy).collect();
    let vocab = model_vocabulary(&corpora, &taxonomies, vectors.as_ref(), cfg.min_freq, cfg.model.lowercase);
    let inputs = TrainInputs { source, pool, vocab, vectors };

    let jobs: Vec<(Option<usize>, usize)> = if cfg.zero_shot {
        (0..cfg.repeats).map(|i| (None, i)).collect()
    } else {
        cfg.ks.iter().flat_map(|&k| (0..cfg.repeats).map(move |i| (Some(k), i))).collect()
    };
    let results: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(k, i)| train_one(cfg, &inputs, k, i).unwrap_or_else(|e| failed_run(run_id(k, i), &e)))
        .collect();

    let mut dir = OutputDir::new(out, manifest)?;
    let mut failed = 0;
    for run in results {
        if run.files.is_empty() {
            eprintln!("run {} failed", run.id);
            failed += 1;
        }
        dir.absorb(run)?;
    }
    dir.finish()?;
    Ok(Outcome { runs: jobs.len(), failed })
}

/// Every `model.ckpt` below `dir`, in path order.
pub fn find_checkpoints(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            found.extend(find_checkpoints(&p)?);
        } else if p.file_name().is_some_and(|n| n == "model.ckpt") {
            found.push(p);
        }
    }
    Ok(found)
}

fn echo_value<'a>(m: &'a ModelState, key: &str) -> Option<&'a str> {
    m.echo.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn same_types(a: &LabelTaxonomy, b: &LabelTaxonomy) -> bool {
    let names = |t: &LabelTaxonomy| {
        let mut v: Vec<String> = t.entity_types().iter().map(|e| e.original.clone()).collect();
        v.sort();
        v
    };
    names(a) == names(b)
}

struct EvalRun {
    id: String,
    k: usize,
    report: EvalReport,
}

fn eval_one(cfg: &ExperimentConfig, path: &Path, test: &Dataset, zero_target: Option<&LabelTaxonomy>) -> anyhow::Result<EvalRun> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut m = read_checkpoint(bytes.as_slice()).with_context(|| format!("in {}", path.display()))?;
    let id = echo_value(&m, "run.id").map(str::to_string).unwrap_or_else(|| path.display().to_string());
    let k = echo_value(&m, "run.k").and_then(|v| v.parse().ok()).unwrap_or(0);
    let test = match zero_target {
        Some(t) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            m.set_labels(t, &LabelRepresentationScheme::NameOnly, None, &mut rng)?;
            test.with_taxonomy(t.clone())?
        }
        None => {
            if !same_types(&m.taxonomy, &test.taxonomy) {
                bail!(
                    "taxonomy mismatch: checkpoint {} has labels {}, test set has {}",
                    path.display(),
                    m.taxonomy,
                    test.taxonomy
                );
            }
            test.with_taxonomy(m.taxonomy.clone())?
        }
    };
    let (report, _) = evaluate_dataset(&Predictor::new(&m)?, &test)?;
    Ok(EvalRun { id, k, report })
}

/// Scores checkpoints on the target evaluation split and aggregates per K.
/// In zero-shot mode the (renamed) target labels replace the checkpoint's
/// labels in memory; no parameter changes and nothing is written back.
pub fn cmd_eval(cfg: &ExperimentConfig, out: &Path, checkpoints: &[PathBuf]) -> anyhow::Result<Outcome> {
    if checkpoints.is_empty() {
        bail!("no checkpoints to evaluate");
    }
    let mut manifest = RunManifest::new("eval", cfg.entries());
    let test = target_eval_set(cfg, &mut manifest)?;
    let zero_target = if cfg.zero_shot { Some(renamed(cfg, &test.taxonomy, &mut manifest)?) } else { None };
    for p in checkpoints {
        manifest.add_input(p)?;
    }
    let results: Vec<anyhow::Result<EvalRun>> = checkpoints
        .par_iter()
        .map(|p| eval_one(cfg, p, &test, zero_target.as_ref()))
        .collect();

    let mut metrics = String::new();
    let mut by_k: BTreeMap<usize, Vec<&EvalRun>> = BTreeMap::new();
    let mut failed = 0;
    for (p, r) in checkpoints.iter().zip(&results) {
        match r {
            Ok(run) => {
                let pre = &run.id;
                let mut e = vec![
                    (format!("{pre}.k"), run.k.to_string()),
                    (format!("{pre}.f1"), format!("{:.6}", run.report.micro.f1)),
                    (format!("{pre}.precision"), format!("{:.6}", run.report.micro.precision)),
                    (format!("{pre}.recall"), format!("{:.6}", run.report.micro.recall)),
                    (format!("{pre}.repaired_tags"), run.report.violations.to_string()),
                ];
                for (t, prf) in &run.report.per_type {
                    e.push((format!("{pre}.f1.{t}"), format!("{:.6}", prf.f1)));
                }
                metrics.push_str(&render_entries(&e));
                by_k.entry(run.k).or_default().push(run);
            }
            Err(err) => {
                failed += 1;
                eprintln!("evaluating {} failed: {err:#}", p.display());
                let _ = writeln!(metrics, "{}.status = FAILED: {err:#}", p.display());
            }
        }
    }

    let columns: Vec<String> = by_k.keys().map(|k| format!("K={k}")).collect();
    let mut cells = Vec::new();
    let mut type_rows: Vec<(String, Vec<String>)> =
        test.taxonomy.entity_types().iter().map(|e| (e.original.clone(), Vec::new())).collect();
    for (k, runs) in &by_k {
        let scores: Vec<f64> = runs.iter().map(|r| 100.0 * r.report.micro.f1).collect();
        let s = aggregate_runs(&scores)?;
        metrics.push_str(&render_entries(&[
            (format!("k{k}.runs"), runs.len().to_string()),
            (format!("k{k}.mean"), format!("{:.4}", s.mean)),
            (format!("k{k}.std"), format!("{:.4}", s.std)),
        ]));
        cells.push(s.to_string());
        for (ti, (_, row)) in type_rows.iter_mut().enumerate() {
            let v: Vec<f64> = runs.iter().map(|r| 100.0 * r.report.per_type[ti].1.f1).collect();
            row.push(aggregate_runs(&v).map(|s| s.to_string())?);
        }
    }
    let summary = summary_table(
        "entity micro F1 x100, mean ± sample std over runs",
        &[(test.name.clone(), cells)],
        &columns,
    );
    let per_type = summary_table("per-type F1 x100, mean ± sample std over runs", &type_rows, &columns);

    let mut dir = OutputDir::new(out, manifest)?;
    dir.write("metrics.txt", metrics.as_bytes())?;
    dir.write("summary.txt", summary.as_bytes())?;
    dir.write("per_type.txt", per_type.as_bytes())?;
    dir.finish()?;
    print!("{summary}");
    Ok(Outcome { runs: checkpoints.len(), failed })
}

/// Tags a token file with a checkpoint, optionally through a label cache.
pub fn cmd_predict(
    checkpoint: &Path,
    input: &Path,
    output: &Path,
    cache: Option<&Path>,
    cache_out: Option<&Path>,
) -> anyhow::Result<()> {
    let bytes = std::fs::read(checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    let m = read_checkpoint(bytes.as_slice())?;
    let f = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let sentences = read_token_sentences(BufReader::new(f))?;

    let built;
    let loaded;
    let label_cache = match (cache, cache_out) {
        (Some(p), _) => {
            let f = File::open(p).with_context(|| format!("opening label cache {}", p.display()))?;
            loaded = read_label_cache(BufReader::new(f))?;
            Some(&loaded)
        }
        (None, Some(p)) => {
            built = build_label_cache(&m, cache_metadata(&bytes))?;
            write_cache_file(p, &built)?;
            Some(&built)
        }
        (None, None) => None,
    };
    let predictor = match label_cache {
        Some(c) => Predictor::from_cache(&m, c, &m.taxonomy)?,
        None => Predictor::new(&m)?,
    };
    let tagged = sentences
        .into_iter()
        .map(|tokens| {
            let tags = predictor.predict(&tokens)?;
            Ok(Sentence::new(tokens, tags)?)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    std::fs::write(output, conll_string(&tagged)).with_context(|| format!("writing {}", output.display()))?;
    Ok(())
}

fn cache_metadata(checkpoint: &[u8]) -> Vec<(String, String)> {
    vec![
        ("checkpoint.sha256".into(), sha256_bytes(checkpoint)),
        ("code_version".into(), env!("CARGO_PKG_VERSION").into()),
    ]
}

fn write_cache_file(path: &Path, c: &lsner_core::matcher::LabelCache) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    write_label_cache(&mut buf, c)?;
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Encodes the checkpoint's labels, or a name-only label list for
/// `taxonomy`, once and stores them.
pub fn cmd_cache_labels(checkpoint: &Path, output: &Path, taxonomy: Option<&Path>) -> anyhow::Result<()> {
    let bytes = std::fs::read(checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    let mut m = read_checkpoint(bytes.as_slice())?;
    if let Some(p) = taxonomy {
        let f = File::open(p).with_context(|| format!("opening taxonomy {}", p.display()))?;
        let t = LabelTaxonomy::read(BufReader::new(f))?;
        m.set_labels(&t, &LabelRepresentationScheme::NameOnly, None, &mut ChaCha8Rng::seed_from_u64(0))?;
    }
    let cache = build_label_cache(&m, cache_metadata(&bytes))?;
    write_cache_file(output, &cache)
}

/// Writes the synthetic word-family task and a matching config file.
pub fn cmd_synth(out: &Path, seed: u64) -> anyhow::Result<()> {
    let task = SyntheticTask::generate(&SyntheticConfig { seed, ..SyntheticConfig::default() })?;
    std::fs::create_dir_all(out)?;
    let write = |name: &str, text: String| -> anyhow::Result<PathBuf> {
        let p = out.join(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    };
    let source = write("source.conll", conll_string(&task.source.sentences))?;
    let source_tax = write("source.taxonomy", task.source.taxonomy.to_file_string())?;
    let train = write("target_train.conll", conll_string(&task.target_train.sentences))?;
    let test = write("target_test.conll", conll_string(&task.target_test.sentences))?;
    let tax = write("target.taxonomy", task.target_test.taxonomy.to_file_string())?;
    write("heldout_train.conll", conll_string(&task.heldout_train.sentences))?;
    write("heldout_test.conll", conll_string(&task.heldout_test.sentences))?;
    let vectors = write("vectors.txt", task.static_vectors_text())?;
    let synonyms = |t: &LabelTaxonomy| -> anyhow::Result<String> {
        Ok(rename_taxonomy(t, &task.synonyms(t), &mut ChaCha8Rng::seed_from_u64(0))?.to_file_string())
    };
    write("source_synonyms.tsv", synonyms(&task.source.taxonomy)?)?;
    write("target_synonyms.tsv", synonyms(&task.target_test.taxonomy)?)?;

    let mut cfg = ExperimentConfig {
        model: desk_model_config(),
        train: desk_training_config(),
        ..ExperimentConfig::default()
    };
    cfg.data.source = Some(source);
    cfg.data.source_taxonomy = Some(source_tax);
    cfg.data.target_train = Some(train);
    cfg.data.target_test = Some(test);
    cfg.data.target_taxonomy = Some(tax);
    cfg.data.static_vectors = Some(vectors);
    write(
        "experiment.cfg",
        format!("# synthetic word-family task, seed {seed}\n{}", render_entries(&cfg.entries())),
    )?;
    Ok(())
}
