//! Acceptance checks, one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lsner_cli::commands::{
    cmd_cache_labels, cmd_eval, cmd_predict, cmd_sample, cmd_synth, cmd_train, find_checkpoints,
    MANIFEST_FILE,
};
use lsner_cli::config::ExperimentConfig;
use lsner_cli::experiment::{desk_model_config, desk_training_config, run_condition, Condition, Target};
use lsner_core::corpus::{
    extract_spans, repair_bio, Dataset, DatasetRole, LabelTaxonomy, RenameMode,
    Sentence, Tag,
};
use lsner_core::eval::micro_f1;
use lsner_core::matcher::{
    build_label_cache, model_vocabulary, read_label_cache, write_checkpoint, ModelConfig, ModelState,
};
use lsner_core::numeric::{argmax, check_gradients, softmax_rows, RealMatrix};
use lsner_core::sampler::{sample_support, verify_kshot, SupportSet, Verdict};
use lsner_core::synthetic::{SyntheticConfig, SyntheticTask};
use lsner_core::encoders::LabelRepresentationScheme;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(lines: &mut Vec<Line>, id: usize, name: &'static str, pass: bool, detail: String) {
    println!("criterion {id:>2} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    lines.push(Line { id, name, pass, detail });
}

// ---------- corpora for the sampler checks ----------

/// Well-formed random corpus; every type gets at least `k` mentions.
fn random_corpus(rng: &mut ChaCha8Rng, n_types: usize, n_sent: usize, k: usize) -> Dataset {
    let types: Vec<String> = (0..n_types).map(|i| format!("T{i}")).collect();
    loop {
        let sentences: Vec<Sentence> = (0..n_sent)
            .map(|_| {
                let len = rng.random_range(1..=8);
                let mut tags = Vec::with_capacity(len);
                while tags.len() < len {
                    if rng.random_bool(0.6) {
                        tags.push(Tag::Outside);
                        continue;
                    }
                    let ty = types[rng.random_range(0..n_types)].clone();
                    let m = rng.random_range(1..=3).min(len - tags.len());
                    tags.push(Tag::Begin(ty.clone()));
                    for _ in 1..m {
                        tags.push(Tag::Inside(ty.clone()));
                    }
                }
                let tokens = (0..len).map(|i| format!("w{i}")).collect();
                Sentence::new(tokens, tags).unwrap()
            })
            .collect();
        let counts = oracle_counts(sentences.iter(), &types);
        if counts.iter().all(|&c| c >= k) {
            let tax = LabelTaxonomy::from_types(&types).unwrap();
            return Dataset::new("random", sentences, tax, DatasetRole::Target).unwrap();
        }
    }
}

/// Mentions per type, counted as `B-` tags (the corpora are well formed).
fn oracle_counts<'a>(sentences: impl Iterator<Item = &'a Sentence>, types: &[String]) -> Vec<usize> {
    let mut c = vec![0; types.len()];
    for s in sentences {
        for t in &s.tags {
            if let Tag::Begin(ty) = t {
                c[types.iter().position(|x| x == ty).unwrap()] += 1;
            }
        }
    }
    c
}

fn type_names(d: &Dataset) -> Vec<String> {
    d.taxonomy.entity_types().iter().map(|e| e.original.clone()).collect()
}

fn satisfies_both(d: &Dataset, idx: &[usize], k: usize) -> bool {
    let types = type_names(d);
    let c1 = |set: &[usize]| oracle_counts(set.iter().map(|&i| &d.sentences[i]), &types).iter().all(|&c| c >= k);
    if !c1(idx) {
        return false;
    }
    (0..idx.len()).all(|drop| {
        let rest: Vec<usize> = idx.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &i)| i).collect();
        !c1(&rest)
    })
}

fn criterion_1(lines: &mut Vec<Line>) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for _ in 0..1000 {
        let n_types = rng.random_range(3..=6);
        let n_sent = rng.random_range(20..=200);
        let k = *[1, 2, 5].choose(&mut rng).unwrap();
        let d = random_corpus(&mut rng, n_types, n_sent, k);
        let s = sample_support(&d, k, &mut rng).unwrap();
        let ok = verify_kshot(&d, &s, k).unwrap() == Verdict::Ok && satisfies_both(&d, &s.indices, k);
        failures += usize::from(!ok);
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        lines,
        1,
        "sampler correctness",
        failures == 0 && secs < 10.0,
        format!("1000 corpora, {failures} failures, {secs:.2} s (limit 10 s)"),
    );
}

fn criterion_2(lines: &mut Vec<Line>) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut disagreements = 0;
    let corpora = 60;
    for _ in 0..corpora {
        let n_sent = rng.random_range(4..=12);
        let k = rng.random_range(1..=2);
        let n_types = rng.random_range(2..=3);
        let d = random_corpus(&mut rng, n_types, n_sent, k);
        let valid: BTreeSet<Vec<usize>> = (0u32..1 << n_sent)
            .map(|mask| (0..n_sent).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|idx| satisfies_both(&d, idx, k))
            .collect();
        let s: SupportSet = sample_support(&d, k, &mut rng).unwrap();
        let mut idx = s.indices.clone();
        idx.sort_unstable();
        disagreements += usize::from(!valid.contains(&idx));
    }
    report(
        lines,
        2,
        "sampler vs exhaustive oracle",
        disagreements == 0,
        format!("{corpora} corpora of <= 12 sentences, {disagreements} disagreements"),
    );
}

fn criterion_3(lines: &mut Vec<Line>) {
    let start = Instant::now();
    let task = SyntheticTask::generate(&SyntheticConfig { source_sentences: 20, ..SyntheticConfig::default() }).unwrap();
    let vocab = model_vocabulary(&[&task.source.sentences], &[&task.source.taxonomy], None, 1, true);
    let (mut m, _) = ModelState::init(ModelConfig::default(), vocab, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    m.set_labels(&task.source.taxonomy, &LabelRepresentationScheme::NameOnly, None, &mut rng).unwrap();
    let batch: Vec<&Sentence> = task.source.sentences.iter().filter(|s| s.has_annotation()).take(2).collect();
    let mut store = std::mem::take(&mut m.store);
    let r = check_gradients(&mut store, 1e-5, 200, &mut rng, |s, g| m.batch_loss_with(s, &batch, g)).unwrap();
    let min_coords = r.coordinates.iter().map(|(_, n)| *n).min().unwrap_or(0);
    let full = r.coordinates.iter().all(|(name, n)| *n >= 200 || store.get(store.id(name).unwrap()).values.data().len() == *n);
    let secs = start.elapsed().as_secs_f64();
    report(
        lines,
        3,
        "gradient fidelity",
        r.max_relative_error < 1e-4 && full && secs < 60.0,
        format!(
            "max relative error {:.2e} (limit 1e-4) over {} groups, >= {min_coords} coordinates each, {secs:.2} s",
            r.max_relative_error,
            r.coordinates.len()
        ),
    );
}

fn criterion_4(lines: &mut Vec<Line>) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    let mut ties = 0;
    for i in 0..10_000 {
        let rows = rng.random_range(1..=6);
        let cols = rng.random_range(1..=9);
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| if i % 2 == 0 { rng.random_range(-2..=2) as f64 } else { rng.random_range(-30.0..30.0) })
            .collect();
        let logits = RealMatrix::new(rows, cols, data).unwrap();
        let probs = softmax_rows(&logits).unwrap();
        for r in 0..rows {
            let row = logits.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let first = row.iter().position(|&v| v == max).unwrap();
            ties += usize::from(row.iter().filter(|&&v| v == max).count() > 1);
            if argmax(row) != first || argmax(probs.row(r)) != first {
                mismatches += 1;
            }
        }
    }
    report(
        lines,
        4,
        "argmax equivalence",
        mismatches == 0,
        format!("10000 matrices, {ties} tied rows, {mismatches} mismatches"),
    );
}

fn criterion_5(lines: &mut Vec<Line>, dir: &Path) {
    let task = SyntheticTask::generate(&SyntheticConfig { source_sentences: 50, ..SyntheticConfig::default() }).unwrap();
    let vocab = model_vocabulary(
        &[&task.source.sentences],
        &[&task.source.taxonomy],
        Some(&task.static_vectors),
        1,
        true,
    );
    let (mut m, _) = ModelState::init(desk_model_config(), vocab, Some(&task.static_vectors)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    m.set_labels(&task.source.taxonomy, &LabelRepresentationScheme::NameOnly, None, &mut rng).unwrap();
    let ckpt = dir.join("c5.ckpt");
    write_checkpoint(std::fs::File::create(&ckpt).unwrap(), &m).unwrap();

    let words: Vec<&String> = m.vocab.tokens().iter().collect();
    let mut input = String::new();
    for _ in 0..100 {
        for _ in 0..rng.random_range(1..=12) {
            let w = if rng.random_bool(0.1) { "never-seen" } else { words[rng.random_range(0..words.len())] };
            input.push_str(w);
            input.push('\n');
        }
        input.push('\n');
    }
    let inp = dir.join("c5.tokens");
    std::fs::write(&inp, input).unwrap();
    let (plain, viacache) = (dir.join("c5.plain"), dir.join("c5.cached"));
    let cache = dir.join("c5.cache");
    cmd_predict(&ckpt, &inp, &plain, None, None).unwrap();
    cmd_cache_labels(&ckpt, &cache, None).unwrap();
    cmd_predict(&ckpt, &inp, &viacache, Some(&cache), None).unwrap();
    let identical = std::fs::read(&plain).unwrap() == std::fs::read(&viacache).unwrap();

    let mut rows_ok = 0;
    for t in 0..10 {
        let n = rng.random_range(1..=8);
        let types: Vec<(String, String)> = (0..n).map(|i| (format!("R{t}_{i}"), format!("name {i}"))).collect();
        let tax = LabelTaxonomy::new(types).unwrap();
        m.set_labels(&tax, &LabelRepresentationScheme::NameOnly, None, &mut rng).unwrap();
        let c = build_label_cache(&m, Vec::new()).unwrap();
        let path = dir.join(format!("c5.tax{t}"));
        std::fs::write(&path, tax.to_file_string()).unwrap();
        let file_cache = dir.join(format!("c5.cache{t}"));
        cmd_cache_labels(&ckpt, &file_cache, Some(&path)).unwrap();
        let back = read_label_cache(std::fs::File::open(&file_cache).unwrap()).unwrap();
        rows_ok += usize::from(c.matrix.rows() == 2 * (n + 1) - 1 && back.matrix.rows() == 2 * (n + 1) - 1);
    }
    report(
        lines,
        5,
        "cache equivalence",
        identical && rows_ok == 10,
        format!("100 sentences byte-identical: {identical}; row count 2·N_L−1 for {rows_ok}/10 taxonomies"),
    );
}

/// Spans by definition: `[s, e)` of type X is a chunk when position `s`
/// opens X (a `B-X`, or an `I-X` not preceded by a tag of type X), every
/// later position is `I-X`, and position `e` does not continue it.
fn brute_spans(tags: &[Tag]) -> BTreeSet<(usize, usize, String)> {
    let ty = |t: &Tag| t.entity_type().map(str::to_string);
    let mut out = BTreeSet::new();
    for s in 0..tags.len() {
        let Some(x) = ty(&tags[s]) else { continue };
        let opens = matches!(tags[s], Tag::Begin(_)) || s == 0 || ty(&tags[s - 1]).as_deref() != Some(x.as_str());
        if !opens {
            continue;
        }
        for e in s + 1..=tags.len() {
            let inner = tags[s + 1..e].iter().all(|t| *t == Tag::Inside(x.clone()));
            let closed = e == tags.len() || tags[e] != Tag::Inside(x.clone());
            if inner && closed {
                out.insert((s, e, x.clone()));
            }
        }
    }
    out
}

fn criterion_6(lines: &mut Vec<Line>) {
    let start = Instant::now();
    let alphabet = [
        Tag::Outside,
        Tag::Begin("X".into()),
        Tag::Inside("X".into()),
        Tag::Begin("Y".into()),
        Tag::Inside("Y".into()),
    ];
    let mut mismatches = 0usize;
    let mut pairs = 0usize;
    for len in 0..=5u32 {
        let n = 5usize.pow(len);
        let seqs: Vec<Vec<Tag>> = (0..n)
            .map(|mut code| {
                (0..len)
                    .map(|_| {
                        let t = alphabet[code % 5].clone();
                        code /= 5;
                        t
                    })
                    .collect()
            })
            .collect();
        let brute: Vec<BTreeSet<(usize, usize, String)>> = seqs.iter().map(|s| brute_spans(s)).collect();
        let preds: Vec<_> = seqs.iter().map(|s| vec![extract_spans(&repair_bio(s).0)]).collect();
        let bad: usize = (0..n)
            .into_par_iter()
            .map(|g| {
                let mut bad = 0;
                let gold = vec![extract_spans(&seqs[g])];
                for (p, pred) in preds.iter().enumerate() {
                    let got = micro_f1(&gold, pred).unwrap();
                    let tp = brute[g].intersection(&brute[p]).count();
                    let (np, ng) = (brute[p].len(), brute[g].len());
                    let f1 = if np + ng == 0 { 0.0 } else { 2.0 * tp as f64 / (np + ng) as f64 };
                    if got.tp != tp || got.fp != np - tp || got.fn_ != ng - tp || (got.f1 - f1).abs() > 1e-12 {
                        bad += 1;
                    }
                }
                bad
            })
            .sum();
        mismatches += bad;
        pairs += n * n;
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        lines,
        6,
        "BIO/F1 oracle",
        mismatches == 0 && secs < 30.0,
        format!("{pairs} pairs, {mismatches} mismatches, {secs:.2} s (limit 30 s)"),
    );
}

// ---------- learning criteria ----------

const SEEDS: u64 = 10;

fn f1_runs(task: &SyntheticTask, cond: &Condition) -> Vec<f64> {
    let (m, t) = (desk_model_config(), desk_training_config());
    (0..SEEDS)
        .into_par_iter()
        .map(|s| 100.0 * run_condition(task, &m, &t, cond, s).unwrap())
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cond(target: Target, k: usize, rename: RenameMode, prefinetune: bool, zero_shot: bool) -> Condition {
    Condition { target, k, rename, prefinetune, zero_shot }
}

fn criteria_7_to_10(lines: &mut Vec<Line>) {
    let task = SyntheticTask::generate(&SyntheticConfig::default()).unwrap();
    let orig = RenameMode::Original;

    let start = Instant::now();
    let k5 = f1_runs(&task, &cond(Target::Unseen, 5, orig.clone(), true, false));
    let secs = start.elapsed().as_secs_f64();
    report(
        lines,
        7,
        "desk-scale learning",
        mean(&k5) >= 90.0 && secs < 180.0,
        format!("K=5 mean F1 {:.2} (need >= 90) over {SEEDS} seeds, {secs:.1} s (limit 180 s)", mean(&k5)),
    );

    let k1 = f1_runs(&task, &cond(Target::Unseen, 1, orig.clone(), true, false));
    let k1_meaningless = f1_runs(&task, &cond(Target::Unseen, 1, RenameMode::Meaningless, true, false));
    let k50 = f1_runs(&task, &cond(Target::Unseen, 50, orig.clone(), true, false));
    let k50_meaningless = f1_runs(&task, &cond(Target::Unseen, 50, RenameMode::Meaningless, true, false));
    let gap1 = mean(&k1) - mean(&k1_meaningless);
    let gap50 = mean(&k50) - mean(&k50_meaningless);
    report(
        lines,
        8,
        "label-semantics directionality",
        gap1 > 0.0 && gap50.abs() <= 2.0,
        format!(
            "1-shot original {:.2} vs meaningless {:.2} (gap {gap1:+.2}, need > 0); 50-shot {:.2} vs {:.2} (gap {gap50:+.2}, need |gap| <= 2)",
            mean(&k1),
            mean(&k1_meaningless),
            mean(&k50),
            mean(&k50_meaningless)
        ),
    );

    let k1_scratch = f1_runs(&task, &cond(Target::Unseen, 1, orig.clone(), false, false));
    let gap = mean(&k1) - mean(&k1_scratch);
    report(
        lines,
        9,
        "pre-finetuning directionality",
        gap > 5.0,
        format!(
            "1-shot with stage 1 {:.2} vs without {:.2} (gap {gap:+.2}, need > 5)",
            mean(&k1),
            mean(&k1_scratch)
        ),
    );

    let syn = task.synonyms(&task.source.taxonomy);
    let zero = f1_runs(&task, &cond(Target::Heldout, 0, syn.clone(), true, true));
    let one = f1_runs(&task, &cond(Target::Heldout, 1, syn, true, false));
    let diff = mean(&zero) - mean(&one);
    report(
        lines,
        10,
        "zero-shot renaming",
        diff.abs() <= 10.0,
        format!(
            "held-out source-type test set, labels renamed to family synonyms: zero-shot {:.2} vs 1-shot {:.2} (diff {diff:+.2}, need |diff| <= 10)",
            mean(&zero),
            mean(&one)
        ),
    );
    let control = f1_runs(&task, &cond(Target::Heldout, 0, RenameMode::Meaningless, true, true));
    let unseen = f1_runs(&task, &cond(Target::Unseen, 0, task.synonyms(&task.target_test.taxonomy), true, true));
    println!(
        "   info: zero-shot with meaningless names {:.2}; zero-shot on the unseen target families under synonyms {:.2}",
        mean(&control),
        mean(&unseen)
    );
}

// ---------- determinism ----------

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out
}

fn criterion_11(lines: &mut Vec<Line>, dir: &Path) {
    let syn = dir.join("syn");
    cmd_synth(&syn, 0).unwrap();
    let base = ExperimentConfig::load(
        Some(&syn.join("experiment.cfg")),
        &[("experiment.k".into(), "1,2".into()), ("experiment.repeats".into(), "2".into())],
    )
    .unwrap();
    let zero = ExperimentConfig::load(
        Some(&syn.join("experiment.cfg")),
        &[
            ("experiment.repeats".into(), "2".into()),
            ("experiment.zero_shot".into(), "true".into()),
            ("data.target_train".into(), syn.join("heldout_train.conll").display().to_string()),
            ("data.target_test".into(), syn.join("heldout_test.conll").display().to_string()),
            ("data.target_taxonomy".into(), syn.join("source.taxonomy").display().to_string()),
            ("experiment.rename".into(), format!("map:{}", syn.join("source_synonyms.tsv").display())),
        ],
    )
    .unwrap();

    let mut checked = Vec::new();
    let mut all_same = true;
    let mut rerun = |name: &str, first: &Path, f: &dyn Fn(&ExperimentConfig, &Path)| {
        let again = dir.join(format!("{name}-again"));
        let cfg = ExperimentConfig::load(Some(&first.join(MANIFEST_FILE)), &[]).unwrap();
        f(&cfg, &again);
        let same = tree(first) == tree(&again);
        all_same &= same;
        checked.push(format!("{name}={}", if same { "same" } else { "DIFFERENT" }));
    };

    let sample = |c: &ExperimentConfig, out: &Path| assert_eq!(cmd_sample(c, out).unwrap().failed, 0);
    let train = |c: &ExperimentConfig, out: &Path| assert_eq!(cmd_train(c, out).unwrap().failed, 0);
    let s1 = dir.join("sample");
    sample(&base, &s1);
    rerun("sample", &s1, &sample);
    let t1 = dir.join("train");
    train(&base, &t1);
    rerun("train", &t1, &train);
    let z1 = dir.join("zero-train");
    train(&zero, &z1);
    rerun("zero-train", &z1, &train);

    let runs = find_checkpoints(&t1).unwrap();
    let eval = move |c: &ExperimentConfig, out: &Path| assert_eq!(cmd_eval(c, out, &runs).unwrap().failed, 0);
    let e1 = dir.join("eval");
    eval(&base, &e1);
    rerun("eval", &e1, &eval);
    let zruns = find_checkpoints(&z1).unwrap();
    let zeval = move |c: &ExperimentConfig, out: &Path| assert_eq!(cmd_eval(c, out, &zruns).unwrap().failed, 0);
    let ze = dir.join("zero-eval");
    zeval(&zero, &ze);
    rerun("zero-eval", &ze, &zeval);

    let ckpt = &find_checkpoints(&t1).unwrap()[0];
    let input = syn.join("target_test.conll");
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let (p, c) = (dir.join(format!("pred{i}")), dir.join(format!("cache{i}")));
            cmd_predict(ckpt, &input, &p, None, Some(&c)).unwrap();
            [std::fs::read(p).unwrap(), std::fs::read(c).unwrap()].concat()
        })
        .collect();
    let same = outs[0] == outs[1];
    all_same &= same;
    checked.push(format!("predict+cache={}", if same { "same" } else { "DIFFERENT" }));

    report(lines, 11, "determinism", all_same, checked.join(", "));
}

fn main() {
    // Allow `cargo test -- <filter>` style invocations to skip this target.
    if std::env::args().skip(1).any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str())) {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    criterion_1(&mut lines);
    criterion_2(&mut lines);
    criterion_3(&mut lines);
    criterion_4(&mut lines);
    criterion_5(&mut lines, dir.path());
    criterion_6(&mut lines);
    criteria_7_to_10(&mut lines);
    criterion_11(&mut lines, dir.path());
    lines.sort_by_key(|l| l.id);
    let failed: Vec<String> = lines.iter().filter(|l| !l.pass).map(|l| format!("{} ({})", l.id, l.name)).collect();
    println!("acceptance: {} of {} criteria pass", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        for l in lines.iter().filter(|l| !l.pass) {
            eprintln!("failed criterion {}: {}", l.id, l.detail);
        }
        std::process::exit(1);
    }
}
