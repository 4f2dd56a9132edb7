//! A separable word-family NER task with clustered static vectors.
//!
//! Every entity type owns a family of words. Entity mentions are runs of
//! one to three words from a single family; everything else is filler.
//! Each family also owns a name word and a synonym word that never occur
//! in text, so label names carry meaning only through the static vectors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{Dataset, DatasetRole, LabelTaxonomy, RenameMode, Sentence, Tag};
use crate::encoders::StaticVectors;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub source_types: usize,
    pub target_types: usize,
    pub words_per_family: usize,
    pub filler_words: usize,
    pub dim: usize,
    /// Standard deviation of word vectors around their family centroid,
    /// relative to the centroid scale.
    pub spread: f64,
    pub source_sentences: usize,
    /// Size of each sampling pool (target and held-out).
    pub target_train_sentences: usize,
    /// Size of each test set (target and held-out).
    pub test_sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub max_entity_len: usize,
    pub max_entities: usize,
    /// Fraction of sentences with no entity.
    pub empty_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            source_types: 3,
            target_types: 2,
            words_per_family: 20,
            filler_words: 90,
            dim: 32,
            spread: 0.3,
            source_sentences: 2000,
            target_train_sentences: 500,
            test_sentences: 500,
            min_len: 5,
            max_len: 14,
            max_entity_len: 3,
            max_entities: 3,
            empty_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Family {
    pub type_name: String,
    pub name_word: String,
    pub synonym: String,
    pub words: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SyntheticTask {
    pub families: Vec<Family>,
    pub filler: Vec<String>,
    pub source: Dataset,
    /// Pool the target support sets are sampled from.
    pub target_train: Dataset,
    pub target_test: Dataset,
    /// Fresh sentences over the source types: a second dataset whose
    /// types the source already covers.
    pub heldout_train: Dataset,
    pub heldout_test: Dataset,
    pub static_vectors: StaticVectors,
}

fn family_words(f: usize, n: usize) -> Family {
    let prefix = if f < 26 { char::from(b'a' + f as u8).to_string() } else { format!("f{f}") };
    Family {
        type_name: format!("T{f}"),
        name_word: format!("{prefix}name"),
        synonym: format!("{prefix}syn"),
        words: (0..n).map(|j| format!("{prefix}w{j:02}")).collect(),
    }
}

impl SyntheticTask {
    pub fn generate(c: &SyntheticConfig) -> Result<Self> {
        if c.source_types == 0 || c.target_types == 0 || c.words_per_family == 0 || c.filler_words == 0 {
            return Err(Error::InvalidArgument("synthetic task needs types, family words and filler".into()));
        }
        if c.min_len == 0 || c.min_len > c.max_len || c.max_entity_len == 0 || c.max_entities == 0 {
            return Err(Error::InvalidArgument("inconsistent synthetic sentence lengths".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let n_fam = c.source_types + c.target_types;
        let families: Vec<Family> = (0..n_fam).map(|f| family_words(f, c.words_per_family)).collect();
        let filler: Vec<String> = (0..c.filler_words).map(|j| format!("x{j:02}")).collect();

        let static_vectors = family_vectors(&families, &filler, c, &mut rng);

        let taxonomy = |range: std::ops::Range<usize>| {
            LabelTaxonomy::new(families[range].iter().map(|f| (f.type_name.clone(), f.name_word.clone())))
        };
        let src_tax = taxonomy(0..c.source_types)?;
        let tgt_tax = taxonomy(c.source_types..n_fam)?;
        let src_fams = &families[..c.source_types];
        let tgt_fams = &families[c.source_types..];

        let mut gen = |n: usize, fams: &[Family]| -> Vec<Sentence> {
            (0..n).map(|_| sentence(fams, &filler, c, &mut rng)).collect()
        };
        let source = gen(c.source_sentences, src_fams);
        let target_train = gen(c.target_train_sentences, tgt_fams);
        let target_test = gen(c.test_sentences, tgt_fams);
        let heldout_train = gen(c.target_train_sentences, src_fams);
        let heldout_test = gen(c.test_sentences, src_fams);
        Ok(Self {
            source: Dataset::new("synthetic-source", source, src_tax.clone(), DatasetRole::Source)?,
            target_train: Dataset::new("synthetic-target-train", target_train, tgt_tax.clone(), DatasetRole::Target)?,
            target_test: Dataset::new("synthetic-target-test", target_test, tgt_tax, DatasetRole::Target)?,
            heldout_train: Dataset::new("synthetic-heldout-train", heldout_train, src_tax.clone(), DatasetRole::Target)?,
            heldout_test: Dataset::new("synthetic-heldout-test", heldout_test, src_tax, DatasetRole::Target)?,
            families,
            filler,
            static_vectors,
        })
    }

    /// Maps each type of `t` to its family's synonym word.
    pub fn synonyms(&self, t: &LabelTaxonomy) -> RenameMode {
        let map: BTreeMap<String, String> = self
            .families
            .iter()
            .filter(|f| t.contains_type(&f.type_name))
            .map(|f| (f.type_name.clone(), f.synonym.clone()))
            .collect();
        RenameMode::Custom(map)
    }

    /// Static vectors in the text file format.
    pub fn static_vectors_text(&self) -> String {
        let mut out = String::new();
        for (w, v) in &self.static_vectors.entries {
            out.push_str(w);
            for x in v {
                let _ = write!(out, " {x:e}");
            }
            out.push('\n');
        }
        out
    }
}

fn family_vectors<R: Rng + ?Sized>(
    families: &[Family],
    filler: &[String],
    c: &SyntheticConfig,
    rng: &mut R,
) -> StaticVectors {
    let scale = 1.0 / (c.dim as f64).sqrt();
    let gaussian = |r: &mut R| -> f64 { StandardNormal.sample(r) };
    let mut entries = Vec::new();
    for f in families {
        let centroid: Vec<f64> = (0..c.dim).map(|_| gaussian(&mut *rng) * scale).collect();
        let words = f.words.iter().chain([&f.name_word, &f.synonym]);
        for w in words {
            let v = centroid.iter().map(|&m| m + gaussian(&mut *rng) * scale * c.spread).collect();
            entries.push((w.clone(), v));
        }
    }
    for w in filler {
        entries.push((w.clone(), (0..c.dim).map(|_| gaussian(&mut *rng) * scale).collect()));
    }
    StaticVectors { dim: c.dim, entries }
}

fn sentence<R: Rng + ?Sized>(fams: &[Family], filler: &[String], c: &SyntheticConfig, rng: &mut R) -> Sentence {
    let len = rng.random_range(c.min_len..=c.max_len);
    let mut tokens: Vec<String> = (0..len).map(|_| filler[rng.random_range(0..filler.len())].clone()).collect();
    let mut tags = vec![Tag::Outside; len];
    if rng.random::<f64>() < c.empty_rate {
        return Sentence { tokens, tags };
    }
    let wanted = rng.random_range(1..=c.max_entities);
    let mut placed = 0;
    // Rejection placement: mentions never touch, so every mention is
    // delimited by filler or a sentence edge.
    for _ in 0..20 {
        if placed == wanted {
            break;
        }
        let m = rng.random_range(1..=c.max_entity_len.min(len));
        let start = rng.random_range(0..=len - m);
        let lo = start.saturating_sub(1);
        let hi = (start + m + 1).min(len);
        if tags[lo..hi].iter().any(|t| *t != Tag::Outside) {
            continue;
        }
        let f = &fams[rng.random_range(0..fams.len())];
        for (i, slot) in (start..start + m).enumerate() {
            tokens[slot] = f.words[rng.random_range(0..f.words.len())].clone();
            tags[slot] = if i == 0 { Tag::Begin(f.type_name.clone()) } else { Tag::Inside(f.type_name.clone()) };
        }
        placed += 1;
    }
    Sentence { tokens, tags }
}
