//! K-shot support-set sampling and verification.
//!
//! A support set satisfies two criteria: every entity type has at least K
//! entity occurrences (criterion 1), and removing any single sentence
//! breaks criterion 1 for some type (criterion 2). Occurrences are counted
//! at span level, so a multi-token entity counts once.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::corpus::{extract_spans, Dataset, LabelTaxonomy, Sentence};
use crate::error::{Error, Result};

/// Entity occurrence counts per type, in taxonomy order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotCounts {
    entries: Vec<(String, usize)>,
}

impl ShotCounts {
    pub fn entries(&self) -> &[(String, usize)] {
        &self.entries
    }

    pub fn get(&self, entity_type: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|(t, _)| t == entity_type)
            .map(|&(_, c)| c)
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|&(_, c)| c).sum()
    }
}

impl fmt::Display for ShotCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|(t, c)| format!("{t}:{c}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn per_sentence_counts(s: &Sentence, taxonomy: &LabelTaxonomy) -> Vec<usize> {
    let mut counts = vec![0; taxonomy.entity_types().len()];
    for span in extract_spans(&s.tags) {
        if let Some(k) = taxonomy.type_index(&span.entity_type) {
            counts[k] += 1;
        }
    }
    counts
}

fn wrap_counts(taxonomy: &LabelTaxonomy, counts: Vec<usize>) -> ShotCounts {
    ShotCounts {
        entries: taxonomy
            .entity_types()
            .iter()
            .map(|e| e.original.clone())
            .zip(counts)
            .collect(),
    }
}

/// Span-level occurrence count of every taxonomy type.
pub fn count_entity_occurrences<'a, I>(sentences: I, taxonomy: &LabelTaxonomy) -> ShotCounts
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut totals = vec![0; taxonomy.entity_types().len()];
    for s in sentences {
        for (t, c) in totals.iter_mut().zip(per_sentence_counts(s, taxonomy)) {
            *t += c;
        }
    }
    wrap_counts(taxonomy, totals)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    pub shot: usize,
    /// Indices into the parent dataset, in insertion order.
    pub indices: Vec<usize>,
    pub counts: ShotCounts,
}

impl SupportSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The support sentences as a dataset sharing the parent's taxonomy.
    pub fn dataset(&self, parent: &Dataset) -> Result<Dataset> {
        parent.subset(&self.indices)
    }
}

/// Greedy sampling followed by a pruning pass.
///
/// Phase 1 visits types in taxonomy order and, while a type has fewer than
/// `k` occurrences, adds a uniformly chosen unused sentence containing it.
/// Phase 2 walks the chosen sentences in insertion order and drops each one
/// whose removal keeps every type at `k` or more.
pub fn sample_support<R: Rng + ?Sized>(d: &Dataset, k: usize, rng: &mut R) -> Result<SupportSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let tax = &d.taxonomy;
    let n_types = tax.entity_types().len();
    let per: Vec<Vec<usize>> = d.sentences.iter().map(|s| per_sentence_counts(s, tax)).collect();

    for (j, e) in tax.entity_types().iter().enumerate() {
        let available: usize = per.iter().map(|c| c[j]).sum();
        if available < k {
            return Err(Error::InsufficientEntities {
                label: e.original.clone(),
                available,
                required: k,
            });
        }
    }

    let mut used = vec![false; d.len()];
    let mut support = Vec::new();
    let mut counts = vec![0usize; n_types];
    for j in 0..n_types {
        while counts[j] < k {
            let eligible: Vec<usize> = (0..d.len()).filter(|&i| !used[i] && per[i][j] > 0).collect();
            let pick = eligible[rng.random_range(0..eligible.len())];
            used[pick] = true;
            support.push(pick);
            for (c, add) in counts.iter_mut().zip(&per[pick]) {
                *c += add;
            }
        }
    }

    let mut kept = Vec::with_capacity(support.len());
    for &i in &support {
        let removable = counts.iter().zip(&per[i]).all(|(&c, &s)| c - s >= k);
        if removable {
            for (c, s) in counts.iter_mut().zip(&per[i]) {
                *c -= s;
            }
        } else {
            kept.push(i);
        }
    }

    Ok(SupportSet {
        shot: k,
        indices: kept,
        counts: wrap_counts(tax, counts),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    /// A type has fewer than K occurrences.
    Criterion1Failed { label: String },
    /// The sentence at this dataset index can be removed without breaking
    /// criterion 1.
    Criterion2Failed { sentence: usize },
}

/// Checks both criteria from the dataset, ignoring the stored counts.
pub fn verify_kshot(d: &Dataset, s: &SupportSet, k: usize) -> Result<Verdict> {
    verify_indices(d, &s.indices, k)
}

pub fn verify_indices(d: &Dataset, indices: &[usize], k: usize) -> Result<Verdict> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= d.len()) {
        return Err(Error::InvalidArgument(format!(
            "support index {bad} out of range for {} sentences",
            d.len()
        )));
    }
    let tax = &d.taxonomy;
    let counts = count_entity_occurrences(indices.iter().map(|&i| &d.sentences[i]), tax);
    if let Some((label, _)) = counts.entries().iter().find(|&&(_, c)| c < k) {
        return Ok(Verdict::Criterion1Failed { label: label.clone() });
    }
    for (pos, &i) in indices.iter().enumerate() {
        let rest = indices
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != pos)
            .map(|(_, &j)| &d.sentences[j]);
        let without = count_entity_occurrences(rest, tax);
        if without.entries().iter().all(|&(_, c)| c >= k) {
            return Ok(Verdict::Criterion2Failed { sentence: i });
        }
    }
    Ok(Verdict::Ok)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportHeader {
    pub dataset: String,
    pub shot: usize,
    pub seed: u64,
}

/// Writes a support set as a small header followed by one index per line.
pub fn write_support_set<W: Write>(mut w: W, header: &SupportHeader, s: &SupportSet) -> Result<()> {
    writeln!(w, "# support set")?;
    writeln!(w, "dataset = {}", header.dataset)?;
    writeln!(w, "k = {}", header.shot)?;
    writeln!(w, "seed = {}", header.seed)?;
    writeln!(w, "counts = {}", s.counts)?;
    writeln!(w, "sentences = {}", s.indices.len())?;
    for i in &s.indices {
        writeln!(w, "{i}")?;
    }
    Ok(())
}

/// Reads a support set written by [`write_support_set`]. Counts are
/// recomputed from `parent`.
pub fn read_support_set<R: BufRead>(r: R, parent: &Dataset) -> Result<(SupportHeader, SupportSet)> {
    let mut dataset = None;
    let mut shot = None;
    let mut seed = None;
    let mut expected = None;
    let mut indices = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: n + 1,
            column: 1,
            message,
        };
        if let Some((key, value)) = t.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "dataset" => dataset = Some(value.to_string()),
                "k" => shot = Some(value.parse().map_err(|e| err(format!("bad k: {e}")))?),
                "seed" => seed = Some(value.parse().map_err(|e| err(format!("bad seed: {e}")))?),
                "sentences" => {
                    expected = Some(value.parse::<usize>().map_err(|e| err(format!("bad count: {e}")))?)
                }
                "counts" => {}
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        } else {
            let i: usize = t.parse().map_err(|e| err(format!("bad index `{t}`: {e}")))?;
            if i >= parent.len() {
                return Err(err(format!("index {i} out of range")));
            }
            indices.push(i);
        }
    }
    let missing = |what: &str| Error::Format(format!("support file missing `{what}`"));
    let header = SupportHeader {
        dataset: dataset.ok_or_else(|| missing("dataset"))?,
        shot: shot.ok_or_else(|| missing("k"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
    };
    if expected.is_some_and(|e| e != indices.len()) {
        return Err(Error::Format(format!(
            "support file declares {} sentences but lists {}",
            expected.unwrap_or(0),
            indices.len()
        )));
    }
    let counts = count_entity_occurrences(indices.iter().map(|&i| &parent.sentences[i]), &parent.taxonomy);
    Ok((
        header.clone(),
        SupportSet {
            shot: header.shot,
            indices,
            counts,
        },
    ))
}
