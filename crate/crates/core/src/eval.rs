//! Entity-level micro F1 with exact type and boundary matching, and
//! multi-run aggregation.

use std::collections::HashSet;
use std::fmt;

use crate::corpus::{extract_spans, repair_bio, Dataset, EntitySpan, LabelTaxonomy, Tag};
use crate::error::{Error, Result};
use crate::matcher::Predictor;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Prf {
    /// Scores from counts; every 0/0 is 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

fn check_aligned(gold: usize, pred: usize) -> Result<()> {
    if gold != pred {
        return Err(Error::InvalidArgument(format!(
            "{gold} gold sentences but {pred} predicted"
        )));
    }
    Ok(())
}

fn count<F: Fn(&EntitySpan) -> bool>(
    gold: &[Vec<EntitySpan>],
    pred: &[Vec<EntitySpan>],
    keep: F,
) -> (usize, usize, usize) {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let g: HashSet<&EntitySpan> = g.iter().filter(|s| keep(s)).collect();
        let p: HashSet<&EntitySpan> = p.iter().filter(|s| keep(s)).collect();
        let hit = p.intersection(&g).count();
        tp += hit;
        fp += p.len() - hit;
        fn_ += g.len() - hit;
    }
    (tp, fp, fn_)
}

/// Pools exact `(type, start, end)` matches over all sentences.
pub fn micro_f1(gold: &[Vec<EntitySpan>], pred: &[Vec<EntitySpan>]) -> Result<Prf> {
    check_aligned(gold.len(), pred.len())?;
    let (tp, fp, fn_) = count(gold, pred, |_| true);
    Ok(Prf::from_counts(tp, fp, fn_))
}

/// Micro F1 restricted to each taxonomy type, in taxonomy order.
pub fn per_type_f1(
    gold: &[Vec<EntitySpan>],
    pred: &[Vec<EntitySpan>],
    taxonomy: &LabelTaxonomy,
) -> Result<Vec<(String, Prf)>> {
    check_aligned(gold.len(), pred.len())?;
    Ok(taxonomy
        .entity_types()
        .iter()
        .map(|e| {
            let (tp, fp, fn_) = count(gold, pred, |s| s.entity_type == e.original);
            (e.original.clone(), Prf::from_counts(tp, fp, fn_))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub micro: Prf,
    pub per_type: Vec<(String, Prf)>,
    /// Orphan `I-X` tags rewritten before scoring.
    pub violations: usize,
    pub sentences: usize,
}

/// Scores predicted tag sequences against gold ones: predictions are
/// repaired, both sides decoded to spans, then matched.
pub fn score_tag_sequences(
    gold: &[Vec<Tag>],
    pred: &[Vec<Tag>],
    taxonomy: &LabelTaxonomy,
) -> Result<EvalReport> {
    check_aligned(gold.len(), pred.len())?;
    let mut violations = 0;
    let mut pred_spans = Vec::with_capacity(pred.len());
    let mut gold_spans = Vec::with_capacity(gold.len());
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != p.len() {
            return Err(Error::InvalidArgument(format!(
                "sentence has {} gold tags but {} predicted",
                g.len(),
                p.len()
            )));
        }
        let (fixed, v) = repair_bio(p);
        violations += v;
        pred_spans.push(extract_spans(&fixed));
        gold_spans.push(extract_spans(g));
    }
    Ok(EvalReport {
        micro: micro_f1(&gold_spans, &pred_spans)?,
        per_type: per_type_f1(&gold_spans, &pred_spans, taxonomy)?,
        violations,
        sentences: gold.len(),
    })
}

/// Predicts every sentence of `d` and scores it against the gold tags.
/// The predictor's label list must cover exactly `d`'s entity types.
pub fn evaluate_dataset(p: &Predictor<'_>, d: &Dataset) -> Result<(EvalReport, Vec<Vec<Tag>>)> {
    let ours: Vec<&str> = p.taxonomy().entity_types().iter().map(|e| e.original.as_str()).collect();
    let theirs: Vec<&str> = d.taxonomy.entity_types().iter().map(|e| e.original.as_str()).collect();
    if ours != theirs {
        return Err(Error::Taxonomy(format!(
            "labels {} do not match dataset taxonomy {}",
            p.taxonomy(),
            d.taxonomy
        )));
    }
    let pred = d
        .sentences
        .iter()
        .map(|s| p.predict(&s.tokens))
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<Vec<Tag>> = d.sentences.iter().map(|s| s.tags.clone()).collect();
    Ok((score_tag_sequences(&gold, &pred, &d.taxonomy)?, pred))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single run.
    pub std: f64,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

pub fn aggregate_runs(scores: &[f64]) -> Result<RunSummary> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("no runs to aggregate".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = if scores.len() < 2 {
        0.0
    } else {
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(RunSummary {
        scores: scores.to_vec(),
        mean,
        std,
    })
}
