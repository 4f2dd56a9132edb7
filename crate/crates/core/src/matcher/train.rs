use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, Sentence};
use crate::encoders::LabelRepresentationScheme;
use crate::error::{Error, Result};
use crate::numeric::{Adam, Tape};

use super::config::TrainingConfig;
use super::model::ModelState;

#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    pub dataset: String,
    pub epochs: usize,
    /// Token-weighted mean loss of each epoch, measured during the epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

/// Trains both encoders on `d` for `epochs` passes of shuffled mini-batches.
/// The label list is first rebuilt from `d`'s taxonomy; contextual schemes
/// take their context sentences from `d` and keep them for the stage.
pub fn train_stage<R: Rng + ?Sized>(
    m: &mut ModelState,
    d: &Dataset,
    c: &TrainingConfig,
    epochs: usize,
    rng: &mut R,
) -> Result<StageReport> {
    c.validate()?;
    if d.is_empty() || d.num_tokens() == 0 {
        return Err(Error::EmptyInput(format!("training set `{}` is empty", d.name)));
    }
    let support = c.scheme.is_contextual().then_some(d.sentences.as_slice());
    m.set_labels(&d.taxonomy, &c.scheme, support, rng)?;
    for s in &d.sentences {
        m.gold_indices(s)?;
    }

    let mut store = std::mem::take(&mut m.store);
    let result = run_epochs(m, &mut store, &d.sentences, c, epochs, rng);
    m.store = store;
    let (epoch_losses, steps) = result?;
    Ok(StageReport {
        dataset: d.name.clone(),
        epochs,
        epoch_losses,
        steps,
    })
}

fn run_epochs<R: Rng + ?Sized>(
    m: &ModelState,
    store: &mut crate::numeric::ParamStore,
    sentences: &[Sentence],
    c: &TrainingConfig,
    epochs: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, u64)> {
    let mut adam = Adam::new(store, c.learning_rate);
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut losses = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut weighted = 0.0;
        let mut tokens = 0usize;
        for chunk in order.chunks(c.batch_size) {
            let batch: Vec<&Sentence> = chunk.iter().map(|&i| &sentences[i]).collect();
            let n: usize = batch.iter().map(|s| s.len()).sum();
            if n == 0 {
                continue;
            }
            let mut tape = Tape::new();
            let loss = m.record_batch_loss(&mut tape, store, &batch)?;
            let value = tape.scalar(loss);
            if !value.is_finite() {
                return Err(Error::NonFinite { op: "training loss", row: 0 });
            }
            tape.backward(loss, store)?;
            adam.step(store);
            weighted += value * n as f64;
            tokens += n;
        }
        losses.push(weighted / tokens as f64);
    }
    Ok((losses, adam.steps_taken()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoStageReport {
    pub stages: Vec<StageReport>,
    /// Parameter digests at the stage boundary, before and after the label
    /// list is rebuilt for the target.
    pub boundary_digests: Option<(Vec<(String, String)>, Vec<(String, String)>)>,
}

/// Stage 1 on `source` (skipped when `None`), then stage 2 on the target
/// support set. Every parameter carries over between stages; only the
/// label list changes. Randomness comes from `c.seed`.
pub fn run_two_stage(
    m: &mut ModelState,
    source: Option<&Dataset>,
    support: &Dataset,
    c: &TrainingConfig,
) -> Result<TwoStageReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut stages = Vec::new();
    let mut boundary = None;
    if let Some(src) = source {
        stages.push(train_stage(m, src, c, c.prefinetune_epochs, &mut rng)?);
        let before = m.digests();
        let scheme_support = c.scheme.is_contextual().then_some(support.sentences.as_slice());
        m.set_labels(&support.taxonomy, &c.scheme, scheme_support, &mut ChaCha8Rng::seed_from_u64(c.seed))?;
        boundary = Some((before, m.digests()));
    }
    stages.push(train_stage(m, support, c, c.finetune_epochs, &mut rng)?);
    Ok(TwoStageReport {
        stages,
        boundary_digests: boundary,
    })
}

/// Stage 1 only, then the label list switched to `target` by name. No
/// parameter is updated after stage 1.
pub fn zero_shot(
    m: &mut ModelState,
    source: &Dataset,
    target: &crate::corpus::LabelTaxonomy,
    c: &TrainingConfig,
) -> Result<StageReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let report = train_stage(m, source, c, c.prefinetune_epochs, &mut rng)?;
    m.set_labels(target, &LabelRepresentationScheme::NameOnly, None, &mut rng)?;
    Ok(report)
}
