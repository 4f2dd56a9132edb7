//! Single synthetic-task runs shared by the acceptance harness.

use lsner_core::corpus::{rename_taxonomy, RenameMode};
use lsner_core::eval::evaluate_dataset;
use lsner_core::matcher::{
    model_vocabulary, run_two_stage, zero_shot, ModelConfig, ModelState, Predictor, TrainingConfig,
};
use lsner_core::numeric::{ContextualizerKind, PoolStrategy};
use lsner_core::sampler::sample_support;
use lsner_core::synthetic::SyntheticTask;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Model settings used for the synthetic task. A window of one on the
/// token side lets a linear scorer see the previous token, which the
/// begin/inside decision needs; label names are mean-pooled so the name
/// word reaches the label vector from the first step.
pub fn desk_model_config() -> ModelConfig {
    ModelConfig {
        token_contextualizer: ContextualizerKind::WindowMixer { window: 1 },
        label_contextualizer: ContextualizerKind::Identity,
        label_pool: Some(PoolStrategy::Mean),
        ..ModelConfig::default()
    }
}

pub fn desk_training_config() -> TrainingConfig {
    TrainingConfig {
        learning_rate: 3e-3,
        finetune_epochs: 50,
        ..TrainingConfig::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// Held-out word families with their own taxonomy.
    Unseen,
    /// Fresh sentences over the source types.
    Heldout,
}

#[derive(Clone, Debug)]
pub struct Condition {
    pub target: Target,
    pub k: usize,
    pub rename: RenameMode,
    pub prefinetune: bool,
    /// Stage 1 only; the target labels are swapped in without training.
    pub zero_shot: bool,
}

/// Sampling uses `seed`, initialization and training `seed + 10000`.
pub fn run_condition(
    task: &SyntheticTask,
    model: &ModelConfig,
    train: &TrainingConfig,
    cond: &Condition,
    seed: u64,
) -> anyhow::Result<f64> {
    let (pool, test) = match cond.target {
        Target::Unseen => (&task.target_train, &task.target_test),
        Target::Heldout => (&task.heldout_train, &task.heldout_test),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_tax = rename_taxonomy(&pool.taxonomy, &cond.rename, &mut rng)?;
    let test = test.with_taxonomy(target_tax.clone())?;
    let vocab = model_vocabulary(
        &[&task.source.sentences, &pool.sentences],
        &[&task.source.taxonomy, &target_tax],
        Some(&task.static_vectors),
        1,
        model.lowercase,
    );
    let model = ModelConfig { seed: seed + 10_000, ..model.clone() };
    let train = TrainingConfig { seed: seed + 10_000, ..train.clone() };
    let (mut m, _) = ModelState::init(model, vocab, Some(&task.static_vectors))?;
    if cond.zero_shot {
        zero_shot(&mut m, &task.source, &target_tax, &train)?;
    } else {
        let pool = pool.with_taxonomy(target_tax)?;
        let support = sample_support(&pool, cond.k, &mut rng)?.dataset(&pool)?;
        let source = cond.prefinetune.then_some(&task.source);
        run_two_stage(&mut m, source, &support, &train)?;
    }
    let (report, _) = evaluate_dataset(&Predictor::new(&m)?, &test)?;
    Ok(report.micro.f1)
}
