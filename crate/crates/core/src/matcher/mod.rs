//! The dual-encoder model: scoring, two-stage training, label caching,
//! and checkpoint files.

mod cache;
mod checkpoint;
mod config;
mod model;
mod train;

pub use cache::{build_label_cache, LabelCache};
pub use checkpoint::{
    checkpoint_bytes, read_checkpoint, read_label_cache, write_checkpoint, write_label_cache,
    FORMAT_VERSION, MAGIC,
};
pub use config::{parse_entries, render_entries, ModelConfig, TrainingConfig};
pub use model::{
    model_vocabulary, score_tokens, ModelState, Predictor, LABEL_CONTEXT, LABEL_EMBEDDING,
    SCHEME_WORDS, TOKEN_CASE, TOKEN_CONTEXT, TOKEN_EMBEDDING,
};
pub use train::{run_two_stage, train_stage, zero_shot, StageReport, TwoStageReport};
