use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::encoders::{LabelEncoderKind, LabelRepresentationScheme};
use crate::error::{Error, Result};
use crate::numeric::{ContextualizerKind, PoolStrategy};

/// Architecture and initialization settings of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub dim: usize,
    pub token_contextualizer: ContextualizerKind,
    pub label_contextualizer: ContextualizerKind,
    pub tie_embeddings: bool,
    pub label_encoder: LabelEncoderKind,
    /// Name-only label pooling; `None` uses the encoder kind's default.
    pub label_pool: Option<PoolStrategy>,
    pub case_feature: bool,
    pub lowercase: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            token_contextualizer: ContextualizerKind::SelfAttention,
            label_contextualizer: ContextualizerKind::SelfAttention,
            tie_embeddings: true,
            label_encoder: LabelEncoderKind::Learned,
            label_pool: None,
            case_feature: true,
            lowercase: true,
            seed: 0,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("`{key}` expects a boolean, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("`{key}` expects a number, got `{v}`")))
}

impl ModelConfig {
    pub fn pool(&self) -> PoolStrategy {
        self.label_pool.unwrap_or(self.label_encoder.default_pool())
    }

    /// Sets one `model.*` key. Returns false for keys outside this config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "model.dim" => {
                self.dim = parse_num(key, value)?;
                if self.dim == 0 {
                    return Err(Error::InvalidArgument("model.dim must be positive".into()));
                }
            }
            "model.token_contextualizer" => self.token_contextualizer = ContextualizerKind::parse(value)?,
            "model.label_contextualizer" => self.label_contextualizer = ContextualizerKind::parse(value)?,
            "model.tie_embeddings" => self.tie_embeddings = parse_bool(key, value)?,
            "model.label_encoder" => self.label_encoder = LabelEncoderKind::parse(value)?,
            "model.label_pool" => {
                self.label_pool = match value {
                    "default" => None,
                    v => Some(PoolStrategy::parse(v)?),
                }
            }
            "model.case_feature" => self.case_feature = parse_bool(key, value)?,
            "model.lowercase" => self.lowercase = parse_bool(key, value)?,
            "model.seed" => self.seed = parse_num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        vec![
            ("model.dim".into(), self.dim.to_string()),
            ("model.token_contextualizer".into(), self.token_contextualizer.name()),
            ("model.label_contextualizer".into(), self.label_contextualizer.name()),
            ("model.tie_embeddings".into(), self.tie_embeddings.to_string()),
            ("model.label_encoder".into(), self.label_encoder.as_str().into()),
            (
                "model.label_pool".into(),
                self.label_pool.map_or("default", PoolStrategy::as_str).into(),
            ),
            ("model.case_feature".into(), self.case_feature.to_string()),
            ("model.lowercase".into(), self.lowercase.to_string()),
            ("model.seed".into(), self.seed.to_string()),
        ]
    }
}

/// Optimization settings shared by both stages.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub prefinetune_epochs: usize,
    pub finetune_epochs: usize,
    pub seed: u64,
    pub scheme: LabelRepresentationScheme,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 10,
            prefinetune_epochs: 3,
            finetune_epochs: 200,
            seed: 0,
            scheme: LabelRepresentationScheme::NameOnly,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }

    /// Sets one `train.*` key. Returns false for keys outside this config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "train.learning_rate" => self.learning_rate = parse_num(key, value)?,
            "train.batch_size" => self.batch_size = parse_num(key, value)?,
            "train.prefinetune_epochs" => self.prefinetune_epochs = parse_num(key, value)?,
            "train.finetune_epochs" => self.finetune_epochs = parse_num(key, value)?,
            "train.seed" => self.seed = parse_num(key, value)?,
            "train.scheme" => self.scheme = LabelRepresentationScheme::parse(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        vec![
            ("train.learning_rate".into(), format!("{:e}", self.learning_rate)),
            ("train.batch_size".into(), self.batch_size.to_string()),
            ("train.prefinetune_epochs".into(), self.prefinetune_epochs.to_string()),
            ("train.finetune_epochs".into(), self.finetune_epochs.to_string()),
            ("train.seed".into(), self.seed.to_string()),
            ("train.scheme".into(), self.scheme.to_string()),
            ("train.optimizer".into(), "adam".into()),
        ]
    }
}

/// Renders `key = value` lines.
pub fn render_entries(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Parses `key = value` lines with `#` comments. Later keys win.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            column: 1,
            message: "expected `key = value`".into(),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
