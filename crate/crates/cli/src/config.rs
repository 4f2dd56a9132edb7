//! Experiment configuration: flat `key = value` files plus flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lsner_core::corpus::RenameMode;
use lsner_core::matcher::{parse_entries, ModelConfig, TrainingConfig};

/// Key prefixes written by manifests that a config load skips, so a
/// manifest can be fed back through `--config`.
const MANIFEST_PREFIXES: [&str; 4] = ["manifest.", "run.", "input.", "output."];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DataPaths {
    pub source: Option<PathBuf>,
    pub source_taxonomy: Option<PathBuf>,
    pub target_train: Option<PathBuf>,
    pub target_dev: Option<PathBuf>,
    pub target_test: Option<PathBuf>,
    pub target_taxonomy: Option<PathBuf>,
    pub static_vectors: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataPaths,
    pub min_freq: usize,
    /// Restrict target datasets to one coarse type.
    pub coarse: Option<String>,
    pub ks: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    /// `original`, `meaningless`, `misleading` or `map:<file>`.
    pub rename: String,
    pub prefinetune: bool,
    pub zero_shot: bool,
    pub split: Split,
    pub model: ModelConfig,
    pub train: TrainingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataPaths::default(),
            min_freq: 1,
            coarse: None,
            ks: vec![1, 5],
            repeats: 10,
            seed: 0,
            rename: "original".into(),
            prefinetune: true,
            zero_shot: false,
            split: Split::Test,
            model: ModelConfig::default(),
            train: TrainingConfig::default(),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> anyhow::Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("`{key}` expects a boolean, got `{v}`"),
    }
}

fn parse_ks(v: &str) -> anyhow::Result<Vec<usize>> {
    let ks = v
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad K value `{s}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if ks.is_empty() || ks.contains(&0) {
        bail!("K values must be positive");
    }
    Ok(ks)
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        if self.model.set(key, value)? || self.train.set(key, value)? {
            return Ok(());
        }
        let d = &mut self.data;
        match key {
            "data.source" => d.source = opt_path(value),
            "data.source_taxonomy" => d.source_taxonomy = opt_path(value),
            "data.target_train" => d.target_train = opt_path(value),
            "data.target_dev" => d.target_dev = opt_path(value),
            "data.target_test" => d.target_test = opt_path(value),
            "data.target_taxonomy" => d.target_taxonomy = opt_path(value),
            "data.static_vectors" => d.static_vectors = opt_path(value),
            "data.min_freq" => self.min_freq = value.parse().context("data.min_freq")?,
            "data.coarse" => self.coarse = (!value.is_empty()).then(|| value.to_string()),
            "experiment.k" => self.ks = parse_ks(value)?,
            "experiment.repeats" => {
                self.repeats = value.parse().context("experiment.repeats")?;
                if self.repeats == 0 {
                    bail!("experiment.repeats must be positive");
                }
            }
            "experiment.seed" => self.seed = value.parse().context("experiment.seed")?,
            "experiment.rename" => {
                if !value.starts_with("map:") {
                    RenameMode::parse(value)?;
                }
                self.rename = value.to_string();
            }
            "experiment.prefinetune" => self.prefinetune = parse_bool(key, value)?,
            "experiment.zero_shot" => self.zero_shot = parse_bool(key, value)?,
            "experiment.split" => {
                self.split = match value {
                    "dev" => Split::Dev,
                    "test" => Split::Test,
                    _ => bail!("experiment.split must be `dev` or `test`"),
                }
            }
            _ if MANIFEST_PREFIXES.iter().any(|p| key.starts_with(p)) => {}
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    /// Applies the config file (if any), then `overrides` in order.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> anyhow::Result<Self> {
        let mut c = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let map: BTreeMap<String, String> = parse_entries(&text)?;
            for (k, v) in &map {
                c.set(k, v).with_context(|| format!("in {}", path.display()))?;
            }
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        Ok(c)
    }

    /// Every key in a fixed order; feeding these back reproduces `self`.
    pub fn entries(&self) -> Vec<(String, String)> {
        let d = &self.data;
        let mut e: Vec<(String, String)> = vec![
            ("data.source".into(), path_str(&d.source)),
            ("data.source_taxonomy".into(), path_str(&d.source_taxonomy)),
            ("data.target_train".into(), path_str(&d.target_train)),
            ("data.target_dev".into(), path_str(&d.target_dev)),
            ("data.target_test".into(), path_str(&d.target_test)),
            ("data.target_taxonomy".into(), path_str(&d.target_taxonomy)),
            ("data.static_vectors".into(), path_str(&d.static_vectors)),
            ("data.min_freq".into(), self.min_freq.to_string()),
            ("data.coarse".into(), self.coarse.clone().unwrap_or_default()),
            (
                "experiment.k".into(),
                self.ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("experiment.repeats".into(), self.repeats.to_string()),
            ("experiment.seed".into(), self.seed.to_string()),
            ("experiment.rename".into(), self.rename.clone()),
            ("experiment.prefinetune".into(), self.prefinetune.to_string()),
            ("experiment.zero_shot".into(), self.zero_shot.to_string()),
            ("experiment.split".into(), self.split.as_str().into()),
        ];
        e.extend(self.model.entries());
        e.extend(self.train.entries().into_iter().filter(|(k, _)| k != "train.optimizer"));
        e
    }

    /// Resolves the rename setting, reading a map file when needed.
    pub fn rename_mode(&self) -> anyhow::Result<RenameMode> {
        match self.rename.strip_prefix("map:") {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading rename map {path}"))?;
                Ok(RenameMode::custom_from_str(&text)?)
            }
            None => Ok(RenameMode::parse(&self.rename)?),
        }
    }

    pub fn sampling_seed(&self, run: usize) -> u64 {
        self.seed + run as u64
    }

    pub fn training_seed(&self, run: usize) -> u64 {
        self.seed + 10_000 + run as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_round_trip() {
        let mut c = ExperimentConfig::default();
        c.set("experiment.k", "1,5,20").unwrap();
        c.set("data.source", "a/b.conll").unwrap();
        c.set("train.learning_rate", "3e-3").unwrap();
        c.set("model.label_pool", "mean").unwrap();
        let back = ExperimentConfig::load(None, &c.entries()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::default();
        assert!(c.set("experiment.k", "0").is_err());
        assert!(c.set("experiment.rename", "weird").is_err());
        assert!(c.set("no.such.key", "1").is_err());
        c.set("run.k1.r00.status", "ok").unwrap();
        c.set("experiment.rename", "map:somewhere.tsv").unwrap();
    }
}
