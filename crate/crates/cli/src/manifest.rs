use std::path::Path;

use anyhow::Context;
use lsner_core::matcher::render_entries;
use sha2::{Digest, Sha256};

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_bytes(&bytes))
}

/// Everything needed to re-run a command: the full configuration echo,
/// per-run seeds, and digests of every input and output file.
#[derive(Clone, Debug, Default)]
pub struct RunManifest {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub runs: Vec<(String, String)>,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, config: Vec<(String, String)>) -> Self {
        Self {
            command: command.into(),
            config,
            ..Self::default()
        }
    }

    pub fn run_entry(&mut self, run: &str, key: &str, value: impl ToString) {
        self.runs.push((format!("run.{run}.{key}"), value.to_string()));
    }

    pub fn add_input(&mut self, path: &Path) -> anyhow::Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((format!("input.{}", path.display()), digest));
        Ok(())
    }

    pub fn add_output(&mut self, relative: &str, bytes: &[u8]) {
        self.outputs.push((format!("output.{relative}"), sha256_bytes(bytes)));
    }

    pub fn render(&self) -> String {
        let mut entries = vec![
            ("manifest.command".to_string(), self.command.clone()),
            ("manifest.code_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ];
        entries.extend(self.config.iter().cloned());
        entries.extend(self.runs.iter().cloned());
        entries.extend(self.inputs.iter().cloned());
        let mut outputs = self.outputs.clone();
        outputs.sort();
        entries.extend(outputs);
        format!("# lsner run manifest\n{}", render_entries(&entries))
    }
}
