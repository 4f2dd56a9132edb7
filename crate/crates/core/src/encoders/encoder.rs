use crate::error::{Error, Result};
use crate::numeric::{Contextualizer, GroupId, ParamStore, PoolStrategy, Tape, Var};

use super::labels::LabelInput;
use super::vocab::{case_class, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelEncoderKind {
    /// Shared-or-own embedding table, label-side contextualizer,
    /// first-position pooling by default.
    Learned,
    /// Word vectors max-pooled over the label words, no contextualizer.
    Static,
}

impl LabelEncoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Learned => "learned",
            Self::Static => "static",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "learned" => Ok(Self::Learned),
            "static" => Ok(Self::Static),
            _ => Err(Error::InvalidArgument(format!("unknown label encoder `{s}`"))),
        }
    }

    pub fn default_pool(self) -> PoolStrategy {
        match self {
            Self::Learned => PoolStrategy::FirstPosition,
            Self::Static => PoolStrategy::Max,
        }
    }
}

/// Document-side encoder: embedding lookup, optional capitalization
/// addend, contextualizer.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenEncoder {
    pub embedding: GroupId,
    pub case: Option<GroupId>,
    pub contextualizer: Contextualizer,
}

impl TokenEncoder {
    /// Records the `T × d` token representations of `tokens` on `tape`.
    pub fn encode<S: AsRef<str>>(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        vocab: &Vocabulary,
        tokens: &[S],
    ) -> Result<Var> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("cannot encode an empty sentence".into()));
        }
        let mut x = tape.rows(store, self.embedding, &vocab.lookup_all(tokens))?;
        if let Some(case) = self.case {
            let classes: Vec<usize> = tokens.iter().map(|t| case_class(t.as_ref())).collect();
            let c = tape.rows(store, case, &classes)?;
            x = tape.add(x, c)?;
        }
        self.contextualizer.apply(tape, store, x)
    }
}

/// Label-side encoder producing one row per tagging label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelEncoder {
    pub kind: LabelEncoderKind,
    pub embedding: GroupId,
    pub contextualizer: Contextualizer,
    pub pool: PoolStrategy,
}

impl LabelEncoder {
    fn encode_words(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        vocab: &Vocabulary,
        words: &[String],
        pool: PoolStrategy,
    ) -> Result<Var> {
        if words.is_empty() {
            return Err(Error::EmptyInput("empty label input".into()));
        }
        let x = tape.rows(store, self.embedding, &vocab.lookup_all(words))?;
        let h = self.contextualizer.apply(tape, store, x)?;
        tape.pool(h, pool)
    }

    /// Records the `L × d` label matrix, one row per input.
    pub fn encode(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        vocab: &Vocabulary,
        inputs: &[LabelInput],
    ) -> Result<Var> {
        if inputs.is_empty() {
            return Err(Error::EmptyInput("no labels to encode".into()));
        }
        let mut rows = Vec::with_capacity(inputs.len());
        for input in inputs {
            let row = match input {
                LabelInput::Name(words) => self.encode_words(tape, store, vocab, words, self.pool)?,
                LabelInput::Contexts(sentences) => {
                    if sentences.is_empty() {
                        return Err(Error::EmptyInput("label context list is empty".into()));
                    }
                    let pooled = sentences
                        .iter()
                        .map(|s| self.encode_words(tape, store, vocab, s, PoolStrategy::Mean))
                        .collect::<Result<Vec<_>>>()?;
                    let total = tape.sum(&pooled)?;
                    tape.scale(total, 1.0 / sentences.len() as f64)
                }
            };
            rows.push(row);
        }
        tape.concat_rows(&rows)
    }
}
