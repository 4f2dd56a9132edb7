use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

use super::taxonomy::LabelTaxonomy;

/// A BIO surface tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outside,
    Begin(String),
    Inside(String),
}

impl Tag {
    pub fn entity_type(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(t) | Tag::Inside(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::Outside)
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let (prefix, ty) = s
            .split_once('-')
            .ok_or_else(|| format!("tag `{s}` is not O, B-<type> or I-<type>"))?;
        if ty.is_empty() {
            return Err(format!("tag `{s}` has an empty type"));
        }
        match prefix {
            "B" => Ok(Tag::Begin(ty.to_string())),
            "I" => Ok(Tag::Inside(ty.to_string())),
            _ => Err(format!("tag `{s}` is not O, B-<type> or I-<type>")),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => write!(f, "O"),
            Tag::Begin(t) => write!(f, "B-{t}"),
            Tag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

/// Parses a whitespace-separated tag list, panicking on malformed tags.
/// Intended for tests and literals.
pub fn tags(s: &str) -> Vec<Tag> {
    s.split_whitespace()
        .map(|t| t.parse().expect("well-formed tag"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>, tags: Vec<Tag>) -> Result<Self> {
        if tokens.len() != tags.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        Ok(Self { tokens, tags })
    }

    /// Sentence whose tags are all `O`.
    pub fn untagged(tokens: Vec<String>) -> Self {
        let tags = vec![Tag::Outside; tokens.len()];
        Self { tokens, tags }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_annotation(&self) -> bool {
        self.tags.iter().any(|t| !t.is_outside())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetRole {
    Source,
    Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub sentences: Vec<Sentence>,
    pub taxonomy: LabelTaxonomy,
    pub role: DatasetRole,
}

impl Dataset {
    /// Checks every tag against the taxonomy.
    pub fn new(
        name: impl Into<String>,
        sentences: Vec<Sentence>,
        taxonomy: LabelTaxonomy,
        role: DatasetRole,
    ) -> Result<Self> {
        for (i, s) in sentences.iter().enumerate() {
            if s.tokens.len() != s.tags.len() {
                return Err(Error::InvalidArgument(format!(
                    "sentence {i}: {} tokens but {} tags",
                    s.tokens.len(),
                    s.tags.len()
                )));
            }
            for tag in &s.tags {
                if let Some(ty) = tag.entity_type() {
                    if !taxonomy.contains_type(ty) {
                        return Err(Error::Taxonomy(format!(
                            "sentence {i} uses type `{ty}` missing from taxonomy {taxonomy}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            name: name.into(),
            sentences,
            taxonomy,
            role,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Same sentences under another taxonomy (e.g. a renamed one).
    pub fn with_taxonomy(&self, taxonomy: LabelTaxonomy) -> Result<Self> {
        Self::new(self.name.clone(), self.sentences.clone(), taxonomy, self.role)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let sentences = indices
            .iter()
            .map(|&i| {
                self.sentences.get(i).cloned().ok_or_else(|| {
                    Error::InvalidArgument(format!("sentence index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: self.name.clone(),
            sentences,
            taxonomy: self.taxonomy.clone(),
            role: self.role,
        })
    }
}

const DOCSTART: &str = "-DOCSTART-";

/// Reads a column-format corpus: one token per line, the first column is
/// the token and the last the BIO tag, blank lines separate sentences.
/// Without an explicit taxonomy, types are collected in order of first
/// appearance.
pub fn parse_conll<R: BufRead>(
    reader: R,
    name: &str,
    taxonomy: Option<&LabelTaxonomy>,
    role: DatasetRole,
) -> Result<Dataset> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut tag_list = Vec::new();
    let mut types: Vec<String> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            if !tokens.is_empty() {
                sentences.push(Sentence {
                    tokens: std::mem::take(&mut tokens),
                    tags: std::mem::take(&mut tag_list),
                });
            }
            continue;
        }
        if cols[0] == DOCSTART {
            continue;
        }
        if cols.len() < 2 {
            return Err(Error::Parse {
                line: lineno,
                column: 2,
                message: "missing tag column".into(),
            });
        }
        let column = cols.len();
        let tag: Tag = cols[column - 1].parse().map_err(|message| Error::Parse {
            line: lineno,
            column,
            message,
        })?;
        if let Some(ty) = tag.entity_type() {
            match taxonomy {
                Some(t) if !t.contains_type(ty) => {
                    return Err(Error::Parse {
                        line: lineno,
                        column,
                        message: format!("type `{ty}` not in taxonomy"),
                    })
                }
                Some(_) => {}
                None => {
                    if !types.iter().any(|t| t == ty) {
                        types.push(ty.to_string());
                    }
                }
            }
        }
        tokens.push(cols[0].to_string());
        tag_list.push(tag);
    }
    if !tokens.is_empty() {
        sentences.push(Sentence {
            tokens,
            tags: tag_list,
        });
    }
    if sentences.is_empty() {
        return Err(Error::EmptyInput(format!("corpus `{name}` has no sentences")));
    }
    let taxonomy = match taxonomy {
        Some(t) => t.clone(),
        None => LabelTaxonomy::from_types(&types)?,
    };
    Dataset::new(name, sentences, taxonomy, role)
}

pub fn parse_conll_str(
    text: &str,
    name: &str,
    taxonomy: Option<&LabelTaxonomy>,
    role: DatasetRole,
) -> Result<Dataset> {
    parse_conll(text.as_bytes(), name, taxonomy, role)
}

/// Reads tokens from the first column, ignoring any tag columns. Empty
/// input yields no sentences.
pub fn read_token_sentences<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for line in reader.lines() {
        let line = line?;
        match line.split_whitespace().next() {
            None => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            Some(DOCSTART) => {}
            Some(tok) => current.push(tok.to_string()),
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    Ok(out)
}

/// Writes `token<TAB>tag` lines with a blank line after each sentence.
pub fn write_conll<W: Write>(mut w: W, sentences: &[Sentence]) -> Result<()> {
    for s in sentences {
        for (tok, tag) in s.tokens.iter().zip(&s.tags) {
            writeln!(w, "{tok}\t{tag}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn conll_string(sentences: &[Sentence]) -> String {
    let mut buf = Vec::new();
    write_conll(&mut buf, sentences).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("tokens are UTF-8")
}
