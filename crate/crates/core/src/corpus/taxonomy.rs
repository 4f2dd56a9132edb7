use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::Tag;

pub const OTHER_ORIGINAL: &str = "O";
pub const OTHER_NATURAL: &str = "other";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaxonomyEntry {
    pub original: String,
    pub natural: String,
}

/// Ordered entity types with their natural-language names. Entry 0 is
/// always the implicit "other" class.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelTaxonomy {
    entries: Vec<TaxonomyEntry>,
}

impl LabelTaxonomy {
    /// Builds a taxonomy from `(original, natural)` pairs for the entity
    /// types. Natural names are lowercased and whitespace-normalized.
    pub fn new<I, A, B>(types: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: AsRef<str>,
    {
        let mut entries = vec![TaxonomyEntry {
            original: OTHER_ORIGINAL.into(),
            natural: OTHER_NATURAL.into(),
        }];
        let mut seen = HashSet::new();
        seen.insert(OTHER_ORIGINAL.to_string());
        for (original, natural) in types {
            let original = original.into();
            if original.is_empty() || original.chars().any(char::is_whitespace) {
                return Err(Error::Taxonomy(format!("invalid type name `{original}`")));
            }
            if !seen.insert(original.clone()) {
                let what = if original == OTHER_ORIGINAL {
                    "`O` is implicit and cannot be listed".to_string()
                } else {
                    format!("duplicate type `{original}`")
                };
                return Err(Error::Taxonomy(what));
            }
            let natural = normalize_name(natural.as_ref());
            if natural.is_empty() {
                return Err(Error::Taxonomy(format!("empty natural name for `{original}`")));
            }
            entries.push(TaxonomyEntry { original, natural });
        }
        Ok(Self { entries })
    }

    /// Taxonomy with only the "other" class.
    pub fn other_only() -> Self {
        Self::new(Vec::<(String, String)>::new()).expect("empty taxonomy is valid")
    }

    /// Infers natural names from type names: lowercased, `_` read as a space.
    pub fn from_types<S: AsRef<str>>(types: &[S]) -> Result<Self> {
        Self::new(
            types
                .iter()
                .map(|t| (t.as_ref().to_string(), t.as_ref().replace('_', " "))),
        )
    }

    pub fn entries(&self) -> &[TaxonomyEntry] {
        &self.entries
    }

    /// Entity types, excluding "other".
    pub fn entity_types(&self) -> &[TaxonomyEntry] {
        &self.entries[1..]
    }

    /// Number of entries including "other" (the `N_L` of the tagging scheme).
    pub fn n_l(&self) -> usize {
        self.entries.len()
    }

    pub fn num_tagging_labels(&self) -> usize {
        2 * self.n_l() - 1
    }

    /// Position among entity types (0-based, "other" excluded).
    pub fn type_index(&self, original: &str) -> Option<usize> {
        self.entity_types()
            .iter()
            .position(|e| e.original == original)
    }

    pub fn contains_type(&self, original: &str) -> bool {
        self.type_index(original).is_some()
    }

    /// Canonical tagging-label index of a surface tag.
    pub fn label_index(&self, tag: &Tag) -> Option<usize> {
        match tag {
            Tag::Outside => Some(0),
            Tag::Begin(t) => self.type_index(t).map(|k| 1 + 2 * k),
            Tag::Inside(t) => self.type_index(t).map(|k| 2 + 2 * k),
        }
    }

    /// Surface tag of a canonical tagging-label index.
    pub fn tag_for_label(&self, index: usize) -> Option<Tag> {
        if index == 0 {
            return Some(Tag::Outside);
        }
        let k = (index - 1) / 2;
        let ty = self.entity_types().get(k)?.original.clone();
        Some(if index % 2 == 1 {
            Tag::Begin(ty)
        } else {
            Tag::Inside(ty)
        })
    }

    /// Copy with replaced natural names for the entity types, in order.
    pub fn with_natural_names(&self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.entity_types().len() {
            return Err(Error::Taxonomy(format!(
                "{} names for {} entity types",
                names.len(),
                self.entity_types().len()
            )));
        }
        Self::new(
            self.entity_types()
                .iter()
                .map(|e| e.original.clone())
                .zip(names),
        )
    }

    /// Hex SHA-256 over the ordered `(original, natural)` entries.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.original.as_bytes());
            h.update([0x1f]);
            h.update(e.natural.as_bytes());
            h.update([0x1e]);
        }
        hex::encode(h.finalize())
    }

    /// Parses the `original<TAB>natural name` file format; `#` starts a
    /// comment line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut types = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (orig, natural) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                column: 1,
                message: "expected `original<TAB>natural name`".into(),
            })?;
            types.push((orig.trim().to_string(), natural.trim().to_string()));
        }
        Self::new(types)
    }

    pub fn parse_str(s: &str) -> Result<Self> {
        Self::read(s.as_bytes())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for e in self.entity_types() {
            out.push_str(&e.original);
            out.push('\t');
            out.push_str(&e.natural);
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for LabelTaxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("{}={}", e.original, e.natural))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

fn normalize_name(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelKind {
    Other,
    Begin(usize),
    Inside(usize),
}

/// One classification target in natural-language BIO form, e.g.
/// `"begin person"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaggingLabel {
    pub text: String,
    pub index: usize,
    pub kind: LabelKind,
    /// Natural name of the entity type; `"other"` for the other class.
    pub name: String,
}

impl TaggingLabel {
    pub fn words(&self) -> Vec<String> {
        self.text.split_whitespace().map(str::to_string).collect()
    }
}

pub const BEGIN_WORD: &str = "begin";
pub const INSIDE_WORD: &str = "inside";

/// Expands a taxonomy into its `2 × N_L − 1` tagging labels: "other", then
/// "begin X" and "inside X" for each type in order.
pub fn expand_tag_labels(t: &LabelTaxonomy) -> Result<Vec<TaggingLabel>> {
    let mut seen = HashSet::new();
    for e in t.entries() {
        if !seen.insert(e.natural.as_str()) {
            return Err(Error::Taxonomy(format!(
                "natural name `{}` used more than once",
                e.natural
            )));
        }
    }
    let mut labels = Vec::with_capacity(t.num_tagging_labels());
    labels.push(TaggingLabel {
        text: OTHER_NATURAL.into(),
        index: 0,
        kind: LabelKind::Other,
        name: OTHER_NATURAL.into(),
    });
    for (k, e) in t.entity_types().iter().enumerate() {
        labels.push(TaggingLabel {
            text: format!("{BEGIN_WORD} {}", e.natural),
            index: labels.len(),
            kind: LabelKind::Begin(k),
            name: e.natural.clone(),
        });
        labels.push(TaggingLabel {
            text: format!("{INSIDE_WORD} {}", e.natural),
            index: labels.len(),
            kind: LabelKind::Inside(k),
            name: e.natural.clone(),
        });
    }
    Ok(labels)
}

/// CoNLL-2003 types with their natural-language forms.
pub fn conll2003_taxonomy() -> LabelTaxonomy {
    LabelTaxonomy::new([
        ("PER", "person"),
        ("LOC", "location"),
        ("ORG", "organization"),
        ("MISC", "miscellaneous"),
    ])
    .expect("static taxonomy")
}
