use std::fmt;

use rand::seq::index;
use rand::Rng;

use crate::corpus::{
    extract_spans, LabelKind, LabelTaxonomy, Sentence, TaggingLabel, BEGIN_WORD, INSIDE_WORD,
};
use crate::error::{Error, Result};

use super::vocab::MASK_TOKEN;

/// Default number of context sentences per label.
pub const DEFAULT_CONTEXT_BUDGET: usize = 10;

/// How entity tokens are rewritten when a support sentence becomes label
/// context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContextSubScheme {
    Token,
    Label,
    Mask,
    BiotagColonMask,
    ParenBiotagMask,
    BiotagColonLabel,
    ParenBiotagLabel,
}

impl ContextSubScheme {
    pub const ALL: [ContextSubScheme; 7] = [
        Self::Token,
        Self::Label,
        Self::Mask,
        Self::BiotagColonMask,
        Self::ParenBiotagMask,
        Self::BiotagColonLabel,
        Self::ParenBiotagLabel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Token => "TOKEN",
            Self::Label => "LABEL",
            Self::Mask => "MASK",
            Self::BiotagColonMask => "BIOTAG_COLON_MASK",
            Self::ParenBiotagMask => "PAREN_BIOTAG_MASK",
            Self::BiotagColonLabel => "BIOTAG_COLON_LABEL",
            Self::ParenBiotagLabel => "PAREN_BIOTAG_LABEL",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown contextual scheme `{s}`")))
    }

    /// Replacement tokens for the entity token at `offset` within its span.
    fn rewrite(self, original: &str, offset: usize, name: &[String]) -> Vec<String> {
        let tag = if offset == 0 { BEGIN_WORD } else { INSIDE_WORD };
        let mask = || vec![MASK_TOKEN.to_string()];
        let mut out: Vec<String> = match self {
            Self::Token => return vec![original.to_string()],
            Self::Label => return name.to_vec(),
            Self::Mask => return mask(),
            Self::BiotagColonMask | Self::BiotagColonLabel => vec![tag.into(), ":".into()],
            Self::ParenBiotagMask | Self::ParenBiotagLabel => {
                vec!["(".into(), tag.into(), ")".into()]
            }
        };
        match self {
            Self::BiotagColonMask | Self::ParenBiotagMask => out.extend(mask()),
            _ => out.extend_from_slice(name),
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelRepresentationScheme {
    NameOnly,
    Contextual { sub: ContextSubScheme, budget: usize },
}

impl LabelRepresentationScheme {
    /// `name-only` or `contextual:<SUB>` with an optional `:<budget>`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "name-only" || s == "name" {
            return Ok(Self::NameOnly);
        }
        let rest = s
            .strip_prefix("contextual:")
            .ok_or_else(|| Error::InvalidArgument(format!("unknown label scheme `{s}`")))?;
        let (sub, budget) = match rest.split_once(':') {
            Some((sub, b)) => (
                sub,
                b.parse::<usize>()
                    .ok()
                    .filter(|&b| b > 0)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad context budget `{b}`")))?,
            ),
            None => (rest, DEFAULT_CONTEXT_BUDGET),
        };
        Ok(Self::Contextual {
            sub: ContextSubScheme::parse(sub)?,
            budget,
        })
    }

    pub fn is_contextual(&self) -> bool {
        matches!(self, Self::Contextual { .. })
    }
}

impl fmt::Display for LabelRepresentationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NameOnly => write!(f, "name-only"),
            Self::Contextual { sub, budget } if *budget == DEFAULT_CONTEXT_BUDGET => {
                write!(f, "contextual:{}", sub.as_str())
            }
            Self::Contextual { sub, budget } => write!(f, "contextual:{}:{budget}", sub.as_str()),
        }
    }
}

/// Frozen input of the label encoder for one tagging label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelInput {
    /// The label text, whitespace-tokenized.
    Name(Vec<String>),
    /// Rewritten support sentences; their pooled encodings are averaged.
    Contexts(Vec<Vec<String>>),
}

/// Context sentences for one label: up to `budget` distinct support
/// sentences containing the label's type, chosen uniformly, each with one
/// uniformly chosen occurrence rewritten. Empty for "other" or when the
/// type never occurs.
pub fn build_contextual_label_inputs<R: Rng + ?Sized>(
    label: &TaggingLabel,
    taxonomy: &LabelTaxonomy,
    support: &[Sentence],
    sub: ContextSubScheme,
    budget: usize,
    rng: &mut R,
) -> Vec<Vec<String>> {
    let k = match label.kind {
        LabelKind::Other => return Vec::new(),
        LabelKind::Begin(k) | LabelKind::Inside(k) => k,
    };
    let Some(entry) = taxonomy.entity_types().get(k) else {
        return Vec::new();
    };
    let name: Vec<String> = entry.natural.split_whitespace().map(str::to_string).collect();
    let eligible: Vec<(usize, Vec<(usize, usize)>)> = support
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let spans: Vec<(usize, usize)> = extract_spans(&s.tags)
                .into_iter()
                .filter(|sp| sp.entity_type == entry.original)
                .map(|sp| (sp.start, sp.end))
                .collect();
            (!spans.is_empty()).then_some((i, spans))
        })
        .collect();
    let mut picks = index::sample(rng, eligible.len(), budget.min(eligible.len())).into_vec();
    picks.sort_unstable();
    picks
        .into_iter()
        .map(|p| {
            let (i, spans) = &eligible[p];
            let (start, end) = spans[rng.random_range(0..spans.len())];
            let tokens = &support[*i].tokens;
            let mut out = Vec::with_capacity(tokens.len() + 4);
            out.extend_from_slice(&tokens[..start]);
            for (offset, t) in tokens[start..end].iter().enumerate() {
                out.extend(sub.rewrite(t, offset, &name));
            }
            out.extend_from_slice(&tokens[end..]);
            out
        })
        .collect()
}

/// Label-encoder inputs for every tagging label under `scheme`. Labels
/// without context (including "other") fall back to their name.
pub fn build_label_inputs<R: Rng + ?Sized>(
    labels: &[TaggingLabel],
    taxonomy: &LabelTaxonomy,
    scheme: &LabelRepresentationScheme,
    support: Option<&[Sentence]>,
    rng: &mut R,
) -> Result<Vec<LabelInput>> {
    match scheme {
        LabelRepresentationScheme::NameOnly => {
            Ok(labels.iter().map(|l| LabelInput::Name(l.words())).collect())
        }
        LabelRepresentationScheme::Contextual { sub, budget } => {
            let support = support.ok_or_else(|| {
                Error::InvalidArgument(format!("label scheme {scheme} requires a support set"))
            })?;
            Ok(labels
                .iter()
                .map(|l| {
                    let ctx = build_contextual_label_inputs(l, taxonomy, support, *sub, *budget, rng);
                    if ctx.is_empty() {
                        LabelInput::Name(l.words())
                    } else {
                        LabelInput::Contexts(ctx)
                    }
                })
                .collect())
        }
    }
}
