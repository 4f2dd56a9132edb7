use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    expand_tag_labels, Dataset, LabelTaxonomy, Sentence, Tag, BEGIN_WORD, INSIDE_WORD,
    OTHER_NATURAL,
};
use crate::encoders::{
    apply_static_vectors, build_label_inputs, random_embedding_table, CoverageReport, LabelEncoder,
    LabelEncoderKind, LabelInput, LabelRepresentationScheme, StaticVectors, TokenEncoder,
    Vocabulary, CASE_CLASSES,
};
use crate::error::{shape_err, Error, Result};
use crate::numeric::{argmax, Contextualizer, ContextualizerKind, ParamStore, RealMatrix, Tape, Var};

use super::config::ModelConfig;

pub const TOKEN_EMBEDDING: &str = "token.embedding";
pub const TOKEN_CASE: &str = "token.case";
pub const TOKEN_CONTEXT: &str = "token.ctx";
pub const LABEL_EMBEDDING: &str = "label.embedding";
pub const LABEL_CONTEXT: &str = "label.ctx";

/// Words every model vocabulary needs for label texts and context schemes.
pub const SCHEME_WORDS: [&str; 6] = [OTHER_NATURAL, BEGIN_WORD, INSIDE_WORD, ":", "(", ")"];

/// Vocabulary over training corpora, label names, scheme words, and any
/// static-vector words.
pub fn model_vocabulary(
    corpora: &[&[Sentence]],
    taxonomies: &[&LabelTaxonomy],
    static_vectors: Option<&StaticVectors>,
    min_freq: usize,
    lowercase: bool,
) -> Vocabulary {
    let mut extra: Vec<String> = SCHEME_WORDS.iter().map(|s| s.to_string()).collect();
    for t in taxonomies {
        for e in t.entity_types() {
            extra.extend(e.natural.split_whitespace().map(str::to_string));
        }
    }
    if let Some(v) = static_vectors {
        extra.extend(v.words().map(str::to_string));
    }
    Vocabulary::build(corpora.iter().flat_map(|c| c.iter()), min_freq, extra, lowercase)
}

/// All trainable parameters, the vocabulary, and the current label list.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub token_encoder: TokenEncoder,
    pub label_encoder: LabelEncoder,
    /// Taxonomy whose tagging labels the model currently scores.
    pub taxonomy: LabelTaxonomy,
    /// Frozen label-encoder inputs, one per tagging label.
    pub label_inputs: Vec<LabelInput>,
    /// Extra `key = value` lines carried in the checkpoint echo.
    pub echo: Vec<(String, String)>,
}

impl ModelState {
    /// Fresh parameters drawn from `config.seed`. With static vectors,
    /// covered rows of the embedding table(s) take the file vectors.
    pub fn init(
        config: ModelConfig,
        vocab: Vocabulary,
        static_vectors: Option<&StaticVectors>,
    ) -> Result<(Self, Option<CoverageReport>)> {
        if vocab.lowercase() != config.lowercase {
            return Err(Error::InvalidArgument(
                "vocabulary case folding differs from the model configuration".into(),
            ));
        }
        let dim = config.dim;
        if let Some(v) = static_vectors {
            if v.dim != dim {
                return Err(Error::StaticVectors(format!(
                    "vectors have dimension {}, model dimension is {dim}",
                    v.dim
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let mut coverage = None;
        let mut table = |rng: &mut ChaCha8Rng| -> Result<RealMatrix> {
            let mut t = random_embedding_table(vocab.len(), dim, rng);
            if let Some(v) = static_vectors {
                coverage = Some(apply_static_vectors(&mut t, &vocab, v)?);
            }
            Ok(t)
        };
        let embedding = store.insert(TOKEN_EMBEDDING, table(&mut rng)?)?;
        let case = if config.case_feature {
            Some(store.insert(TOKEN_CASE, RealMatrix::zeros(CASE_CLASSES, dim))?)
        } else {
            None
        };
        let token_ctx =
            Contextualizer::init(&mut store, TOKEN_CONTEXT, config.token_contextualizer, dim, &mut rng)?;
        let label_embedding = if config.tie_embeddings {
            embedding
        } else {
            store.insert(LABEL_EMBEDDING, table(&mut rng)?)?
        };
        let label_ctx = Contextualizer::init(
            &mut store,
            LABEL_CONTEXT,
            label_contextualizer_kind(&config),
            dim,
            &mut rng,
        )?;
        let model = Self {
            token_encoder: TokenEncoder {
                embedding,
                case,
                contextualizer: token_ctx,
            },
            label_encoder: LabelEncoder {
                kind: config.label_encoder,
                embedding: label_embedding,
                contextualizer: label_ctx,
                pool: config.pool(),
            },
            config,
            vocab,
            store,
            taxonomy: LabelTaxonomy::other_only(),
            label_inputs: vec![LabelInput::Name(vec![OTHER_NATURAL.into()])],
            echo: Vec::new(),
        };
        Ok((model, coverage))
    }

    /// Binds encoder handles to an existing parameter store.
    pub fn assemble(
        config: ModelConfig,
        vocab: Vocabulary,
        store: ParamStore,
        taxonomy: LabelTaxonomy,
        label_inputs: Vec<LabelInput>,
        echo: Vec<(String, String)>,
    ) -> Result<Self> {
        let dim = config.dim;
        let embedding = store.id(TOKEN_EMBEDDING)?;
        if store.values(embedding).shape() != (vocab.len(), dim) {
            return Err(shape_err(
                "checkpoint",
                format!(
                    "embedding is {:?}, vocabulary has {} entries of dimension {dim}",
                    store.values(embedding).shape(),
                    vocab.len()
                ),
            ));
        }
        let case = if config.case_feature {
            Some(store.id(TOKEN_CASE)?)
        } else {
            None
        };
        let token_ctx = Contextualizer::attach(&store, TOKEN_CONTEXT, config.token_contextualizer, dim)?;
        let label_embedding = if config.tie_embeddings {
            embedding
        } else {
            store.id(LABEL_EMBEDDING)?
        };
        let label_ctx =
            Contextualizer::attach(&store, LABEL_CONTEXT, label_contextualizer_kind(&config), dim)?;
        if label_inputs.len() != taxonomy.num_tagging_labels() {
            return Err(Error::Format(format!(
                "{} label inputs for {} tagging labels",
                label_inputs.len(),
                taxonomy.num_tagging_labels()
            )));
        }
        Ok(Self {
            token_encoder: TokenEncoder {
                embedding,
                case,
                contextualizer: token_ctx,
            },
            label_encoder: LabelEncoder {
                kind: config.label_encoder,
                embedding: label_embedding,
                contextualizer: label_ctx,
                pool: config.pool(),
            },
            config,
            vocab,
            store,
            taxonomy,
            label_inputs,
            echo,
        })
    }

    /// Rebuilds the label list from `taxonomy`. Contextual schemes draw
    /// their context sentences from `support` once, here.
    pub fn set_labels<R: Rng + ?Sized>(
        &mut self,
        taxonomy: &LabelTaxonomy,
        scheme: &LabelRepresentationScheme,
        support: Option<&[Sentence]>,
        rng: &mut R,
    ) -> Result<()> {
        let labels = expand_tag_labels(taxonomy)?;
        self.label_inputs = build_label_inputs(&labels, taxonomy, scheme, support, rng)?;
        self.taxonomy = taxonomy.clone();
        Ok(())
    }

    pub fn num_labels(&self) -> usize {
        self.label_inputs.len()
    }

    /// Records the label matrix `b` on `tape`.
    pub fn label_var(&self, tape: &mut Tape, store: &ParamStore) -> Result<Var> {
        self.label_encoder.encode(tape, store, &self.vocab, &self.label_inputs)
    }

    /// Records `T × d` token representations on `tape`.
    pub fn token_var<S: AsRef<str>>(&self, tape: &mut Tape, store: &ParamStore, tokens: &[S]) -> Result<Var> {
        self.token_encoder.encode(tape, store, &self.vocab, tokens)
    }

    /// Current `(2·N_L − 1) × d` label representations.
    pub fn label_matrix(&self) -> Result<RealMatrix> {
        let mut tape = Tape::new();
        let b = self.label_var(&mut tape, &self.store)?;
        Ok(tape.value(b).clone())
    }

    pub fn token_matrix<S: AsRef<str>>(&self, tokens: &[S]) -> Result<RealMatrix> {
        let mut tape = Tape::new();
        let e = self.token_var(&mut tape, &self.store, tokens)?;
        Ok(tape.value(e).clone())
    }

    /// Gold label indices of a sentence under the current taxonomy.
    pub fn gold_indices(&self, s: &Sentence) -> Result<Vec<usize>> {
        s.tags
            .iter()
            .map(|t| {
                self.taxonomy.label_index(t).ok_or_else(|| {
                    Error::Taxonomy(format!("tag `{t}` not in taxonomy {}", self.taxonomy))
                })
            })
            .collect()
    }

    /// Mean token cross-entropy of `batch` evaluated with `store`'s values;
    /// with `with_grad`, gradients of both encoders are added into `store`.
    pub fn batch_loss_with(&self, store: &mut ParamStore, batch: &[&Sentence], with_grad: bool) -> Result<f64> {
        let mut tape = Tape::new();
        let loss = self.record_batch_loss(&mut tape, store, batch)?;
        if with_grad {
            tape.backward(loss, store)?;
        }
        Ok(tape.scalar(loss))
    }

    pub(crate) fn record_batch_loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &[&Sentence],
    ) -> Result<Var> {
        let tokens: usize = batch.iter().map(|s| s.len()).sum();
        if tokens == 0 {
            return Err(Error::EmptyInput("batch has no tokens".into()));
        }
        let b = self.label_var(tape, store)?;
        let mut parts = Vec::with_capacity(batch.len());
        for s in batch {
            if s.is_empty() {
                continue;
            }
            let gold = self.gold_indices(s)?;
            let e = self.token_var(tape, store, &s.tokens)?;
            let logits = tape.matmul_t(e, b)?;
            parts.push(tape.cross_entropy_sum(logits, &gold)?);
        }
        let total = tape.sum(&parts)?;
        Ok(tape.scale(total, 1.0 / tokens as f64))
    }

    /// Loss of one sentence under the current parameters.
    pub fn sentence_loss(&self, s: &Sentence) -> Result<f64> {
        let mut store = self.store.clone();
        self.batch_loss_with(&mut store, &[s], false)
    }

    /// Tags a sentence by per-token argmax against freshly encoded labels.
    pub fn predict_tags<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<Tag>> {
        Predictor::new(self)?.predict(tokens)
    }

    /// Every parameter group's digest, in store order.
    pub fn digests(&self) -> Vec<(String, String)> {
        self.store.digests()
    }

    /// Checks a dataset can be scored against the current label list.
    pub fn check_dataset(&self, d: &Dataset) -> Result<()> {
        let ours: Vec<&str> = self.taxonomy.entity_types().iter().map(|e| e.original.as_str()).collect();
        let theirs: Vec<&str> = d.taxonomy.entity_types().iter().map(|e| e.original.as_str()).collect();
        if ours != theirs {
            return Err(Error::Taxonomy(format!(
                "model labels {} do not match dataset taxonomy {}",
                self.taxonomy, d.taxonomy
            )));
        }
        Ok(())
    }
}

fn label_contextualizer_kind(config: &ModelConfig) -> ContextualizerKind {
    match config.label_encoder {
        LabelEncoderKind::Learned => config.label_contextualizer,
        LabelEncoderKind::Static => ContextualizerKind::Identity,
    }
}

/// `logits[t][i] = e_t · b_i`, no scaling or bias.
pub fn score_tokens(e: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if e.cols() != b.cols() {
        return Err(shape_err(
            "score_tokens",
            format!("token width {} but label width {}", e.cols(), b.cols()),
        ));
    }
    e.matmul_t(b)
}

/// Token encoder plus a fixed label matrix.
#[derive(Clone, Debug)]
pub struct Predictor<'a> {
    model: &'a ModelState,
    labels: RealMatrix,
    taxonomy: LabelTaxonomy,
}

impl<'a> Predictor<'a> {
    pub fn new(model: &'a ModelState) -> Result<Self> {
        Ok(Self {
            labels: model.label_matrix()?,
            taxonomy: model.taxonomy.clone(),
            model,
        })
    }

    /// Uses cached label vectors; `expected` is the taxonomy in use and must
    /// hash to the cache's taxonomy hash.
    pub fn from_cache(model: &'a ModelState, cache: &super::LabelCache, expected: &LabelTaxonomy) -> Result<Self> {
        let found = expected.hash();
        if found != cache.taxonomy_hash {
            return Err(Error::TaxonomyHashMismatch {
                expected: cache.taxonomy_hash.clone(),
                found,
            });
        }
        if cache.matrix.rows() != expected.num_tagging_labels() {
            return Err(shape_err(
                "label cache",
                format!(
                    "cache has {} rows for {} tagging labels",
                    cache.matrix.rows(),
                    expected.num_tagging_labels()
                ),
            ));
        }
        if cache.matrix.cols() != model.config.dim {
            return Err(shape_err(
                "label cache",
                format!("cache width {}, model width {}", cache.matrix.cols(), model.config.dim),
            ));
        }
        Ok(Self {
            model,
            labels: cache.matrix.clone(),
            taxonomy: expected.clone(),
        })
    }

    pub fn labels(&self) -> &RealMatrix {
        &self.labels
    }

    pub fn taxonomy(&self) -> &LabelTaxonomy {
        &self.taxonomy
    }

    pub fn logits<S: AsRef<str>>(&self, tokens: &[S]) -> Result<RealMatrix> {
        score_tokens(&self.model.token_matrix(tokens)?, &self.labels)
    }

    /// Per-token argmax, lowest index on ties, mapped to surface tags.
    pub fn predict<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<Tag>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let logits = self.logits(tokens)?;
        logits.ensure_finite("predict")?;
        (0..logits.rows())
            .map(|t| {
                let i = argmax(logits.row(t));
                self.taxonomy
                    .tag_for_label(i)
                    .ok_or_else(|| Error::Taxonomy(format!("label index {i} outside taxonomy")))
            })
            .collect()
    }
}
