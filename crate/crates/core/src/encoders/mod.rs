//! Token and label encoders sharing one vector space.

mod encoder;
mod labels;
mod static_vectors;
mod vocab;

use rand::Rng;

pub use encoder::{LabelEncoder, LabelEncoderKind, TokenEncoder};
pub use labels::{
    build_contextual_label_inputs, build_label_inputs, ContextSubScheme, LabelInput,
    LabelRepresentationScheme, DEFAULT_CONTEXT_BUDGET,
};
pub use static_vectors::{
    apply_static_vectors, load_static_vectors, random_embedding_table, CoverageReport,
    StaticVectors,
};
pub use vocab::{
    case_class, Vocabulary, CASE_CLASSES, MASK_INDEX, MASK_TOKEN, PAD_INDEX, PAD_TOKEN, UNK_INDEX,
    UNK_TOKEN,
};

use crate::corpus::{LabelTaxonomy, Sentence, TaggingLabel};
use crate::error::Result;
use crate::numeric::{ParamStore, RealMatrix, Tape};

/// Gradient-free `T × d` token representations.
pub fn encode_tokens(
    s: &Sentence,
    store: &ParamStore,
    vocab: &Vocabulary,
    encoder: &TokenEncoder,
) -> Result<RealMatrix> {
    let mut tape = Tape::new();
    let out = encoder.encode(&mut tape, store, vocab, &s.tokens)?;
    Ok(tape.value(out).clone())
}

/// Gradient-free label matrix for prepared inputs.
pub fn encode_label_inputs(
    inputs: &[LabelInput],
    store: &ParamStore,
    vocab: &Vocabulary,
    encoder: &LabelEncoder,
) -> Result<RealMatrix> {
    let mut tape = Tape::new();
    let out = encoder.encode(&mut tape, store, vocab, inputs)?;
    Ok(tape.value(out).clone())
}

/// Builds label inputs under `scheme` and encodes them, one row per label.
#[allow(clippy::too_many_arguments)]
pub fn encode_labels<R: Rng + ?Sized>(
    labels: &[TaggingLabel],
    taxonomy: &LabelTaxonomy,
    store: &ParamStore,
    vocab: &Vocabulary,
    encoder: &LabelEncoder,
    scheme: &LabelRepresentationScheme,
    support: Option<&[Sentence]>,
    rng: &mut R,
) -> Result<RealMatrix> {
    let inputs = build_label_inputs(labels, taxonomy, scheme, support, rng)?;
    encode_label_inputs(&inputs, store, vocab, encoder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{conll2003_taxonomy, expand_tag_labels};
    use crate::numeric::{Contextualizer, ContextualizerKind, PoolStrategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sent(words: &str) -> Sentence {
        Sentence::untagged(words.split_whitespace().map(str::to_string).collect())
    }

    struct Fixture {
        store: ParamStore,
        vocab: Vocabulary,
        tokens: TokenEncoder,
        labels: LabelEncoder,
    }

    fn fixture(kind: ContextualizerKind, label_kind: LabelEncoderKind, case: bool) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let words = ["other", "begin", "inside", "person", "location", "organization", "miscellaneous"];
        let vocab = Vocabulary::build(&[sent("Messi plays in Paris")], 1, words, true);
        let dim = 6;
        let mut store = ParamStore::new();
        let emb = store
            .insert("token.embedding", random_embedding_table(vocab.len(), dim, &mut rng))
            .unwrap();
        let case = case.then(|| {
            store
                .insert("token.case", RealMatrix::zeros(CASE_CLASSES, dim))
                .unwrap()
        });
        let tctx = Contextualizer::init(&mut store, "token.ctx", kind, dim, &mut rng).unwrap();
        let lkind = match label_kind {
            LabelEncoderKind::Learned => kind,
            LabelEncoderKind::Static => ContextualizerKind::Identity,
        };
        let lctx = Contextualizer::init(&mut store, "label.ctx", lkind, dim, &mut rng).unwrap();
        Fixture {
            tokens: TokenEncoder { embedding: emb, case, contextualizer: tctx },
            labels: LabelEncoder {
                kind: label_kind,
                embedding: emb,
                contextualizer: lctx,
                pool: label_kind.default_pool(),
            },
            store,
            vocab,
        }
    }

    #[test]
    fn identity_encoder_returns_embedding_rows() {
        let f = fixture(ContextualizerKind::Identity, LabelEncoderKind::Learned, true);
        let e = encode_tokens(&sent("messi messi"), &f.store, &f.vocab, &f.tokens).unwrap();
        let table = &f.store.get(f.tokens.embedding).values;
        assert_eq!(e.row(0), table.row(f.vocab.lookup("messi")));
        assert_eq!(e.row(0), e.row(1));
        let unk = encode_tokens(&sent("zebra"), &f.store, &f.vocab, &f.tokens).unwrap();
        assert_eq!(unk.row(0), table.row(UNK_INDEX));
        assert!(encode_tokens(&sent(""), &f.store, &f.vocab, &f.tokens).is_err());
    }

    #[test]
    fn attention_encoder_matches_contextualizer_replay() {
        let f = fixture(ContextualizerKind::SelfAttention, LabelEncoderKind::Learned, false);
        let s = sent("messi paris");
        let e = encode_tokens(&s, &f.store, &f.vocab, &f.tokens).unwrap();
        let table = &f.store.get(f.tokens.embedding).values;
        let x = RealMatrix::from_rows(&[table.row(f.vocab.lookup("messi")), table.row(f.vocab.lookup("paris"))]).unwrap();
        let replay = crate::numeric::apply_contextualizer(&x, &f.store, &f.tokens.contextualizer).unwrap();
        assert_eq!(e, replay);
    }

    #[test]
    fn static_mode_other_is_its_vector_and_pairs_are_max_pooled() {
        let f = fixture(ContextualizerKind::SelfAttention, LabelEncoderKind::Static, false);
        let tax = conll2003_taxonomy();
        let labels = expand_tag_labels(&tax).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = encode_labels(
            &labels, &tax, &f.store, &f.vocab, &f.labels,
            &LabelRepresentationScheme::NameOnly, None, &mut rng,
        )
        .unwrap();
        assert_eq!(b.rows(), 9);
        let table = &f.store.get(f.labels.embedding).values;
        assert_eq!(b.row(0), table.row(f.vocab.lookup("other")));
        let vb = table.row(f.vocab.lookup("begin"));
        let vp = table.row(f.vocab.lookup("person"));
        let expected: Vec<f64> = vb.iter().zip(vp).map(|(a, c)| a.max(*c)).collect();
        assert_eq!(b.row(1), expected.as_slice());
    }

    #[test]
    fn label_rows_follow_input_order() {
        let f = fixture(ContextualizerKind::SelfAttention, LabelEncoderKind::Learned, false);
        let labels = expand_tag_labels(&conll2003_taxonomy()).unwrap();
        let inputs: Vec<LabelInput> = labels.iter().map(|l| LabelInput::Name(l.words())).collect();
        let b = encode_label_inputs(&inputs, &f.store, &f.vocab, &f.labels).unwrap();
        let perm = [4, 0, 8, 2, 1, 7, 3, 6, 5];
        let permuted: Vec<LabelInput> = perm.iter().map(|&i| inputs[i].clone()).collect();
        let bp = encode_label_inputs(&permuted, &f.store, &f.vocab, &f.labels).unwrap();
        for (r, &i) in perm.iter().enumerate() {
            assert_eq!(bp.row(r), b.row(i));
        }
    }

    #[test]
    fn tied_single_word_label_equals_token_embedding() {
        let f = fixture(ContextualizerKind::Identity, LabelEncoderKind::Learned, true);
        assert_eq!(f.labels.pool, PoolStrategy::FirstPosition);
        let b = encode_label_inputs(&[LabelInput::Name(vec!["person".into()])], &f.store, &f.vocab, &f.labels)
            .unwrap();
        let e = encode_tokens(&sent("person"), &f.store, &f.vocab, &f.tokens).unwrap();
        assert_eq!(b.row(0), e.row(0));
    }

    #[test]
    fn context_inputs_average_mean_pooled_sentences() {
        let f = fixture(ContextualizerKind::Identity, LabelEncoderKind::Learned, false);
        let ctx = LabelInput::Contexts(vec![
            vec!["person".into(), "plays".into()],
            vec!["in".into()],
        ]);
        let b = encode_label_inputs(&[ctx], &f.store, &f.vocab, &f.labels).unwrap();
        let t = &f.store.get(f.labels.embedding).values;
        let row = |w: &str| t.row(f.vocab.lookup(w)).to_vec();
        let (p, pl, i) = (row("person"), row("plays"), row("in"));
        for c in 0..p.len() {
            let expected = ((p[c] + pl[c]) / 2.0 + i[c]) / 2.0;
            assert!((b.get(0, c) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let f = fixture(ContextualizerKind::SelfAttention, LabelEncoderKind::Learned, true);
        let tax = conll2003_taxonomy();
        let labels = expand_tag_labels(&tax).unwrap();
        let support = vec![Sentence::new(
            vec!["Messi".into(), "plays".into()],
            crate::corpus::tags("B-PER O"),
        )
        .unwrap()];
        let scheme = LabelRepresentationScheme::parse("contextual:LABEL").unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            encode_labels(&labels, &tax, &f.store, &f.vocab, &f.labels, &scheme, Some(&support), &mut rng)
                .unwrap()
        };
        assert_eq!(run(5), run(5));
    }
}
