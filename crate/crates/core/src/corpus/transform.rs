use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};

use super::{Dataset, LabelTaxonomy, Sentence, Tag};

/// Separator between coarse and fine parts of hierarchical type names,
/// as in `person-actor`.
pub const COARSE_SEPARATOR: char = '-';

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RenameMode {
    Original,
    /// `label 1`, `label 2`, ... in taxonomy order.
    Meaningless,
    /// Natural names permuted by a uniformly random derangement.
    Misleading,
    /// Original type name to new natural name; must cover every type.
    Custom(BTreeMap<String, String>),
}

impl RenameMode {
    /// Parses `original`, `meaningless`, `misleading`; custom maps are
    /// loaded separately.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "original" | "none" => Ok(Self::Original),
            "meaningless" => Ok(Self::Meaningless),
            "misleading" => Ok(Self::Misleading),
            _ => Err(Error::InvalidArgument(format!("unknown rename mode `{s}`"))),
        }
    }

    /// Reads a custom map in the taxonomy file format.
    pub fn custom_from_str(text: &str) -> Result<Self> {
        let t = LabelTaxonomy::parse_str(text)?;
        Ok(Self::Custom(
            t.entity_types()
                .iter()
                .map(|e| (e.original.clone(), e.natural.clone()))
                .collect(),
        ))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::Meaningless => "meaningless",
            Self::Misleading => "misleading",
            Self::Custom(_) => "custom",
        }
    }
}

/// Uniformly random permutation of `0..n` without fixed points, by
/// rejection of shuffles. Fails for `n == 1`.
pub fn derangement<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n == 1 {
        return Err(Error::InvalidArgument(
            "a single entity type has no derangement".into(),
        ));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(perm);
        }
    }
}

/// Replaces natural names of entity types. "other" is never renamed.
pub fn rename_taxonomy<R: Rng + ?Sized>(
    t: &LabelTaxonomy,
    mode: &RenameMode,
    rng: &mut R,
) -> Result<LabelTaxonomy> {
    let types = t.entity_types();
    let names: Vec<String> = match mode {
        RenameMode::Original => return Ok(t.clone()),
        RenameMode::Meaningless => (1..=types.len()).map(|i| format!("label {i}")).collect(),
        RenameMode::Misleading => derangement(types.len(), rng)?
            .into_iter()
            .map(|j| types[j].natural.clone())
            .collect(),
        RenameMode::Custom(map) => types
            .iter()
            .map(|e| {
                map.get(&e.original).cloned().ok_or_else(|| {
                    Error::Taxonomy(format!("rename map has no entry for `{}`", e.original))
                })
            })
            .collect::<Result<_>>()?,
    };
    t.with_natural_names(names)
}

fn under_coarse(original: &str, coarse: &str) -> bool {
    original == coarse
        || original
            .strip_prefix(coarse)
            .is_some_and(|rest| rest.starts_with(COARSE_SEPARATOR))
}

/// Keeps only the types under `coarse`, erasing other annotations to `O`,
/// then drops unannotated sentences at random so the annotated-sentence
/// fraction matches the input's. The retained unannotated count is
/// `floor(A' · U / A)` where `A`, `U` are the input's annotated and
/// unannotated counts and `A'` the annotated count after erasure.
/// Sentence order is preserved.
pub fn filter_coarse_type<R: Rng + ?Sized>(
    d: &Dataset,
    coarse: &str,
    rng: &mut R,
) -> Result<Dataset> {
    let kept: Vec<(String, String)> = d
        .taxonomy
        .entity_types()
        .iter()
        .filter(|e| under_coarse(&e.original, coarse))
        .map(|e| (e.original.clone(), e.natural.clone()))
        .collect();
    if kept.is_empty() {
        return Err(Error::Taxonomy(format!(
            "no entity type under coarse type `{coarse}`"
        )));
    }
    let taxonomy = LabelTaxonomy::new(kept)?;

    let original_annotated = d.sentences.iter().filter(|s| s.has_annotation()).count();
    let original_unannotated = d.len() - original_annotated;

    let erased: Vec<Sentence> = d
        .sentences
        .iter()
        .map(|s| Sentence {
            tokens: s.tokens.clone(),
            tags: s
                .tags
                .iter()
                .map(|t| match t.entity_type() {
                    Some(ty) if !under_coarse(ty, coarse) => Tag::Outside,
                    _ => t.clone(),
                })
                .collect(),
        })
        .collect();

    let annotated = erased.iter().filter(|s| s.has_annotation()).count();
    let unannotated: Vec<usize> = (0..erased.len())
        .filter(|&i| !erased[i].has_annotation())
        .collect();
    let target = if original_annotated == 0 {
        unannotated.len()
    } else {
        (annotated * original_unannotated / original_annotated).min(unannotated.len())
    };
    let mut keep = vec![false; erased.len()];
    for (i, s) in erased.iter().enumerate() {
        keep[i] = s.has_annotation();
    }
    for pick in index::sample(rng, unannotated.len(), target) {
        keep[unannotated[pick]] = true;
    }
    let sentences = erased
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect();
    Dataset::new(d.name.clone(), sentences, taxonomy, d.role)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{conll2003_taxonomy, parse_conll_str, DatasetRole};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naturals(t: &LabelTaxonomy) -> Vec<String> {
        t.entity_types().iter().map(|e| e.natural.clone()).collect()
    }

    #[test]
    fn meaningless_names() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = rename_taxonomy(&conll2003_taxonomy(), &RenameMode::Meaningless, &mut rng).unwrap();
        assert_eq!(naturals(&t), ["label 1", "label 2", "label 3", "label 4"]);
        assert_eq!(t.entries()[0].natural, "other");
    }

    #[test]
    fn custom_synonyms() {
        let map = RenameMode::custom_from_str(
            "PER\tindividual\nLOC\tgeographical area\nORG\tcorporation\nMISC\tmiscellaneous\n",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = rename_taxonomy(&conll2003_taxonomy(), &map, &mut rng).unwrap();
        assert_eq!(
            naturals(&t),
            ["individual", "geographical area", "corporation", "miscellaneous"]
        );
        let partial = RenameMode::custom_from_str("PER\tindividual\n").unwrap();
        assert!(rename_taxonomy(&conll2003_taxonomy(), &partial, &mut rng).is_err());
    }

    #[test]
    fn misleading_has_no_fixed_points() {
        let base = conll2003_taxonomy();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = rename_taxonomy(&base, &RenameMode::Misleading, &mut rng).unwrap();
            let before = naturals(&base);
            let after = naturals(&t);
            for (b, a) in before.iter().zip(&after) {
                assert_ne!(a, b, "seed {seed}");
            }
            let mut sorted_a = after.clone();
            let mut sorted_b = before.clone();
            sorted_a.sort();
            sorted_b.sort();
            assert_eq!(sorted_a, sorted_b);
        }
        let one = LabelTaxonomy::new([("Disease", "disease")]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rename_taxonomy(&one, &RenameMode::Misleading, &mut rng).is_err());
    }

    #[test]
    fn derangements_are_uniform_for_four() {
        // 9 derangements of 4 elements; each should appear ~1/9 of the time.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = BTreeMap::new();
        let n = 18_000;
        for _ in 0..n {
            *counts.entry(derangement(4, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 9);
        for &c in counts.values() {
            assert!((c as f64 - n as f64 / 9.0).abs() < 200.0, "{counts:?}");
        }
    }

    fn toy() -> Dataset {
        let text = "\
a B-person-actor\nb O\n\n\
c B-person-artist\nd I-person-artist\n\n\
e B-art-film\n\n\
f B-art-music\ng O\n\n\
h O\n\ni O\n\nj O\n\nk O\n";
        parse_conll_str(text, "toy", None, DatasetRole::Target).unwrap()
    }

    #[test]
    fn coarse_filter_restores_fraction() {
        let d = toy();
        assert_eq!(d.len(), 8);
        // Input: 4 annotated of 8. After erasing art, 2 annotated remain,
        // so floor(2 * 4 / 4) = 2 unannotated sentences are kept.
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = filter_coarse_type(&d, "person", &mut rng).unwrap();
            assert_eq!(f.len(), 4);
            assert_eq!(f.sentences.iter().filter(|s| s.has_annotation()).count(), 2);
            assert_eq!(f.sentences[0].tokens, ["a", "b"]);
            assert_eq!(f.sentences[1].tokens, ["c", "d"]);
            assert_eq!(f.taxonomy.n_l(), 3);
            assert!(f.sentences.iter().flat_map(|s| &s.tags).all(|t| t
                .entity_type()
                .is_none_or(|ty| ty.starts_with("person-"))));
        }
    }

    #[test]
    fn coarse_filter_without_other_types_is_identity() {
        let text = "a B-person-actor\nb O\n\nc O\n\nd B-person-artist\n\ne O\n";
        let d = parse_conll_str(text, "p", None, DatasetRole::Target).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = filter_coarse_type(&d, "person", &mut rng).unwrap();
        assert_eq!(f, d);
    }

    #[test]
    fn coarse_filter_absent_type() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(filter_coarse_type(&toy(), "building", &mut rng).is_err());
        assert!(filter_coarse_type(&toy(), "pers", &mut rng).is_err());
    }

    #[test]
    fn coarse_filter_fraction_within_rounding() {
        use rand::Rng;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let types = ["a-x", "a-y", "b-x", "c-z"];
            let mut text = String::new();
            for _ in 0..rng.random_range(5..40) {
                let len = rng.random_range(1..6);
                for i in 0..len {
                    let tag = if rng.random_bool(0.3) {
                        format!("B-{}", types[rng.random_range(0..types.len())])
                    } else {
                        "O".to_string()
                    };
                    text.push_str(&format!("w{i} {tag}\n"));
                }
                text.push('\n');
            }
            let Ok(d) = parse_conll_str(&text, "r", None, DatasetRole::Target) else { continue };
            let Ok(f) = filter_coarse_type(&d, "a", &mut rng) else { continue };
            let a0 = d.sentences.iter().filter(|s| s.has_annotation()).count();
            if a0 == 0 {
                continue;
            }
            let a1 = f.sentences.iter().filter(|s| s.has_annotation()).count();
            let u1 = f.len() - a1;
            // Every sentence still carrying an `a-*` entity survives.
            let survivors = d
                .sentences
                .iter()
                .filter(|s| s.tags.iter().any(|t| t.entity_type().is_some_and(|ty| ty.starts_with("a-"))))
                .count();
            assert_eq!(a1, survivors);
            let ideal = a1 as f64 * (d.len() - a0) as f64 / a0 as f64;
            let available = d.len() - a1;
            assert!(u1 as f64 <= ideal + 1e-9);
            assert!(ideal - (u1 as f64) < 1.0 || u1 == available);
        }
    }
}
