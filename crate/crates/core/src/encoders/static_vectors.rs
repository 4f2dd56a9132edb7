use std::io::BufRead;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{gaussian, RealMatrix};

use super::vocab::{Vocabulary, MASK_INDEX, PAD_INDEX, UNK_INDEX};

/// Word vectors read from a text file, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticVectors {
    pub dim: usize,
    pub entries: Vec<(String, Vec<f64>)>,
}

impl StaticVectors {
    /// One record per line: a token followed by `dim` reals. Blank lines
    /// are skipped.
    pub fn read<R: BufRead>(r: R, dim: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values = fields
                .enumerate()
                .map(|(c, f)| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            line: i + 1,
                            column: c + 2,
                            message: format!("`{f}` is not a finite real"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != dim {
                return Err(Error::StaticVectors(format!(
                    "line {}: vector for `{token}` has {} components, expected {dim}",
                    i + 1,
                    values.len()
                )));
            }
            entries.push((token.to_string(), values));
        }
        Ok(Self { dim, entries })
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(w, _)| w.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    /// Vocabulary entries (specials excluded) that received a file vector.
    pub covered: usize,
    pub total: usize,
}

impl CoverageReport {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

/// Overwrites rows of `table` with file vectors. Later duplicates of a
/// word (after vocabulary normalization) are ignored.
pub fn apply_static_vectors(
    table: &mut RealMatrix,
    vocab: &Vocabulary,
    vectors: &StaticVectors,
) -> Result<CoverageReport> {
    if table.cols() != vectors.dim || table.rows() != vocab.len() {
        return Err(Error::StaticVectors(format!(
            "table is {:?} but vocabulary has {} entries and vectors have dimension {}",
            table.shape(),
            vocab.len(),
            vectors.dim
        )));
    }
    let mut seen = vec![false; vocab.len()];
    for (word, values) in &vectors.entries {
        if let Some(i) = vocab.get(word) {
            if !seen[i] {
                seen[i] = true;
                table.row_mut(i).copy_from_slice(values);
            }
        }
    }
    let specials = [PAD_INDEX, UNK_INDEX, MASK_INDEX];
    let covered = (0..vocab.len())
        .filter(|i| !specials.contains(i) && seen[*i])
        .count();
    Ok(CoverageReport {
        covered,
        total: vocab.len() - specials.len(),
    })
}

/// Embedding table with the standard `N(0, 1/d)` initialization.
pub fn random_embedding_table<R: Rng + ?Sized>(rows: usize, dim: usize, rng: &mut R) -> RealMatrix {
    gaussian(rows, dim, 1.0 / (dim as f64).sqrt(), rng)
}

/// Reads vectors and builds a table: covered words take their file vector,
/// everything else is drawn from the standard random scheme.
pub fn load_static_vectors<R: BufRead, G: Rng + ?Sized>(
    reader: R,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut G,
) -> Result<(RealMatrix, CoverageReport)> {
    let vectors = StaticVectors::read(reader, dim)?;
    let mut table = random_embedding_table(vocab.len(), dim, rng);
    let report = apply_static_vectors(&mut table, vocab, &vectors)?;
    Ok((table, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab(words: &str) -> Vocabulary {
        let s = Sentence::untagged(words.split_whitespace().map(str::to_string).collect());
        Vocabulary::build(&[s], 1, Vec::<String>::new(), true)
    }

    #[test]
    fn full_coverage_copies_rows() {
        let v = vocab("a b");
        let text = "a 1 2\nb 3 4\n";
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (t, r) = load_static_vectors(text.as_bytes(), &v, 2, &mut rng).unwrap();
        assert_eq!((r.covered, r.total), (2, 2));
        assert_eq!(t.row(v.lookup("a")), [1.0, 2.0]);
        assert_eq!(t.row(v.lookup("b")), [3.0, 4.0]);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let v = vocab("a");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = load_static_vectors("a 1 2 3\n".as_bytes(), &v, 2, &mut rng).unwrap_err();
        assert!(matches!(err, Error::StaticVectors(_)));
        assert!(load_static_vectors("a 1 x\n".as_bytes(), &v, 2, &mut rng).is_err());
    }

    #[test]
    fn half_coverage() {
        let v = vocab("a b c d");
        let text = "b 0 1\nzz 1 1\nD 2 2\n";
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, r) = load_static_vectors(text.as_bytes(), &v, 2, &mut rng).unwrap();
        // Recount: b and d (via lowercasing) are in the vocabulary, zz is not.
        let recount = ["a", "b", "c", "d"]
            .iter()
            .filter(|w| text.lines().any(|l| l.split(' ').next().unwrap().to_lowercase() == **w))
            .count();
        assert_eq!(recount, 2);
        assert_eq!(r.coverage(), recount as f64 / 4.0);
    }
}
