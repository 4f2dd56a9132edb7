//! Forward kernels shared by the tape and by gradient-free inference.

use crate::error::{Error, Result};

use super::matrix::RealMatrix;

/// How a matrix of row vectors collapses into a single vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoolStrategy {
    Max,
    Mean,
    FirstPosition,
}

impl PoolStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolStrategy::Max => "max",
            PoolStrategy::Mean => "mean",
            PoolStrategy::FirstPosition => "first",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(PoolStrategy::Max),
            "mean" => Ok(PoolStrategy::Mean),
            "first" | "first-position" => Ok(PoolStrategy::FirstPosition),
            other => Err(Error::InvalidArgument(format!(
                "unknown pool strategy `{other}`"
            ))),
        }
    }
}

/// Row-wise softmax with per-row max subtraction.
pub fn softmax_rows(m: &RealMatrix) -> Result<RealMatrix> {
    m.ensure_finite("softmax_rows")?;
    let mut out = m.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    Ok(out)
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn check_gold(logits: &RealMatrix, gold: &[usize]) -> Result<()> {
    if gold.len() != logits.rows() {
        return Err(Error::Shape {
            op: "token_cross_entropy",
            detail: format!("{} gold labels for {} tokens", gold.len(), logits.rows()),
        });
    }
    for (t, &g) in gold.iter().enumerate() {
        if g >= logits.cols() {
            return Err(Error::GoldOutOfRange {
                token: t,
                index: g,
                labels: logits.cols(),
            });
        }
    }
    Ok(())
}

/// Summed negative log-likelihood of the gold labels, plus the softmax
/// probabilities needed for the backward pass.
pub(crate) fn cross_entropy_sum(logits: &RealMatrix, gold: &[usize]) -> Result<(f64, RealMatrix)> {
    check_gold(logits, gold)?;
    logits.ensure_finite("token_cross_entropy")?;
    let mut total = 0.0;
    for (t, &g) in gold.iter().enumerate() {
        let row = logits.row(t);
        total += log_sum_exp(row) - row[g];
    }
    let probs = softmax_rows(logits)?;
    Ok((total, probs))
}

/// Mean over tokens of `-log softmax(logits_t)[gold_t]`.
pub fn token_cross_entropy(logits: &RealMatrix, gold: &[usize]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::EmptyInput("token_cross_entropy over zero tokens".into()));
    }
    let (sum, _) = cross_entropy_sum(logits, gold)?;
    Ok(sum / gold.len() as f64)
}

/// Gradient of [`token_cross_entropy`] with respect to the logits.
pub fn token_cross_entropy_grad(logits: &RealMatrix, gold: &[usize]) -> Result<RealMatrix> {
    if gold.is_empty() {
        return Err(Error::EmptyInput("token_cross_entropy over zero tokens".into()));
    }
    let (_, mut probs) = cross_entropy_sum(logits, gold)?;
    let n = gold.len() as f64;
    for (t, &g) in gold.iter().enumerate() {
        let row = probs.row_mut(t);
        row[g] -= 1.0;
        row.iter_mut().for_each(|v| *v /= n);
    }
    Ok(probs)
}

/// Collapses the rows of `m` into one vector. Also returns, for max
/// pooling, the winning row of each column (lowest row on ties).
pub(crate) fn pool_with_trace(m: &RealMatrix, s: PoolStrategy) -> Result<(Vec<f64>, Vec<usize>)> {
    if m.rows() == 0 {
        return Err(Error::EmptyPool);
    }
    let cols = m.cols();
    match s {
        PoolStrategy::FirstPosition => Ok((m.row(0).to_vec(), Vec::new())),
        PoolStrategy::Mean => {
            let mut out = vec![0.0; cols];
            for r in 0..m.rows() {
                for (o, v) in out.iter_mut().zip(m.row(r)) {
                    *o += v;
                }
            }
            let n = m.rows() as f64;
            out.iter_mut().for_each(|v| *v /= n);
            Ok((out, Vec::new()))
        }
        PoolStrategy::Max => {
            let mut out = m.row(0).to_vec();
            let mut winners = vec![0usize; cols];
            for r in 1..m.rows() {
                for (c, v) in m.row(r).iter().enumerate() {
                    if *v > out[c] {
                        out[c] = *v;
                        winners[c] = r;
                    }
                }
            }
            Ok((out, winners))
        }
    }
}

pub fn pool_rows(m: &RealMatrix, s: PoolStrategy) -> Result<Vec<f64>> {
    pool_with_trace(m, s).map(|(v, _)| v)
}
