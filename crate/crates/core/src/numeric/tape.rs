//! Tape-based reverse-mode differentiation over [`RealMatrix`] values.
//!
//! Every operation records its output value and enough context to push a
//! gradient back to its inputs. Parameter reads are recorded as leaves that
//! refer to a [`GroupId`]; [`Tape::backward`] accumulates into the gradient
//! buffers of the matching [`ParamGroup`](super::ParamGroup)s. Constants
//! (inputs, position tables, averaging matrices) receive no gradient.

use crate::error::{shape_err, Result};

use super::matrix::RealMatrix;
use super::ops::{self, PoolStrategy};
use super::params::{GroupId, ParamStore};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Constant,
    Param(GroupId),
    Rows { group: GroupId, indices: Vec<usize> },
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    SoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    ConstLeftMul(RealMatrix, Var),
    Pool {
        input: Var,
        strategy: PoolStrategy,
        winners: Vec<usize>,
    },
    CrossEntropySum {
        logits: Var,
        gold: Vec<usize>,
        probs: RealMatrix,
    },
    Sum(Vec<Var>),
    WeightedSum(Var, RealMatrix),
}

struct Node {
    value: RealMatrix,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: RealMatrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    #[inline]
    pub fn value(&self, v: Var) -> &RealMatrix {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).data()[0]
    }

    pub fn constant(&mut self, m: RealMatrix) -> Var {
        self.push(m, Op::Constant)
    }

    pub fn param(&mut self, store: &ParamStore, id: GroupId) -> Var {
        self.push(store.values(id).clone(), Op::Param(id))
    }

    /// Gathers rows of a parameter matrix (embedding lookup).
    pub fn rows(&mut self, store: &ParamStore, id: GroupId, indices: &[usize]) -> Result<Var> {
        let table = store.values(id);
        let mut out = RealMatrix::zeros(indices.len(), table.cols());
        for (r, &i) in indices.iter().enumerate() {
            if i >= table.rows() {
                return Err(shape_err(
                    "rows",
                    format!("index {i} outside table of {} rows", table.rows()),
                ));
            }
            out.row_mut(r).copy_from_slice(table.row(i));
        }
        Ok(self.push(
            out,
            Op::Rows {
                group: id,
                indices: indices.to_vec(),
            },
        ))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul_t(self.value(b))?;
        Ok(self.push(v, Op::MatMulT(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).scale(s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let v = ops::softmax_rows(self.value(a))?;
        Ok(self.push(v, Op::SoftmaxRows(a)))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts
            .first()
            .map(|p| self.value(*p).rows())
            .ok_or_else(|| shape_err("concat_cols", "no inputs"))?;
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = RealMatrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            let m = self.value(*p);
            if m.rows() != rows {
                return Err(shape_err(
                    "concat_cols",
                    format!("{} rows vs {rows}", m.rows()),
                ));
            }
            for r in 0..rows {
                out.row_mut(r)[offset..offset + m.cols()].copy_from_slice(m.row(r));
            }
            offset += m.cols();
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = parts
            .first()
            .map(|p| self.value(*p).cols())
            .ok_or_else(|| shape_err("concat_rows", "no inputs"))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let m = self.value(*p);
            if m.cols() != cols {
                return Err(shape_err(
                    "concat_rows",
                    format!("{} columns vs {cols}", m.cols()),
                ));
            }
            data.extend_from_slice(m.data());
            rows += m.rows();
        }
        let out = RealMatrix::new(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// `c · a` for a constant matrix `c`.
    pub fn const_left_mul(&mut self, c: RealMatrix, a: Var) -> Result<Var> {
        let v = c.matmul(self.value(a))?;
        Ok(self.push(v, Op::ConstLeftMul(c, a)))
    }

    /// Pools the rows of `a` into a `1 × cols` row.
    pub fn pool(&mut self, a: Var, strategy: PoolStrategy) -> Result<Var> {
        let (v, winners) = ops::pool_with_trace(self.value(a), strategy)?;
        Ok(self.push(
            RealMatrix::row_vector(v),
            Op::Pool {
                input: a,
                strategy,
                winners,
            },
        ))
    }

    /// Summed token negative log-likelihood, as a `1 × 1` node.
    pub fn cross_entropy_sum(&mut self, logits: Var, gold: &[usize]) -> Result<Var> {
        let (total, probs) = ops::cross_entropy_sum(self.value(logits), gold)?;
        Ok(self.push(
            RealMatrix::scalar(total),
            Op::CrossEntropySum {
                logits,
                gold: gold.to_vec(),
                probs,
            },
        ))
    }

    /// Elementwise sum of same-shaped nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| shape_err("sum", "no inputs"))?;
        let mut acc = self.value(*first).clone();
        for p in &parts[1..] {
            acc.add_assign(self.value(*p))?;
        }
        Ok(self.push(acc, Op::Sum(parts.to_vec())))
    }

    /// `Σ w ⊙ a` as a `1 × 1` node.
    pub fn weighted_sum(&mut self, a: Var, weights: RealMatrix) -> Result<Var> {
        let m = self.value(a);
        if m.shape() != weights.shape() {
            return Err(shape_err(
                "weighted_sum",
                format!("{:?} vs {:?}", m.shape(), weights.shape()),
            ));
        }
        let total = super::matrix::dot(m.data(), weights.data());
        Ok(self.push(RealMatrix::scalar(total), Op::WeightedSum(a, weights)))
    }

    /// Propagates d(output)/d(node) back from the scalar `output` and adds
    /// the parameter contributions into `store`'s gradient buffers.
    pub fn backward(&self, output: Var, store: &mut ParamStore) -> Result<()> {
        if self.value(output).shape() != (1, 1) {
            return Err(shape_err(
                "backward",
                format!("output must be 1x1, got {:?}", self.value(output).shape()),
            ));
        }
        let mut grads: Vec<Option<RealMatrix>> = Vec::with_capacity(output.0 + 1);
        grads.resize_with(output.0 + 1, || None);
        grads[output.0] = Some(RealMatrix::scalar(1.0));

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => store.get_mut(*id).gradient.add_assign(&g)?,
                Op::Rows { group, indices } => {
                    let grad = &mut store.get_mut(*group).gradient;
                    for (r, &i) in indices.iter().enumerate() {
                        for (acc, v) in grad.row_mut(i).iter_mut().zip(g.row(r)) {
                            *acc += v;
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b))?;
                    let gb = self.value(*a).t_matmul(&g)?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::MatMulT(a, b) => {
                    let ga = g.matmul(self.value(*b))?;
                    let gb = g.t_matmul(self.value(*a))?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g)?;
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, g.scale(*s))?,
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut ga = RealMatrix::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let yr = y.row(r);
                        let gr = g.row(r);
                        let inner = super::matrix::dot(yr, gr);
                        for (c, out) in ga.row_mut(r).iter_mut().enumerate() {
                            *out = yr[c] * (gr[c] - inner);
                        }
                    }
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let (rows, cols) = self.value(*p).shape();
                        let mut gp = RealMatrix::zeros(rows, cols);
                        for r in 0..rows {
                            gp.row_mut(r)
                                .copy_from_slice(&g.row(r)[offset..offset + cols]);
                        }
                        offset += cols;
                        accumulate(&mut grads, *p, gp)?;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let (rows, cols) = self.value(*p).shape();
                        let start = offset * cols;
                        let gp = RealMatrix::new(
                            rows,
                            cols,
                            g.data()[start..start + rows * cols].to_vec(),
                        )?;
                        offset += rows;
                        accumulate(&mut grads, *p, gp)?;
                    }
                }
                Op::ConstLeftMul(c, a) => {
                    let ga = c.t_matmul(&g)?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Pool {
                    input,
                    strategy,
                    winners,
                } => {
                    let (rows, cols) = self.value(*input).shape();
                    let mut ga = RealMatrix::zeros(rows, cols);
                    let gr = g.row(0);
                    match strategy {
                        PoolStrategy::FirstPosition => ga.row_mut(0).copy_from_slice(gr),
                        PoolStrategy::Mean => {
                            let n = rows as f64;
                            for r in 0..rows {
                                for (o, v) in ga.row_mut(r).iter_mut().zip(gr) {
                                    *o = v / n;
                                }
                            }
                        }
                        PoolStrategy::Max => {
                            for (c, &r) in winners.iter().enumerate() {
                                ga.set(r, c, gr[c]);
                            }
                        }
                    }
                    accumulate(&mut grads, *input, ga)?;
                }
                Op::CrossEntropySum {
                    logits,
                    gold,
                    probs,
                } => {
                    let scale = g.data()[0];
                    let mut ga = probs.clone();
                    for (t, &k) in gold.iter().enumerate() {
                        ga.row_mut(t)[k] -= 1.0;
                    }
                    accumulate(&mut grads, *logits, ga.scale(scale))?;
                }
                Op::Sum(parts) => {
                    for p in parts {
                        accumulate(&mut grads, *p, g.clone())?;
                    }
                }
                Op::WeightedSum(a, w) => {
                    accumulate(&mut grads, *a, w.scale(g.data()[0]))?;
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<RealMatrix>], v: Var, g: RealMatrix) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}
