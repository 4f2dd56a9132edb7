//! Small sequence contextualizers standing in for a transformer encoder.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{shape_err, Error, Result};

use super::matrix::RealMatrix;
use super::params::{GroupId, ParamStore};
use super::tape::{Tape, Var};

/// Position addends are scaled so they do not swamp unit-scale embeddings.
const POSITION_SCALE_NUMERATOR: f64 = 1.0;
/// The attention output projection starts small so the residual path
/// dominates at initialization.
const OUTPUT_INIT_GAIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContextualizerKind {
    Identity,
    /// Linear map over `[token; mean of w left; mean of w right]`.
    WindowMixer { window: usize },
    /// One single-head scaled-dot-product attention layer with residual.
    SelfAttention,
}

impl ContextualizerKind {
    pub fn name(&self) -> String {
        match self {
            ContextualizerKind::Identity => "identity".into(),
            ContextualizerKind::WindowMixer { window } => format!("window-mixer:{window}"),
            ContextualizerKind::SelfAttention => "self-attention".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "self-attention" | "attention" => Ok(Self::SelfAttention),
            "window-mixer" | "window" => Ok(Self::WindowMixer { window: 2 }),
            other => {
                if let Some(w) = other.strip_prefix("window-mixer:") {
                    let window = w
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad window `{w}`")))?;
                    if window == 0 {
                        return Err(Error::InvalidArgument("window must be >= 1".into()));
                    }
                    Ok(Self::WindowMixer { window })
                } else {
                    Err(Error::InvalidArgument(format!(
                        "unknown contextualizer `{other}`"
                    )))
                }
            }
        }
    }
}

/// Parameter handles for one contextualizer instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Contextualizer {
    pub kind: ContextualizerKind,
    pub dim: usize,
    groups: Vec<GroupId>,
}

impl Contextualizer {
    /// Registers freshly initialized parameters under `prefix`.
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        kind: ContextualizerKind,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let std = 1.0 / (dim as f64).sqrt();
        let groups = match kind {
            ContextualizerKind::Identity => Vec::new(),
            ContextualizerKind::WindowMixer { .. } => {
                let mut w = gaussian(3 * dim, dim, 0.1 * std, rng);
                for i in 0..dim {
                    w.set(i, i, w.get(i, i) + 1.0);
                }
                vec![store.insert(format!("{prefix}.mix"), w)?]
            }
            ContextualizerKind::SelfAttention => vec![
                store.insert(format!("{prefix}.wq"), gaussian(dim, dim, std, rng))?,
                store.insert(format!("{prefix}.wk"), gaussian(dim, dim, std, rng))?,
                store.insert(format!("{prefix}.wv"), gaussian(dim, dim, std, rng))?,
                store.insert(
                    format!("{prefix}.wo"),
                    gaussian(dim, dim, OUTPUT_INIT_GAIN * std, rng),
                )?,
            ],
        };
        Ok(Self { kind, dim, groups })
    }

    /// Re-attaches to parameters already present in `store`.
    pub fn attach(
        store: &ParamStore,
        prefix: &str,
        kind: ContextualizerKind,
        dim: usize,
    ) -> Result<Self> {
        let names: &[&str] = match kind {
            ContextualizerKind::Identity => &[],
            ContextualizerKind::WindowMixer { .. } => &["mix"],
            ContextualizerKind::SelfAttention => &["wq", "wk", "wv", "wo"],
        };
        let groups = names
            .iter()
            .map(|n| store.id(&format!("{prefix}.{n}")))
            .collect::<Result<Vec<_>>>()?;
        let this = Self { kind, dim, groups };
        this.check_shapes(store)?;
        Ok(this)
    }

    pub fn groups(&self) -> &[GroupId] {
        &self.groups
    }

    fn check_shapes(&self, store: &ParamStore) -> Result<()> {
        let expected = match self.kind {
            ContextualizerKind::Identity => (0, 0),
            ContextualizerKind::WindowMixer { .. } => (3 * self.dim, self.dim),
            ContextualizerKind::SelfAttention => (self.dim, self.dim),
        };
        for g in &self.groups {
            let group = store.get(*g);
            if group.values.shape() != expected {
                return Err(shape_err(
                    "contextualizer",
                    format!(
                        "`{}` is {:?}, expected {:?}",
                        group.name,
                        group.values.shape(),
                        expected
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Records the contextualizer on `tape`; `x` is `T × d`.
    pub fn apply(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let (t, d) = tape.value(x).shape();
        if d != self.dim {
            return Err(shape_err(
                "apply_contextualizer",
                format!("input width {d}, contextualizer width {}", self.dim),
            ));
        }
        match self.kind {
            ContextualizerKind::Identity => Ok(x),
            ContextualizerKind::WindowMixer { window } => {
                let left = tape.const_left_mul(neighbor_mean_matrix(t, window, true), x)?;
                let right = tape.const_left_mul(neighbor_mean_matrix(t, window, false), x)?;
                let cat = tape.concat_cols(&[x, left, right])?;
                let w = tape.param(store, self.groups[0]);
                tape.matmul(cat, w)
            }
            ContextualizerKind::SelfAttention => {
                let pos = tape.constant(sinusoidal_positions(t, d));
                let h = tape.add(x, pos)?;
                let wq = tape.param(store, self.groups[0]);
                let wk = tape.param(store, self.groups[1]);
                let wv = tape.param(store, self.groups[2]);
                let wo = tape.param(store, self.groups[3]);
                let q = tape.matmul(h, wq)?;
                let k = tape.matmul(h, wk)?;
                let v = tape.matmul(h, wv)?;
                let scores = tape.matmul_t(q, k)?;
                let scores = tape.scale(scores, 1.0 / (d as f64).sqrt());
                let attn = tape.softmax_rows(scores)?;
                let mixed = tape.matmul(attn, v)?;
                let projected = tape.matmul(mixed, wo)?;
                tape.add(h, projected)
            }
        }
    }
}

/// Gradient-free application of a contextualizer to a `T × d` matrix.
pub fn apply_contextualizer(
    x: &RealMatrix,
    store: &ParamStore,
    ctx: &Contextualizer,
) -> Result<RealMatrix> {
    let mut tape = Tape::new();
    let input = tape.constant(x.clone());
    let out = ctx.apply(&mut tape, store, input)?;
    Ok(tape.value(out).clone())
}

/// Rows average the `window` neighbors on one side; positions outside the
/// sentence contribute zero vectors, so the divisor is always `window`.
pub fn neighbor_mean_matrix(len: usize, window: usize, left: bool) -> RealMatrix {
    let mut m = RealMatrix::zeros(len, len);
    let w = 1.0 / window as f64;
    for t in 0..len {
        for off in 1..=window {
            let j = if left {
                t.checked_sub(off)
            } else {
                Some(t + off).filter(|&j| j < len)
            };
            if let Some(j) = j {
                m.set(t, j, w);
            }
        }
    }
    m
}

/// Standard sine/cosine position table, scaled by `1/√d`.
pub fn sinusoidal_positions(len: usize, dim: usize) -> RealMatrix {
    let scale = POSITION_SCALE_NUMERATOR / (dim as f64).sqrt();
    let mut m = RealMatrix::zeros(len, dim);
    for t in 0..len {
        for i in 0..dim {
            let pair = (i / 2) as f64;
            let angle = t as f64 / 10000f64.powf(2.0 * pair / dim as f64);
            let v = if i % 2 == 0 { angle.sin() } else { angle.cos() };
            m.set(t, i, scale * v);
        }
    }
    m
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> RealMatrix {
    let normal = Normal::new(0.0, std).expect("finite std");
    let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
    RealMatrix::new(rows, cols, data).expect("consistent shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn identity_returns_input() {
        let mut store = ParamStore::new();
        let ctx = Contextualizer::init(&mut store, "c", ContextualizerKind::Identity, 3, &mut rng())
            .unwrap();
        let x = RealMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(apply_contextualizer(&x, &store, &ctx).unwrap(), x);
    }

    #[test]
    fn window_mixer_single_token_sees_zero_neighbors() {
        let mut store = ParamStore::new();
        let ctx = Contextualizer::init(
            &mut store,
            "c",
            ContextualizerKind::WindowMixer { window: 2 },
            2,
            &mut rng(),
        )
        .unwrap();
        let x = RealMatrix::row_vector(vec![0.5, -1.5]);
        let out = apply_contextualizer(&x, &store, &ctx).unwrap();
        let mut cat = vec![0.5, -1.5];
        cat.extend([0.0; 4]);
        let expected = RealMatrix::row_vector(cat)
            .matmul(store.values(ctx.groups()[0]))
            .unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn neighbor_means_divide_by_window() {
        let m = neighbor_mean_matrix(3, 2, true);
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(m.row(1), &[0.5, 0.0, 0.0]);
        assert_eq!(m.row(2), &[0.5, 0.5, 0.0]);
        let m = neighbor_mean_matrix(3, 2, false);
        assert_eq!(m.row(0), &[0.0, 0.5, 0.5]);
        assert_eq!(m.row(2), &[0.0, 0.0, 0.0]);
    }

    /// Replays single-head attention with explicit loops.
    fn attention_oracle(x: &[[f64; 2]; 2], wq: &RealMatrix, wk: &RealMatrix, wv: &RealMatrix, wo: &RealMatrix) -> [[f64; 2]; 2] {
        let d = 2;
        let pos = sinusoidal_positions(2, d);
        let mut h = [[0.0; 2]; 2];
        for t in 0..2 {
            for i in 0..d {
                h[t][i] = x[t][i] + pos.get(t, i);
            }
        }
        let proj = |w: &RealMatrix| {
            let mut out = [[0.0; 2]; 2];
            for t in 0..2 {
                for j in 0..d {
                    for i in 0..d {
                        out[t][j] += h[t][i] * w.get(i, j);
                    }
                }
            }
            out
        };
        let (q, k, v) = (proj(wq), proj(wk), proj(wv));
        let mut out = h;
        for t in 0..2 {
            let s: Vec<f64> = (0..2)
                .map(|u| (q[t][0] * k[u][0] + q[t][1] * k[u][1]) / (d as f64).sqrt())
                .collect();
            let z: f64 = s.iter().map(|v| v.exp()).sum();
            let a: Vec<f64> = s.iter().map(|v| v.exp() / z).collect();
            let mixed = [
                a[0] * v[0][0] + a[1] * v[1][0],
                a[0] * v[0][1] + a[1] * v[1][1],
            ];
            for j in 0..d {
                out[t][j] += mixed[0] * wo.get(0, j) + mixed[1] * wo.get(1, j);
            }
        }
        out
    }

    #[test]
    fn self_attention_matches_step_by_step_oracle() {
        let mut store = ParamStore::new();
        let ctx = Contextualizer::init(&mut store, "c", ContextualizerKind::SelfAttention, 2, &mut rng())
            .unwrap();
        let fixed = [
            [[0.3, -0.2], [0.5, 0.1]],
            [[-0.4, 0.6], [0.2, 0.2]],
            [[1.0, 0.5], [-0.5, 0.25]],
            [[0.7, -0.1], [0.3, 0.9]],
        ];
        for (g, vals) in ctx.groups().to_vec().into_iter().zip(fixed) {
            store.get_mut(g).values = RealMatrix::from_rows(&vals).unwrap();
        }
        let x = [[0.1, 0.9], [-0.3, 0.4]];
        let out = apply_contextualizer(&RealMatrix::from_rows(&x).unwrap(), &store, &ctx).unwrap();
        let ids = ctx.groups();
        let oracle = attention_oracle(
            &x,
            store.values(ids[0]),
            store.values(ids[1]),
            store.values(ids[2]),
            store.values(ids[3]),
        );
        for t in 0..2 {
            for j in 0..2 {
                assert!((out.get(t, j) - oracle[t][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        let mut store = ParamStore::new();
        let ctx = Contextualizer::init(&mut store, "c", ContextualizerKind::SelfAttention, 4, &mut rng())
            .unwrap();
        assert!(apply_contextualizer(&RealMatrix::zeros(2, 3), &store, &ctx).is_err());
        assert!(Contextualizer::attach(&store, "c", ContextualizerKind::SelfAttention, 3).is_err());
        assert!(Contextualizer::attach(&store, "c", ContextualizerKind::SelfAttention, 4).is_ok());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [
            ContextualizerKind::Identity,
            ContextualizerKind::SelfAttention,
            ContextualizerKind::WindowMixer { window: 3 },
        ] {
            assert_eq!(ContextualizerKind::parse(&kind.name()).unwrap(), kind);
        }
    }
}
