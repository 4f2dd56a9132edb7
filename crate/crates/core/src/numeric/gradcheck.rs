//! Central finite-difference validation of tape gradients.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

use super::params::ParamStore;

/// Smallest denominator used when forming relative errors, so that
/// coordinates whose true gradient is ~0 are judged on absolute error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_group: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// Coordinates probed per group, in store order.
    pub coordinates: Vec<(String, usize)>,
}

/// Compares analytic gradients against `(f(θ+ε) − f(θ−ε)) / 2ε` on up to
/// `per_group` randomly chosen coordinates of every parameter group.
///
/// `objective(store, with_grad)` must return the loss at the current
/// parameter values and, when `with_grad` is set, add its gradient into the
/// store's gradient buffers.
pub fn check_gradients<F, R>(
    store: &mut ParamStore,
    eps: f64,
    per_group: usize,
    rng: &mut R,
    mut objective: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParamStore, bool) -> Result<f64>,
    R: Rng + ?Sized,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    store.zero_grad();
    objective(store, true)?;
    let analytic: Vec<Vec<f64>> = store
        .groups()
        .iter()
        .map(|g| g.gradient.data().to_vec())
        .collect();
    store.zero_grad();

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_group: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: Vec::new(),
    };

    for gi in 0..store.len() {
        let n = store.groups()[gi].values.data().len();
        let picks = index::sample(rng, n, per_group.min(n)).into_vec();
        report
            .coordinates
            .push((store.groups()[gi].name.clone(), picks.len()));
        for i in picks {
            let original = store.groups()[gi].values.data()[i];
            store.groups_mut()[gi].values.data_mut()[i] = original + eps;
            let plus = objective(store, false)?;
            store.groups_mut()[gi].values.data_mut()[i] = original - eps;
            let minus = objective(store, false)?;
            store.groups_mut()[gi].values.data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[gi][i];
            let denom = a.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
            let rel = (a - numeric).abs() / denom;
            if rel > report.max_relative_error || report.worst_group.is_empty() {
                report.max_relative_error = rel;
                report.worst_group = store.groups()[gi].name.clone();
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{PoolStrategy, RealMatrix, Tape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        RealMatrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn quadratic_loss_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        store.insert("theta", random_matrix(20, 15, &mut rng)).unwrap();
        let report = check_gradients(&mut store, 1e-2, 300, &mut rng, |s, with_grad| {
            let theta = s.groups()[0].values.clone();
            let loss = 0.5 * theta.data().iter().map(|v| v * v).sum::<f64>();
            if with_grad {
                s.groups_mut()[0].gradient.add_assign(&theta)?;
            }
            Ok(loss)
        })
        .unwrap();
        assert!(report.max_relative_error < 1e-9, "{report:?}");
        assert_eq!(report.coordinates[0].1, 300);
    }

    #[test]
    fn zero_step_rejected() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(check_gradients(&mut store, 0.0, 10, &mut rng, |_, _| Ok(0.0)).is_err());
    }

    /// Runs one tape operation on random inputs registered as parameters,
    /// reduced to a scalar by a random weighting.
    fn check_op(
        shapes: &[(usize, usize)],
        build: impl Fn(&mut Tape, &[crate::numeric::Var]) -> crate::numeric::Var,
        seed: u64,
    ) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let ids: Vec<_> = shapes
            .iter()
            .enumerate()
            .map(|(i, &(r, c))| store.insert(format!("in{i}"), random_matrix(r, c, &mut rng)).unwrap())
            .collect();
        let weights = {
            let mut tape = Tape::new();
            let vars: Vec<_> = ids.iter().map(|id| tape.param(&store, *id)).collect();
            let out = build(&mut tape, &vars);
            let (r, c) = tape.value(out).shape();
            random_matrix(r, c, &mut rng)
        };
        let report = check_gradients(&mut store, 1e-5, 200, &mut rng, |s, with_grad| {
            let mut tape = Tape::new();
            let vars: Vec<_> = ids.iter().map(|id| tape.param(s, *id)).collect();
            let out = build(&mut tape, &vars);
            let loss = tape.weighted_sum(out, weights.clone())?;
            if with_grad {
                tape.backward(loss, s)?;
            }
            Ok(tape.scalar(loss))
        })
        .unwrap();
        report.max_relative_error
    }

    #[test]
    fn every_tape_op_passes_finite_differences() {
        for seed in 0..5 {
            let cases: Vec<(&str, f64)> = vec![
                ("matmul", check_op(&[(3, 4), (4, 2)], |t, v| t.matmul(v[0], v[1]).unwrap(), seed)),
                ("matmul_t", check_op(&[(3, 4), (5, 4)], |t, v| t.matmul_t(v[0], v[1]).unwrap(), seed)),
                ("add", check_op(&[(3, 4), (3, 4)], |t, v| t.add(v[0], v[1]).unwrap(), seed)),
                ("scale", check_op(&[(3, 4)], |t, v| t.scale(v[0], -1.7), seed)),
                ("softmax", check_op(&[(3, 5)], |t, v| t.softmax_rows(v[0]).unwrap(), seed)),
                (
                    "concat_cols",
                    check_op(&[(3, 2), (3, 4)], |t, v| t.concat_cols(&[v[0], v[1]]).unwrap(), seed),
                ),
                (
                    "concat_rows",
                    check_op(&[(1, 4), (2, 4)], |t, v| t.concat_rows(&[v[0], v[1]]).unwrap(), seed),
                ),
                (
                    "const_left_mul",
                    check_op(
                        &[(4, 3)],
                        |t, v| {
                            t.const_left_mul(crate::numeric::neighbor_mean_matrix(4, 2, true), v[0])
                                .unwrap()
                        },
                        seed,
                    ),
                ),
                ("pool_max", check_op(&[(4, 3)], |t, v| t.pool(v[0], PoolStrategy::Max).unwrap(), seed)),
                ("pool_mean", check_op(&[(4, 3)], |t, v| t.pool(v[0], PoolStrategy::Mean).unwrap(), seed)),
                (
                    "pool_first",
                    check_op(&[(4, 3)], |t, v| t.pool(v[0], PoolStrategy::FirstPosition).unwrap(), seed),
                ),
                (
                    "cross_entropy",
                    check_op(&[(4, 3)], |t, v| t.cross_entropy_sum(v[0], &[0, 2, 1, 2]).unwrap(), seed),
                ),
                ("sum", check_op(&[(2, 3), (2, 3)], |t, v| t.sum(&[v[0], v[1], v[0]]).unwrap(), seed)),
            ];
            for (name, err) in cases {
                assert!(err < 1e-4, "{name} seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn embedding_rows_scatter_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let table = store.insert("table", random_matrix(6, 3, &mut rng)).unwrap();
        let weights = random_matrix(4, 3, &mut rng);
        let report = check_gradients(&mut store, 1e-5, 200, &mut rng, |s, with_grad| {
            let mut tape = Tape::new();
            let rows = tape.rows(s, table, &[1, 4, 1, 0])?;
            let loss = tape.weighted_sum(rows, weights.clone())?;
            if with_grad {
                tape.backward(loss, s)?;
            }
            Ok(tape.scalar(loss))
        })
        .unwrap();
        assert!(report.max_relative_error < 1e-8, "{report:?}");
    }
}
