//! Dense matrices, reverse-mode gradients, and the small layers built on them.

mod contextualizer;
mod gradcheck;
mod matrix;
mod ops;
mod optim;
mod params;
mod tape;

pub use contextualizer::{
    apply_contextualizer, neighbor_mean_matrix, sinusoidal_positions, Contextualizer,
    ContextualizerKind,
};
pub(crate) use contextualizer::gaussian;
pub use gradcheck::{check_gradients, GradCheckReport, RELATIVE_ERROR_FLOOR};
pub use matrix::{argmax, dot, RealMatrix};
pub use ops::{pool_rows, softmax_rows, token_cross_entropy, token_cross_entropy_grad, PoolStrategy};
pub use optim::Adam;
pub use params::{GroupId, ParamGroup, ParamStore};
pub use tape::{Tape, Var};
