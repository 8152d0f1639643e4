//! Synthetic task generation.
//!
//! Five task families: function-class identification, correlation of two
//! lines, 2D cluster counting, derivative identification across function
//! classes, and derivative identification across quadratic scales. All
//! generators are pure functions of their parameters and a 64-bit seed.

mod clusters;
mod correlation;
mod derivative;
mod function;
mod matrix;
mod task;

pub use clusters::{gen_clusters, ClusterSet, CENTER_MARGIN, CENTER_RADIUS, MAX_CENTER_ATTEMPTS};
pub use correlation::{gen_correlation_pair, pearson_sign, CorrelationPair, Sign, SLOPE_PAIRS};
pub use derivative::{
    gen_derivative_task, DerivativeTask, DerivativeVariant, QuestionParams,
    QUADRATIC_CHOICE_SCALES, QUADRATIC_QUESTION_SCALES, QUADRATIC_SHOT_SCALES,
};
pub use function::{gen_function, gen_series, linspace, FuncType, Series};
pub use matrix::{build_task_matrix, read_archive, write_archive, MatrixSpec, ARCHIVE_SCHEMA_VERSION};
pub use task::{CellParams, Label, Payload, TaskInstance, TaskKind};
