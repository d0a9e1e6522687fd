//! Graphical-model estimation, inference, and synthesis.

mod estimate;
mod factor;
mod junction_tree;
mod model;
mod zeros;

pub use estimate::{estimate, estimate_total, objective, EstimateConfig, Measurement};
pub use factor::{logsumexp, Factor, LOG_ZERO};
pub use junction_tree::{jt_size, model_size_mb, JunctionTree, BYTES_PER_CELL};
pub use model::{FitStats, GraphicalModel, ModelDump, Potential};
pub use zeros::{StructuralZeros, ZeroEntry};
