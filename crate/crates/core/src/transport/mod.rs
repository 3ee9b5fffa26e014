//! Core transport types and the quadratic cost tensor.
//!
//! All types are immutable after construction; operations are pure functions.
//! One vectorization convention is shared by every module in this workspace:
//! a plan entry (i, j) of an m x n matrix maps to flat index `i + j * m`
//! (column-major), and the flat cost tensor is indexed accordingly.

mod cost;
mod histogram;
mod plan;
mod tensor;

pub use cost::{CostMatrix, MetricMeasureSpace};
pub use histogram::{make_histogram, Histogram};
pub use plan::CouplingPlan;
pub use tensor::{
    build_cost_tensor, gw_objective, tensor_apply, unvec_index, unvectorize, vec_index,
    vectorize, LossSpec, LossTag, QuadCostTensor,
};
