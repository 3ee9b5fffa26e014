//! Gromov-Wasserstein solver toolkit.
//!
//! The centerpiece is a semidefinite relaxation of the Gromov-Wasserstein
//! problem that returns a feasible transportation plan together with a lower
//! bound on the optimal value, an approximation-ratio certificate, and dual
//! feasibility diagnostics. Exact linear OT (network simplex), a
//! conditional-gradient local solver, and entropic Sinkhorn-based solver are
//! provided as baselines, plus fused (feature-aware) problems and barycenters.
//!
//! Core math is generic over the floating scalar via [`Scalar`]; `f64` aliases
//! for the main types live at the crate root.

pub mod baselines;
pub mod error;
pub mod extensions;
pub mod io;
pub mod linear_ot;
pub mod sdp;
pub mod transport;

pub use error::GwError;
pub use gwkit_conic::Scalar;

pub use transport::{
    build_cost_tensor, gw_objective, make_histogram, tensor_apply, unvec_index, vec_index,
    CostMatrix, CouplingPlan, Histogram, LossSpec, LossTag, MetricMeasureSpace, QuadCostTensor,
};

/// Concrete `f64` aliases for the main domain types.
pub type Histogram64 = transport::Histogram<f64>;
pub type CostMatrix64 = transport::CostMatrix<f64>;
pub type MetricMeasureSpace64 = transport::MetricMeasureSpace<f64>;
pub type CouplingPlan64 = transport::CouplingPlan<f64>;
pub type QuadCostTensor64 = transport::QuadCostTensor<f64>;
pub type OtSolution64 = linear_ot::OtSolution<f64>;
pub type GwSdpResult64 = sdp::GwSdpResult<f64>;
pub type DualCertificate64 = sdp::DualCertificate<f64>;
pub type CgTrace64 = baselines::CgTrace<f64>;
