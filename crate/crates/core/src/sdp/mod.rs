//! The semidefinite relaxation of the Gromov-Wasserstein problem.
//!
//! The relaxation minimizes `<L, P>` over pairs (pi, P) where the bordered
//! matrix [[P, vec(pi)], [vec(pi)^T, 1]] is PSD, pi is a coupling of
//! (alpha, beta), P is entrywise nonnegative, and the marginal-moment rows
//! `sum_j P_{(i,j),(k,l)} = alpha_i pi_{k,l}` (and the beta analogue) hold.
//! Any feasible plan pi gives the feasible pair (pi, vec(pi) vec(pi)^T), so
//! the optimal value lower-bounds the nonconvex problem; comparing it with
//! the objective of the returned plan certifies global optimality whenever
//! the two coincide.

mod assemble;
mod certificates;
pub(crate) mod solve;

pub use assemble::{
    assemble_fgw_sdp, assemble_gw_sdp, constraint_residuals, embed_primal, MarginalVectors,
    SdpLayout,
};
pub use certificates::{
    apx_ratio_bound, assemble_dual, check_dual_feasible, dual_g, dual_h, dual_objective,
    extract_dual_certificate, rank_one_check, slater_point, standard_relaxation_feasible,
    unbounded_witness, DualCertificate, DualProblemData,
};
pub use solve::{
    ratio_of_bounds, solve_gw_sdp, solve_gw_sdp_certified, solve_gw_sdp_tensor, GwSdpResult,
    GwSdpSettings,
};
