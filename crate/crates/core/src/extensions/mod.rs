//! Extensions of the relaxation: fused problems over structured data with
//! node features, and barycenters by block coordinate descent.

mod barycenter;
mod fused;

pub use barycenter::{bary_update, solve_barycenter, BaryInit, BarycenterConfig};
pub use fused::{solve_fgw_sdp, solve_fgw_sdp_tensor, FusedConfig};
