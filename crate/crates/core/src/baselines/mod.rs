//! Baseline solvers: conditional gradient (Frank-Wolfe) and entropic
//! Sinkhorn-projection iterations. Both return feasible plans; neither is
//! guaranteed globally optimal, which is exactly what the relaxation's lower
//! bound measures.

mod cg;
mod entropic;

pub use cg::{solve_gw_cg, CgTrace};
pub use entropic::{solve_gw_entropic, EntropicSettings};
