//! Fused relaxation: interpolates a linear feature-matching cost with the
//! quadratic structure cost, `(1 - xi) <M, pi> + xi <L, P>`. At xi = 0 the
//! program degenerates to the Kantorovich LP; at xi = 1 it is the plain
//! relaxation.

use ndarray::Array2;

use crate::sdp::{GwSdpResult, GwSdpSettings};
use crate::transport::{CostMatrix, Histogram, QuadCostTensor};
use crate::{GwError, Scalar};

/// Feature-cost configuration: pairwise feature distances and the
/// interpolation weight xi in [0, 1].
#[derive(Debug, Clone)]
pub struct FusedConfig<S> {
    pub feature_cost: Array2<S>,
    pub xi: S,
}

impl<S: Scalar> FusedConfig<S> {
    pub fn new(feature_cost: Array2<S>, xi: S) -> Result<Self, GwError> {
        if !(xi >= S::zero() && xi <= S::one()) {
            return Err(GwError::DimensionMismatch(format!(
                "interpolation weight must lie in [0, 1], got {xi}"
            )));
        }
        if feature_cost.iter().any(|v| !v.is_finite()) {
            return Err(GwError::NumericalFailure("feature cost has non-finite entries".into()));
        }
        if feature_cost.iter().any(|&v| v < S::zero()) {
            return Err(GwError::NumericalFailure("feature cost has negative entries".into()));
        }
        Ok(Self { feature_cost, xi })
    }
}

/// Solves the fused program with the squared structure loss. Certificate
/// semantics carry over: the lower bound is
/// `(1 - xi) <M, pi> + xi <L, P>` and the upper bound substitutes the plan's
/// quadratic objective for the `<L, P>` term.
pub fn solve_fgw_sdp<S: Scalar>(
    feature_cost: &Array2<S>,
    c: &CostMatrix<S>,
    d: &CostMatrix<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    xi: S,
    settings: &GwSdpSettings<S>,
) -> Result<GwSdpResult<S>, GwError> {
    let tensor = QuadCostTensor::squared(c, d);
    solve_fgw_sdp_tensor(feature_cost, &tensor, alpha, beta, xi, settings)
}

pub fn solve_fgw_sdp_tensor<S: Scalar>(
    feature_cost: &Array2<S>,
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    xi: S,
    settings: &GwSdpSettings<S>,
) -> Result<GwSdpResult<S>, GwError> {
    let config = FusedConfig::new(feature_cost.clone(), xi)?;
    let (result, _) = crate::sdp::solve::solve_internal(
        tensor,
        Some(&config.feature_cost),
        config.xi,
        alpha,
        beta,
        settings,
    )?;
    Ok(result)
}
