//! Barycenters of metric-measure spaces by block coordinate descent.
//!
//! Each outer iteration solves K independent relaxation instances coupling
//! every dataset member to the current barycenter structure matrix, then
//! refreshes the structure matrix with the squared-loss closed-form update
//! `C_bar = sum_k w_k pi_k^T C_k pi_k ./ (a a^T)` (entrywise quotient over
//! the barycenter histogram outer product).

use ndarray::Array2;

use crate::sdp::{solve_gw_sdp_tensor, GwSdpSettings};
use crate::transport::{CostMatrix, CouplingPlan, Histogram, QuadCostTensor};
use crate::{GwError, Scalar};

#[derive(Debug, Clone)]
pub struct BarycenterConfig<S> {
    pub bary_size: usize,
    pub bary_hist: Histogram<S>,
    /// Convex weights over the dataset members.
    pub weights: Vec<S>,
    pub max_outer_iters: usize,
    /// Stop when the Frobenius change of the structure matrix drops below this.
    pub convergence_tol: S,
}

impl<S: Scalar> BarycenterConfig<S> {
    pub fn uniform(bary_size: usize, dataset_len: usize) -> Self {
        let w = S::one() / S::of(dataset_len as f64);
        Self {
            bary_size,
            bary_hist: Histogram::uniform(bary_size),
            weights: vec![w; dataset_len],
            max_outer_iters: 20,
            convergence_tol: S::of(1e-7),
        }
    }

    pub fn validate(&self, dataset_len: usize) -> Result<(), GwError> {
        if self.bary_hist.len() != self.bary_size {
            return Err(GwError::DimensionMismatch(
                "barycenter histogram length disagrees with bary_size".into(),
            ));
        }
        if self.weights.len() != dataset_len {
            return Err(GwError::DimensionMismatch(format!(
                "{} weights for {dataset_len} dataset members",
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|&w| w < S::zero()) {
            return Err(GwError::NegativeMass { index: 0, value: f64::NAN });
        }
        let total: S = self.weights.iter().copied().sum();
        if (total - S::one()).abs() > S::of(1e-12) {
            return Err(GwError::InfeasibleMarginals(format!(
                "barycenter weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Barycenter initialization policy.
#[derive(Debug, Clone)]
pub enum BaryInit<S> {
    /// The dataset member whose size is closest to `bary_size`, resampled to
    /// `bary_size` by nearest-index subsampling. Ties pick the lowest index.
    NearestMember,
    /// Seeded random symmetric nonnegative matrix with zero diagonal.
    Random { seed: u64 },
    Given(CostMatrix<S>),
}

/// Squared-loss barycenter structure update. Every plan must couple its
/// space to the barycenter (column marginal equal to the barycenter
/// histogram); the histogram must be strictly positive for the entrywise
/// quotient to exist.
pub fn bary_update<S: Scalar>(
    plans: &[CouplingPlan<S>],
    costs: &[CostMatrix<S>],
    weights: &[S],
    bary_hist: &Histogram<S>,
) -> Result<CostMatrix<S>, GwError> {
    if plans.len() != costs.len() || plans.len() != weights.len() || plans.is_empty() {
        return Err(GwError::DimensionMismatch(
            "plans, costs, and weights must be nonempty and of equal length".into(),
        ));
    }
    let mbar = bary_hist.len();
    for (idx, w) in bary_hist.weights().iter().enumerate() {
        if !(*w > S::zero()) {
            return Err(GwError::ZeroMassBarycenterNode(idx));
        }
    }
    let mut acc = Array2::<S>::zeros((mbar, mbar));
    for ((plan, cost), &w) in plans.iter().zip(costs).zip(weights) {
        let (mk, nk) = plan.shape();
        if nk != mbar {
            return Err(GwError::DimensionMismatch(format!(
                "plan couples to {nk} nodes but the barycenter has {mbar}"
            )));
        }
        if cost.size() != mk {
            return Err(GwError::DimensionMismatch(
                "cost matrix size disagrees with its plan".into(),
            ));
        }
        if plan.marginal_error() > S::of(1e-6) {
            return Err(GwError::InfeasibleMarginals(
                "barycenter update needs feasible plans".into(),
            ));
        }
        // acc += w * pi^T C pi
        let pi = plan.entries();
        let tmp = cost.entries().dot(pi); // mk x mbar
        for a in 0..mbar {
            for b in 0..mbar {
                let mut s = S::zero();
                for i in 0..mk {
                    s += pi[[i, a]] * tmp[[i, b]];
                }
                acc[[a, b]] += w * s;
            }
        }
    }
    for a in 0..mbar {
        for b in 0..mbar {
            acc[[a, b]] /= bary_hist.get(a) * bary_hist.get(b);
        }
    }
    CostMatrix::new(acc)
}

/// Block coordinate descent. Returns the final structure matrix and the
/// per-iteration weighted lower-bound objective.
///
/// Inner solves run at a relaxed conic tolerance for speed; after the loop
/// the plans are re-solved at the caller's full tolerance for the final
/// update and objective. Solver failures carry the index of the offending
/// dataset member.
pub fn solve_barycenter<S: Scalar>(
    dataset: &[(CostMatrix<S>, Histogram<S>)],
    config: &BarycenterConfig<S>,
    init: BaryInit<S>,
    settings: &GwSdpSettings<S>,
) -> Result<(CostMatrix<S>, Vec<S>), GwError> {
    if dataset.is_empty() {
        return Err(GwError::DimensionMismatch("dataset must be nonempty".into()));
    }
    config.validate(dataset.len())?;
    for (k, (c, h)) in dataset.iter().enumerate() {
        if c.size() != h.len() {
            return Err(GwError::BarycenterInner {
                index: k,
                source: Box::new(GwError::DimensionMismatch(
                    "dataset member sizes disagree".into(),
                )),
            });
        }
    }

    let mut cbar = initial_structure(dataset, config, init)?;
    let mut relaxed = settings.clone();
    relaxed.conic.eps_abs = relaxed.conic.eps_abs.max(S::of(1e-5));
    relaxed.conic.eps_rel = relaxed.conic.eps_rel.max(S::of(1e-5));

    let mut history = Vec::new();
    let mut converged = false;
    for _outer in 0..config.max_outer_iters {
        let (plans, objective) = solve_all(dataset, &cbar, config, &relaxed)?;
        history.push(objective);
        let costs: Vec<CostMatrix<S>> = dataset.iter().map(|(c, _)| c.clone()).collect();
        let next = bary_update(&plans, &costs, &config.weights, &config.bary_hist)?;
        let mut change = S::zero();
        for a in 0..config.bary_size {
            for b in 0..config.bary_size {
                let d = next.entries()[[a, b]] - cbar.entries()[[a, b]];
                change += d * d;
            }
        }
        cbar = next;
        if change.sqrt() <= config.convergence_tol {
            converged = true;
            break;
        }
    }
    let _ = converged;

    // Final pass at full tolerance.
    let (plans, objective) = solve_all(dataset, &cbar, config, settings)?;
    history.push(objective);
    let costs: Vec<CostMatrix<S>> = dataset.iter().map(|(c, _)| c.clone()).collect();
    let cbar = bary_update(&plans, &costs, &config.weights, &config.bary_hist)?;
    Ok((cbar, history))
}

fn solve_all<S: Scalar>(
    dataset: &[(CostMatrix<S>, Histogram<S>)],
    cbar: &CostMatrix<S>,
    config: &BarycenterConfig<S>,
    settings: &GwSdpSettings<S>,
) -> Result<(Vec<CouplingPlan<S>>, S), GwError> {
    let mut plans = Vec::with_capacity(dataset.len());
    let mut objective = S::zero();
    for (k, (ck, ak)) in dataset.iter().enumerate() {
        let tensor = QuadCostTensor::squared(ck, cbar);
        let result = solve_gw_sdp_tensor(&tensor, ak, &config.bary_hist, settings)
            .map_err(|e| GwError::BarycenterInner { index: k, source: Box::new(e) })?;
        objective += config.weights[k] * result.lower_bound;
        plans.push(result.plan);
    }
    Ok((plans, objective))
}

fn initial_structure<S: Scalar>(
    dataset: &[(CostMatrix<S>, Histogram<S>)],
    config: &BarycenterConfig<S>,
    init: BaryInit<S>,
) -> Result<CostMatrix<S>, GwError> {
    let mbar = config.bary_size;
    match init {
        BaryInit::Given(c) => {
            if c.size() != mbar {
                return Err(GwError::DimensionMismatch(
                    "given initial structure has the wrong size".into(),
                ));
            }
            Ok(c)
        }
        BaryInit::NearestMember => {
            let mut best = 0usize;
            let mut best_gap = usize::MAX;
            for (k, (c, _)) in dataset.iter().enumerate() {
                let gap = c.size().abs_diff(mbar);
                if gap < best_gap {
                    best_gap = gap;
                    best = k;
                }
            }
            let src = &dataset[best].0;
            let msrc = src.size();
            let pick = |idx: usize| -> usize {
                if mbar <= 1 {
                    0
                } else {
                    // nearest-index subsampling of 0..msrc onto 0..mbar
                    let num = idx * (msrc - 1) + (mbar - 1) / 2;
                    (num / (mbar - 1)).min(msrc - 1)
                }
            };
            let mut out = Array2::zeros((mbar, mbar));
            for a in 0..mbar {
                for b in 0..mbar {
                    out[[a, b]] = src.entries()[[pick(a), pick(b)]];
                }
            }
            CostMatrix::new(out)
        }
        BaryInit::Random { seed } => {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut unif = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                ((state >> 11) as f64) / (1u64 << 53) as f64
            };
            let mut out = Array2::zeros((mbar, mbar));
            for a in 0..mbar {
                for b in (a + 1)..mbar {
                    let v = S::of(unif());
                    out[[a, b]] = v;
                    out[[b, a]] = v;
                }
            }
            CostMatrix::new(out)
        }
    }
}
