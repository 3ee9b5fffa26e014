//! Solving the relaxation and extracting the certificate quantities.

use gwkit_conic::{ConicSolution, SolverSettings};
use ndarray::Array2;

use super::assemble::{assemble, SdpLayout};
use super::certificates::{extract_dual_certificate, rank_one_check, DualCertificate};
use crate::transport::{CostMatrix, CouplingPlan, Histogram, QuadCostTensor};
use crate::{GwError, Scalar};

#[derive(Debug, Clone)]
pub struct GwSdpSettings<S> {
    pub conic: SolverSettings<S>,
    /// Rank-one test threshold on the eigenvalue ratio of the bordered matrix.
    pub rank_one_tol: S,
    /// Marginal tolerance for the returned plan after cleanup.
    pub plan_tolerance: S,
    /// On instances with a degenerate optimal face (exact symmetries), a
    /// splitting method converges to the face's center, which blurs the
    /// rank-one structure even when the relaxation is tight. When enabled and
    /// the rank test fails, a second solve pins the attained objective value
    /// and minimizes a deterministic generic tie-break functional, selecting
    /// an extreme point of the optimal face. Dual certificates always come
    /// from the first solve.
    pub extreme_point_refinement: bool,
}

impl<S: Scalar> Default for GwSdpSettings<S> {
    fn default() -> Self {
        Self {
            conic: SolverSettings::default(),
            rank_one_tol: S::of(1e-4),
            plan_tolerance: S::of(1e-6),
            extreme_point_refinement: true,
        }
    }
}

/// Output of one relaxation solve: the feasible plan, the second-moment
/// matrix, the two bounds, the approximation-ratio certificate, the rank-one
/// exactness flag with the top of the bordered spectrum, and raw solver
/// diagnostics.
#[derive(Debug, Clone)]
pub struct GwSdpResult<S> {
    pub plan: CouplingPlan<S>,
    pub second_moment: Array2<S>,
    pub lower_bound: S,
    pub upper_bound: S,
    pub ratio_bound: S,
    pub rank_one: bool,
    pub top_two_eigenvalues: (S, S),
    pub solver: ConicSolution<S>,
}

/// Degenerate-safe quotient `upper / lower`: 1 when both vanish (within the
/// accuracy a first-order solve can certify), +inf when the lower bound is
/// nonpositive while the upper is positive.
pub fn ratio_of_bounds<S: Scalar>(lower: S, upper: S) -> S {
    let zero_tol = S::of(1e-6);
    if lower.abs() <= zero_tol && upper.abs() <= zero_tol {
        S::one()
    } else if lower <= S::zero() && upper > S::zero() {
        S::infinity()
    } else {
        upper / lower
    }
}

/// Squared-loss entry point.
pub fn solve_gw_sdp<S: Scalar>(
    c: &CostMatrix<S>,
    d: &CostMatrix<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &GwSdpSettings<S>,
) -> Result<GwSdpResult<S>, GwError> {
    let tensor = QuadCostTensor::squared(c, d);
    solve_gw_sdp_tensor(&tensor, alpha, beta, settings)
}

/// General entry point for an explicit cost tensor.
pub fn solve_gw_sdp_tensor<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &GwSdpSettings<S>,
) -> Result<GwSdpResult<S>, GwError> {
    let (result, _) = solve_internal(tensor, None, S::one(), alpha, beta, settings)?;
    Ok(result)
}

/// Solve and also extract the named dual certificate from the conic
/// multipliers.
pub fn solve_gw_sdp_certified<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &GwSdpSettings<S>,
) -> Result<(GwSdpResult<S>, DualCertificate<S>), GwError> {
    let (result, layout) = solve_internal(tensor, None, S::one(), alpha, beta, settings)?;
    let cert = extract_dual_certificate(&result.solver, &layout, tensor, alpha, beta)?;
    Ok((result, cert))
}

pub(crate) fn solve_internal<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    feature_cost: Option<&Array2<S>>,
    xi: S,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &GwSdpSettings<S>,
) -> Result<(GwSdpResult<S>, SdpLayout), GwError> {
    let (problem, layout) = assemble(tensor, feature_cost, xi, alpha, beta)?;
    let sol = gwkit_conic::solve(&problem, &settings.conic)?;

    let m = layout.m;
    let n = layout.n;
    let mn = layout.mn;

    // Plan from the nonnegative block, then the marginal cleanup: clip is a
    // no-op (the block is cone-projected), rescale rows toward alpha and
    // columns toward beta once each. No vertex rounding.
    let mut plan_mat = Array2::zeros((m, n));
    for j in 0..n {
        for i in 0..m {
            plan_mat[[i, j]] = sol.primal[layout.off_pi + i + j * m].max(S::zero());
        }
    }
    rescale_once(&mut plan_mat, alpha, beta);
    let plan = CouplingPlan::with_tolerance(
        plan_mat,
        alpha.clone(),
        beta.clone(),
        settings.plan_tolerance,
    )?;

    // Second moment from the nonnegative upper-triangle copy (entrywise
    // exact); consistency with the PSD block is enforced by the tie rows up
    // to the solver's primal residual.
    let mut p = Array2::zeros((mn, mn));
    for c in 0..mn {
        for r in 0..=c {
            let v = sol.primal[layout.off_p + layout.ut(r, c)];
            p[[r, c]] = v;
            p[[c, r]] = v;
        }
    }

    let bounds = |plan: &CouplingPlan<S>, p: &Array2<S>| -> Result<(S, S), GwError> {
        let lower_quad = tensor.inner(p)?;
        let upper_quad = tensor.objective(plan.entries())?;
        match feature_cost {
            None => Ok((lower_quad, upper_quad)),
            Some(fc) => {
                let mut lin = S::zero();
                for j in 0..n {
                    for i in 0..m {
                        lin += fc[[i, j]] * plan.entries()[[i, j]];
                    }
                }
                let one_minus = S::one() - xi;
                Ok((one_minus * lin + xi * lower_quad, one_minus * lin + xi * upper_quad))
            }
        }
    };

    let (mut lower_bound, mut upper_bound) = bounds(&plan, &p)?;
    let (mut rank_one, mut top_two) = rank_one_check(&p, &plan, settings.rank_one_tol)?;
    let mut plan = plan;
    let mut p = p;

    if !rank_one && settings.extreme_point_refinement {
        if let Some((plan2, p2)) =
            refine_extreme_point(&problem, &layout, &sol, alpha, beta, settings)?
        {
            let (rank2, top2) = rank_one_check(&p2, &plan2, settings.rank_one_tol)?;
            if rank2 {
                let (lb2, ub2) = bounds(&plan2, &p2)?;
                plan = plan2;
                p = p2;
                lower_bound = lb2;
                upper_bound = ub2;
                rank_one = rank2;
                top_two = top2;
            }
        }
    }

    // The plan objective is a true upper bound on the optimum while the
    // measured <L, P> carries solver noise; on tight instances the two cross
    // at the residual scale, so the min is the more accurate valid lower
    // bound. This also keeps the reported ratio at least one.
    let lower_bound = lower_bound.min(upper_bound);
    let ratio_bound = ratio_of_bounds(lower_bound, upper_bound);
    Ok((
        GwSdpResult {
            plan,
            second_moment: p,
            lower_bound,
            upper_bound,
            ratio_bound,
            rank_one,
            top_two_eigenvalues: top_two,
            solver: sol,
        },
        layout,
    ))
}

/// Second solve over the attained-value slice of the feasible set with a
/// deterministic generic objective; a generic linear functional attains its
/// minimum over a face at an extreme point, recovering rank-one structure
/// that the face's center blurs.
fn refine_extreme_point<S: Scalar>(
    problem: &gwkit_conic::ConicProblem<S>,
    layout: &SdpLayout,
    sol: &ConicSolution<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &GwSdpSettings<S>,
) -> Result<Option<(CouplingPlan<S>, Array2<S>)>, GwError> {
    let pin: Vec<(usize, S)> = problem
        .objective
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v != S::zero())
        .map(|(k, &v)| (k, v))
        .collect();
    if pin.is_empty() {
        return Ok(None);
    }
    let attained: S = problem
        .objective
        .iter()
        .zip(&sol.primal)
        .map(|(&c, &x)| c * x)
        .sum();
    let slack = S::of(2.0)
        * (settings.conic.eps_abs + settings.conic.eps_rel * (S::one() + attained.abs()));

    let mut p2 = problem.clone();
    p2.rows.push_row(pin);
    p2.rhs.push(attained + slack);
    p2.objective = tie_break_objective(layout);
    let sol2 = match gwkit_conic::solve(&p2, &settings.conic) {
        Ok(s) if s.status == gwkit_conic::SolveStatus::Optimal => s,
        _ => return Ok(None),
    };

    let m = layout.m;
    let n = layout.n;
    let mn = layout.mn;
    let mut plan_mat = Array2::zeros((m, n));
    for j in 0..n {
        for i in 0..m {
            plan_mat[[i, j]] = sol2.primal[layout.off_pi + i + j * m].max(S::zero());
        }
    }
    rescale_once(&mut plan_mat, alpha, beta);
    let plan2 = match CouplingPlan::with_tolerance(
        plan_mat,
        alpha.clone(),
        beta.clone(),
        settings.plan_tolerance,
    ) {
        Ok(p) => p,
        Err(_) => return Ok(None),
    };
    let mut p_mat = Array2::zeros((mn, mn));
    for c in 0..mn {
        for r in 0..=c {
            let v = sol2.primal[layout.off_p + layout.ut(r, c)];
            p_mat[[r, c]] = v;
            p_mat[[c, r]] = v;
        }
    }
    Ok(Some((plan2, p_mat)))
}

/// Deterministic generic functional over the second-moment block: prefers
/// mass on well-separated index pairs, with a tiny hash jitter to break any
/// remaining symmetry. Scale-free; only its minimizer matters.
fn tie_break_objective<S: Scalar>(layout: &SdpLayout) -> Vec<S> {
    let mn = layout.mn;
    let mut c = vec![S::zero(); layout.n_vars];
    for col in 0..mn {
        for r in 0..=col {
            let spread = (col - r) as f64 / mn.max(1) as f64;
            let h = splitmix(((r * mn + col) as u64).wrapping_add(1));
            let w = -spread + 1e-3 * h;
            let pair_weight = if r == col { 1.0 } else { 2.0 };
            c[layout.off_p + layout.ut(r, col)] = S::of(w * pair_weight);
        }
    }
    c
}

fn splitmix(seed: u64) -> f64 {
    let mut z = seed.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    ((z >> 11) as f64) / (1u64 << 53) as f64
}

fn rescale_once<S: Scalar>(plan: &mut Array2<S>, alpha: &Histogram<S>, beta: &Histogram<S>) {
    let (m, n) = plan.dim();
    for i in 0..m {
        let s: S = plan.row(i).iter().copied().sum();
        if s > S::zero() {
            let f = alpha.get(i) / s;
            for j in 0..n {
                plan[[i, j]] *= f;
            }
        } else if alpha.get(i) > S::zero() {
            for j in 0..n {
                plan[[i, j]] = alpha.get(i) * beta.get(j);
            }
        }
    }
    for j in 0..n {
        let s: S = plan.column(j).iter().copied().sum();
        if s > S::zero() {
            let f = beta.get(j) / s;
            for i in 0..m {
                plan[[i, j]] *= f;
            }
        } else if beta.get(j) > S::zero() {
            for i in 0..m {
                plan[[i, j]] = alpha.get(i) * beta.get(j);
            }
        }
    }
}

/// Bordered matrix [[P, vec(pi)], [vec(pi)^T, 1]] of a solution pair.
pub(crate) fn bordered_matrix<S: Scalar>(p: &Array2<S>, pi_vec: &[S]) -> Array2<S> {
    let mn = p.nrows();
    let mut b = Array2::zeros((mn + 1, mn + 1));
    for r in 0..mn {
        for c in 0..mn {
            b[[r, c]] = p[[r, c]];
        }
        b[[r, mn]] = pi_vec[r];
        b[[mn, r]] = pi_vec[r];
    }
    b[[mn, mn]] = S::one();
    b
}

