//! Entropic mirror-descent iterations with Sinkhorn projections.
//!
//! Each outer step multiplies the current plan entrywise by the Gibbs kernel
//! of the linearized cost, then Sinkhorn-projects back onto the coupling
//! polytope. Small regularization strengths switch to log-domain scaling.

use ndarray::Array2;

use crate::transport::{CouplingPlan, Histogram, QuadCostTensor};
use crate::{GwError, Scalar};

/// Below this regularization strength the inner projection runs in the log
/// domain to dodge kernel underflow.
const LOG_DOMAIN_EPSILON: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct EntropicSettings<S> {
    pub epsilon: S,
    pub outer_iters: usize,
    pub sinkhorn_iters: usize,
    pub sinkhorn_tol: S,
}

impl<S: Scalar> Default for EntropicSettings<S> {
    fn default() -> Self {
        Self {
            epsilon: S::of(0.1),
            outer_iters: 200,
            sinkhorn_iters: 500,
            sinkhorn_tol: S::of(1e-9),
        }
    }
}

impl<S: Scalar> EntropicSettings<S> {
    pub fn validate(&self) -> Result<(), GwError> {
        if !(self.epsilon > S::zero()) {
            return Err(GwError::DimensionMismatch(
                "entropic regularization must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Entropic solver; returns the final plan and its unregularized objective.
pub fn solve_gw_entropic<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &EntropicSettings<S>,
) -> Result<(CouplingPlan<S>, S), GwError> {
    settings.validate()?;
    let m = alpha.len();
    let n = beta.len();
    if tensor.m() != m || tensor.n() != n {
        return Err(GwError::DimensionMismatch(format!(
            "tensor is {}x{}, marginals {m} and {n}",
            tensor.m(),
            tensor.n()
        )));
    }
    let log_domain = settings.epsilon < S::of(LOG_DOMAIN_EPSILON);

    let mut pi = CouplingPlan::independent(alpha, beta).entries().clone();
    for _ in 0..settings.outer_iters {
        let cost = tensor.apply(&pi)?;
        let next = if log_domain {
            mirror_step_log(&pi, &cost, alpha, beta, settings)?
        } else {
            mirror_step(&pi, &cost, alpha, beta, settings)?
        };
        let mut change = S::zero();
        for i in 0..m {
            for j in 0..n {
                change = change.max((next[[i, j]] - pi[[i, j]]).abs());
            }
        }
        pi = next;
        if change <= S::of(1e-13) {
            break;
        }
    }

    let err = marginal_error(&pi, alpha, beta);
    if err > settings.sinkhorn_tol {
        return Err(GwError::NumericalFailure(format!(
            "inner scaling stopped at marginal error {:e} > tolerance",
            err.as_f64()
        )));
    }
    let objective = tensor.objective(&pi)?;
    let plan = CouplingPlan::with_tolerance(
        pi,
        alpha.clone(),
        beta.clone(),
        settings.sinkhorn_tol * S::of(1.0 + 1e-6) + S::of(1e-15),
    )?;
    Ok((plan, objective))
}

fn marginal_error<S: Scalar>(pi: &Array2<S>, alpha: &Histogram<S>, beta: &Histogram<S>) -> S {
    let (m, n) = pi.dim();
    let mut worst = S::zero();
    for i in 0..m {
        let s: S = pi.row(i).iter().copied().sum();
        worst = worst.max((s - alpha.get(i)).abs());
    }
    for j in 0..n {
        let s: S = pi.column(j).iter().copied().sum();
        worst = worst.max((s - beta.get(j)).abs());
    }
    worst
}

/// Kernel composition and Sinkhorn scaling in the ordinary domain.
fn mirror_step<S: Scalar>(
    pi: &Array2<S>,
    cost: &Array2<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &EntropicSettings<S>,
) -> Result<Array2<S>, GwError> {
    let (m, n) = pi.dim();
    let mut k = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            k[[i, j]] = pi[[i, j]] * (-cost[[i, j]] / settings.epsilon).exp();
        }
    }
    for i in 0..m {
        if alpha.get(i) > S::zero() && k.row(i).iter().all(|&v| v == S::zero()) {
            return Err(GwError::NumericalUnderflow(format!(
                "kernel row {i} underflowed; decrease the cost scale or use a \
                 smaller epsilon with log-domain scaling"
            )));
        }
    }
    for j in 0..n {
        if beta.get(j) > S::zero() && k.column(j).iter().all(|&v| v == S::zero()) {
            return Err(GwError::NumericalUnderflow(format!("kernel column {j} underflowed")));
        }
    }

    let mut u = vec![S::one(); m];
    let mut v = vec![S::one(); n];
    for _ in 0..settings.sinkhorn_iters {
        for i in 0..m {
            let mut s = S::zero();
            for j in 0..n {
                s += k[[i, j]] * v[j];
            }
            u[i] = if s > S::zero() { alpha.get(i) / s } else { S::zero() };
        }
        for j in 0..n {
            let mut s = S::zero();
            for i in 0..m {
                s += k[[i, j]] * u[i];
            }
            v[j] = if s > S::zero() { beta.get(j) / s } else { S::zero() };
        }
        let mut worst = S::zero();
        for i in 0..m {
            let mut s = S::zero();
            for j in 0..n {
                s += u[i] * k[[i, j]] * v[j];
            }
            worst = worst.max((s - alpha.get(i)).abs());
        }
        if worst <= settings.sinkhorn_tol {
            break;
        }
    }
    let mut out = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            out[[i, j]] = u[i] * k[[i, j]] * v[j];
        }
    }
    Ok(out)
}

/// Log-domain variant: potentials via streaming log-sum-exp.
fn mirror_step_log<S: Scalar>(
    pi: &Array2<S>,
    cost: &Array2<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    settings: &EntropicSettings<S>,
) -> Result<Array2<S>, GwError> {
    let (m, n) = pi.dim();
    let neg_inf = S::neg_infinity();
    let mut logk = Array2::from_elem((m, n), neg_inf);
    for i in 0..m {
        for j in 0..n {
            if pi[[i, j]] > S::zero() {
                logk[[i, j]] = pi[[i, j]].ln() - cost[[i, j]] / settings.epsilon;
            }
        }
    }
    let log_alpha: Vec<S> = (0..m)
        .map(|i| if alpha.get(i) > S::zero() { alpha.get(i).ln() } else { neg_inf })
        .collect();
    let log_beta: Vec<S> = (0..n)
        .map(|j| if beta.get(j) > S::zero() { beta.get(j).ln() } else { neg_inf })
        .collect();

    let mut f = vec![S::zero(); m];
    let mut g = vec![S::zero(); n];
    for _ in 0..settings.sinkhorn_iters {
        for i in 0..m {
            let mut mx = neg_inf;
            for j in 0..n {
                mx = mx.max(logk[[i, j]] + g[j]);
            }
            f[i] = if mx == neg_inf {
                neg_inf
            } else {
                let mut s = S::zero();
                for j in 0..n {
                    s += (logk[[i, j]] + g[j] - mx).exp();
                }
                log_alpha[i] - (mx + s.ln())
            };
        }
        for j in 0..n {
            let mut mx = neg_inf;
            for i in 0..m {
                mx = mx.max(logk[[i, j]] + f[i]);
            }
            g[j] = if mx == neg_inf {
                neg_inf
            } else {
                let mut s = S::zero();
                for i in 0..m {
                    s += (logk[[i, j]] + f[i] - mx).exp();
                }
                log_beta[j] - (mx + s.ln())
            };
        }
        // marginal check in the ordinary domain
        let mut worst = S::zero();
        for i in 0..m {
            let mut s = S::zero();
            for j in 0..n {
                s += (logk[[i, j]] + f[i] + g[j]).exp();
            }
            worst = worst.max((s - alpha.get(i)).abs());
        }
        if worst <= settings.sinkhorn_tol {
            break;
        }
    }
    let mut out = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            out[[i, j]] = (logk[[i, j]] + f[i] + g[j]).exp();
        }
    }
    Ok(out)
}
