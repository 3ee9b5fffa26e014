//! Dual certificates and the constructions used by the optimality proofs.
//!
//! The dual program maximizes `lambda^T alpha + mu^T beta - t` subject to a
//! bordered PSD condition on
//!
//! ```text
//! H(eta, theta, Z) = L - Z + (1/2) sum_i (eta^i a_i^T + a_i eta^i^T)
//!                          + (1/2) sum_j (theta^j b_j^T + b_j theta^j^T)
//! ```
//!
//! together with the entrywise conditions `Z >= 0` and
//! `g = sum_i (lambda_i a_i + alpha_i eta^i) + sum_j (mu_j b_j + beta_j theta^j) + 2y <= 0`.
//! Here `a_i`, `b_j` are the 0/1 marginal indicator vectors. Sign conventions
//! are fixed by the feasibility checks below, not by convention alone.

use gwkit_conic::{svec, symmetric_eigen, ConicSolution};
use ndarray::{Array1, Array2};

use super::assemble::SdpLayout;
use super::solve::{bordered_matrix, ratio_of_bounds, GwSdpResult};
use crate::transport::{vectorize, CouplingPlan, Histogram, QuadCostTensor};
use crate::{GwError, Scalar};

/// Named dual variables of the relaxation.
#[derive(Debug, Clone)]
pub struct DualCertificate<S> {
    pub lambda: Vec<S>,
    pub mu: Vec<S>,
    /// One vector of length mn per source point.
    pub eta: Vec<Array1<S>>,
    /// One vector of length mn per target point.
    pub theta: Vec<Array1<S>>,
    /// Entrywise-nonnegative multiplier of `P >= 0`.
    pub z: Array2<S>,
    pub y: Array1<S>,
    pub t: S,
}

/// Static data of the dual program: the symmetrized cost tensor and the
/// marginal indicator vectors.
#[derive(Debug, Clone)]
pub struct DualProblemData<S> {
    pub l_sym: Array2<S>,
    pub m: usize,
    pub n: usize,
    pub alpha: Histogram<S>,
    pub beta: Histogram<S>,
}

/// Collects the data every dual-side check needs.
pub fn assemble_dual<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> Result<DualProblemData<S>, GwError> {
    if tensor.m() != alpha.len() || tensor.n() != beta.len() {
        return Err(GwError::DimensionMismatch(format!(
            "tensor is {}x{}, marginals {} and {}",
            tensor.m(),
            tensor.n(),
            alpha.len(),
            beta.len()
        )));
    }
    Ok(DualProblemData {
        l_sym: tensor.symmetrized(),
        m: tensor.m(),
        n: tensor.n(),
        alpha: alpha.clone(),
        beta: beta.clone(),
    })
}

/// Dual objective `lambda^T alpha + mu^T beta - t`.
pub fn dual_objective<S: Scalar>(
    cert: &DualCertificate<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> S {
    let mut v = S::zero();
    for i in 0..alpha.len() {
        v += cert.lambda[i] * alpha.get(i);
    }
    for j in 0..beta.len() {
        v += cert.mu[j] * beta.get(j);
    }
    v - cert.t
}

/// The entrywise dual inequality
/// `g = sum_i alpha_i eta^i + sum_j beta_j theta^j + 2y + sum_i lambda_i a_i + sum_j mu_j b_j`.
///
/// The accumulation order above is the canonical evaluation every check (and
/// the explicit strictly-feasible construction) relies on.
pub fn dual_g<S: Scalar>(
    cert: &DualCertificate<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> Array1<S> {
    let m = alpha.len();
    let n = beta.len();
    let mn = m * n;
    let mut g = Array1::zeros(mn);
    for kl in 0..mn {
        let mut s = S::zero();
        for i in 0..m {
            s += alpha.get(i) * cert.eta[i][kl];
        }
        for j in 0..n {
            s += beta.get(j) * cert.theta[j][kl];
        }
        s += S::of(2.0) * cert.y[kl];
        s += cert.lambda[kl % m];
        s += cert.mu[kl / m];
        g[kl] = s;
    }
    g
}

/// Builds `H(eta, theta, Z)`.
pub fn dual_h<S: Scalar>(cert: &DualCertificate<S>, data: &DualProblemData<S>) -> Array2<S> {
    let m = data.m;
    let mn = m * data.n;
    let mut h = Array2::zeros((mn, mn));
    let half = S::of(0.5);
    for u in 0..mn {
        for v in 0..mn {
            let mut val = data.l_sym[[u, v]] - cert.z[[u, v]];
            val += half * (cert.eta[v % m][u] + cert.eta[u % m][v]);
            val += half * (cert.theta[v / m][u] + cert.theta[u / m][v]);
            h[[u, v]] = val;
        }
    }
    h
}

/// Verifies dual feasibility within an absolute tolerance: `Z >= -tol`
/// entrywise, `g <= tol` entrywise, and the bordered matrix
/// [[H, y], [y^T, t]] PSD with minimum eigenvalue `>= -tol`.
pub fn check_dual_feasible<S: Scalar>(
    cert: &DualCertificate<S>,
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
    tol: S,
) -> Result<bool, GwError> {
    let data = assemble_dual(tensor, alpha, beta)?;
    if cert.z.iter().any(|&v| v < -tol) {
        return Ok(false);
    }
    let g = dual_g(cert, alpha, beta);
    if g.iter().any(|&v| v > tol) {
        return Ok(false);
    }
    let h = dual_h(cert, &data);
    let mn = data.m * data.n;
    let mut bord = Array2::zeros((mn + 1, mn + 1));
    for u in 0..mn {
        for v in 0..mn {
            bord[[u, v]] = h[[u, v]];
        }
        bord[[u, mn]] = cert.y[u];
        bord[[mn, u]] = cert.y[u];
    }
    bord[[mn, mn]] = cert.t;
    let (vals, _) = symmetric_eigen(&bord)?;
    Ok(vals[0] >= -tol)
}

/// Extracts the named dual variables from the conic multipliers of a solved
/// instance. The equality multipliers supply (lambda, mu, eta, theta); the
/// cone duals supply Z (nonnegative block) and (y, t) (PSD block border).
pub fn extract_dual_certificate<S: Scalar>(
    sol: &ConicSolution<S>,
    layout: &SdpLayout,
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> Result<DualCertificate<S>, GwError> {
    let m = layout.m;
    let n = layout.n;
    let mn = layout.mn;
    if tensor.m() != m || tensor.n() != n || alpha.len() != m || beta.len() != n {
        return Err(GwError::DimensionMismatch(
            "certificate extraction inputs disagree with the layout".into(),
        ));
    }
    let y_eq = sol.eq_multipliers();
    let s = sol.cone_duals();

    let lambda: Vec<S> = (0..m).map(|i| y_eq[layout.marg_alpha_start + i]).collect();
    let mut mu = vec![S::zero(); n];
    for j in 0..layout.marg_beta_count {
        mu[j] = y_eq[layout.marg_beta_start + j];
    }
    let eta: Vec<Array1<S>> = (0..m)
        .map(|i| {
            Array1::from_iter((0..mn).map(|kl| -y_eq[layout.mar_alpha_row(i, kl)]))
        })
        .collect();
    let theta: Vec<Array1<S>> = (0..n)
        .map(|j| {
            Array1::from_iter((0..mn).map(|kl| -y_eq[layout.mar_beta_row(j, kl)]))
        })
        .collect();

    let s_p = &s[layout.off_p..layout.off_p + layout.ut_len];
    let mut z = Array2::zeros((mn, mn));
    for c in 0..mn {
        for r in 0..=c {
            let raw = s_p[layout.ut(r, c)];
            if r == c {
                z[[r, c]] = raw;
            } else {
                let v = raw / S::of(2.0);
                z[[r, c]] = v;
                z[[c, r]] = v;
            }
        }
    }

    let bdual = svec::svec_to_mat(&s[layout.off_psd..layout.off_psd + layout.svec_len],
                                  layout.psd_order);
    let y = Array1::from_iter((0..mn).map(|r| bdual[[r, mn]]));
    let t = bdual[[mn, mn]];

    Ok(DualCertificate { lambda, mu, eta, theta, z, y, t })
}

/// The explicit strictly feasible dual point used to establish zero duality
/// gap: with c = |lambda_min(L)| + 2,
/// `eta^i = c 1`, `theta = 0`, `mu = 0`, `t = 1`, `y = 0`,
/// `Z = c 1 1^T - (c - 1) I`, and a uniform lambda chosen so that
/// `g = -m 1` holds exactly for uniform marginals under the canonical
/// evaluation of [`dual_g`]. Then `H = L + (c - 1) I` has minimum eigenvalue
/// at least 1 and `Z >= 1` entrywise, so every inequality holds strictly.
///
/// For non-uniform marginals the eta term of g still accumulates to c up to
/// roundoff, so g stays strictly negative; only the exact -m identity is
/// specific to uniform weights.
pub fn slater_point<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    m: usize,
    n: usize,
) -> Result<DualCertificate<S>, GwError> {
    if tensor.m() != m || tensor.n() != n {
        return Err(GwError::DimensionMismatch(format!(
            "tensor is {}x{}, expected {m}x{n}",
            tensor.m(),
            tensor.n()
        )));
    }
    let mn = m * n;
    let l_sym = tensor.symmetrized();
    let (vals, _) = symmetric_eigen(&l_sym).map_err(GwError::SolverFailure)?;
    let c = vals[0].abs() + S::of(2.0);

    let eta: Vec<Array1<S>> = (0..m).map(|_| Array1::from_elem(mn, c)).collect();
    let theta: Vec<Array1<S>> = (0..n).map(|_| Array1::zeros(mn)).collect();
    let mut z = Array2::from_elem((mn, mn), c);
    for r in 0..mn {
        // c - (c - 1) is exactly 1 for the magnitudes that arise here
        z[[r, r]] = c - (c - S::one());
    }

    // The eta term of g accumulates the same value in every coordinate;
    // replicate dual_g's order for uniform weights and correct lambda until
    // the final addition lands on -m exactly.
    let w = S::one() / S::of(m as f64);
    let mut acc = S::zero();
    for _ in 0..m {
        acc += w * c;
    }
    let target = -S::of(m as f64);
    let mut lam = target - acc;
    for _ in 0..8 {
        let got = acc + lam;
        if got == target {
            break;
        }
        lam = lam - (got - target);
    }

    let lambda = vec![lam; m];
    let mu = vec![S::zero(); n];
    let y = Array1::zeros(mn);
    let t = S::one();

    Ok(DualCertificate { lambda, mu, eta, theta, z, y, t })
}

/// Eigenvalue-ratio rank test of the bordered solution matrix.
///
/// Returns true iff the two largest eigenvalues satisfy
/// `sigma_2 / sigma_1 <= tol`; on success the reconstruction error
/// `||P - vec(pi) vec(pi)^T||_F` is additionally verified against a bound
/// proportional to tol (policy constant below).
pub fn rank_one_check<S: Scalar>(
    p: &Array2<S>,
    plan: &CouplingPlan<S>,
    tol: S,
) -> Result<(bool, (S, S)), GwError> {
    let v = vectorize(plan.entries());
    let mn = p.nrows();
    if v.len() != mn {
        return Err(GwError::DimensionMismatch(
            "plan and second moment sizes disagree".into(),
        ));
    }
    let bord = bordered_matrix(p, v.as_slice().unwrap());
    let (vals, _) = symmetric_eigen(&bord).map_err(GwError::SolverFailure)?;
    let d = vals.len();
    let sigma1 = vals[d - 1];
    let sigma2 = if d >= 2 { vals[d - 2] } else { S::zero() };
    if !(sigma1 > S::zero()) {
        return Ok((false, (sigma1, sigma2)));
    }
    let rank_one = sigma2 <= tol * sigma1;
    if rank_one {
        let mut err = S::zero();
        for r in 0..mn {
            for c in 0..mn {
                let e = p[[r, c]] - v[r] * v[c];
                err += e * e;
            }
        }
        let err = err.sqrt();
        let bound =
            S::of(100.0) * (S::one() + sigma1) * (S::one() + sigma1) * S::of((mn + 1) as f64) * tol;
        if err > bound {
            return Err(GwError::NumericalFailure(format!(
                "rank-one flag contradicted by reconstruction error {:e} > {:e}",
                err.as_f64(),
                bound.as_f64()
            )));
        }
    }
    Ok((rank_one, (sigma1, sigma2)))
}

/// Approximation-ratio certificate of a solved instance.
pub fn apx_ratio_bound<S: Scalar>(result: &GwSdpResult<S>) -> S {
    ratio_of_bounds(result.lower_bound, result.upper_bound)
}

/// The family that makes the un-tightened relaxation (bordered PSD plus the
/// coupling constraint only) unbounded: for flat indices s, t with
/// `L_st > 0` and zero diagonal at s and t,
/// `P_c = vec(pi) vec(pi)^T + c (e_s - e_t)(e_s - e_t)^T` stays feasible for
/// every `c >= 0` while the objective falls as `-2 c L_st`.
pub fn unbounded_witness<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    plan: &CouplingPlan<S>,
    s_idx: usize,
    t_idx: usize,
    c: S,
) -> Result<(Array2<S>, S), GwError> {
    let mn = tensor.m() * tensor.n();
    if s_idx >= mn || t_idx >= mn || s_idx == t_idx {
        return Err(GwError::BadIndices(format!(
            "need distinct flat indices below {mn}, got {s_idx} and {t_idx}"
        )));
    }
    if c < S::zero() {
        return Err(GwError::BadIndices("perturbation weight must be nonnegative".into()));
    }
    let flat = tensor.flat();
    let scale = flat.iter().fold(S::one(), |acc, &v| acc.max(v.abs()));
    let tiny = scale * S::of(1e-12);
    if !(flat[[s_idx, t_idx]] > S::zero()) {
        return Err(GwError::BadIndices(format!(
            "tensor entry ({s_idx}, {t_idx}) must be positive, got {}",
            flat[[s_idx, t_idx]]
        )));
    }
    if flat[[s_idx, s_idx]].abs() > tiny || flat[[t_idx, t_idx]].abs() > tiny {
        return Err(GwError::BadIndices(
            "witness needs zero tensor diagonal at both indices".into(),
        ));
    }

    let v = vectorize(plan.entries());
    let mut p = Array2::zeros((mn, mn));
    for r in 0..mn {
        for cc in 0..mn {
            p[[r, cc]] = v[r] * v[cc];
        }
    }
    p[[s_idx, s_idx]] += c;
    p[[t_idx, t_idx]] += c;
    p[[s_idx, t_idx]] -= c;
    p[[t_idx, s_idx]] -= c;

    let objective = tensor.inner(&p)?;
    let base = tensor.objective(plan.entries())?;
    let slope = flat[[s_idx, t_idx]] + flat[[t_idx, s_idx]];
    let expect = base - c * slope;
    let tol = S::of(1e-10) * (S::one() + objective.abs().max(expect.abs()));
    if (objective - expect).abs() > tol {
        return Err(GwError::NumericalFailure(format!(
            "witness objective {} does not match the closed form {}",
            objective, expect
        )));
    }
    Ok((p, objective))
}

/// Feasibility checker of the un-tightened relaxation: the pair must satisfy
/// the coupling marginals and the bordered PSD condition, nothing else.
pub fn standard_relaxation_feasible<S: Scalar>(
    plan: &CouplingPlan<S>,
    p: &Array2<S>,
    tol: S,
) -> Result<bool, GwError> {
    if plan.marginal_error() > tol {
        return Ok(false);
    }
    let v = vectorize(plan.entries());
    let bord = bordered_matrix(p, v.as_slice().unwrap());
    let (vals, _) = symmetric_eigen(&bord).map_err(GwError::SolverFailure)?;
    Ok(vals[0] >= -tol)
}
