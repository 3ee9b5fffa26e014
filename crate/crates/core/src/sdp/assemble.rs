//! Conic-standard-form assembly of the relaxation.
//!
//! Stacked variable layout: one PSD block holding the bordered matrix
//! [[P, vec(pi)], [vec(pi)^T, 1]] of order mn + 1 in svec coordinates, a
//! nonnegative block for the upper triangle of P, and a nonnegative block
//! for pi. The nonnegative copies are tied to the PSD block by equality rows
//! rather than aliased, which keeps the cone blocks disjoint (standard
//! splitting form).

use gwkit_conic::{svec, ConeBlock, ConicProblem, SparseMat};
use ndarray::{Array1, Array2};

use crate::transport::{vectorize, Histogram, QuadCostTensor};
use crate::{GwError, Scalar};

/// Row/column bookkeeping of the assembled program. Row groups, in order:
/// the corner row pinning the bordered 1, coupling marginal rows (the last
/// beta row is dropped as dependent), marginal-moment rows, and the tie rows
/// linking the nonnegative copies of P and pi to the PSD block.
#[derive(Debug, Clone)]
pub struct SdpLayout {
    pub m: usize,
    pub n: usize,
    pub mn: usize,
    pub psd_order: usize,
    pub svec_len: usize,
    pub ut_len: usize,
    pub off_psd: usize,
    pub off_p: usize,
    pub off_pi: usize,
    pub n_vars: usize,
    pub row_corner: usize,
    pub marg_alpha_start: usize,
    pub marg_beta_start: usize,
    pub marg_beta_count: usize,
    pub mar_alpha_start: usize,
    pub mar_beta_start: usize,
    pub tie_ut_start: usize,
    pub tie_border_start: usize,
    pub n_rows: usize,
}

impl SdpLayout {
    pub fn new(m: usize, n: usize) -> Self {
        let mn = m * n;
        let psd_order = mn + 1;
        let svec_len = svec::svec_len(psd_order);
        let ut_len = mn * (mn + 1) / 2;
        let marg_beta_count = n.saturating_sub(1);
        let row_corner = 0;
        let marg_alpha_start = 1;
        let marg_beta_start = marg_alpha_start + m;
        let mar_alpha_start = marg_beta_start + marg_beta_count;
        let mar_beta_start = mar_alpha_start + m * mn;
        let tie_ut_start = mar_beta_start + n * mn;
        let tie_border_start = tie_ut_start + ut_len;
        let n_rows = tie_border_start + mn;
        Self {
            m,
            n,
            mn,
            psd_order,
            svec_len,
            ut_len,
            off_psd: 0,
            off_p: svec_len,
            off_pi: svec_len + ut_len,
            n_vars: svec_len + ut_len + mn,
            row_corner,
            marg_alpha_start,
            marg_beta_start,
            marg_beta_count,
            mar_alpha_start,
            mar_beta_start,
            tie_ut_start,
            tie_border_start,
            n_rows,
        }
    }

    /// Upper-triangle position of the unordered pair {r, c} of flat indices.
    pub fn ut(&self, r: usize, c: usize) -> usize {
        let (lo, hi) = if r <= c { (r, c) } else { (c, r) };
        hi * (hi + 1) / 2 + lo
    }

    pub fn mar_alpha_row(&self, i: usize, kl: usize) -> usize {
        self.mar_alpha_start + i * self.mn + kl
    }

    pub fn mar_beta_row(&self, j: usize, kl: usize) -> usize {
        self.mar_beta_start + j * self.mn + kl
    }

    /// Count of marginal-moment rows.
    pub fn mar_row_count(&self) -> usize {
        (self.m + self.n) * self.mn
    }

    /// Count of assembled coupling-marginal rows (one beta row dropped).
    pub fn marginal_row_count(&self) -> usize {
        self.m + self.marg_beta_count
    }
}

/// The 0/1 indicator vectors behind the marginal-moment rows: `a_i` marks the
/// flat indices {i + j m : j} of plan row i, `b_j` marks {i + j m : i} of
/// plan column j.
#[derive(Debug, Clone)]
pub struct MarginalVectors<S> {
    pub a: Vec<Array1<S>>,
    pub b: Vec<Array1<S>>,
}

impl<S: Scalar> MarginalVectors<S> {
    pub fn new(m: usize, n: usize) -> Self {
        let mn = m * n;
        let mut a = Vec::with_capacity(m);
        for i in 0..m {
            let mut v = Array1::zeros(mn);
            for j in 0..n {
                v[i + j * m] = S::one();
            }
            a.push(v);
        }
        let mut b = Vec::with_capacity(n);
        for j in 0..n {
            let mut v = Array1::zeros(mn);
            for i in 0..m {
                v[i + j * m] = S::one();
            }
            b.push(v);
        }
        Self { a, b }
    }
}

fn sqrt2<S: Scalar>() -> S {
    S::of(std::f64::consts::SQRT_2)
}

/// Assembles the relaxation as a standard-form conic program.
pub fn assemble_gw_sdp<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> Result<(ConicProblem<S>, SdpLayout), GwError> {
    assemble(tensor, None, S::one(), alpha, beta)
}

/// Fused variant: objective `(1 - xi) <M, pi> + xi <L, P>` with a feature
/// cost matrix M attached to the plan block.
pub fn assemble_fgw_sdp<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    feature_cost: &Array2<S>,
    xi: S,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> Result<(ConicProblem<S>, SdpLayout), GwError> {
    assemble(tensor, Some(feature_cost), xi, alpha, beta)
}

pub(crate) fn assemble<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    feature_cost: Option<&Array2<S>>,
    xi: S,
    alpha: &Histogram<S>,
    beta: &Histogram<S>,
) -> Result<(ConicProblem<S>, SdpLayout), GwError> {
    let m = alpha.len();
    let n = beta.len();
    if tensor.m() != m || tensor.n() != n {
        return Err(GwError::DimensionMismatch(format!(
            "tensor is for {}x{} but marginals have lengths {m} and {n}",
            tensor.m(),
            tensor.n()
        )));
    }
    if let Some(fc) = feature_cost {
        if fc.dim() != (m, n) {
            return Err(GwError::DimensionMismatch(format!(
                "feature cost must be {m}x{n}, got {}x{}",
                fc.nrows(),
                fc.ncols()
            )));
        }
    }
    let layout = SdpLayout::new(m, n);
    let mn = layout.mn;
    let lsym = tensor.symmetrized();

    // Objective: <L, P> over the upper-triangle copy of P (off-diagonals
    // weighted twice), plus the optional linear feature term on pi.
    let mut objective = vec![S::zero(); layout.n_vars];
    for c in 0..mn {
        for r in 0..=c {
            let w = if r == c { lsym[[r, c]] } else { S::of(2.0) * lsym[[r, c]] };
            objective[layout.off_p + layout.ut(r, c)] = xi * w;
        }
    }
    if let Some(fc) = feature_cost {
        let one_minus = S::one() - xi;
        for j in 0..n {
            for i in 0..m {
                objective[layout.off_pi + i + j * m] = one_minus * fc[[i, j]];
            }
        }
    }

    let mut rows = SparseMat::new(layout.n_vars);
    let mut rhs = Vec::with_capacity(layout.n_rows);

    // Corner: bottom-right of the bordered matrix equals 1.
    rows.push_row(vec![(layout.off_psd + svec::svec_index(mn, mn), S::one())]);
    rhs.push(S::one());

    // Coupling marginals on the nonnegative pi block. The last beta row is
    // dependent (both families sum to total mass one) and is dropped.
    for i in 0..m {
        let entries: Vec<(usize, S)> =
            (0..n).map(|j| (layout.off_pi + i + j * m, S::one())).collect();
        rows.push_row(entries);
        rhs.push(alpha.get(i));
    }
    for j in 0..layout.marg_beta_count {
        let entries: Vec<(usize, S)> =
            (0..m).map(|i| (layout.off_pi + i + j * m, S::one())).collect();
        rows.push_row(entries);
        rhs.push(beta.get(j));
    }

    // Marginal-moment rows: sum_j P_{(i,j),(k,l)} = alpha_i pi_{k,l} and the
    // beta analogue, expressed on the upper-triangle copy of P.
    for i in 0..m {
        for kl in 0..mn {
            let mut entries: Vec<(usize, S)> = Vec::with_capacity(n + 1);
            for j in 0..n {
                let u = i + j * m;
                entries.push((layout.off_p + layout.ut(u, kl), S::one()));
            }
            entries.push((layout.off_pi + kl, -alpha.get(i)));
            rows.push_row(entries);
            rhs.push(S::zero());
        }
    }
    for j in 0..n {
        for kl in 0..mn {
            let mut entries: Vec<(usize, S)> = Vec::with_capacity(m + 1);
            for i in 0..m {
                let u = i + j * m;
                entries.push((layout.off_p + layout.ut(u, kl), S::one()));
            }
            entries.push((layout.off_pi + kl, -beta.get(j)));
            rows.push_row(entries);
            rhs.push(S::zero());
        }
    }

    // Ties: PSD-block entries equal the nonnegative copies. In svec
    // coordinates an off-diagonal carries sqrt(2) times the matrix entry.
    for c in 0..mn {
        for r in 0..=c {
            let scale = if r == c { S::one() } else { sqrt2() };
            rows.push_row(vec![
                (layout.off_psd + svec::svec_index(r, c), S::one()),
                (layout.off_p + layout.ut(r, c), -scale),
            ]);
            rhs.push(S::zero());
        }
    }
    for r in 0..mn {
        rows.push_row(vec![
            (layout.off_psd + svec::svec_index(r, mn), S::one()),
            (layout.off_pi + r, -sqrt2::<S>()),
        ]);
        rhs.push(S::zero());
    }

    debug_assert_eq!(rows.nrows(), layout.n_rows);

    let problem = ConicProblem {
        objective,
        rows,
        rhs,
        cones: vec![
            ConeBlock::Psd { order: layout.psd_order },
            ConeBlock::NonNeg { dim: layout.ut_len },
            ConeBlock::NonNeg { dim: mn },
        ],
    };
    Ok((problem, layout))
}

/// Embeds a (plan, second moment) pair into the stacked variable; used by the
/// feasibility checks and the unboundedness construction.
pub fn embed_primal<S: Scalar>(
    pi: &Array2<S>,
    p: &Array2<S>,
    layout: &SdpLayout,
) -> Vec<S> {
    let mn = layout.mn;
    debug_assert_eq!(pi.nrows() * pi.ncols(), mn);
    debug_assert_eq!(p.dim(), (mn, mn));
    let mut x = vec![S::zero(); layout.n_vars];
    let v = vectorize(pi);
    // bordered matrix in svec coordinates
    for c in 0..mn {
        for r in 0..=c {
            let val = (p[[r, c]] + p[[c, r]]) / S::of(2.0);
            let idx = layout.off_psd + svec::svec_index(r, c);
            x[idx] = if r == c { val } else { val * sqrt2() };
        }
    }
    for r in 0..mn {
        x[layout.off_psd + svec::svec_index(r, mn)] = v[r] * sqrt2();
    }
    x[layout.off_psd + svec::svec_index(mn, mn)] = S::one();
    for c in 0..mn {
        for r in 0..=c {
            x[layout.off_p + layout.ut(r, c)] = (p[[r, c]] + p[[c, r]]) / S::of(2.0);
        }
    }
    for r in 0..mn {
        x[layout.off_pi + r] = v[r];
    }
    x
}

/// Residuals `A x - b` of the assembled rows at an embedded point.
pub fn constraint_residuals<S: Scalar>(
    problem: &ConicProblem<S>,
    x: &[S],
) -> Vec<S> {
    let mut out = vec![S::zero(); problem.num_rows()];
    problem.rows.matvec(x, &mut out);
    for (r, b) in out.iter_mut().zip(&problem.rhs) {
        *r -= *b;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{CostMatrix, CouplingPlan};
    use ndarray::array;

    fn tensor_2x2() -> QuadCostTensor<f64> {
        let c = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let d = CostMatrix::new(array![[0.0, 2.0], [2.0, 0.0]]).unwrap();
        QuadCostTensor::squared(&c, &d)
    }

    #[test]
    fn row_and_block_counts_match_the_construction() {
        let h = Histogram::from_weights(vec![0.5, 0.5]).unwrap();
        let (p, layout) = assemble_gw_sdp(&tensor_2x2(), &h, &h).unwrap();
        assert_eq!(layout.psd_order, 5);
        assert_eq!(layout.mar_row_count(), 16); // (m + n) mn
        // m + n = 4 marginal equalities, one dependent beta row dropped
        assert_eq!(layout.marginal_row_count(), 3);
        assert_eq!(p.cones[0], ConeBlock::Psd { order: 5 });
        p.validate().unwrap();
    }

    #[test]
    fn rectangular_counts() {
        let c = CostMatrix::new(Array2::<f64>::zeros((2, 2))).unwrap();
        let d = CostMatrix::new(Array2::<f64>::zeros((3, 3))).unwrap();
        let t = QuadCostTensor::squared(&c, &d);
        let a = Histogram::<f64>::uniform(2);
        let b = Histogram::<f64>::uniform(3);
        let (_, layout) = assemble_gw_sdp(&t, &a, &b).unwrap();
        assert_eq!(layout.psd_order, 7);
        assert_eq!(layout.mar_row_count(), 30); // 5 * 6
    }

    #[test]
    fn rank_one_pairs_satisfy_every_assembled_row() {
        let h = Histogram::from_weights(vec![0.5, 0.5]).unwrap();
        let (p, layout) = assemble_gw_sdp(&tensor_2x2(), &h, &h).unwrap();
        let plan = CouplingPlan::independent(&h, &h);
        let v = vectorize(plan.entries());
        let mn = layout.mn;
        let mut pp = Array2::zeros((mn, mn));
        for r in 0..mn {
            for c in 0..mn {
                pp[[r, c]] = v[r] * v[c];
            }
        }
        let x = embed_primal(plan.entries(), &pp, &layout);
        let res = constraint_residuals(&p, &x);
        for (row, r) in res.iter().enumerate() {
            assert!(r.abs() <= 1e-12, "row {row} residual {r}");
        }
    }

    #[test]
    fn marginal_vectors_have_the_right_support() {
        let mv = MarginalVectors::<f64>::new(2, 3);
        for (i, a) in mv.a.iter().enumerate() {
            let ones: Vec<usize> =
                (0..6).filter(|&k| a[k] == 1.0).collect();
            assert_eq!(ones, (0..3).map(|j| i + j * 2).collect::<Vec<_>>());
            assert_eq!(a.iter().filter(|&&v| v == 0.0).count(), 3);
        }
        for (j, b) in mv.b.iter().enumerate() {
            let ones: Vec<usize> =
                (0..6).filter(|&k| b[k] == 1.0).collect();
            assert_eq!(ones, (0..2).map(|i| i + j * 2).collect::<Vec<_>>());
        }
    }

    use ndarray::Array2;
}
