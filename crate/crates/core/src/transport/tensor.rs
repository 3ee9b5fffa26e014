use ndarray::{Array1, Array2};

use super::{CostMatrix, CouplingPlan};
use crate::{GwError, Scalar};

/// Flat index of plan entry (i, j) under the shared column-major convention:
/// `vec(pi) = [pi_11, pi_21, ..., pi_m1, ..., pi_mn]^T`, so (i, j) maps to
/// `i + j * m`. This is a hard API contract; every module uses it.
pub fn vec_index(i: usize, j: usize, m: usize, n: usize) -> Result<usize, GwError> {
    if i >= m || j >= n {
        return Err(GwError::IndexOutOfRange(format!(
            "entry ({i}, {j}) outside a {m}x{n} plan"
        )));
    }
    Ok(i + j * m)
}

/// Inverse of [`vec_index`]; round-trips for every valid pair.
pub fn unvec_index(flat: usize, m: usize, n: usize) -> Result<(usize, usize), GwError> {
    if m == 0 || flat >= m * n {
        return Err(GwError::IndexOutOfRange(format!(
            "flat index {flat} outside a {m}x{n} plan"
        )));
    }
    Ok((flat % m, flat / m))
}

/// Column-major flattening of an m x n matrix.
pub fn vectorize<S: Scalar>(mat: &Array2<S>) -> Array1<S> {
    let (m, n) = mat.dim();
    let mut out = Array1::zeros(m * n);
    for j in 0..n {
        for i in 0..m {
            out[i + j * m] = mat[[i, j]];
        }
    }
    out
}

/// Inverse of [`vectorize`].
pub fn unvectorize<S: Scalar>(v: &Array1<S>, m: usize, n: usize) -> Array2<S> {
    debug_assert_eq!(v.len(), m * n);
    let mut out = Array2::zeros((m, n));
    for j in 0..n {
        for i in 0..m {
            out[[i, j]] = v[i + j * m];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossTag {
    Squared,
    UserDense,
}

/// Loss specification for building the cost tensor: the squared loss has a
/// builder; anything else is supplied as an explicit dense flat matrix.
pub enum LossSpec<S> {
    Squared,
    UserDense(Array2<S>),
}

/// The flattened four-index cost tensor: entry ((i,j),(k,l)) measures the
/// discrepancy between source cost C_ik and target cost D_jl, stored densely
/// as an mn x mn matrix under the column-major flat convention.
#[derive(Debug, Clone)]
pub struct QuadCostTensor<S> {
    flat: Array2<S>,
    m: usize,
    n: usize,
    loss_tag: LossTag,
}

impl<S: Scalar> QuadCostTensor<S> {
    /// Squared-loss tensor: flat[(i,j),(k,l)] = (C_ik - D_jl)^2.
    pub fn squared(c: &CostMatrix<S>, d: &CostMatrix<S>) -> Self {
        let m = c.size();
        let n = d.size();
        let mn = m * n;
        let mut flat = Array2::zeros((mn, mn));
        for j in 0..n {
            for i in 0..m {
                let row = i + j * m;
                for l in 0..n {
                    let djl = d.entries()[[j, l]];
                    for k in 0..m {
                        let diff = c.entries()[[i, k]] - djl;
                        flat[[row, k + l * m]] = diff * diff;
                    }
                }
            }
        }
        Self { flat, m, n, loss_tag: LossTag::Squared }
    }

    /// Wraps a user-supplied dense flat tensor.
    pub fn from_flat(flat: Array2<S>, m: usize, n: usize) -> Result<Self, GwError> {
        if flat.nrows() != m * n || flat.ncols() != m * n {
            return Err(GwError::DimensionMismatch(format!(
                "flat tensor must be {0}x{0} for an {m}x{n} problem, got {1}x{2}",
                m * n,
                flat.nrows(),
                flat.ncols()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(GwError::NumericalFailure("flat tensor has non-finite entries".into()));
        }
        Ok(Self { flat, m, n, loss_tag: LossTag::UserDense })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flat(&self) -> &Array2<S> {
        &self.flat
    }

    pub fn loss_tag(&self) -> LossTag {
        self.loss_tag
    }

    /// Symmetrized flat matrix `(L + L^T) / 2`; the quadratic form only sees
    /// this part, and the squared-loss builder already produces it.
    pub fn symmetrized(&self) -> Array2<S> {
        let mn = self.m * self.n;
        let mut out = Array2::zeros((mn, mn));
        for r in 0..mn {
            for c in 0..mn {
                out[[r, c]] = (self.flat[[r, c]] + self.flat[[c, r]]) / S::of(2.0);
            }
        }
        out
    }

    /// Tensor-matrix product: result[i,j] = sum_{k,l} L[(i,j),(k,l)] pi[k,l],
    /// i.e. the unvec of `flat * vec(pi)`.
    pub fn apply(&self, pi: &Array2<S>) -> Result<Array2<S>, GwError> {
        self.check_shape(pi)?;
        let v = vectorize(pi);
        let prod = self.flat.dot(&v);
        Ok(unvectorize(&prod, self.m, self.n))
    }

    /// The quadratic objective `vec(pi)^T L vec(pi)`.
    pub fn objective(&self, pi: &Array2<S>) -> Result<S, GwError> {
        self.check_shape(pi)?;
        let v = vectorize(pi);
        let prod = self.flat.dot(&v);
        Ok(v.dot(&prod))
    }

    /// `<L, P>` for a dense second-moment matrix P.
    pub fn inner(&self, p: &Array2<S>) -> Result<S, GwError> {
        let mn = self.m * self.n;
        if p.dim() != (mn, mn) {
            return Err(GwError::DimensionMismatch(format!(
                "second moment must be {mn}x{mn}, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        let mut acc = S::zero();
        for r in 0..mn {
            for c in 0..mn {
                acc += self.flat[[r, c]] * p[[r, c]];
            }
        }
        Ok(acc)
    }

    fn check_shape(&self, pi: &Array2<S>) -> Result<(), GwError> {
        if pi.dim() != (self.m, self.n) {
            return Err(GwError::DimensionMismatch(format!(
                "plan must be {}x{}, got {}x{}",
                self.m,
                self.n,
                pi.nrows(),
                pi.ncols()
            )));
        }
        Ok(())
    }
}

/// Builds the cost tensor for a loss specification.
pub fn build_cost_tensor<S: Scalar>(
    c: &CostMatrix<S>,
    d: &CostMatrix<S>,
    loss: LossSpec<S>,
) -> Result<QuadCostTensor<S>, GwError> {
    match loss {
        LossSpec::Squared => Ok(QuadCostTensor::squared(c, d)),
        LossSpec::UserDense(flat) => QuadCostTensor::from_flat(flat, c.size(), d.size()),
    }
}

/// Tensor-matrix multiplication against a coupling plan.
pub fn tensor_apply<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    plan: &CouplingPlan<S>,
) -> Result<Array2<S>, GwError> {
    tensor.apply(plan.entries())
}

/// The Gromov-Wasserstein objective of a plan.
pub fn gw_objective<S: Scalar>(
    tensor: &QuadCostTensor<S>,
    plan: &CouplingPlan<S>,
) -> Result<S, GwError> {
    tensor.objective(plan.entries())
}
