//! First-order solver for conic programs over zero, nonnegative, and PSD cones.
//!
//! Problems are given in the standard primal form
//!
//! ```text
//! minimize    <c, x>
//! subject to  A x = b,   x in K
//! ```
//!
//! where `K` is a Cartesian product of cone blocks laid out over the stacked
//! variable `x`. PSD blocks live in scaled symmetric vectorization (svec):
//! off-diagonal entries carry a sqrt(2) factor so Euclidean inner products of
//! svec vectors match trace inner products of matrices, and the Euclidean
//! projection in svec coordinates is the matrix PSD projection.
//!
//! The solve itself is operator splitting (ADMM): an affine projection onto
//! `{A x = b}` with a cached factorization, a cone projection, and a dual
//! update, with over-relaxation and Ruiz equilibration.

pub mod eig;
pub mod psd;
pub mod ruiz;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod svec;

pub use eig::symmetric_eigen;
pub use psd::project_psd;
pub use scalar::Scalar;
pub use solver::{residuals, solve};
pub use sparse::SparseMat;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("symmetric eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("KKT system is singular beyond regularization: {0}")]
    SingularKkt(String),
}

/// One block of the cone product. `Psd { order: d }` occupies
/// `d (d + 1) / 2` svec entries of the stacked variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeBlock {
    Zero { dim: usize },
    NonNeg { dim: usize },
    Psd { order: usize },
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::Zero { dim } | ConeBlock::NonNeg { dim } => dim,
            ConeBlock::Psd { order } => svec::svec_len(order),
        }
    }
}

/// Standard-form conic program.
#[derive(Debug, Clone)]
pub struct ConicProblem<S> {
    /// Linear objective over the stacked variable.
    pub objective: Vec<S>,
    /// Equality constraint matrix.
    pub rows: SparseMat<S>,
    /// Equality right-hand side.
    pub rhs: Vec<S>,
    /// Cone layout over the stacked variable, in offset order.
    pub cones: Vec<ConeBlock>,
}

impl<S: Scalar> ConicProblem<S> {
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.objective.len();
        let cone_dim: usize = self.cones.iter().map(|c| c.dim()).sum();
        if cone_dim != n {
            return Err(ConicError::DimensionMismatch(format!(
                "cone blocks cover {cone_dim} entries but the variable has {n}"
            )));
        }
        if self.rows.ncols() != n {
            return Err(ConicError::DimensionMismatch(format!(
                "constraint matrix has {} columns, variable has {n}",
                self.rows.ncols()
            )));
        }
        if self.rows.nrows() != self.rhs.len() {
            return Err(ConicError::DimensionMismatch(format!(
                "{} constraint rows vs {} right-hand sides",
                self.rows.nrows(),
                self.rhs.len()
            )));
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    InfeasibleSuspected,
}

#[derive(Debug, Clone)]
pub struct SolverSettings<S> {
    pub eps_abs: S,
    pub eps_rel: S,
    pub max_iters: usize,
    pub over_relaxation: S,
    /// Static diagonal regularization of the cached Gram factorization; also
    /// what absorbs dependent equality rows.
    pub kkt_reg: S,
    pub ruiz_passes: usize,
    pub rho: S,
    pub adaptive_rho: bool,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
}

impl<S: Scalar> Default for SolverSettings<S> {
    fn default() -> Self {
        Self {
            eps_abs: S::of(1e-7),
            eps_rel: S::of(1e-7),
            max_iters: 200_000,
            over_relaxation: S::of(1.6),
            kkt_reg: S::of(1e-8),
            ruiz_passes: 10,
            rho: S::one(),
            adaptive_rho: true,
            check_every: 25,
        }
    }
}

/// Solution with diagnostics. `dual` stacks the equality multipliers first,
/// then the cone dual variable, so its length is `num_rows + num_vars`.
#[derive(Debug, Clone)]
pub struct ConicSolution<S> {
    pub primal: Vec<S>,
    pub dual: Vec<S>,
    pub n_eq: usize,
    pub status: SolveStatus,
    pub primal_residual: S,
    pub dual_residual: S,
    pub gap: S,
    pub iterations: usize,
}

impl<S: Scalar> ConicSolution<S> {
    pub fn eq_multipliers(&self) -> &[S] {
        &self.dual[..self.n_eq]
    }

    pub fn cone_duals(&self) -> &[S] {
        &self.dual[self.n_eq..]
    }
}
