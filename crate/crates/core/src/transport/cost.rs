use ndarray::Array2;

use super::Histogram;
use crate::{GwError, Scalar};

/// Pairwise cost (distance) matrix of one space.
///
/// Must be square with finite entries. A zero diagonal and symmetry are
/// properties of genuine cost matrices and some constructions rely on them,
/// but the relaxation itself does not, so they are only reported via
/// [`CostMatrix::metric_warnings`], never enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<S> {
    entries: Array2<S>,
}

impl<S: Scalar> CostMatrix<S> {
    pub fn new(entries: Array2<S>) -> Result<Self, GwError> {
        if entries.nrows() != entries.ncols() {
            return Err(GwError::DimensionMismatch(format!(
                "cost matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(GwError::DimensionMismatch("cost matrix must be nonempty".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(GwError::NumericalFailure("cost matrix has non-finite entries".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self, GwError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(GwError::DimensionMismatch("ragged cost matrix".into()));
        }
        let mut m = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        Self::new(m)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<S> {
        &self.entries
    }

    /// Reports departures from cost-matrix structure (nonzero diagonal,
    /// asymmetry). Informational only.
    pub fn metric_warnings(&self) -> Vec<String> {
        let n = self.size();
        let scale = self
            .entries
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(v.abs()))
            .max(S::one());
        let tol = scale * S::of(1e-12);
        let mut out = Vec::new();
        for i in 0..n {
            if self.entries[[i, i]].abs() > tol {
                out.push(format!("nonzero diagonal entry at {i}: {}", self.entries[[i, i]]));
                break;
            }
        }
        'outer: for i in 0..n {
            for j in (i + 1)..n {
                if (self.entries[[i, j]] - self.entries[[j, i]]).abs() > tol {
                    out.push(format!("asymmetric at ({i}, {j})"));
                    break 'outer;
                }
            }
        }
        out
    }
}

/// A discrete metric-measure space: pairwise costs plus a mass histogram.
#[derive(Debug, Clone)]
pub struct MetricMeasureSpace<S> {
    pub cost: CostMatrix<S>,
    pub mass: Histogram<S>,
}

impl<S: Scalar> MetricMeasureSpace<S> {
    pub fn new(cost: CostMatrix<S>, mass: Histogram<S>) -> Result<Self, GwError> {
        if cost.size() != mass.len() {
            return Err(GwError::DimensionMismatch(format!(
                "cost matrix of size {} vs histogram of length {}",
                cost.size(),
                mass.len()
            )));
        }
        Ok(Self { cost, mass })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
