//! Wire formats. Numbers are IEEE doubles in decimal; matrices are nested
//! row-major arrays.
//!
//! Problem schema: `{"C": m x m, "D": n x n, "alpha": [m], "beta": [n],
//! "loss": "squared" | "dense", "L": mn x mn (column-major flat convention,
//! required when loss = "dense"), "M": m x n (fused only), "xi": number}`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::sdp::GwSdpResult;
use crate::transport::{CostMatrix, Histogram, QuadCostTensor};
use crate::{GwError, Scalar};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<Vec<f64>>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
}

fn to_array2(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>, GwError> {
    let r = rows.len();
    if r == 0 {
        return Err(GwError::DimensionMismatch(format!("{what} is empty")));
    }
    let c = rows[0].len();
    if rows.iter().any(|row| row.len() != c) {
        return Err(GwError::DimensionMismatch(format!("{what} is ragged")));
    }
    let mut out = Array2::zeros((r, c));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).to_vec()).collect()
}

/// Parsed problem: the cost tensor, the marginals, and the optional fused
/// feature term.
pub struct ParsedProblem {
    pub tensor: QuadCostTensor<f64>,
    pub alpha: Histogram<f64>,
    pub beta: Histogram<f64>,
    pub source_cost: CostMatrix<f64>,
    pub target_cost: Option<CostMatrix<f64>>,
    pub feature_cost: Option<Array2<f64>>,
    pub xi: Option<f64>,
}

impl ProblemJson {
    pub fn from_str(s: &str) -> Result<Self, GwError> {
        serde_json::from_str(s)
            .map_err(|e| GwError::DimensionMismatch(format!("problem JSON: {e}")))
    }

    pub fn parse(&self) -> Result<ParsedProblem, GwError> {
        let alpha = Histogram::from_weights(self.alpha.clone())?;
        let beta = Histogram::from_weights(self.beta.clone())?;
        let c = CostMatrix::new(to_array2(&self.c, "C")?)?;
        let d = match &self.d {
            Some(rows) => Some(CostMatrix::new(to_array2(rows, "D")?)?),
            None => None,
        };
        let m = alpha.len();
        let n = beta.len();
        if c.size() != m {
            return Err(GwError::DimensionMismatch(format!(
                "C is {}x{0} but alpha has length {m}",
                c.size()
            )));
        }
        let loss = self.loss.as_deref().unwrap_or("squared");
        let tensor = match loss {
            "squared" => {
                let d_ref = d.as_ref().ok_or_else(|| {
                    GwError::DimensionMismatch("squared loss needs the D matrix".into())
                })?;
                if d_ref.size() != n {
                    return Err(GwError::DimensionMismatch(format!(
                        "D is {}x{0} but beta has length {n}",
                        d_ref.size()
                    )));
                }
                QuadCostTensor::squared(&c, d_ref)
            }
            "dense" => {
                let flat = self.l.as_ref().ok_or_else(|| {
                    GwError::DimensionMismatch("dense loss needs the flat L matrix".into())
                })?;
                QuadCostTensor::from_flat(to_array2(flat, "L")?, m, n)?
            }
            other => {
                return Err(GwError::DimensionMismatch(format!(
                    "unknown loss {other:?}; expected \"squared\" or \"dense\""
                )))
            }
        };
        let feature_cost = match &self.m {
            Some(rows) => {
                let fc = to_array2(rows, "M")?;
                if fc.dim() != (m, n) {
                    return Err(GwError::DimensionMismatch(format!(
                        "M must be {m}x{n}, got {}x{}",
                        fc.nrows(),
                        fc.ncols()
                    )));
                }
                Some(fc)
            }
            None => None,
        };
        Ok(ParsedProblem {
            tensor,
            alpha,
            beta,
            source_cost: c,
            target_cost: d,
            feature_cost,
            xi: self.xi,
        })
    }

    pub fn from_parts(
        c: &CostMatrix<f64>,
        d: &CostMatrix<f64>,
        alpha: &Histogram<f64>,
        beta: &Histogram<f64>,
    ) -> Self {
        Self {
            c: to_rows(c.entries()),
            d: Some(to_rows(d.entries())),
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            loss: Some("squared".into()),
            l: None,
            m: None,
            xi: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverDiagnosticsJson {
    pub status: String,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

/// Result schema of a relaxation solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GwSdpResultJson {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub ratio_bound: f64,
    pub rank_one: bool,
    pub top_two_eigenvalues: [f64; 2],
    pub plan: Vec<Vec<f64>>,
    pub solver: SolverDiagnosticsJson,
}

pub fn status_string(status: gwkit_conic::SolveStatus) -> String {
    match status {
        gwkit_conic::SolveStatus::Optimal => "optimal".into(),
        gwkit_conic::SolveStatus::MaxIters => "max_iters".into(),
        gwkit_conic::SolveStatus::InfeasibleSuspected => "infeasible_suspected".into(),
    }
}

impl GwSdpResultJson {
    pub fn from_result<S: Scalar>(r: &GwSdpResult<S>) -> Self {
        Self {
            lower_bound: r.lower_bound.as_f64(),
            upper_bound: r.upper_bound.as_f64(),
            ratio_bound: r.ratio_bound.as_f64(),
            rank_one: r.rank_one,
            top_two_eigenvalues: [
                r.top_two_eigenvalues.0.as_f64(),
                r.top_two_eigenvalues.1.as_f64(),
            ],
            plan: (0..r.plan.shape().0)
                .map(|i| {
                    (0..r.plan.shape().1)
                        .map(|j| r.plan.entries()[[i, j]].as_f64())
                        .collect()
                })
                .collect(),
            solver: SolverDiagnosticsJson {
                status: status_string(r.solver.status),
                iterations: r.solver.iterations,
                primal_residual: r.solver.primal_residual.as_f64(),
                dual_residual: r.solver.dual_residual.as_f64(),
                gap: r.solver.gap.as_f64(),
            },
        }
    }
}

/// Barycenter problem schema: `{"spaces": [{"C", "alpha"}...], "bary_size",
/// "bary_hist"?, "weights"?, "max_outer_iters"?, "tol"?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarycenterProblemJson {
    pub spaces: Vec<SpaceJson>,
    pub bary_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bary_hist: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceJson {
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarycenterResultJson {
    #[serde(rename = "C_bar")]
    pub c_bar: Vec<Vec<f64>>,
    pub history: Vec<f64>,
}

impl BarycenterProblemJson {
    pub fn from_str(s: &str) -> Result<Self, GwError> {
        serde_json::from_str(s)
            .map_err(|e| GwError::DimensionMismatch(format!("barycenter JSON: {e}")))
    }

    pub fn parse(&self) -> Result<Vec<(CostMatrix<f64>, Histogram<f64>)>, GwError> {
        self.spaces
            .iter()
            .map(|s| {
                Ok((
                    CostMatrix::new(to_array2(&s.c, "C")?)?,
                    Histogram::from_weights(s.alpha.clone())?,
                ))
            })
            .collect()
    }
}

pub fn cost_matrix_rows(c: &CostMatrix<f64>) -> Vec<Vec<f64>> {
    to_rows(c.entries())
}
