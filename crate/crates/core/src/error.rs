use thiserror::Error;

#[derive(Error, Debug)]
pub enum GwError {
    #[error("negative mass at index {index}: {value}")]
    NegativeMass { index: usize, value: f64 },
    #[error("total mass is zero")]
    ZeroMass,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("marginals are infeasible: {0}")]
    InfeasibleMarginals(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("entropic kernel underflow: {0}")]
    NumericalUnderflow(String),
    #[error("bad witness indices: {0}")]
    BadIndices(String),
    #[error("barycenter histogram has zero mass at node {0}")]
    ZeroMassBarycenterNode(usize),
    #[error("conic solve failed: {0}")]
    SolverFailure(#[from] gwkit_conic::ConicError),
    #[error("barycenter inner solve failed for dataset member {index}: {source}")]
    BarycenterInner {
        index: usize,
        #[source]
        source: Box<GwError>,
    },
}
