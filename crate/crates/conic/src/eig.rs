//! Dense symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Adequate for the moderate orders this workspace needs (bordered blocks of
//! order a few hundred at most). Deterministic: fixed sweep order, no
//! data-dependent reordering.

use ndarray::{Array1, Array2};

use crate::{ConicError, Scalar};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and eigenvectors (matching columns) of a symmetric
/// matrix. The input is symmetrized as `(A + A^T)/2` before factoring.
pub fn symmetric_eigen<S: Scalar>(
    a: &Array2<S>,
) -> Result<(Array1<S>, Array2<S>), ConicError> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(ConicError::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            d,
            a.ncols()
        )));
    }
    if d == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }

    // Work on a flat row-major copy.
    let mut m = vec![S::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            let v = (a[[i, j]] + a[[j, i]]) / S::of(2.0);
            if !v.is_finite() {
                return Err(ConicError::EigenFailure(
                    "non-finite entry in symmetric eigendecomposition".into(),
                ));
            }
            m[i * d + j] = v;
        }
    }
    let mut vecs = vec![S::zero(); d * d];
    for i in 0..d {
        vecs[i * d + i] = S::one();
    }

    let norm: S = m.iter().map(|&x| x * x).sum::<S>().sqrt();
    let tol = norm.max(S::one()) * S::epsilon() * S::of(d as f64);

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = S::zero();
        for p in 0..d {
            for q in (p + 1)..d {
                off += m[p * d + q] * m[p * d + q];
            }
        }
        if off.sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..d - 1 {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == S::zero() {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let tau = (aqq - app) / (S::of(2.0) * apq);
                let t = if tau >= S::zero() {
                    S::one() / (tau + (S::one() + tau * tau).sqrt())
                } else {
                    -S::one() / (-tau + (S::one() + tau * tau).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;

                m[p * d + p] = app - t * apq;
                m[q * d + q] = aqq + t * apq;
                m[p * d + q] = S::zero();
                m[q * d + p] = S::zero();
                for k in 0..d {
                    if k != p && k != q {
                        let akp = m[k * d + p];
                        let akq = m[k * d + q];
                        let np = c * akp - s * akq;
                        let nq = s * akp + c * akq;
                        m[k * d + p] = np;
                        m[p * d + k] = np;
                        m[k * d + q] = nq;
                        m[q * d + k] = nq;
                    }
                }
                for k in 0..d {
                    let vkp = vecs[k * d + p];
                    let vkq = vecs[k * d + q];
                    vecs[k * d + p] = c * vkp - s * vkq;
                    vecs[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // One last check: the final sweep may have finished the job.
        let mut off = S::zero();
        for p in 0..d {
            for q in (p + 1)..d {
                off += m[p * d + q] * m[p * d + q];
            }
        }
        if off.sqrt() > tol * S::of(10.0) {
            return Err(ConicError::EigenFailure(format!(
                "Jacobi sweeps did not converge (off-diagonal norm {:e})",
                off.sqrt().as_f64()
            )));
        }
    }

    // Sort eigenpairs ascending; stable order for determinism.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        m[i * d + i]
            .partial_cmp(&m[j * d + j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut vals = Array1::zeros(d);
    let mut v = Array2::zeros((d, d));
    for (col, &src) in order.iter().enumerate() {
        vals[col] = m[src * d + src];
        for row in 0..d {
            v[[row, col]] = vecs[row * d + src];
        }
    }
    Ok((vals, v))
}
