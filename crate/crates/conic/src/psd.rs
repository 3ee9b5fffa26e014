//! Euclidean projection onto the positive semidefinite cone.

use ndarray::Array2;

use crate::eig::symmetric_eigen;
use crate::{ConicError, Scalar};

/// Projects a (nearly) symmetric matrix onto the PSD cone by clipping negative
/// eigenvalues: `sum_i max(lambda_i, 0) v_i v_i^T`. The input is symmetrized
/// defensively before factoring.
pub fn project_psd<S: Scalar>(a: &Array2<S>) -> Result<Array2<S>, ConicError> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(ConicError::DimensionMismatch(format!(
            "PSD projection needs a square matrix, got {}x{}",
            d,
            a.ncols()
        )));
    }
    let (vals, vecs) = symmetric_eigen(a)?;
    let mut out = Array2::zeros((d, d));
    for k in 0..d {
        let lam = vals[k];
        if lam <= S::zero() {
            continue;
        }
        for i in 0..d {
            let vi = vecs[[i, k]] * lam;
            if vi == S::zero() {
                continue;
            }
            for j in 0..d {
                out[[i, j]] += vi * vecs[[j, k]];
            }
        }
    }
    // Clean up rounding asymmetry from the accumulation.
    for i in 0..d {
        for j in (i + 1)..d {
            let v = (out[[i, j]] + out[[j, i]]) / S::of(2.0);
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn frob(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                s += (a[[i, j]] - b[[i, j]]).powi(2);
            }
        }
        s.sqrt()
    }

    #[test]
    fn identity_is_fixed() {
        let a = Array2::<f64>::eye(4);
        let p = project_psd(&a).unwrap();
        assert!(frob(&a, &p) < 1e-12);
    }

    #[test]
    fn clips_negative_eigenvalue_of_diagonal() {
        let a = array![[1.0, 0.0], [0.0, -2.0]];
        let p = project_psd(&a).unwrap();
        let expect = array![[1.0, 0.0], [0.0, 0.0]];
        assert!(frob(&p, &expect) < 1e-12);
    }

    #[test]
    fn exchange_matrix_projects_to_half_ones() {
        // Eigenpairs (+-1, (1, +-1)/sqrt(2)); keeping the +1 branch gives
        // the rank-one matrix of all 0.5 entries.
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let p = project_psd(&a).unwrap();
        let expect = array![[0.5, 0.5], [0.5, 0.5]];
        assert!(frob(&p, &expect) < 1e-12);
    }

    fn random_symmetric(d: usize, seed: u64) -> Array2<f64> {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            ((state >> 11) as f64) / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        let mut a = Array2::zeros((d, d));
        for i in 0..d {
            for j in i..d {
                let v = next();
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn projection_is_idempotent(seed in 0u64..5000, d in 1usize..=10) {
            let a = random_symmetric(d, seed);
            let p1 = project_psd(&a).unwrap();
            let p2 = project_psd(&p1).unwrap();
            prop_assert!(frob(&p1, &p2) <= 1e-10);
        }
    }

    #[test]
    fn projection_is_closest_among_random_psd_candidates() {
        for seed in 0..100u64 {
            let d = 2 + (seed % 9) as usize;
            let a = random_symmetric(d, seed);
            let p = project_psd(&a).unwrap();
            let base = frob(&a, &p);
            for qseed in 0..20u64 {
                // Random PSD candidate Q = B B^T.
                let b = random_symmetric(d, seed * 1000 + qseed + 7);
                let mut q = Array2::zeros((d, d));
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            s += b[[i, k]] * b[[j, k]];
                        }
                        q[[i, j]] = s;
                    }
                }
                assert!(base <= frob(&a, &q) + 1e-10);
            }
        }
    }
}
