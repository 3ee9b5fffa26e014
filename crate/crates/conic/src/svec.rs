//! Scaled symmetric vectorization of symmetric matrices.
//!
//! A symmetric d x d matrix is stored as the upper triangle in column-major
//! order, with off-diagonal entries scaled by sqrt(2). Under this scaling the
//! Euclidean inner product of two svec vectors equals the trace inner product
//! of the corresponding matrices, so Euclidean cone projections in svec
//! coordinates are exactly matrix-space projections.

use ndarray::Array2;

use crate::Scalar;

pub fn svec_len(order: usize) -> usize {
    order * (order + 1) / 2
}

/// Position of entry (i, j), i <= j, inside the svec vector.
#[inline]
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

pub fn mat_to_svec<S: Scalar>(m: &Array2<S>, out: &mut [S]) {
    let d = m.nrows();
    debug_assert_eq!(m.ncols(), d);
    debug_assert_eq!(out.len(), svec_len(d));
    let sqrt2 = S::of(std::f64::consts::SQRT_2);
    let mut idx = 0;
    for j in 0..d {
        for i in 0..=j {
            out[idx] = if i == j { m[[i, j]] } else { m[[i, j]] * sqrt2 };
            idx += 1;
        }
    }
}

pub fn svec_to_mat<S: Scalar>(s: &[S], order: usize) -> Array2<S> {
    debug_assert_eq!(s.len(), svec_len(order));
    let sqrt2 = S::of(std::f64::consts::SQRT_2);
    let mut out = Array2::zeros((order, order));
    let mut idx = 0;
    for j in 0..order {
        for i in 0..=j {
            let v = s[idx];
            if i == j {
                out[[i, j]] = v;
            } else {
                let w = v / sqrt2;
                out[[i, j]] = w;
                out[[j, i]] = w;
            }
            idx += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_preserves_matrix() {
        let m: ndarray::Array2<f64> = array![[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]];
        let mut s = vec![0.0; svec_len(3)];
        mat_to_svec(&m, &mut s);
        let back = svec_to_mat(&s, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[[i, j]] - m[[i, j]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn inner_product_matches_trace_inner_product() {
        let a = array![[1.0, -2.0], [-2.0, 3.0]];
        let b = array![[0.5, 1.5], [1.5, -1.0]];
        let mut sa = vec![0.0; 3];
        let mut sb = vec![0.0; 3];
        mat_to_svec(&a, &mut sa);
        mat_to_svec(&b, &mut sb);
        let dot: f64 = sa.iter().zip(&sb).map(|(x, y)| x * y).sum();
        let mut tr = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                tr += a[[i, j]] * b[[i, j]];
            }
        }
        assert!((dot - tr).abs() < 1e-14);
    }

    #[test]
    fn index_is_column_major_upper_triangle() {
        assert_eq!(svec_index(0, 0), 0);
        assert_eq!(svec_index(0, 1), 1);
        assert_eq!(svec_index(1, 1), 2);
        assert_eq!(svec_index(0, 2), 3);
        assert_eq!(svec_index(2, 2), 5);
    }
}
