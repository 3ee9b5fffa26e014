use ndarray::Array1;

use crate::{GwError, Scalar};

/// A point of the probability simplex: nonnegative weights summing to one.
///
/// Construction normalizes (divides by the total), so near-1 sums are
/// accepted; negative or all-zero input is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<S> {
    weights: Array1<S>,
}

impl<S: Scalar> Histogram<S> {
    pub fn from_weights(weights: impl Into<Vec<S>>) -> Result<Self, GwError> {
        let raw: Vec<S> = weights.into();
        if raw.is_empty() {
            return Err(GwError::DimensionMismatch("histogram needs at least one entry".into()));
        }
        for (index, &w) in raw.iter().enumerate() {
            if !(w >= S::zero()) {
                return Err(GwError::NegativeMass { index, value: w.as_f64() });
            }
        }
        let total: S = raw.iter().copied().sum();
        if !(total > S::zero()) {
            return Err(GwError::ZeroMass);
        }
        let weights = Array1::from_vec(raw.into_iter().map(|w| w / total).collect());
        Ok(Self { weights })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len >= 1, "histogram needs at least one entry");
        let w = S::one() / S::of(len as f64);
        Self { weights: Array1::from_elem(len, w) }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    pub fn weights(&self) -> &Array1<S> {
        &self.weights
    }

    pub fn get(&self, i: usize) -> S {
        self.weights[i]
    }

    pub fn to_vec(&self) -> Vec<S> {
        self.weights.to_vec()
    }
}

/// Normalizing constructor matching the simplex contract.
pub fn make_histogram<S: Scalar>(weights: &[S]) -> Result<Histogram<S>, GwError> {
    Histogram::from_weights(weights.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_pair_normalizes_to_halves() {
        let h = make_histogram(&[1.0, 1.0]).unwrap();
        assert_eq!(h.to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn valid_input_is_identity() {
        let h = make_histogram(&[0.5, 0.5]).unwrap();
        assert_eq!(h.to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn normalization_is_forced_by_the_total() {
        let h = make_histogram(&[2.0f64, 3.0, 5.0]).unwrap();
        let got = h.to_vec();
        for (g, e) in got.iter().zip([0.2, 0.3, 0.5]) {
            assert!((g - e).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_mass_is_rejected() {
        match make_histogram(&[0.5, -0.1]) {
            Err(GwError::NegativeMass { index: 1, .. }) => {}
            other => panic!("expected NegativeMass, got {other:?}"),
        }
    }

    #[test]
    fn zero_total_is_rejected() {
        assert!(matches!(make_histogram(&[0.0, 0.0]), Err(GwError::ZeroMass)));
    }

    #[test]
    fn sums_to_one_within_tolerance() {
        let h = make_histogram(&[0.31, 7.9, 0.0002, 13.0]).unwrap();
        let total: f64 = h.to_vec().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }
}
