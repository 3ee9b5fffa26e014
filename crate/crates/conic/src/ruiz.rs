//! Ruiz equilibration of the constraint matrix.
//!
//! Rows and columns are rescaled toward unit infinity norm. Column scales are
//! uniform within each PSD block (an entrywise scaling of svec coordinates
//! would not preserve the cone), so PSD membership survives the change of
//! variables. Nonnegative and zero blocks tolerate per-coordinate scaling.

use crate::sparse::SparseMat;
use crate::{ConeBlock, Scalar};

pub struct Equilibration<S> {
    /// Per-row scale applied to A and b.
    pub row: Vec<S>,
    /// Per-column scale applied to A and the variable.
    pub col: Vec<S>,
}

pub fn equilibrate<S: Scalar>(
    a: &mut SparseMat<S>,
    cones: &[ConeBlock],
    passes: usize,
) -> Equilibration<S> {
    let m = a.nrows();
    let n = a.ncols();
    let mut row = vec![S::one(); m];
    let mut col = vec![S::one(); n];

    for _ in 0..passes {
        // Row pass.
        let mut rnorm = vec![S::zero(); m];
        for i in 0..m {
            for &(_, v) in a.row(i) {
                rnorm[i] = rnorm[i].max(v.abs());
            }
        }
        let rscale: Vec<S> = rnorm
            .iter()
            .map(|&x| if x > S::zero() { S::one() / x.sqrt() } else { S::one() })
            .collect();
        a.scale_rows(&rscale);
        for i in 0..m {
            row[i] *= rscale[i];
        }

        // Column pass, uniform over PSD blocks.
        let mut cnorm = vec![S::zero(); n];
        for i in 0..m {
            for &(c, v) in a.row(i) {
                cnorm[c] = cnorm[c].max(v.abs());
            }
        }
        let mut cscale = vec![S::one(); n];
        let mut off = 0;
        for cone in cones {
            let dim = cone.dim();
            match cone {
                ConeBlock::Psd { .. } => {
                    let mut blockmax = S::zero();
                    for k in off..off + dim {
                        blockmax = blockmax.max(cnorm[k]);
                    }
                    let s = if blockmax > S::zero() {
                        S::one() / blockmax.sqrt()
                    } else {
                        S::one()
                    };
                    for k in off..off + dim {
                        cscale[k] = s;
                    }
                }
                _ => {
                    for k in off..off + dim {
                        if cnorm[k] > S::zero() {
                            cscale[k] = S::one() / cnorm[k].sqrt();
                        }
                    }
                }
            }
            off += dim;
        }
        a.scale_cols(&cscale);
        for k in 0..n {
            col[k] *= cscale[k];
        }
    }

    Equilibration { row, col }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_rows_toward_unit_norm() {
        let mut a = SparseMat::<f64>::new(2);
        a.push_row(vec![(0, 100.0), (1, 1.0)]);
        a.push_row(vec![(0, 0.01)]);
        let cones = [ConeBlock::NonNeg { dim: 2 }];
        let _e = equilibrate(&mut a, &cones, 10);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            let mx = a.row(i).iter().map(|&(_, v)| v.abs()).fold(0.0f64, f64::max);
            worst = worst.max((mx - 1.0).abs());
        }
        assert!(worst < 0.2, "row norms {worst} away from 1");
    }

    #[test]
    fn psd_block_columns_share_one_scale() {
        let mut a = SparseMat::<f64>::new(3);
        a.push_row(vec![(0, 8.0)]);
        a.push_row(vec![(1, 0.5)]);
        a.push_row(vec![(2, 2.0)]);
        let cones = [ConeBlock::Psd { order: 2 }];
        let e = equilibrate(&mut a, &cones, 10);
        assert!((e.col[0] - e.col[1]).abs() < 1e-15);
        assert!((e.col[1] - e.col[2]).abs() < 1e-15);
    }
}
