//! Standard normalization fitted on training data only.

use alloc::vec::Vec;

use super::{FeatureMatrix, LearnError};
use crate::math;

/// Per-column standardizer: `(x - mean) / std`, with the divisor replaced
/// by 1 where the column variance is zero (constant columns map to zeros).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StandardScaler {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(x: &FeatureMatrix) -> Result<Self, LearnError> {
        if x.rows() == 0 {
            return Err(LearnError::EmptyInput);
        }
        let (rows, cols) = (x.rows(), x.cols());
        let mut means = alloc::vec![0.0; cols];
        for row in x.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= rows as f64;
        }
        let mut vars = alloc::vec![0.0; cols];
        for row in x.iter_rows() {
            for ((var, v), m) in vars.iter_mut().zip(row).zip(&means) {
                let d = v - m;
                *var += d * d;
            }
        }
        let stds = vars
            .iter()
            .map(|v| {
                let s = math::sqrt((v / rows as f64).max(0.0));
                if s == 0.0 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(StandardScaler { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &FeatureMatrix) -> FeatureMatrix {
        let mut data = Vec::with_capacity(x.rows() * x.cols());
        for row in x.iter_rows() {
            data.extend(self.transform_row(row));
        }
        FeatureMatrix::new(data, x.rows(), x.cols()).expect("shape preserved")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn matrix(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows.iter().copied()).unwrap()
    }

    #[test]
    fn two_point_column_standardizes_to_unit() {
        let x = matrix(&[&[2.0], &[4.0]]);
        let s = StandardScaler::fit(&x).unwrap();
        let t = s.transform(&x);
        assert_relative_eq!(t.row(0)[0], -1.0);
        assert_relative_eq!(t.row(1)[0], 1.0);
    }

    #[test]
    fn constant_column_maps_to_zeros() {
        let x = matrix(&[&[5.0, 1.0], &[5.0, 2.0], &[5.0, 3.0]]);
        let s = StandardScaler::fit(&x).unwrap();
        let t = s.transform(&x);
        for i in 0..3 {
            assert_eq!(t.row(i)[0], 0.0);
        }
    }

    #[test]
    fn empty_input_rejected() {
        let x = FeatureMatrix::from_rows(core::iter::empty()).unwrap();
        assert!(matches!(StandardScaler::fit(&x), Err(LearnError::EmptyInput)));
    }

    proptest! {
        // Recomputation oracle: transformed columns have mean 0 and std 1
        // (or exactly 0 for constant columns).
        #[test]
        fn transformed_columns_are_standardized(
            rows in proptest::collection::vec(
                proptest::collection::vec(-50.0f64..50.0, 3), 2..40)
        ) {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let x = matrix(&refs);
            let s = StandardScaler::fit(&x).unwrap();
            let t = s.transform(&x);
            for col in 0..3 {
                let values: Vec<f64> = (0..t.rows()).map(|r| t.row(r)[col]).collect();
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / values.len() as f64;
                prop_assert!(mean.abs() < 1e-9, "col {col} mean {mean}");
                let std = var.sqrt();
                prop_assert!(std.abs() < 1e-9 || (std - 1.0).abs() < 1e-9,
                    "col {col} std {std}");
            }
        }
    }
}
