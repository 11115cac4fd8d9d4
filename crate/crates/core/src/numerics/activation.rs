use crate::numerics::DenseMatrix;

/// Row-wise softmax with per-row max subtraction.
pub fn softmax_rows(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

pub fn relu(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for v in out.values_mut() {
        *v = v.max(0.0);
    }
    out
}

/// 1 where the input is strictly positive, else 0.
pub fn relu_mask(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for v in out.values_mut() {
        *v = if *v > 0.0 { 1.0 } else { 0.0 };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_softmax() {
        let s = softmax_rows(&DenseMatrix::zeros(1, 4));
        assert_eq!(s.row(0), &[0.25; 4]);
    }

    #[test]
    fn softmax_is_stable() {
        let s = softmax_rows(&DenseMatrix::from_rows(&[[1000.0, 0.0]]));
        assert!((s.get(0, 0) - 1.0).abs() <= 1e-12);
        assert!(s.get(0, 1).abs() <= 1e-12);
        assert!(s.is_finite());
    }

    #[test]
    fn relu_and_mask() {
        let x = DenseMatrix::from_rows(&[[-1.0, 2.0]]);
        assert_eq!(relu(&x), DenseMatrix::from_rows(&[[0.0, 2.0]]));
        assert_eq!(relu_mask(&x), DenseMatrix::from_rows(&[[0.0, 1.0]]));
        let neg = DenseMatrix::from_rows(&[[-1.0, -0.5], [-3.0, 0.0]]);
        assert_eq!(relu(&neg), DenseMatrix::zeros(2, 2));
    }

    proptest! {
        #[test]
        fn softmax_rows_are_distributions(vals in prop::collection::vec(-50.0f64..50.0, 12), shift in -100.0f64..100.0) {
            let x = DenseMatrix::from_vec(3, 4, vals).unwrap();
            let s = softmax_rows(&x);
            let mut shifted = x.clone();
            for v in shifted.values_mut() { *v += shift; }
            let s2 = softmax_rows(&shifted);
            for i in 0..3 {
                let sum: f64 = s.row(i).iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-9);
                prop_assert!(s.row(i).iter().all(|&v| v >= 0.0));
            }
            prop_assert!(s.max_abs_diff(&s2) <= 1e-9);
        }
    }
}
