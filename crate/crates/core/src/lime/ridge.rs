//! Weighted ridge regression with an unpenalized intercept.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RidgeError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("sample weights must be finite, non-negative and not all zero")]
    Weights,
    #[error("ridge strength must be finite and >= 0, got {0}")]
    Alpha(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("normal equations could not be solved")]
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Weighted coefficient of determination; 0 when the weighted variance of `y` is 0.
    pub r_squared: f64,
}

/// Minimizes `sum_i w_i (y_i - b0 - x_i . b)^2 + alpha |b|^2`.
///
/// The intercept is removed by centering on the weighted means, so the
/// remaining `k x k` system is `(Xc' W Xc + alpha I) b = Xc' W yc`.
pub fn fit_weighted_ridge(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    alpha: f64,
) -> Result<RidgeFit, RidgeError> {
    let (n, k) = x.shape();
    if n < 2 {
        return Err(RidgeError::TooFewSamples(n));
    }
    if y.len() != n || w.len() != n {
        return Err(RidgeError::Dimensions(format!(
            "X is {n}x{k}, y has {}, w has {}",
            y.len(),
            w.len()
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(RidgeError::Alpha(alpha));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(RidgeError::Weights);
    }
    let sw: f64 = w.iter().sum();
    if sw <= 0.0 {
        return Err(RidgeError::Weights);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(RidgeError::NonFinite);
    }

    let constant_y = y.iter().all(|&v| v == y[0]);
    let y_mean = if constant_y {
        y[0]
    } else {
        y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw
    };
    let x_mean: DVector<f64> =
        DVector::from_iterator(k, x.column_iter().map(|c| c.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw));

    // rows scaled by sqrt(w) so that A = Z'Z, rhs = Z'(sqrt(w) yc)
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let z = DMatrix::from_fn(n, k, |i, j| (x[(i, j)] - x_mean[j]) * sqrt_w[i]);
    let yz = DVector::from_fn(n, |i, _| (y[i] - y_mean) * sqrt_w[i]);
    let mut a = z.tr_mul(&z);
    for j in 0..k {
        a[(j, j)] += alpha;
    }
    let rhs = z.tr_mul(&yz);

    let beta = match a.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let svd = a.svd(true, true);
            let tol = svd.singular_values.max() * (k.max(1) as f64) * f64::EPSILON;
            svd.solve(&rhs, tol).map_err(|_| RidgeError::Singular)?
        }
    };
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(RidgeError::Singular);
    }
    let intercept = y_mean - x_mean.dot(&beta);

    let r_squared = if constant_y {
        0.0
    } else {
        let fitted = x * &beta;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for i in 0..n {
            let r = y[i] - intercept - fitted[i];
            let d = y[i] - y_mean;
            ss_res += w[i] * r * r;
            ss_tot += w[i] * d * d;
        }
        if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            0.0
        }
    };

    Ok(RidgeFit {
        coefficients: beta.iter().copied().collect(),
        intercept,
        r_squared,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: the augmented normal equations `[1 X]' W [1 X] + diag(0, a, ..., a)`
    /// solved by Gaussian elimination with partial pivoting. Returns `None` when singular.
    pub(crate) fn normal_equations_oracle(
        x: &[Vec<f64>],
        y: &[f64],
        w: &[f64],
        alpha: f64,
    ) -> Option<(f64, Vec<f64>)> {
        let n = x.len();
        let k = x[0].len();
        let m = k + 1;
        let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain(x[i].iter().copied()).collect() };
        let mut a = vec![vec![0.0; m + 1]; m];
        for i in 0..n {
            let r = row(i);
            for p in 0..m {
                for q in 0..m {
                    a[p][q] += w[i] * r[p] * r[q];
                }
                a[p][m] += w[i] * r[p] * y[i];
            }
        }
        for (j, arow) in a.iter_mut().enumerate().skip(1) {
            arow[j] += alpha;
        }
        for col in 0..m {
            let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() < 1e-9 {
                return None;
            }
            a.swap(col, piv);
            for r in 0..m {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        let sol: Vec<f64> = (0..m).map(|i| a[i][m] / a[i][i]).collect();
        Some((sol[0], sol[1..].to_vec()))
    }

    fn to_matrix(x: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(x.len(), x[0].len(), |i, j| x[i][j])
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn exact_linear_recovery() {
        let x: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y: Vec<f64> = x.iter().map(|r| 0.25 + 0.5 * r[0] - 0.125 * r[1]).collect();
        let fit = fit_weighted_ridge(&to_matrix(&x), &y, &[1.0; 5], 0.0).unwrap();
        assert!(close(fit.intercept, 0.25, 1e-12));
        assert!(close(fit.coefficients[0], 0.5, 1e-12));
        assert!(close(fit.coefficients[1], -0.125, 1e-12));
        assert!(close(fit.r_squared, 1.0, 1e-12));
    }

    #[test]
    fn constant_target() {
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let fit = fit_weighted_ridge(&to_matrix(&x), &[0.7; 3], &[0.2, 1.0, 0.5], 1.0).unwrap();
        assert!(fit.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(fit.intercept, 0.7);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn small_random_instance_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2).map(|_| f64::from(rng.gen::<bool>() as u8)).collect())
            .collect();
        let y: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
        let w = vec![1.0; 4];
        let fit = fit_weighted_ridge(&to_matrix(&x), &y, &w, 1.0).unwrap();
        let (b0, b) = normal_equations_oracle(&x, &y, &w, 1.0).unwrap();
        assert!(close(fit.intercept, b0, 1e-8));
        for (c, o) in fit.coefficients.iter().zip(&b) {
            assert!(close(*c, *o, 1e-8));
        }
    }

    #[test]
    fn error_paths() {
        let x = DMatrix::from_element(1, 2, 1.0);
        assert_eq!(
            fit_weighted_ridge(&x, &[1.0], &[1.0], 1.0),
            Err(RidgeError::TooFewSamples(1))
        );
        let x = DMatrix::from_element(3, 2, 1.0);
        assert_eq!(
            fit_weighted_ridge(&x, &[1.0, 2.0, 3.0], &[0.0; 3], 1.0),
            Err(RidgeError::Weights)
        );
        assert!(matches!(
            fit_weighted_ridge(&x, &[1.0, 2.0], &[1.0; 3], 1.0),
            Err(RidgeError::Dimensions(_))
        ));
        assert_eq!(
            fit_weighted_ridge(&x, &[1.0, 2.0, 3.0], &[1.0; 3], -1.0),
            Err(RidgeError::Alpha(-1.0))
        );
    }

    #[test]
    fn rank_deficient_unregularized_still_solves() {
        // duplicate columns: minimum-norm solution splits the effect
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let fit = fit_weighted_ridge(&x, &[0.0, 1.0, 0.0, 1.0], &[1.0; 4], 0.0).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-9);
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn weight_scaling_is_homogeneous(seed in any::<u64>(), scale in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..30);
            let k = rng.gen_range(1..6);
            let x = DMatrix::from_fn(n, k, |_, _| f64::from(rng.gen::<bool>() as u8));
            let y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let ws: Vec<f64> = w.iter().map(|v| v * scale).collect();
            let a = fit_weighted_ridge(&x, &y, &w, 1.0).unwrap();
            let b = fit_weighted_ridge(&x, &y, &ws, scale).unwrap();
            // alpha scaled with the weights keeps the objective proportional
            for (p, q) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
            }
            prop_assert!((a.r_squared - b.r_squared).abs() <= 1e-10);
            // plain weighted least squares: weights scale freely
            let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..k).map(|j| x[(i, j)]).collect()).collect();
            if normal_equations_oracle(&rows, &y, &w, 0.0).is_some() {
                let a0 = fit_weighted_ridge(&x, &y, &w, 0.0).unwrap();
                let b0 = fit_weighted_ridge(&x, &y, &ws, 0.0).unwrap();
                for (p, q) in a0.coefficients.iter().zip(&b0.coefficients) {
                    prop_assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
                }
                prop_assert!((a0.r_squared - b0.r_squared).abs() <= 1e-10);
            }
        }
    }
}
