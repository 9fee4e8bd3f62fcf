//! Supervised fitting of the linear-in-features models: label
//! standardization, ridge regression in primal or dual form, and
//! test-driven ridge-parameter selection.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::features::{coeff_norms, ModelKind};
use crate::linalg::{add_diag, solve_spd};
use crate::par;
use crate::rng::TokenSequence;

/// A labelled batch of sequences. The standardization record keeps the
/// inverse transform available after the labels have been rescaled.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Vec<TokenSequence>,
    pub labels: Array1<f64>,
    /// `(mean, std)` that was divided out, if standardization ran.
    pub standardization: Option<(f64, f64)>,
}

impl Dataset {
    pub fn new(inputs: Vec<TokenSequence>, labels: Array1<f64>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sequences with {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        Ok(Dataset {
            inputs,
            labels,
            standardization: None,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Standardizes the labels in place and records the transform.
    pub fn standardize(&mut self) -> Result<()> {
        let (labels, mean, std) = standardize(self.labels.view())?;
        self.labels = labels;
        self.standardization = Some((mean, std));
        Ok(())
    }

    /// Applies a transform recorded elsewhere (training statistics are
    /// reused verbatim on held-out labels).
    pub fn apply_standardization(&mut self, mean: f64, std: f64) {
        self.labels.mapv_inplace(|y| (y - mean) / std);
        self.standardization = Some((mean, std));
    }
}

/// Centers and rescales labels to zero mean and unit standard deviation,
/// in the population convention (divide the sum of squares by n). With
/// that convention the in-sample risk of the zero predictor is exactly 1.
pub fn standardize(labels: ArrayView1<f64>) -> Result<(Array1<f64>, f64, f64)> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "standardization needs at least 2 labels, got {n}"
        )));
    }
    let mean = labels.sum() / n as f64;
    let var = labels.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std <= 1e-12 {
        return Err(Error::DegenerateLabels(format!(
            "labels are constant (std {std:.3e}); nothing to learn"
        )));
    }
    Ok((labels.mapv(|y| (y - mean) / std), mean, std))
}

/// Ridge regression `argmin_v (1/n)||phi v - y||^2 + lambda ||v||^2`.
///
/// Solved through the normal equations `(phi^T phi + n lambda I) v =
/// phi^T y`, or in the dual `v = phi^T (phi phi^T + n lambda I)^{-1} y`
/// when there are more features than samples. `lambda = 0` is allowed and
/// means plain least squares; a system that stays singular after jitter
/// escalation reports a numerical error suggesting regularization.
pub fn ridge_fit(features: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
    check_ridge_inputs(features, y, lambda)?;
    let (n, width) = features.dim();
    let primal = width <= n;
    let base = normal_matrix(features, primal);
    ridge_with_base(features, y, &base, primal, lambda)
}

fn check_ridge_inputs(
    features: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda: f64,
) -> Result<()> {
    let n = features.nrows();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} feature rows with {} labels",
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidDimension("empty feature matrix".into()));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "ridge parameter must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// `phi^T phi` (primal) or `phi phi^T` (dual); the expensive product that
/// every grid point shares.
fn normal_matrix(features: ArrayView2<f64>, primal: bool) -> ndarray::Array2<f64> {
    if primal {
        features.t().dot(&features)
    } else {
        features.dot(&features.t())
    }
}

fn ridge_with_base(
    features: ArrayView2<f64>,
    y: ArrayView1<f64>,
    base: &ndarray::Array2<f64>,
    primal: bool,
    lambda: f64,
) -> Result<Array1<f64>> {
    let n = features.nrows();
    let mut sys = base.clone();
    add_diag(&mut sys, n as f64 * lambda);
    let solved = if primal {
        solve_spd(sys.view(), features.t().dot(&y).view())
    } else {
        solve_spd(sys.view(), y).map(|alpha| features.t().dot(&alpha))
    };
    solved.map_err(|e| {
        if lambda == 0.0 {
            Error::Numerical(format!(
                "least squares system is singular ({e}); retry with lambda > 0"
            ))
        } else {
            e
        }
    })
}

/// Mean squared error between predictions and labels.
pub fn mse(pred: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    if pred.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            pred.len(),
            y.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidDimension("mse of empty vectors".into()));
    }
    Ok(pred
        .iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64)
}

/// Outcome of fitting at the selected ridge parameter.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coeffs: Array1<f64>,
    pub lambda: f64,
    pub train_error: f64,
    pub test_error: f64,
    /// Sum of per-head coefficient norms.
    pub k1_hat: f64,
    /// Head count times the summed squared per-head norms.
    pub k2_hat: f64,
}

/// Default ridge grid: zero plus 16 logarithmically spaced points from
/// 1e-8 to 1e2, spanning exact interpolation to heavy shrinkage.
pub fn default_lambda_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend((0..16).map(|k| 10f64.powf(-8.0 + 10.0 * k as f64 / 15.0)));
    grid
}

/// Fits once per grid point and keeps the parameter with the smallest
/// test error, breaking ties toward the larger (more regularized) value.
/// This mirrors an oracle protocol: the test set picks the parameter.
/// Grid points whose solve fails are skipped; if every point fails the
/// last error is reported.
pub fn select_lambda(
    features_train: ArrayView2<f64>,
    y_train: ArrayView1<f64>,
    features_test: ArrayView2<f64>,
    y_test: ArrayView1<f64>,
    grid: &[f64],
    kind: ModelKind,
    d: usize,
) -> Result<FitResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty ridge grid".into()));
    }
    if features_train.ncols() != features_test.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "train features have width {} but test features have {}",
            features_train.ncols(),
            features_test.ncols()
        )));
    }
    check_ridge_inputs(features_train, y_train, 0.0)?;
    let primal = features_train.ncols() <= features_train.nrows();
    let base = normal_matrix(features_train, primal);
    let fits: Vec<Result<(f64, f64, f64, Array1<f64>)>> = par::map_indexed(grid.len(), |g| {
        let lambda = grid[g];
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ridge parameter must be finite and >= 0, got {lambda}"
            )));
        }
        let coeffs = ridge_with_base(features_train, y_train, &base, primal, lambda)?;
        let train_error = mse(features_train.dot(&coeffs).view(), y_train)?;
        let test_error = mse(features_test.dot(&coeffs).view(), y_test)?;
        Ok((lambda, train_error, test_error, coeffs))
    });
    let mut best: Option<(f64, f64, f64, Array1<f64>)> = None;
    let mut last_err = None;
    for fit in fits {
        match fit {
            Ok(candidate) => {
                let better = match &best {
                    None => true,
                    Some(current) => {
                        candidate.2 < current.2
                            || (candidate.2 == current.2 && candidate.0 > current.0)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (lambda, train_error, test_error, coeffs) = best.ok_or_else(|| {
        Error::Numerical(format!(
            "every ridge parameter in the grid failed, last error: {}",
            last_err.expect("empty grid was rejected above")
        ))
    })?;
    let block = match kind {
        ModelKind::Rfa | ModelKind::Brfa => d + 1,
        ModelKind::Rfmlp => 1,
    };
    if coeffs.len() % block != 0 {
        return Err(Error::ShapeMismatch(format!(
            "feature width {} is not a multiple of the head block {block}",
            coeffs.len()
        )));
    }
    let (k1_hat, k2_hat) = coeff_norms(coeffs.view(), kind, coeffs.len() / block, d)?;
    Ok(FitResult {
        coeffs,
        lambda,
        train_error,
        test_error,
        k1_hat,
        k2_hat,
    })
}
