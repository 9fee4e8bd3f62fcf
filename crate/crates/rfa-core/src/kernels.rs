//! Infinite-width kernels of the attention models, their Monte-Carlo
//! finite-width estimators, Gram assembly, and a kernel ridge oracle.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::features::{featurize, sample_weights, HeadWeights, ModelKind};
use crate::linalg::{add_diag, solve_spd};
use crate::par;
use crate::rng::{RngStream, TokenSequence};
use crate::special::{factorial, shifted_relu_hermite_coeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    RfaAnalytic,
    BrfaAnalytic,
    McEmpirical(ModelKind),
}

/// Description of one kernel evaluation scheme.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Hermite-series truncation for the biased kernel.
    pub series_truncation: usize,
    /// Head count of the Monte-Carlo estimator.
    pub mc_heads: usize,
    /// Bias strength gamma0 for the biased kernel / biased MC weights.
    pub bias_scale: f64,
    /// Root seed for the weight draw behind an empirical Gram matrix.
    pub mc_seed: u64,
}

impl KernelSpec {
    pub fn rfa() -> Self {
        KernelSpec {
            kind: KernelKind::RfaAnalytic,
            series_truncation: 40,
            mc_heads: 1,
            bias_scale: 0.0,
            mc_seed: 0,
        }
    }

    pub fn brfa(bias_scale: f64) -> Self {
        KernelSpec {
            kind: KernelKind::BrfaAnalytic,
            series_truncation: 40,
            mc_heads: 1,
            bias_scale,
            mc_seed: 0,
        }
    }

    pub fn mc(model: ModelKind, mc_heads: usize, bias_scale: f64, mc_seed: u64) -> Self {
        KernelSpec {
            kind: KernelKind::McEmpirical(model),
            series_truncation: 40,
            mc_heads,
            bias_scale,
            mc_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.series_truncation < 2 {
            return Err(Error::InvalidConfig(format!(
                "series truncation must be >= 2, got {}",
                self.series_truncation
            )));
        }
        if self.mc_heads == 0 {
            return Err(Error::InvalidConfig("mc_heads must be >= 1".into()));
        }
        Ok(())
    }
}

/// `E[relu(Z1) relu(Z2)]` for standard bivariate normals with correlation
/// `u`, in closed form:
///
/// `(1/2pi) * (sqrt(1-u^2) + u*(pi/2 + asin u))`.
///
/// This is the form consistent with the series constants (value 1/(2pi) at
/// u=0, slope coefficient 1/4) and with the Monte-Carlo estimator; a widely
/// printed `pi/2 - acos u` variant evaluates to 1/4 instead of the correct
/// 1/2 at u=1 and is deliberately not used.
pub fn arccos_relu_kernel(u: f64) -> Result<f64> {
    if u.abs() > 1.0 + 1e-9 || u.is_nan() {
        return Err(Error::Domain(format!(
            "correlation {u} outside [-1, 1]"
        )));
    }
    let u = u.clamp(-1.0, 1.0);
    Ok(((1.0 - u * u).sqrt() + u * (std::f64::consts::FRAC_PI_2 + u.asin()))
        / (2.0 * std::f64::consts::PI))
}

/// Series evaluation of the same expectation from the Hermite expansion of
/// the (unshifted) ReLU: `sum_n s_n^2 n! u^n`. Kept alongside the closed
/// form so the two routes can be checked against each other.
pub fn relu_kernel_series(u: f64, truncation: usize) -> Result<f64> {
    if u.abs() > 1.0 + 1e-9 || u.is_nan() {
        return Err(Error::Domain(format!(
            "correlation {u} outside [-1, 1]"
        )));
    }
    let u = u.clamp(-1.0, 1.0);
    let s = shifted_relu_hermite_coeffs(0.0, truncation)?;
    let facts = factorial_table(truncation);
    Ok(pair_series(&s.coeffs, &s.coeffs, u, &facts))
}

fn factorial_table(order: usize) -> Vec<f64> {
    (0..=order).map(factorial).collect()
}

/// `sum_l si[l] sj[l] l! u^l` with the relative early exit: stop after two
/// consecutive terms below 1e-12 of the accumulated sum. A single tiny term
/// is not enough because odd terms vanish identically at zero shift.
fn pair_series(si: &[f64], sj: &[f64], u: f64, facts: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut upow = 1.0;
    let mut small_run = 0;
    for l in 0..si.len() {
        let term = si[l] * sj[l] * facts[l] * upow;
        acc += term;
        upow *= u;
        if term.abs() < 1e-12 * acc.abs() {
            small_run += 1;
            if small_run >= 2 {
                break;
            }
        } else {
            small_run = 0;
        }
    }
    acc
}

fn check_dims(x: &TokenSequence, y: &TokenSequence) -> Result<()> {
    if x.d() != y.d() {
        return Err(Error::ShapeMismatch(format!(
            "sequences have dimensions {} and {}",
            x.d(),
            y.d()
        )));
    }
    Ok(())
}

/// Infinite-width kernel of the unbiased attention model:
///
/// `K(x, y) = (1/(N N')) sum_{i,j} E[relu relu](u_ij) * <aug(x_i), aug(y_j)>`
/// with `u_ij = <aug(x0), aug(y0)> * <aug(x_i), aug(y_j)> / 4`.
pub fn rfa_kernel(x: &TokenSequence, y: &TokenSequence) -> Result<f64> {
    check_dims(x, y)?;
    let q = x.x0.dot(&y.x0) + 1.0;
    let mut total = 0.0;
    for i in 0..x.n_keys() {
        let xi = x.keys.row(i);
        for j in 0..y.n_keys() {
            let kk = xi.dot(&y.keys.row(j)) + 1.0;
            total += arccos_relu_kernel(q * kk / 4.0)? * kk;
        }
    }
    Ok(total / (x.n_keys() as f64 * y.n_keys() as f64))
}

/// `rfa_kernel` with each pair expectation evaluated through the truncated
/// Hermite series instead of the closed form. This is the natural
/// comparison target for the biased kernel at zero bias: both truncate the
/// same expansion, so their agreement is not limited by the series tail.
pub fn rfa_kernel_series(x: &TokenSequence, y: &TokenSequence, truncation: usize) -> Result<f64> {
    check_dims(x, y)?;
    let s = shifted_relu_hermite_coeffs(0.0, truncation)?;
    let facts = factorial_table(truncation);
    let q = x.x0.dot(&y.x0) + 1.0;
    let mut total = 0.0;
    for i in 0..x.n_keys() {
        let xi = x.keys.row(i);
        for j in 0..y.n_keys() {
            let kk = xi.dot(&y.keys.row(j)) + 1.0;
            let u = q * kk / 4.0;
            if u.abs() > 1.0 + 1e-9 || u.is_nan() {
                return Err(Error::Domain(format!("correlation {u} outside [-1, 1]")));
            }
            total += pair_series(&s.coeffs, &s.coeffs, u.clamp(-1.0, 1.0), &facts) * kk;
        }
    }
    Ok(total / (x.n_keys() as f64 * y.n_keys() as f64))
}

/// Infinite-width kernel of the biased attention model. Each pair `(i, j)`
/// contributes the shifted-ReLU pair series at shifts
/// `h_i = gamma0 <x0, x_i>`, `h'_j = gamma0 <y0, y_j>`, evaluated at the
/// same correlation `u_ij` as the unbiased kernel and truncated at
/// `spec.series_truncation` with the relative early exit.
pub fn brfa_kernel(x: &TokenSequence, y: &TokenSequence, spec: &KernelSpec) -> Result<f64> {
    if spec.kind != KernelKind::BrfaAnalytic {
        return Err(Error::InvalidConfig(
            "brfa_kernel requires a biased-analytic kernel spec".into(),
        ));
    }
    spec.validate()?;
    check_dims(x, y)?;
    let trunc = spec.series_truncation;
    let facts = factorial_table(trunc);
    let coeffs_for = |seq: &TokenSequence| -> Result<Vec<Vec<f64>>> {
        (0..seq.n_keys())
            .map(|i| {
                let h = spec.bias_scale * seq.x0.dot(&seq.keys.row(i));
                Ok(shifted_relu_hermite_coeffs(h, trunc)?.coeffs)
            })
            .collect()
    };
    let sx = coeffs_for(x)?;
    let sy = coeffs_for(y)?;
    let q = x.x0.dot(&y.x0) + 1.0;
    let mut total = 0.0;
    for i in 0..x.n_keys() {
        let xi = x.keys.row(i);
        for j in 0..y.n_keys() {
            let kk = xi.dot(&y.keys.row(j)) + 1.0;
            let u = q * kk / 4.0;
            if u.abs() > 1.0 + 1e-9 || u.is_nan() {
                return Err(Error::Domain(format!("correlation {u} outside [-1, 1]")));
            }
            let u = u.clamp(-1.0, 1.0);
            total += pair_series(&sx[i], &sy[j], u, &facts) * kk;
        }
    }
    Ok(total / (x.n_keys() as f64 * y.n_keys() as f64))
}

/// Finite-width Monte-Carlo estimate of the kernel: mean and standard error
/// over heads of the per-head feature product (no 1/M aggregation inside
/// the products).
pub fn mc_kernel(
    x: &TokenSequence,
    y: &TokenSequence,
    model_kind: ModelKind,
    stream: RngStream,
    mc_heads: usize,
    bias_scale: f64,
) -> Result<(f64, f64)> {
    if mc_heads < 2 {
        return Err(Error::InvalidConfig(
            "Monte-Carlo kernel estimation needs at least 2 heads".into(),
        ));
    }
    check_dims(x, y)?;
    let weights = sample_weights(stream, model_kind, mc_heads, x.d(), x.n_keys(), bias_scale)?;
    let products = head_products(&weights, x, y)?;
    let m = products.len() as f64;
    let mean = products.iter().sum::<f64>() / m;
    let var = products.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}

fn head_products(weights: &HeadWeights, x: &TokenSequence, y: &TokenSequence) -> Result<Vec<f64>> {
    let fx = featurize(weights, std::slice::from_ref(x))?;
    let fy = featurize(weights, std::slice::from_ref(y))?;
    let block = weights.block_width();
    let (rx, ry) = (fx.row(0), fy.row(0));
    Ok((0..weights.m_heads)
        .map(|h| {
            (0..block)
                .map(|b| rx[h * block + b] * ry[h * block + b])
                .sum()
        })
        .collect())
}

fn eval_pair(spec: &KernelSpec, x: &TokenSequence, y: &TokenSequence) -> Result<f64> {
    match spec.kind {
        KernelKind::RfaAnalytic => rfa_kernel(x, y),
        KernelKind::BrfaAnalytic => brfa_kernel(x, y, spec),
        KernelKind::McEmpirical(_) => Err(Error::InvalidConfig(
            "empirical pair evaluation goes through gram or mc_kernel".into(),
        )),
    }
}

/// Gram matrix `G[j,k] = k(batch[j], batch[k])`, exactly symmetric (the
/// upper triangle is computed, the lower mirrored). The empirical kind
/// draws one shared weight set from `spec.mc_seed` and averages per-head
/// feature products, i.e. `G = Phi Phi^T / M`.
pub fn gram(spec: &KernelSpec, batch: &[TokenSequence]) -> Result<Array2<f64>> {
    spec.validate()?;
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let n = batch.len();
    if let KernelKind::McEmpirical(model) = spec.kind {
        let stream = RngStream::new(spec.mc_seed).derive("mc-gram", 0);
        let weights = sample_weights(
            stream,
            model,
            spec.mc_heads,
            batch[0].d(),
            batch[0].n_keys(),
            spec.bias_scale,
        )?;
        let phi = featurize(&weights, batch)?;
        let mut g = phi.dot(&phi.t());
        g.mapv_inplace(|v| v / spec.mc_heads as f64);
        for j in 0..n {
            for k in 0..j {
                g[[j, k]] = g[[k, j]];
            }
        }
        return Ok(g);
    }
    let upper: Vec<Result<Vec<f64>>> = par::map_indexed(n, |j| {
        (j..n).map(|k| eval_pair(spec, &batch[j], &batch[k])).collect()
    });
    let mut g = Array2::zeros((n, n));
    for (j, row) in upper.into_iter().enumerate() {
        for (off, v) in row?.into_iter().enumerate() {
            let k = j + off;
            g[[j, k]] = v;
            g[[k, j]] = v;
        }
    }
    Ok(g)
}

/// Dual-coefficient fit of kernel ridge regression: solves
/// `(G + n lambda I) alpha = y`.
pub fn kernel_ridge_fit(g: &Array2<f64>, y: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "kernel ridge needs lambda > 0, got {lambda}"
        )));
    }
    let n = g.nrows();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "gram is {n}x{n} but labels have length {}",
            y.len()
        )));
    }
    let mut sys = g.clone();
    add_diag(&mut sys, n as f64 * lambda);
    solve_spd(sys.view(), y)
}

/// Predictions of a fitted kernel ridge model on new sequences:
/// `pred[t] = sum_j alpha[j] k(train[j], test[t])`.
pub fn kernel_ridge_predict(
    spec: &KernelSpec,
    train: &[TokenSequence],
    alpha: ArrayView1<f64>,
    test: &[TokenSequence],
) -> Result<Array1<f64>> {
    if alpha.len() != train.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} dual coefficients for {} training sequences",
            alpha.len(),
            train.len()
        )));
    }
    let rows: Vec<Result<f64>> = par::map_indexed(test.len(), |t| {
        let mut acc = 0.0;
        for (j, tr) in train.iter().enumerate() {
            acc += alpha[j] * eval_pair(spec, tr, &test[t])?;
        }
        Ok(acc)
    });
    rows.into_iter().collect::<Result<Vec<f64>>>().map(Array1::from)
}
