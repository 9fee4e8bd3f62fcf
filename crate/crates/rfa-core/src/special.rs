//! Probabilists' Hermite polynomials, Gaussian density helpers, and the
//! Hermite expansion of the shifted ReLU.

use crate::error::{Error, Result};

/// `1/sqrt(2*pi)`, the standard Gaussian density at zero.
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_68;

/// Evaluates the probabilists' Hermite polynomial `He_n` at `x` via the
/// upward three-term recurrence `He_{n+1} = x He_n - n He_{n-1}`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `n!` as a 64-bit real; stays finite up to n = 170.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Double factorial `n!!` as a 64-bit real, with `0!! = (-1)!! = 1`.
pub fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Standard Gaussian density.
pub fn gaussian_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard Gaussian distribution function, via the complementary error
/// function (absolute error well below 1e-14).
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// A finite expansion `sum_n coeffs[n] * He_n(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSeries {
    /// `coeffs[n]` multiplies `He_n`.
    pub coeffs: Vec<f64>,
}

impl HermiteSeries {
    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluates the series at `x` with a single pass of the recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.coeffs[0];
        if self.coeffs.len() > 1 {
            acc += self.coeffs[1] * x;
        }
        let (mut prev, mut cur) = (1.0, x);
        for n in 2..self.coeffs.len() {
            let next = x * cur - (n - 1) as f64 * prev;
            prev = cur;
            cur = next;
            acc += self.coeffs[n] * cur;
        }
        acc
    }
}

/// Hermite expansion of the monomial `x^n`:
/// `x^n = n! * sum_{m=0}^{floor(n/2)} He_{n-2m}(x) / (2^m m! (n-2m)!)`.
pub fn monomial_hermite_coeffs(n: usize) -> HermiteSeries {
    let mut coeffs = vec![0.0; n + 1];
    let nf = factorial(n);
    for m in 0..=(n / 2) {
        coeffs[n - 2 * m] = nf / (2f64.powi(m as i32) * factorial(m) * factorial(n - 2 * m));
    }
    HermiteSeries { coeffs }
}

/// Hermite expansion of the shifted ReLU `x -> relu(x + c)` under the
/// standard Gaussian weight:
///
/// `coeffs[0] = c Phi(c) + phi(c)`, `coeffs[1] = Phi(c)`, and
/// `coeffs[n] = (-1)^n phi(c) He_{n-2}(c) / n!` for `n >= 2`.
pub fn shifted_relu_hermite_coeffs(c: f64, order: usize) -> Result<HermiteSeries> {
    if order < 2 {
        return Err(Error::InvalidConfig(format!(
            "shifted ReLU expansion needs order >= 2, got {order}"
        )));
    }
    let pdf = gaussian_pdf(c);
    let cdf = gaussian_cdf(c);
    let mut coeffs = Vec::with_capacity(order + 1);
    coeffs.push(c * cdf + pdf);
    coeffs.push(cdf);
    for n in 2..=order {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(sign * pdf * hermite_eval(n - 2, c) / factorial(n));
    }
    Ok(HermiteSeries { coeffs })
}
