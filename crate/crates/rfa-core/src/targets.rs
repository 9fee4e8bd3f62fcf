//! Catalog of synthetic target functions on token sequences and the
//! complexity measures that predict how hard each target is for the three
//! model families.
//!
//! Every complexity value is computed for the canonical representation of
//! the target written out in its constructor, not the infimum over all
//! representations, so the numbers are upper bounds.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{RngStream, TokenSequence};
use crate::special::factorial;

/// Inner product the series variable is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyVariable {
    /// `<beta, x_i>`: a fixed direction against each key.
    KeyBeta,
    /// `<x0, x_i>`: the query against each key.
    QueryKey,
}

/// Multiplicative weight applied to each series term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyWeight {
    One,
    KeyBeta,
}

/// A target function of a token sequence. All catalog members average a
/// per-key polynomial over keys and are permutation invariant in the keys.
#[derive(Debug, Clone)]
pub enum TargetSpec {
    /// `(1/N) sum_i <beta, x_i>^p`
    AvgKeyPoly { p: u32, beta: Array1<f64> },
    /// `(1/N) sum_i <x0, x_i>^q <beta, x_i>`
    CorrPoly { q: u32, beta: Array1<f64> },
    /// `<beta, x0>^p` (no key dependence)
    QueryPoly { p: u32, beta: Array1<f64> },
    /// `(1/N) sum_i <x0, S x_i>^3 <beta, x_i>` with a frozen matrix `S`
    MatrixCorr {
        beta: Array1<f64>,
        gamma: f64,
        s: Array2<f64>,
    },
    /// `(1/N) sum_i sum_t coeffs[t] * v^degrees[t] * w` with `v` and `w`
    /// chosen by `variable` and `weight`
    PolySeries {
        degrees: Vec<u32>,
        coeffs: Vec<f64>,
        variable: PolyVariable,
        weight: PolyWeight,
        beta: Array1<f64>,
    },
}

fn check_unit(beta: &Array1<f64>) -> Result<()> {
    if beta.is_empty() {
        return Err(Error::InvalidDimension("beta must be non-empty".into()));
    }
    let norm = beta.dot(beta).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "beta must be a unit vector, got norm {norm}"
        )));
    }
    Ok(())
}

impl TargetSpec {
    pub fn f1(p: u32, beta: Array1<f64>) -> Result<Self> {
        check_unit(&beta)?;
        Ok(TargetSpec::AvgKeyPoly { p, beta })
    }

    pub fn f2(q: u32, beta: Array1<f64>) -> Result<Self> {
        check_unit(&beta)?;
        Ok(TargetSpec::CorrPoly { q, beta })
    }

    pub fn f3(p: u32, beta: Array1<f64>) -> Result<Self> {
        check_unit(&beta)?;
        Ok(TargetSpec::QueryPoly { p, beta })
    }

    /// Cubic matrix-correlation target with `S = Z + gamma I`, where the
    /// entries of `Z` are N(0, 1/d) draws frozen by `z_seed` so train and
    /// test phases see the identical matrix.
    pub fn f4(beta: Array1<f64>, gamma: f64, z_seed: u64) -> Result<Self> {
        check_unit(&beta)?;
        let d = beta.len();
        let mut rng = RngStream::new(z_seed).derive("target-z", 0).rng();
        let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("valid std");
        let mut s = Array2::from_shape_simple_fn((d, d), || normal.sample(&mut rng));
        for i in 0..d {
            s[[i, i]] += gamma;
        }
        Ok(TargetSpec::MatrixCorr { beta, gamma, s })
    }

    /// Same target with an explicitly supplied matrix, for tests and
    /// reductions (e.g. `S = I` recovers the correlation polynomial q=3).
    pub fn f4_with_matrix(beta: Array1<f64>, gamma: f64, s: Array2<f64>) -> Result<Self> {
        check_unit(&beta)?;
        if s.nrows() != beta.len() || s.ncols() != beta.len() {
            return Err(Error::ShapeMismatch(format!(
                "S is {}x{} but beta has dimension {}",
                s.nrows(),
                s.ncols(),
                beta.len()
            )));
        }
        Ok(TargetSpec::MatrixCorr { beta, gamma, s })
    }

    pub fn poly_series(
        degrees: Vec<u32>,
        coeffs: Vec<f64>,
        variable: PolyVariable,
        weight: PolyWeight,
        beta: Array1<f64>,
    ) -> Result<Self> {
        check_unit(&beta)?;
        if degrees.is_empty() || degrees.len() != coeffs.len() {
            return Err(Error::InvalidConfig(format!(
                "series needs matching non-empty degree/coefficient lists, got {} and {}",
                degrees.len(),
                coeffs.len()
            )));
        }
        Ok(TargetSpec::PolySeries {
            degrees,
            coeffs,
            variable,
            weight,
            beta,
        })
    }

    /// Smooth attention-like series: `psi(<x0, x_i>) <beta, x_i>` with
    /// `psi(t) = t * atan(t/eta)`, truncated after 20 even-degree terms.
    /// The k-th term is `(-1)^(k-1) t^(2k) / ((2k-1) eta^(2k-1))`.
    pub fn psi_series(eta: f64, beta: Array1<f64>) -> Result<Self> {
        if eta <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "psi series needs eta > 0, got {eta}"
            )));
        }
        let degrees: Vec<u32> = (1..=20).map(|k| 2 * k).collect();
        let coeffs: Vec<f64> = (1..=20u32)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign / ((2 * k - 1) as f64 * eta.powi(2 * k as i32 - 1))
            })
            .collect();
        TargetSpec::poly_series(degrees, coeffs, PolyVariable::QueryKey, PolyWeight::KeyBeta, beta)
    }

    pub fn d(&self) -> usize {
        match self {
            TargetSpec::AvgKeyPoly { beta, .. }
            | TargetSpec::CorrPoly { beta, .. }
            | TargetSpec::QueryPoly { beta, .. }
            | TargetSpec::MatrixCorr { beta, .. }
            | TargetSpec::PolySeries { beta, .. } => beta.len(),
        }
    }

    /// Short identifier used in CSV rows and plot file names.
    pub fn id(&self) -> String {
        match self {
            TargetSpec::AvgKeyPoly { p, .. } => format!("f1_p{p}"),
            TargetSpec::CorrPoly { q, .. } => format!("f2_q{q}"),
            TargetSpec::QueryPoly { p, .. } => format!("f3_p{p}"),
            TargetSpec::MatrixCorr { gamma, .. } => format!("f4_g{gamma}"),
            TargetSpec::PolySeries { degrees, .. } => format!("series_k{}", degrees.len()),
        }
    }
}

/// Exact evaluation of a target on one sequence.
pub fn eval_target(spec: &TargetSpec, x: &TokenSequence) -> Result<f64> {
    if spec.d() != x.d() {
        return Err(Error::ShapeMismatch(format!(
            "target has dimension {} but sequence has {}",
            spec.d(),
            x.d()
        )));
    }
    let n = x.n_keys() as f64;
    let value = match spec {
        TargetSpec::AvgKeyPoly { p, beta } => {
            (0..x.n_keys())
                .map(|i| beta.dot(&x.keys.row(i)).powi(*p as i32))
                .sum::<f64>()
                / n
        }
        TargetSpec::CorrPoly { q, beta } => {
            (0..x.n_keys())
                .map(|i| {
                    let key = x.keys.row(i);
                    x.x0.dot(&key).powi(*q as i32) * beta.dot(&key)
                })
                .sum::<f64>()
                / n
        }
        TargetSpec::QueryPoly { p, beta } => beta.dot(&x.x0).powi(*p as i32),
        TargetSpec::MatrixCorr { beta, s, .. } => {
            (0..x.n_keys())
                .map(|i| {
                    let key = x.keys.row(i);
                    x.x0.dot(&s.dot(&key)).powi(3) * beta.dot(&key)
                })
                .sum::<f64>()
                / n
        }
        TargetSpec::PolySeries {
            degrees,
            coeffs,
            variable,
            weight,
            beta,
        } => {
            (0..x.n_keys())
                .map(|i| {
                    let key = x.keys.row(i);
                    let v = match variable {
                        PolyVariable::KeyBeta => beta.dot(&key),
                        PolyVariable::QueryKey => x.x0.dot(&key),
                    };
                    let w = match weight {
                        PolyWeight::One => 1.0,
                        PolyWeight::KeyBeta => beta.dot(&key),
                    };
                    degrees
                        .iter()
                        .zip(coeffs)
                        .map(|(&deg, &a)| a * v.powi(deg as i32))
                        .sum::<f64>()
                        * w
                })
                .sum::<f64>()
                / n
        }
    };
    Ok(value)
}

/// Degree-k constant of the unbiased attention complexity measure:
/// `max(k^4.5 * 4^k, 1)`.
fn rfa_constant(k: u32) -> f64 {
    ((k as f64).powf(4.5) * 4f64.powi(k as i32)).max(1.0)
}

/// Degree-k constant of the flattened-MLP complexity measure with the
/// sharper base `(N+2)/2`: `max(k^3.5 * ((N+2)/2)^(2k), 1)`.
fn rfmlp_constant(k: u32, n_keys: usize) -> f64 {
    let base = (n_keys as f64 + 2.0) / 2.0;
    ((k as f64).powf(3.5) * base.powi(2 * k as i32)).max(1.0)
}

/// Degree-k constant of the biased attention measure at expansion level L:
/// `(2L+k)^((k+3)/2) * 8^(L+k/2)`.
fn brfa_constant(k: u32, level: u32) -> f64 {
    let base = 2.0 * level as f64 + k as f64;
    base.powf((k as f64 + 3.0) / 2.0) * 8f64.powf(level as f64 + k as f64 / 2.0)
}

fn frobenius_sq(s: &Array2<f64>) -> f64 {
    s.iter().map(|v| v * v).sum()
}

fn weight_degree(weight: &PolyWeight) -> u32 {
    match weight {
        PolyWeight::One => 0,
        PolyWeight::KeyBeta => 1,
    }
}

/// Complexity of the target for the unbiased attention model. Combines the
/// per-degree constants with the squared Frobenius norms of the canonical
/// coefficient tensors: a degree split (r in the query-key factor, s in the
/// fixed-direction factor) contributes `C_{r+s} a^2 ||S||_Fr^{2r} ||G_s||^2`.
pub fn complexity_rfa(spec: &TargetSpec) -> Result<f64> {
    let d = spec.d() as f64;
    Ok(match spec {
        TargetSpec::AvgKeyPoly { p, .. } => rfa_constant(*p),
        TargetSpec::CorrPoly { q, .. } => rfa_constant(q + 1) * d.powi(*q as i32),
        TargetSpec::QueryPoly { p, .. } => rfa_constant(*p),
        TargetSpec::MatrixCorr { s, .. } => rfa_constant(4) * frobenius_sq(s).powi(3),
        TargetSpec::PolySeries {
            degrees,
            coeffs,
            variable,
            weight,
            ..
        } => {
            let wd = weight_degree(weight);
            degrees
                .iter()
                .zip(coeffs)
                .map(|(&k, &a)| {
                    let tensor_sq = match variable {
                        PolyVariable::KeyBeta => 1.0,
                        PolyVariable::QueryKey => d.powi(k as i32),
                    };
                    rfa_constant(k + wd) * a * a * tensor_sq
                })
                .sum()
        }
    })
}

/// Complexity of the target for the flattened-MLP model with `n_keys`
/// keys. Query-key factors double the polynomial degree in the flattened
/// coordinates, which is where the extra `(N+2)/2` powers come from.
pub fn complexity_rfmlp(spec: &TargetSpec, n_keys: usize) -> Result<f64> {
    if n_keys == 0 {
        return Err(Error::InvalidDimension("n_keys must be >= 1".into()));
    }
    let d = spec.d() as f64;
    Ok(match spec {
        TargetSpec::AvgKeyPoly { p, .. } => rfmlp_constant(*p, n_keys),
        TargetSpec::CorrPoly { q, .. } => rfmlp_constant(2 * q + 1, n_keys) * d.powi(*q as i32),
        TargetSpec::QueryPoly { p, .. } => rfmlp_constant(*p, n_keys),
        TargetSpec::MatrixCorr { s, .. } => rfmlp_constant(7, n_keys) * frobenius_sq(s).powi(3),
        TargetSpec::PolySeries {
            degrees,
            coeffs,
            variable,
            weight,
            ..
        } => {
            let wd = weight_degree(weight);
            degrees
                .iter()
                .zip(coeffs)
                .map(|(&k, &a)| {
                    let (total, tensor_sq) = match variable {
                        PolyVariable::KeyBeta => (k + wd, 1.0),
                        PolyVariable::QueryKey => (2 * k + wd, d.powi(k as i32)),
                    };
                    rfmlp_constant(total, n_keys) * a * a * tensor_sq
                })
                .sum()
        }
    })
}

/// Complexity pair `(B, eps_L)` of the target for the biased attention
/// model at expansion level `L >= 1`: `B = ||A||_Fr^2 (sum_k |a_k| C_k)^2`
/// over the query-degree channels `k` of the canonical representation,
/// plus the level's irreducible bias `eps_L = 1 / (2^(L+1) (L+1)!)`.
///
/// Targets whose key polynomial exceeds degree 3 (or query degree 2, for
/// channels without a dedicated closed form) are not expressible in the
/// supported form and report an unsupported error.
pub fn complexity_brfa(spec: &TargetSpec, level: u32) -> Result<(f64, f64)> {
    if level == 0 {
        return Err(Error::InvalidConfig("expansion level must be >= 1".into()));
    }
    let eps = 1.0 / (2f64.powi(level as i32 + 1) * factorial(level as usize + 1));
    let b = match spec {
        TargetSpec::AvgKeyPoly { p, .. } => {
            if *p > 3 {
                return Err(Error::Unsupported(format!(
                    "key polynomial of degree {p} exceeds the degree-3 form"
                )));
            }
            brfa_constant(0, level).powi(2)
        }
        TargetSpec::CorrPoly { q, .. } => brfa_constant(*q, level).powi(2),
        TargetSpec::QueryPoly { p, .. } => {
            if *p > 2 {
                return Err(Error::Unsupported(format!(
                    "query polynomial of degree {p} exceeds the degree-2 form"
                )));
            }
            brfa_constant(*p, level).powi(2)
        }
        TargetSpec::MatrixCorr { .. } => {
            return Err(Error::Unsupported(
                "cubic matrix correlation is outside the supported form".into(),
            ));
        }
        TargetSpec::PolySeries {
            degrees,
            coeffs,
            variable,
            weight,
            ..
        } => {
            let wd = weight_degree(weight);
            let sum: f64 = match variable {
                PolyVariable::KeyBeta => {
                    if let Some(&k) = degrees.iter().find(|&&k| k + wd > 3) {
                        return Err(Error::Unsupported(format!(
                            "key polynomial of degree {} exceeds the degree-3 form",
                            k + wd
                        )));
                    }
                    coeffs.iter().map(|a| a.abs() * brfa_constant(0, level)).sum()
                }
                PolyVariable::QueryKey => degrees
                    .iter()
                    .zip(coeffs)
                    .map(|(&k, &a)| a.abs() * brfa_constant(k, level))
                    .sum(),
            };
            sum * sum
        }
    };
    Ok((b, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_sequence;
    use ndarray::array;

    fn unit(d: usize, axis: usize) -> Array1<f64> {
        let mut v = Array1::zeros(d);
        v[axis] = 1.0;
        v
    }

    fn seq(x0: Array1<f64>, keys: Vec<Array1<f64>>) -> TokenSequence {
        let d = x0.len();
        let n = keys.len();
        let flat: Vec<f64> = keys.into_iter().flat_map(|k| k.to_vec()).collect();
        TokenSequence::new(x0, Array2::from_shape_vec((n, d), flat).unwrap()).unwrap()
    }

    fn random_seq(tag: u64, d: usize, n_keys: usize) -> TokenSequence {
        sample_sequence(RngStream::new(71).derive("target-test", tag), d, n_keys).unwrap()
    }

    #[test]
    fn aligned_key_average_is_one() {
        let spec = TargetSpec::f1(1, unit(3, 0)).unwrap();
        let x = seq(unit(3, 1), vec![unit(3, 0), unit(3, 0), unit(3, 0)]);
        assert_eq!(eval_target(&spec, &x).unwrap(), 1.0);
    }

    #[test]
    fn aligned_correlation_poly_is_one() {
        let beta = unit(3, 0);
        let spec = TargetSpec::f2(3, beta.clone()).unwrap();
        let x = seq(beta.clone(), vec![beta.clone(), beta]);
        assert_eq!(eval_target(&spec, &x).unwrap(), 1.0);
    }

    #[test]
    fn identity_matrix_reduces_cubic_to_correlation_poly() {
        let beta = unit(3, 1);
        let cubic =
            TargetSpec::f4_with_matrix(beta.clone(), 0.0, Array2::eye(3)).unwrap();
        let corr = TargetSpec::f2(3, beta).unwrap();
        for t in 0..5 {
            let x = random_seq(t, 3, 2);
            let a = eval_target(&cubic, &x).unwrap();
            let b = eval_target(&corr, &x).unwrap();
            assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn every_target_is_permutation_invariant_in_keys() {
        let beta = unit(4, 0);
        let specs = vec![
            TargetSpec::f1(2, beta.clone()).unwrap(),
            TargetSpec::f2(3, beta.clone()).unwrap(),
            TargetSpec::f3(2, beta.clone()).unwrap(),
            TargetSpec::f4(beta.clone(), 1.0, 3).unwrap(),
            TargetSpec::psi_series(4.0, beta).unwrap(),
        ];
        let x = random_seq(10, 4, 5);
        let mut rev_keys = Array2::zeros((5, 4));
        for i in 0..5 {
            rev_keys.row_mut(i).assign(&x.keys.row(4 - i));
        }
        let rev = TokenSequence::new(x.x0.clone(), rev_keys).unwrap();
        for spec in specs {
            let a = eval_target(&spec, &x).unwrap();
            let b = eval_target(&spec, &rev).unwrap();
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                "{}: {a} vs {b}",
                spec.id()
            );
        }
    }

    #[test]
    fn psi_series_matches_its_closed_form() {
        let beta = unit(3, 0);
        let spec = TargetSpec::psi_series(2.0, beta.clone()).unwrap();
        for t in 0..5 {
            let x = random_seq(20 + t, 3, 3);
            let got = eval_target(&spec, &x).unwrap();
            let want = (0..3)
                .map(|i| {
                    let key = x.keys.row(i);
                    let t = x.x0.dot(&key);
                    t * (t / 2.0).atan() * beta.dot(&key)
                })
                .sum::<f64>()
                / 3.0;
            assert!(
                (got - want).abs() <= 1e-10,
                "sequence {t}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn frozen_matrix_is_reused_across_evaluations() {
        let beta = unit(4, 0);
        let a = TargetSpec::f4(beta.clone(), 2.0, 42).unwrap();
        let b = TargetSpec::f4(beta, 2.0, 42).unwrap();
        let (TargetSpec::MatrixCorr { s: sa, .. }, TargetSpec::MatrixCorr { s: sb, .. }) =
            (&a, &b)
        else {
            panic!("wrong variant");
        };
        assert_eq!(sa, sb);
    }

    #[test]
    fn target_ids_are_stable() {
        let beta = unit(2, 0);
        assert_eq!(TargetSpec::f1(2, beta.clone()).unwrap().id(), "f1_p2");
        assert_eq!(TargetSpec::f2(3, beta.clone()).unwrap().id(), "f2_q3");
        assert_eq!(TargetSpec::f3(1, beta.clone()).unwrap().id(), "f3_p1");
        assert_eq!(TargetSpec::f4(beta.clone(), 8.0, 0).unwrap().id(), "f4_g8");
        assert_eq!(TargetSpec::psi_series(4.0, beta).unwrap().id(), "series_k20");
    }

    #[test]
    fn unbiased_complexity_reference_values() {
        let beta = unit(4, 0);
        let b1 = complexity_rfa(&TargetSpec::f3(1, beta.clone()).unwrap()).unwrap();
        assert_eq!(b1, 4.0);
        let b2 = complexity_rfa(&TargetSpec::f3(2, beta).unwrap()).unwrap();
        assert!((b2 - 362.03867196751233).abs() <= 1e-10 * b2);
    }

    #[test]
    fn biased_complexity_reference_values() {
        let beta = unit(4, 0);
        let (b, eps) = complexity_brfa(&TargetSpec::f1(2, beta).unwrap(), 3).unwrap();
        assert!((b - 56623104.0).abs() <= 1e-6 * b, "got {b}");
        assert!((eps - 1.0 / 384.0).abs() <= 1e-18);
    }

    #[test]
    fn flattened_complexity_reference_value() {
        let beta = unit(3, 0);
        let b = complexity_rfmlp(&TargetSpec::f3(1, beta).unwrap(), 2).unwrap();
        assert_eq!(b, 4.0);
    }

    #[test]
    fn flattened_to_unbiased_ratio_grows_with_sequence_length() {
        let beta = unit(4, 0);
        let spec = TargetSpec::f1(2, beta).unwrap();
        let rfa = complexity_rfa(&spec).unwrap();
        let expected = [(4usize, 2.53125), (8, 19.53125), (16, 205.03125)];
        let mut prev = 0.0;
        for (n_keys, want) in expected {
            let ratio = complexity_rfmlp(&spec, n_keys).unwrap() / rfa;
            assert!(
                (ratio - want).abs() <= 1e-12 * want,
                "N={n_keys}: ratio {ratio} vs {want}"
            );
            assert!(ratio > prev);
            prev = ratio;
        }
    }

    #[test]
    fn correlation_poly_complexity_scales_with_dimension() {
        for q in [1u32, 2, 3] {
            let mut prev = None;
            for d in [2usize, 4, 8] {
                let spec = TargetSpec::f2(q, unit(d, 0)).unwrap();
                let b = complexity_rfa(&spec).unwrap();
                if let Some(p) = prev {
                    let ratio: f64 = b / p;
                    let want = 2f64.powi(q as i32);
                    assert!(
                        (ratio - want).abs() <= 1e-12 * want,
                        "q={q}, d={d}: ratio {ratio}"
                    );
                }
                prev = Some(b);
            }
        }
    }

    #[test]
    fn complexity_is_monotone_in_degree() {
        let beta = unit(4, 0);
        let mut prev_rfa = 0.0;
        let mut prev_mlp = 0.0;
        let mut prev_brfa = 0.0;
        for deg in 1..=6u32 {
            let f1 = TargetSpec::f1(deg, beta.clone()).unwrap();
            let f2 = TargetSpec::f2(deg, beta.clone()).unwrap();
            let rfa = complexity_rfa(&f1).unwrap();
            let mlp = complexity_rfmlp(&f1, 8).unwrap();
            let (brfa, _) = complexity_brfa(&f2, 3).unwrap();
            assert!(rfa >= prev_rfa && mlp >= prev_mlp && brfa >= prev_brfa);
            prev_rfa = rfa;
            prev_mlp = mlp;
            prev_brfa = brfa;
        }
    }

    #[test]
    fn unsupported_targets_are_reported() {
        let beta = unit(4, 0);
        let cubic = TargetSpec::f4(beta.clone(), 0.0, 7).unwrap();
        assert!(matches!(
            complexity_brfa(&cubic, 3),
            Err(Error::Unsupported(_))
        ));
        let deep_key = TargetSpec::f1(4, beta.clone()).unwrap();
        assert!(matches!(
            complexity_brfa(&deep_key, 3),
            Err(Error::Unsupported(_))
        ));
        let deep_query = TargetSpec::f3(3, beta).unwrap();
        assert!(matches!(
            complexity_brfa(&deep_query, 3),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn series_complexity_matches_single_term_catalog_entries() {
        let beta = unit(4, 0);
        let single = TargetSpec::poly_series(
            vec![3],
            vec![1.0],
            PolyVariable::QueryKey,
            PolyWeight::KeyBeta,
            beta.clone(),
        )
        .unwrap();
        let catalog = TargetSpec::f2(3, beta).unwrap();
        assert_eq!(
            complexity_rfa(&single).unwrap(),
            complexity_rfa(&catalog).unwrap()
        );
        assert_eq!(
            complexity_rfmlp(&single, 8).unwrap(),
            complexity_rfmlp(&catalog, 8).unwrap()
        );
        assert_eq!(
            complexity_brfa(&single, 3).unwrap().0,
            complexity_brfa(&catalog, 3).unwrap().0
        );
    }

    #[test]
    fn constructors_validate_inputs() {
        assert!(matches!(
            TargetSpec::f1(2, array![0.5, 0.5]),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            TargetSpec::psi_series(0.0, unit(3, 0)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            TargetSpec::poly_series(
                vec![1, 2],
                vec![1.0],
                PolyVariable::KeyBeta,
                PolyWeight::One,
                unit(3, 0)
            ),
            Err(Error::InvalidConfig(_))
        ));
        let spec = TargetSpec::f1(1, unit(3, 0)).unwrap();
        let x = random_seq(0, 4, 2);
        assert!(matches!(
            eval_target(&spec, &x),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
