//! Finite-width random feature maps for the three models.
//!
//! Each model is linear in its trainable coefficients: `featurize` produces
//! the design matrix whose rows are per-sequence features, and `predict` is
//! a plain matrix-vector product.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::par;
use crate::rng::{RngStream, TokenSequence};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    /// Attention with frozen Gaussian query-key matrices.
    Rfa,
    /// Same, with a fixed identity-block bias added to every head matrix.
    Brfa,
    /// Two-layer network on the flattened token sequence.
    Rfmlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Rfa, ModelKind::Brfa, ModelKind::Rfmlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rfa => "rfa",
            ModelKind::Brfa => "brfa",
            ModelKind::Rfmlp => "rfmlp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rfa" => Ok(ModelKind::Rfa),
            "brfa" => Ok(ModelKind::Brfa),
            "rfmlp" => Ok(ModelKind::Rfmlp),
            other => Err(Error::InvalidConfig(format!("unknown model '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
enum WeightData {
    /// Head-major buffer of transposed head matrices: entry `(a, b)` of
    /// head `m`'s transposed matrix lives at `m*(d+1)^2 + a*(d+1) + b`.
    /// The bias block (for the biased model) is already added in.
    Attention(Vec<f64>),
    /// Head-major buffer of flat weight vectors of length `d(N+1)+1`.
    Flat { w: Vec<f64>, dim: usize },
}

/// The frozen random weights defining one feature map.
#[derive(Debug, Clone)]
pub struct HeadWeights {
    pub model_kind: ModelKind,
    pub m_heads: usize,
    pub d: usize,
    /// Bias strength gamma0 (zero for the unbiased models).
    pub bias_scale: f64,
    data: WeightData,
}

impl HeadWeights {
    /// Number of trainable coefficients this map produces.
    pub fn n_features(&self) -> usize {
        match self.model_kind {
            ModelKind::Rfa | ModelKind::Brfa => self.m_heads * (self.d + 1),
            ModelKind::Rfmlp => self.m_heads,
        }
    }

    /// Width of one per-head coefficient block.
    pub fn block_width(&self) -> usize {
        match self.model_kind {
            ModelKind::Rfa | ModelKind::Brfa => self.d + 1,
            ModelKind::Rfmlp => 1,
        }
    }

    /// Builds attention weights from explicit head matrices (entry `(i, j)`
    /// of each matrix multiplies `x0[i] * key[j]` in the preactivation).
    /// Used by tests and the Monte-Carlo kernel; `sample_weights` is the
    /// production path.
    pub fn from_attention_matrices(
        model_kind: ModelKind,
        bias_scale: f64,
        mats: &[Array2<f64>],
    ) -> Result<Self> {
        if matches!(model_kind, ModelKind::Rfmlp) {
            return Err(Error::InvalidConfig(
                "attention matrices cannot back the flat model".into(),
            ));
        }
        check_bias(model_kind, bias_scale)?;
        let m = mats.len();
        if m == 0 {
            return Err(Error::InvalidConfig("need at least one head".into()));
        }
        let da = mats[0].nrows();
        if da < 2 || mats.iter().any(|w| w.nrows() != da || w.ncols() != da) {
            return Err(Error::ShapeMismatch(
                "head matrices must share a square (d+1)x(d+1) shape".into(),
            ));
        }
        let d = da - 1;
        let mut buf = vec![0.0; m * da * da];
        for (h, w) in mats.iter().enumerate() {
            let base = h * da * da;
            for i in 0..da {
                for j in 0..da {
                    buf[base + j * da + i] = w[[i, j]];
                }
            }
            for i in 0..d {
                buf[base + i * da + i] += bias_scale;
            }
        }
        Ok(HeadWeights {
            model_kind,
            m_heads: m,
            d,
            bias_scale,
            data: WeightData::Attention(buf),
        })
    }
}

fn check_bias(model_kind: ModelKind, bias_scale: f64) -> Result<()> {
    if bias_scale != 0.0 && !matches!(model_kind, ModelKind::Brfa) {
        return Err(Error::InvalidConfig(format!(
            "bias_scale {bias_scale} is only meaningful for the biased attention model"
        )));
    }
    if bias_scale < 0.0 {
        return Err(Error::InvalidConfig("bias_scale must be >= 0".into()));
    }
    Ok(())
}

/// Samples the frozen weights for one model.
///
/// Attention heads draw i.i.d. N(0, 1/4) entries so the preactivation
/// `<W, aug(x0) aug(xi)^T>` has unit variance; the flat model draws
/// N(0, 1/(N+2)) entries for the same reason. The biased model adds
/// `bias_scale * [I_d, 0; 0, 0]` to every head after drawing, so the same
/// stream with bias zero reproduces the unbiased weights bit for bit.
pub fn sample_weights(
    stream: RngStream,
    model_kind: ModelKind,
    m_heads: usize,
    d: usize,
    n_keys: usize,
    bias_scale: f64,
) -> Result<HeadWeights> {
    if m_heads == 0 {
        return Err(Error::InvalidConfig("need at least one head".into()));
    }
    if d == 0 || n_keys == 0 {
        return Err(Error::InvalidDimension("need d >= 1 and N >= 1".into()));
    }
    match model_kind {
        ModelKind::Rfa | ModelKind::Brfa => {
            if matches!(model_kind, ModelKind::Rfa) {
                check_bias(model_kind, bias_scale)?;
            } else if bias_scale < 0.0 {
                return Err(Error::InvalidConfig("bias_scale must be >= 0".into()));
            }
            let da = d + 1;
            let mut rng = stream.rng();
            let mut buf = vec![0.0; m_heads * da * da];
            for h in 0..m_heads {
                let base = h * da * da;
                for i in 0..da {
                    for j in 0..da {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        // entry (i, j) of W, stored transposed
                        buf[base + j * da + i] = 0.5 * z;
                    }
                }
                let gamma = if matches!(model_kind, ModelKind::Brfa) {
                    bias_scale
                } else {
                    0.0
                };
                for i in 0..d {
                    buf[base + i * da + i] += gamma;
                }
            }
            Ok(HeadWeights {
                model_kind,
                m_heads,
                d,
                bias_scale: if matches!(model_kind, ModelKind::Brfa) {
                    bias_scale
                } else {
                    0.0
                },
                data: WeightData::Attention(buf),
            })
        }
        ModelKind::Rfmlp => {
            check_bias(model_kind, bias_scale)?;
            let dim = d * (n_keys + 1) + 1;
            let std = 1.0 / ((n_keys + 2) as f64).sqrt();
            let mut rng = stream.rng();
            let mut w = vec![0.0; m_heads * dim];
            for x in w.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = std * z;
            }
            Ok(HeadWeights {
                model_kind,
                m_heads,
                d,
                bias_scale: 0.0,
                data: WeightData::Flat { w, dim },
            })
        }
    }
}

/// Features of one sequence written into `row` (length `n_features`).
fn fill_row(weights: &HeadWeights, seq: &TokenSequence, row: &mut [f64]) {
    match &weights.data {
        WeightData::Attention(buf) => {
            let d = weights.d;
            let da = d + 1;
            let n = seq.n_keys();
            let q = seq.aug_query();
            let q = q.as_slice().unwrap();
            // augmented keys, contiguous per key
            let mut keys = vec![0.0; n * da];
            for i in 0..n {
                let kk = seq.keys.row(i);
                for b in 0..d {
                    keys[i * da + b] = kk[b];
                }
                keys[i * da + d] = 1.0;
            }
            let inv_n = 1.0 / n as f64;
            let mut t = vec![0.0; da];
            for h in 0..weights.m_heads {
                let base = h * da * da;
                // t = W^T q, rows of the stored transpose are contiguous
                for (a, ta) in t.iter_mut().enumerate() {
                    let wrow = &buf[base + a * da..base + a * da + da];
                    *ta = wrow.iter().zip(q).map(|(w, x)| w * x).sum();
                }
                let out = &mut row[h * da..(h + 1) * da];
                out.fill(0.0);
                for i in 0..n {
                    let key = &keys[i * da..(i + 1) * da];
                    let pre: f64 = t.iter().zip(key).map(|(a, b)| a * b).sum();
                    if pre > 0.0 {
                        for (o, k) in out.iter_mut().zip(key) {
                            *o += pre * k;
                        }
                    }
                }
                for o in out.iter_mut() {
                    *o *= inv_n;
                }
            }
        }
        WeightData::Flat { w, dim } => {
            let flat = seq.flat();
            let flat = flat.as_slice().unwrap();
            debug_assert_eq!(flat.len(), *dim);
            for (h, slot) in row.iter_mut().enumerate() {
                let wrow = &w[h * dim..(h + 1) * dim];
                let pre: f64 = wrow.iter().zip(flat).map(|(a, b)| a * b).sum();
                *slot = pre.max(0.0);
            }
        }
    }
}

/// Design matrix over a batch: row `j` holds the features of `batch[j]`.
/// Rows are computed independently (and in parallel when enabled); the
/// result does not depend on the schedule.
pub fn featurize(weights: &HeadWeights, batch: &[TokenSequence]) -> Result<Array2<f64>> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let expect_dim = match &weights.data {
        WeightData::Flat { dim, .. } => Some(*dim),
        WeightData::Attention(_) => None,
    };
    for seq in batch {
        if seq.d() != weights.d {
            return Err(Error::ShapeMismatch(format!(
                "sequence dimension {} but weights expect {}",
                seq.d(),
                weights.d
            )));
        }
        if let Some(dim) = expect_dim {
            if seq.d() * (seq.n_keys() + 1) + 1 != dim {
                return Err(Error::ShapeMismatch(format!(
                    "flat model weights sized for {} inputs, sequence flattens to {}",
                    dim,
                    seq.d() * (seq.n_keys() + 1) + 1
                )));
            }
        }
    }
    let n_features = weights.n_features();
    let mut data = vec![0.0; batch.len() * n_features];
    par::for_each_chunk(&mut data, n_features, |i, row| {
        fill_row(weights, &batch[i], row);
    });
    Array2::from_shape_vec((batch.len(), n_features), data)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))
}

/// Model predictions: the design matrix times the coefficient vector.
pub fn predict(features: &Array2<f64>, coeffs: ArrayView1<f64>) -> Result<Array1<f64>> {
    if features.ncols() != coeffs.len() {
        return Err(Error::ShapeMismatch(format!(
            "features have {} columns, coefficients length {}",
            features.ncols(),
            coeffs.len()
        )));
    }
    Ok(features.dot(&coeffs))
}

/// Reports the two coefficient norms tracked by the learner:
/// `K1 = sum_m ||v_m||_2` and `K2 = M * sum_m ||v_m||_2^2` (scaled so it is
/// directly comparable across widths). Flat-model heads have scalar
/// coefficients.
pub fn coeff_norms(
    coeffs: ArrayView1<f64>,
    model_kind: ModelKind,
    m_heads: usize,
    d: usize,
) -> Result<(f64, f64)> {
    let block = match model_kind {
        ModelKind::Rfa | ModelKind::Brfa => d + 1,
        ModelKind::Rfmlp => 1,
    };
    if coeffs.len() != m_heads * block {
        return Err(Error::ShapeMismatch(format!(
            "expected {} coefficients ({} heads x {} block), got {}",
            m_heads * block,
            m_heads,
            block,
            coeffs.len()
        )));
    }
    let c = coeffs.as_slice().unwrap();
    let mut k1 = 0.0;
    let mut sum_sq = 0.0;
    for h in 0..m_heads {
        let v = &c[h * block..(h + 1) * block];
        let sq: f64 = v.iter().map(|x| x * x).sum();
        k1 += sq.sqrt();
        sum_sq += sq;
    }
    Ok((k1, m_heads as f64 * sum_sq))
}
