//! Experiment configuration: a flat TOML document with one nested
//! `[target]` table. Unknown keys are rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::features::ModelKind;
use crate::learner::default_lambda_grid;
use crate::rng::{sample_sphere, RngStream};
use crate::targets::{PolyVariable, PolyWeight, TargetSpec};

fn default_true() -> bool {
    true
}

fn default_bias_scale() -> f64 {
    4.0
}

fn default_n_list() -> Vec<usize> {
    (4..=12).map(|k| 1usize << k).collect()
}

fn default_n_test() -> usize {
    1000
}

fn default_seeds() -> usize {
    5
}

fn default_models() -> Vec<String> {
    vec!["rfa".into(), "brfa".into(), "rfmlp".into()]
}

/// Full description of one sweep. Field names double as the config-file
/// keys and the CLI flag names.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Token dimension.
    pub d: usize,
    /// Keys per sequence.
    pub n_tokens: usize,
    /// Heads of the attention models.
    pub m_heads: usize,
    /// Heads of the flattened model; defaults to `m_heads * (d + 1)` so
    /// all models have the same trainable parameter count.
    #[serde(default)]
    pub m_rfmlp: Option<usize>,
    /// Enforce the parameter-matching relation above.
    #[serde(default = "default_true")]
    pub match_params: bool,
    /// Bias strength gamma0 used by the biased attention model.
    #[serde(default = "default_bias_scale")]
    pub bias_scale: f64,
    /// Training sample sizes.
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    /// Number of independent repetitions (weights, data).
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Any subset of {rfa, brfa, rfmlp}.
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    /// Ridge grid; defaults to 0 plus 16 log-spaced points in [1e-8, 1e2].
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub root_seed: u64,
    /// Report 0.0 wall time in every row, for byte-comparable outputs.
    #[serde(default)]
    pub zero_wall_time: bool,
    /// Where CSV and plots go; the CLI falls back to an environment
    /// variable or the working directory.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub target: TargetConfig,
}

/// The `[target]` table. `kind` decides which of the optional parameters
/// apply; the rest must stay unset.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// One of f1, f2, f3, f4, psi, series.
    pub kind: String,
    #[serde(default)]
    pub p: Option<u32>,
    #[serde(default)]
    pub q: Option<u32>,
    /// Seed of the unit direction beta (default 0).
    #[serde(default)]
    pub beta_seed: Option<u64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Seed of the frozen matrix in the f4 target (default 0).
    #[serde(default)]
    pub z_seed: Option<u64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub degrees: Option<Vec<u32>>,
    #[serde(default)]
    pub coeffs: Option<Vec<f64>>,
    /// "key_beta" or "query_key".
    #[serde(default)]
    pub variable: Option<String>,
    /// "one" or "key_beta".
    #[serde(default)]
    pub weight: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::ConfigParse(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n_tokens == 0 || self.m_heads == 0 {
            return Err(Error::InvalidConfig(
                "d, n_tokens, and m_heads must all be >= 1".into(),
            ));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidConfig("seeds must be >= 1".into()));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return Err(Error::InvalidConfig(
                "n_list must be non-empty with every n >= 2".into(),
            ));
        }
        if self.n_test < 2 {
            return Err(Error::InvalidConfig("n_test must be >= 2".into()));
        }
        if self.bias_scale < 0.0 || !self.bias_scale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "bias_scale must be finite and >= 0, got {}",
                self.bias_scale
            )));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() || grid.iter().any(|&l| l < 0.0 || !l.is_finite()) {
                return Err(Error::InvalidConfig(
                    "lambda_grid must be non-empty with every entry finite and >= 0".into(),
                ));
            }
        }
        if self.match_params {
            let matched = self.m_heads * (self.d + 1);
            if let Some(m) = self.m_rfmlp {
                if m != matched {
                    return Err(Error::InvalidConfig(format!(
                        "match_params requires m_rfmlp = m_heads * (d + 1) = {matched}, got {m}"
                    )));
                }
            }
        } else if self.m_rfmlp == Some(0) {
            return Err(Error::InvalidConfig("m_rfmlp must be >= 1".into()));
        }
        self.resolved_models()?;
        self.target_spec()?;
        Ok(())
    }

    /// Head count of the flattened model after applying the default.
    pub fn resolved_m_rfmlp(&self) -> usize {
        self.m_rfmlp.unwrap_or(self.m_heads * (self.d + 1))
    }

    pub fn resolved_models(&self) -> Result<Vec<ModelKind>> {
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("models must be non-empty".into()));
        }
        let mut kinds = Vec::with_capacity(self.models.len());
        for name in &self.models {
            let kind = ModelKind::parse(name)?;
            if kinds.contains(&kind) {
                return Err(Error::InvalidConfig(format!("duplicate model {name}")));
            }
            kinds.push(kind);
        }
        Ok(kinds)
    }

    pub fn resolved_lambda_grid(&self) -> Vec<f64> {
        self.lambda_grid.clone().unwrap_or_else(default_lambda_grid)
    }

    /// Materializes the target: the direction beta is drawn from its own
    /// seed stream, and the f4 matrix from its z seed, so the same config
    /// always denotes the same function.
    pub fn target_spec(&self) -> Result<TargetSpec> {
        let t = &self.target;
        let beta_stream = RngStream::new(t.beta_seed.unwrap_or(0)).derive("target-beta", 0);
        let beta = sample_sphere(beta_stream, self.d)?;
        let reject_unused = |used: &[(&str, bool)]| -> Result<()> {
            for (name, present) in used {
                if *present {
                    return Err(Error::InvalidConfig(format!(
                        "target parameter `{name}` does not apply to kind `{}`",
                        t.kind
                    )));
                }
            }
            Ok(())
        };
        match t.kind.as_str() {
            "f1" => {
                reject_unused(&[
                    ("q", t.q.is_some()),
                    ("gamma", t.gamma.is_some()),
                    ("z_seed", t.z_seed.is_some()),
                    ("eta", t.eta.is_some()),
                    ("degrees", t.degrees.is_some()),
                    ("coeffs", t.coeffs.is_some()),
                    ("variable", t.variable.is_some()),
                    ("weight", t.weight.is_some()),
                ])?;
                let p = t.p.ok_or_else(|| {
                    Error::InvalidConfig("target kind f1 needs parameter p".into())
                })?;
                TargetSpec::f1(p, beta)
            }
            "f2" => {
                reject_unused(&[
                    ("p", t.p.is_some()),
                    ("gamma", t.gamma.is_some()),
                    ("z_seed", t.z_seed.is_some()),
                    ("eta", t.eta.is_some()),
                    ("degrees", t.degrees.is_some()),
                    ("coeffs", t.coeffs.is_some()),
                    ("variable", t.variable.is_some()),
                    ("weight", t.weight.is_some()),
                ])?;
                let q = t.q.ok_or_else(|| {
                    Error::InvalidConfig("target kind f2 needs parameter q".into())
                })?;
                TargetSpec::f2(q, beta)
            }
            "f3" => {
                reject_unused(&[
                    ("q", t.q.is_some()),
                    ("gamma", t.gamma.is_some()),
                    ("z_seed", t.z_seed.is_some()),
                    ("eta", t.eta.is_some()),
                    ("degrees", t.degrees.is_some()),
                    ("coeffs", t.coeffs.is_some()),
                    ("variable", t.variable.is_some()),
                    ("weight", t.weight.is_some()),
                ])?;
                let p = t.p.ok_or_else(|| {
                    Error::InvalidConfig("target kind f3 needs parameter p".into())
                })?;
                TargetSpec::f3(p, beta)
            }
            "f4" => {
                reject_unused(&[
                    ("p", t.p.is_some()),
                    ("q", t.q.is_some()),
                    ("eta", t.eta.is_some()),
                    ("degrees", t.degrees.is_some()),
                    ("coeffs", t.coeffs.is_some()),
                    ("variable", t.variable.is_some()),
                    ("weight", t.weight.is_some()),
                ])?;
                let gamma = t.gamma.ok_or_else(|| {
                    Error::InvalidConfig("target kind f4 needs parameter gamma".into())
                })?;
                TargetSpec::f4(beta, gamma, t.z_seed.unwrap_or(0))
            }
            "psi" => {
                reject_unused(&[
                    ("p", t.p.is_some()),
                    ("q", t.q.is_some()),
                    ("gamma", t.gamma.is_some()),
                    ("z_seed", t.z_seed.is_some()),
                    ("degrees", t.degrees.is_some()),
                    ("coeffs", t.coeffs.is_some()),
                    ("variable", t.variable.is_some()),
                    ("weight", t.weight.is_some()),
                ])?;
                let eta = t.eta.ok_or_else(|| {
                    Error::InvalidConfig("target kind psi needs parameter eta".into())
                })?;
                TargetSpec::psi_series(eta, beta)
            }
            "series" => {
                reject_unused(&[
                    ("p", t.p.is_some()),
                    ("q", t.q.is_some()),
                    ("gamma", t.gamma.is_some()),
                    ("z_seed", t.z_seed.is_some()),
                    ("eta", t.eta.is_some()),
                ])?;
                let degrees = t.degrees.clone().ok_or_else(|| {
                    Error::InvalidConfig("target kind series needs degrees".into())
                })?;
                let coeffs = t.coeffs.clone().ok_or_else(|| {
                    Error::InvalidConfig("target kind series needs coeffs".into())
                })?;
                let variable = match t.variable.as_deref() {
                    Some("key_beta") => PolyVariable::KeyBeta,
                    Some("query_key") => PolyVariable::QueryKey,
                    Some(other) => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown series variable `{other}` (expected key_beta or query_key)"
                        )))
                    }
                    None => {
                        return Err(Error::InvalidConfig(
                            "target kind series needs variable".into(),
                        ))
                    }
                };
                let weight = match t.weight.as_deref() {
                    Some("one") | None => PolyWeight::One,
                    Some("key_beta") => PolyWeight::KeyBeta,
                    Some(other) => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown series weight `{other}` (expected one or key_beta)"
                        )))
                    }
                };
                TargetSpec::poly_series(degrees, coeffs, variable, weight, beta)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown target kind `{other}` (expected f1, f2, f3, f4, psi, or series)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        d = 4
        n_tokens = 3
        m_heads = 10
        [target]
        kind = "f1"
        p = 2
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.resolved_m_rfmlp(), 50);
        assert_eq!(cfg.bias_scale, 4.0);
        assert_eq!(cfg.n_list, vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);
        assert_eq!(cfg.n_test, 1000);
        assert_eq!(cfg.seeds, 5);
        assert_eq!(cfg.resolved_lambda_grid().len(), 17);
        assert_eq!(
            cfg.resolved_models().unwrap(),
            vec![ModelKind::Rfa, ModelKind::Brfa, ModelKind::Rfmlp]
        );
        assert_eq!(cfg.target_spec().unwrap().id(), "f1_p2");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("mystery_knob = 3\n{MINIMAL}");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(Error::ConfigParse(_))
        ));
        let text = MINIMAL.replace("p = 2", "p = 2\nwobble = true");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(Error::ConfigParse(_))
        ));
    }

    #[test]
    fn foreign_target_parameters_are_rejected() {
        let text = MINIMAL.replace("p = 2", "p = 2\ngamma = 1.0");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        assert!(err.to_string().contains("gamma"));
    }

    #[test]
    fn missing_required_target_parameter_is_rejected() {
        let text = MINIMAL.replace("p = 2", "");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn parameter_matching_is_enforced() {
        let text = format!("m_rfmlp = 49\n{MINIMAL}");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(Error::InvalidConfig(_))
        ));
        let text = format!("m_rfmlp = 49\nmatch_params = false\n{MINIMAL}");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.resolved_m_rfmlp(), 49);
    }

    #[test]
    fn model_lists_are_validated() {
        let text = format!("models = [\"rfa\", \"rfa\"]\n{MINIMAL}");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("models = [\"transformer\"]\n{MINIMAL}");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("models = [\"brfa\"]\n{MINIMAL}");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.resolved_models().unwrap(), vec![ModelKind::Brfa]);
    }

    #[test]
    fn beta_is_deterministic_given_seed() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let (Ok(TargetSpec::AvgKeyPoly { beta: a, .. }), Ok(TargetSpec::AvgKeyPoly { beta: b, .. })) =
            (cfg.target_spec(), cfg.target_spec())
        else {
            panic!("wrong variant");
        };
        assert_eq!(a, b);
        let text = MINIMAL.replace("p = 2", "p = 2\nbeta_seed = 5");
        let cfg2 = ExperimentConfig::from_toml_str(&text).unwrap();
        let Ok(TargetSpec::AvgKeyPoly { beta: c, .. }) = cfg2.target_spec() else {
            panic!("wrong variant");
        };
        assert_ne!(a, c);
    }

    #[test]
    fn series_target_round_trips() {
        let text = r#"
            d = 3
            n_tokens = 2
            m_heads = 4
            [target]
            kind = "series"
            degrees = [2, 4]
            coeffs = [1.0, -0.25]
            variable = "query_key"
            weight = "key_beta"
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.target_spec().unwrap().id(), "series_k2");
    }

    #[test]
    fn psi_target_round_trips() {
        let text = r#"
            d = 3
            n_tokens = 2
            m_heads = 4
            [target]
            kind = "psi"
            eta = 4.0
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.target_spec().unwrap().id(), "series_k20");
    }

    #[test]
    fn numeric_bounds_are_enforced() {
        for bad in [
            MINIMAL.replace("d = 4", "d = 0"),
            MINIMAL.replace("m_heads = 10", "m_heads = 0"),
            format!("seeds = 0\n{MINIMAL}"),
            format!("n_test = 1\n{MINIMAL}"),
            format!("n_list = []\n{MINIMAL}"),
            format!("lambda_grid = [-0.5]\n{MINIMAL}"),
            format!("bias_scale = -1.0\n{MINIMAL}"),
        ] {
            assert!(
                ExperimentConfig::from_toml_str(&bad).is_err(),
                "accepted: {bad}"
            );
        }
    }
}
