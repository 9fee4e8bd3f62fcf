//! Sweep orchestration: runs every (model, sample size, seed) cell of an
//! experiment, gathers rows in a deterministic order, aggregates across
//! seeds, and round-trips results through CSV.

use std::time::Instant;

use ndarray::Array1;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::features::{featurize, sample_weights, ModelKind};
use crate::learner::{select_lambda, standardize};
use crate::par;
use crate::rng::{sample_batch, RngStream};
use crate::targets::eval_target;

/// One fitted cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: ModelKind,
    pub target: String,
    pub n: usize,
    pub seed: u64,
    pub lambda: f64,
    pub train_mse: f64,
    pub test_mse: f64,
    pub k1_hat: f64,
    pub k2_hat: f64,
    pub wall_time_s: f64,
}

/// A cell whose pipeline failed; kept out of the CSV but reported.
#[derive(Debug, Clone)]
pub struct FailedCell {
    pub model: ModelKind,
    pub n: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<FailedCell>,
}

/// Per-(model, target, n) summary across seeds.
#[derive(Debug, Clone)]
pub struct AggregateCell {
    pub model: ModelKind,
    pub target: String,
    pub n: usize,
    pub seeds: usize,
    pub mean_test_mse: f64,
    /// Sample standard deviation over seeds divided by sqrt(#seeds).
    pub stderr: f64,
    /// True when only one seed contributed, so the stderr of 0 is not a
    /// claim of zero variance.
    pub single_seed: bool,
}

pub const CSV_HEADER: &str =
    "model,target,n,seed,lambda,train_mse,test_mse,k1_hat,k2_hat,wall_time_s";

/// Runs one (model, n, seed) cell: derive streams, sample data, evaluate
/// the target, standardize labels with training statistics, featurize,
/// and select the ridge parameter on the test set.
pub fn run_cell(cfg: &ExperimentConfig, model: ModelKind, n: usize, seed: u64) -> Result<SweepRow> {
    let started = Instant::now();
    let target = cfg.target_spec()?;
    let root = RngStream::new(cfg.root_seed);

    let train_inputs = sample_batch(
        root.derive2("train-data", n as u64, seed),
        n,
        cfg.d,
        cfg.n_tokens,
    )?;
    let test_inputs = sample_batch(
        root.derive("test-data", seed),
        cfg.n_test,
        cfg.d,
        cfg.n_tokens,
    )?;

    let labels_of = |inputs: &[crate::rng::TokenSequence]| -> Result<Array1<f64>> {
        par::map_indexed(inputs.len(), |i| eval_target(&target, &inputs[i]))
            .into_iter()
            .collect::<Result<Vec<f64>>>()
            .map(Array1::from)
    };
    let y_train_raw = labels_of(&train_inputs)?;
    let y_test_raw = labels_of(&test_inputs)?;
    let (y_train, mean, std) = standardize(y_train_raw.view())?;
    let y_test = y_test_raw.mapv(|y| (y - mean) / std);

    let m_heads = match model {
        ModelKind::Rfmlp => cfg.resolved_m_rfmlp(),
        ModelKind::Rfa | ModelKind::Brfa => cfg.m_heads,
    };
    let bias = if model == ModelKind::Brfa {
        cfg.bias_scale
    } else {
        0.0
    };
    let weights = sample_weights(
        root.derive2("weights", model as u64, seed),
        model,
        m_heads,
        cfg.d,
        cfg.n_tokens,
        bias,
    )?;
    let phi_train = featurize(&weights, &train_inputs)?;
    let phi_test = featurize(&weights, &test_inputs)?;

    let fit = select_lambda(
        phi_train.view(),
        y_train.view(),
        phi_test.view(),
        y_test.view(),
        &cfg.resolved_lambda_grid(),
        model,
        cfg.d,
    )?;
    let wall_time_s = if cfg.zero_wall_time {
        0.0
    } else {
        started.elapsed().as_secs_f64()
    };
    Ok(SweepRow {
        model,
        target: target.id(),
        n,
        seed,
        lambda: fit.lambda,
        train_mse: fit.train_error,
        test_mse: fit.test_error,
        k1_hat: fit.k1_hat,
        k2_hat: fit.k2_hat,
        wall_time_s,
    })
}

/// Runs every cell of the configured sweep. A failing cell is recorded
/// and skipped; the sweep continues. Rows come back sorted by
/// (model, n, seed) regardless of the configured model order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let models = cfg.resolved_models()?;
    let mut result = SweepResult::default();
    for &model in &models {
        for &n in &cfg.n_list {
            for seed in 0..cfg.seeds as u64 {
                match run_cell(cfg, model, n, seed) {
                    Ok(row) => result.rows.push(row),
                    Err(e) => result.failures.push(FailedCell {
                        model,
                        n,
                        seed,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }
    result
        .rows
        .sort_by(|a, b| (a.model, a.n, a.seed).cmp(&(b.model, b.n, b.seed)));
    Ok(result)
}

/// Aggregates test error across seeds for each (model, target, n) cell.
pub fn aggregate(rows: &[SweepRow]) -> Result<Vec<AggregateCell>> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no rows to aggregate".into()));
    }
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.model, &a.target, a.n, a.seed).cmp(&(b.model, &b.target, b.n, b.seed))
    });
    let mut cells = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let key = (&sorted[start].model, &sorted[start].target, sorted[start].n);
        let mut end = start + 1;
        while end < sorted.len()
            && (&sorted[end].model, &sorted[end].target, sorted[end].n) == key
        {
            end += 1;
        }
        let values: Vec<f64> = sorted[start..end].iter().map(|r| r.test_mse).collect();
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let stderr = if values.len() == 1 {
            0.0
        } else {
            let var =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        };
        cells.push(AggregateCell {
            model: sorted[start].model,
            target: sorted[start].target.clone(),
            n: sorted[start].n,
            seeds: values.len(),
            mean_test_mse: mean,
            stderr,
            single_seed: values.len() == 1,
        });
        start = end;
    }
    Ok(cells)
}

/// Renders rows as CSV. Floats use the shortest representation that
/// parses back to the identical value, so emit/parse round-trips exactly.
pub fn emit_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.model.as_str(),
            r.target,
            r.n,
            r.seed,
            r.lambda,
            r.train_mse,
            r.test_mse,
            r.k1_hat,
            r.k2_hat,
            r.wall_time_s
        ));
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(Error::ConfigParse(format!(
                "expected header `{CSV_HEADER}`, found {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::ConfigParse(format!(
                "row {}: expected 10 fields, found {}",
                idx + 2,
                fields.len()
            )));
        }
        let float = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::ConfigParse(format!("row {}: bad {what} `{s}`", idx + 2))
            })
        };
        rows.push(SweepRow {
            model: ModelKind::parse(fields[0])?,
            target: fields[1].to_string(),
            n: fields[2]
                .parse()
                .map_err(|_| Error::ConfigParse(format!("row {}: bad n `{}`", idx + 2, fields[2])))?,
            seed: fields[3].parse().map_err(|_| {
                Error::ConfigParse(format!("row {}: bad seed `{}`", idx + 2, fields[3]))
            })?,
            lambda: float(fields[4], "lambda")?,
            train_mse: float(fields[5], "train_mse")?,
            test_mse: float(fields[6], "test_mse")?,
            k1_hat: float(fields[7], "k1_hat")?,
            k2_hat: float(fields[8], "k2_hat")?,
            wall_time_s: float(fields[9], "wall_time_s")?,
        });
    }
    Ok(rows)
}
