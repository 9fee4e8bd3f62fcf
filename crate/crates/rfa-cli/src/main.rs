//! Command-line front end. Every experiment knob is a flag that mirrors
//! a config-file key one-to-one; flags override file values. Exit codes:
//! 0 success, 1 usage error, 2 numerical or runtime failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use rfa_core::config::ExperimentConfig;
use rfa_core::error::{Error, Result};
use rfa_core::features::ModelKind;
use rfa_core::kernels::{arccos_relu_kernel, brfa_kernel, mc_kernel, rfa_kernel, KernelSpec};
use rfa_core::par::run_with_threads;
use rfa_core::plot::render_plot;
use rfa_core::rng::{sample_batch, sample_sequence, RngStream, TokenSequence};
use rfa_core::special::factorial;
use rfa_core::sweep::{aggregate, emit_csv, parse_csv, run_cell, run_sweep, AggregateCell};
use rfa_core::targets::{
    complexity_brfa, complexity_rfa, complexity_rfmlp, eval_target, TargetSpec,
};

#[derive(Parser)]
#[command(
    name = "rfa",
    version,
    about = "Random-feature attention lab: kernels, complexity measures, and learning-curve sweeps"
)]
struct Cli {
    /// Cap the number of worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample token sequences with target labels and write them as CSV.
    GenData(GenDataArgs),
    /// Fit one (model, n, seed) cell and print its result row.
    Fit(FitArgs),
    /// Compare analytic kernel values against Monte-Carlo estimates.
    KernelCheck(KernelCheckArgs),
    /// Run a full sweep from a config, writing a CSV and an SVG curve.
    Sweep(SweepArgs),
    /// Re-render learning-curve SVGs from a sweep CSV.
    Plot(PlotArgs),
    /// Print the complexity measures of a catalog target.
    Complexity(ComplexityArgs),
}

/// Flags shared by config-driven subcommands. Each long flag is the
/// kebab-case spelling of the corresponding config key and overrides it.
#[derive(Args, Debug, Default)]
struct ConfigOverrides {
    /// TOML experiment config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Token dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Keys per sequence.
    #[arg(long)]
    n_tokens: Option<usize>,
    /// Heads of the attention models.
    #[arg(long)]
    m_heads: Option<usize>,
    /// Heads of the flattened model (default m_heads * (d + 1)).
    #[arg(long)]
    m_rfmlp: Option<usize>,
    /// Enforce m_rfmlp = m_heads * (d + 1).
    #[arg(long)]
    match_params: Option<bool>,
    /// Bias strength of the biased attention model.
    #[arg(long)]
    bias_scale: Option<f64>,
    /// Comma-separated training sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Test sample size.
    #[arg(long)]
    n_test: Option<usize>,
    /// Number of independent repetitions.
    #[arg(long)]
    seeds: Option<usize>,
    /// Comma-separated subset of rfa,brfa,rfmlp.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated ridge penalties.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Root seed of every derived random stream.
    #[arg(long)]
    root_seed: Option<u64>,
    /// Write 0.0 wall time in every row for byte-comparable outputs.
    #[arg(long)]
    zero_wall_time: Option<bool>,
    /// Output directory (default: $RFA_OUT_DIR, then the working dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Target kind: f1, f2, f3, f4, psi, or series.
    #[arg(long)]
    target: Option<String>,
    /// Polynomial degree of f1 and f3.
    #[arg(long)]
    p: Option<u32>,
    /// Polynomial degree of f2.
    #[arg(long)]
    q: Option<u32>,
    /// Seed of the target direction beta.
    #[arg(long)]
    beta_seed: Option<u64>,
    /// Diagonal shift of the f4 matrix.
    #[arg(long)]
    gamma: Option<f64>,
    /// Seed of the frozen f4 matrix.
    #[arg(long)]
    z_seed: Option<u64>,
    /// Scale parameter of the psi target.
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated degrees of a series target.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<u32>>,
    /// Comma-separated coefficients of a series target.
    #[arg(long, value_delimiter = ',')]
    coeffs: Option<Vec<f64>>,
    /// Series variable: key_beta or query_key.
    #[arg(long)]
    variable: Option<String>,
    /// Series weight: one or key_beta.
    #[arg(long)]
    weight: Option<String>,
}

impl ConfigOverrides {
    /// Merges file values, subcommand defaults, and flags into a
    /// validated config. Flags win over the file; the file wins over
    /// defaults.
    fn resolve(&self, defaults: &[(&str, toml::Value)]) -> Result<ExperimentConfig> {
        let mut table = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::ConfigParse(format!("cannot read {}: {e}", path.display()))
                })?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::ConfigParse(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in defaults {
            table
                .entry(key.to_string())
                .or_insert_with(|| value.clone());
        }

        fn int(v: usize) -> Result<toml::Value> {
            i64::try_from(v)
                .map(toml::Value::Integer)
                .map_err(|_| Error::ConfigParse(format!("{v} does not fit the config format")))
        }
        fn seed(v: u64) -> Result<toml::Value> {
            i64::try_from(v)
                .map(toml::Value::Integer)
                .map_err(|_| Error::ConfigParse(format!("seed {v} does not fit the config format")))
        }

        if let Some(v) = self.d {
            table.insert("d".into(), int(v)?);
        }
        if let Some(v) = self.n_tokens {
            table.insert("n_tokens".into(), int(v)?);
        }
        if let Some(v) = self.m_heads {
            table.insert("m_heads".into(), int(v)?);
        }
        if let Some(v) = self.m_rfmlp {
            table.insert("m_rfmlp".into(), int(v)?);
        }
        if let Some(v) = self.match_params {
            table.insert("match_params".into(), v.into());
        }
        if let Some(v) = self.bias_scale {
            table.insert("bias_scale".into(), v.into());
        }
        if let Some(v) = &self.n_list {
            let list = v.iter().map(|&n| int(n)).collect::<Result<Vec<_>>>()?;
            table.insert("n_list".into(), toml::Value::Array(list));
        }
        if let Some(v) = self.n_test {
            table.insert("n_test".into(), int(v)?);
        }
        if let Some(v) = self.seeds {
            table.insert("seeds".into(), int(v)?);
        }
        if let Some(v) = &self.models {
            let list = v.iter().map(|m| toml::Value::String(m.clone())).collect();
            table.insert("models".into(), toml::Value::Array(list));
        }
        if let Some(v) = &self.lambda_grid {
            let list = v.iter().map(|&l| toml::Value::Float(l)).collect();
            table.insert("lambda_grid".into(), toml::Value::Array(list));
        }
        if let Some(v) = self.root_seed {
            table.insert("root_seed".into(), seed(v)?);
        }
        if let Some(v) = self.zero_wall_time {
            table.insert("zero_wall_time".into(), v.into());
        }
        if let Some(v) = &self.out_dir {
            table.insert(
                "out_dir".into(),
                toml::Value::String(v.display().to_string()),
            );
        }

        let target = table
            .entry("target".to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let t = target.as_table_mut().ok_or_else(|| {
            Error::ConfigParse("config key `target` must be a table".into())
        })?;
        if let Some(v) = &self.target {
            t.insert("kind".into(), toml::Value::String(v.clone()));
        }
        if let Some(v) = self.p {
            t.insert("p".into(), toml::Value::Integer(v.into()));
        }
        if let Some(v) = self.q {
            t.insert("q".into(), toml::Value::Integer(v.into()));
        }
        if let Some(v) = self.beta_seed {
            t.insert("beta_seed".into(), seed(v)?);
        }
        if let Some(v) = self.gamma {
            t.insert("gamma".into(), toml::Value::Float(v));
        }
        if let Some(v) = self.z_seed {
            t.insert("z_seed".into(), seed(v)?);
        }
        if let Some(v) = self.eta {
            t.insert("eta".into(), toml::Value::Float(v));
        }
        if let Some(v) = &self.degrees {
            let list = v.iter().map(|&k| toml::Value::Integer(k.into())).collect();
            t.insert("degrees".into(), toml::Value::Array(list));
        }
        if let Some(v) = &self.coeffs {
            let list = v.iter().map(|&c| toml::Value::Float(c)).collect();
            t.insert("coeffs".into(), toml::Value::Array(list));
        }
        if let Some(v) = &self.variable {
            t.insert("variable".into(), toml::Value::String(v.clone()));
        }
        if let Some(v) = &self.weight {
            t.insert("weight".into(), toml::Value::String(v.clone()));
        }

        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Number of sequences to sample.
    #[arg(long, default_value_t = 256)]
    count: usize,
    /// Repetition seed; `gen-data --count n --seed s` reproduces the
    /// training set of the sweep cell (n, s).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (default <out_dir>/<target>_n<count>_seed<seed>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Model to fit: rfa, brfa, or rfmlp.
    #[arg(long)]
    model: String,
    /// Training sample size.
    #[arg(long)]
    n: usize,
    /// Repetition seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct KernelCheckArgs {
    /// Model whose kernel is checked: rfa, brfa, or rfmlp.
    #[arg(long)]
    model: String,
    /// Monte-Carlo heads per pair.
    #[arg(long, default_value_t = 100_000)]
    heads: usize,
    /// Number of random sequence pairs.
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    /// Seed of the pair and weight streams.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Token dimension.
    #[arg(long, default_value_t = 4)]
    d: usize,
    /// Keys per sequence.
    #[arg(long, default_value_t = 3)]
    n_tokens: usize,
    /// Bias strength of the biased attention model.
    #[arg(long, default_value_t = 4.0)]
    bias_scale: f64,
    /// Series truncation of the biased analytic kernel.
    #[arg(long, default_value_t = 40)]
    truncation: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV to aggregate and render.
    #[arg(long)]
    input: PathBuf,
    /// Output SVG path; only valid when the CSV holds a single target.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory for per-target SVGs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ComplexityArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Approximation level of the biased model's bound.
    #[arg(long = "L", default_value_t = 3)]
    level: u32,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land on stdout and succeed;
            // anything else is a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let threads = cli.threads;
    let outcome = run_with_threads(threads, || dispatch(&cli.command));
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(if err.is_usage() { 1 } else { 2 });
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::GenData(args) => cmd_gen_data(args),
        Command::Fit(args) => cmd_fit(args),
        Command::KernelCheck(args) => cmd_kernel_check(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Complexity(args) => cmd_complexity(args),
    }
}

fn resolve_out_dir(cfg_out: Option<&Path>) -> PathBuf {
    if let Some(p) = cfg_out {
        return p.to_path_buf();
    }
    match std::env::var("RFA_OUT_DIR") {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("."),
    }
}

fn guard_overwrite(paths: &[&Path], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    for path in paths {
        if path.exists() {
            return Err(Error::InvalidConfig(format!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
    }
    Ok(())
}

fn write_output(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    Ok(())
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let defaults = [
        ("d", toml::Value::Integer(8)),
        ("n_tokens", toml::Value::Integer(8)),
        ("m_heads", toml::Value::Integer(200)),
    ];
    let cfg = args.overrides.resolve(&defaults)?;
    let spec = cfg.target_spec()?;
    let path = match &args.out {
        Some(p) => p.clone(),
        None => resolve_out_dir(cfg.out_dir.as_deref()).join(format!(
            "{}_n{}_seed{}.csv",
            spec.id(),
            args.count,
            args.seed
        )),
    };
    guard_overwrite(&[&path], args.force)?;

    let stream = RngStream::new(cfg.root_seed).derive2("train-data", args.count as u64, args.seed);
    let batch = sample_batch(stream, args.count, cfg.d, cfg.n_tokens)?;

    let mut csv = String::new();
    for j in 0..cfg.d {
        let _ = write!(csv, "x0_{j},");
    }
    for i in 1..=cfg.n_tokens {
        for j in 0..cfg.d {
            let _ = write!(csv, "key{i}_{j},");
        }
    }
    csv.push_str("label\n");
    for x in &batch {
        let label = eval_target(&spec, x)?;
        for v in x.x0.iter() {
            let _ = write!(csv, "{v},");
        }
        for row in x.keys.rows() {
            for v in row.iter() {
                let _ = write!(csv, "{v},");
            }
        }
        let _ = writeln!(csv, "{label}");
    }
    write_output(&path, &csv)?;
    println!("wrote {} ({} rows)", path.display(), args.count);
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let defaults = [
        ("d", toml::Value::Integer(8)),
        ("n_tokens", toml::Value::Integer(8)),
        ("m_heads", toml::Value::Integer(200)),
    ];
    let cfg = args.overrides.resolve(&defaults)?;
    let model = ModelKind::parse(&args.model)?;
    let row = run_cell(&cfg, model, args.n, args.seed)?;
    print!("{}", emit_csv(&[row]));
    Ok(())
}

fn cmd_kernel_check(args: &KernelCheckArgs) -> Result<()> {
    let model = ModelKind::parse(&args.model)?;
    if args.pairs == 0 {
        return Err(Error::InvalidConfig("pairs must be >= 1".into()));
    }
    let analytic_spec = match model {
        ModelKind::Rfa | ModelKind::Rfmlp => KernelSpec::rfa(),
        ModelKind::Brfa => {
            let mut s = KernelSpec::brfa(args.bias_scale);
            s.series_truncation = args.truncation;
            s.validate()?;
            s
        }
    };

    let analytic_value = |x: &TokenSequence, y: &TokenSequence| -> Result<f64> {
        match model {
            ModelKind::Rfa => rfa_kernel(x, y),
            ModelKind::Brfa => brfa_kernel(x, y, &analytic_spec),
            ModelKind::Rfmlp => {
                // Flattened features have unit-variance preactivations, so
                // the infinite-width kernel is the arc-cosine form at the
                // normalized flat inner product.
                let u = x.flat().dot(&y.flat()) / (args.n_tokens as f64 + 2.0);
                arccos_relu_kernel(u)
            }
        }
    };

    println!(
        "model = {model}, heads = {}, pairs = {}, seed = {}, d = {}, n_tokens = {}",
        args.heads, args.pairs, args.seed, args.d, args.n_tokens
    );
    println!(
        "{:<5} {:<24} {:<24} {:<24} {:>8}",
        "pair", "analytic", "mc", "stderr", "z"
    );
    let mc_bias = match model {
        ModelKind::Brfa => args.bias_scale,
        _ => 0.0,
    };
    let root = RngStream::new(args.seed);
    let mut max_abs_z: f64 = 0.0;
    for t in 0..args.pairs {
        let x = sample_sequence(root.derive2("check-pair", t as u64, 0), args.d, args.n_tokens)?;
        let y = sample_sequence(root.derive2("check-pair", t as u64, 1), args.d, args.n_tokens)?;
        let analytic = analytic_value(&x, &y)?;
        let (mc, stderr) = mc_kernel(
            &x,
            &y,
            model,
            root.derive2("check-mc", t as u64, 0),
            args.heads,
            mc_bias,
        )?;
        let z = if stderr > 0.0 {
            (mc - analytic) / stderr
        } else {
            0.0
        };
        max_abs_z = max_abs_z.max(z.abs());
        println!("{t:<5} {analytic:<24} {mc:<24} {stderr:<24} {z:>8.2}");
    }
    println!("max |z| = {max_abs_z:.2}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.overrides.resolve(&[])?;
    let out_dir = resolve_out_dir(cfg.out_dir.as_deref());
    let target_id = cfg.target_spec()?.id();
    let csv_path = out_dir.join(format!("{target_id}.csv"));
    let svg_path = out_dir.join(format!("{target_id}.svg"));
    guard_overwrite(&[&csv_path, &svg_path], args.force)?;

    let result = run_sweep(&cfg)?;
    for f in &result.failures {
        eprintln!(
            "warning: cell model={} n={} seed={} failed: {}",
            f.model, f.n, f.seed, f.message
        );
    }
    if result.rows.is_empty() {
        return Err(Error::Numerical("every sweep cell failed".into()));
    }

    write_output(&csv_path, &emit_csv(&result.rows))?;
    let cells = aggregate(&result.rows)?;
    write_output(&svg_path, &render_plot(&cells)?)?;

    print_aggregate(&cells);
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn print_aggregate(cells: &[AggregateCell]) {
    println!(
        "{:<6} {:<12} {:>6} {:>5}  {:<24} {}",
        "model", "target", "n", "seeds", "mean_test_mse", "stderr"
    );
    for c in cells {
        println!(
            "{:<6} {:<12} {:>6} {:>5}  {:<24} {}",
            c.model.as_str(),
            c.target,
            c.n,
            c.seeds,
            c.mean_test_mse,
            c.stderr
        );
    }
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| {
        Error::InvalidConfig(format!("cannot read {}: {e}", args.input.display()))
    })?;
    let rows = parse_csv(&text)?;
    let cells = aggregate(&rows)?;

    let mut targets: Vec<&str> = cells.iter().map(|c| c.target.as_str()).collect();
    targets.sort_unstable();
    targets.dedup();
    let targets: Vec<String> = targets.into_iter().map(str::to_string).collect();

    if args.out.is_some() && targets.len() > 1 {
        return Err(Error::InvalidConfig(format!(
            "--out names a single file but the CSV holds {} targets; use --out-dir",
            targets.len()
        )));
    }

    let out_dir = resolve_out_dir(args.out_dir.as_deref());
    let mut outputs = Vec::new();
    for target in &targets {
        let path = match &args.out {
            Some(p) => p.clone(),
            None => out_dir.join(format!("{target}.svg")),
        };
        let subset: Vec<AggregateCell> = cells
            .iter()
            .filter(|c| &c.target == target)
            .cloned()
            .collect();
        outputs.push((path, subset));
    }
    let paths: Vec<&Path> = outputs.iter().map(|(p, _)| p.as_path()).collect();
    guard_overwrite(&paths, args.force)?;
    for (path, subset) in &outputs {
        write_output(path, &render_plot(subset)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_complexity(args: &ComplexityArgs) -> Result<()> {
    if args.level == 0 {
        return Err(Error::InvalidConfig("L must be >= 1".into()));
    }
    let defaults = [
        ("d", toml::Value::Integer(8)),
        ("n_tokens", toml::Value::Integer(8)),
        ("m_heads", toml::Value::Integer(200)),
    ];
    let cfg = args.overrides.resolve(&defaults)?;
    let spec: TargetSpec = cfg.target_spec()?;

    println!("target = {}", spec.id());
    println!("d = {}", cfg.d);
    println!("n_tokens = {}", cfg.n_tokens);
    println!("L = {}", args.level);

    let print_measure = |name: &str, value: Result<f64>| -> Result<()> {
        match value {
            Ok(v) => println!("{name} = {v}"),
            Err(Error::Unsupported(msg)) => println!("{name} = unsupported ({msg})"),
            Err(e) => return Err(e),
        }
        Ok(())
    };
    print_measure("B_RFA", complexity_rfa(&spec))?;
    print_measure("B_RFMLP", complexity_rfmlp(&spec, cfg.n_tokens))?;
    print_measure("B_BRFA", complexity_brfa(&spec, args.level).map(|(b, _)| b))?;
    let eps = 1.0 / ((args.level as f64 + 1.0).exp2() * factorial(args.level as usize + 1));
    println!("eps_L = {eps}");
    Ok(())
}
