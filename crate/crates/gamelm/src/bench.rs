//! Benchmark harness: the synthetic variational-inequality comparison and the
//! dataset regression comparison, with seeded instance generation, fair shared
//! starting points, and CSV report/trace emission.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{self, DataError, Dataset, TargetColumn};
use crate::elm::{self, ElmError, TrainerConfig};
use crate::fista::{fista, FistaError};
use crate::metrics::{evaluate, kfold_split, MetricsError, MetricsReport};
use crate::operators::{make_random_vi, standard_normal, XiMode};
use crate::solver::{solve, variant_preset, SolverError, Variant};

/// Environment variable overriding the output directory.
pub const ENV_OUTPUT_DIR: &str = "GAMELM_OUT";
/// Environment variable overriding the seed list with a single seed.
pub const ENV_SEED: &str = "GAMELM_SEED";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Elm(#[from] ElmError),
    #[error(transparent)]
    Fista(#[from] FistaError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchMode {
    ViBench,
    ElmBench,
}

/// An algorithm column of the report: one of the extragradient variants or
/// the FISTA baseline (regression benchmark only).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Variant(Variant),
    Fista,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Variant(v) => v.name(),
            Algorithm::Fista => "FISTA",
        }
    }

    pub fn parse(s: &str) -> Result<Self, BenchError> {
        let token = s.trim();
        if token.eq_ignore_ascii_case("FISTA") {
            return Ok(Algorithm::Fista);
        }
        token
            .parse::<Variant>()
            .map(Algorithm::Variant)
            .map_err(|e| BenchError::Config(e.to_string()))
    }
}

/// Harness configuration shared by both benchmark modes.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub mode: BenchMode,
    /// (dimension, half-space count) instances for the VI benchmark.
    pub sizes: Vec<(usize, usize)>,
    /// Dataset files for the regression benchmark.
    pub datasets: Vec<PathBuf>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Leave the time column empty so reports are byte-reproducible.
    pub no_timing: bool,
    pub hidden_nodes: usize,
    pub lambda_reg: f64,
    pub folds: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Scale applied to the shared random starting point of each VI run;
    /// zero starts every variant at the origin.
    pub x0_scale: f64,
}

impl BenchConfig {
    pub fn new(mode: BenchMode) -> Self {
        let algorithms = match mode {
            BenchMode::ViBench => Variant::ALL.iter().copied().map(Algorithm::Variant).collect(),
            BenchMode::ElmBench => {
                let mut all: Vec<Algorithm> =
                    Variant::ALL.iter().copied().map(Algorithm::Variant).collect();
                all.push(Algorithm::Fista);
                all
            }
        };
        Self {
            mode,
            sizes: vec![(10, 5), (20, 10), (30, 15), (50, 20)],
            datasets: Vec::new(),
            algorithms,
            seeds: vec![1],
            output_dir: PathBuf::from("bench_out"),
            no_timing: false,
            hidden_nodes: 100,
            lambda_reg: 1e-3,
            folds: 5,
            tol: 1e-6,
            max_iter: 10_000,
            x0_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("no algorithms requested".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("no seeds requested".into()));
        }
        match self.mode {
            BenchMode::ViBench => {
                if self.sizes.is_empty() {
                    return Err(BenchError::Config("no instance sizes requested".into()));
                }
                if self.algorithms.iter().any(|a| matches!(a, Algorithm::Fista)) {
                    return Err(BenchError::Config(
                        "FISTA solves the regression objective only, not the VI benchmark".into(),
                    ));
                }
            }
            BenchMode::ElmBench => {
                if self.datasets.is_empty() {
                    return Err(BenchError::Config("no dataset files requested".into()));
                }
                if self.folds < 2 {
                    return Err(BenchError::Config("need at least 2 folds".into()));
                }
            }
        }
        Ok(())
    }

    /// Applies one `key = value` setting, the shared vocabulary of the config
    /// file and the command-line flags.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        match key {
            "sizes" => self.sizes = parse_sizes(value)?,
            "variants" | "algorithms" => {
                self.algorithms = split_list(value)
                    .map(Algorithm::parse)
                    .collect::<Result<_, _>>()?
            }
            "seeds" => {
                self.seeds = split_list(value)
                    .map(|s| {
                        s.parse::<u64>()
                            .map_err(|_| BenchError::Config(format!("bad seed `{s}`")))
                    })
                    .collect::<Result<_, _>>()?
            }
            "datasets" => self.datasets = split_list(value).map(PathBuf::from).collect(),
            "out" | "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "no_timing" => {
                self.no_timing = matches!(value.trim(), "1" | "true" | "yes" | "on")
            }
            "hidden_nodes" => {
                self.hidden_nodes = value
                    .trim()
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad hidden_nodes `{value}`")))?
            }
            "lambda" | "lambda_reg" => {
                self.lambda_reg = value
                    .trim()
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad lambda `{value}`")))?
            }
            "folds" => {
                self.folds = value
                    .trim()
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad folds `{value}`")))?
            }
            "tol" => {
                self.tol = value
                    .trim()
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad tol `{value}`")))?
            }
            "max_iter" => {
                self.max_iter = value
                    .trim()
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad max_iter `{value}`")))?
            }
            "x0_scale" => {
                self.x0_scale = value
                    .trim()
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad x0_scale `{value}`")))?
            }
            other => return Err(BenchError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Loads `key = value` lines from a flat config file. Section headers
    /// `[vibench]` / `[elmbench]` scope their settings to one mode; settings
    /// before any header apply to both.
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<(), BenchError> {
        let text = fs::read_to_string(path.as_ref())?;
        let own_section = match self.mode {
            BenchMode::ViBench => "vibench",
            BenchMode::ElmBench => "elmbench",
        };
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                BenchError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            if section.is_empty() || section == own_section {
                self.apply_kv(key.trim(), value.trim())?;
            }
        }
        Ok(())
    }

    /// Applies the two supported environment overrides: output directory and
    /// a single seed.
    pub fn apply_env(&mut self) -> Result<(), BenchError> {
        if let Ok(dir) = std::env::var(ENV_OUTPUT_DIR) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
        if let Ok(seed) = std::env::var(ENV_SEED) {
            if !seed.is_empty() {
                let parsed = seed
                    .parse::<u64>()
                    .map_err(|_| BenchError::Config(format!("bad {ENV_SEED} `{seed}`")))?;
                self.seeds = vec![parsed];
            }
        }
        Ok(())
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_sizes(value: &str) -> Result<Vec<(usize, usize)>, BenchError> {
    split_list(value)
        .map(|token| {
            let (n, l) = token
                .split_once(['x', 'X'])
                .ok_or_else(|| BenchError::Config(format!("bad size `{token}`, want NxL")))?;
            let n = n
                .trim()
                .parse()
                .map_err(|_| BenchError::Config(format!("bad size `{token}`")))?;
            let l = l
                .trim()
                .parse()
                .map_err(|_| BenchError::Config(format!("bad size `{token}`")))?;
            Ok((n, l))
        })
        .collect()
}

/// One report line: an algorithm run on one instance with one seed. In the
/// regression benchmark the numbers are averages over the cross-validation
/// folds and `convergence_measure` holds the final objective for FISTA rows,
/// the final residual otherwise.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub algorithm: String,
    pub instance: String,
    pub seed: u64,
    pub iterations: f64,
    pub time_s: f64,
    pub convergence_measure: f64,
    pub final_x_norm: Option<f64>,
    pub metrics: Option<MetricsReport>,
    pub converged: bool,
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Per-dataset failures that did not abort the remaining work.
    pub errors: Vec<String>,
}

impl BenchReport {
    /// Mean iteration count over all rows of one algorithm on one instance.
    pub fn mean_iterations(&self, algorithm: &str, instance: &str) -> Option<f64> {
        let counts: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.instance == instance)
            .map(|r| r.iterations)
            .collect();
        if counts.is_empty() {
            None
        } else {
            Some(counts.iter().sum::<f64>() / counts.len() as f64)
        }
    }

    /// Writes the report CSV:
    /// `variant,instance,seed,iterations,time_s,final_residual,rmse,mae,sse_sst,ssr_sst`.
    /// Metric cells stay empty for VI rows; the time cell stays empty when
    /// timing is suppressed.
    pub fn write_csv(&self, w: &mut impl Write, no_timing: bool) -> io::Result<()> {
        writeln!(
            w,
            "variant,instance,seed,iterations,time_s,final_residual,rmse,mae,sse_sst,ssr_sst"
        )?;
        for row in &self.rows {
            let time = if no_timing {
                String::new()
            } else {
                format!("{:.5}", row.time_s)
            };
            let metrics = row
                .metrics
                .as_ref()
                .map(|m| m.csv_fields())
                .unwrap_or_else(|| ",,,".to_string());
            writeln!(
                w,
                "{},{},{},{},{},{:e},{}",
                row.algorithm,
                row.instance,
                row.seed,
                format_iterations(row.iterations),
                time,
                row.convergence_measure,
                metrics
            )?;
        }
        Ok(())
    }
}

fn format_iterations(iterations: f64) -> String {
    if iterations.fract() == 0.0 {
        format!("{}", iterations as u64)
    } else {
        format!("{iterations:.1}")
    }
}

fn write_report_file(
    report: &BenchReport,
    dir: &Path,
    no_timing: bool,
) -> Result<PathBuf, BenchError> {
    fs::create_dir_all(dir)?;
    let path = dir.join("report.csv");
    let mut file = io::BufWriter::new(fs::File::create(&path)?);
    report.write_csv(&mut file, no_timing)?;
    Ok(path)
}

/// Runs every requested variant on every seeded random instance from the same
/// randomly drawn starting point, recording iterations, time, the final
/// residual and the final iterate norm, and writing per-run residual traces.
pub fn run_vi_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.mode != BenchMode::ViBench {
        return Err(BenchError::Config("config is not in VI mode".into()));
    }
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;

    let mut report = BenchReport::default();
    for &(n, l_rows) in &cfg.sizes {
        let instance = format!("N{n}L{l_rows}");
        for &seed in &cfg.seeds {
            let (op, set) = make_random_vi(n, l_rows, XiMode::Zero, seed);
            // Shared start so every variant faces the identical problem.
            let mut x0_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
            let x0 = Array1::from_shape_fn(n, |_| cfg.x0_scale * standard_normal(&mut x0_rng));
            for algorithm in &cfg.algorithms {
                let Algorithm::Variant(variant) = algorithm else {
                    unreachable!("validated above");
                };
                let solver_cfg = variant_preset(*variant)
                    .with_tol(cfg.tol)
                    .with_max_iter(cfg.max_iter);
                let result = solve(&op, &set, &x0, None, &solver_cfg)?;
                let trace_path = cfg
                    .output_dir
                    .join(format!("trace_{}_{}_{}.csv", algorithm.name(), instance, seed));
                let mut trace_file = io::BufWriter::new(fs::File::create(trace_path)?);
                result.write_trace(&mut trace_file)?;

                report.rows.push(BenchRow {
                    algorithm: algorithm.name().to_string(),
                    instance: instance.clone(),
                    seed,
                    iterations: result.iterations as f64,
                    time_s: result.elapsed,
                    convergence_measure: result.final_residual(),
                    final_x_norm: Some(result.solution.dot(&result.solution).sqrt()),
                    metrics: None,
                    converged: result.converged(),
                });
            }
        }
    }
    write_report_file(&report, &cfg.output_dir, cfg.no_timing)?;
    Ok(report)
}

struct FoldAccumulator {
    iterations: f64,
    time_s: f64,
    measure: f64,
    rmse: f64,
    mae: f64,
    sse_sst: Option<f64>,
    ssr_sst: Option<f64>,
    samples: usize,
    converged: bool,
    folds: usize,
}

impl FoldAccumulator {
    fn new() -> Self {
        Self {
            iterations: 0.0,
            time_s: 0.0,
            measure: 0.0,
            rmse: 0.0,
            mae: 0.0,
            sse_sst: Some(0.0),
            ssr_sst: Some(0.0),
            samples: 0,
            converged: true,
            folds: 0,
        }
    }

    fn push(
        &mut self,
        iterations: usize,
        time_s: f64,
        measure: f64,
        converged: bool,
        metrics: &MetricsReport,
    ) {
        self.iterations += iterations as f64;
        self.time_s += time_s;
        self.measure += measure;
        self.converged &= converged;
        self.rmse += metrics.rmse;
        self.mae += metrics.mae;
        self.sse_sst = match (self.sse_sst, metrics.sse_sst) {
            (Some(acc), Some(v)) => Some(acc + v),
            _ => None,
        };
        self.ssr_sst = match (self.ssr_sst, metrics.ssr_sst) {
            (Some(acc), Some(v)) => Some(acc + v),
            _ => None,
        };
        self.samples += metrics.n;
        self.folds += 1;
    }

    fn into_row(self, algorithm: &str, instance: &str, seed: u64) -> BenchRow {
        let k = self.folds.max(1) as f64;
        BenchRow {
            algorithm: algorithm.to_string(),
            instance: instance.to_string(),
            seed,
            iterations: self.iterations / k,
            time_s: self.time_s / k,
            convergence_measure: self.measure / k,
            final_x_norm: None,
            metrics: Some(MetricsReport {
                rmse: self.rmse / k,
                mae: self.mae / k,
                sse_sst: self.sse_sst.map(|v| v / k),
                ssr_sst: self.ssr_sst.map(|v| v / k),
                n: self.samples,
            }),
            converged: self.converged,
        }
    }
}

/// Per dataset and seed: k-fold split, per-fold unit-range scaling fitted on
/// the training part, one frozen hidden layer per seed shared by every
/// algorithm, training with each variant plus FISTA, and metrics on the
/// scaled test targets averaged over folds. A dataset that fails to load is
/// reported in `errors` and skipped; remaining datasets still run.
pub fn run_elm_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.mode != BenchMode::ElmBench {
        return Err(BenchError::Config("config is not in regression mode".into()));
    }
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;

    let mut report = BenchReport::default();
    for path in &cfg.datasets {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let dataset = match load_dataset(path) {
            Ok(ds) => ds,
            Err(e) => {
                report.errors.push(format!("{label}: {e}"));
                continue;
            }
        };
        for &seed in &cfg.seeds {
            let folds = kfold_split(dataset.n_samples(), cfg.folds, seed)?;
            // One frozen hidden layer per seed, shared across folds and
            // algorithms.
            let (w, bias) = elm::init_hidden_layer(dataset.n_features(), cfg.hidden_nodes, seed);
            let mut accumulators: Vec<FoldAccumulator> =
                cfg.algorithms.iter().map(|_| FoldAccumulator::new()).collect();

            for (train_idx, test_idx) in &folds {
                let train_raw = dataset.select(train_idx);
                let test_raw = dataset.select(test_idx);
                let (train, test, _) = data::fit_transform_minmax(&train_raw, &test_raw)?;
                let h_train = elm::hidden_output(&train.features, &w, &bias)?;
                let h_test = elm::hidden_output(&test.features, &w, &bias)?;

                for (algorithm, acc) in cfg.algorithms.iter().zip(&mut accumulators) {
                    let (beta, iterations, time_s, measure, converged) = match algorithm {
                        Algorithm::Variant(variant) => {
                            let trainer = TrainerConfig {
                                hidden_nodes: cfg.hidden_nodes,
                                lambda_reg: cfg.lambda_reg,
                                solver: variant_preset(*variant)
                                    .with_tol(cfg.tol)
                                    .with_max_iter(cfg.max_iter),
                                seed,
                                ..TrainerConfig::default()
                            };
                            let (beta, result) = elm::train(&h_train, &train.targets, &trainer)?;
                            (
                                beta,
                                result.iterations,
                                result.elapsed,
                                result.final_residual(),
                                result.converged(),
                            )
                        }
                        Algorithm::Fista => {
                            let (beta, trace) = fista(
                                &h_train,
                                &train.targets,
                                cfg.lambda_reg,
                                cfg.tol,
                                cfg.max_iter,
                            )?;
                            (
                                beta,
                                trace.iterations,
                                trace.elapsed,
                                trace.final_objective(),
                                trace.converged,
                            )
                        }
                    };
                    let predictions = h_test.dot(&beta);
                    let fold_metrics = evaluate(&test.targets, &predictions)?;
                    acc.push(iterations, time_s, measure, converged, &fold_metrics);
                }
            }

            for (algorithm, acc) in cfg.algorithms.iter().zip(accumulators) {
                report
                    .rows
                    .push(acc.into_row(algorithm.name(), &label, seed));
            }
        }
    }
    write_report_file(&report, &cfg.output_dir, cfg.no_timing)?;
    Ok(report)
}

fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let has_header = data::detect_header(path)?;
    data::load_csv(path, &TargetColumn::Last, has_header)
}
