//! Benchmark CLI with two verbs:
//!
//! ```text
//! gamelm vibench  [--config FILE] [--sizes 10x5,20x10] [--variants GAME,EM]
//!                 [--seeds 1,2,3] [--out DIR] [--no-timing]
//!                 [--tol T] [--max-iter N]
//! gamelm elmbench [--config FILE] [--datasets a.csv,b.csv] [--variants GAME,FISTA]
//!                 [--seeds 1] [--out DIR] [--no-timing] [--hidden-nodes M]
//!                 [--lambda L] [--folds K] [--tol T] [--max-iter N]
//! ```
//!
//! Precedence: built-in defaults, then the config file, then flags, then the
//! GAMELM_OUT / GAMELM_SEED environment overrides.

use std::process::ExitCode;

use gamelm::bench::{run_elm_benchmark, run_vi_benchmark, BenchConfig, BenchMode, BenchReport};

const USAGE: &str = "usage: gamelm <vibench|elmbench> [options]
options:
  --config FILE        flat key = value file with [vibench]/[elmbench] sections
  --sizes N1xL1,...    VI instance sizes (vibench)
  --datasets F1,F2     dataset CSV files (elmbench)
  --variants A,B,...   GAME, DIEM, IREM, REM, EM and (elmbench only) FISTA
  --seeds S1,S2,...    instance seeds
  --out DIR            output directory for report.csv and traces
  --no-timing          leave the time column empty (byte-reproducible reports)
  --hidden-nodes M     hidden-layer width (elmbench)
  --lambda L           L1 regularization weight (elmbench)
  --folds K            cross-validation folds (elmbench)
  --tol T              solver tolerance
  --max-iter N         solver iteration cap
environment:
  GAMELM_OUT           overrides the output directory
  GAMELM_SEED          overrides the seed list with a single seed";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            eprintln!("{USAGE}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn run(args: &[String]) -> Result<(), Failure> {
    let verb = args
        .first()
        .ok_or_else(|| Failure::Usage("missing verb".into()))?;
    let mode = match verb.as_str() {
        "vibench" => BenchMode::ViBench,
        "elmbench" => BenchMode::ElmBench,
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            return Ok(());
        }
        other => return Err(Failure::Usage(format!("unknown verb `{other}`"))),
    };

    let mut cfg = BenchConfig::new(mode);
    let flags = parse_flags(&args[1..])?;
    if let Some(path) = flags.iter().find(|(k, _)| k == "config").map(|(_, v)| v) {
        cfg.apply_file(path)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    for (key, value) in &flags {
        let mapped = match key.as_str() {
            "config" => continue,
            "sizes" => "sizes",
            "datasets" => "datasets",
            "variants" => "variants",
            "seeds" => "seeds",
            "out" => "out",
            "no-timing" => "no_timing",
            "hidden-nodes" => "hidden_nodes",
            "lambda" => "lambda",
            "folds" => "folds",
            "tol" => "tol",
            "max-iter" => "max_iter",
            other => return Err(Failure::Usage(format!("unknown flag `--{other}`"))),
        };
        cfg.apply_kv(mapped, value)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    cfg.apply_env().map_err(|e| Failure::Runtime(e.to_string()))?;

    let report = match mode {
        BenchMode::ViBench => run_vi_benchmark(&cfg),
        BenchMode::ElmBench => run_elm_benchmark(&cfg),
    }
    .map_err(|e| Failure::Runtime(e.to_string()))?;

    print_summary(&cfg, &report);
    Ok(())
}

/// Flags as (name, value) pairs; boolean flags get the value "true".
fn parse_flags(args: &[String]) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let name = arg
            .strip_prefix("--")
            .ok_or_else(|| Failure::Usage(format!("unexpected argument `{arg}`")))?;
        if name == "no-timing" {
            out.push((name.to_string(), "true".to_string()));
            i += 1;
            continue;
        }
        let value = args
            .get(i + 1)
            .ok_or_else(|| Failure::Usage(format!("flag `--{name}` needs a value")))?;
        out.push((name.to_string(), value.clone()));
        i += 2;
    }
    Ok(out)
}

fn print_summary(cfg: &BenchConfig, report: &BenchReport) {
    let mut instances: Vec<&str> = report.rows.iter().map(|r| r.instance.as_str()).collect();
    instances.dedup();
    for instance in instances {
        for algorithm in &cfg.algorithms {
            if let Some(mean) = report.mean_iterations(algorithm.name(), instance) {
                let all_converged = report
                    .rows
                    .iter()
                    .filter(|r| r.algorithm == algorithm.name() && r.instance == instance)
                    .all(|r| r.converged);
                println!(
                    "{instance:>12}  {:>5}  mean iterations {:>9.1}{}",
                    algorithm.name(),
                    mean,
                    if all_converged { "" } else { "  [not converged]" }
                );
            }
        }
    }
    for error in &report.errors {
        eprintln!("skipped: {error}");
    }
    println!(
        "report written to {}",
        cfg.output_dir.join("report.csv").display()
    );
}
