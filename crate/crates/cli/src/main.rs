use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracflow::estimates::degiorgi_recursion_check;
use fracflow::{smoothing_exponents, Verdict};
use fracflow_cli::config::{parse_exponent_params, parse_list};
use fracflow_cli::{load, run, sweep, DriverError, RunConfig};

#[derive(Parser)]
#[command(name = "fracflow", version, about = "Solve and certify doubly nonlinear fractional p-Laplacian flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a configuration for each value of one numeric field.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate the level-set recursion with equality and compare with its closed-form bound.
    CheckRecursion {
        b: f64,
        /// Comma-separated coefficients c_i.
        c: String,
        /// Comma-separated exponents delta_i.
        delta: String,
        y0: f64,
        #[arg(long, default_value_t = 100)]
        k_max: usize,
    },
    /// Print the smoothing exponents for `m=.. p=.. s=.. d=.. [ell=..] [rho=.. psi=..] [p_tilde=..]`.
    Exponents {
        #[arg(required = true)]
        params: Vec<String>,
    },
}

fn configure_threads() {
    if let Some(n) = std::env::var("FRACFLOW_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load_config(path: &Path, out: Option<PathBuf>) -> Result<(fracflow_cli::RawConfig, PathBuf), DriverError> {
    let (mut raw, base) = load(path)?;
    if let Some(dir) = out {
        raw.set("output_dir", dir.display().to_string());
    }
    Ok((raw, base))
}

fn cmd_run(path: &Path, out: Option<PathBuf>) -> Result<ExitCode, DriverError> {
    let (raw, base) = load_config(path, out)?;
    let cfg = RunConfig::from_raw(&raw)?;
    let summary = run(&cfg, &base)?;
    for c in &summary.certificates {
        println!("{:<40} {}", c.stem, c.report.verdict);
    }
    println!("artifacts written to {}", summary.output_dir.display());
    Ok(match summary.first_failure() {
        Some(stem) => {
            eprintln!("certificate failed: {stem}");
            ExitCode::from(1)
        }
        None => ExitCode::SUCCESS,
    })
}

fn cmd_sweep(path: &Path, axis: &str, values: &str, out: Option<PathBuf>) -> Result<ExitCode, DriverError> {
    let (raw, base) = load_config(path, out)?;
    let values: Vec<String> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
    let summary = sweep(&raw, &base, axis, &values)?;
    print!("{}", summary.to_csv());
    for (stem, spread) in summary.constant_spread() {
        println!("spread {stem} = {spread:.6}");
    }
    Ok(match summary.first_failure() {
        Some((value, stem)) => {
            eprintln!("certificate failed: {stem} at {axis} = {value}");
            ExitCode::from(1)
        }
        None => ExitCode::SUCCESS,
    })
}

fn cmd_recursion(b: f64, c: &str, delta: &str, y0: f64, k_max: usize) -> Result<ExitCode, DriverError> {
    let list = |s: &str, key: &str| {
        parse_list(s).map_err(|m| DriverError::Config(fracflow_cli::ConfigError { line: None, key: Some(key.into()), message: m }))
    };
    let (c, delta) = (list(c, "c")?, list(delta, "delta")?);
    let rep = degiorgi_recursion_check(b, &c, &delta, y0, k_max).map_err(|e| DriverError::Gate(e.to_string()))?;
    println!("constant = {:e}", rep.constant);
    println!("delta_min = {}", rep.delta_min);
    println!("threshold = {:e}", rep.threshold);
    println!("hypothesis_met = {}", rep.hypothesis_met);
    println!("sufficient_condition_holds = {}", rep.sufficient_condition_holds);
    println!("worst_log_ratio = {:e}", rep.worst_log_ratio);
    if let Some((k, y, bound)) = rep.first_violation {
        println!("first_violation = k {k}, y {y:e}, bound {bound:e}");
    }
    println!("verdict = {}", rep.verdict);
    Ok(if rep.verdict == Verdict::Fail { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_exponents(params: &[String]) -> Result<ExitCode, DriverError> {
    let p = parse_exponent_params(params)?;
    let e = smoothing_exponents(p).map_err(|e| DriverError::Gate(e.to_string()))?;
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
    println!("q_s = {}", e.q_s);
    println!("alpha = {}", e.alpha);
    println!("gamma = {}", e.gamma);
    println!("theta = {}", e.theta);
    println!("beta1 = {}", e.beta1);
    println!("eta = {}", opt(e.eta));
    println!("beta2 = {}", opt(e.beta2));
    println!("gamma_psi = {}", opt(e.gamma_psi));
    println!("decay_alpha = {}", e.decay_alpha);
    println!("decay_gamma = {}", e.decay_gamma);
    println!("decay_beta = {}", e.decay_beta);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Sweep { config, axis, values, out } => cmd_sweep(&config, &axis, &values, out),
        Command::CheckRecursion { b, c, delta, y0, k_max } => cmd_recursion(b, &c, &delta, y0, k_max),
        Command::Exponents { params } => cmd_exponents(&params),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
