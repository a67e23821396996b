//! `normground`: batch driver for solves, continuation sweeps, mass curves
//! and identity verification.

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use normground::problem::RadialPreset;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;
pub const EXIT_IDENTITY: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "normground", version, about = "Radial ground states, mass curves and identity checks")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Root directory for artifacts when `--out` is not given.
    #[arg(long, global = true, env = "NORMGROUND_OUTPUT", default_value = "normground-out")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve at a single frequency λ.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
    },
    /// Trace the positive branch between two frequencies.
    Continue {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda_start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_end: Option<f64>,
        /// Run the identity suite on every node.
        #[arg(long)]
        verify: bool,
    },
    /// Least-energy curve c ↦ m(c) with kink detection.
    Masscurve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Explicit comma-separated mass grid.
        #[arg(long, value_delimiter = ',')]
        c_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        c_min: f64,
        #[arg(long, default_value_t = 4.0)]
        c_max: f64,
        /// Number of log-spaced samples between `--c-min` and `--c-max`.
        #[arg(long, default_value_t = 20)]
        c_count: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Multistart budget per sample.
        #[arg(long)]
        budget: Option<usize>,
        /// Probe spacing for one-sided difference quotients.
        #[arg(long)]
        probe: Option<f64>,
        /// Use neighbouring samples instead of probes.
        #[arg(long)]
        no_probe: bool,
    },
    /// Reload an artifact and rerun every applicable identity.
    Verify {
        artifact: PathBuf,
        /// Config whose hash the artifact must carry.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// frac_power, nls_potential, ball_hardy, appendixA or cubic_quintic.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long = "N")]
    dim: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    /// Weight h: zero, constant:V, algebraic:A for (1+r²)^{-A}, inverse_power:K, well:D.
    #[arg(long, value_parser = parse_preset)]
    weight: Option<RadialPreset>,
    /// Potential V, same syntax as `--weight`.
    #[arg(long, value_parser = parse_preset)]
    potential: Option<RadialPreset>,
    /// Grid nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Truncation radius on the whole space.
    #[arg(long = "R")]
    outer_radius: Option<f64>,
    /// Newton residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory (default: `<output-root>/<command>-<hash>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_preset(text: &str) -> Result<RadialPreset, String> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let value = || -> Result<f64, String> {
        arg.ok_or_else(|| format!("preset '{name}' needs a value, e.g. {name}:1"))?
            .parse::<f64>()
            .map_err(|e| e.to_string())
    };
    match name {
        "zero" => Ok(RadialPreset::Zero),
        "constant" => Ok(RadialPreset::Constant { value: value()? }),
        "algebraic" => Ok(RadialPreset::AlgebraicDecay { a: value()? }),
        "inverse_power" => Ok(RadialPreset::InversePower { k: value()? }),
        "well" => Ok(RadialPreset::Well { depth: value()? }),
        other => Err(format!("unknown radial preset '{other}'")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let outcome = match cli.command {
        Command::Solve { problem, lambda } => commands::solve(&cli.output_root, &problem, lambda),
        Command::Continue {
            problem,
            lambda_start,
            lambda_end,
            verify,
        } => commands::continue_branch(&cli.output_root, &problem, lambda_start, lambda_end, verify),
        Command::Masscurve {
            problem,
            c_grid,
            c_min,
            c_max,
            c_count,
            seed,
            budget,
            probe,
            no_probe,
        } => commands::masscurve(
            &cli.output_root,
            &problem,
            &commands::CurveArgs {
                c_grid,
                c_min,
                c_max,
                c_count,
                seed,
                budget,
                probe,
                no_probe,
            },
        ),
        Command::Verify { artifact, config } => commands::verify(&artifact, config.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &normground::Error) -> u8 {
    use normground::Error as E;
    match e {
        E::Degenerate(_) | E::TangentUnreliable(_) | E::Eigensolve(_) | E::NotInNehariCone(_) => EXIT_NONCONVERGENCE,
        E::Io(_) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}
