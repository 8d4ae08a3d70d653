//! `vnm`: calibrate utility tables, check preference axioms, run the
//! counterexample demos, and build outcome-space exhaustions.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vnm::cli::{self, AxiomName, RunConfig};
use vnm::lottery::DensityKind;
use vnm::preference::OracleSpec;
use vnm::utility::UtilitySpec;
use vnm::VnmError;

#[derive(Parser)]
#[command(name = "vnm", version, about = "Lottery algebra, utility calibration, and axiom checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a utility table from a preference oracle by standard gambles.
    Calibrate {
        /// Oracle config: inline JSON, a path to a JSON file, or a catalog name.
        #[arg(long)]
        oracle: String,
        /// Grid spec: lin:N:[a,b] or log:N:[a,b].
        #[arg(long)]
        grid: String,
        /// Bisection interval tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the table report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an axiom checker or falsifier against an oracle.
    Check {
        /// Oracle config: inline JSON, a path to a JSON file, or a catalog name.
        #[arg(long)]
        oracle: String,
        /// weak-order | independence | segmental | weakstar | sequential | mixture
        #[arg(long)]
        axiom: String,
        /// Trial budget (per level for sequential).
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Seed for the randomized generators (mandatory: runs must replay).
        #[arg(long)]
        seed: u64,
        /// Scan resolution for the segmental check.
        #[arg(long, default_value_t = 10_000)]
        grid_n: u32,
        /// Exhaustion depth for the sequential check.
        #[arg(long, default_value_t = 10)]
        levels: u32,
        /// Force the trivial whole-space exhaustion.
        #[arg(long, default_value_t = false)]
        trivial_exhaustion: bool,
        /// Sample size for the weak-order check.
        #[arg(long, default_value_t = 20)]
        sample_size: usize,
        /// Write the report to this path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Counterexample demonstrations (these succeed by exiting 2).
    #[command(subcommand)]
    Demo(DemoCommand),
    /// Build and verify a preimage-band exhaustion.
    Exhaust {
        /// Utility config: inline JSON, a path, or a bare catalog name.
        #[arg(long)]
        utility: String,
        /// Number of bands above level zero.
        #[arg(long, default_value_t = 10)]
        levels: u32,
        /// Verify the structural conditions on a probe grid.
        #[arg(long, default_value_t = false)]
        verify: bool,
        /// Probe count for the sampled coverage check.
        #[arg(long, default_value_t = 10_000)]
        probes: u32,
        /// Write the report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Escaping-mass net: an unbounded utility breaks weak*-closedness.
    Lemma5(EscapingNetArgs),
    /// Jump net: a discontinuous utility breaks weak*-closedness.
    Semicontinuity {
        /// Jump location of the step utility.
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        /// Gap below the jump height that the blend must stay inside.
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Number of approach points.
        #[arg(long, default_value_t = 1000)]
        steps: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discretization of a density measure converges in the Dudley score.
    Density {
        /// uniform | triangular
        #[arg(long, default_value = "triangular")]
        density: String,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Node counts to evaluate.
        #[arg(long, value_delimiter = ',', default_value = "4,16,64,256")]
        k: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EscapingNetArgs {
    /// Utility config: inline JSON, a path, or a bare catalog name.
    #[arg(long, default_value = "log")]
    utility: String,
    /// Anchor outcome (the net collapses onto it).
    #[arg(long, default_value_t = 1.0)]
    xstar: f64,
    /// Reference outcome that every net element must beat.
    #[arg(long, default_value_t = std::f64::consts::E)]
    x0: f64,
    /// Largest net level.
    #[arg(long, default_value_t = 30)]
    n: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Inline JSON, a file path, or a bare catalog name.
fn read_config_text(arg: &str) -> Result<String, VnmError> {
    let trimmed = arg.trim();
    if trimmed.starts_with('{') {
        return Ok(trimmed.to_string());
    }
    if trimmed.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Ok(format!("{{\"utility\":\"{trimmed}\"}}"));
    }
    std::fs::read_to_string(trimmed)
        .map_err(|e| VnmError::Config(format!("cannot read config {trimmed:?}: {e}")))
}

fn parse_oracle_arg(arg: &str) -> Result<OracleSpec, VnmError> {
    let text = read_config_text(arg)?;
    serde_json::from_str(&text).map_err(|e| VnmError::Config(format!("bad oracle config: {e}")))
}

fn parse_utility_arg(arg: &str) -> Result<UtilitySpec, VnmError> {
    let text = read_config_text(arg)?;
    serde_json::from_str(&text).map_err(|e| VnmError::Config(format!("bad utility config: {e}")))
}

fn build_config(cli: Cli) -> Result<RunConfig, VnmError> {
    Ok(match cli.command {
        Command::Calibrate {
            oracle,
            grid,
            tol,
            out,
        } => RunConfig::Calibrate {
            oracle: parse_oracle_arg(&oracle)?,
            grid,
            tol,
            out,
        },
        Command::Check {
            oracle,
            axiom,
            trials,
            seed,
            grid_n,
            levels,
            trivial_exhaustion,
            sample_size,
            report,
        } => RunConfig::Check {
            oracle: parse_oracle_arg(&oracle)?,
            axiom: axiom.parse::<AxiomName>()?,
            trials,
            seed,
            grid_n,
            levels,
            trivial_exhaustion,
            sample_size,
            report,
        },
        Command::Demo(DemoCommand::Lemma5(args)) => RunConfig::DemoLemma5 {
            utility: parse_utility_arg(&args.utility)?,
            xstar: args.xstar,
            x0: args.x0,
            n: args.n,
            out: args.out,
        },
        Command::Demo(DemoCommand::Semicontinuity {
            threshold,
            eps,
            steps,
            out,
        }) => RunConfig::DemoSemicontinuity {
            threshold,
            eps,
            steps,
            out,
        },
        Command::Demo(DemoCommand::Density {
            density,
            a,
            b,
            k,
            out,
        }) => {
            let density = match density.as_str() {
                "uniform" => DensityKind::Uniform,
                "triangular" => DensityKind::Triangular,
                other => {
                    return Err(VnmError::Config(format!(
                        "unknown density {other:?}; expected uniform | triangular"
                    )))
                }
            };
            RunConfig::DemoDensity {
                density,
                a,
                b,
                ks: k,
                out,
            }
        }
        Command::Exhaust {
            utility,
            levels,
            verify,
            probes,
            out,
        } => RunConfig::Exhaust {
            utility: parse_utility_arg(&utility)?,
            levels,
            verify,
            probes,
            out,
        },
    })
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("VNM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n >= 1 {
                // a failed (repeated) initialization only means a pool exists
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
    // usage errors exit 1; code 2 is reserved for falsified axioms
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                cli::EXIT_CONFIG_ERROR as u8
            } else {
                0 // --help and --version
            };
            return ExitCode::from(code);
        }
    };
    let config = match build_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(cli::EXIT_CONFIG_ERROR as u8);
        }
    };
    let outcome = cli::run(&config);
    println!("{}", cli::pretty(&outcome.report));
    ExitCode::from(outcome.exit_code as u8)
}
