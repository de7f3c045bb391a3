use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hypersmml_cli::svg::{self, View};
use hypersmml_cli::verify::{self, VerifyConfig};
use hypersmml_cli::{
    fit_to_json, ingest, jsonfmt, read_text, write_text, CliError, CliResult, CodeFile, FitArgs,
};

#[derive(Parser)]
#[command(
    name = "hypersmml",
    version,
    about = "SMML codes for Gaussian linear regression and their hyperbolic tessellations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Affine,
    Hyperbolic,
}

#[derive(Subcommand)]
enum Command {
    /// Run the numerical invariant suite and write a JSON report.
    Verify {
        /// TOML config; the built-in default when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an m-cell SMML code on a truncated domain.
    Fit {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Upper half-space box `lo1,lo2/hi1,hi2`.
        #[arg(long, allow_hyphen_values = true)]
        domain: Option<String>,
        #[arg(long, default_value_t = 128)]
        resolution: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a fitted code with p = 1 as SVG.
    Plot {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "hyperbolic")]
        view: ViewArg,
    },
    /// Sufficient statistic and orthonormal basis from CSV data.
    Suffstat {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        response: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("HYPERSMML_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "HYPERSMML_THREADS={value:?} is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Verify { config, out } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                    VerifyConfig::from_toml(&text)?
                }
                None => VerifyConfig::default(),
            };
            let report = verify::run(&cfg);
            write_text(&out, &jsonfmt::to_string(&report))?;
            for check in &report.checks {
                eprintln!("{:<30} {:?}", check.name, check.status);
            }
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Fit {
            m,
            n,
            p,
            domain,
            resolution,
            restarts,
            seed,
            tol,
            max_iter,
            out,
        } => {
            let args = FitArgs {
                m,
                n,
                p,
                domain,
                resolution,
                restarts,
                seed,
                tol,
                max_iter,
            };
            write_text(&out, &fit_to_json(&args)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { code, out, view } => {
            let file = CodeFile::from_json(&read_text(&code)?)?;
            let view = match view {
                ViewArg::Affine => View::Affine,
                ViewArg::Hyperbolic => View::Hyperbolic,
            };
            write_text(&out, &svg::render(&file, view)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Suffstat {
            design,
            response,
            out,
        } => {
            let file = ingest::suffstat_from_csv(&read_text(&design)?, &read_text(&response)?)?;
            write_text(&out, &jsonfmt::to_string(&file))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
