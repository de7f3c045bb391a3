//! File formats and commands of the `hypersmml` binary.

pub mod codefile;
pub mod error;
pub mod ingest;
pub mod jsonfmt;
pub mod svg;
pub mod verify;

use std::path::Path;

use hypersmml_core::{fit_smml, FitOptions, TruncatedDomain};

pub use codefile::CodeFile;
pub use error::{CliError, CliResult};

/// Parses `lo1,lo2,…/hi1,hi2,…`.
pub fn parse_domain(text: &str, resolution: usize) -> CliResult<TruncatedDomain> {
    let (lo, hi) = text
        .split_once('/')
        .ok_or_else(|| CliError::Usage(format!("--domain {text:?}: expected lo1,lo2/hi1,hi2")))?;
    let parse = |part: &str| -> CliResult<Vec<f64>> {
        part.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("--domain: {v:?} is not a number")))
            })
            .collect()
    };
    let (lower, upper) = (parse(lo)?, parse(hi)?);
    TruncatedDomain::from_slices(&lower, &upper, resolution)
        .map_err(|e| CliError::Usage(format!("--domain: {e}")))
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub domain: Option<String>,
    pub resolution: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

/// Fits a code and returns the JSON document.
pub fn fit_to_json(args: &FitArgs) -> CliResult<String> {
    if args.m == 0 || args.p == 0 || args.p >= args.n {
        return Err(CliError::Usage(format!(
            "need m ≥ 1 and 1 ≤ p < n (m = {}, p = {}, n = {})",
            args.m, args.p, args.n
        )));
    }
    if args.resolution == 0 || args.restarts == 0 || !(args.tol >= 0.0) {
        return Err(CliError::Usage(
            "--resolution and --restarts must be positive, --tol non-negative".into(),
        ));
    }
    let domain = match &args.domain {
        Some(text) => parse_domain(text, args.resolution)?,
        None => TruncatedDomain::default_for(args.p, args.resolution)?,
    };
    if domain.p() != args.p {
        return Err(CliError::Usage(format!(
            "--domain has {} coordinates, expected p + 1 = {}",
            domain.p() + 1,
            args.p + 1
        )));
    }
    let options = FitOptions {
        m: args.m,
        domain,
        restarts: args.restarts,
        seed: args.seed,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let report = fit_smml(&options, args.n)?;
    Ok(CodeFile::from_report(&report, args.n, args.seed)?.to_json())
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
