//! CSV ingestion for the `suffstat` command.

use hypersmml_core::{suff_stat, DesignBasis, Error as ModelError};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Parses a numeric table. A first line with any non-numeric cell is taken
/// as a header and skipped.
pub fn read_table(text: &str, what: &str) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{what}: {e}")))?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        if line == 0 && parsed.iter().any(Option::is_none) {
            continue;
        }
        if let Some(col) = parsed.iter().position(Option::is_none) {
            return Err(CliError::Input(format!(
                "{what}: non-numeric cell {:?} at line {}, column {}",
                &record[col],
                line + 1,
                col + 1
            )));
        }
        let expected = *width.get_or_insert(parsed.len());
        if parsed.len() != expected {
            return Err(CliError::Input(format!(
                "{what}: ragged rows, line {} has {} columns but earlier rows have {expected}",
                line + 1,
                parsed.len()
            )));
        }
        rows.push(parsed.into_iter().map(Option::unwrap).collect());
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{what}: no data rows")));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct SuffStatFile {
    pub n: usize,
    pub p: usize,
    #[serde(rename = "B")]
    pub basis: Vec<Vec<f64>>,
    pub x: Vec<f64>,
}

pub fn suffstat_from_csv(design: &str, response: &str) -> CliResult<SuffStatFile> {
    let design_rows = read_table(design, "design")?;
    let response_rows = read_table(response, "response")?;
    if response_rows[0].len() != 1 {
        return Err(CliError::Input(format!(
            "response: expected one column, found {}",
            response_rows[0].len()
        )));
    }
    if design_rows.len() != response_rows.len() {
        return Err(CliError::Input(format!(
            "design has {} rows but response has {}",
            design_rows.len(),
            response_rows.len()
        )));
    }
    let (n, p) = (design_rows.len(), design_rows[0].len());
    let design = DMatrix::from_fn(n, p, |i, j| design_rows[i][j]);
    let basis = DesignBasis::new(design).map_err(|e| match e {
        ModelError::RankDeficient { .. } => CliError::Input(format!("design: {e}")),
        other => CliError::Model(other),
    })?;
    let y = DVector::from_iterator(n, response_rows.iter().map(|r| r[0]));
    let x = suff_stat(&basis, &y)?;
    let b = basis.basis();
    Ok(SuffStatFile {
        n,
        p,
        basis: (0..n).map(|i| b.row(i).iter().copied().collect()).collect(),
        x: x.as_vector().iter().copied().collect(),
    })
}
