//! File formats: dataset CSV, report JSON, table CSV, and the coefficient
//! distribution JSON. Reports are JSON and tables are CSV; nothing binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bipstls::ensemble::EnsembleDistribution;
use bipstls::linalg::Matrix;
use bipstls::regression::Dataset;

use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report, Table};

/// Writes a dataset as CSV: response columns `y0..y{d-1}` first, covariate
/// columns after (named `x{j}` unless the dataset carries names).
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = Vec::with_capacity(data.d() + data.p());
    for k in 0..data.d() {
        header.push(format!("y{k}"));
    }
    for j in 0..data.p() {
        match &data.column_names {
            Some(names) => header.push(names[j].clone()),
            None => header.push(format!("x{j}")),
        }
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..data.n() {
        record.clear();
        for k in 0..data.d() {
            record.push(data.responses.get(i, k).to_string());
        }
        for j in 0..data.p() {
            record.push(data.covariates.get(i, j).to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`]: the leading run of
/// `y<digits>` headers is the response block.
pub fn read_dataset_csv(path: &Path) -> CliResult<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> =
        r.headers()?.iter().map(|h| h.to_string()).collect();
    let is_response = |h: &str| {
        h.len() > 1 && h.starts_with('y') && h[1..].chars().all(|c| c.is_ascii_digit())
    };
    let d = header.iter().take_while(|h| is_response(h)).count();
    if d == 0 || d == header.len() {
        return Err(CliError::Run(format!(
            "{}: expected y0.. response columns followed by covariates",
            path.display()
        )));
    }
    let p = header.len() - d;
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut n = 0;
    for record in r.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(CliError::Run(format!("{}: ragged row", path.display())));
        }
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|e| CliError::Run(format!("{}: bad number {field:?}: {e}", path.display())))?;
            if k < d {
                y.push(v);
            } else {
                x.push(v);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Run(format!("{}: no data rows", path.display())));
    }
    let default_names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let names: Vec<String> = header[d..].to_vec();
    let column_names = if names == default_names { None } else { Some(names) };
    let covariates = Matrix::from_vec(n, p, x)?;
    let responses = Matrix::from_vec(n, d, y)?;
    Ok(Dataset::new(covariates, responses, column_names)?)
}

pub fn write_report_json(path: &Path, report: &Report) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_report_json(path: &Path) -> CliResult<Report> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_table_csv(path: &Path, table: &Table) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

/// Flat metric rows: any table with `value` column contributes one row per
/// record, keyed by the table name plus its remaining key columns. Columns
/// named `index` or `set` land in `index_or_set`.
pub fn metrics_table(report: &Report) -> Table {
    let mut out = Table::new(&["metric", "index_or_set", "value", "n_trials", "config_hash"]);
    for (name, table) in &report.tables {
        let Some(value_col) = table.column_index("value") else { continue };
        let n_trials_col = table.column_index("n_trials");
        let index_col = table.column_index("index").or_else(|| table.column_index("set"));
        for row in &table.rows {
            let mut key = name.clone();
            for (c, cell) in table.columns.iter().zip(row.iter()) {
                if c == "value" || c == "n_trials" || c == "index" || c == "set" {
                    continue;
                }
                key.push_str(&format!(".{c}={}", cell.render()));
            }
            let index_or_set = index_col.map(|i| row[i].render()).unwrap_or_default();
            let n_trials = n_trials_col.map(|i| row[i].clone()).unwrap_or(Cell::Null);
            out.push(vec![
                Cell::Text(key),
                Cell::Text(index_or_set),
                row[value_col].clone(),
                n_trials,
                Cell::Text(report.config_hash.clone()),
            ]);
        }
    }
    out
}

/// Writes `report.json`, one CSV per table, and the flat `metrics.csv`.
/// Returns the paths written.
pub fn write_outputs(dir: &Path, report: &Report) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let report_path = dir.join("report.json");
    write_report_json(&report_path, report)?;
    written.push(report_path);
    for (name, table) in &report.tables {
        let path = dir.join(format!("{name}.csv"));
        write_table_csv(&path, table)?;
        written.push(path);
    }
    let metrics = metrics_table(report);
    if !metrics.rows.is_empty() {
        let path = dir.join("metrics.csv");
        write_table_csv(&path, &metrics)?;
        written.push(path);
    }
    Ok(written)
}

/// Serializable form of a coefficient distribution; quantile keys are the
/// levels rendered as strings so the JSON is self-describing.
#[derive(serde::Serialize, serde::Deserialize)]
pub struct DistributionFile {
    pub support: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub quantiles: BTreeMap<String, Vec<f64>>,
    pub mu_star: f64,
    pub sigma_star_sq: f64,
    pub s_hat: Option<f64>,
    pub replicate_count: usize,
    pub excluded_replicates: usize,
}

impl From<&EnsembleDistribution> for DistributionFile {
    fn from(d: &EnsembleDistribution) -> Self {
        DistributionFile {
            support: d.support.clone(),
            mean: d.mean.clone(),
            std: d.std.clone(),
            quantiles: d
                .quantiles
                .iter()
                .map(|(level, q)| (level.to_string(), q.clone()))
                .collect(),
            mu_star: d.mu_star,
            sigma_star_sq: d.sigma_star_sq,
            s_hat: d.s_hat,
            replicate_count: d.replicate_count,
            excluded_replicates: d.excluded_replicates,
        }
    }
}

pub fn write_distribution_json(path: &Path, dist: &EnsembleDistribution) -> CliResult<()> {
    let file = DistributionFile::from(dist);
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(path, text + "\n")?;
    Ok(())
}
