//! Tidy per-panel CSV extraction from a finished report. Every output file
//! has the same five columns (x, series, value, lo, hi); lo and hi are empty
//! unless the panel carries interval information.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report, Table};

struct PanelRow {
    x: f64,
    series: String,
    value: f64,
    lo: Option<f64>,
    hi: Option<f64>,
}

fn write_panel(path: &Path, rows: &[PanelRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "series", "value", "lo", "hi"])?;
    for r in rows {
        w.write_record([
            Cell::num(r.x).render(),
            r.series.clone(),
            Cell::num(r.value).render(),
            r.lo.map(|v| Cell::num(v).render()).unwrap_or_default(),
            r.hi.map(|v| Cell::num(v).render()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn need_table<'a>(report: &'a Report, name: &str, figure: &str) -> CliResult<&'a Table> {
    report.table(name).ok_or_else(|| {
        CliError::config(
            "figure",
            format!("{figure} needs a report with a `{name}` table; this report has none"),
        )
    })
}

fn field<'a>(record: &BTreeMap<&str, &'a Cell>, col: &str) -> CliResult<&'a Cell> {
    record.get(col).copied().ok_or_else(|| {
        CliError::config("figure", format!("report table lacks the `{col}` column this figure needs"))
    })
}

fn field_f64(record: &BTreeMap<&str, &Cell>, col: &str) -> CliResult<f64> {
    field(record, col)?
        .as_f64()
        .ok_or_else(|| CliError::Run(format!("non-numeric cell in column `{col}`")))
}

fn field_str<'a>(record: &BTreeMap<&str, &'a Cell>, col: &str) -> CliResult<&'a str> {
    field(record, col)?
        .as_str()
        .ok_or_else(|| CliError::Run(format!("non-text cell in column `{col}`")))
}

fn distinct_values(table: &Table, col: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if let Some(idx) = table.column_index(col) {
        for row in &table.rows {
            out.insert(row[idx].render());
        }
    }
    out
}

/// Writes the panel files for one figure and returns their paths.
///
/// Figure ids: `fig1a` (posterior-vs-ensemble transport distance per
/// coefficient), `fig1b` (empirical error rates with non-vacuous
/// certificates), `fig2` (identification frequency, one file per
/// model-estimator panel), `fig3`/`fig4` (robustness along the noise and
/// sparsity axes), `fig5` (transport distance against sample size),
/// `lv_dist` (coefficient interval evolution against sample size).
pub fn emit_plot_data(report: &Report, figure_id: &str, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    match figure_id {
        "fig1a" => {
            let table = need_table(report, "w2", figure_id)?;
            let multi_target = distinct_values(table, "target").len() > 1;
            let mut rows = Vec::new();
            for r in table.records() {
                let n = field(&r, "n")?.render();
                let series = if multi_target {
                    format!("t{}:n={n}", field(&r, "target")?.render())
                } else {
                    format!("n={n}")
                };
                rows.push(PanelRow {
                    x: field_f64(&r, "index")?,
                    series,
                    value: field_f64(&r, "value")?,
                    lo: None,
                    hi: None,
                });
            }
            let path = out_dir.join("fig1a.csv");
            write_panel(&path, &rows)?;
            Ok(vec![path])
        }
        "fig1b" => {
            let empirical = need_table(report, "bounds_empirical", figure_id)?;
            let theory = need_table(report, "bounds_theory", figure_id)?;
            let mut rows = Vec::new();
            for r in empirical.records() {
                let metric = field_str(&r, "metric")?;
                if metric != "efdp" && metric != "etdp" {
                    continue;
                }
                rows.push(PanelRow {
                    x: field_f64(&r, "n")?,
                    series: format!("empirical:{}:{}", field_str(&r, "estimator")?, metric),
                    value: field_f64(&r, "value")?,
                    lo: None,
                    hi: None,
                });
            }
            for r in theory.records() {
                if matches!(field(&r, "vacuous")?, Cell::Bool(true)) {
                    continue;
                }
                rows.push(PanelRow {
                    x: field_f64(&r, "n")?,
                    series: format!("bound:{}", field_str(&r, "metric")?),
                    value: field_f64(&r, "value")?,
                    lo: None,
                    hi: None,
                });
            }
            let path = out_dir.join("fig1b.csv");
            write_panel(&path, &rows)?;
            Ok(vec![path])
        }
        "fig2" => {
            let table = need_table(report, "relative_frequency", figure_id)?;
            let mut panel_order: Vec<(String, String)> = Vec::new();
            let mut panels: Vec<Vec<PanelRow>> = Vec::new();
            for r in table.records() {
                let key = (
                    field_str(&r, "model")?.to_string(),
                    field_str(&r, "estimator")?.to_string(),
                );
                let idx = match panel_order.iter().position(|k| *k == key) {
                    Some(i) => i,
                    None => {
                        panel_order.push(key.clone());
                        panels.push(Vec::new());
                        panel_order.len() - 1
                    }
                };
                panels[idx].push(PanelRow {
                    x: field_f64(&r, "n")?,
                    series: format!("x{}", field(&r, "index")?.render()),
                    value: field_f64(&r, "value")?,
                    lo: None,
                    hi: None,
                });
            }
            let mut paths = Vec::new();
            for ((model, estimator), rows) in panel_order.iter().zip(&panels) {
                let path = out_dir.join(format!("fig2_{model}_{estimator}.csv"));
                write_panel(&path, rows)?;
                paths.push(path);
            }
            Ok(paths)
        }
        "fig3" | "fig4" => {
            let table = need_table(report, "set_metrics", figure_id)?;
            let want_axis = if figure_id == "fig3" { "sigma" } else { "q" };
            let multi_n = distinct_values(table, "n").len() > 1;
            let mut rows = Vec::new();
            for r in table.records() {
                let axis = field_str(&r, "axis")?;
                if axis != want_axis {
                    return Err(CliError::config(
                        "figure",
                        format!(
                            "{figure_id} expects a robustness report along the `{want_axis}` axis, found `{axis}`"
                        ),
                    ));
                }
                let metric = field_str(&r, "metric")?;
                if metric == "excluded_replicates" {
                    continue;
                }
                let mut series = format!("{}:{}", field_str(&r, "estimator")?, metric);
                if multi_n {
                    series = format!("{series}:n={}", field(&r, "n")?.render());
                }
                rows.push(PanelRow {
                    x: field_f64(&r, "setting")?,
                    series,
                    value: field_f64(&r, "value")?,
                    lo: None,
                    hi: None,
                });
            }
            let path = out_dir.join(format!("{figure_id}.csv"));
            write_panel(&path, &rows)?;
            Ok(vec![path])
        }
        "fig5" => {
            let table = need_table(report, "lv_w2", figure_id)?;
            let mut rows = Vec::new();
            for r in table.records() {
                rows.push(PanelRow {
                    x: field_f64(&r, "n")?,
                    series: format!(
                        "t{}:x{}",
                        field(&r, "target")?.render(),
                        field(&r, "index")?.render()
                    ),
                    value: field_f64(&r, "value")?,
                    lo: None,
                    hi: None,
                });
            }
            let path = out_dir.join("fig5.csv");
            write_panel(&path, &rows)?;
            Ok(vec![path])
        }
        "lv_dist" => {
            let table = need_table(report, "lv_coefficients", figure_id)?;
            let mut rows = Vec::new();
            for r in table.records() {
                rows.push(PanelRow {
                    x: field_f64(&r, "n")?,
                    series: format!(
                        "t{}:{}",
                        field(&r, "target")?.render(),
                        field_str(&r, "name")?
                    ),
                    value: field_f64(&r, "q50")?,
                    lo: Some(field_f64(&r, "q05")?),
                    hi: Some(field_f64(&r, "q95")?),
                });
            }
            let path = out_dir.join("lv_dist.csv");
            write_panel(&path, &rows)?;
            Ok(vec![path])
        }
        other => Err(CliError::config(
            "figure",
            format!(
                "unknown figure id `{other}`; known ids: fig1a, fig1b, fig2, fig3, fig4, fig5, lv_dist"
            ),
        )),
    }
}
