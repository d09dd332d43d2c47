//! Deterministic output serialization: forecasts.csv, report.csv,
//! diagnostics.json, and plot-data CSVs.

use std::io::Write;
use std::path::Path;

use groupcast::diagnostics::QqPoint;
use groupcast::grouping::{AttributeSchema, SeriesKey};
use groupcast::harness::{JobOutput, Method, NodeDiagnostics};

use crate::error::CliError;

/// One CSV cell per schema attribute; unbound attributes are empty.
fn key_cells(key: &SeriesKey, schema: &AttributeSchema) -> Vec<String> {
    (0..schema.len())
        .map(|a| match key.value_for(a) {
            Some(v) => schema.values_of(a)[v].clone(),
            None => String::new(),
        })
        .collect()
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "NA".to_string()
    }
}

/// forecasts.csv: method, key columns, has_negative flag, f1..fh.
pub fn write_forecasts_csv(
    path: &Path,
    output: &JobOutput,
    schema: &AttributeSchema,
    methods: &[Method],
) -> Result<(), CliError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let h = output.report.horizon;
    let mut header = vec!["method".to_string()];
    header.extend(schema.names().map(|n| n.to_string()));
    header.push("has_negative".to_string());
    header.extend((1..=h).map(|k| format!("f{k}")));
    writeln!(file, "{}", header.join(","))?;
    for method in methods {
        let Some(matrix) = output.method_matrix(*method) else {
            continue;
        };
        for (i, key) in output.node_keys.iter().enumerate() {
            let mut cells = vec![method.to_string()];
            cells.extend(key_cells(key, schema));
            let row: Vec<f64> = (0..h).map(|j| matrix[(i, j)]).collect();
            cells.push(row.iter().any(|&v| v < 0.0).to_string());
            cells.extend(row.iter().map(|&v| fmt_value(v)));
            writeln!(file, "{}", cells.join(","))?;
        }
    }
    file.flush()?;
    Ok(())
}

/// report.csv: key columns, method, mase, rmse, horizon, fallback.
pub fn write_report_csv(
    path: &Path,
    output: &JobOutput,
    schema: &AttributeSchema,
) -> Result<(), CliError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header: Vec<String> = schema.names().map(|n| n.to_string()).collect();
    header.extend(
        ["method", "mase", "rmse", "horizon", "fallback"]
            .iter()
            .map(|s| s.to_string()),
    );
    writeln!(file, "{}", header.join(","))?;
    let key_by_label: std::collections::BTreeMap<&str, &SeriesKey> = output
        .node_labels
        .iter()
        .map(|l| l.as_str())
        .zip(output.node_keys.iter())
        .collect();
    for row in &output.report.rows {
        let key = key_by_label[row.key.as_str()];
        let mut cells = key_cells(key, schema);
        cells.push(row.method.clone());
        cells.push(row.mase.map(fmt_value).unwrap_or_else(|| "NA".into()));
        cells.push(fmt_value(row.rmse));
        cells.push(row.horizon.to_string());
        cells.push(row.fallback.to_string());
        writeln!(file, "{}", cells.join(","))?;
    }
    file.flush()?;
    Ok(())
}

#[derive(serde::Serialize)]
struct DiagnosticsDoc<'a> {
    train_weeks: usize,
    horizon: usize,
    nodes: &'a [NodeDiagnostics],
}

/// diagnostics.json: the full per-node model audit.
pub fn write_diagnostics_json(path: &Path, output: &JobOutput) -> Result<(), CliError> {
    let doc = DiagnosticsDoc {
        train_weeks: output.report.train_len,
        horizon: output.report.horizon,
        nodes: &output.diagnostics,
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, &doc)
        .map_err(|e| CliError::new(crate::error::ErrorKind::Data, e.to_string()))?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

/// acf.csv: lag, acf, pacf.
pub fn write_acf_csv(path: &Path, acf: &[f64], pacf: &[f64]) -> Result<(), CliError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "lag,acf,pacf")?;
    for (lag, (a, p)) in acf.iter().zip(pacf).enumerate() {
        writeln!(file, "{lag},{},{}", fmt_value(*a), fmt_value(*p))?;
    }
    file.flush()?;
    Ok(())
}

/// qq.csv: theoretical, sample.
pub fn write_qq_csv(path: &Path, points: &[QqPoint]) -> Result<(), CliError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "theoretical,sample")?;
    for p in points {
        writeln!(file, "{},{}", fmt_value(p.theoretical), fmt_value(p.sample))?;
    }
    file.flush()?;
    Ok(())
}
