//! Subcommand implementations.

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use groupcast::acf::{acf, pacf};
use groupcast::diagnostics::qq_points;
use groupcast::grouping::{
    aggregate_records, build_structure, build_summing_matrix, GroupStructure, SeriesKey,
};
use groupcast::harness::{evaluate_job, JobOutput, JobSpec, Method};
use groupcast::reconcile::{
    bottom_up, estimate_weights, reconcile, BaseForecasts, ResidualMatrix, WeightKind, WeightSpec,
};
use groupcast::sarima::forecast as sarima_forecast;
use groupcast::selection::auto_select;
use groupcast::series::TimeSeries;
use groupcast::synthetic;
use groupcast::transform::{box_cox, inv_box_cox_value_clamped, select_lambda, BoxCoxParam};

use crate::config::JobConfig;
use crate::error::{CliError, ErrorKind};
use crate::ingest::{
    observed_bottom_keys, parse_sales_csv, schema_from_config, to_week_records, Ingested,
    WeeklyCalendar,
};
use crate::output;

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

struct LoadedData {
    structure: GroupStructure,
    records: Vec<groupcast::grouping::WeekRecord>,
    calendar: WeeklyCalendar,
    warnings: Vec<String>,
}

fn load_data(config: &JobConfig, data: &Path) -> Result<LoadedData, CliError> {
    let schema = schema_from_config(config)?;
    let ingested: Ingested = parse_sales_csv(data, &config.attribute_names())?;
    let calendar = WeeklyCalendar::resolve(config, &ingested)?;
    let records = to_week_records(&ingested, &schema, &config.attribute_names(), &calendar)?;
    let bottoms = observed_bottom_keys(&records);
    let structure = build_structure(&schema, &config.levels, &bottoms)?;
    Ok(LoadedData {
        structure,
        records,
        calendar,
        warnings: ingested.warnings,
    })
}

fn job_spec(config: &JobConfig, methods: Option<Vec<Method>>, shift: Option<f64>) -> JobSpec {
    JobSpec {
        train_len: config.split.train_weeks,
        horizon: config.split.horizon,
        period: config.seasonal_period,
        methods: methods.unwrap_or_else(|| config.methods()),
        transform: config.transform.policy,
        shift: shift.unwrap_or(config.transform.shift),
        search: config.search_config(),
    }
}

pub fn ingest_check(config_path: &Path, data_path: &Path) -> Result<(), CliError> {
    let config = JobConfig::load(config_path)?;
    let loaded = load_data(&config, data_path)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let summary = serde_json::json!({
        "records": loaded.records.len(),
        "weeks": loaded.calendar.weeks,
        "calendar_start": loaded.calendar.start.to_string(),
        "bottom_series": loaded.structure.bottom_count(),
        "nodes": loaded.structure.node_count(),
        "warnings": loaded.warnings,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(())
}

/// Parse "--node brand=b1,gender=F" ("" or "total" selects the root);
/// "," and ";" both separate bindings.
fn parse_node_key(
    spec: &str,
    structure: &GroupStructure,
) -> Result<SeriesKey, CliError> {
    let spec = spec.trim();
    if spec.is_empty() || spec == "total" {
        return Ok(SeriesKey::root());
    }
    let mut pairs = Vec::new();
    for part in spec.split([',', ';']) {
        let (name, value) = part.split_once('=').ok_or_else(|| {
            CliError::new(
                ErrorKind::Config,
                format!("bad node spec '{part}': expected attribute=value"),
            )
        })?;
        pairs.push((name.trim(), value.trim()));
    }
    let key = SeriesKey::from_pairs(&structure.schema, &pairs).map_err(CliError::from)?;
    if structure.node_index(&key).is_none() {
        return Err(CliError::new(
            ErrorKind::Data,
            format!("node '{spec}' is not part of the grouped structure"),
        ));
    }
    Ok(key)
}

fn node_series(
    loaded: &LoadedData,
    config: &JobConfig,
    key: &SeriesKey,
) -> Result<TimeSeries, CliError> {
    let series = aggregate_records(
        &loaded.records,
        &loaded.structure,
        loaded.calendar.weeks,
        config.seasonal_period,
    )?;
    Ok(series.get(key).expect("validated node").clone())
}

struct SingleModel {
    search: groupcast::selection::SearchResult,
    working: TimeSeries,
    lambda: Option<BoxCoxParam>,
    train: TimeSeries,
}

fn fit_single(
    config: &JobConfig,
    loaded: &LoadedData,
    key: &SeriesKey,
    shift: Option<f64>,
) -> Result<SingleModel, CliError> {
    let full = node_series(loaded, config, key)?;
    let train = full.head(config.split.train_weeks.min(full.len()))?;
    let shift = shift.unwrap_or(config.transform.shift);
    let shifted = if shift != 0.0 {
        train.with_values(train.values().iter().map(|v| v + shift).collect())
    } else {
        train.clone()
    };
    let lambda = match config.transform.policy {
        groupcast::harness::TransformPolicy::None => None,
        groupcast::harness::TransformPolicy::Log => Some(BoxCoxParam::log()),
        groupcast::harness::TransformPolicy::Auto => Some(select_lambda(&shifted)?.param),
    };
    let working = match lambda {
        Some(lam) => box_cox(&shifted, lam)?,
        None => shifted,
    };
    let search = auto_select(&working, config.seasonal_period, &config.search_config())?;
    Ok(SingleModel {
        search,
        working,
        lambda,
        train,
    })
}

pub fn fit(
    config_path: &Path,
    data_path: &Path,
    node: &str,
    out_dir: &Path,
    shift: Option<f64>,
) -> Result<(), CliError> {
    let config = JobConfig::load(config_path)?;
    let loaded = load_data(&config, data_path)?;
    let key = parse_node_key(node, &loaded.structure)?;
    let single = fit_single(&config, &loaded, &key, shift)?;
    ensure_out_dir(out_dir)?;

    let model = &single.search.best;
    let max_lag = (2 * config.seasonal_period).min(single.working.len() / 2).max(1);
    if single.working.len() > max_lag {
        let a = acf(&single.working, max_lag).map_err(CliError::from)?;
        let p = pacf(&single.working, max_lag).map_err(CliError::from)?;
        output::write_acf_csv(&out_dir.join("acf.csv"), &a, &p)?;
    }
    let qq = qq_points(&model.residuals).map_err(CliError::from)?;
    output::write_qq_csv(&out_dir.join("qq.csv"), &qq)?;

    let doc = serde_json::json!({
        "node": key.label(&loaded.structure.schema),
        "lambda": single.lambda.map(|l| l.lambda),
        "differencing": single.search.differencing,
        "order": model.order.to_string(),
        "converged": model.converged,
        "coefficients": {
            "ar": model.coeffs.ar,
            "ma": model.coeffs.ma,
            "seasonal_ar": model.coeffs.seasonal_ar,
            "seasonal_ma": model.coeffs.seasonal_ma,
            "intercept": model.coeffs.intercept,
            "sigma2": model.coeffs.sigma2,
        },
        "log_likelihood": model.log_likelihood,
        "criteria": single.search.best_criteria,
        "candidates_evaluated": single.search.candidates.len(),
        "warnings": single.search.warnings,
    });
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    std::fs::write(out_dir.join("model.json"), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}

pub fn forecast_cmd(
    config_path: &Path,
    data_path: &Path,
    node: &str,
    horizon: Option<usize>,
    out_dir: &Path,
    shift: Option<f64>,
) -> Result<(), CliError> {
    let config = JobConfig::load(config_path)?;
    let loaded = load_data(&config, data_path)?;
    let key = parse_node_key(node, &loaded.structure)?;
    let single = fit_single(&config, &loaded, &key, shift)?;
    let h = horizon.unwrap_or(config.split.horizon);
    let shift_value = shift.unwrap_or(config.transform.shift);

    let transformed = sarima_forecast(&single.search.best, &single.working, h)
        .map_err(CliError::from)?;
    let values: Vec<f64> = transformed
        .iter()
        .map(|&v| match single.lambda {
            Some(lam) => inv_box_cox_value_clamped(v, lam) - shift_value,
            None => v - shift_value,
        })
        .collect();

    ensure_out_dir(out_dir)?;
    let path = out_dir.join("forecast.csv");
    let mut text = String::from("week,forecast\n");
    let first_week = single.train.len();
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{:.6}\n", first_week + i, v));
    }
    std::fs::write(&path, text)?;
    println!(
        "{}",
        serde_json::json!({
            "node": key.label(&loaded.structure.schema),
            "order": single.search.best.order.to_string(),
            "horizon": h,
            "forecast": values,
        })
    );
    Ok(())
}

pub fn evaluate(
    config_path: &Path,
    data_path: &Path,
    out_dir: &Path,
    methods: Option<Vec<Method>>,
    shift: Option<f64>,
) -> Result<(), CliError> {
    let config = JobConfig::load(config_path)?;
    let loaded = load_data(&config, data_path)?;
    let job = job_spec(&config, methods, shift);
    let output: JobOutput = evaluate_job(
        &loaded.structure,
        &loaded.records,
        loaded.calendar.weeks,
        &job,
    )
    .map_err(CliError::from)?;

    ensure_out_dir(out_dir)?;
    let schema = &loaded.structure.schema;
    output::write_forecasts_csv(&out_dir.join("forecasts.csv"), &output, schema, &job.methods)?;
    output::write_report_csv(&out_dir.join("report.csv"), &output, schema)?;
    output::write_diagnostics_json(&out_dir.join("diagnostics.json"), &output)?;

    // the three most aggregated series, like the headline comparison table
    println!(
        "{:<28} {:<12} {:>9} {:>12}",
        "series", "method", "MASE", "RMSE"
    );
    for row in output.report.summary_rows(3) {
        println!(
            "{:<28} {:<12} {:>9} {:>12.3}",
            row.key,
            row.method,
            row.mase.map(|m| format!("{m:.3}")).unwrap_or_else(|| "NA".into()),
            row.rmse,
        );
    }
    Ok(())
}

/// Read base forecasts written by `evaluate` (or hand-authored): key
/// columns per schema attribute plus f1..fh; a `method` column, when
/// present, restricts rows to Baseline.
fn read_base_csv(
    path: &Path,
    structure: &GroupStructure,
) -> Result<BaseForecasts, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::new(ErrorKind::Data, e.to_string()))?
        .clone();
    let schema = &structure.schema;
    let method_col = headers.iter().position(|h| h == "method");
    let mut attr_cols = Vec::new();
    for name in schema.names() {
        let col = headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::new(ErrorKind::Data, format!("missing column '{name}'"))
        })?;
        attr_cols.push(col);
    }
    let f_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('f') && h[1..].parse::<usize>().is_ok())
        .map(|(i, _)| i)
        .collect();
    if f_cols.is_empty() {
        return Err(CliError::new(
            ErrorKind::Data,
            "no forecast columns f1..fh found".into(),
        ));
    }
    let h = f_cols.len();
    let n = structure.node_count();
    let mut matrix = DMatrix::<f64>::zeros(n, h);
    let mut filled = vec![false; n];
    for (row_index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| {
            CliError::new(ErrorKind::Data, format!("row {}: {e}", row_index + 2))
        })?;
        if let Some(mc) = method_col {
            if row.get(mc) != Some("Baseline") {
                continue;
            }
        }
        let mut pairs = Vec::new();
        for (a, &col) in attr_cols.iter().enumerate() {
            let value = row.get(col).unwrap_or_default();
            if !value.is_empty() {
                pairs.push((schema.name_of(a), value));
            }
        }
        let pairs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (*a, *b)).collect();
        let key = SeriesKey::from_pairs(schema, &pairs).map_err(CliError::from)?;
        let Some(i) = structure.node_index(&key) else {
            return Err(CliError::new(
                ErrorKind::Data,
                format!("row {}: key '{}' not in structure", row_index + 2, key.label(schema)),
            ));
        };
        for (j, &col) in f_cols.iter().enumerate() {
            let text = row.get(col).unwrap_or_default();
            matrix[(i, j)] = text.parse().map_err(|_| {
                CliError::new(
                    ErrorKind::Data,
                    format!("row {}: bad forecast value '{text}'", row_index + 2),
                )
            })?;
        }
        filled[i] = true;
    }
    if let Some(i) = filled.iter().position(|f| !f) {
        return Err(CliError::new(
            ErrorKind::Data,
            format!(
                "no base forecast row for node '{}'",
                structure.nodes()[i].label(schema)
            ),
        ));
    }
    Ok(BaseForecasts::new(matrix))
}

/// Residuals CSV: one column per node label (as printed in report keys),
/// one row per time point.
fn read_residuals_csv(
    path: &Path,
    structure: &GroupStructure,
) -> Result<ResidualMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::new(ErrorKind::Data, e.to_string()))?
        .clone();
    let schema = &structure.schema;
    let mut cols = Vec::with_capacity(structure.node_count());
    for key in structure.nodes() {
        let label = key.label(schema);
        let col = headers.iter().position(|h| h == label).ok_or_else(|| {
            CliError::new(ErrorKind::Data, format!("missing residual column '{label}'"))
        })?;
        cols.push(col);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row_index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| {
            CliError::new(ErrorKind::Data, format!("row {}: {e}", row_index + 2))
        })?;
        let mut values = Vec::with_capacity(cols.len());
        for &col in &cols {
            let text = row.get(col).unwrap_or_default();
            values.push(text.parse().map_err(|_| {
                CliError::new(
                    ErrorKind::Data,
                    format!("row {}: bad residual '{text}'", row_index + 2),
                )
            })?);
        }
        rows.push(values);
    }
    if rows.len() < 2 {
        return Err(CliError::new(
            ErrorKind::Data,
            "need at least 2 residual rows".into(),
        ));
    }
    let matrix = DMatrix::from_fn(rows.len(), cols.len(), |i, j| rows[i][j]);
    Ok(ResidualMatrix::new(matrix))
}

pub fn reconcile_cmd(
    config_path: &Path,
    base_path: &Path,
    residuals_path: Option<&Path>,
    out_dir: &Path,
    methods: Option<Vec<Method>>,
) -> Result<(), CliError> {
    let config = JobConfig::load(config_path)?;
    let schema = schema_from_config(&config)?;

    // bottoms are the fully bound keys present in the base file
    let probe = {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(base_path)
            .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", base_path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::new(ErrorKind::Data, e.to_string()))?
            .clone();
        let method_col = headers.iter().position(|h| h == "method");
        let mut attr_cols = Vec::new();
        for name in schema.names() {
            let col = headers.iter().position(|h| h == name).ok_or_else(|| {
                CliError::new(ErrorKind::Data, format!("missing column '{name}'"))
            })?;
            attr_cols.push(col);
        }
        let mut bottoms = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| CliError::new(ErrorKind::Data, e.to_string()))?;
            if let Some(mc) = method_col {
                if row.get(mc) != Some("Baseline") {
                    continue;
                }
            }
            let values: Vec<&str> = attr_cols
                .iter()
                .map(|&c| row.get(c).unwrap_or_default())
                .collect();
            if values.iter().all(|v| !v.is_empty()) {
                let pairs: Vec<(&str, &str)> = schema
                    .names()
                    .zip(values.iter().copied())
                    .collect();
                bottoms.push(SeriesKey::from_pairs(&schema, &pairs).map_err(CliError::from)?);
            }
        }
        bottoms
    };
    let structure = build_structure(&schema, &config.levels, &probe)?;
    let base = read_base_csv(base_path, &structure)?;
    let s = build_summing_matrix(&structure);

    let methods = methods.unwrap_or_else(|| config.methods());
    let residuals = residuals_path
        .map(|p| read_residuals_csv(p, &structure))
        .transpose()?;

    let h = base.horizon();
    ensure_out_dir(out_dir)?;
    let path = out_dir.join("forecasts.csv");
    let mut text = String::new();
    let mut header = vec!["method".to_string()];
    header.extend(schema.names().map(|n| n.to_string()));
    header.push("has_negative".to_string());
    header.extend((1..=h).map(|k| format!("f{k}")));
    text.push_str(&header.join(","));
    text.push('\n');

    for method in &methods {
        let matrix = match method {
            Method::Baseline => base.matrix().clone(),
            Method::BottomUp => bottom_up(&base, &s).map_err(CliError::from)?.reconciled,
            Method::Ols => {
                let w = WeightSpec::identity(structure.node_count());
                reconcile(&base, &s, &w).map_err(CliError::from)?.reconciled
            }
            Method::Wls | Method::MintSample | Method::MintShrink => {
                let Some(res) = residuals.as_ref() else {
                    return Err(CliError::new(
                        ErrorKind::Config,
                        format!("method {method} needs --residuals"),
                    ));
                };
                let kind = match method {
                    Method::Wls => WeightKind::Wls,
                    Method::MintSample => WeightKind::MinTSample,
                    _ => WeightKind::MinTShrink,
                };
                let w = estimate_weights(res, kind).map_err(CliError::from)?;
                reconcile(&base, &s, &w).map_err(CliError::from)?.reconciled
            }
        };
        for (i, key) in structure.nodes().iter().enumerate() {
            let mut cells = vec![method.to_string()];
            for a in 0..schema.len() {
                cells.push(match key.value_for(a) {
                    Some(v) => schema.values_of(a)[v].clone(),
                    None => String::new(),
                });
            }
            let row: Vec<f64> = (0..h).map(|j| matrix[(i, j)]).collect();
            cells.push(row.iter().any(|&v| v < 0.0).to_string());
            for v in row {
                cells.push(format!("{v:.6}"));
            }
            text.push_str(&cells.join(","));
            text.push('\n');
        }
    }
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Demand,
    Correlated,
}

impl std::str::FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "demand" => Ok(Scenario::Demand),
            "correlated" => Ok(Scenario::Correlated),
            other => Err(CliError::new(
                ErrorKind::Config,
                format!("unknown scenario '{other}' (expected demand|correlated)"),
            )),
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_cmd(
    config_path: &Path,
    out: &Path,
    scenario: Scenario,
    seed: Option<u64>,
    weeks: Option<usize>,
    level: f64,
    amplitude: f64,
    noise: f64,
) -> Result<(), CliError> {
    let config = JobConfig::load(config_path)?;
    let schema = schema_from_config(&config)?;

    // full cartesian product of schema values
    let mut bottoms: Vec<Vec<(String, String)>> = vec![vec![]];
    for a in 0..schema.len() {
        let mut next = Vec::new();
        for b in &bottoms {
            for v in schema.values_of(a) {
                let mut nb = b.clone();
                nb.push((schema.name_of(a).to_string(), v.clone()));
                next.push(nb);
            }
        }
        bottoms = next;
    }
    let keys: Vec<SeriesKey> = bottoms
        .iter()
        .map(|pairs| {
            let refs: Vec<(&str, &str)> = pairs
                .iter()
                .map(|(a, b)| (a.as_str(), b.as_str()))
                .collect();
            SeriesKey::from_pairs(&schema, &refs).map_err(CliError::from)
        })
        .collect::<Result<_, _>>()?;

    let (start, n_weeks) = match &config.calendar {
        Some(cal) => (cal.start, weeks.unwrap_or(cal.weeks)),
        None => (
            NaiveDate::from_ymd_opt(2016, 12, 11).expect("valid date"),
            weeks.unwrap_or(110),
        ),
    };
    let seed = seed.unwrap_or(config.seed);
    let period = config.seasonal_period;
    let records = match scenario {
        Scenario::Demand => {
            synthetic::seasonal_demand_records(&keys, n_weeks, period, level, amplitude, noise, seed)
        }
        Scenario::Correlated => synthetic::correlated_bottom_records(
            &keys, n_weeks, period, level, amplitude, noise, seed,
        ),
    };

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut text = String::new();
    let mut header = vec!["date".to_string()];
    header.extend(schema.names().map(|n| n.to_string()));
    header.push("quantity".to_string());
    text.push_str(&header.join(","));
    text.push('\n');
    for r in &records {
        let date = start + chrono::Duration::days(7 * r.week as i64);
        let mut cells = vec![date.to_string()];
        for a in 0..schema.len() {
            cells.push(schema.values_of(a)[r.key.value_for(a).expect("full key")].clone());
        }
        let quantity = r.quantity.max(0.0);
        if quantity.fract() == 0.0 {
            cells.push(format!("{quantity:.0}"));
        } else {
            cells.push(format!("{quantity:.4}"));
        }
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(out, text)?;
    println!(
        "wrote {} ({} records, {} bottom series, {} weeks, seed {})",
        out.display(),
        records.len(),
        keys.len(),
        n_weeks,
        seed
    );
    Ok(())
}
