//! Sales CSV ingestion and weekly calendar bucketing.

use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};

use groupcast::grouping::{AttributeSchema, SeriesKey, WeekRecord};

use crate::config::JobConfig;
use crate::error::{CliError, ErrorKind};

/// One parsed data row: date, one value per schema attribute, quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct SalesRecord {
    pub date: NaiveDate,
    pub attribute_values: Vec<String>,
    pub quantity: f64,
}

/// Result of ingestion: records plus anything worth telling the user.
#[derive(Debug)]
pub struct Ingested {
    pub records: Vec<SalesRecord>,
    pub warnings: Vec<String>,
    pub min_date: NaiveDate,
    pub max_date: NaiveDate,
}

/// Parse a sales CSV with columns `date, <schema attributes...>, quantity`.
///
/// Rows with identical (date, key) are retained separately; aggregation
/// sums them later. Extra columns are ignored with a warning. Dates are
/// ISO-8601 (YYYY-MM-DD); quantities must be finite and >= 0.
pub fn parse_sales_csv(path: &Path, attribute_names: &[String]) -> Result<Ingested, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", path.display())))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let date_col = find("date").ok_or_else(|| missing_column("date"))?;
    let quantity_col = find("quantity").ok_or_else(|| missing_column("quantity"))?;
    let mut attr_cols = Vec::with_capacity(attribute_names.len());
    for name in attribute_names {
        attr_cols.push(find(name).ok_or_else(|| missing_column(name))?);
    }

    let mut warnings = Vec::new();
    let known: Vec<usize> = [date_col, quantity_col]
        .into_iter()
        .chain(attr_cols.iter().copied())
        .collect();
    for (i, h) in headers.iter().enumerate() {
        if !known.contains(&i) {
            warnings.push(format!("ignoring extra column '{h}'"));
        }
    }

    let mut records = Vec::new();
    for (row_index, row) in reader.records().enumerate() {
        let line = row_index + 2; // 1-based, after the header line
        let row =
            row.map_err(|e| CliError::new(ErrorKind::Data, format!("row {line}: {e}")))?;
        let date_text = row.get(date_col).unwrap_or_default();
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|_| {
            CliError::new(
                ErrorKind::Data,
                format!("bad date '{date_text}' at row {line} (expected YYYY-MM-DD)"),
            )
        })?;
        let quantity_text = row.get(quantity_col).unwrap_or_default();
        let quantity: f64 = quantity_text.parse().map_err(|_| {
            CliError::new(
                ErrorKind::Data,
                format!("bad quantity '{quantity_text}' at row {line}"),
            )
        })?;
        if !quantity.is_finite() || quantity < 0.0 {
            return Err(CliError::new(
                ErrorKind::Data,
                format!("bad quantity '{quantity_text}' at row {line}: must be finite and >= 0"),
            ));
        }
        let attribute_values: Vec<String> = attr_cols
            .iter()
            .map(|&c| row.get(c).unwrap_or_default().to_string())
            .collect();
        records.push(SalesRecord {
            date,
            attribute_values,
            quantity,
        });
    }
    if records.is_empty() {
        return Err(CliError::new(
            ErrorKind::Data,
            format!("{}: no data rows", path.display()),
        ));
    }
    let min_date = records.iter().map(|r| r.date).min().expect("non-empty");
    let max_date = records.iter().map(|r| r.date).max().expect("non-empty");
    Ok(Ingested {
        records,
        warnings,
        min_date,
        max_date,
    })
}

fn missing_column(name: &str) -> CliError {
    CliError::new(ErrorKind::Data, format!("missing column '{name}'"))
}

/// Weekly bucketing: maps dates onto 0-based week indices.
#[derive(Debug, Clone, Copy)]
pub struct WeeklyCalendar {
    pub start: NaiveDate,
    pub weeks: usize,
}

impl WeeklyCalendar {
    /// Build from the config calendar, or infer from the data span: the
    /// first week starts on the configured weekday on or before the
    /// earliest record.
    pub fn resolve(config: &JobConfig, ingested: &Ingested) -> Result<Self, CliError> {
        if let Some(cal) = &config.calendar {
            return Ok(Self {
                start: cal.start,
                weeks: cal.weeks,
            });
        }
        let week_start = Weekday::Sun;
        let mut start = ingested.min_date;
        while start.weekday() != week_start {
            start = start.pred_opt().expect("date range");
        }
        let span_days = (ingested.max_date - start).num_days();
        let weeks = (span_days / 7 + 1) as usize;
        Ok(Self { start, weeks })
    }

    pub fn week_of(&self, date: NaiveDate) -> Option<usize> {
        let days = (date - self.start).num_days();
        if days < 0 {
            return None;
        }
        let week = (days / 7) as usize;
        (week < self.weeks).then_some(week)
    }
}

/// Validate records against the schema and map them onto calendar weeks.
pub fn to_week_records(
    ingested: &Ingested,
    schema: &AttributeSchema,
    attribute_names: &[String],
    calendar: &WeeklyCalendar,
) -> Result<Vec<WeekRecord>, CliError> {
    let mut out = Vec::with_capacity(ingested.records.len());
    for (i, record) in ingested.records.iter().enumerate() {
        let pairs: Vec<(&str, &str)> = attribute_names
            .iter()
            .map(|n| n.as_str())
            .zip(record.attribute_values.iter().map(|v| v.as_str()))
            .collect();
        let key = SeriesKey::from_pairs(schema, &pairs).map_err(|e| {
            CliError::new(ErrorKind::Data, format!("record {}: {e}", i + 1))
        })?;
        let week = calendar.week_of(record.date).ok_or_else(|| {
            CliError::new(
                ErrorKind::Data,
                format!(
                    "record {}: date {} outside the {}-week calendar starting {}",
                    i + 1,
                    record.date,
                    calendar.weeks,
                    calendar.start
                ),
            )
        })?;
        out.push(WeekRecord {
            week,
            key,
            quantity: record.quantity,
        });
    }
    Ok(out)
}

/// The fully bound keys observed in the data, deduplicated.
pub fn observed_bottom_keys(records: &[WeekRecord]) -> Vec<SeriesKey> {
    let mut keys: Vec<SeriesKey> = records.iter().map(|r| r.key.clone()).collect();
    keys.sort();
    keys.dedup();
    keys
}

/// Build the attribute schema from the config.
pub fn schema_from_config(config: &JobConfig) -> Result<AttributeSchema, CliError> {
    AttributeSchema::new(
        config
            .schema
            .iter()
            .map(|a| (a.name.clone(), a.values.clone()))
            .collect(),
    )
    .map_err(CliError::from)
}
