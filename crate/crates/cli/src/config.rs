//! Job configuration: a single JSON document describing the schema,
//! grouping levels, calendar, split, transform, search, and methods.

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use groupcast::harness::{Method, TransformPolicy};
use groupcast::selection::{IcKind, SearchConfig};

use crate::error::{CliError, ErrorKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeConfig {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalendarConfig {
    /// First day of the first week (must fall on `week_start`).
    pub start: NaiveDate,
    /// Number of weekly buckets.
    pub weeks: usize,
    /// Day the week starts on; the bucketing boundary.
    #[serde(default = "default_week_start")]
    pub week_start: String,
}

fn default_week_start() -> String {
    "sunday".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_weeks: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformConfig {
    #[serde(default = "default_policy")]
    pub policy: TransformPolicy,
    /// Constant added before the transform and removed after inversion.
    #[serde(default)]
    pub shift: f64,
}

fn default_policy() -> TransformPolicy {
    TransformPolicy::None
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            policy: TransformPolicy::None,
            shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSection {
    #[serde(default = "default_max_pq")]
    pub max_p: usize,
    #[serde(default = "default_max_pq")]
    pub max_q: usize,
    #[serde(default = "default_max_seasonal")]
    pub max_seasonal_p: usize,
    #[serde(default = "default_max_seasonal")]
    pub max_seasonal_q: usize,
    #[serde(default = "default_criterion")]
    pub criterion: IcKind,
}

fn default_max_pq() -> usize {
    3
}
fn default_max_seasonal() -> usize {
    1
}
fn default_criterion() -> IcKind {
    IcKind::Aicc
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            max_p: 3,
            max_q: 3,
            max_seasonal_p: 1,
            max_seasonal_q: 1,
            criterion: IcKind::Aicc,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobConfig {
    pub schema: Vec<AttributeConfig>,
    /// Aggregation levels: each entry is a subset of schema attributes.
    pub levels: Vec<Vec<String>>,
    /// Optional; inferred from the data span when absent.
    #[serde(default)]
    pub calendar: Option<CalendarConfig>,
    pub seasonal_period: usize,
    pub split: SplitConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub search: SearchSection,
    pub methods: Vec<String>,
    #[serde(default)]
    pub seed: u64,
}

impl JobConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::new(ErrorKind::Config, format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: JobConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::new(ErrorKind::Config, format!("invalid config {}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::new(ErrorKind::Config, msg));
        if self.schema.is_empty() {
            return bad("schema must list at least one attribute".into());
        }
        if self.seasonal_period == 0 {
            return bad("seasonal_period must be >= 1".into());
        }
        if self.split.horizon == 0 {
            return bad("split.horizon must be >= 1".into());
        }
        if self.split.train_weeks == 0 {
            return bad("split.train_weeks must be >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        for name in &self.methods {
            name.parse::<Method>()
                .map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?;
        }
        for level in &self.levels {
            for attr in level {
                if !self.schema.iter().any(|a| &a.name == attr) {
                    return bad(format!("level attribute '{attr}' not in schema"));
                }
            }
        }
        if let Some(cal) = &self.calendar {
            if cal.weeks == 0 {
                return bad("calendar.weeks must be >= 1".into());
            }
            let week_start = parse_weekday(&cal.week_start)?;
            if cal.start.weekday() != week_start {
                return bad(format!(
                    "calendar.start {} falls on {}, but weeks start on {}",
                    cal.start,
                    cal.start.weekday(),
                    cal.week_start
                ));
            }
        }
        Ok(())
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods
            .iter()
            .map(|m| m.parse().expect("validated"))
            .collect()
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            max_p: self.search.max_p,
            max_q: self.search.max_q,
            max_seasonal_p: self.search.max_seasonal_p,
            max_seasonal_q: self.search.max_seasonal_q,
            criterion: self.search.criterion,
        }
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.schema.iter().map(|a| a.name.clone()).collect()
    }
}

pub fn parse_weekday(name: &str) -> Result<Weekday, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "monday" => Ok(Weekday::Mon),
        "tuesday" => Ok(Weekday::Tue),
        "wednesday" => Ok(Weekday::Wed),
        "thursday" => Ok(Weekday::Thu),
        "friday" => Ok(Weekday::Fri),
        "saturday" => Ok(Weekday::Sat),
        "sunday" => Ok(Weekday::Sun),
        other => Err(CliError::new(
            ErrorKind::Config,
            format!("unknown week_start '{other}'"),
        )),
    }
}
