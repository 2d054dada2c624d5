//! Result records, output sinks and JSON-lines logging.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Theory,
    Montecarlo,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub timestamp: String,
    pub config: ExperimentConfig,
    pub module: String,
    pub module_version: String,
    pub metric: String,
    pub value: f64,
    pub ci_halfwidth: Option<f64>,
    pub provenance: Provenance,
    /// Verb-specific payload (angles, reports, solver metadata).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<serde_json::Value>,
}

impl ResultRecord {
    pub fn new(
        config: &ExperimentConfig,
        module: &str,
        metric: impl Into<String>,
        value: f64,
        provenance: Provenance,
    ) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            config: config.clone(),
            module: module.into(),
            module_version: VERSION.into(),
            metric: metric.into(),
            value,
            ci_halfwidth: None,
            provenance,
            detail: None,
        }
    }

    pub fn ci(mut self, halfwidth: f64) -> Self {
        self.ci_halfwidth = Some(halfwidth);
        self
    }

    pub fn detail<T: Serialize>(mut self, detail: &T) -> Self {
        self.detail = serde_json::to_value(detail).ok();
        self
    }
}

/// Generic CSV layout used when a verb has no table of its own.
pub const RECORD_CSV_HEADER: [&str; 7] = [
    "timestamp",
    "module",
    "module_version",
    "metric",
    "value",
    "ci_halfwidth",
    "provenance",
];

pub fn open_sink(path: Option<&Path>, append: bool) -> anyhow::Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => {
            let file = if append {
                OpenOptions::new().create(true).append(true).open(p)
            } else {
                File::create(p)
            }
            .with_context(|| format!("opening {}", p.display()))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(io::stdout()),
    })
}

pub struct Logger {
    sink: Box<dyn Write + Send>,
    verb: String,
}

impl Logger {
    pub fn new(path: Option<&Path>, verb: &str) -> anyhow::Result<Self> {
        let sink: Box<dyn Write + Send> = match path {
            Some(_) => open_sink(path, true)?,
            None => Box::new(io::stderr()),
        };
        Ok(Self {
            sink,
            verb: verb.into(),
        })
    }

    pub fn event(&mut self, level: &str, message: &str, fields: serde_json::Value) {
        let line = serde_json::json!({
            "ts": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            "level": level,
            "verb": self.verb,
            "msg": message,
            "fields": fields,
        });
        let _ = writeln!(self.sink, "{line}");
        let _ = self.sink.flush();
    }

    pub fn info(&mut self, message: &str, fields: serde_json::Value) {
        self.event("info", message, fields);
    }
}
