//! Command-line harness: configuration, verb dispatch, table reproduction
//! and result persistence.

pub mod commands;
pub mod config;
pub mod record;
pub mod reference;
pub mod table1;

use std::io::Write;

use anyhow::Context;

pub use commands::Outcome;
pub use config::ExperimentConfig;

use config::Format;
use record::{open_sink, Logger, ResultRecord, RECORD_CSV_HEADER};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Breach(String),
}

impl Status {
    pub fn exit_code(&self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Breach(_) => 2,
        }
    }
}

/// Runs a resolved config: dispatches the verb on a pool of
/// `worker_threads()` workers and writes its outputs.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Status> {
    cfg.validate()?;
    let mut log = Logger::new(cfg.log.as_deref(), cfg.verb().name())?;
    let threads = cfg.worker_threads();
    log.info("start", serde_json::json!({"threads": threads, "config": cfg}));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")?;
    let outcome = pool.install(|| commands::dispatch(cfg, &mut log))?;
    write_outputs(cfg, &outcome)?;
    Ok(match outcome.breach {
        Some(why) => {
            log.event("error", "invariant breach", serde_json::json!({"reason": why}));
            Status::Breach(why)
        }
        None => {
            log.info("done", serde_json::json!({"records": outcome.records.len()}));
            Status::Ok
        }
    })
}

fn write_outputs(cfg: &ExperimentConfig, outcome: &Outcome) -> anyhow::Result<()> {
    let mut sink = open_sink(cfg.output.as_deref(), false)?;
    if let Some(artifact) = &outcome.artifact {
        writeln!(sink, "{artifact}")?;
    } else {
        match cfg.format.unwrap_or_default() {
            Format::JsonLines => write_json_lines(&mut sink, &outcome.records)?,
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut sink);
                match &outcome.table {
                    Some(t) => {
                        w.write_record(&t.header)?;
                        for row in &t.rows {
                            w.write_record(row)?;
                        }
                    }
                    None => {
                        w.write_record(RECORD_CSV_HEADER)?;
                        for r in &outcome.records {
                            w.serialize((
                                &r.timestamp,
                                &r.module,
                                &r.module_version,
                                &r.metric,
                                r.value,
                                r.ci_halfwidth,
                                r.provenance,
                            ))?;
                        }
                    }
                }
                w.flush()?;
            }
        }
    }
    sink.flush()?;
    if let Some(path) = &cfg.records {
        let mut records = open_sink(Some(path), true)?;
        write_json_lines(&mut records, &outcome.records)?;
        records.flush()?;
    }
    Ok(())
}

fn write_json_lines(sink: &mut dyn Write, records: &[ResultRecord]) -> anyhow::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *sink, r)?;
        writeln!(sink)?;
    }
    Ok(())
}
