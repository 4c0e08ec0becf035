//! CSV exports: per-generation metrics and behavior projections.

use std::path::Path;

use super::{write_file, IoError};

pub const METRICS_HEADER: [&str; 4] = ["run_id", "generation", "metric", "value"];
pub const PROJECTION_HEADER: [&str; 5] = ["run_id", "behavior_key", "pc1", "pc2", "fitness"];

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub run_id: String,
    pub generation: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionRow {
    pub run_id: String,
    pub behavior_key: u64,
    pub pc: [f64; 2],
    pub fitness: f64,
}

/// 17 significant digits, enough to read back the exact double.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn metrics_csv(rows: &[MetricRow]) -> Vec<u8> {
    to_csv(
        METRICS_HEADER,
        rows.iter().map(|r| [r.run_id.clone(), r.generation.to_string(), r.metric.clone(), format_real(r.value)]),
    )
}

pub fn projection_csv(rows: &[ProjectionRow]) -> Vec<u8> {
    to_csv(
        PROJECTION_HEADER,
        rows.iter().map(|r| {
            [r.run_id.clone(), format!("{:016x}", r.behavior_key), format_real(r.pc[0]), format_real(r.pc[1]), format_real(r.fitness)]
        }),
    )
}

pub fn export_metrics(path: &Path, rows: &[MetricRow]) -> Result<(), IoError> {
    write_file(path, &metrics_csv(rows))
}

pub fn export_projection(path: &Path, rows: &[ProjectionRow]) -> Result<(), IoError> {
    write_file(path, &projection_csv(rows))
}

/// Writes any table whose cells are already formatted.
pub fn export_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    write_file(path, &w.into_inner().expect("in-memory flush"))
}
