//! CSV and JSON records written and read by the tool.
//!
//! Floats are written in shortest round-trip form, so every file reads back
//! to the exact values it was written from.

use costvalley_core::geom::WorldPoint;
use costvalley_core::grid::{CellIndex, OccupancyGrid};
use costvalley_core::perception::Point3;
use costvalley_core::sim::TickTrace;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

pub fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner()
        .map_err(|e| FormatError::Invalid(e.error().to_string()))
}

/// Reads a headered CSV; columns are matched by name.
pub fn read_csv<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>, FormatError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    r.deserialize()
        .map(|row| row.map_err(FormatError::from))
        .collect()
}

pub fn write_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("records serialize");
    out.push(b'\n');
    out
}

pub fn read_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, FormatError> {
    serde_json::from_slice(bytes).map_err(|source| FormatError::Json {
        line: source.line(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn write_cloud(points: &[Point3]) -> Result<Vec<u8>, FormatError> {
    write_csv(points.iter().map(|p| CloudRow {
        x: p.x,
        y: p.y,
        z: p.z,
    }))
}

pub fn read_cloud(bytes: &[u8]) -> Result<Vec<Point3>, FormatError> {
    let rows: Vec<CloudRow> = read_csv(bytes)?;
    Ok(rows
        .into_iter()
        .map(|r| Point3::new(r.x, r.y, r.z))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub y: usize,
    pub x: usize,
    pub cost: f64,
}

pub fn node_rows(nodes: &[CellIndex], grid: &OccupancyGrid) -> Vec<NodeRow> {
    nodes
        .iter()
        .map(|n| NodeRow {
            y: n.y,
            x: n.x,
            cost: grid.at(*n),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRecord {
    pub forward_m: f64,
    pub right_m: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyRow {
    pub x: f64,
    pub y: f64,
}

pub fn xy_rows(points: &[WorldPoint]) -> Vec<XyRow> {
    points.iter().map(|p| XyRow { x: p.x, y: p.y }).collect()
}

/// One [`TickTrace`] per line.
pub fn write_trace(traces: &[TickTrace]) -> Vec<u8> {
    let mut out = Vec::new();
    for t in traces {
        serde_json::to_writer(&mut out, t).expect("traces serialize");
        out.push(b'\n');
    }
    out
}

pub fn read_trace(bytes: &[u8]) -> Result<Vec<TickTrace>, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Invalid(e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| FormatError::Json {
                line: i + 1,
                source,
            })
        })
        .collect()
}
