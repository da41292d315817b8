//! File formats: trajectory CSV, verdict CSV/JSON, and conformance report
//! serialization.
//!
//! Trajectory CSV is one row per vehicle per timestep:
//!
//! ```text
//! t,vehicle_id,x,speed,headway,leader_id,on_offramp
//! 0.000,veh_000,0.000000,25.000000,-1.000000,,0
//! ```
//!
//! `t` is printed with three decimals, `x`/`speed`/`headway` with six.
//! Headway is `-1.0` while the vehicle has no leader (and `leader_id` is
//! empty); `on_offramp` is 0/1. UTF-8, comma separators, `.` decimal point,
//! LF line endings.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{Interpolation, Signal};
use crate::specs::ConformanceReport;
use crate::stl::eval::Verdict;
use crate::trace::{channel, Trace, TraceError};

pub const TRACE_CSV_HEADER: &str = "t,vehicle_id,x,speed,headway,leader_id,on_offramp";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line 1: expected header '{expected}', found '{found}'", expected = TRACE_CSV_HEADER)]
    BadHeader { found: String },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// One trajectory CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub vehicle_id: String,
    /// Front-bumper position along the corridor, m.
    pub x: f64,
    /// m/s.
    pub speed: f64,
    /// Time headway in seconds; negative means "no leader".
    pub headway: f64,
    /// Empty when the vehicle has no leader.
    pub leader_id: String,
    pub on_offramp: bool,
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.3},{},{:.6},{:.6},{:.6},{},{}",
            self.t,
            self.vehicle_id,
            self.x,
            self.speed,
            self.headway,
            self.leader_id,
            u8::from(self.on_offramp),
        )
    }
}

fn parse_field<T: std::str::FromStr>(raw: &str, what: &str, line: usize) -> Result<T, CsvError> {
    raw.trim().parse::<T>().map_err(|_| CsvError::Row {
        line,
        message: format!("invalid {what} '{raw}'"),
    })
}

fn parse_finite(raw: &str, what: &str, line: usize) -> Result<f64, CsvError> {
    let value: f64 = parse_field(raw, what, line)?;
    if !value.is_finite() {
        return Err(CsvError::Row {
            line,
            message: format!("{what} must be finite, got '{raw}'"),
        });
    }
    Ok(value)
}

/// Parses trajectory CSV text into rows, validating the schema. Errors carry
/// the 1-based line number.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, CsvError> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim_end_matches('\r'),
        None => return Err(CsvError::Empty),
    };
    if header != TRACE_CSV_HEADER {
        return Err(CsvError::BadHeader {
            found: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 7 {
            return Err(CsvError::Row {
                line,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let t = parse_finite(fields[0], "time", line)?;
        if t < 0.0 {
            return Err(CsvError::Row {
                line,
                message: format!("time must be non-negative, got {t}"),
            });
        }
        let vehicle_id = fields[1].trim().to_string();
        if vehicle_id.is_empty() {
            return Err(CsvError::Row {
                line,
                message: "vehicle_id must not be empty".to_string(),
            });
        }
        let x = parse_finite(fields[2], "position", line)?;
        let speed = parse_finite(fields[3], "speed", line)?;
        let headway = parse_finite(fields[4], "headway", line)?;
        let leader_id = fields[5].trim().to_string();
        let on_offramp = match fields[6].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(CsvError::Row {
                    line,
                    message: format!("on_offramp must be 0 or 1, got '{other}'"),
                });
            }
        };
        rows.push(TraceRow {
            t,
            vehicle_id,
            x,
            speed,
            headway,
            leader_id,
            on_offramp,
        });
    }
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(rows)
}

/// Builds the standard channel set from one vehicle's rows: position and
/// speed interpolate linearly, headway and the off-ramp flag hold their value
/// between samples.
pub fn trace_from_rows(vehicle_id: &str, rows: &[TraceRow]) -> Result<Trace, TraceError> {
    let mut channels = std::collections::BTreeMap::new();
    channels.insert(
        channel::POSITION.to_string(),
        Signal::from_pairs(rows.iter().map(|r| (r.t, r.x)), Interpolation::Linear, "m")?,
    );
    channels.insert(
        channel::SPEED.to_string(),
        Signal::from_pairs(
            rows.iter().map(|r| (r.t, r.speed)),
            Interpolation::Linear,
            "m/s",
        )?,
    );
    channels.insert(
        channel::HEADWAY.to_string(),
        Signal::from_pairs(
            rows.iter().map(|r| (r.t, r.headway)),
            Interpolation::Step,
            "s",
        )?,
    );
    channels.insert(
        channel::ON_OFFRAMP.to_string(),
        Signal::from_pairs(
            rows.iter()
                .map(|r| (r.t, f64::from(u8::from(r.on_offramp)))),
            Interpolation::Step,
            "",
        )?,
    );
    Trace::new(vehicle_id, channels)
}

/// Groups rows by vehicle (in first-seen order) and builds one trace each.
pub fn traces_from_rows(rows: &[TraceRow]) -> Result<Vec<Trace>, CsvError> {
    let mut order: Vec<&str> = Vec::new();
    for row in rows {
        if !order.contains(&row.vehicle_id.as_str()) {
            order.push(&row.vehicle_id);
        }
    }
    let mut traces = Vec::with_capacity(order.len());
    for id in order {
        let vehicle_rows: Vec<TraceRow> = rows
            .iter()
            .filter(|r| r.vehicle_id == id)
            .cloned()
            .collect();
        traces.push(trace_from_rows(id, &vehicle_rows)?);
    }
    Ok(traces)
}

pub fn write_trace_rows<W: Write>(mut w: W, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "{TRACE_CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}

fn io_err(path: &Path, source: std::io::Error) -> CsvError {
    CsvError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_trace_file(path: &Path) -> Result<Vec<Trace>, CsvError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let rows = parse_trace_csv(&text)?;
    traces_from_rows(&rows)
}

pub fn write_trace_rows_file(path: &Path, rows: &[TraceRow]) -> Result<(), CsvError> {
    let mut buf = Vec::new();
    write_trace_rows(&mut buf, rows).map_err(|e| io_err(path, e))?;
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Verdict CSV: `t,robustness,satisfaction` per sample of the horizon.
/// Robustness prints with full round-trip precision (`inf` for vacuous
/// truth); satisfaction is -1 or 1.
pub fn write_verdict_csv<W: Write>(mut w: W, verdict: &Verdict) -> std::io::Result<()> {
    writeln!(w, "t,robustness,satisfaction")?;
    for (rob, sat) in verdict
        .robustness
        .samples()
        .iter()
        .zip(verdict.satisfaction.samples())
    {
        writeln!(w, "{},{},{}", rob.t, rob.value, sat.value as i64)?;
    }
    Ok(())
}

/// JSON-serializable one-line summary of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub vehicle_id: String,
    /// Formula in DSL syntax.
    pub formula: String,
    #[serde(with = "extended_float")]
    pub summary_robustness: f64,
    pub satisfied: bool,
    /// `[t0, t1]` sub-domain on which the formula was evaluated.
    pub horizon: [f64; 2],
    /// Path of the trace file this verdict was computed from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
}

impl VerdictSummary {
    pub fn new(verdict: &Verdict, formula: impl Into<String>, trace_path: Option<String>) -> Self {
        VerdictSummary {
            vehicle_id: verdict.vehicle_id.clone(),
            formula: formula.into(),
            summary_robustness: verdict.summary,
            satisfied: verdict.satisfied(),
            horizon: [verdict.horizon.0, verdict.horizon.1],
            trace_path,
        }
    }
}

/// JSON numbers cannot express infinities, but vacuously true specifications
/// produce them; encode non-finite values as the strings "inf"/"-inf".
mod extended_float {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else if value.is_nan() {
            serializer.serialize_str("nan")
        } else if *value > 0.0 {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_str("-inf")
        }
    }

    struct FloatOrText;

    impl Visitor<'_> for FloatOrText {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("unrecognized float text '{other}'"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        deserializer.deserialize_any(FloatOrText)
    }
}

fn float_cell(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

fn channel_labels(channel_name: &str) -> (String, String) {
    match channel_name {
        "speed" => ("Mean Speed (m/s)".into(), "Std Dev (Speed)".into()),
        "headway" => ("Mean Headway (s)".into(), "Std Dev (Headway)".into()),
        other => {
            let mut cap = other.to_string();
            if let Some(first) = cap.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            (format!("Mean {cap}"), format!("Std Dev ({cap})"))
        }
    }
}

/// Conformance report in the three-column table layout:
/// measure, conforming trajectories, violating trajectories.
pub fn report_to_table_csv(report: &ConformanceReport) -> String {
    let (mean_label, std_label) = channel_labels(&report.statistic_channel);
    let mut out = String::new();
    out.push_str("Measure,Conforming trajectories,Violating trajectories\n");
    out.push_str(&format!(
        "Volume,{},{}\n",
        report.conforming.volume, report.violating.volume
    ));
    out.push_str(&format!(
        "{},{},{}\n",
        mean_label,
        float_cell(report.conforming.mean),
        float_cell(report.violating.mean)
    ));
    out.push_str(&format!(
        "{},{},{}\n",
        std_label,
        float_cell(report.conforming.std_dev),
        float_cell(report.violating.std_dev)
    ));
    out
}
