//! Trajectory output and observed-share input.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! value reads back to the same `f64` and identical runs give identical bytes.

use std::io::Read;
use std::str::FromStr;

use marketflow_core::{LossKind, Observation, Trajectory};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" | "json-tree" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    for prefix in ["D", "dOD", "dRD", "dBND", "share"] {
        header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    header
}

/// One row per recorded state. The rate columns hold the flows that advance
/// that state to the next one, so they are empty on the final row.
pub fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    let n = traj.segment_count();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(trajectory_header(n))
        .expect("write to memory");
    for (k, state) in traj.states.iter().enumerate() {
        let mut row = Vec::with_capacity(1 + 5 * n);
        row.push(state.t.to_string());
        row.extend(state.sizes.iter().map(f64::to_string));
        match traj.rates.get(k) {
            Some(r) => {
                for v in [&r.od, &r.rd, &r.bnd] {
                    row.extend(v.iter().map(f64::to_string));
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 3 * n)),
        }
        row.extend(state.shares().iter().map(f64::to_string));
        w.write_record(&row).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn trajectory_json(traj: &Trajectory) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(traj).expect("trajectory serializes");
    out.push(b'\n');
    out
}

pub fn write_trajectory(traj: &Trajectory, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => trajectory_csv(traj),
        Format::Json => trajectory_json(traj),
    }
}

pub fn parse_trajectory_json(bytes: &[u8]) -> Result<Trajectory> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        } else {
            Error::schema(path, inner.to_string())
        }
    })
}

/// Reads observed shares (`t,share_1..share_n`) or, for a size loss,
/// observed sizes (`t,D_1..D_n`).
pub fn read_observations<R: Read>(
    reader: R,
    source: &str,
    segments: usize,
    loss: LossKind,
) -> Result<Vec<Observation>> {
    let prefix = match loss {
        LossKind::Shares => "share",
        LossKind::Sizes => "D",
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::csv(format!("{source}:1"), e.to_string()))?
        .clone();
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=segments).map(|i| format!("{prefix}_{i}")))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::csv(
            format!("{source}:1"),
            format!("expected header '{}'", expected.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::csv(format!("{source}:{line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let at = format!("{source}:{line}");
        if record.len() != expected.len() {
            return Err(Error::csv(
                at,
                format!(
                    "ragged row: {} fields, expected {}",
                    record.len(),
                    expected.len()
                ),
            ));
        }
        let mut values = Vec::with_capacity(record.len());
        for (field, name) in record.iter().zip(&expected) {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::csv(
                        at,
                        format!("{name} value '{field}' is not a finite number"),
                    ))
                }
            }
        }
        let t = values.remove(0);
        out.push(Observation { t, values });
    }
    Ok(out)
}

pub fn observations_csv(observed: &[Observation], loss: LossKind) -> Vec<u8> {
    let prefix = match loss {
        LossKind::Shares => "share",
        LossKind::Sizes => "D",
    };
    let n = observed.first().map_or(0, |o| o.values.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("{prefix}_{i}")))
        .collect();
    w.write_record(&header).expect("write to memory");
    for o in observed {
        let row: Vec<String> = std::iter::once(o.t)
            .chain(o.values.iter().copied())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}
