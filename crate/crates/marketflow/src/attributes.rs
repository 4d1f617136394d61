//! Long-form attribute series: one row per (time, segment, attribute) cell.
//!
//! ```text
//! t,segment,attribute,perf,imp
//! 1,1,quality,4,5
//! 1,1,price,8,5
//! ```
//!
//! Segments and attributes may be given by name or by 1-based position.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER: [&str; 5] = ["t", "segment", "attribute", "perf", "imp"];

/// Dense panel data in `[stamp][segment][attribute]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    pub times: Vec<f64>,
    pub perf: Vec<f64>,
    pub imp: Vec<f64>,
}

fn resolve(label: &str, names: &[String]) -> Option<usize> {
    if let Some(i) = names.iter().position(|n| n == label) {
        return Some(i);
    }
    match label.parse::<usize>() {
        Ok(i) if (1..=names.len()).contains(&i) => Some(i - 1),
        _ => None,
    }
}

fn number(field: &str, column: &str, location: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::csv(
            location,
            format!("{column} value '{field}' is not a finite number"),
        )),
    }
}

pub fn load_attribute_csv_path(
    path: &Path,
    segments: &[String],
    attributes: &[String],
) -> Result<AttributeTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_attribute_csv(file, &path.display().to_string(), segments, attributes)
}

/// Reads a long-form attribute CSV. `source` names the input in diagnostics.
pub fn load_attribute_csv<R: Read>(
    reader: R,
    source: &str,
    segments: &[String],
    attributes: &[String],
) -> Result<AttributeTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::csv(format!("{source}:1"), e.to_string()))?
        .clone();
    if header.iter().ne(HEADER) {
        return Err(Error::csv(
            format!("{source}:1"),
            format!(
                "expected header '{}', found '{}'",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let (n, k) = (segments.len(), attributes.len());
    // (t, segment, attribute, perf, imp, line)
    let mut rows: Vec<(f64, usize, usize, f64, f64, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::csv(format!("{source}:{line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let at = format!("{source}:{line}");
        if record.len() != HEADER.len() {
            return Err(Error::csv(
                at,
                format!(
                    "ragged row: {} fields, expected {}",
                    record.len(),
                    HEADER.len()
                ),
            ));
        }
        let t = number(&record[0], "t", &at)?;
        let segment = resolve(&record[1], segments)
            .ok_or_else(|| Error::csv(&at, format!("unknown segment '{}'", &record[1])))?;
        let attribute = resolve(&record[2], attributes)
            .ok_or_else(|| Error::csv(&at, format!("unknown attribute '{}'", &record[2])))?;
        let perf = number(&record[3], "perf", &at)?;
        let imp = number(&record[4], "imp", &at)?;
        if let Some(prev) = rows
            .iter()
            .find(|r| r.0 == t && r.1 == segment && r.2 == attribute)
        {
            return Err(Error::csv(
                at,
                format!(
                    "duplicate cell (t={t}, segment {}, attribute {}), first given on line {}",
                    segments[segment], attributes[attribute], prev.5
                ),
            ));
        }
        rows.push((t, segment, attribute, perf, imp, line));
    }
    if rows.is_empty() {
        return Err(Error::csv(format!("{source}:2"), "no data rows"));
    }

    let mut times: Vec<f64> = rows.iter().map(|r| r.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let cells = times.len() * n * k;
    let mut perf = vec![f64::NAN; cells];
    let mut imp = vec![f64::NAN; cells];
    for &(t, i, z, p, w, _) in &rows {
        let s = times
            .iter()
            .position(|&x| x == t)
            .expect("stamp collected above");
        let idx = (s * n + i) * k + z;
        perf[idx] = p;
        imp[idx] = w;
    }

    let missing: Vec<String> = (0..cells)
        .filter(|&idx| perf[idx].is_nan())
        .map(|idx| {
            let (s, i, z) = (idx / (n * k), (idx / k) % n, idx % k);
            format!(
                "(t={}, segment {}, attribute {})",
                times[s], segments[i], attributes[z]
            )
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::csv(
            source,
            format!("missing cells: {}", missing.join(", ")),
        ));
    }
    Ok(AttributeTable { times, perf, imp })
}
