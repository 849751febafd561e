//! Bundled reference measurements for the three reduction methods at the
//! standard bit-widths, used for regression diffing and cost calibration.
//! The data is shipped as a versioned CSV asset; known errata in the source
//! numbers are annotated per row rather than silently corrected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::perf::ResourceCount;

/// One value per reduction method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerMethod<T> {
    pub lut: T,
    pub iterative: T,
    pub hybrid: T,
}

/// One reference row: the published comparison numbers for a bit-width.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub n: u32,
    pub efficiency: PerMethod<f64>,
    /// Hybrid-over-LUT efficiency improvement factor, as reported.
    pub improve: f64,
    pub latency: PerMethod<u64>,
    /// Unit breakdowns exactly as reported, including the known erratum
    /// cells flagged in `notes`.
    pub breakdown: PerMethod<ResourceCount>,
    /// Hybrid split as (high lookup bits, low iterative bits).
    pub workloads: (u32, u32),
    pub notes: String,
}

const BUILTIN_CSV: &str = include_str!("../data/reference_methods.csv");

/// Bit-widths covered by the bundled data.
pub fn builtin_widths() -> Vec<u32> {
    builtin_rows().iter().map(|r| r.n).collect()
}

pub fn builtin_rows() -> Vec<ReferenceRow> {
    parse_rows(BUILTIN_CSV).expect("bundled reference data parses")
}

pub fn read_rows(path: &Path) -> Result<Vec<ReferenceRow>> {
    let text = std::fs::read_to_string(path)?;
    parse_rows(&text)
}

pub fn parse_rows(text: &str) -> Result<Vec<ReferenceRow>> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            // First non-comment line is the column header.
            saw_header = true;
            if line.starts_with('n') {
                continue;
            }
        }
        rows.push(parse_row(line, lineno + 1)?);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            what: "reference table",
            detail: "no data rows".into(),
        });
    }
    Ok(rows)
}

fn parse_row(line: &str, lineno: usize) -> Result<ReferenceRow> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 12 {
        return Err(Error::Parse {
            what: "reference table",
            detail: format!("line {lineno}: expected at least 12 fields, got {}", fields.len()),
        });
    }
    let bad = |what: &str, s: &str| Error::Parse {
        what: "reference table",
        detail: format!("line {lineno}: bad {what}: {s:?}"),
    };
    let num_u64 = |s: &str, what: &str| s.parse::<u64>().map_err(|_| bad(what, s));
    let num_f64 = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what, s));
    let breakdown = |s: &str| s.parse::<ResourceCount>();

    let workloads = fields[11]
        .split_once(':')
        .and_then(|(a, b)| Some((a.parse::<u32>().ok()?, b.parse::<u32>().ok()?)))
        .ok_or_else(|| bad("workload split", fields[11]))?;

    Ok(ReferenceRow {
        n: num_u64(fields[0], "bit-width")? as u32,
        efficiency: PerMethod {
            lut: num_f64(fields[1], "lut efficiency")?,
            iterative: num_f64(fields[2], "iterative efficiency")?,
            hybrid: num_f64(fields[3], "hybrid efficiency")?,
        },
        improve: num_f64(fields[4], "improvement factor")?,
        latency: PerMethod {
            lut: num_u64(fields[5], "lut latency")?,
            iterative: num_u64(fields[6], "iterative latency")?,
            hybrid: num_u64(fields[7], "hybrid latency")?,
        },
        breakdown: PerMethod {
            lut: breakdown(fields[8])?,
            iterative: breakdown(fields[9])?,
            hybrid: breakdown(fields[10])?,
        },
        workloads,
        notes: fields[12..].join(","),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_rows_parse() {
        let rows = builtin_rows();
        assert_eq!(rows.len(), 7);
        assert_eq!(
            builtin_widths(),
            vec![128, 256, 512, 1024, 2048, 4096, 8192]
        );
        let first = &rows[0];
        assert_eq!(first.efficiency.hybrid, 25040.06);
        assert_eq!(first.latency.hybrid, 20);
        assert_eq!(first.breakdown.lut, ResourceCount::new(16, 3, 1));
        assert_eq!(first.workloads, (113, 143));
        assert!(first.notes.contains("31"));
        let last = &rows[6];
        assert_eq!(last.improve, 3.00);
        assert_eq!(last.breakdown.hybrid, ResourceCount::new(2731, 1366, 1366));
        assert_eq!(last.workloads, (5461, 10923));
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(parse_rows("n,x\n1,2").is_err());
        assert!(parse_rows("# only comments\n").is_err());
    }
}
