//! Analytical performance model: per-method cycle latencies, resource
//! counting with throughput replication, LUT-equivalent area estimation, and
//! cost-table calibration against the bundled reference measurements.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::hybrid::balanced_m;
use crate::lut::derive_geometry;
use crate::reference::ReferenceRow;

/// Default BRAM capacity in bits (a 36k-bit block).
pub const DEFAULT_CAPACITY_BITS: u64 = 36864;

/// Completed reductions per cycle, kept as an exact rational. The table
/// lookup takes two cycles, so a single datapath tops out at 1/2 Ops/cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThroughputSpec {
    num: u64,
    den: u64,
}

impl ThroughputSpec {
    pub const MAX: ThroughputSpec = ThroughputSpec { num: 1, den: 2 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Parse {
                what: "throughput",
                detail: "throughput must be positive".into(),
            });
        }
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        if 2 * num > den {
            return Err(Error::Parse {
                what: "throughput",
                detail: format!("{num}/{den} exceeds the 1/2 Ops/cycle upper bound"),
            });
        }
        Ok(Self { num, den })
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `ceil(x * tp)` — replicated hardware units are indivisible.
    pub fn ceil_mul(&self, x: u64) -> u64 {
        let prod = u128::from(x) * u128::from(self.num);
        prod.div_ceil(u128::from(self.den)) as u64
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }
}

impl fmt::Display for ThroughputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for ThroughputSpec {
    type Err = Error;

    /// Accepts `a/b` fractions and exact decimal strings such as `0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse::<u64>().map_err(|e| Error::Parse {
                what: "throughput",
                detail: e.to_string(),
            })?;
            let den = b.trim().parse::<u64>().map_err(|e| Error::Parse {
                what: "throughput",
                detail: e.to_string(),
            })?;
            return Self::new(num, den);
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if frac_part.len() > 18 || int_part.len() > 18 {
            return Err(Error::Parse {
                what: "throughput",
                detail: format!("too many digits in {s:?}"),
            });
        }
        let int_val: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|e: std::num::ParseIntError| Error::Parse {
                what: "throughput",
                detail: e.to_string(),
            })?
        };
        let frac_val: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|e: std::num::ParseIntError| Error::Parse {
                what: "throughput",
                detail: e.to_string(),
            })?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        Self::new(int_val * den + frac_val, den)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Counted hardware units of one design point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ResourceCount {
    pub brams: u64,
    pub adders: u64,
    pub subtractors: u64,
}

impl ResourceCount {
    pub fn new(brams: u64, adders: u64, subtractors: u64) -> Self {
        Self {
            brams,
            adders,
            subtractors,
        }
    }
}

impl fmt::Display for ResourceCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{};{}", self.brams, self.adders, self.subtractors)
    }
}

impl FromStr for ResourceCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';').map(|p| p.trim().parse::<u64>());
        let mut next = |name: &'static str| {
            parts
                .next()
                .and_then(|r| r.ok())
                .ok_or_else(|| Error::Parse {
                    what: "resource breakdown",
                    detail: format!("missing or non-numeric {name} in {s:?}"),
                })
        };
        let brams = next("bram count")?;
        let adders = next("adder count")?;
        let subtractors = next("subtractor count")?;
        Ok(Self {
            brams,
            adders,
            subtractors,
        })
    }
}

/// `ceil(log2(x))` with `ceil_log2(1) = 0`.
pub(crate) fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        u64::from((x - 1).ilog2()) + 1
    }
}

/// Pipeline depth of a `w`-input adder tree; no tree means no tree latency.
pub fn tree_depth(w: u64) -> u64 {
    if w <= 1 {
        0
    } else {
        ceil_log2(w)
    }
}

/// Shift-subtract reduction of a 2n-bit input: one conditional subtraction
/// per cycle over n alignments.
pub fn latency_iterative(n: u32) -> u64 {
    u64::from(n)
}

/// Pure LUT datapath: parallel lookup, a (d+1)-input adder tree, the second
/// round lookup, its add, and the subtract adjust.
pub fn latency_lut_based(n: u32, k: u32) -> u64 {
    let d = u64::from(n.div_ceil(k));
    1 + (ceil_log2(d) + 1) + 1 + 1 + 1
}

/// Hybrid core latency: the lookup path (one lookup cycle, then serial
/// accumulation alongside an optional small tree) raced against the m-cycle
/// iterative path.
pub fn latency_hybrid_core(n: u32, k: u32, m: u32, width_tree: u32) -> u64 {
    debug_assert!(m <= n);
    let d = i64::from((n - m).div_ceil(k));
    let serial = d - i64::from(width_tree);
    let left = 1 + serial.max(tree_depth(u64::from(width_tree)) as i64);
    (left.max(i64::from(m))) as u64
}

/// Core latency plus the fixed tail: second-round lookup, fusion add, and
/// two adjust cycles.
pub fn latency_hybrid_end_to_end(n: u32, k: u32, m: u32, width_tree: u32) -> u64 {
    latency_hybrid_core(n, k, m, width_tree) + 4
}

/// Unit counts for a hybrid design point. Serial adders and subtractors are
/// replicated `ceil(count * tp)` times to sustain the requested throughput;
/// the tree (when present) is shared.
pub fn resources_hybrid(
    n: u32,
    k: u32,
    m: u32,
    width_tree: u32,
    tp: ThroughputSpec,
) -> ResourceCount {
    debug_assert!(m <= n);
    let d = u64::from((n - m).div_ceil(k));
    let wt = u64::from(width_tree);
    let tree_adders = if wt == 0 { 0 } else { 2 * wt - 1 };
    let serial_adders = tp.ceil_mul(d.saturating_sub(wt));
    ResourceCount {
        brams: d,
        adders: tree_adders + serial_adders,
        subtractors: tp.ceil_mul(u64::from(m)),
    }
}

/// Pure LUT baseline: d BRAMs, a full-width tree, one adjust subtractor.
pub fn resources_lut_baseline(n: u32, k: u32) -> ResourceCount {
    let d = u64::from(n.div_ceil(k));
    ResourceCount {
        brams: d,
        adders: 2 * d - 1,
        subtractors: 1,
    }
}

/// Pure iterative baseline: subtractors only, replicated for throughput.
pub fn resources_iterative_baseline(n: u32, tp: ThroughputSpec) -> ResourceCount {
    ResourceCount {
        brams: 0,
        adders: 0,
        subtractors: tp.ceil_mul(u64::from(n)),
    }
}

/// Per-unit LUT-equivalent areas for one bit-width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostEntry {
    pub bram: u64,
    pub adder: u64,
    pub subtractor: u64,
}

/// Where a cost entry came from when resolving a width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostProvenance {
    Exact,
    ScaledFrom(u32),
}

/// LUT-equivalent unit areas keyed by bit-width.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostTable {
    entries: BTreeMap<u32, CostEntry>,
}

impl CostTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: u32, entry: CostEntry) {
        self.entries.insert(n, entry);
    }

    pub fn entry(&self, n: u32) -> Result<CostEntry> {
        self.entries
            .get(&n)
            .copied()
            .ok_or(Error::CalibrationRequired { n })
    }

    pub fn widths(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Default table calibrated from the bundled reference measurements.
    pub fn builtin() -> &'static CostTable {
        static BUILTIN: OnceLock<CostTable> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let rows = crate::reference::builtin_rows();
            let (table, _) = calibrate_cost_table(&rows)
                .expect("bundled reference rows must calibrate");
            table
        })
    }

    /// Resolves an entry for `n`, synthesizing one from the nearest
    /// calibrated width when absent: datapath unit costs scale with the bit
    /// width they process, BRAM cost is per block. Intended for exploratory
    /// use at widths outside the calibrated set.
    pub fn entry_or_scaled(&self, n: u32) -> Result<(CostEntry, CostProvenance)> {
        if let Ok(e) = self.entry(n) {
            return Ok((e, CostProvenance::Exact));
        }
        let nearest = self
            .entries
            .keys()
            .copied()
            .min_by_key(|w| (w.abs_diff(n), *w))
            .ok_or(Error::CalibrationRequired { n })?;
        let base = self.entries[&nearest];
        let scale = |c: u64| -> u64 {
            let scaled = (u128::from(c) * u128::from(n)).div_ceil(u128::from(nearest));
            (scaled as u64).max(1)
        };
        Ok((
            CostEntry {
                bram: base.bram,
                adder: scale(base.adder),
                subtractor: scale(base.subtractor),
            },
            CostProvenance::ScaledFrom(nearest),
        ))
    }

    /// One record per width: `n,area_bram,area_adder,area_subtractor`.
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "# cost table: LUT-equivalent unit areas per bit-width")?;
        writeln!(w, "# n,area_bram,area_adder,area_subtractor")?;
        for (n, e) in &self.entries {
            writeln!(w, "{},{},{},{}", n, e.bram, e.adder, e.subtractor)?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut table = CostTable::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    what: "cost table",
                    detail: format!("line {}: expected 4 fields, got {}", lineno + 1, fields.len()),
                });
            }
            let parse = |s: &str, what: &str| -> Result<u64> {
                s.parse().map_err(|_| Error::Parse {
                    what: "cost table",
                    detail: format!("line {}: non-numeric {what}: {s:?}", lineno + 1),
                })
            };
            let n = parse(fields[0], "bit-width")? as u32;
            table.insert(
                n,
                CostEntry {
                    bram: parse(fields[1], "bram area")?,
                    adder: parse(fields[2], "adder area")?,
                    subtractor: parse(fields[3], "subtractor area")?,
                },
            );
        }
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(io::BufReader::new(file))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_to(&mut file)?;
        Ok(())
    }
}

/// Total LUT-equivalent area of a counted design at width `n`.
pub fn area_estimate(rc: &ResourceCount, costs: &CostTable, n: u32) -> Result<u64> {
    let e = costs.entry(n)?;
    Ok(area_with_entry(rc, e))
}

pub(crate) fn area_with_entry(rc: &ResourceCount, e: CostEntry) -> u64 {
    let total = u128::from(rc.brams) * u128::from(e.bram)
        + u128::from(rc.adders) * u128::from(e.adder)
        + u128::from(rc.subtractors) * u128::from(e.subtractor);
    u64::try_from(total).expect("area fits in u64")
}

/// Ops/cycle per 10^9 LUT-equivalents.
pub fn area_efficiency(tp: ThroughputSpec, area: u64) -> Result<f64> {
    if area == 0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(tp.as_f64() / area as f64 * 1e9)
}

/// Outcome of fitting one reference row.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub n: u32,
    /// Raw solution of the per-row linear system (bram, adder, subtractor).
    pub solved: [f64; 3],
    pub entry: CostEntry,
    /// Worst relative error when the rounded entry reproduces the row's
    /// three reference efficiencies.
    pub residual_rel: f64,
    pub used_fallback: bool,
}

/// Recovers per-width unit areas from reference efficiencies.
///
/// Each row gives three method efficiencies; together with the model's unit
/// counts they form a 3x3 linear system in (bram, adder, subtractor) areas.
/// Rows whose exact solution goes non-positive — the coarse rounding of the
/// small reference efficiencies can make the system inconsistent — fall back
/// to a least-squares fit that ties adder and subtractor cost and clamps the
/// BRAM cost non-negative. Residuals are reported either way.
pub fn calibrate_cost_table(rows: &[ReferenceRow]) -> Result<(CostTable, Vec<CalibrationReport>)> {
    let mut table = CostTable::new();
    let mut reports = Vec::with_capacity(rows.len());
    for row in rows {
        let report = calibrate_row(row)?;
        table.insert(row.n, report.entry);
        reports.push(report);
    }
    Ok((table, reports))
}

fn calibrate_row(row: &ReferenceRow) -> Result<CalibrationReport> {
    let n = row.n;
    let bad = |reason: String| Error::CalibrationFailed { n, reason };
    for eff in [
        row.efficiency.lut,
        row.efficiency.iterative,
        row.efficiency.hybrid,
    ] {
        if !(eff > 0.0) {
            return Err(bad(format!("non-positive efficiency {eff}")));
        }
    }

    let geom = derive_geometry(n, DEFAULT_CAPACITY_BITS)?;
    let k = geom.k();
    let m = balanced_m(n, k);
    let tp = ThroughputSpec::MAX;
    let counts = [
        resources_lut_baseline(n, k),
        resources_iterative_baseline(n, tp),
        resources_hybrid(n, k, m, 0, tp),
    ];
    let target_ops = tp.as_f64() * 1e9;
    let areas = [
        target_ops / row.efficiency.lut,
        target_ops / row.efficiency.iterative,
        target_ops / row.efficiency.hybrid,
    ];

    let mat = [
        [
            counts[0].brams as f64,
            counts[0].adders as f64,
            counts[0].subtractors as f64,
        ],
        [
            counts[1].brams as f64,
            counts[1].adders as f64,
            counts[1].subtractors as f64,
        ],
        [
            counts[2].brams as f64,
            counts[2].adders as f64,
            counts[2].subtractors as f64,
        ],
    ];

    let solved = solve3(mat, areas).ok_or_else(|| bad("singular unit-count system".into()))?;

    let (entry, used_fallback) = if solved.iter().all(|&v| v >= 0.5) {
        (
            CostEntry {
                bram: solved[0].round() as u64,
                adder: solved[1].round() as u64,
                subtractor: solved[2].round() as u64,
            },
            false,
        )
    } else {
        // Tie adder and subtractor areas and fit (bram, unit) by least
        // squares over the three rows; clamp the BRAM area at one
        // LUT-equivalent if the fit still drives it negative.
        let alpha: Vec<f64> = mat.iter().map(|r| r[0]).collect();
        let beta: Vec<f64> = mat.iter().map(|r| r[1] + r[2]).collect();
        let (saa, sab, sbb, say, sby) = alpha.iter().zip(&beta).zip(&areas).fold(
            (0.0, 0.0, 0.0, 0.0, 0.0),
            |(saa, sab, sbb, say, sby), ((&a, &b), &y)| {
                (
                    saa + a * a,
                    sab + a * b,
                    sbb + b * b,
                    say + a * y,
                    sby + b * y,
                )
            },
        );
        let det = saa * sbb - sab * sab;
        if det.abs() < f64::EPSILON * saa.max(sbb) {
            return Err(bad("degenerate least-squares system".into()));
        }
        let mut x = (say * sbb - sby * sab) / det;
        let mut w = (saa * sby - sab * say) / det;
        if x < 1.0 {
            x = 1.0;
            w = alpha
                .iter()
                .zip(&beta)
                .zip(&areas)
                .map(|((&a, &b), &y)| b * (y - a * x))
                .sum::<f64>()
                / sbb;
        }
        if w < 1.0 {
            return Err(bad(format!("fit drives unit areas non-positive (unit = {w:.3})")));
        }
        (
            CostEntry {
                bram: x.round() as u64,
                adder: w.round() as u64,
                subtractor: w.round() as u64,
            },
            true,
        )
    };

    if entry.bram == 0 || entry.adder == 0 || entry.subtractor == 0 {
        return Err(bad(format!("zero unit area after rounding: {entry:?}")));
    }

    let refs = [
        row.efficiency.lut,
        row.efficiency.iterative,
        row.efficiency.hybrid,
    ];
    let mut residual_rel: f64 = 0.0;
    for (rc, eff_ref) in counts.iter().zip(refs) {
        let eff_model = target_ops / area_with_entry(rc, entry) as f64;
        residual_rel = residual_rel.max((eff_model - eff_ref).abs() / eff_ref);
    }

    Ok(CalibrationReport {
        n,
        solved,
        entry,
        residual_rel,
        used_fallback,
    })
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = det3(m);
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .powi(3);
    if det.abs() < 1e-12 * scale.max(1.0) {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][col] = b[r];
        }
        *slot = det3(mc) / det;
    }
    Some(out)
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
