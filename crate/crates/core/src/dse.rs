//! Design-space search: enumerate every (m, width_tree) point of the hybrid
//! template under latency/area/throughput constraints and extract the
//! Pareto-optimal scheme list.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::perf::{
    area_efficiency, area_with_entry, latency_hybrid_core, resources_hybrid, CostEntry, CostTable,
    ResourceCount, ThroughputSpec,
};

/// User-supplied search constraints. Absent requirements are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraints {
    pub latency_req: Option<u64>,
    pub area_req: Option<u64>,
    pub tp: ThroughputSpec,
}

impl Constraints {
    pub fn unconstrained(tp: ThroughputSpec) -> Self {
        Self {
            latency_req: None,
            area_req: None,
            tp,
        }
    }
}

/// One evaluated design point. Latency and area always agree with a fresh
/// recomputation from (m, width_tree, tp).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheme {
    pub m: u32,
    pub width_tree: u32,
    pub latency_core: u64,
    pub latency_e2e: u64,
    pub resources: ResourceCount,
    pub area: u64,
}

/// Evaluates a single grid point against a calibrated cost table.
pub fn evaluate_scheme(
    n: u32,
    k: u32,
    m: u32,
    width_tree: u32,
    tp: ThroughputSpec,
    costs: &CostTable,
) -> Result<Scheme> {
    Ok(evaluate_with_entry(n, k, m, width_tree, tp, costs.entry(n)?))
}

fn evaluate_with_entry(
    n: u32,
    k: u32,
    m: u32,
    width_tree: u32,
    tp: ThroughputSpec,
    entry: CostEntry,
) -> Scheme {
    let latency_core = latency_hybrid_core(n, k, m, width_tree);
    let resources = resources_hybrid(n, k, m, width_tree, tp);
    Scheme {
        m,
        width_tree,
        latency_core,
        latency_e2e: latency_core + 4,
        resources,
        area: area_with_entry(&resources, entry),
    }
}

/// Aggregate outcome of a streamed exploration.
#[derive(Debug, Clone)]
pub struct ExploreOutcome {
    pub grid_points: u64,
    pub feasible: u64,
    /// Non-dominated feasible schemes, ascending latency.
    pub frontier: Vec<Scheme>,
}

/// Enumerates the full (m, width_tree) grid in deterministic order, feeding
/// every feasible scheme to `on_feasible` and maintaining the Pareto
/// frontier incrementally. Memory stays bounded by the frontier, so the
/// grid never has to be collected.
pub fn explore_stream<F>(
    n: u32,
    k: u32,
    constraints: &Constraints,
    costs: &CostTable,
    mut on_feasible: F,
) -> Result<ExploreOutcome>
where
    F: FnMut(&Scheme) -> Result<()>,
{
    let entry = costs.entry(n)?;
    let latency_cap = constraints.latency_req.unwrap_or(u64::MAX);
    let area_cap = constraints.area_req.unwrap_or(u64::MAX);

    // Core latency never exceeds n + 1, so min-area-per-latency fits a
    // direct-indexed table. Ties keep the first entry seen, which the
    // enumeration order makes the smallest (m, width_tree).
    let mut best: Vec<Option<(u64, u32, u32)>> = vec![None; n as usize + 3];
    let mut grid_points = 0u64;
    let mut feasible = 0u64;

    for m in 0..=n {
        for width_tree in 0..=(n - m) {
            grid_points += 1;
            let latency_core = latency_hybrid_core(n, k, m, width_tree);
            if latency_core > latency_cap {
                continue;
            }
            let resources = resources_hybrid(n, k, m, width_tree, constraints.tp);
            let area = area_with_entry(&resources, entry);
            if area > area_cap {
                continue;
            }
            feasible += 1;
            let scheme = Scheme {
                m,
                width_tree,
                latency_core,
                latency_e2e: latency_core + 4,
                resources,
                area,
            };
            on_feasible(&scheme)?;
            let slot = &mut best[latency_core as usize];
            if slot.map_or(true, |(a, _, _)| area < a) {
                *slot = Some((area, m, width_tree));
            }
        }
    }

    let mut frontier = Vec::new();
    let mut best_area = u64::MAX;
    for slot in best.iter().flatten() {
        let (area, m, width_tree) = *slot;
        if area < best_area {
            best_area = area;
            frontier.push(evaluate_with_entry(
                n,
                k,
                m,
                width_tree,
                constraints.tp,
                entry,
            ));
        }
    }

    Ok(ExploreOutcome {
        grid_points,
        feasible,
        frontier,
    })
}

/// Collects every feasible scheme in (m, width_tree) order. The feasible
/// set can be empty; that is a valid outcome, not an error.
pub fn search(n: u32, k: u32, constraints: &Constraints, costs: &CostTable) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    explore_stream(n, k, constraints, costs, |s| {
        out.push(*s);
        Ok(())
    })?;
    Ok(out)
}

/// Extracts the non-dominated subset under (latency down, area down):
/// `s` dominates `t` when `s.latency <= t.latency` and `s.area <= t.area`
/// with at least one strict. Ties on both axes keep the scheme with the
/// smallest m, then width_tree. Sort-then-sweep, O(S log S).
pub fn pareto(schemes: &[Scheme]) -> Vec<Scheme> {
    let mut sorted: Vec<&Scheme> = schemes.iter().collect();
    sorted.sort_by_key(|s| (s.latency_core, s.area, s.m, s.width_tree));
    let mut out: Vec<Scheme> = Vec::new();
    let mut best_area = u64::MAX;
    for s in sorted {
        if s.area < best_area {
            best_area = s.area;
            out.push(*s);
        }
    }
    out
}

/// One frontier entry of a throughput sweep.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub tp: ThroughputSpec,
    pub scheme: Scheme,
    pub efficiency: f64,
}

/// Runs search + Pareto extraction for each requested throughput and
/// annotates every frontier scheme with its area efficiency.
pub fn frontier_report(
    n: u32,
    k: u32,
    tps: &[ThroughputSpec],
    costs: &CostTable,
) -> Result<Vec<FrontierPoint>> {
    assert!(!tps.is_empty(), "throughput sweep must be non-empty");
    let mut out = Vec::new();
    for &tp in tps {
        let constraints = Constraints::unconstrained(tp);
        let outcome = explore_stream(n, k, &constraints, costs, |_| Ok(()))?;
        for scheme in outcome.frontier {
            out.push(FrontierPoint {
                tp,
                scheme,
                efficiency: area_efficiency(tp, scheme.area)?,
            });
        }
    }
    Ok(out)
}

pub const SCHEME_CSV_HEADER: &str =
    "m,width_tree,latency_core,latency_e2e,brams,adders,subtractors,area,efficiency,pareto_flag";

pub fn write_scheme_csv_header(w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{SCHEME_CSV_HEADER}")
}

pub fn write_scheme_row(
    w: &mut impl Write,
    s: &Scheme,
    efficiency: f64,
    pareto_flag: bool,
) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{:.6},{}",
        s.m,
        s.width_tree,
        s.latency_core,
        s.latency_e2e,
        s.resources.brams,
        s.resources.adders,
        s.resources.subtractors,
        s.area,
        efficiency,
        pareto_flag
    )
}

/// Parses a scheme CSV back into (scheme, efficiency, pareto flag) rows.
pub fn read_schemes_csv(r: impl BufRead) -> Result<Vec<(Scheme, f64, bool)>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == SCHEME_CSV_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Parse {
                what: "scheme csv",
                detail: format!("line {}: expected 10 fields, got {}", lineno + 1, fields.len()),
            });
        }
        let bad = |what: &str, s: &str| Error::Parse {
            what: "scheme csv",
            detail: format!("line {}: bad {what}: {s:?}", lineno + 1),
        };
        let u = |i: usize, what: &str| -> Result<u64> {
            fields[i].parse().map_err(|_| bad(what, fields[i]))
        };
        let scheme = Scheme {
            m: u(0, "m")? as u32,
            width_tree: u(1, "width_tree")? as u32,
            latency_core: u(2, "latency_core")?,
            latency_e2e: u(3, "latency_e2e")?,
            resources: ResourceCount::new(u(4, "brams")?, u(5, "adders")?, u(6, "subtractors")?),
            area: u(7, "area")?,
        };
        let efficiency: f64 = fields[8].parse().map_err(|_| bad("efficiency", fields[8]))?;
        let pareto_flag: bool = fields[9].parse().map_err(|_| bad("pareto_flag", fields[9]))?;
        out.push((scheme, efficiency, pareto_flag));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::CostEntry;

    fn costs_for(n: u32) -> CostTable {
        let mut t = CostTable::new();
        t.insert(
            n,
            CostEntry {
                bram: 512,
                adder: 768,
                subtractor: 768,
            },
        );
        t
    }

    #[test]
    fn search_counts_full_grid_for_n8() {
        let costs = costs_for(8);
        let c = Constraints::unconstrained(ThroughputSpec::MAX);
        let schemes = search(8, 2, &c, &costs).unwrap();
        assert_eq!(schemes.len(), 45); // sum over m of (8 - m + 1)
    }

    #[test]
    fn search_unsatisfiable_latency_is_empty() {
        let costs = costs_for(8);
        let c = Constraints {
            latency_req: Some(0),
            area_req: None,
            tp: ThroughputSpec::MAX,
        };
        assert!(search(8, 2, &c, &costs).unwrap().is_empty());
    }

    #[test]
    fn search_contains_balanced_scheme_for_n128() {
        let costs = CostTable::builtin();
        let c = Constraints::unconstrained(ThroughputSpec::MAX);
        let schemes = search(128, 8, &c, costs).unwrap();
        let balanced = schemes
            .iter()
            .find(|s| s.m == 15 && s.width_tree == 0)
            .expect("balanced scheme present");
        assert_eq!(balanced.resources, ResourceCount::new(15, 8, 8));
        assert_eq!(balanced.latency_core, 16);
        assert_eq!(balanced.latency_e2e, 20);
        assert_eq!(balanced.area, 19968);
    }

    #[test]
    fn search_requires_costs() {
        let costs = CostTable::new();
        let c = Constraints::unconstrained(ThroughputSpec::MAX);
        assert!(matches!(
            search(8, 2, &c, &costs),
            Err(Error::CalibrationRequired { n: 8 })
        ));
    }

    #[test]
    fn pareto_examples() {
        let costs = costs_for(8);
        let one = evaluate_scheme(8, 2, 1, 0, ThroughputSpec::MAX, &costs).unwrap();
        assert_eq!(pareto(&[one]), vec![one]);

        let mut a = one;
        a.latency_core = 10;
        a.area = 100;
        let mut b = one;
        b.latency_core = 12;
        b.area = 120;
        assert_eq!(pareto(&[b, a]), vec![a]);
    }

    #[test]
    fn pareto_matches_quadratic_filter() {
        let costs = costs_for(8);
        let c = Constraints::unconstrained(ThroughputSpec::MAX);
        let schemes = search(8, 2, &c, &costs).unwrap();
        let fast = pareto(&schemes);

        // Quadratic non-domination filter with the documented tie rule.
        let dominated = |s: &Scheme| {
            schemes.iter().any(|t| {
                t.latency_core <= s.latency_core
                    && t.area <= s.area
                    && (t.latency_core < s.latency_core || t.area < s.area)
            })
        };
        let mut slow: Vec<Scheme> = schemes.iter().copied().filter(|s| !dominated(s)).collect();
        slow.sort_by_key(|s| (s.latency_core, s.area, s.m, s.width_tree));
        slow.dedup_by_key(|s| (s.latency_core, s.area));
        assert_eq!(fast, slow);
    }

    #[test]
    fn explore_frontier_matches_pareto_of_search() {
        let costs = costs_for(12);
        for (lat, area) in [(None, None), (Some(8), None), (None, Some(6_000)), (Some(10), Some(12_000))]
        {
            let c = Constraints {
                latency_req: lat,
                area_req: area,
                tp: ThroughputSpec::MAX,
            };
            let outcome = explore_stream(12, 3, &c, &costs, |_| Ok(())).unwrap();
            let schemes = search(12, 3, &c, &costs).unwrap();
            assert_eq!(outcome.feasible, schemes.len() as u64);
            assert_eq!(outcome.frontier, pareto(&schemes));
        }
    }

    #[test]
    fn endpoint_schemes_match_the_baselines() {
        let costs = costs_for(16);
        let tp = ThroughputSpec::MAX;
        // m = 0, full-width tree: the pure lookup datapath minus its adjust
        // subtractor.
        let d = 16u32.div_ceil(4);
        let lut_like = evaluate_scheme(16, 4, 0, d, tp, &costs).unwrap();
        assert_eq!(
            lut_like.resources,
            ResourceCount::new(u64::from(d), u64::from(2 * d - 1), 0)
        );
        // m = n: the pure iterative datapath.
        let iter_like = evaluate_scheme(16, 4, 16, 0, tp, &costs).unwrap();
        assert_eq!(iter_like.resources, ResourceCount::new(0, 0, 8));
        assert_eq!(iter_like.latency_core, 16);
    }

    #[test]
    fn frontier_report_sweep_is_internally_non_dominated() {
        let costs = CostTable::builtin();
        let tps: Vec<ThroughputSpec> = ["1/16", "1/8", "1/4", "1/2"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let report = frontier_report(128, 8, &tps, costs).unwrap();
        for &tp in &tps {
            let points: Vec<&FrontierPoint> = report
                .iter()
                .filter(|p| p.tp == tp)
                .collect();
            assert!(!points.is_empty());
            for a in &points {
                for b in &points {
                    let dominates = a.scheme.latency_core <= b.scheme.latency_core
                        && a.scheme.area <= b.scheme.area
                        && (a.scheme.latency_core < b.scheme.latency_core
                            || a.scheme.area < b.scheme.area);
                    assert!(!dominates || std::ptr::eq(*a, *b));
                }
            }
        }
        // The balanced n = 128 design point evaluates to the reference
        // efficiency whenever it appears on the max-throughput frontier.
        for p in report.iter().filter(|p| p.tp == ThroughputSpec::MAX) {
            if p.scheme.m == 15 && p.scheme.width_tree == 0 {
                assert_eq!((p.efficiency * 100.0).round() / 100.0, 25040.06);
            }
        }
    }

    #[test]
    fn scheme_csv_round_trip() {
        let costs = costs_for(8);
        let c = Constraints::unconstrained(ThroughputSpec::MAX);
        let schemes = search(8, 2, &c, &costs).unwrap();
        let front = pareto(&schemes);
        let mut buf = Vec::new();
        write_scheme_csv_header(&mut buf).unwrap();
        for s in &schemes {
            let eff = area_efficiency(ThroughputSpec::MAX, s.area).unwrap();
            write_scheme_row(&mut buf, s, eff, front.contains(s)).unwrap();
        }
        let parsed = read_schemes_csv(io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(parsed.len(), schemes.len());
        for ((s, eff, flag), orig) in parsed.iter().zip(&schemes) {
            assert_eq!(s, orig);
            assert!((eff - area_efficiency(ThroughputSpec::MAX, s.area).unwrap()).abs() < 1e-3);
            assert_eq!(*flag, front.contains(orig));
        }
    }
}
