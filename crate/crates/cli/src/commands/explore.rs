use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use serde::Serialize;

use modred::dse::{
    explore_stream, frontier_report, write_scheme_csv_header, write_scheme_row, Constraints,
    Scheme,
};
use modred::lut::{derive_geometry, LutGeometry};
use modred::perf::{area_efficiency, ThroughputSpec};

use super::Context;

#[derive(Serialize)]
struct JsonScheme {
    m: u32,
    width_tree: u32,
    latency_core: u64,
    latency_e2e: u64,
    brams: u64,
    adders: u64,
    subtractors: u64,
    area: u64,
    efficiency: f64,
}

#[derive(Serialize)]
struct RunReport {
    n: u32,
    k: u32,
    tp: String,
    latency_req: Option<u64>,
    area_req: Option<u64>,
    capacity_bits: u64,
    cost_model: String,
    grid_points: u64,
    feasible: u64,
    pareto: Vec<JsonScheme>,
}

fn json_scheme(s: &Scheme, tp: ThroughputSpec) -> Result<JsonScheme> {
    Ok(JsonScheme {
        m: s.m,
        width_tree: s.width_tree,
        latency_core: s.latency_core,
        latency_e2e: s.latency_e2e,
        brams: s.resources.brams,
        adders: s.resources.adders,
        subtractors: s.resources.subtractors,
        area: s.area,
        efficiency: area_efficiency(tp, s.area)?,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    ctx: &Context,
    n: u32,
    k_override: Option<u32>,
    tp: &str,
    latency_req: Option<u64>,
    area_req: Option<u64>,
    tp_sweep: Option<&str>,
) -> Result<()> {
    let tp: ThroughputSpec = tp.parse()?;
    let geometry = match k_override {
        Some(k) => LutGeometry::with_k(n, ctx.capacity_bits, k)?,
        None => derive_geometry(n, ctx.capacity_bits)?,
    };
    let k = geometry.k();
    let (costs, cost_model) = ctx.costs_for(n)?;
    let constraints = Constraints {
        latency_req,
        area_req,
        tp,
    };

    let prefix = ctx
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("explore_n{n}")));
    let with_suffix = |suffix: &str| -> PathBuf {
        let mut name = prefix.file_name().map_or_else(
            || format!("explore_n{n}"),
            |f| f.to_string_lossy().into_owned(),
        );
        name.push_str(suffix);
        prefix.with_file_name(name)
    };
    let feasible_path = with_suffix("_feasible.csv");
    let pareto_path = with_suffix("_pareto.csv");
    let report_path = with_suffix("_run.json");

    // Pass 1: count and find the frontier without materializing the grid.
    let outcome = explore_stream(n, k, &constraints, &costs, |_| Ok(()))?;
    let frontier_keys: HashSet<(u32, u32)> = outcome
        .frontier
        .iter()
        .map(|s| (s.m, s.width_tree))
        .collect();

    // Pass 2: stream the feasible set to disk with Pareto flags.
    let mut feasible_csv = BufWriter::new(
        File::create(&feasible_path)
            .with_context(|| format!("creating {}", feasible_path.display()))?,
    );
    write_scheme_csv_header(&mut feasible_csv)?;
    explore_stream(n, k, &constraints, &costs, |s| {
        let eff = area_efficiency(tp, s.area)?;
        write_scheme_row(
            &mut feasible_csv,
            s,
            eff,
            frontier_keys.contains(&(s.m, s.width_tree)),
        )?;
        Ok(())
    })?;
    feasible_csv.flush()?;

    let mut pareto_csv = BufWriter::new(
        File::create(&pareto_path)
            .with_context(|| format!("creating {}", pareto_path.display()))?,
    );
    write_scheme_csv_header(&mut pareto_csv)?;
    for s in &outcome.frontier {
        write_scheme_row(&mut pareto_csv, s, area_efficiency(tp, s.area)?, true)?;
    }
    pareto_csv.flush()?;

    let report = RunReport {
        n,
        k,
        tp: tp.to_string(),
        latency_req,
        area_req,
        capacity_bits: ctx.capacity_bits,
        cost_model: cost_model.clone(),
        grid_points: outcome.grid_points,
        feasible: outcome.feasible,
        pareto: outcome
            .frontier
            .iter()
            .map(|s| json_scheme(s, tp))
            .collect::<Result<_>>()?,
    };
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("creating {}", report_path.display()))?;

    if let Some(sweep) = tp_sweep {
        let tps: Vec<ThroughputSpec> = sweep
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<modred::Result<_>>()?;
        let frontier_path = with_suffix("_frontier.csv");
        let mut w = BufWriter::new(
            File::create(&frontier_path)
                .with_context(|| format!("creating {}", frontier_path.display()))?,
        );
        writeln!(
            w,
            "tp,m,width_tree,latency_core,latency_e2e,brams,adders,subtractors,area,efficiency"
        )?;
        for p in frontier_report(n, k, &tps, &costs)? {
            let s = &p.scheme;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{:.6}",
                p.tp,
                s.m,
                s.width_tree,
                s.latency_core,
                s.latency_e2e,
                s.resources.brams,
                s.resources.adders,
                s.resources.subtractors,
                s.area,
                p.efficiency
            )?;
        }
        w.flush()?;
        eprintln!("wrote {}", frontier_path.display());
    }

    if ctx.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }

    println!("n = {n}, k = {k}, tp = {tp}");
    println!("cost model: {cost_model}");
    if let Some(l) = latency_req {
        println!("latency cap: {l} cycles");
    }
    if let Some(a) = area_req {
        println!("area cap: {a} LUT-equivalents");
    }
    println!("grid points: {}", outcome.grid_points);
    println!(
        "feasible schemes: {} -> {}",
        outcome.feasible,
        feasible_path.display()
    );
    println!(
        "pareto-optimal schemes: {} -> {}",
        outcome.frontier.len(),
        pareto_path.display()
    );
    println!("run report -> {}", report_path.display());
    if outcome.feasible == 0 {
        println!("warning: no feasible scheme satisfies the constraints");
        return Ok(());
    }
    if let Some(best) = report
        .pareto
        .iter()
        .max_by(|a, b| a.efficiency.total_cmp(&b.efficiency))
    {
        println!(
            "best efficiency: {:.6} Ops/cycle per 1e9 LUT-equivalents at (m={}, width_tree={})",
            best.efficiency, best.m, best.width_tree
        );
    }
    if let Some(fastest) = report.pareto.first() {
        println!(
            "best core latency: {} cycles at (m={}, width_tree={})",
            fastest.latency_core, fastest.m, fastest.width_tree
        );
    }
    Ok(())
}
