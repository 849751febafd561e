use std::io::Write;

use anyhow::{Context as _, Result};
use serde::Serialize;

use modred::hybrid::balanced_m;
use modred::lut::derive_geometry;
use modred::perf::{
    area_efficiency, area_estimate, latency_hybrid_end_to_end, latency_iterative,
    latency_lut_based, resources_hybrid, resources_iterative_baseline, resources_lut_baseline,
    ResourceCount, ThroughputSpec,
};
use modred::reference::{builtin_rows, PerMethod, ReferenceRow};

use super::Context;

pub const TABLE_CSV_HEADER: &str = "n,eff_lut,eff_iter,eff_hybrid,improve,lat_lut,lat_iter,\
lat_hybrid,bd_lut,bd_iter,bd_hybrid,workloads,diff_eff,diff_lat,diff_bd,notes";

#[derive(Serialize)]
struct JsonRow {
    n: u32,
    eff_lut: f64,
    eff_iter: f64,
    eff_hybrid: f64,
    improve: f64,
    lat_lut: u64,
    lat_iter: u64,
    lat_hybrid: u64,
    bd_lut: String,
    bd_iter: String,
    bd_hybrid: String,
    workloads: String,
    diff_eff: String,
    diff_lat: String,
    diff_bd: String,
    notes: String,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn diff_breakdown(model: &ResourceCount, reported: &ResourceCount) -> String {
    if model == reported {
        return "=".into();
    }
    let mut parts = Vec::new();
    for (name, a, b) in [
        ("brams", model.brams, reported.brams),
        ("adders", model.adders, reported.adders),
        ("subtractors", model.subtractors, reported.subtractors),
    ] {
        if a != b {
            parts.push(format!("{name}:{a}!={b}"));
        }
    }
    parts.join(" ")
}

fn build_row(ctx: &Context, row: &ReferenceRow) -> Result<JsonRow> {
    let n = row.n;
    let (costs, _) = ctx.load_costs()?;
    let tp = ThroughputSpec::MAX;
    let k = derive_geometry(n, ctx.capacity_bits)?.k();
    let m = balanced_m(n, k);

    let breakdown = PerMethod {
        lut: resources_lut_baseline(n, k),
        iterative: resources_iterative_baseline(n, tp),
        hybrid: resources_hybrid(n, k, m, 0, tp),
    };
    let latency = PerMethod {
        lut: latency_lut_based(n, k),
        iterative: latency_iterative(n),
        hybrid: latency_hybrid_end_to_end(n, k, m, 0),
    };
    let eff = |rc: &ResourceCount| -> Result<f64> {
        let area = area_estimate(rc, &costs, n)?;
        Ok(area_efficiency(tp, area)?)
    };
    let efficiency = PerMethod {
        lut: eff(&breakdown.lut)?,
        iterative: eff(&breakdown.iterative)?,
        hybrid: eff(&breakdown.hybrid)?,
    };
    let improve = efficiency.hybrid / efficiency.lut;

    let dv = |model: f64, reference: f64| -> String {
        let delta = round2(round2(model) - reference);
        if delta == 0.0 {
            "0".into()
        } else {
            format!("{delta:+.2}")
        }
    };
    let diff_eff = format!(
        "{};{};{}",
        dv(efficiency.lut, row.efficiency.lut),
        dv(efficiency.iterative, row.efficiency.iterative),
        dv(efficiency.hybrid, row.efficiency.hybrid),
    );
    let diff_lat = format!(
        "{};{};{}",
        latency.lut as i64 - row.latency.lut as i64,
        latency.iterative as i64 - row.latency.iterative as i64,
        latency.hybrid as i64 - row.latency.hybrid as i64,
    );
    let diff_bd = format!(
        "{};{};{}",
        diff_breakdown(&breakdown.lut, &row.breakdown.lut),
        diff_breakdown(&breakdown.iterative, &row.breakdown.iterative),
        diff_breakdown(&breakdown.hybrid, &row.breakdown.hybrid),
    );

    Ok(JsonRow {
        n,
        eff_lut: round2(efficiency.lut),
        eff_iter: round2(efficiency.iterative),
        eff_hybrid: round2(efficiency.hybrid),
        improve: round2(improve),
        lat_lut: latency.lut,
        lat_iter: latency.iterative,
        lat_hybrid: latency.hybrid,
        bd_lut: breakdown.lut.to_string(),
        bd_iter: breakdown.iterative.to_string(),
        bd_hybrid: breakdown.hybrid.to_string(),
        workloads: format!("{}:{}", n - m, n + m),
        diff_eff,
        diff_lat,
        diff_bd,
        notes: row.notes.clone(),
    })
}

pub fn run(ctx: &Context) -> Result<()> {
    let rows: Vec<JsonRow> = builtin_rows()
        .iter()
        .map(|r| build_row(ctx, r))
        .collect::<Result<_>>()?;

    let mut out = String::new();
    if ctx.json {
        out.push_str(&serde_json::to_string_pretty(&rows)?);
        out.push('\n');
    } else {
        out.push_str(TABLE_CSV_HEADER);
        out.push('\n');
        for r in &rows {
            out.push_str(&format!(
                "{},{:.2},{:.2},{:.2},{:.2},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.eff_lut,
                r.eff_iter,
                r.eff_hybrid,
                r.improve,
                r.lat_lut,
                r.lat_iter,
                r.lat_hybrid,
                r.bd_lut,
                r.bd_iter,
                r.bd_hybrid,
                r.workloads,
                r.diff_eff,
                r.diff_lat,
                r.diff_bd,
                r.notes,
            ));
        }
    }

    match &ctx.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            file.write_all(out.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}
