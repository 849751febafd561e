use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;

use modred::perf::calibrate_cost_table;
use modred::reference::{builtin_rows, read_rows};

use super::Context;

#[derive(Serialize)]
struct JsonReport {
    n: u32,
    solved_bram: f64,
    solved_adder: f64,
    solved_subtractor: f64,
    area_bram: u64,
    area_adder: u64,
    area_subtractor: u64,
    residual_rel: f64,
    used_fallback: bool,
}

pub fn run(ctx: &Context, data: Option<&Path>) -> Result<()> {
    let rows = match data {
        Some(path) => {
            read_rows(path).with_context(|| format!("loading reference rows {}", path.display()))?
        }
        None => builtin_rows(),
    };
    let (table, reports) = calibrate_cost_table(&rows)?;

    let out_path = ctx
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("cost_table.csv"));
    let mut file = std::fs::File::create(&out_path)
        .with_context(|| format!("creating {}", out_path.display()))?;
    for r in &reports {
        writeln!(
            file,
            "# n={} residual {:.6}{}",
            r.n,
            r.residual_rel,
            if r.used_fallback {
                " (tied-unit least-squares fallback)"
            } else {
                ""
            }
        )?;
    }
    table.write_to(&mut file)?;
    eprintln!("wrote {}", out_path.display());

    let json_reports: Vec<JsonReport> = reports
        .iter()
        .map(|r| JsonReport {
            n: r.n,
            solved_bram: r.solved[0],
            solved_adder: r.solved[1],
            solved_subtractor: r.solved[2],
            area_bram: r.entry.bram,
            area_adder: r.entry.adder,
            area_subtractor: r.entry.subtractor,
            residual_rel: r.residual_rel,
            used_fallback: r.used_fallback,
        })
        .collect();

    if ctx.json {
        println!("{}", serde_json::to_string_pretty(&json_reports)?);
    } else {
        println!("n,area_bram,area_adder,area_subtractor,residual,fallback");
        for r in &json_reports {
            println!(
                "{},{},{},{},{:.6},{}",
                r.n, r.area_bram, r.area_adder, r.area_subtractor, r.residual_rel, r.used_fallback
            );
        }
    }
    Ok(())
}
