use anyhow::{bail, Result};
use serde::Serialize;

use modred::hybrid::{balanced_m, HybridEngine, HybridSplit};
use modred::iterative::{reduce_iterative_full, IterConfig};
use modred::lut::{derive_geometry, LutEngine, LutGeometry};
use modred::modmath::{Modulus, Operand};
use modred::trace::ReductionTrace;

use crate::{Method, ReduceArgs};

use super::Context;

#[derive(Serialize)]
struct JsonEvent<'a> {
    cycle: u64,
    unit: String,
    note: &'a str,
}

#[derive(Serialize)]
struct JsonReduction<'a> {
    method: &'a str,
    n: u32,
    result: String,
    total_cycles: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<Vec<JsonEvent<'a>>>,
}

pub fn run(ctx: &Context, args: &ReduceArgs, want_trace: bool) -> Result<()> {
    let n = args.n;
    let modulus = Modulus::from_hex(&args.m, n)?;
    let operand = Operand::from_hex(&args.a, 2 * n)?;

    let geometry = |k: Option<u32>| -> Result<LutGeometry> {
        Ok(match k {
            Some(k) => LutGeometry::with_k(n, ctx.capacity_bits, k)?,
            None => derive_geometry(n, ctx.capacity_bits)?,
        })
    };

    let (result, trace) = match args.method {
        Method::Lut => {
            if args.split_m.is_some() {
                bail!("--m applies to the hybrid method only");
            }
            let engine = LutEngine::new(modulus, geometry(args.k)?)?;
            let red = engine.reduce(&operand)?;
            (red.result, red.trace)
        }
        Method::Iter => {
            if args.k.is_some() || args.split_m.is_some() {
                bail!("--k and --m do not apply to the iterative method");
            }
            let cfg = IterConfig::new(2 * n, n)?;
            let red = reduce_iterative_full(&operand, &modulus, &cfg)?;
            (red.result, red.trace)
        }
        Method::Hybrid => {
            let geom = geometry(args.k)?;
            let m = args.split_m.unwrap_or_else(|| balanced_m(n, geom.k()));
            let split = HybridSplit::new(n, geom.k(), m)?;
            let engine = HybridEngine::new(modulus, split)?;
            let red = engine.reduce(&operand)?;
            (red.result, red.trace)
        }
    };

    if ctx.json {
        print_json(args, &result, &trace, want_trace)?;
    } else {
        println!("{}", result.to_hex());
        if want_trace {
            print!("{}", trace.render());
        }
    }
    Ok(())
}

fn print_json(
    args: &ReduceArgs,
    result: &Operand,
    trace: &ReductionTrace,
    want_trace: bool,
) -> Result<()> {
    let method = match args.method {
        Method::Lut => "lut",
        Method::Iter => "iter",
        Method::Hybrid => "hybrid",
    };
    let events = want_trace.then(|| {
        trace
            .events
            .iter()
            .map(|e| JsonEvent {
                cycle: e.cycle,
                unit: e.unit.to_string(),
                note: &e.note,
            })
            .collect()
    });
    let out = JsonReduction {
        method,
        n: args.n,
        result: result.to_hex(),
        total_cycles: trace.total_cycles,
        events,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
