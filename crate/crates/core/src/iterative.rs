//! Shift-subtract iterative reduction: align the modulus to the top of the
//! input, then one conditional subtraction per cycle while shifting back
//! down. Parameterized by input width so the same engine serves both the
//! standalone baseline (2n-bit input) and the hybrid's low workload
//! ((n+m)-bit input).

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::modmath::{Modulus, Operand};
use crate::trace::{event, ReductionTrace, TraceUnit};

#[cfg(debug_assertions)]
use crate::modmath::slice_value;

/// Width configuration: reducing a `w`-bit input against an n-bit modulus
/// takes `w - n` conditional subtractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterConfig {
    input_width: u32,
    modulus_width: u32,
}

impl IterConfig {
    pub fn new(input_width: u32, modulus_width: u32) -> Result<Self> {
        if input_width <= modulus_width {
            return Err(Error::ConfigMismatch(format!(
                "input width {input_width} must exceed the modulus width {modulus_width}"
            )));
        }
        Ok(Self {
            input_width,
            modulus_width,
        })
    }

    pub fn input_width(&self) -> u32 {
        self.input_width
    }

    pub fn modulus_width(&self) -> u32 {
        self.modulus_width
    }

    pub fn iterations(&self) -> u32 {
        self.input_width - self.modulus_width
    }
}

/// One loop step: subtract the aligned modulus if the state covers it. The
/// flag records whether the subtraction fired.
pub fn conditional_subtract_shift(state: &BigUint, shifted_m: &BigUint) -> (BigUint, bool) {
    assert!(!num_traits::Zero::is_zero(shifted_m), "aligned modulus must be positive");
    if state >= shifted_m {
        (state - shifted_m, true)
    } else {
        (state.clone(), false)
    }
}

/// Runs the subtraction loop without the final canonicalizing subtract.
/// The returned state is congruent to the input and below `2 * M`; per-step
/// flags record which subtractions fired.
pub fn run_iterations(a: &Operand, m: &Modulus, cfg: &IterConfig) -> Result<(BigUint, Vec<bool>)> {
    if a.width() != cfg.input_width() {
        return Err(Error::ConfigMismatch(format!(
            "operand is {} bits; configuration expects {}",
            a.width(),
            cfg.input_width()
        )));
    }
    if m.width() != cfg.modulus_width() {
        return Err(Error::ConfigMismatch(format!(
            "modulus is {} bits; configuration expects {}",
            m.width(),
            cfg.modulus_width()
        )));
    }
    let iterations = cfg.iterations();
    let mut state = a.value().clone();
    let mut shifted = m.value() << iterations;
    let mut fired = Vec::with_capacity(iterations as usize);
    for s in (1..=iterations).rev() {
        // Loop invariant: entering the step at shift s, state < 2 * (M << s).
        debug_assert!(state < (&shifted << 1u32), "invariant broken at shift {s}");
        // The aligned modulus has s zero low bits, so the subtraction leaves
        // the low s bits of the state untouched (the subtractor only spans
        // the upper n + 1 bits).
        #[cfg(debug_assertions)]
        let low_before = slice_value(&state, 0, s);
        if state >= shifted {
            state -= &shifted;
            fired.push(true);
        } else {
            fired.push(false);
        }
        debug_assert!(state < shifted, "state not below M << {s} after the step");
        #[cfg(debug_assertions)]
        debug_assert_eq!(slice_value(&state, 0, s), low_before);
        shifted >>= 1u32;
    }
    debug_assert!(state < (m.value() << 1u32));
    Ok((state, fired))
}

/// Full result of one iterative reduction, including the raw (pre-adjust)
/// state the loop terminates with.
#[derive(Debug, Clone)]
pub struct IterReduction {
    pub result: Operand,
    pub trace: ReductionTrace,
    /// State after the subtraction loop, in `[0, 2M)`.
    pub raw: BigUint,
    pub final_subtract_fired: bool,
}

pub fn reduce_iterative_full(a: &Operand, m: &Modulus, cfg: &IterConfig) -> Result<IterReduction> {
    let (raw, fired) = run_iterations(a, m, cfg)?;
    // The printed loop can terminate in [M, 2M); one more conditional
    // subtract canonicalizes. It shares the last cycle with the adjust
    // stage, keeping the loop latency at exactly `iterations`.
    let (value, final_fired) = conditional_subtract_shift(&raw, m.value());
    let iterations = u64::from(cfg.iterations());

    let mut events = vec![event(
        0,
        TraceUnit::Shift,
        format!("align: modulus << {}", cfg.iterations()),
    )];
    for (idx, f) in fired.iter().enumerate() {
        let shift = cfg.iterations() - idx as u32;
        events.push(event(
            idx as u64 + 1,
            TraceUnit::Subtract,
            format!(
                "shift {shift}: {}",
                if *f { "subtract" } else { "hold" }
            ),
        ));
    }
    events.push(event(
        iterations,
        TraceUnit::Adjust,
        format!(
            "final conditional subtract: {}",
            if final_fired { "subtract" } else { "hold" }
        ),
    ));
    let trace = ReductionTrace::new(events, iterations);

    Ok(IterReduction {
        result: Operand::new(value, m.width()).expect("canonical residue fits the modulus width"),
        trace,
        raw,
        final_subtract_fired: final_fired,
    })
}

/// Canonical iterative reduction: `w - n` loop subtractions plus a final
/// conditional subtract folded into the adjust stage.
pub fn reduce_iterative(
    a: &Operand,
    m: &Modulus,
    cfg: &IterConfig,
) -> Result<(Operand, ReductionTrace)> {
    let red = reduce_iterative_full(a, m, cfg)?;
    Ok((red.result, red.trace))
}
