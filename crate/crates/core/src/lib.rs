//! Bit-exact software models of three large-number modular-reduction
//! datapaths — BRAM lookup-table, shift-subtract iterative, and the hybrid
//! that splits one operand across both — plus the analytical latency/area
//! models and the Pareto design-space search built on top of them.
//!
//! Every engine is validated against [`modmath::mod_oracle`], the plain
//! arbitrary-precision remainder. Engine state (tables, geometries, cost
//! tables) is immutable after construction and reductions are pure
//! functions, so everything here is safe to share across threads.

pub mod dse;
pub mod error;
pub mod hybrid;
pub mod iterative;
pub mod lut;
pub mod modmath;
pub mod perf;
pub mod reference;
pub mod trace;

pub use error::{Error, Result};
pub use modmath::{mod_oracle, Modulus, Operand};
pub use trace::ReductionTrace;
