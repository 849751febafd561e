pub mod calibrate;
pub mod explore;
pub mod reduce;
pub mod tables;

use std::path::PathBuf;

use anyhow::{Context as _, Result};
use modred::perf::{CostProvenance, CostTable};

/// Global options shared by every command.
pub struct Context {
    pub capacity_bits: u64,
    pub cost_table: Option<PathBuf>,
    pub json: bool,
    pub out: Option<PathBuf>,
}

impl Context {
    /// Loads the user cost table, or falls back to the built-in calibrated
    /// one. Returns the table plus a description of its source.
    pub fn load_costs(&self) -> Result<(CostTable, String)> {
        match &self.cost_table {
            Some(path) => {
                let table = CostTable::load(path)
                    .with_context(|| format!("loading cost table {}", path.display()))?;
                Ok((table, format!("loaded from {}", path.display())))
            }
            None => Ok((CostTable::builtin().clone(), "built-in calibration".into())),
        }
    }

    /// Resolves costs for one width. A user-supplied table must carry the
    /// width; the built-in table synthesizes missing widths from the nearest
    /// calibrated one so exploratory runs at non-standard widths work.
    pub fn costs_for(&self, n: u32) -> Result<(CostTable, String)> {
        let (mut table, mut source) = self.load_costs()?;
        if self.cost_table.is_some() {
            table.entry(n)?; // strict: the explicit table must cover n
            return Ok((table, source));
        }
        let (entry, provenance) = table.entry_or_scaled(n)?;
        if let CostProvenance::ScaledFrom(from) = provenance {
            table.insert(n, entry);
            source = format!("{source}, scaled from the n = {from} entry");
        }
        Ok((table, source))
    }
}
