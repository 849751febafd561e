//! Cycle-annotated records of datapath activity. Each engine emits a trace
//! whose total cycle count equals the analytical latency model for the same
//! configuration, tying functional simulation to the performance model.

use std::fmt;

/// Functional unit an event is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceUnit {
    Lookup,
    TreeAdd,
    SerialAdd,
    Subtract,
    Shift,
    Fuse,
    Adjust,
}

impl fmt::Display for TraceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TraceUnit::Lookup => "lookup",
            TraceUnit::TreeAdd => "tree_add",
            TraceUnit::SerialAdd => "serial_add",
            TraceUnit::Subtract => "subtract",
            TraceUnit::Shift => "shift",
            TraceUnit::Fuse => "fuse",
            TraceUnit::Adjust => "adjust",
        };
        f.pad(name)
    }
}

#[derive(Debug, Clone)]
pub struct TraceEvent {
    pub cycle: u64,
    pub unit: TraceUnit,
    pub note: String,
}

/// Ordered event log with a model-derived total cycle count.
#[derive(Debug, Clone, Default)]
pub struct ReductionTrace {
    pub events: Vec<TraceEvent>,
    pub total_cycles: u64,
}

impl ReductionTrace {
    /// Sorts events into cycle order and pins the total. The last event must
    /// land on `total_cycles`.
    pub fn new(mut events: Vec<TraceEvent>, total_cycles: u64) -> Self {
        events.sort_by_key(|e| e.cycle);
        debug_assert!(
            events.last().map_or(true, |e| e.cycle == total_cycles),
            "last trace event at cycle {:?} does not land on total_cycles {}",
            events.last().map(|e| e.cycle),
            total_cycles
        );
        Self {
            events,
            total_cycles,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format!("{:>8}  {:<10}  {}\n", e.cycle, e.unit, e.note));
        }
        out.push_str(&format!("total cycles: {}\n", self.total_cycles));
        out
    }
}

pub(crate) fn event(cycle: u64, unit: TraceUnit, note: impl Into<String>) -> TraceEvent {
    TraceEvent {
        cycle,
        unit,
        note: note.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_sorted_and_total_pinned() {
        let t = ReductionTrace::new(
            vec![
                event(3, TraceUnit::Adjust, "late"),
                event(1, TraceUnit::Lookup, "early"),
            ],
            3,
        );
        assert_eq!(t.events[0].cycle, 1);
        assert_eq!(t.events[1].cycle, 3);
        assert_eq!(t.total_cycles, 3);
        assert!(t.render().contains("total cycles: 3"));
    }
}
