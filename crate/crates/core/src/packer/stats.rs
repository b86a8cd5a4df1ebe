use serde::{Deserialize, Serialize};

use crate::pst::PstStats;

/// Wall-clock measurements in seconds. Kept apart from the counters so the
/// rest of a report diffs cleanly between runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_time_packing: f64,
    /// Tree operations: descending, lookups, inserts and finalization.
    pub pst_time: f64,
    /// Building the LCN and external-connectivity keys the tree operates on.
    pub signature_time: f64,
    pub router_time: f64,
    /// Router time spent on checks that came back illegal.
    pub router_time_failed: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PackingStats {
    pub legality_checks: u64,
    pub router_calls: u64,
    pub router_calls_skipped: u64,
    pub router_iterations_total: u64,
    pub speculative_successes: u64,
    pub speculative_failures: u64,
    pub detailed_clusters: u64,
    pub detailed_route_failures: u64,
    pub shadow_checks: u64,
    pub shadow_mismatches: u64,
    pub max_router_calls_per_cluster: u64,
    pub router_calls_per_cluster: Vec<u64>,
    pub pst: PstStats,
    pub pst_bytes: u64,
    /// Not serialized with the counters; reports carry it separately.
    #[serde(skip)]
    pub timings: Timings,
}

impl PackingStats {
    /// Copy with the timing fields zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> Self {
        PackingStats { timings: Timings::default(), ..self.clone() }
    }
}
