//! Logic-block packing with memoized intracluster legality checks.
//!
//! A netlist of LUT and FF atoms is grouped into molecules and packed,
//! seed by seed, into clusters of a logic-block architecture. Every
//! candidate cluster must route through the block's local interconnect;
//! the packing signature tree remembers the verdicts so that a cluster
//! built the same way as an earlier one never needs the router again.

pub mod arch;
pub mod fixtures;
pub mod kind;
pub mod netlist;
pub mod packer;
pub mod pst;
pub mod router;
