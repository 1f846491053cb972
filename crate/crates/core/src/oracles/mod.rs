//! Sparse-access oracles with exact query ledgers.

mod fixed_point;
mod instance_file;
mod ledger;
mod sparse;

pub use fixed_point::{FixedPointFormat, FixedPointValue};
pub use instance_file::{read_instance, write_instance, InstanceMetadata};
pub use ledger::{Query, QueryCounts, QueryLedger};
pub use sparse::{build_oracles, OracleSet, SparseHermitian, Window};
