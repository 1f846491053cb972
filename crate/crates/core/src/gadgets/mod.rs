//! Gate-level simulation of the fixed-point to amplitude conversion circuit.

mod amplitude;
mod circuit;
mod statevector;

pub use amplitude::{
    exhaustive_sweep, fixed_point_to_amplitude, gate_count, run_gadget_sparse, Gadget, GadgetGateBreakdown,
    GadgetLayout, GadgetRun, SweepSummary,
};
pub use circuit::{Circuit, Gate, GateCount};
pub use statevector::{QuantumState, SparseState, Statevector, MAX_QUBITS};
