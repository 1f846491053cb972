//! Block-encodings from sparse oracles, with amplification.

mod amplify;
mod encoding;
mod stateprep;

pub use amplify::{
    amplitude_amplify, amplitude_multiply, column_sums, max_factor, multiply_isometries, AmplificationSpec,
    DeltaProfile, DELTA_FLOOR,
};
pub use encoding::{halmos_dilation, linear_combination, product, verify, BlockEncoding};
pub use stateprep::{build_stateprep, build_stateprep_with, pair_cost, AncillaLayout, StatePrepPair};
