//! Delay-estimation bound, EXIT analysis and performance metrics.

pub mod crlb;
pub mod exit;
pub mod metrics;

pub use crlb::{crlb, fisher_information, PulseModel, RrcPulse};
pub use exit::{
    default_grid, exit_curves, gaussian_prior_llrs, j_function, j_inverse, mutual_information, DecoderExit, DetectorExit, ExitChart,
    ExitComponent,
};
pub use metrics::{ber, bit_errors, delay_mse, detected_bits, sync_time, ErrorTally};
