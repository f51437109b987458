//! Gaussian-process surrogate over band masks and the expected-improvement
//! optimisation loop.

mod acquisition;
mod bo;
mod kernel;
mod model;
pub mod trace;

pub use acquisition::{
    ei_closed_form, ei_monte_carlo, enumerate_masks, erf, expected_improvement, norm_cdf, norm_pdf, propose_next,
    McEstimate, SearchStrategy, EXHAUSTIVE_MAX_BANDS, HILL_CLIMB_RESTARTS,
};
pub use bo::{bayes_opt_loop, BoOptions, BoOutcome};
pub use kernel::{kernel_matern52, kernel_matrix, mask_distance, matern52, GpParams};
pub use model::{GPModel, Observation, INITIAL_JITTER, MAX_JITTER};
pub use trace::{append_trace, read_trace, write_trace, TraceRecord};
