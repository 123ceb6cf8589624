//! Iterative unlearning: MinNorm-OG and the loss-based baselines behind one
//! interface.

mod config;
mod run;
mod step;

pub use config::{Method, UnlearnConfig};
pub use run::{run_baseline, run_minnorm_og, run_unlearning, RunReport, Traces, UnlearnOutcome};
pub use step::{closed_form_delta, minnorm_og_step, ProjectionStep};
