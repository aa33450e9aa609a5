//! Evaluation protocols and their result files.
//!
//! A sweep scores trained models over a range of channel counts on a fixed
//! list of scene seeds. The static sweep presents SNR ladders in increasing
//! and decreasing order; the dynamic sweep uses moving-noise scenes.

mod desk;
mod results;
mod sweep;

pub use desk::DeskConfig;
pub use results::{emit_csv, parse_csv, spearman, to_csv, SceneScore, SweepResult, CSV_HEADER};
pub use sweep::{dynamic_sweep, static_sweep, sweep, Entrant};

#[cfg(test)]
mod tests;
