//! Multi-view recurrent denoisers.
//!
//! The networks in this crate consume the magnitude spectra of `k` noisy
//! recordings of one event and predict a single clean magnitude spectrogram.
//! Their recurrence runs across channels (and, for the 2D variant, across
//! time as well), so the parameter shapes never depend on `k` and a model
//! trained on one channel count can be deployed on any other.
//!
//! Layout:
//!
//! * [`numcore`]: dense tensors and a reverse-mode tape.
//! * [`dsp`]: STFT analysis, overlap-add synthesis, WAV I/O.
//! * [`cells`]: dense layers, plain RNN and GRU cells.
//! * [`models`]: averaging RNN baseline, 1D MVN and 2D MVN.
//! * [`objectives`]: SDR-proxy training loss and SI-SDR.
//! * [`scenegen`]: synthetic static and dynamic multi-channel scenes.
//! * [`trainer`]: Adam, clipping, the training loop and checkpoints.
//! * [`experiments`]: channel-count sweeps and their CSV output.

pub mod cells;
pub mod dsp;
pub mod error;
pub mod experiments;
pub mod models;
pub mod numcore;
pub mod objectives;
pub mod scenegen;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};

/// Version string recorded into run directories and checkpoints.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
