//! The three denoisers.
//!
//! All share one parameter layout: a softplus front dense layer applied to
//! every magnitude frame of every channel, a recurrent cell, and a softplus
//! back dense layer that regresses the cell's state onto a magnitude frame.
//! They differ only in how the cell is unrolled:
//!
//! * averaging RNN: channels are averaged first, then the cell runs over time;
//! * 1D MVN: at every frame the cell runs over channels from a zero state;
//! * 2D MVN: the cell runs over channels within a frame, and the last
//!   channel's state seeds the first channel of the next frame.
//!
//! The prediction for frame `j` always comes from the state after the last
//! channel. None of the parameter shapes involve the channel count or the
//! number of frames.

mod config;
mod forward;
mod spectra;

pub use config::{ModelConfig, Variant};
pub use forward::{forward_avg_rnn, forward_mvn1d, forward_mvn2d, forward_time_rnn, Model};
pub use spectra::MultiChannelSpectra;
