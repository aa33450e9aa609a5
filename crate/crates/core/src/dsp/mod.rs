//! Time/frequency plumbing around the networks.
//!
//! Analysis uses a periodic Hann window with tail zero-padding; synthesis is
//! weighted overlap-add with the same window, normalized by the summed
//! squared window. The networks see only magnitudes; [`recombine`] puts a
//! predicted magnitude spectrogram back together with a channel's phase.

mod recombine;
mod stft;
mod wav;

pub use recombine::{recombine, recombine_on_tape, Recombine};
pub use stft::{hann, istft, num_frames, stft, Spectrogram, StftPlan};
pub use wav::{read_wav, write_wav};

/// A mono real signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Waveform { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            (self.energy() / self.samples.len() as f64).sqrt()
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}
