use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::numcore::Tensor;

/// Magnitude spectra of `k` channels sharing frame and bin counts, stored
/// `k × frames × bins` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiChannelSpectra {
    channels: usize,
    frames: usize,
    bins: usize,
    data: Vec<f64>,
}

impl MultiChannelSpectra {
    pub fn new(channels: usize, frames: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || frames == 0 || bins == 0 {
            return Err(Error::Input(format!(
                "spectra need at least one channel, frame and bin, got {channels}×{frames}×{bins}"
            )));
        }
        if data.len() != channels * frames * bins {
            return Err(Error::dim("spectra", &[channels, frames, bins], &[data.len()]));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input("magnitudes must be finite and nonnegative".into()));
        }
        Ok(MultiChannelSpectra {
            channels,
            frames,
            bins,
            data,
        })
    }

    pub fn from_spectrograms(specs: &[Spectrogram]) -> Result<Self> {
        let first = specs.first().ok_or_else(|| Error::Input("no channels given".into()))?;
        if let Some(bad) = specs.iter().find(|s| !s.same_layout(first)) {
            return Err(Error::dim(
                "spectra",
                &[first.frames(), first.bins()],
                &[bad.frames(), bad.bins()],
            ));
        }
        let mut data = Vec::with_capacity(specs.len() * first.frames() * first.bins());
        for s in specs {
            data.extend_from_slice(s.magnitudes());
        }
        Self::new(specs.len(), first.frames(), first.bins(), data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        let n = self.frames * self.bins;
        &self.data[i * n..(i + 1) * n]
    }

    /// All frames of all channels as a `(k·frames) × bins` matrix.
    pub fn as_rows(&self) -> Tensor {
        Tensor::from_parts(vec![self.channels * self.frames, self.bins], self.data.clone())
    }

    /// Channel mean as a `frames × bins` matrix (sum, then divide by `k`).
    pub fn averaged(&self) -> Tensor {
        let n = self.frames * self.bins;
        let mut acc = vec![0.0; n];
        for i in 0..self.channels {
            for (a, v) in acc.iter_mut().zip(self.channel(i)) {
                *a += v;
            }
        }
        let k = self.channels as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        Tensor::from_parts(vec![self.frames, self.bins], acc)
    }

    /// The listed channels, in the listed order.
    pub fn select(&self, order: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(order.len() * self.frames * self.bins);
        for &i in order {
            if i >= self.channels {
                return Err(Error::Input(format!(
                    "channel {i} out of range for {} channels",
                    self.channels
                )));
            }
            data.extend_from_slice(self.channel(i));
        }
        Self::new(order.len(), self.frames, self.bins, data)
    }

    /// Keeps only the listed frames of every channel.
    pub fn select_frames(&self, frames: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(self.channels * frames.len() * self.bins);
        for i in 0..self.channels {
            let ch = self.channel(i);
            for &t in frames {
                if t >= self.frames {
                    return Err(Error::Input(format!("frame {t} out of range")));
                }
                data.extend_from_slice(&ch[t * self.bins..(t + 1) * self.bins]);
            }
        }
        Self::new(self.channels, frames.len(), self.bins, data)
    }
}
