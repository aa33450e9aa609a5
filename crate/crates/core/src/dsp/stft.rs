use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Overlap-add normalizers below this value are clamped. Inside the signal
/// the 50%-overlap Hann normalizer never drops below 0.5, so the clamp only
/// touches the first and last half frame.
const NORM_FLOOR: f64 = 0.1;

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Frames produced for `len` samples with tail padding.
pub fn num_frames(len: usize, frame_size: usize, hop: usize) -> usize {
    if len <= frame_size {
        1
    } else {
        (len - frame_size).div_ceil(hop) + 1
    }
}

/// Window and FFT plans for one `(frame_size, hop)` pair.
#[derive(Clone)]
pub struct StftPlan {
    frame_size: usize,
    hop: usize,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("frame_size", &self.frame_size)
            .field("hop", &self.hop)
            .finish()
    }
}

impl StftPlan {
    pub fn new(frame_size: usize, hop: usize) -> Result<Self> {
        if frame_size < 2 || !frame_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "frame size must be a power of two ≥ 2, got {frame_size}"
            )));
        }
        if hop == 0 || hop > frame_size {
            return Err(Error::Config(format!("hop must lie in 1..={frame_size}, got {hop}")));
        }
        let mut planner = FftPlanner::new();
        Ok(StftPlan {
            frame_size,
            hop,
            window: hann(frame_size),
            forward: planner.plan_fft_forward(frame_size),
            inverse: planner.plan_fft_inverse(frame_size),
        })
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.frame_size / 2 + 1
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    fn check_cola(&self) -> Result<()> {
        if self.hop * 2 != self.frame_size {
            return Err(Error::Config(format!(
                "overlap-add synthesis needs hop = frame_size/2 for the Hann window \
                 (frame {}, hop {})",
                self.frame_size, self.hop
            )));
        }
        Ok(())
    }

    pub fn analyze(&self, w: &Waveform) -> Result<Spectrogram> {
        if w.is_empty() {
            return Err(Error::Input("cannot analyze an empty signal".into()));
        }
        let n = self.frame_size;
        let frames = num_frames(w.len(), n, self.hop);
        let bins = self.bins();
        let mut magnitudes = Vec::with_capacity(frames * bins);
        let mut phases = Vec::with_capacity(frames * bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for t in 0..frames {
            let start = t * self.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                let s = w.samples.get(start + i).copied().unwrap_or(0.0);
                *b = Complex64::new(s * self.window[i], 0.0);
            }
            self.forward.process(&mut buf);
            for c in &buf[..bins] {
                magnitudes.push(c.norm());
                phases.push(c.im.atan2(c.re));
            }
        }
        Ok(Spectrogram {
            frames,
            bins,
            frame_size: n,
            hop: self.hop,
            length: w.len(),
            sample_rate: w.sample_rate,
            magnitudes,
            phases,
        })
    }

    /// Overlap-add synthesis of `frames` one-sided spectra, bin `(t, f)`
    /// supplied by `spectrum`. DC and Nyquist keep only their real part.
    pub(crate) fn synthesize(
        &self,
        frames: usize,
        length: usize,
        spectrum: impl Fn(usize, usize) -> Complex64,
    ) -> Result<Vec<f64>> {
        self.check_cola()?;
        let n = self.frame_size;
        let bins = self.bins();
        let padded = n + (frames - 1) * self.hop;
        let mut out = vec![0.0; padded];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for t in 0..frames {
            for f in 0..bins {
                let c = spectrum(t, f);
                if f == 0 || f == n / 2 {
                    buf[f] = Complex64::new(c.re, 0.0);
                } else {
                    buf[f] = c;
                    buf[n - f] = c.conj();
                }
            }
            self.inverse.process(&mut buf);
            let start = t * self.hop;
            for i in 0..n {
                out[start + i] += self.window[i] * buf[i].re / n as f64;
            }
        }
        let norm = self.normalizer(frames);
        for (o, d) in out.iter_mut().zip(&norm) {
            *o /= d;
        }
        out.truncate(length);
        Ok(out)
    }

    /// Clamped sum of squared windows at every padded sample.
    pub(crate) fn normalizer(&self, frames: usize) -> Vec<f64> {
        let n = self.frame_size;
        let mut den = vec![0.0; n + (frames - 1) * self.hop];
        for t in 0..frames {
            for i in 0..n {
                den[t * self.hop + i] += self.window[i] * self.window[i];
            }
        }
        den.iter_mut().for_each(|d| *d = d.max(NORM_FLOOR));
        den
    }

    pub(crate) fn forward_fft(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }
}

/// One-sided STFT of one channel split into magnitude and phase planes,
/// both `frames × bins` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    frames: usize,
    bins: usize,
    frame_size: usize,
    hop: usize,
    length: usize,
    sample_rate: u32,
    magnitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl Spectrogram {
    /// Builds a spectrogram from complex bins, taking the analysis metadata
    /// from `like`.
    pub fn from_complex(like: &Spectrogram, values: &[Complex64]) -> Result<Self> {
        if values.len() != like.frames * like.bins {
            return Err(Error::dim("from_complex", &[like.frames, like.bins], &[values.len()]));
        }
        Ok(Spectrogram {
            magnitudes: values.iter().map(|c| c.norm()).collect(),
            phases: values.iter().map(|c| c.im.atan2(c.re)).collect(),
            ..like.clone()
        })
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.magnitudes
            .iter()
            .zip(&self.phases)
            .map(|(&m, &p)| Complex64::from_polar(m, p))
            .collect()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Length in samples of the analyzed signal, before tail padding.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// True when `other` was analyzed with identical settings.
    pub fn same_layout(&self, other: &Spectrogram) -> bool {
        self.frames == other.frames
            && self.bins == other.bins
            && self.frame_size == other.frame_size
            && self.hop == other.hop
            && self.length == other.length
    }

    pub fn plan(&self) -> Result<StftPlan> {
        StftPlan::new(self.frame_size, self.hop)
    }
}

pub fn stft(w: &Waveform, frame_size: usize, hop: usize) -> Result<Spectrogram> {
    StftPlan::new(frame_size, hop)?.analyze(w)
}

pub fn istft(s: &Spectrogram) -> Result<Waveform> {
    let plan = s.plan()?;
    let samples = plan.synthesize(s.frames, s.length, |t, f| {
        let i = t * s.bins + f;
        Complex64::from_polar(s.magnitudes[i], s.phases[i])
    })?;
    Ok(Waveform::new(samples, s.sample_rate))
}
