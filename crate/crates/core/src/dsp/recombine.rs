use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::dsp::{Spectrogram, StftPlan, Waveform};
use crate::error::{Error, Result};
use crate::numcore::{Function, Tape, Tensor, Var};

/// Differentiable synthesis of a magnitude plane with a fixed phase plane.
///
/// For fixed phase the map from magnitudes to samples is linear, so the
/// backward pass is its adjoint: window the upstream gradient frame by
/// frame, take a forward FFT, and project onto each bin's phase.
pub struct Recombine {
    plan: StftPlan,
    phases: Vec<f64>,
    frames: usize,
    bins: usize,
    length: usize,
}

impl Recombine {
    pub fn new(phase_source: &Spectrogram) -> Result<Self> {
        Ok(Recombine {
            plan: phase_source.plan()?,
            phases: phase_source.phases().to_vec(),
            frames: phase_source.frames(),
            bins: phase_source.bins(),
            length: phase_source.length(),
        })
    }

    pub fn apply(&self, magnitudes: &[f64]) -> Result<Vec<f64>> {
        if magnitudes.len() != self.frames * self.bins {
            return Err(Error::dim("recombine", &[magnitudes.len()], &[self.frames, self.bins]));
        }
        self.plan.synthesize(self.frames, self.length, |t, f| {
            let i = t * self.bins + f;
            Complex64::from_polar(magnitudes[i], self.phases[i])
        })
    }

    fn adjoint(&self, grad: &[f64]) -> Vec<f64> {
        let n = self.plan.frame_size();
        let hop = self.plan.hop();
        let norm = self.plan.normalizer(self.frames);
        let window = self.plan.window();
        let mut out = vec![0.0; self.frames * self.bins];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for t in 0..self.frames {
            for (i, b) in buf.iter_mut().enumerate() {
                let idx = t * hop + i;
                let g = if idx < self.length { grad[idx] / norm[idx] } else { 0.0 };
                *b = Complex64::new(g * window[i], 0.0);
            }
            self.plan.forward_fft(&mut buf);
            for f in 0..self.bins {
                let weight = if f == 0 || f == n / 2 { 1.0 } else { 2.0 } / n as f64;
                let (s, c) = self.phases[t * self.bins + f].sin_cos();
                out[t * self.bins + f] = weight * (c * buf[f].re + s * buf[f].im);
            }
        }
        out
    }
}

impl Function for Recombine {
    fn name(&self) -> &str {
        "recombine"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        let mag = inputs[0];
        if mag.shape() != [self.frames, self.bins] {
            return Err(Error::dim("recombine", mag.shape(), &[self.frames, self.bins]));
        }
        Tensor::new(vec![1, self.length], self.apply(mag.data())?)
    }

    fn backward(&self, _inputs: &[&Tensor], _output: &Tensor, grad: &[f64]) -> Vec<Vec<f64>> {
        vec![self.adjoint(grad)]
    }
}

/// Rebuilds a waveform from predicted magnitudes (`frames × bins`) and the
/// phase of `phase_source`.
pub fn recombine(pred_magnitudes: &Tensor, phase_source: &Spectrogram) -> Result<Waveform> {
    let op = Recombine::new(phase_source)?;
    let out = op.forward(&[pred_magnitudes])?;
    Ok(Waveform::new(out.into_data(), phase_source.sample_rate()))
}

/// Tape version of [`recombine`]; the result is a `1 × length` value.
pub fn recombine_on_tape(tape: &mut Tape, pred: Var, phase_source: &Spectrogram) -> Result<Var> {
    tape.apply(Arc::new(Recombine::new(phase_source)?), &[pred])
}
