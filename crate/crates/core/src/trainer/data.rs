use crate::dsp::{recombine, recombine_on_tape, Spectrogram, StftPlan};
use crate::error::{Error, Result};
use crate::models::{Model, MultiChannelSpectra};
use crate::numcore::{Tape, Tensor, Var};
use crate::objectives::{sdr_loss, si_sdr, SdrScore};
use crate::scenegen::Scene;

/// A scene analyzed once so repeated epochs skip the STFT.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub input: MultiChannelSpectra,
    /// Spectrogram of the last channel, whose phase resynthesizes the output.
    pub phase: Spectrogram,
    /// Clean target as a `1 × samples` row.
    pub target: Tensor,
    pub seed: u64,
}

impl Prepared {
    pub fn new(scene: &Scene, plan: &StftPlan) -> Result<Self> {
        let specs = scene
            .channels
            .iter()
            .map(|c| plan.analyze(c))
            .collect::<Result<Vec<_>>>()?;
        let input = MultiChannelSpectra::from_spectrograms(&specs)?;
        let phase = specs.into_iter().last().expect("scene has channels");
        Ok(Prepared {
            input,
            phase,
            target: Tensor::row(scene.clean.samples.clone()),
            seed: scene.meta.seed,
        })
    }

    pub fn prepare_all(scenes: &[Scene], plan: &StftPlan) -> Result<Vec<Self>> {
        scenes.iter().map(|s| Prepared::new(s, plan)).collect()
    }
}

/// Records forward pass, resynthesis and loss for one scene.
pub fn scene_loss(model: &Model, tape: &mut Tape, scene: &Prepared) -> Result<Var> {
    let mags = model.forward(tape, &scene.input)?;
    let wave = recombine_on_tape(tape, mags, &scene.phase)?;
    let target = tape.constant(scene.target.clone());
    sdr_loss(tape, wave, target)
}

/// SI-SDR of the model's resynthesized output against the clean target.
pub fn evaluate(model: &Model, scene: &Prepared) -> Result<SdrScore> {
    let pred = model.predict(&scene.input)?;
    let wave = recombine(&pred, &scene.phase)?;
    match si_sdr(&wave.samples, scene.target.data()) {
        // A model that outputs silence has no defined SDR; score it at the floor.
        Err(Error::Input(msg)) if msg.contains("estimate") => Ok(SdrScore(-crate::objectives::SDR_CLAMP_DB)),
        other => other,
    }
}
