use crate::cells::{Activation, BoundCell, BoundDense, Cell, DenseLayer};
use crate::dsp::{recombine, StftPlan, Waveform};
use crate::error::{Error, Result};
use crate::models::{ModelConfig, MultiChannelSpectra, Variant};
use crate::numcore::{ParamStore, Tape, Tensor, Var};

/// A denoiser: configuration plus its parameters.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    store: ParamStore,
    front: DenseLayer,
    cell: Cell,
    cell_rev: Option<Cell>,
    back: DenseLayer,
}

struct Bound {
    front: BoundDense,
    cell: BoundCell,
    cell_rev: Option<BoundCell>,
    back: BoundDense,
}

impl Model {
    /// Builds and initializes a model. Each layer draws from its own seed
    /// derived from `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut model = Self::skeleton(config)?;
        model.front.init(&mut model.store, seed);
        model.cell.init(&mut model.store, seed.wrapping_add(1));
        if let Some(rev) = &model.cell_rev {
            rev.init(&mut model.store, seed.wrapping_add(2));
        }
        model.back.init(&mut model.store, seed.wrapping_add(3));
        Ok(model)
    }

    /// A model with all-zero parameters.
    pub fn skeleton(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let front = DenseLayer::register(
            &mut store,
            "front",
            config.input_bins,
            config.front_dim,
            Activation::Softplus,
        )?;
        let cell = Cell::register(config.cell, &mut store, "cell", config.front_dim, config.hidden)?;
        let cell_rev = if config.bidirectional_channels {
            Some(Cell::register(
                config.cell,
                &mut store,
                "cell_rev",
                config.front_dim,
                config.hidden,
            )?)
        } else {
            None
        };
        let back = DenseLayer::register(
            &mut store,
            "back",
            config.readout_dim(),
            config.input_bins,
            Activation::Softplus,
        )?;
        Ok(Model {
            config,
            store,
            front,
            cell,
            cell_rev,
            back,
        })
    }

    /// Rebuilds a model from named parameter arrays, checking that every
    /// expected name is present with the expected shape.
    pub fn from_params(config: ModelConfig, params: impl IntoIterator<Item = (String, Tensor)>) -> Result<Self> {
        let mut model = Self::skeleton(config)?;
        let mut seen = vec![false; model.store.len()];
        for (name, value) in params {
            let id = model
                .store
                .id(&name)
                .ok_or_else(|| Error::Format(format!("unexpected parameter `{name}`")))?;
            let want = model.store.get(id).shape().to_vec();
            if value.shape() != want.as_slice() {
                return Err(Error::Format(format!(
                    "parameter `{name}` has shape {:?}, model expects {want:?}",
                    value.shape()
                )));
            }
            model.store.assign(&name, value)?;
            seen[id.index()] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            let id = model.store.ids().nth(missing).unwrap();
            return Err(Error::Format(format!("parameter `{}` missing", model.store.name(id))));
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn bind(&self, tape: &mut Tape) -> Result<Bound> {
        Ok(Bound {
            front: self.front.bind(tape, &self.store),
            cell: self.cell.bind(tape, &self.store)?,
            cell_rev: match &self.cell_rev {
                Some(c) => Some(c.bind(tape, &self.store)?),
                None => None,
            },
            back: self.back.bind(tape, &self.store),
        })
    }

    fn check_bins(&self, bins: usize) -> Result<()> {
        if bins != self.config.input_bins {
            return Err(Error::dim("model input", &[bins], &[self.config.input_bins]));
        }
        Ok(())
    }

    /// Records the configured variant on `tape`; the result is
    /// `frames × bins` predicted magnitudes.
    pub fn forward(&self, tape: &mut Tape, input: &MultiChannelSpectra) -> Result<Var> {
        match self.config.variant {
            Variant::AvgRnn => forward_avg_rnn(self, tape, input),
            Variant::Mvn1d => forward_mvn1d(self, tape, input),
            Variant::Mvn2d => forward_mvn2d(self, tape, input),
        }
    }

    /// Inference on a private tape.
    pub fn predict(&self, input: &MultiChannelSpectra) -> Result<Tensor> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, input)?;
        Ok(tape.value(out).clone())
    }

    /// Full pipeline: analyze every channel, predict, and resynthesize with
    /// the last channel's phase.
    pub fn denoise(&self, channels: &[Waveform], plan: &StftPlan) -> Result<Waveform> {
        let specs = channels.iter().map(|w| plan.analyze(w)).collect::<Result<Vec<_>>>()?;
        let input = MultiChannelSpectra::from_spectrograms(&specs)?;
        let pred = self.predict(&input)?;
        recombine(&pred, specs.last().unwrap())
    }
}

/// Runs `cell` over every channel of every frame. With `carry` the state
/// crosses frames (2D); without it each frame restarts from zero (1D).
/// Returns the state after the last visited channel of each frame.
fn unroll_channels(
    tape: &mut Tape,
    cell: &BoundCell,
    projected: Var,
    channels: usize,
    frames: usize,
    reverse: bool,
    carry: bool,
) -> Result<Vec<Var>> {
    let mut h = cell.zero_state(tape);
    let mut finals = Vec::with_capacity(frames);
    for j in 0..frames {
        if !carry && j > 0 {
            h = cell.zero_state(tape);
        }
        for step in 0..channels {
            let i = if reverse { channels - 1 - step } else { step };
            let p = tape.row(projected, i * frames + j)?;
            h = cell.step(tape, p, h)?;
        }
        finals.push(h);
    }
    Ok(finals)
}

fn channel_model(model: &Model, tape: &mut Tape, input: &MultiChannelSpectra, carry: bool) -> Result<Var> {
    model.check_bins(input.bins())?;
    let (k, t) = (input.channels(), input.frames());
    let bound = model.bind(tape)?;
    let x = tape.constant(input.as_rows());
    let front = bound.front.forward(tape, x)?;

    let proj = bound.cell.project(tape, front)?;
    let finals = unroll_channels(tape, &bound.cell, proj, k, t, false, carry)?;
    let mut readout = tape.vstack(&finals)?;
    if let Some(rev) = &bound.cell_rev {
        let proj = rev.project(tape, front)?;
        let finals = unroll_channels(tape, rev, proj, k, t, true, carry)?;
        let backward = tape.vstack(&finals)?;
        readout = tape.hconcat(&[readout, backward])?;
    }
    bound.back.forward(tape, readout)
}

/// 2D MVN: channels chained within each frame, the last channel's state
/// feeding the first channel of the next frame.
pub fn forward_mvn2d(model: &Model, tape: &mut Tape, input: &MultiChannelSpectra) -> Result<Var> {
    channel_model(model, tape, input, true)
}

/// 1D MVN: every frame unrolls over channels from a zero state.
pub fn forward_mvn1d(model: &Model, tape: &mut Tape, input: &MultiChannelSpectra) -> Result<Var> {
    channel_model(model, tape, input, false)
}

/// Averaging baseline: channel mean, then a time-unrolled recurrence.
pub fn forward_avg_rnn(model: &Model, tape: &mut Tape, input: &MultiChannelSpectra) -> Result<Var> {
    forward_time_rnn(model, tape, &input.averaged())
}

/// Single-channel time recurrence over a `frames × bins` magnitude matrix.
pub fn forward_time_rnn(model: &Model, tape: &mut Tape, frames: &Tensor) -> Result<Var> {
    let (t, bins) = frames
        .dims2()
        .ok_or_else(|| Error::Input("frames must be a matrix".into()))?;
    model.check_bins(bins)?;
    let bound = model.bind(tape)?;
    let x = tape.constant(frames.clone());
    let front = bound.front.forward(tape, x)?;
    let proj = bound.cell.project(tape, front)?;
    let finals = unroll_channels(tape, &bound.cell, proj, 1, t, false, true)?;
    let readout = tape.vstack(&finals)?;
    bound.back.forward(tape, readout)
}
