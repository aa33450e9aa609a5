//! Registry of every finite-difference gradient check in the crate.
//!
//! Model checks run end to end at toy size: 9 bins (frame 16, hop 8), four
//! frames from 40-sample signals, three channels and hidden size 5. They go
//! through resynthesis and the SDR-proxy loss, so the full training graph
//! is covered.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cells::{Activation, Cell, CellKind, DenseLayer};
use crate::dsp::{recombine_on_tape, StftPlan, Waveform};
use crate::error::Result;
use crate::models::{Model, ModelConfig, MultiChannelSpectra, Variant};
use crate::numcore::gradcheck::{check_inputs, check_params, random_tensor, tape_op_checks, weighted_sum, GradCheck};
use crate::numcore::{Function, ParamStore, Tensor};
use crate::objectives::sdr_loss;
use crate::trainer::{scene_loss, Prepared};

pub use crate::numcore::gradcheck::{run_checks, CheckOutcome, FD_STEP, TOLERANCE};

pub const TOY_FRAME: usize = 16;
pub const TOY_HOP: usize = 8;
pub const TOY_SAMPLES: usize = 40;
pub const TOY_CHANNELS: usize = 3;
pub const TOY_HIDDEN: usize = 5;
pub const TOY_FRONT: usize = 6;

/// Every differentiable operation: tape primitives, cells, dense layer,
/// resynthesis, loss and all model variants end to end.
pub fn registry() -> Vec<GradCheck> {
    let mut checks = tape_op_checks();
    checks.push(cell_check("cell.gru", CellKind::Gru));
    checks.push(cell_check("cell.plain", CellKind::Plain));
    checks.push(dense_check());
    checks.push(recombine_check());
    checks.push(sdr_loss_check());
    for (name, variant, cell, bidirectional) in [
        ("model.mvn2d", Variant::Mvn2d, CellKind::Gru, false),
        ("model.mvn2d_bi", Variant::Mvn2d, CellKind::Gru, true),
        ("model.mvn2d_plain", Variant::Mvn2d, CellKind::Plain, false),
        ("model.mvn1d", Variant::Mvn1d, CellKind::Gru, false),
        ("model.avg_rnn", Variant::AvgRnn, CellKind::Gru, false),
    ] {
        checks.push(model_check(name, variant, cell, bidirectional));
    }
    checks
}

/// [`registry`] plus one deliberately wrong backward rule, for testing that
/// the harness notices.
pub fn registry_with_fault() -> Vec<GradCheck> {
    let mut checks = registry();
    checks.push(corrupted_check());
    checks
}

fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Waveform {
    Waveform::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), 8000)
}

fn cell_check(name: &str, kind: CellKind) -> GradCheck {
    GradCheck::new(name, 10, move |rng| {
        let input = rng.random_range(1..=6);
        let mut store = ParamStore::new();
        let cell = Cell::register(kind, &mut store, "cell", input, TOY_HIDDEN)?;
        cell.init(&mut store, rng.random());
        let xs: Vec<Tensor> = (0..4).map(|_| random_tensor(rng, &[1, input], -1.0, 1.0)).collect();
        let h0 = random_tensor(rng, &[1, TOY_HIDDEN], -0.5, 0.5);
        let w = random_tensor(rng, &[1, TOY_HIDDEN], -1.0, 1.0);
        check_params(&store, |tape, store| {
            let bound = cell.bind(tape, store)?;
            let mut h = tape.constant(h0.clone());
            for x in &xs {
                let xv = tape.constant(x.clone());
                h = bound.cell_step(tape, xv, h)?;
            }
            weighted_sum(tape, h, &w)
        })
    })
}

fn dense_check() -> GradCheck {
    GradCheck::new("dense.softplus", 20, |rng| {
        let (rows, input, output) = (rng.random_range(1..5), rng.random_range(1..7), rng.random_range(1..7));
        let mut store = ParamStore::new();
        let layer = DenseLayer::register(&mut store, "dense", input, output, Activation::Softplus)?;
        layer.init(&mut store, rng.random());
        let x = random_tensor(rng, &[rows, input], -1.0, 1.0);
        let w = random_tensor(rng, &[rows, output], -1.0, 1.0);
        check_params(&store, |tape, store| {
            let bound = layer.bind(tape, store);
            let xv = tape.constant(x.clone());
            let y = bound.forward(tape, xv)?;
            weighted_sum(tape, y, &w)
        })
    })
}

fn recombine_check() -> GradCheck {
    GradCheck::new("recombine", 10, |rng| {
        let plan = StftPlan::new(TOY_FRAME, TOY_HOP)?;
        let n = rng.random_range(TOY_SAMPLES..TOY_SAMPLES + 20);
        let spec = plan.analyze(&random_signal(rng, n))?;
        let pred = random_tensor(rng, &[spec.frames(), spec.bins()], 0.0, 2.0);
        let w = random_tensor(rng, &[1, spec.length()], -1.0, 1.0);
        check_inputs(&[pred], |tape, v| {
            let y = recombine_on_tape(tape, v[0], &spec)?;
            weighted_sum(tape, y, &w)
        })
    })
}

fn sdr_loss_check() -> GradCheck {
    GradCheck::new("sdr_loss", 50, |rng| {
        let n = rng.random_range(2..=64);
        let x = random_tensor(rng, &[1, n], -1.0, 1.0);
        let y = random_tensor(rng, &[1, n], -1.0, 1.0);
        check_inputs(&[x], |tape, v| {
            let yv = tape.constant(y.clone());
            sdr_loss(tape, v[0], yv)
        })
    })
}

/// A random toy scene already analyzed, as the trainer would see it.
pub fn toy_scene(rng: &mut ChaCha8Rng, channels: usize) -> Result<Prepared> {
    let plan = StftPlan::new(TOY_FRAME, TOY_HOP)?;
    let specs = (0..channels)
        .map(|_| plan.analyze(&random_signal(rng, TOY_SAMPLES)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        input: MultiChannelSpectra::from_spectrograms(&specs)?,
        phase: specs.last().unwrap().clone(),
        target: Tensor::row(random_signal(rng, TOY_SAMPLES).samples),
        seed: 0,
    })
}

pub fn toy_model_config(variant: Variant, cell: CellKind, bidirectional: bool) -> ModelConfig {
    ModelConfig {
        input_bins: TOY_FRAME / 2 + 1,
        front_dim: TOY_FRONT,
        hidden: TOY_HIDDEN,
        cell,
        variant,
        bidirectional_channels: bidirectional,
    }
}

fn model_check(name: &str, variant: Variant, cell: CellKind, bidirectional: bool) -> GradCheck {
    GradCheck::new(name, 3, move |rng| {
        let config = toy_model_config(variant, cell, bidirectional);
        let model = Model::new(config, rng.random())?;
        let scene = toy_scene(rng, TOY_CHANNELS)?;
        check_params(model.params(), |tape, store| {
            let mut m = model.clone();
            *m.params_mut() = store.clone();
            scene_loss(&m, tape, &scene)
        })
    })
}

/// Doubles its input but reports a gradient of three.
struct CorruptedDouble;

impl Function for CorruptedDouble {
    fn name(&self) -> &str {
        "corrupted_double"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        let x = inputs[0];
        Tensor::new(x.shape().to_vec(), x.data().iter().map(|v| 2.0 * v).collect())
    }

    fn backward(&self, _inputs: &[&Tensor], _output: &Tensor, grad: &[f64]) -> Vec<Vec<f64>> {
        vec![grad.iter().map(|g| 3.0 * g).collect()]
    }
}

pub const FAULT_CHECK: &str = "fixture.corrupted_double";

fn corrupted_check() -> GradCheck {
    GradCheck::new(FAULT_CHECK, 5, |rng| {
        let x = random_tensor(rng, &[2, 3], -1.0, 1.0);
        let w = random_tensor(rng, &[2, 3], -1.0, 1.0);
        check_inputs(&[x], |tape, v| {
            let y = tape.apply(Arc::new(CorruptedDouble), &[v[0]])?;
            weighted_sum(tape, y, &w)
        })
    })
}
