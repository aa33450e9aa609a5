use super::*;
use crate::dsp::StftPlan;
use crate::models::{ModelConfig, MultiChannelSpectra, Variant};
use crate::scenegen::{generate_scene, LadderOrder, Protocol, SceneConfig};

fn toy_config(variant: Variant) -> (ModelConfig, TrainConfig) {
    let model = ModelConfig {
        input_bins: 9,
        front_dim: 6,
        hidden: 5,
        variant,
        ..ModelConfig::default()
    };
    let train = TrainConfig {
        epochs: 3,
        batch_size: 2,
        frame_size: 16,
        hop: 8,
        early_stop_patience: 0,
        ..TrainConfig::default()
    };
    (model, train)
}

fn toy_scenes(n: usize, k: usize, base: u64) -> Vec<Prepared> {
    let config = SceneConfig {
        sample_rate: 8000,
        duration_s: 0.02,
        ..SceneConfig::default()
    };
    let plan = StftPlan::new(16, 8).unwrap();
    (0..n as u64)
        .map(|s| {
            let scene = generate_scene(&config, Protocol::Static(LadderOrder::Random), k, base + s).unwrap();
            Prepared::new(&scene, &plan).unwrap()
        })
        .collect()
}

#[test]
fn overfitting_one_scene_lowers_the_loss() {
    for variant in [Variant::Mvn2d, Variant::Mvn1d, Variant::AvgRnn] {
        let (mc, tc) = toy_config(variant);
        let scene = toy_scenes(1, 3, 0).remove(0);
        let mut trainer = Trainer::new(
            Model::new(mc, 1).unwrap(),
            TrainConfig {
                learning_rate: 1e-2,
                ..tc
            },
        )
        .unwrap();
        let initial = trainer.step(&[&scene]).unwrap();
        for _ in 0..29 {
            trainer.step(&[&scene]).unwrap();
        }
        let mut tape = Tape::new();
        let l = scene_loss(trainer.model(), &mut tape, &scene).unwrap();
        let after = tape.value(l).data()[0];
        assert!(after < initial, "{variant:?}: {after} !< {initial}");
    }
}

#[test]
fn zero_learning_rate_leaves_parameters_untouched() {
    let (mc, tc) = toy_config(Variant::Mvn2d);
    let model = Model::new(mc, 2).unwrap();
    let before: Vec<Tensor> = model.params().iter().map(|(_, t)| t.clone()).collect();
    let mut trainer = Trainer::new(
        model,
        TrainConfig {
            learning_rate: 0.0,
            ..tc
        },
    )
    .unwrap();
    let scenes = toy_scenes(4, 3, 10);
    trainer.run_epoch(&scenes, &scenes[..1]).unwrap();
    for ((_, t), b) in trainer.model().params().iter().zip(&before) {
        assert_eq!(t.data(), b.data());
    }
}

#[test]
fn same_seed_gives_the_same_trajectory() {
    let run = || {
        let (mc, tc) = toy_config(Variant::Mvn2d);
        let mut trainer = Trainer::new(Model::new(mc, 3).unwrap(), tc).unwrap();
        let train = toy_scenes(5, 3, 20);
        let val = toy_scenes(2, 3, 90);
        trainer.fit(&train, &val, |_, _, _| Ok(())).unwrap();
        history_csv(trainer.history())
    };
    assert_eq!(run(), run());
}

#[test]
fn resuming_continues_the_same_run() {
    let (mc, tc) = toy_config(Variant::Mvn2d);
    let train = toy_scenes(5, 3, 30);
    let val = toy_scenes(2, 3, 91);
    let tc4 = TrainConfig { epochs: 4, ..tc };

    let mut full = Trainer::new(Model::new(mc.clone(), 4).unwrap(), tc4.clone()).unwrap();
    full.fit(&train, &val, |_, _, _| Ok(())).unwrap();

    let mut first = Trainer::new(
        Model::new(mc, 4).unwrap(),
        TrainConfig {
            epochs: 2,
            ..tc4.clone()
        },
    )
    .unwrap();
    first.fit(&train, &val, |_, _, _| Ok(())).unwrap();
    let bytes = first.checkpoint().to_bytes().unwrap();
    let mut second = Trainer::resume(Checkpoint::from_bytes(&bytes).unwrap(), Some(tc4)).unwrap();
    assert_eq!(second.epoch(), 2);
    second.fit(&train, &val, |_, _, _| Ok(())).unwrap();
    let epochs: Vec<usize> = second.history().iter().map(|r| r.epoch).collect();
    assert_eq!(epochs, vec![1, 2, 3, 4]);
    assert_eq!(second.history(), full.history());
}

#[test]
fn clipping_bounds_the_global_norm() {
    let mut grads = vec![vec![30.0, -40.0], vec![120.0]];
    let before = clip_global_norm(&mut grads, 5.0);
    assert_eq!(before, 130.0);
    assert!(global_norm(&grads) <= 5.0 + 1e-9);
    let mut small = vec![vec![0.1, 0.2]];
    clip_global_norm(&mut small, 5.0);
    assert_eq!(small, vec![vec![0.1, 0.2]]);
}

#[test]
fn first_adam_step_moves_by_the_learning_rate() {
    let mut store = crate::numcore::ParamStore::new();
    store.register("w", Tensor::row(vec![1.0, -2.0, 0.5])).unwrap();
    let mut adam = Adam::new(&store);
    adam.update(&mut store, &[vec![3.0, -0.5, 1e-3]], 0.01);
    // Bias correction makes m̂/√v̂ = sign(g) on the first step.
    let w = store.by_name("w").unwrap().data();
    let expect = [0.99, -1.99, 0.49];
    for (a, b) in w.iter().zip(expect) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn non_finite_parameters_abort_with_the_batch_seeds() {
    let (mc, tc) = toy_config(Variant::Mvn2d);
    let mut model = Model::new(mc, 5).unwrap();
    let id = model.params().id("back.bias").unwrap();
    model.params_mut().get_mut(id).data_mut()[0] = f64::NAN;
    let mut trainer = Trainer::new(model, tc).unwrap();
    let scenes = toy_scenes(1, 3, 77);
    match trainer.step(&[&scenes[0]]) {
        Err(Error::Numeric(msg)) => assert!(msg.contains("77"), "{msg}"),
        other => panic!("expected a numeric error, got {other:?}"),
    }
}

#[test]
fn mismatched_bins_are_a_config_error() {
    let (mc, tc) = toy_config(Variant::Mvn2d);
    let model = Model::new(mc, 0).unwrap();
    let bad = TrainConfig {
        frame_size: 32,
        hop: 16,
        ..tc
    };
    assert!(matches!(Trainer::new(model, bad), Err(Error::Config(_))));
}

fn sample_checkpoint(variant: Variant) -> (Checkpoint, Vec<Prepared>) {
    let (mut mc, tc) = toy_config(variant);
    // Keep every extent distinct from the k = 5 used to train.
    mc.hidden = 7;
    let mut trainer = Trainer::new(Model::new(mc, 6).unwrap(), TrainConfig { epochs: 1, ..tc }).unwrap();
    let train = toy_scenes(3, 5, 40);
    trainer.fit(&train, &train[..1], |_, _, _| Ok(())).unwrap();
    (trainer.checkpoint(), train)
}

#[test]
fn checkpoint_roundtrip_is_bit_exact() {
    for variant in [Variant::Mvn2d, Variant::AvgRnn] {
        let (ckpt, scenes) = sample_checkpoint(variant);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        let a = ckpt.model().unwrap().predict(&scenes[0].input).unwrap();
        let b = back.model().unwrap().predict(&scenes[0].input).unwrap();
        assert_eq!(a.data(), b.data());
    }
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let (ckpt, _) = sample_checkpoint(Variant::Mvn2d);
    let bytes = ckpt.to_bytes().unwrap();

    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&magic), Err(Error::Format(m)) if m.contains("magic")));

    let mut version = bytes.clone();
    version[4] = 9;
    assert!(matches!(Checkpoint::from_bytes(&version), Err(Error::Format(m)) if m.contains("version")));

    let truncated = &bytes[..bytes.len() - 100];
    assert!(matches!(Checkpoint::from_bytes(truncated), Err(Error::Format(_))));
    assert!(matches!(Checkpoint::from_bytes(&bytes[..6]), Err(Error::Format(_))));

    let mut flipped = bytes.clone();
    let mid = bytes.len() / 2;
    flipped[mid] ^= 0x40;
    assert!(matches!(Checkpoint::from_bytes(&flipped), Err(Error::Format(m)) if m.contains("CRC")));
}

#[test]
fn checkpoint_with_wrong_shapes_names_the_parameter() {
    let (mut ckpt, _) = sample_checkpoint(Variant::Mvn2d);
    ckpt.model_config.hidden = 8;
    let bytes = ckpt.to_bytes().unwrap();
    match Checkpoint::from_bytes(&bytes) {
        Err(Error::Format(msg)) => assert!(msg.contains("cell."), "{msg}"),
        other => panic!("expected format error, got {other:?}"),
    }
}

#[test]
fn k5_checkpoint_runs_at_other_channel_counts() {
    let (ckpt, _) = sample_checkpoint(Variant::Mvn2d);
    let model = Checkpoint::from_bytes(&ckpt.to_bytes().unwrap())
        .unwrap()
        .model()
        .unwrap();
    for k in [1, 2, 12, 30] {
        let input = MultiChannelSpectra::new(k, 4, 9, vec![0.3; k * 4 * 9]).unwrap();
        let out = model.predict(&input).unwrap();
        assert_eq!(out.shape(), &[4, 9]);
    }
    for (_, t) in model.params().iter() {
        assert!(!t.shape().contains(&5));
    }
}

#[test]
fn history_csv_has_header_and_rows() {
    let h = [
        EpochRecord {
            epoch: 1,
            train_loss: -0.5,
            val_sdr: 1.25,
        },
        EpochRecord {
            epoch: 2,
            train_loss: -0.75,
            val_sdr: 2.0,
        },
    ];
    assert_eq!(history_csv(&h), "epoch,train_loss,val_sdr\n1,-0.5,1.25\n2,-0.75,2\n");
}
