use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::*;

fn sources(seed: u64) -> (Waveform, Waveform) {
    let clean = synth_source(SourceKind::Tonal, 0.5, 16000, seed).unwrap();
    let noise = synth_source(SourceKind::NoiseBand, 0.5, 16000, seed + 100).unwrap();
    (clean, noise)
}

#[test]
fn mix_hits_requested_snr() {
    let (clean, noise) = sources(1);
    for snr in [0.0, 10.0, -5.0, 3.7, -17.25] {
        let mix = mix_at_snr(&clean, &noise, snr).unwrap();
        let part = Waveform::new(
            mix.samples.iter().zip(&clean.samples).map(|(m, c)| m - c).collect(),
            16000,
        );
        let measured = measured_snr_db(&clean, &part).unwrap();
        assert!((measured - snr).abs() < 1e-9, "{snr} vs {measured}");
    }
}

#[test]
fn mix_rejects_silent_or_mismatched_inputs() {
    let (clean, noise) = sources(2);
    let silent = Waveform::new(vec![0.0; clean.len()], 16000);
    assert!(matches!(mix_at_snr(&silent, &noise, 0.0), Err(Error::Input(_))));
    assert!(matches!(mix_at_snr(&clean, &silent, 0.0), Err(Error::Input(_))));
    let short = Waveform::new(vec![1.0; 10], 16000);
    assert!(mix_at_snr(&clean, &short, 0.0).is_err());
}

#[test]
fn ladder_endpoints_match_the_protocol() {
    let six = ladder_snrs(6, LadderOrder::Increasing, 0).unwrap();
    assert_eq!(six.len(), 6);
    assert_eq!(six[0], -5.0);
    assert_eq!(six[5], -3.0);
    assert!(six.windows(2).all(|w| w[0] < w[1]));

    let inc = ladder_snrs(30, LadderOrder::Increasing, 0).unwrap();
    let dec = ladder_snrs(30, LadderOrder::Decreasing, 0).unwrap();
    assert_eq!((inc[0], inc[29]), (-5.0, 5.0));
    assert_eq!((dec[0], dec[29]), (5.0, -5.0));
    let mut a = inc.clone();
    let mut b = dec.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert_eq!(a, b);

    assert_eq!(ladder_snrs(1, LadderOrder::Increasing, 0).unwrap(), vec![-5.0]);
    assert_eq!(ladder_snrs(1, LadderOrder::Decreasing, 0).unwrap(), vec![5.0]);
    let dec6 = ladder_snrs(6, LadderOrder::Decreasing, 0).unwrap();
    assert_eq!((dec6[0], dec6[5]), (5.0, 3.0));
}

#[test]
fn random_ladder_is_a_seeded_permutation() {
    let inc = ladder_snrs(12, LadderOrder::Increasing, 0).unwrap();
    let r1 = ladder_snrs(12, LadderOrder::Random, 9).unwrap();
    let r2 = ladder_snrs(12, LadderOrder::Random, 9).unwrap();
    assert_eq!(r1, r2);
    assert_ne!(r1, inc);
    let mut sorted = r1.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(sorted, inc);
}

#[test]
fn ladder_rejects_bad_k() {
    assert!(matches!(
        ladder_snrs(0, LadderOrder::Increasing, 0),
        Err(Error::Input(_))
    ));
    assert!(matches!(
        ladder_snrs(31, LadderOrder::Increasing, 0),
        Err(Error::Input(_))
    ));
}

#[test]
fn static_channels_decompose_into_clean_plus_scaled_noise() {
    let (clean, noise) = sources(3);
    let scene = static_ladder(&clean, &noise, 6, LadderOrder::Increasing, 0).unwrap();
    assert_eq!(scene.k(), 6);
    for i in 0..6 {
        let part = scene.noise_part(i);
        let g = scene.meta.noise_gains[i];
        for (p, n) in part.samples.iter().zip(&noise.samples) {
            assert!((p - g * n).abs() < 1e-12);
        }
        let snr = measured_snr_db(&clean, &part).unwrap();
        assert!((snr - scene.meta.snrs_db[i]).abs() < 1e-9);
    }
}

#[test]
fn dynamic_scene_averages_to_zero_db() {
    let (clean, noise) = sources(4);
    let config = DynamicConfig::default();
    for k in [1, 3, 5, 12] {
        let scene = dynamic_scene(&clean, &noise, k, &config, 77).unwrap();
        let mean = (0..k)
            .map(|i| measured_snr_db(&clean, &scene.noise_part(i)).unwrap())
            .sum::<f64>()
            / k as f64;
        assert!(mean.abs() < 0.01, "k={k} mean={mean}");
        let geom = scene.meta.geometry.as_ref().unwrap();
        assert!(geom.mic_positions.iter().all(|p| p[0].hypot(p[1]) < 0.9));
    }
}

#[test]
fn dynamic_instantaneous_snr_varies_over_time() {
    let clean = synth_source(SourceKind::Tonal, 2.0, 16000, 5).unwrap();
    let noise = synth_source(SourceKind::NoiseBand, 2.0, 16000, 6).unwrap();
    let scene = dynamic_scene(&clean, &noise, 4, &DynamicConfig::default(), 8).unwrap();
    let window = 4000;
    for i in 0..4 {
        let part = scene.noise_part(i);
        let snrs: Vec<f64> = (0..clean.len() / window)
            .map(|w| {
                let r = w * window..(w + 1) * window;
                let c: f64 = clean.samples[r.clone()].iter().map(|v| v * v).sum();
                let n: f64 = part.samples[r].iter().map(|v| v * v).sum();
                10.0 * (c / n).log10()
            })
            .collect();
        let max = snrs.iter().cloned().fold(f64::MIN, f64::max);
        let min = snrs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min > 1.0, "mic {i}: range {}", max - min);
    }
}

#[test]
fn dynamic_gain_is_continuous() {
    let geom = Geometry::sample(8, &DynamicConfig::default(), 3).unwrap();
    for m in 0..8 {
        let g = geom.gain_trajectory(m, 32000);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 1.0).abs() < 0.01);
        }
    }
}

#[test]
fn geometry_prefix_is_shared_across_k() {
    let config = DynamicConfig::default();
    let small = Geometry::sample(5, &config, 11).unwrap();
    let large = Geometry::sample(15, &config, 11).unwrap();
    assert_eq!(small.start_phase, large.start_phase);
    assert_eq!(small.mic_positions[..], large.mic_positions[..5]);
}

#[test]
fn scenes_are_deterministic() {
    let config = SceneConfig {
        duration_s: 0.25,
        ..SceneConfig::default()
    };
    for protocol in [Protocol::Dynamic, Protocol::Static(LadderOrder::Random)] {
        let a = generate_scene(&config, protocol, 5, 42).unwrap();
        let b = generate_scene(&config, protocol, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&config, protocol, 5, 43).unwrap();
        assert_ne!(a.clean, c.clean);
    }
    // The target is shared across k for one seed.
    let a = generate_scene(&config, Protocol::Dynamic, 3, 42).unwrap();
    let b = generate_scene(&config, Protocol::Dynamic, 9, 42).unwrap();
    assert_eq!(a.clean, b.clean);
}

#[test]
fn sources_have_unit_rms_and_are_seeded() {
    for kind in [SourceKind::Tonal, SourceKind::Chirp, SourceKind::NoiseBand] {
        for seed in 0..5 {
            let w = synth_source(kind, 0.7, 16000, seed).unwrap();
            assert!((w.rms() - 1.0).abs() < 1e-9, "{kind:?}");
            assert_eq!(w, synth_source(kind, 0.7, 16000, seed).unwrap());
        }
    }
    assert!(synth_source(SourceKind::Tonal, 0.0, 16000, 0).is_err());
}

#[test]
fn tonal_energy_sits_below_4_khz() {
    for seed in 0..5 {
        let w = synth_source(SourceKind::Tonal, 1.0, 16000, seed).unwrap();
        let n = w.len();
        let mut buf: Vec<Complex64> = w.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let (mut low, mut total) = (0.0, 0.0);
        for (k, c) in buf.iter().enumerate() {
            let f = k.min(n - k) as f64 * 16000.0 / n as f64;
            total += c.norm_sqr();
            if f < 4000.0 {
                low += c.norm_sqr();
            }
        }
        assert!(low / total > 0.95, "seed {seed}: {}", low / total);
    }
}

#[test]
fn save_and_load_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let config = SceneConfig {
        duration_s: 0.2,
        ..SceneConfig::default()
    };
    let scene = generate_scene(&config, Protocol::Dynamic, 3, 5).unwrap();
    let path = dir.path().join("scene_000");
    save_scene(&path, &scene).unwrap();
    let files = std::fs::read_dir(&path).unwrap().count();
    assert_eq!(files, 3 + 1 + 1);
    let back = load_scene(&path).unwrap();
    let scale = back.meta.export_scale;
    assert!(scale <= 1.0);
    let tol = 1.0 / 32768.0 / scale;
    for (a, b) in back.channels.iter().zip(&scene.channels) {
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).abs() <= tol);
        }
    }
    let mut meta = back.meta.clone();
    meta.export_scale = 1.0;
    assert_eq!(meta, scene.meta);

    let all = load_scenes(dir.path()).unwrap();
    assert_eq!(all.len(), 1);
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(load_scenes(empty.path()), Err(Error::Path { .. })));
}

#[test]
fn pool_seeds_are_prefix_stable_and_split() {
    let a = pool_seeds(7, Split::Train, 10);
    let b = pool_seeds(7, Split::Train, 100);
    assert_eq!(a[..], b[..10]);
    let v = pool_seeds(7, Split::Validation, 100);
    assert!(v.iter().all(|s| !b.contains(s)));
}
