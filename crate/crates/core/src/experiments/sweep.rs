use rayon::prelude::*;

use super::{SceneScore, SweepResult};
use crate::dsp::StftPlan;
use crate::error::{Error, Result};
use crate::models::Model;
use crate::scenegen::{generate_scene, LadderOrder, Protocol, SceneConfig};
use crate::trainer::{evaluate, Prepared};

/// A model under evaluation and the name it gets in the results.
pub struct Entrant<'a> {
    pub label: String,
    pub model: &'a Model,
}

impl<'a> Entrant<'a> {
    pub fn new(label: impl Into<String>, model: &'a Model) -> Self {
        Entrant {
            label: label.into(),
            model,
        }
    }
}

fn scenario_tag(protocol: Protocol) -> &'static str {
    match protocol {
        Protocol::Static(order) => order.tag(),
        Protocol::Dynamic => "dynamic",
    }
}

/// Scores every entrant at every `k` on the scenes generated from `seeds`.
///
/// The same seeds are used at every `k`, so within a scenario the curves
/// differ only by channel count. Scenes are generated and scored in
/// parallel; results come back in a fixed order.
pub fn sweep(
    entrants: &[Entrant],
    scene_config: &SceneConfig,
    protocol: Protocol,
    ks: &[usize],
    seeds: &[u64],
    plan: &StftPlan,
) -> Result<(Vec<SweepResult>, Vec<SceneScore>)> {
    if entrants.is_empty() || ks.is_empty() || seeds.is_empty() {
        return Err(Error::Config(
            "a sweep needs models, channel counts and scene seeds".into(),
        ));
    }
    for e in entrants {
        if e.model.config().input_bins != plan.bins() {
            return Err(Error::Config(format!(
                "model `{}` expects {} bins but the STFT gives {} (check frame_size)",
                e.label,
                e.model.config().input_bins,
                plan.bins()
            )));
        }
    }
    let tag = scenario_tag(protocol);
    let mut results = Vec::new();
    let mut details = Vec::new();
    for &k in ks {
        let scenes: Vec<(Prepared, Vec<f64>)> = seeds
            .par_iter()
            .map(|&seed| {
                let scene = generate_scene(scene_config, protocol, k, seed)?;
                Ok((Prepared::new(&scene, plan)?, scene.meta.snrs_db))
            })
            .collect::<Result<_>>()?;
        for e in entrants {
            let scores: Vec<f64> = scenes
                .par_iter()
                .map(|(p, _)| evaluate(e.model, p).map(|s| s.db()))
                .collect::<Result<_>>()?;
            results.push(SweepResult::from_scores(tag, &e.label, k, &scores)?);
            for ((p, snrs), sdr) in scenes.iter().zip(&scores) {
                details.push(SceneScore {
                    scenario: tag.to_string(),
                    model: e.label.clone(),
                    k,
                    seed: p.seed,
                    snrs_db: snrs.clone(),
                    sdr_db: *sdr,
                });
            }
        }
    }
    Ok((results, details))
}

/// Increasing and decreasing ladders over `ks` for every entrant.
pub fn static_sweep(
    entrants: &[Entrant],
    scene_config: &SceneConfig,
    ks: &[usize],
    seeds: &[u64],
    plan: &StftPlan,
) -> Result<(Vec<SweepResult>, Vec<SceneScore>)> {
    let mut results = Vec::new();
    let mut details = Vec::new();
    for order in [LadderOrder::Increasing, LadderOrder::Decreasing] {
        let (r, d) = sweep(entrants, scene_config, Protocol::Static(order), ks, seeds, plan)?;
        results.extend(r);
        details.extend(d);
    }
    Ok((results, details))
}

/// Moving-noise scenes over `ks` for every entrant.
pub fn dynamic_sweep(
    entrants: &[Entrant],
    scene_config: &SceneConfig,
    ks: &[usize],
    seeds: &[u64],
    plan: &StftPlan,
) -> Result<(Vec<SweepResult>, Vec<SceneScore>)> {
    sweep(entrants, scene_config, Protocol::Dynamic, ks, seeds, plan)
}
