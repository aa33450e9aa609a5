use std::path::{Path, PathBuf};

use multiview_core::experiments::{dynamic_sweep, static_sweep, to_csv, Entrant};
use multiview_core::models::Model;
use multiview_core::scenegen::{generate_scene, load_scenes, pool_seeds, save_scene, Split};
use multiview_core::trainer::{write_history_csv, Checkpoint, Prepared, Trainer};
use multiview_core::verify::{registry, registry_with_fault, run_checks, TOLERANCE};
use multiview_core::{dsp::StftPlan, Error, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Family, RunConfig};
use crate::rundir;

pub fn gen(config: &RunConfig, out: &Path, force: bool) -> Result<()> {
    rundir::prepare(out, force)?;
    let gen = &config.gen;
    let seeds = pool_seeds(config.seed, Split::Train, gen.n_scenes);
    rundir::write_record(out, "gen", config, json!({ "base": config.seed, "scenes": seeds }))?;
    let names: Vec<String> = (0..seeds.len()).map(|i| format!("scene_{i:04}")).collect();
    seeds
        .par_iter()
        .zip(&names)
        .map(|(&seed, name)| {
            let scene = generate_scene(&config.scene, gen.scenario.protocol(), gen.k, seed)?;
            save_scene(&out.join(name), &scene)
        })
        .collect::<Result<Vec<()>>>()?;
    let manifest = json!({
        "version": multiview_core::VERSION,
        "scenario": gen.scenario,
        "k": gen.k,
        "sample_rate": config.scene.sample_rate,
        "scenes": names.iter().zip(&seeds).map(|(n, s)| json!({ "dir": n, "seed": s })).collect::<Vec<_>>(),
    });
    rundir::write_json(&out.join("manifest.json"), &manifest)?;
    eprintln!("wrote {} scenes to {}", seeds.len(), out.display());
    Ok(())
}

fn load_pool(dir: &Path, plan: &StftPlan) -> Result<Vec<Prepared>> {
    let scenes = load_scenes(dir)?;
    Prepared::prepare_all(&scenes, plan)
}

fn generated_pool(config: &RunConfig, split: Split, n: usize, plan: &StftPlan) -> Result<(Vec<Prepared>, Vec<u64>)> {
    let seeds = pool_seeds(config.seed, split, n);
    let protocol = config.data.family.training_protocol();
    let k = config.train.channels_k_train;
    let pool = seeds
        .par_iter()
        .map(|&s| Prepared::new(&generate_scene(&config.scene, protocol, k, s)?, plan))
        .collect::<Result<Vec<_>>>()?;
    Ok((pool, seeds))
}

pub fn train(config: &RunConfig, out: &Path, force: bool, resume: Option<&Path>) -> Result<()> {
    // Resolve every input before touching the output directory.
    for dir in [&config.data.train_dir, &config.data.val_dir].into_iter().flatten() {
        if !dir.is_dir() {
            return Err(Error::Path {
                path: dir.clone(),
                reason: "scene directory does not exist".into(),
            });
        }
    }
    let ckpt = resume.map(Checkpoint::load).transpose()?;
    if let Some(ckpt) = &ckpt {
        if ckpt.model_config != config.model {
            return Err(Error::Config(format!(
                "--resume checkpoint has model config {:?}, run config has {:?}",
                ckpt.model_config, config.model
            )));
        }
    }
    rundir::prepare(out, force)?;

    let plan = StftPlan::new(config.train.frame_size, config.train.hop)?;
    let (train, train_seeds) = match &config.data.train_dir {
        Some(dir) => (load_pool(dir, &plan)?, Vec::new()),
        None => generated_pool(config, Split::Train, config.data.n_train, &plan)?,
    };
    let (val, val_seeds) = match &config.data.val_dir {
        Some(dir) => (load_pool(dir, &plan)?, Vec::new()),
        None => generated_pool(config, Split::Validation, config.data.n_val, &plan)?,
    };
    rundir::write_record(
        out,
        "train",
        config,
        json!({
            "base": config.seed,
            "model_init": config.seed,
            "shuffle": config.train.seed,
            "train_scenes": train_seeds,
            "val_scenes": val_seeds,
            "resumed_from": resume,
        }),
    )?;

    let mut trainer = match ckpt {
        Some(ckpt) => Trainer::resume(ckpt, Some(config.train.clone()))?,
        None => Trainer::new(Model::new(config.model.clone(), config.seed)?, config.train.clone())?,
    };
    let best_path = out.join("best.ckpt");
    let last_path = out.join("last.ckpt");
    let history_path = out.join("history.csv");
    trainer.fit(&train, &val, |t, record, improved| {
        eprintln!(
            "epoch {:>3}  train_loss {:>14.4}  val_sdr {:>8.3} dB{}",
            record.epoch,
            record.train_loss,
            record.val_sdr,
            if improved { "  *" } else { "" }
        );
        let ckpt = t.checkpoint();
        if improved {
            ckpt.save(&best_path)?;
        }
        ckpt.save(&last_path)?;
        write_history_csv(&history_path, t.history())
    })?;
    if !best_path.exists() {
        // A resumed run that never beat its earlier best still leaves a
        // usable checkpoint behind.
        trainer.checkpoint().save(&best_path)?;
    }
    write_history_csv(&history_path, trainer.history())?;
    eprintln!(
        "finished at epoch {} with best validation SI-SDR {:.3} dB",
        trainer.epoch(),
        trainer.best_val_sdr().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn sweep(config: &RunConfig, out: &Path, force: bool, checkpoints: &[PathBuf]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Usage("sweep needs at least one --checkpoint".into()));
    }
    let plan = StftPlan::new(config.train.frame_size, config.train.hop)?;
    let mut models = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for path in checkpoints {
        let ckpt = Checkpoint::load(path)?;
        if ckpt.epoch == 0 {
            return Err(Error::Config(format!("{} is untrained (epoch 0)", path.display())));
        }
        let bins = ckpt.model_config.input_bins;
        if bins != plan.bins() {
            return Err(Error::Config(format!(
                "{}: model.input_bins is {bins} but train.frame_size {} gives {} bins",
                path.display(),
                config.train.frame_size,
                plan.bins()
            )));
        }
        let mut label = ckpt.model_config.label();
        let n = labels.iter().filter(|l| l.starts_with(&label)).count();
        if n > 0 {
            label = format!("{label}_{}", n + 1);
        }
        labels.push(label);
        models.push(ckpt.model()?);
    }
    rundir::prepare(out, force)?;
    let seeds = pool_seeds(config.seed, Split::Validation, config.sweep.n_scenes);
    let ks: Vec<usize> = (config.sweep.k_min..=config.sweep.k_max).collect();
    rundir::write_record(
        out,
        "sweep",
        config,
        json!({
            "base": config.seed,
            "scenes": seeds,
            "checkpoints": checkpoints,
            "labels": labels,
        }),
    )?;
    let entrants: Vec<Entrant> = labels
        .iter()
        .zip(&models)
        .map(|(l, m)| Entrant::new(l.clone(), m))
        .collect();
    let (rows, details) = match config.sweep.family {
        Family::Dynamic => dynamic_sweep(&entrants, &config.scene, &ks, &seeds, &plan)?,
        Family::Static => static_sweep(&entrants, &config.scene, &ks, &seeds, &plan)?,
    };
    std::fs::write(out.join("results.csv"), to_csv(&rows)?)?;
    if config.sweep.dump_scenes {
        rundir::write_json(&out.join("scenes.json"), &details)?;
    }
    eprintln!("wrote {} rows to {}", rows.len(), out.join("results.csv").display());
    Ok(())
}

/// Returns whether every check passed.
pub fn gradcheck(seed: u64, inject_fault: bool) -> bool {
    let checks = if inject_fault {
        registry_with_fault()
    } else {
        registry()
    };
    let outcomes = run_checks(&checks, seed);
    println!("{:<24} {:>6} {:>14}  result", "check", "trials", "max_rel_error");
    for o in &outcomes {
        println!(
            "{:<24} {:>6} {:>14.3e}  {}{}",
            o.name,
            o.trials,
            o.max_rel_error,
            if o.passed { "PASS" } else { "FAIL" },
            o.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{} checks registered, {} passed, {} failed (tolerance {TOLERANCE:e})",
        outcomes.len(),
        outcomes.len() - failed,
        failed
    );
    failed == 0
}
