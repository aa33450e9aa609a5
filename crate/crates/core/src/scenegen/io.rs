use std::fs;
use std::path::{Path, PathBuf};

use super::{Scene, SceneMeta};
use crate::dsp::{read_wav, write_wav, Waveform};
use crate::error::{Error, Result};

const META_FILE: &str = "meta.json";
const CLEAN_FILE: &str = "clean.wav";

/// PCM16 peak that exports are scaled to stay under.
const EXPORT_PEAK: f64 = 0.99;

fn channel_file(i: usize) -> String {
    format!("ch{i:02}.wav")
}

/// Writes `chNN.wav` per channel, `clean.wav` and `meta.json` into `dir`.
///
/// All signals share one scale factor, chosen so nothing clips; it is
/// recorded in the metadata and undone by [`load_scene`].
pub fn save_scene(dir: &Path, scene: &Scene) -> Result<()> {
    fs::create_dir_all(dir)?;
    let peak = scene
        .channels
        .iter()
        .chain(std::iter::once(&scene.clean))
        .flat_map(|w| w.samples.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > EXPORT_PEAK { EXPORT_PEAK / peak } else { 1.0 };
    let scaled = |w: &Waveform| Waveform::new(w.samples.iter().map(|v| v * scale).collect(), w.sample_rate);
    for (i, ch) in scene.channels.iter().enumerate() {
        write_wav(&dir.join(channel_file(i)), &scaled(ch))?;
    }
    write_wav(&dir.join(CLEAN_FILE), &scaled(&scene.clean))?;
    let mut meta = scene.meta.clone();
    meta.export_scale = scale;
    fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Reads a scene written by [`save_scene`] or laid out the same way by hand.
pub fn load_scene(dir: &Path) -> Result<Scene> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::Path {
        path: meta_path.clone(),
        reason: e.to_string(),
    })?;
    let meta: SceneMeta =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
    if !(meta.export_scale > 0.0 && meta.export_scale.is_finite()) {
        return Err(Error::Format(format!(
            "{}: export_scale must be positive, got {}",
            meta_path.display(),
            meta.export_scale
        )));
    }
    let unscale = |w: Waveform| Waveform::new(w.samples.iter().map(|v| v / meta.export_scale).collect(), w.sample_rate);
    let channels = (0..meta.k)
        .map(|i| read_wav(&dir.join(channel_file(i))).map(unscale))
        .collect::<Result<Vec<_>>>()?;
    let clean = unscale(read_wav(&dir.join(CLEAN_FILE))?);
    Scene::new(channels, clean, meta)
}

/// Subdirectories of `root` holding a `meta.json`, sorted by name.
pub fn list_scene_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::Path {
        path: root.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_dir() && path.join(META_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Loads every scene under `root`. An empty directory is a path error.
pub fn load_scenes(root: &Path) -> Result<Vec<Scene>> {
    let dirs = list_scene_dirs(root)?;
    if dirs.is_empty() {
        return Err(Error::Path {
            path: root.to_path_buf(),
            reason: "contains no scene directories".into(),
        });
    }
    dirs.iter().map(|d| load_scene(d)).collect()
}
