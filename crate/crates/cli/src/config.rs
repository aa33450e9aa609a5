use std::path::{Path, PathBuf};

use multiview_core::models::ModelConfig;
use multiview_core::scenegen::{LadderOrder, Protocol, SceneConfig};
use multiview_core::trainer::TrainConfig;
use multiview_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Scene layouts `gen` can write.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenScenario {
    Dynamic,
    StaticInc,
    StaticDec,
    StaticRandom,
}

impl GenScenario {
    pub fn protocol(self) -> Protocol {
        match self {
            GenScenario::Dynamic => Protocol::Dynamic,
            GenScenario::StaticInc => Protocol::Static(LadderOrder::Increasing),
            GenScenario::StaticDec => Protocol::Static(LadderOrder::Decreasing),
            GenScenario::StaticRandom => Protocol::Static(LadderOrder::Random),
        }
    }
}

/// The two experiment families. Static training uses random-order ladders;
/// a static sweep evaluates increasing and decreasing ladders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dynamic,
    Static,
}

impl Family {
    pub fn training_protocol(self) -> Protocol {
        match self {
            Family::Dynamic => Protocol::Dynamic,
            Family::Static => Protocol::Static(LadderOrder::Random),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub scenario: GenScenario,
    pub k: usize,
    pub n_scenes: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            scenario: GenScenario::Dynamic,
            k: 5,
            n_scenes: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub family: Family,
    /// Scenes written by `gen`; generated on the fly when absent.
    pub train_dir: Option<PathBuf>,
    pub val_dir: Option<PathBuf>,
    pub n_train: usize,
    pub n_val: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            family: Family::Dynamic,
            train_dir: None,
            val_dir: None,
            n_train: 100,
            n_val: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub family: Family,
    pub k_min: usize,
    pub k_max: usize,
    pub n_scenes: usize,
    /// Also write every scene's score to `scenes.json`.
    pub dump_scenes: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            family: Family::Dynamic,
            k_min: 1,
            k_max: 15,
            n_scenes: 20,
            dump_scenes: false,
        }
    }
}

/// Everything a run needs. Written to the run directory before work starts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed: scene pools, parameter initialization and the training
    /// shuffler all derive from it.
    pub seed: u64,
    pub scene: SceneConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub gen: GenConfig,
    pub data: DataConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    /// Reads `path` (or starts from defaults), applies `key=value`
    /// overrides and the seed flag, then validates.
    pub fn resolve(path: Option<&Path>, sets: &[String], seed: Option<u64>) -> Result<Self> {
        let mut value = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Path {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            // Parse once on its own so unknown keys are reported against the file.
            serde_json::from_value::<RunConfig>(file.clone())
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            merge(&mut value, file);
        }
        for set in sets {
            apply_set(&mut value, set)?;
        }
        let mut config: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.train.seed = config.seed;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        if self.model.input_bins != self.train.bins() {
            return Err(Error::Config(format!(
                "model.input_bins is {} but train.frame_size {} gives {} bins",
                self.model.input_bins,
                self.train.frame_size,
                self.train.bins()
            )));
        }
        if self.gen.k == 0 {
            return Err(Error::Config("gen.k must be at least 1".into()));
        }
        if self.gen.n_scenes == 0 {
            return Err(Error::Config("gen.n_scenes must be at least 1".into()));
        }
        if self.data.n_train == 0 || self.data.n_val == 0 {
            return Err(Error::Config("data.n_train and data.n_val must be at least 1".into()));
        }
        if self.sweep.k_min == 0 || self.sweep.k_min > self.sweep.k_max {
            return Err(Error::Config(format!(
                "sweep needs 1 ≤ k_min ≤ k_max, got {}..{}",
                self.sweep.k_min, self.sweep.k_max
            )));
        }
        if self.sweep.n_scenes == 0 {
            return Err(Error::Config("sweep.n_scenes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Overlays `top` onto `base`, recursing into objects.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `a.b.c=value`. The value is read as JSON when it parses and as a
/// plain string otherwise.
fn apply_set(root: &mut Value, set: &str) -> Result<()> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("--set expects key=value, got `{set}`")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Usage(format!("--set has an empty key in `{set}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("--set {key}: `{}` is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(Error::Config(format!("--set {key}: unknown key `{part}`")));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("--set {key}: unknown key `{part}`")))?;
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    unreachable!("split always yields at least one part")
}
