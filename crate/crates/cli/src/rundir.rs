use std::fs;
use std::path::Path;

use multiview_core::{Error, Result, VERSION};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// Makes sure `dir` exists and is empty, unless `force` allows reuse.
pub fn prepare(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(Error::Path {
                path: dir.to_path_buf(),
                reason: "exists and is not a directory".into(),
            });
        }
        let non_empty = fs::read_dir(dir)?.next().is_some();
        if non_empty && !force {
            return Err(Error::Usage(format!(
                "output directory {} is not empty (pass --force to reuse it)",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::Path {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })
}

#[derive(Serialize)]
struct RunRecord<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    seeds: Value,
}

/// Writes `run.json` with the resolved config, tool version and seeds.
pub fn write_record(dir: &Path, command: &str, config: &RunConfig, seeds: Value) -> Result<()> {
    let record = RunRecord {
        tool: "mvn",
        version: VERSION,
        command,
        config,
        seeds,
    };
    write_json(&dir.join("run.json"), &record)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
