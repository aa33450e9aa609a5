use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "scenario,model,k,mean_sdr_db,std_sdr_db,n_scenes";

/// Aggregate score of one model at one channel count in one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub model: String,
    pub k: usize,
    pub mean_sdr_db: f64,
    /// Sample standard deviation; zero for a single scene.
    pub std_sdr_db: f64,
    pub n_scenes: usize,
}

impl SweepResult {
    pub fn from_scores(scenario: &str, model: &str, k: usize, scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Input(format!("no scores for {scenario}/{model} at k = {k}")));
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let std = if scores.len() > 1 {
            (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(SweepResult {
            scenario: scenario.to_string(),
            model: model.to_string(),
            k,
            mean_sdr_db: mean,
            std_sdr_db: std,
            n_scenes: scores.len(),
        })
    }
}

/// One evaluated scene, for the optional per-scene dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneScore {
    pub scenario: String,
    pub model: String,
    pub k: usize,
    pub seed: u64,
    pub snrs_db: Vec<f64>,
    pub sdr_db: f64,
}

/// Sorts by (scenario, model, k) and renders the CSV.
pub fn to_csv(results: &[SweepResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::Input("no sweep results to write".into()));
    }
    let mut rows = results.to_vec();
    rows.sort_by(|a, b| (&a.scenario, &a.model, a.k).cmp(&(&b.scenario, &b.model, b.k)));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        for field in [&r.scenario, &r.model] {
            if field.contains([',', '"', '\n']) {
                return Err(Error::Input(format!("CSV field `{field}` contains a separator")));
            }
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scenario, r.model, r.k, r.mean_sdr_db, r.std_sdr_db, r.n_scenes
        );
    }
    Ok(out)
}

pub fn emit_csv(results: &[SweepResult], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(results)?).map_err(|e| Error::Path {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepResult>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "expected CSV header `{CSV_HEADER}`, found {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = |what: &str| Error::Format(format!("CSV line {}: {what}", i + 2));
            let f: Vec<&str> = line.trim_end().split(',').collect();
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            Ok(SweepResult {
                scenario: f[0].to_string(),
                model: f[1].to_string(),
                k: f[2].parse().map_err(|_| bad("bad k"))?,
                mean_sdr_db: f[3].parse().map_err(|_| bad("bad mean_sdr_db"))?,
                std_sdr_db: f[4].parse().map_err(|_| bad("bad std_sdr_db"))?,
                n_scenes: f[5].parse().map_err(|_| bad("bad n_scenes"))?,
            })
        })
        .collect()
}

/// Spearman rank correlation, with tied values given their mean rank.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Input(format!(
            "spearman needs two equal-length series of at least 2, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Input("spearman is undefined for a constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            out[p] = rank;
        }
        i = j + 1;
    }
    out
}
