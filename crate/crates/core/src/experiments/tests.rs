use super::*;
use crate::dsp::StftPlan;
use crate::models::{Model, ModelConfig, Variant};
use crate::scenegen::SceneConfig;

fn row(scenario: &str, model: &str, k: usize) -> SweepResult {
    SweepResult {
        scenario: scenario.into(),
        model: model.into(),
        k,
        mean_sdr_db: 1.5 + k as f64 * 0.25,
        std_sdr_db: 0.125,
        n_scenes: 20,
    }
}

#[test]
fn single_row_roundtrips() {
    let rows = vec![row("dynamic", "mvn2d", 5)];
    let text = to_csv(&rows).unwrap();
    assert_eq!(parse_csv(&text).unwrap(), rows);
}

#[test]
fn rows_are_sorted_and_counted() {
    let mut rows = Vec::new();
    for model in ["mvn2d", "avg_rnn"] {
        for k in [3, 1, 2] {
            rows.push(row("dynamic", model, k));
        }
    }
    let text = to_csv(&rows).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], CSV_HEADER);
    let keys: Vec<(String, usize)> = parse_csv(&text).unwrap().into_iter().map(|r| (r.model, r.k)).collect();
    let expect: Vec<(String, usize)> = ["avg_rnn", "mvn2d"]
        .iter()
        .flat_map(|m| (1..=3).map(move |k| (m.to_string(), k)))
        .collect();
    assert_eq!(keys, expect);
}

#[test]
fn csv_errors() {
    assert!(to_csv(&[]).is_err());
    assert!(parse_csv("wrong,header\n").is_err());
    assert!(parse_csv(&format!("{CSV_HEADER}\ndynamic,mvn2d,x,1,1,1\n")).is_err());
}

#[test]
fn summary_statistics() {
    let r = SweepResult::from_scores("dynamic", "m", 2, &[1.0, 3.0]).unwrap();
    assert_eq!(r.mean_sdr_db, 2.0);
    assert!((r.std_sdr_db - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(SweepResult::from_scores("d", "m", 1, &[4.0]).unwrap().std_sdr_db, 0.0);
    assert!(SweepResult::from_scores("d", "m", 1, &[]).is_err());
}

#[test]
fn spearman_examples() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert!((spearman(&x, &[2.0, 4.0, 9.0, 16.0, 100.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!((spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    // Ties share the mean rank.
    let s = spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]).unwrap();
    assert!((s - 0.8660254037844386).abs() < 1e-12);
    assert!(spearman(&x, &[1.0; 5]).is_err());
}

fn toy_model(variant: Variant) -> Model {
    let config = ModelConfig {
        input_bins: 9,
        front_dim: 6,
        hidden: 5,
        variant,
        ..ModelConfig::default()
    };
    Model::new(config, 3).unwrap()
}

fn toy_scene_config() -> SceneConfig {
    SceneConfig {
        sample_rate: 8000,
        duration_s: 0.05,
        ..SceneConfig::default()
    }
}

#[test]
fn sweeps_produce_one_row_per_scenario_model_and_k() {
    let plan = StftPlan::new(16, 8).unwrap();
    let a = toy_model(Variant::Mvn2d);
    let b = toy_model(Variant::AvgRnn);
    let entrants = [Entrant::new("mvn2d", &a), Entrant::new("avg_rnn", &b)];
    let seeds = [1, 2, 3];
    let (rows, details) = dynamic_sweep(&entrants, &toy_scene_config(), &[1, 2, 3], &seeds, &plan).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(details.len(), 18);
    assert!(rows.iter().all(|r| r.n_scenes == 3 && r.mean_sdr_db.is_finite()));

    let (rows, _) = static_sweep(&entrants[..1], &toy_scene_config(), &[1, 4], &seeds, &plan).unwrap();
    let scenarios: Vec<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
    assert_eq!(scenarios, ["static_inc", "static_inc", "static_dec", "static_dec"]);
}

#[test]
fn sweeps_are_reproducible() {
    let plan = StftPlan::new(16, 8).unwrap();
    let a = toy_model(Variant::Mvn2d);
    let run = || {
        let (rows, _) = dynamic_sweep(
            &[Entrant::new("mvn2d", &a)],
            &toy_scene_config(),
            &[1, 2],
            &[5, 6],
            &plan,
        )
        .unwrap();
        to_csv(&rows).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn sweep_rejects_a_model_with_the_wrong_bins() {
    let plan = StftPlan::new(32, 16).unwrap();
    let a = toy_model(Variant::Mvn2d);
    let err = dynamic_sweep(&[Entrant::new("mvn2d", &a)], &toy_scene_config(), &[1], &[1], &plan).unwrap_err();
    assert!(matches!(err, crate::Error::Config(_)));
}
