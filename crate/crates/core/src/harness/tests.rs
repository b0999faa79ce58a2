use super::*;

const FIG5_TOML: &str = r#"
seed = 7
trials = 50
algorithms = ["GenieMMSE", "FastMMSE", "Zero"]

[scenario]
kind = "single_path"
angular_spread_deg = 2.0

[sweep]
variable = "nAntennas"
values = [8, 16]
"#;

fn single_path(algs: &[Algorithm], trials: usize, m: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ScenarioConfig::SinglePath { angular_spread_deg: 2.0 }, algs, trials, 11);
    cfg.point.antennas = m;
    cfg
}

fn value(records: &[ResultRecord], alg: Algorithm) -> (f64, f64) {
    let r = records.iter().find(|r| r.algorithm == alg.name()).expect("record present");
    (r.value, r.stderr)
}

#[test]
fn toml_config_parses_and_validates() {
    let cfg = ExperimentConfig::from_toml(FIG5_TOML).unwrap();
    assert_eq!(cfg.trials, 50);
    assert_eq!(cfg.sweep.variable, SweepVariable::Antennas);
    assert_eq!(cfg.algorithm_list().unwrap(), vec![Algorithm::GenieMmse, Algorithm::FastMmse, Algorithm::Zero]);
    let pts = sweep_points(&cfg);
    assert_eq!(pts.iter().map(|p| p.antennas).collect::<Vec<_>>(), vec![8, 16]);
    assert_eq!(pts[1].snr_db, Some(0.0));
    let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad_alg = FIG5_TOML.replace("\"Zero\"", "\"Oracle\"");
    assert!(matches!(ExperimentConfig::from_toml(&bad_alg), Err(crate::Error::UnknownAlgorithm(_))));
    assert!(ExperimentConfig::from_toml(&FIG5_TOML.replace("trials = 50", "trials = 0")).is_err());
    assert!(ExperimentConfig::from_toml(&FIG5_TOML.replace("values = [8, 16]", "values = []")).is_err());
    assert!(ExperimentConfig::from_toml(&FIG5_TOML.replace("values = [8, 16]", "values = [8.5]")).is_err());
    assert!(ExperimentConfig::from_toml(&FIG5_TOML.replace("seed = 7", "seed = 7\nbogus = 1")).is_err());
    let mut cfg = ExperimentConfig::new(ScenarioConfig::placed_user_default(), &[Algorithm::CircMl], 1, 1);
    cfg.sweep = SweepConfig { variable: SweepVariable::Snr, values: vec![0.0] };
    assert!(cfg.validate().is_err());
}

#[test]
fn placed_user_section_uses_table_defaults() {
    let text = "seed = 1\ntrials = 1\nalgorithms = [\"CircML\"]\n[scenario]\nkind = \"placed_user\"\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(cfg.scenario, ScenarioConfig::placed_user_default());
    assert!(sweep_points(&cfg)[0].snr_db.is_none());
}

#[test]
fn single_trial_single_estimator_gives_one_row() {
    let mut cfg = single_path(&[Algorithm::FastMmse], 1, 8);
    cfg.sweep = SweepConfig { variable: SweepVariable::Antennas, values: vec![8.0] };
    let recs = run_mse_sweep(&cfg).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].trials, 1);
    assert_eq!(recs[0].stderr, 0.0);
    let mut buf = Vec::new();
    write_csv(&recs, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = single_path(&[Algorithm::GenieMmse, Algorithm::CircMmse, Algorithm::CircMl, Algorithm::GenieOmp], 40, 8);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_mse_sweep(&cfg).unwrap());
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_mse_sweep(&cfg).unwrap());
    let again = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_mse_sweep(&cfg).unwrap());
    assert_eq!(one, again);
    for (a, b) in one.iter().zip(&four) {
        assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0));
    }
}

#[test]
fn zero_and_genie_calibration() {
    let cfg = single_path(&[Algorithm::Zero, Algorithm::GenieMmse], 1000, 16);
    let recs = run_mse_sweep(&cfg).unwrap();
    let (zero, zse) = value(&recs, Algorithm::Zero);
    let (genie, _) = value(&recs, Algorithm::GenieMmse);
    assert!((zero - 1.0).abs() <= 3.0 * zse, "{zero} +- {zse}");
    assert!(genie < 1.0);
    assert!(recs.iter().all(|r| r.value >= 0.0 && r.stderr >= 0.0));
}

#[test]
fn estimators_do_not_beat_the_genie() {
    let algs = [
        Algorithm::GenieMmse,
        Algorithm::DiscreteMmse,
        Algorithm::CircMmse,
        Algorithm::ToepMmse,
        Algorithm::FastMmse,
        Algorithm::CircMl,
        Algorithm::GenieOmp,
    ];
    let cfg = single_path(&algs, 300, 8);
    let p = prepare_point(&cfg, sweep_points(&cfg)[0], &algs).unwrap();
    let s = p.samples(cfg.trials).unwrap();
    let (genie, gse) = mean_stderr(&s[0]);
    for (a, v) in algs.iter().zip(&s).skip(1) {
        let (m, se) = mean_stderr(v);
        assert!(m >= genie - 2.0 * (se * se + gse * gse).sqrt(), "{a}: {m} vs genie {genie}");
    }
}

#[test]
fn stderr_scales_with_inverse_root_trials() {
    let small = run_mse_sweep(&single_path(&[Algorithm::CircMl], 500, 8)).unwrap();
    let large = run_mse_sweep(&single_path(&[Algorithm::CircMl], 2000, 8)).unwrap();
    let ratio = small[0].stderr / large[0].stderr;
    assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
}

#[test]
fn large_array_mse_is_in_figure_range() {
    let algs = [Algorithm::GenieMmse, Algorithm::CircMmse, Algorithm::ToepMmse, Algorithm::FastMmse];
    let recs = run_mse_sweep(&single_path(&algs, 150, 64)).unwrap();
    for r in &recs {
        assert!((0.05..=0.30).contains(&r.value), "{}: {}", r.algorithm, r.value);
    }
}

#[test]
fn rate_sweep_requires_coherence_axis() {
    let cfg = single_path(&[Algorithm::CircMl], 5, 8);
    assert!(matches!(run_rate_sweep(&cfg), Err(crate::Error::Config(_))));
    let mut cfg = ExperimentConfig::new(ScenarioConfig::placed_user_default(), &[Algorithm::GenieMmse, Algorithm::CircMl, Algorithm::Zero], 60, 3);
    cfg.point.antennas = 8;
    cfg.sweep = SweepConfig { variable: SweepVariable::Coherence, values: vec![1.0, 4.0] };
    let recs = run_rate_sweep(&cfg).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs.iter().all(|r| r.metric == MetricKind::Rate && r.sweep == SweepVariable::Coherence));
    for r in recs.iter().filter(|r| r.algorithm == "Zero") {
        assert_eq!(r.value, 0.0);
    }
    assert!(recs.iter().filter(|r| r.algorithm == "GenieMMSE").all(|r| r.value > 0.0));
}

#[test]
fn missing_model_file_reports_its_path() {
    let mut cfg = single_path(&[Algorithm::ToepRelu], 1, 8);
    cfg.models.insert("ToepReLU".into(), "/nonexistent/relu.cnn".into());
    let err = run_mse_sweep(&cfg).unwrap_err().to_string();
    assert!(err.contains("/nonexistent/relu.cnn"), "{err}");
}

#[test]
fn learned_estimators_run_in_sweeps() {
    let mut cfg = single_path(&[Algorithm::ToepRelu, Algorithm::CircSoftmax, Algorithm::Zero], 20, 8);
    cfg.training.iterations = 30;
    cfg.training.validation_batches = 20;
    cfg.training.stages = 1;
    let recs = run_mse_sweep(&cfg).unwrap();
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r.value.is_finite()));
    assert_eq!(run_mse_sweep(&cfg).unwrap(), recs);
}
