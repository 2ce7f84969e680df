use ucmf::dataset::{split, SplitSpec};
use ucmf::evaluation::{
    run_experiment, run_experiment_with, sweep, ExperimentConfig, ExperimentError, Metric, ModelKind, Stage,
    SweepParameter, SweepSpec,
};
use ucmf::factorization::TrainingConfig;
use ucmf::seed::run_seed;
use ucmf::synthetic::{generate, SyntheticConfig, SyntheticData};

fn data() -> SyntheticData {
    generate(&SyntheticConfig {
        users: 120,
        items: 90,
        ratings_per_user: 20,
        ..Default::default()
    })
    .unwrap()
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        fractions: vec![0.9, 0.7],
        runs: 3,
        training: TrainingConfig {
            epochs: 15,
            eta: 0.01,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn report_rows_are_complete_and_consistent() {
    let d = data();
    let cfg = config();
    let report = run_experiment(&d.ratings, &d.tags, &cfg).unwrap();
    assert_eq!(report.rows().len(), 2 * 3 * 4);
    for f in &cfg.fractions {
        for run in 0..cfg.runs {
            let seed = run_seed(cfg.base_seed, *f, run);
            let (train, test) = split(&d.ratings, &SplitSpec::new(*f, seed).unwrap()).unwrap();
            let rows: Vec<_> = report.rows().iter().filter(|r| r.fraction == *f && r.run == run).collect();
            assert_eq!(rows.len(), 4);
            for r in rows {
                assert_eq!(r.metrics.tested, test.len());
                assert_eq!(r.partition, train.fingerprint());
                assert!(r.metrics.rmse >= r.metrics.mae);
            }
        }
    }
}

#[test]
fn summary_is_recomputable_from_rows() {
    let d = data();
    let cfg = config();
    let report = run_experiment(&d.ratings, &d.tags, &cfg).unwrap();
    let summary = report.summary();
    assert_eq!(summary.len(), 2 * 4 * 2);
    for s in summary {
        let values: Vec<f64> = report
            .rows()
            .iter()
            .filter(|r| r.fraction == s.fraction && r.model == s.model)
            .map(|r| s.metric.of(&r.metrics))
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.stddev - var.sqrt()).abs() < 1e-12);
        assert_eq!(s.runs, 3);
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let d = data();
    let cfg = config();
    let a = run_experiment(&d.ratings, &d.tags, &cfg).unwrap();
    let b = run_experiment(&d.ratings, &d.tags, &cfg).unwrap();
    assert_eq!(a.runs_csv(), b.runs_csv());
    assert_eq!(a.summary_csv(), b.summary_csv());
    let other = run_experiment(&d.ratings, &d.tags, &ExperimentConfig { base_seed: 1, ..cfg }).unwrap();
    assert_ne!(a.runs_csv(), other.runs_csv());
}

#[test]
fn thread_count_does_not_change_results() {
    let d = data();
    let cfg = config();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = single.install(|| run_experiment(&d.ratings, &d.tags, &cfg).unwrap());
    let b = many.install(|| run_experiment(&d.ratings, &d.tags, &cfg).unwrap());
    assert_eq!(a.runs_csv(), b.runs_csv());
}

#[test]
fn runs_are_reproducible_in_isolation() {
    let d = data();
    let cfg = config();
    let full = run_experiment(&d.ratings, &d.tags, &cfg).unwrap();
    let alone = run_experiment(&d.ratings, &d.tags, &ExperimentConfig { fractions: vec![0.7], ..cfg }).unwrap();
    for r in alone.rows() {
        let twin = full
            .rows()
            .iter()
            .find(|x| x.fraction == r.fraction && x.run == r.run && x.model == r.model)
            .unwrap();
        assert_eq!(twin, r);
    }
}

#[test]
fn clustered_model_beats_the_baselines_on_planted_groups() {
    let d = generate(&SyntheticConfig::default()).unwrap();
    let cfg = ExperimentConfig {
        fractions: vec![0.8],
        runs: 2,
        training: TrainingConfig {
            epochs: 40,
            eta: 0.01,
            alpha: 0.05,
            ..Default::default()
        },
        ..Default::default()
    };
    let report = run_experiment(&d.ratings, &d.tags, &cfg).unwrap();
    let mae = |m| report.mean(0.8, m, Metric::Mae).unwrap();
    assert!(mae(ModelKind::Ucmf) < mae(ModelKind::UserMean));
    assert!(mae(ModelKind::Ucmf) < mae(ModelKind::ItemMean));
}

#[test]
fn invalid_configs_are_rejected_up_front() {
    let d = data();
    for bad in [
        ExperimentConfig { runs: 0, ..config() },
        ExperimentConfig { fractions: vec![], ..config() },
        ExperimentConfig { fractions: vec![1.0], ..config() },
        ExperimentConfig { fractions: vec![0.8, 0.8], ..config() },
    ] {
        assert!(matches!(run_experiment(&d.ratings, &d.tags, &bad), Err(ExperimentError::Invalid(_))));
    }
}

#[test]
fn divergence_reports_its_provenance_and_keeps_partial_rows() {
    let d = data();
    let cfg = ExperimentConfig {
        fractions: vec![0.9],
        runs: 1,
        training: TrainingConfig { eta: 50.0, ..config().training },
        ..config()
    };
    match run_experiment(&d.ratings, &d.tags, &cfg) {
        Err(ExperimentError::Run { fraction, run, stage, partial, .. }) => {
            assert_eq!((fraction, run), (0.9, 0));
            assert_eq!(stage, Stage::Model(ModelKind::Mf));
            let models: Vec<ModelKind> = partial.rows().iter().map(|r| r.model).collect();
            assert_eq!(models, vec![ModelKind::UserMean, ModelKind::ItemMean]);
        }
        other => panic!("expected a run failure, got {other:?}"),
    }
}

#[test]
fn artifact_hook_sees_every_run() {
    let d = data();
    let cfg = config();
    let seen = std::sync::Mutex::new(Vec::new());
    let hook = |a: &ucmf::evaluation::RunArtifacts<'_>| {
        assert_eq!(a.assignment.labels().len(), a.train.n_users());
        assert_eq!(a.mf.n_users(), a.train.n_users());
        seen.lock().unwrap().push((a.fraction.to_bits(), a.run));
        Ok(())
    };
    run_experiment_with(&d.ratings, &d.tags, &cfg, Some(&hook)).unwrap();
    let mut seen = seen.into_inner().unwrap();
    seen.sort();
    assert_eq!(seen.len(), 6);
}

#[test]
fn single_value_sweep_equals_the_direct_run() {
    let d = data();
    let cfg = config();
    let direct = run_experiment(&d.ratings, &d.tags, &ExperimentConfig { fractions: vec![0.9], ..cfg.clone() }).unwrap();
    for (parameter, value) in [
        (SweepParameter::Alpha, cfg.training.alpha),
        (SweepParameter::K, cfg.clustering.k as f64),
    ] {
        let spec = SweepSpec::new(parameter, vec![value]).unwrap();
        let report = sweep(&d.ratings, &d.tags, &spec, 0.9, &cfg).unwrap();
        assert_eq!(report.points.len(), 1);
        for r in &report.points[0].runs {
            let row = direct
                .rows()
                .iter()
                .find(|x| x.run == r.run && x.model == ModelKind::Ucmf)
                .unwrap();
            assert_eq!(row.metrics, r.metrics);
            assert_eq!(row.partition, r.partition);
        }
        let mean = direct.mean(0.9, ModelKind::Ucmf, Metric::Mae).unwrap();
        assert!((report.points[0].mae_mean - mean).abs() < 1e-15);
    }
}

#[test]
fn sweeps_share_partitions_across_values() {
    let d = data();
    let cfg = ExperimentConfig { runs: 2, ..config() };
    for spec in [
        SweepSpec::new(SweepParameter::Alpha, vec![0.0, 0.01, 0.1]).unwrap(),
        SweepSpec::new(SweepParameter::K, vec![2.0, 4.0]).unwrap(),
    ] {
        let report = sweep(&d.ratings, &d.tags, &spec, 0.8, &cfg).unwrap();
        assert_eq!(report.points.len(), spec.values.len());
        for run in 0..2 {
            let hashes: Vec<u64> = report.points.iter().map(|p| p.runs[run].partition).collect();
            assert!(hashes.windows(2).all(|w| w[0] == w[1]));
        }
        assert_eq!(report.csv(), sweep(&d.ratings, &d.tags, &spec, 0.8, &cfg).unwrap().csv());
    }
}

#[test]
fn oversized_k_fails_in_clustering() {
    let d = data();
    let spec = SweepSpec::new(SweepParameter::K, vec![5000.0]).unwrap();
    match sweep(&d.ratings, &d.tags, &spec, 0.9, &config()) {
        Err(ExperimentError::Run { stage, .. }) => assert_eq!(stage, Stage::Clustering),
        other => panic!("{other:?}"),
    }
}
