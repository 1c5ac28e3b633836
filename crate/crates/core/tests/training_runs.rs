use ganfair::data::{two_mode_mixture, GroupAssigner};
use ganfair::ensemble::{
    train_boosted_ensemble, DensityEstimator, EnsembleConfig, GeneratorEnsemble, SelectionState,
};
use ganfair::experiment::{run_experiment, DatasetSpec, ExperimentConfig, ModelKind};
use ganfair::fairness::{read_report_csv, RunStatus};
use ganfair::models::{Activation, Generator, MlpNetwork};
use ganfair::numerics::{Rng, Tensor};
use ganfair::training::{train_gan, TrainConfig};
use ganfair::Error;

fn short(steps: usize) -> TrainConfig {
    TrainConfig {
        steps,
        ..TrainConfig::default()
    }
}

#[test]
fn default_training_keeps_discriminator_near_equilibrium() {
    for seed in 0..10 {
        let ds = two_mode_mixture(&[0.5, 0.5], 2000, &mut Rng::with_stream(seed, 0)).unwrap();
        let gan = train_gan(&ds, &TrainConfig::default(), &mut Rng::with_stream(seed, 1)).unwrap();
        assert_eq!(gan.history.len(), 3000);
        let tail = &gan.history[2900..];
        let mean = tail.iter().map(|r| r.mean_d_fake).sum::<f64>() / tail.len() as f64;
        assert!((0.2..=0.8).contains(&mean), "seed {seed}: {mean}");
        assert!(gan.history.iter().all(|r| r.d_loss.is_finite() && r.g_loss.is_finite()));
    }
}

#[test]
fn single_member_ensemble_equals_plain_training() {
    let ds = two_mode_mixture(&[0.7, 0.3], 400, &mut Rng::new(1)).unwrap();
    let cfg = EnsembleConfig {
        size: 1,
        memory: 10,
        stage: short(60),
        ..EnsembleConfig::default()
    };
    let ens = train_boosted_ensemble(&ds, &cfg, &mut Rng::new(5)).unwrap();
    let gan = train_gan(&ds, &short(60), &mut Rng::new(5)).unwrap();
    assert_eq!(ens.generators()[0].net().params(), gan.generator.net().params());
}

#[test]
fn ensemble_structure() {
    let ds = two_mode_mixture(&[0.5, 0.5], 400, &mut Rng::new(2)).unwrap();
    let cfg = EnsembleConfig {
        size: 3,
        memory: 50,
        stage: short(40),
        ..EnsembleConfig::default()
    };
    let ens = train_boosted_ensemble(&ds, &cfg, &mut Rng::new(3)).unwrap();
    assert_eq!(ens.len(), 3);
    assert_eq!(ens.estimators().len(), 3);
    assert!(ens.memory().sets().iter().all(|q| q.rows() == 50 && q.cols() == 2));
    assert!(ens.histories().iter().all(|h| h.len() == 40));

    let again = train_boosted_ensemble(&ds, &cfg, &mut Rng::new(3)).unwrap();
    for (a, b) in ens.generators().iter().zip(again.generators()) {
        assert_eq!(a.net().params(), b.net().params());
    }
}

fn cloud_distance(a: &Tensor, b: &Tensor) -> f64 {
    let mut total = 0.0;
    for x in a.iter_rows() {
        for y in b.iter_rows() {
            total += x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        }
    }
    total / (a.rows() * b.rows()) as f64
}

#[test]
fn distance_penalty_spreads_the_second_generator() {
    let mut with = Vec::new();
    let mut without = Vec::new();
    for seed in 0..5 {
        let ds = two_mode_mixture(&[0.5, 0.5], 2000, &mut Rng::with_stream(seed, 0)).unwrap();
        for (lambda, out) in [(1.0, &mut with), (0.0, &mut without)] {
            let cfg = EnsembleConfig {
                size: 2,
                lambda,
                ..EnsembleConfig::default()
            };
            let ens = train_boosted_ensemble(&ds, &cfg, &mut Rng::with_stream(seed, 1)).unwrap();
            let q = ens.memory().sets();
            out.push(cloud_distance(&q[0], &q[1]));
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[(v.len() - 1) / 2]
    };
    let (w, wo) = (median(&mut with), median(&mut without));
    assert!(w > wo, "lambda=1 {w} vs lambda=0 {wo}");
}

fn fixed_generator(offset: f64) -> Generator {
    // Identity-output net that ignores noise: every sample is (offset, 0).
    let mut rng = Rng::new(0);
    let mut net = MlpNetwork::new(&[2, 2], Activation::Identity, Activation::Identity, &mut rng).unwrap();
    net.params_mut()[0] = Tensor::zeros(&[2, 2]);
    net.params_mut()[1] = Tensor::matrix(1, 2, vec![offset, 0.0]).unwrap();
    Generator::unconditional(net)
}

fn two_point_ensemble() -> GeneratorEnsemble {
    let mut memory = ganfair::ensemble::EnsembleMemory::new();
    memory.push(Tensor::full(&[2, 2], 0.0)).unwrap();
    memory.push(Tensor::from_rows(&[[10.0, 0.0], [10.0, 0.0]], 2).unwrap()).unwrap();
    GeneratorEnsemble::from_parts(
        vec![fixed_generator(0.0), fixed_generator(10.0)],
        memory,
        vec![
            DensityEstimator::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap(),
            DensityEstimator::new(vec![10.0, 0.0], vec![0.5, 0.5]).unwrap(),
        ],
        EnsembleConfig::default(),
    )
    .unwrap()
}

#[test]
fn ensemble_sampling_contracts() {
    let ens = two_point_ensemble();
    let empty = ens.sample(0, &mut Rng::new(1)).unwrap();
    assert_eq!(empty.samples.rows(), 0);

    let s = ens.sample(200, &mut Rng::new(1)).unwrap();
    assert_eq!(s.samples.rows(), 200);
    assert_eq!(s.usage(2).iter().sum::<usize>(), 200);
    assert_eq!(ens.sample(200, &mut Rng::new(1)).unwrap(), s);

    // After each prefix the generator with lower density at the generated points is favored.
    let mut state = SelectionState::new(2);
    for (i, row) in s.samples.iter_rows().enumerate() {
        state.push(ens.estimators(), row.to_vec()).unwrap();
        let p = ens.selection_probabilities(&state).unwrap();
        let covered: Vec<f64> = ens
            .estimators()
            .iter()
            .map(|e| state.samples().iter().map(|g| e.pdf(g).unwrap()).sum())
            .collect();
        if covered[0] > covered[1] {
            assert!(p[0] < p[1], "prefix {i}: {p:?}");
        } else if covered[1] > covered[0] {
            assert!(p[1] < p[0], "prefix {i}: {p:?}");
        }
    }

    let single = GeneratorEnsemble::from_parts(
        vec![fixed_generator(3.0)],
        {
            let mut m = ganfair::ensemble::EnsembleMemory::new();
            m.push(Tensor::full(&[2, 2], 3.0)).unwrap();
            m
        },
        vec![DensityEstimator::new(vec![3.0, 0.0], vec![1.0, 1.0]).unwrap()],
        EnsembleConfig::default(),
    )
    .unwrap();
    let s = single.sample(50, &mut Rng::new(2)).unwrap();
    assert!(s.generator_ids.iter().all(|&i| i == 0));
}

#[test]
fn ensemble_checkpoint_round_trip() {
    let ds = two_mode_mixture(&[0.5, 0.5], 300, &mut Rng::new(4)).unwrap();
    let cfg = EnsembleConfig {
        size: 2,
        memory: 12,
        stage: short(20),
        ..EnsembleConfig::default()
    };
    let ens = train_boosted_ensemble(&ds, &cfg, &mut Rng::new(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ens.save(dir.path()).unwrap();
    for f in ["generator_0.mlp", "generator_1.mlp", "memory_0.csv", "memory_1.csv", "estimators.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let header = std::fs::read_to_string(dir.path().join("estimators.csv")).unwrap();
    assert!(header.starts_with("gen_id,dim,mean,std\n"));
    let back = GeneratorEnsemble::load(dir.path()).unwrap();
    assert_eq!(back.estimators(), ens.estimators());
    assert_eq!(back.memory(), ens.memory());
    assert_eq!(back.sample(30, &mut Rng::new(9)).unwrap(), ens.sample(30, &mut Rng::new(9)).unwrap());
}

fn small_experiment(seeds: Vec<u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_str(
        r#"
model = "gan"
seeds = [0]

[dataset]
kind = "two-mode"
proportions = [0.7, 0.3]
n = 300

[train]
steps = 30

[evaluation]
draws = 100
"#,
    )
    .unwrap();
    c.seeds = seeds;
    c
}

#[test]
fn experiment_writes_expected_layout() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_experiment(vec![5, 1, 3]);
    let outcome = run_experiment(&config, dir.path(), 2).unwrap();
    assert!(!outcome.all_diverged());
    let rows = read_report_csv(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 2);
    let ids: Vec<&str> = rows.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(ids, ["seed1", "seed1", "seed3", "seed3", "seed5", "seed5"]);
    for f in [
        "config.toml",
        "samples.csv",
        "scatter.svg",
        "meta.json",
        "runs/seed1/generator.mlp",
        "runs/seed1/discriminator.mlp",
        "runs/seed1/history.csv",
        "runs/seed1/samples.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let snapshot = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(snapshot, config);
    let samples = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(samples.starts_with("run_id,sample_idx,group_id,dim_0,dim_1\n"));
    assert_eq!(samples.lines().count(), 1 + 300);
}

#[test]
fn conditional_and_ensemble_experiments_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cgan = small_experiment(vec![0, 1]);
    cgan.model = ModelKind::Cgan;
    cgan.evaluation.samples_per_label = 20;
    run_experiment(&cgan, &dir.path().join("cgan"), 1).unwrap();
    let purity = std::fs::read_to_string(dir.path().join("cgan/purity.csv")).unwrap();
    assert_eq!(purity.lines().count(), 1 + 2 * 2);

    let mut ens = small_experiment(vec![2]);
    ens.model = ModelKind::Ensemble;
    ens.dataset = DatasetSpec::Ring { proportions: None, n: 200 };
    ens.evaluation.assigner = Some("ring8".into());
    ens.evaluation.target = ganfair::experiment::TargetSpec::Named("uniform".into());
    ens.ensemble.size = 2;
    ens.ensemble.memory = 8;
    ens.validate().unwrap();
    run_experiment(&ens, &dir.path().join("ens"), 1).unwrap();
    assert!(dir.path().join("ens/runs/seed2/ensemble/estimators.csv").exists());
    let rows = read_report_csv(&dir.path().join("ens/metrics.csv")).unwrap();
    assert_eq!(rows.len(), 8);
}

#[test]
fn patch_experiment_uses_mean_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_experiment(vec![0]);
    c.dataset = DatasetSpec::Patches {
        proportions: vec![0.3, 0.7],
        n: 200,
        noise_sigma: 0.05,
        margin: 0.1,
    };
    c.train.noise_dim = 8;
    c.validate().unwrap();
    let outcome = run_experiment(&c, dir.path(), 1).unwrap();
    let report = outcome.runs[0].report.as_ref().unwrap();
    assert_eq!(report.assigner, GroupAssigner::MeanThreshold(0.5).describe());
}

#[test]
fn divergent_seeds_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_experiment(vec![0, 1]);
    c.train.lr_generator = 1e300;
    c.train.lr_discriminator = 1e300;
    let outcome = run_experiment(&c, dir.path(), 1).unwrap();
    assert!(outcome.all_diverged());
    assert!(outcome.aggregate.is_none());
    let rows = read_report_csv(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.status == RunStatus::Diverged && r.rate.is_nan()));
    assert!(outcome.runs[0].divergence.as_deref().unwrap().contains("diverged"));
}

#[test]
fn invalid_config_names_the_key() {
    let text = r#"
model = "gan"
[dataset]
kind = "two-mode"
proportions = [0.6, 0.6]
"#;
    match ExperimentConfig::from_str(text) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "dataset.proportions"),
        other => panic!("{other:?}"),
    }
}
