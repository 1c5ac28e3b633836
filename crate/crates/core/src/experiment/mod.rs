//! Multi-seed experiments: build the dataset, train, sample, measure, and write artifacts.
//!
//! Every seed uses three independent random streams derived from the seed alone
//! (dataset, training, evaluation), so a run's outputs do not depend on which other
//! seeds are in the list or on worker scheduling.

mod config;
mod svg;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{DatasetSpec, EvaluationConfig, ExperimentConfig, ModelKind, TargetSpec};
pub use svg::{emit_scatter_svg, scatter_svg};

use crate::data::{csv_error, write_samples_csv, GroupAssigner};
use crate::ensemble::train_boosted_ensemble;
use crate::error::{Error, Result};
use crate::fairness::{aggregate_runs, conditional_purity, emit_csv, group_rates, AggregateReport, GroupRateReport, ReportRow};
use crate::numerics::{Rng, Tensor};
use crate::training::{train_cgan, train_gan, write_history_csv};

pub const THREADS_ENV: &str = "GANFAIR_THREADS";

const DATASET_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

pub fn run_id(seed: u64) -> String {
    format!("seed{seed}")
}

/// Worker count: `GANFAIR_THREADS`, then the command-line value, then the config, then the machine.
pub fn resolve_threads(cli: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got `{v}`"))),
        };
    }
    if cli == Some(0) {
        return Err(Error::config("parallel", "must be at least 1"));
    }
    Ok(cli
        .or(config)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub seed: u64,
    pub run_id: String,
    /// `None` when training diverged.
    pub report: Option<GroupRateReport>,
    /// Conditional models: purity per label.
    pub purity: Option<Vec<f64>>,
    pub samples: Option<Tensor>,
    pub assigned: Vec<usize>,
    pub divergence: Option<String>,
}

impl RunOutput {
    pub fn diverged(&self) -> bool {
        self.report.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    /// Sorted by seed.
    pub runs: Vec<RunOutput>,
    /// Over non-diverged runs; `None` when every run diverged.
    pub aggregate: Option<AggregateReport>,
}

impl ExperimentOutcome {
    pub fn all_diverged(&self) -> bool {
        self.runs.iter().all(RunOutput::diverged)
    }

    pub fn rows(&self, config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
        let target = config.target()?;
        Ok(self
            .runs
            .iter()
            .flat_map(|r| match &r.report {
                Some(rep) => rep.rows(),
                None => ReportRow::diverged(&r.run_id, r.seed, config.model.tag(), config.dataset.name(), &target),
            })
            .collect())
    }
}

/// Trains and evaluates one seed. Checkpoints go to `run_dir` when given.
pub fn run_seed(config: &ExperimentConfig, seed: u64, run_dir: Option<&Path>) -> Result<RunOutput> {
    let id = run_id(seed);
    let dataset = config.dataset.build(&mut Rng::with_stream(seed, DATASET_STREAM))?;
    let assigner = config.assigner()?;
    let target = config.target()?;
    let mut train_rng = Rng::with_stream(seed, TRAIN_STREAM);
    let mut eval_rng = Rng::with_stream(seed, EVAL_STREAM);
    let draws = config.evaluation.draws;
    if let Some(dir) = run_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let trained = match config.model {
        ModelKind::Gan => train_gan(&dataset, &config.train, &mut train_rng).map(Trained::Single),
        ModelKind::Cgan => train_cgan(&dataset, &config.train, &mut train_rng).map(Trained::Single),
        ModelKind::Ensemble => {
            train_boosted_ensemble(&dataset, &config.ensemble_config(), &mut train_rng).map(Trained::Ensemble)
        }
    };
    let trained = match trained {
        Ok(t) => t,
        Err(e @ Error::Diverged { .. }) => {
            return Ok(RunOutput {
                seed,
                run_id: id,
                report: None,
                purity: None,
                samples: None,
                assigned: Vec::new(),
                divergence: Some(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };

    let (samples, purity) = match &trained {
        Trained::Single(gan) => {
            let samples = gan.sample_marginal(draws, &mut eval_rng)?;
            let purity = if gan.is_conditional() {
                let per_label = (0..dataset.groups())
                    .map(|label| {
                        let s = gan.sample(config.evaluation.samples_per_label, &mut eval_rng, Some(label))?;
                        conditional_purity(&s, &assigner, label)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(per_label)
            } else {
                None
            };
            (samples, purity)
        }
        Trained::Ensemble(ens) => (ens.sample(draws, &mut eval_rng)?.samples, None),
    };
    let report = group_rates(&samples, &assigner, &target)?.with_run(&id, seed, config.model.tag(), config.dataset.name());
    let assigned = samples
        .iter_rows()
        .map(|row| assigner.assign(row))
        .collect::<Result<Vec<_>>>()?;

    if let Some(dir) = run_dir {
        match &trained {
            Trained::Single(gan) => {
                gan.generator.net().save(&dir.join("generator.mlp"))?;
                gan.discriminator.save(&dir.join("discriminator.mlp"))?;
                write_history_csv(&dir.join("history.csv"), &gan.history)?;
            }
            Trained::Ensemble(ens) => {
                ens.save(&dir.join("ensemble"))?;
                for (i, h) in ens.histories().iter().enumerate() {
                    write_history_csv(&dir.join(format!("history_{i}.csv")), h)?;
                }
            }
        }
        write_samples_csv(&dir.join("samples.csv"), &samples, &assigned)?;
        if config.evaluation.scatter {
            emit_scatter_svg(&samples, &assigned, assigner.groups(), &dir.join("scatter.svg"))?;
        }
    }

    Ok(RunOutput {
        seed,
        run_id: id,
        report: Some(report),
        purity,
        samples: Some(samples),
        assigned,
        divergence: None,
    })
}

enum Trained {
    Single(crate::training::TrainedGan),
    Ensemble(crate::ensemble::GeneratorEnsemble),
}

/// Runs every seed on at most `threads` workers and writes the experiment directory:
/// `config.toml`, `metrics.csv`, `samples.csv`, `purity.csv` (conditional models),
/// `scatter.svg`, `meta.json`, and `runs/seed<N>/` with checkpoints and per-run dumps.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, threads: usize) -> Result<ExperimentOutcome> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let snapshot = out_dir.join("config.toml");
    std::fs::write(&snapshot, config.to_toml()).map_err(|e| Error::io(&snapshot, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let runs_dir = out_dir.join("runs");
    let mut runs = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_seed(config, seed, Some(&runs_dir.join(run_id(seed)))))
            .collect::<Result<Vec<_>>>()
    })?;
    runs.sort_by_key(|r| r.seed);

    let ok: Vec<GroupRateReport> = runs.iter().filter_map(|r| r.report.clone()).collect();
    let aggregate = if ok.is_empty() { None } else { Some(aggregate_runs(&ok)?) };
    let outcome = ExperimentOutcome {
        out_dir: out_dir.to_path_buf(),
        runs,
        aggregate,
    };

    emit_csv(&outcome.rows(config)?, &out_dir.join("metrics.csv"))?;
    write_combined_samples(&out_dir.join("samples.csv"), &outcome.runs)?;
    if config.model == ModelKind::Cgan {
        write_purity(&out_dir.join("purity.csv"), &outcome.runs)?;
    }
    if config.evaluation.scatter {
        if let Some(first) = outcome.runs.iter().find(|r| !r.diverged()) {
            let samples = first.samples.as_ref().expect("successful runs keep samples");
            emit_scatter_svg(samples, &first.assigned, config.dataset.groups(), &out_dir.join("scatter.svg"))?;
        }
    }
    write_meta(&out_dir.join("meta.json"), threads, &outcome)?;
    Ok(outcome)
}

/// Like [`run_experiment`] but reads the config from disk. `out` and `parallel` override the file.
pub fn run_experiment_file(path: &Path, out: Option<&Path>, parallel: Option<usize>) -> Result<(ExperimentConfig, ExperimentOutcome)> {
    let config = ExperimentConfig::load(path)?;
    let out_dir = match (out, &config.out_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(Error::config("out_dir", "no output directory given")),
    };
    let threads = resolve_threads(parallel, config.parallel)?;
    let outcome = run_experiment(&config, &out_dir, threads)?;
    Ok((config, outcome))
}

fn write_combined_samples(path: &Path, runs: &[RunOutput]) -> Result<()> {
    let dim = runs
        .iter()
        .find_map(|r| r.samples.as_ref().map(Tensor::cols))
        .unwrap_or(0);
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(std::io::BufWriter::new(file));
    let mut header = vec!["run_id".to_string(), "sample_idx".to_string(), "group_id".to_string()];
    header.extend((0..dim).map(|j| format!("dim_{j}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for run in runs {
        let Some(samples) = &run.samples else { continue };
        for (i, (row, g)) in samples.iter_rows().zip(&run.assigned).enumerate() {
            let mut rec = vec![run.run_id.clone(), i.to_string(), g.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_purity(path: &Path, runs: &[RunOutput]) -> Result<()> {
    let mut out = String::from("run_id,seed,label,purity\n");
    for run in runs {
        for (label, p) in run.purity.iter().flatten().enumerate() {
            out.push_str(&format!("{},{},{label},{p:.6}\n", run.run_id, run.seed));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_meta(path: &Path, threads: usize, outcome: &ExperimentOutcome) -> Result<()> {
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let meta = serde_json::json!({
        "created_unix": created,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "runs": outcome.runs.len(),
        "diverged": outcome.runs.iter().filter(|r| r.diverged()).map(|r| &r.run_id).collect::<Vec<_>>(),
    });
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&meta).expect("meta is plain JSON")).map_err(|e| Error::io(path, e))
}

/// Reads a sample dump and measures it against `target`.
pub fn evaluate_samples(path: &Path, assigner: &GroupAssigner, target: &[f64]) -> Result<GroupRateReport> {
    let (samples, _) = crate::data::read_samples_csv(path)?;
    group_rates(&samples, assigner, target)
}
