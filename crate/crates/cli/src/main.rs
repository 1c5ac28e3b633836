use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ganfair::data::{write_samples_csv, GroupAssigner};
use ganfair::diagnostics::{gradient_suite, GRAD_CHECK_EPS};
use ganfair::ensemble::GeneratorEnsemble;
use ganfair::experiment::{evaluate_samples, run_experiment_file};
use ganfair::fairness::write_report_csv;
use ganfair::models::{Generator, MlpNetwork};
use ganfair::numerics::{Rng, Tensor};
use ganfair::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_ALL_DIVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "ganfair", version, about = "Group representation experiments for GAN generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every seed in a config, writing metrics and checkpoints.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker count; GANFAIR_THREADS takes precedence.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Draw samples from a generator checkpoint or an ensemble directory.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        /// Condition for conditional generators.
        #[arg(long)]
        label: Option<usize>,
        /// Condition width of a conditional generator.
        #[arg(long)]
        groups: Option<usize>,
        /// Fill `group_id` with this assigner instead of the label or source generator.
        #[arg(long)]
        assigner: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure group rates of a sample file and print a report row per group.
    Evaluate {
        #[arg(long)]
        samples: PathBuf,
        /// `two-mode`, `ring8`, `mean-threshold[:tau]`, or `nearest-center:x,y;x,y`.
        #[arg(long)]
        assigner: String,
        /// `uniform` or comma-separated proportions.
        #[arg(long)]
        target: String,
    },
    /// Finite-difference check of every differentiable op and loss.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment { config, out, parallel } => experiment(&config, out.as_deref(), parallel),
        Command::Sample {
            model,
            n,
            label,
            groups,
            assigner,
            seed,
            out,
        } => sample(&model, n, label, groups, assigner.as_deref(), seed, &out).map(|()| ExitCode::SUCCESS),
        Command::Evaluate {
            samples,
            assigner,
            target,
        } => evaluate(&samples, &assigner, &target).map(|()| ExitCode::SUCCESS),
        Command::Gradcheck { points, seed } => gradcheck(points, seed),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code(&e))
    })
}

fn experiment(config: &Path, out: Option<&Path>, parallel: Option<usize>) -> ganfair::Result<ExitCode> {
    let (config, outcome) = run_experiment_file(config, out, parallel)?;
    println!("{} on {}, {} seeds", config.model.tag(), config.dataset.name(), outcome.runs.len());
    for run in &outcome.runs {
        match (&run.report, &run.divergence) {
            (Some(r), _) => {
                let rates: Vec<String> = r.rates.iter().map(|x| format!("{x:.3}")).collect();
                let purity = run
                    .purity
                    .as_ref()
                    .map(|p| {
                        let p: Vec<String> = p.iter().map(|x| format!("{x:.3}")).collect();
                        format!("  purity [{}]", p.join(", "))
                    })
                    .unwrap_or_default();
                println!("  {:<8} tv {:.4}  rates [{}]{purity}", run.run_id, r.tv, rates.join(", "));
            }
            (None, Some(reason)) => println!("  {:<8} diverged: {reason}", run.run_id),
            (None, None) => println!("  {:<8} diverged", run.run_id),
        }
    }
    if let Some(agg) = &outcome.aggregate {
        println!(
            "median tv {:.4}, max tv {:.4}, worst group rate {:.4} over {} runs",
            agg.median_tv(),
            agg.max_tv(),
            agg.worst_group_min_rate,
            agg.runs
        );
    }
    println!("wrote {}", outcome.out_dir.display());
    if outcome.all_diverged() {
        eprintln!("error: every seed diverged");
        return Ok(ExitCode::from(EXIT_ALL_DIVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn sample(
    model: &Path,
    n: usize,
    label: Option<usize>,
    groups: Option<usize>,
    assigner: Option<&str>,
    seed: u64,
    out: &Path,
) -> ganfair::Result<()> {
    let mut rng = Rng::new(seed);
    let (samples, ids): (Tensor, Vec<usize>) = if model.is_dir() {
        if label.is_some() || groups.is_some() {
            return Err(Error::InvalidArgument("ensembles are unconditional; drop --label/--groups".into()));
        }
        let ens = GeneratorEnsemble::load(model)?;
        let s = ens.sample(n, &mut rng)?;
        (s.samples, s.generator_ids)
    } else {
        let net = MlpNetwork::load(model)?;
        match (groups, label) {
            (Some(k), Some(l)) => {
                let generator = Generator::conditional(net, k)?;
                (generator.sample(n, &mut rng, Some(l))?, vec![l; n])
            }
            (None, None) => (Generator::unconditional(net).sample(n, &mut rng, None)?, vec![0; n]),
            (None, Some(_)) => return Err(Error::InvalidArgument("--label needs --groups".into())),
            (Some(_), None) => return Err(Error::InvalidArgument("--groups needs --label".into())),
        }
    };
    let ids = match assigner {
        Some(spec) => {
            let a = GroupAssigner::parse(spec)?;
            samples.iter_rows().map(|row| a.assign(row)).collect::<ganfair::Result<Vec<_>>>()?
        }
        None => ids,
    };
    write_samples_csv(out, &samples, &ids)
}

fn parse_target(spec: &str, groups: usize) -> ganfair::Result<Vec<f64>> {
    if spec == "uniform" {
        return Ok(vec![1.0 / groups as f64; groups]);
    }
    spec.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("target entry `{v}` is not a number")))
        })
        .collect()
}

fn evaluate(samples: &Path, assigner: &str, target: &str) -> ganfair::Result<()> {
    let assigner = GroupAssigner::parse(assigner)?;
    let target = parse_target(target, assigner.groups())?;
    let run = samples.file_stem().and_then(|s| s.to_str()).unwrap_or("samples").to_string();
    let report = evaluate_samples(samples, &assigner, &target)?.with_run(run, 0, "external", "file");
    write_report_csv(std::io::stdout().lock(), &report.rows())
}

fn gradcheck(points: usize, seed: u64) -> ganfair::Result<ExitCode> {
    let results = gradient_suite(points, seed)?;
    let mut ok = true;
    println!("{:<32} {:>12}  (eps {GRAD_CHECK_EPS:e}, {points} points)", "check", "max rel err");
    for r in &results {
        let pass = r.max_error < 1e-4;
        ok &= pass;
        println!("{:<32} {:>12.3e}  {}", r.name, r.max_error, if pass { "ok" } else { "FAIL" });
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE) })
}
