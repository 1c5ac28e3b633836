//! Boosted generator ensembles.
//!
//! Generators are trained one after another. Each new generator's loss gets a
//! distance penalty
//!
//! ```text
//! Θ = Φ(Q) / Σ_j Σ_{x∈Q_j} Σ_{f∈F} max(‖x − f‖, ε_dist),   Φ(Q) = λ · |Q| · |F|
//! ```
//!
//! i.e. λ over the mean distance between the current fake batch `F` and every
//! sample stored from earlier generators. After a stage, `m` samples of the new
//! generator are stored and a diagonal Normal is fitted to them. At sampling
//! time a generator is picked with probability proportional to
//! `Π_{g ∈ generated} exp(1 − P_i(g))`, evaluated in log space.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{read_samples_csv, write_samples_csv, GroupedDataset};
use crate::error::{Error, Result};
use crate::models::{Generator, MlpNetwork};
use crate::numerics::{Graph, Rng, Tensor, Var};
use crate::training::{gan_loss_generator, GanTrainer, GeneratorLoss, StepRecord, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Number of generators.
    pub size: usize,
    /// Samples stored per generator.
    pub memory: usize,
    pub lambda: f64,
    pub var_floor: f64,
    pub dist_floor: f64,
    /// Per-stage training settings; experiment configs take these from `[train]`.
    #[serde(skip)]
    pub stage: TrainConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            size: 4,
            memory: 50,
            lambda: 0.1,
            var_floor: 1e-6,
            dist_floor: 1e-6,
            stage: TrainConfig::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 1 {
            return Err(Error::config("ensemble.size", "must be at least 1"));
        }
        if self.memory < 2 {
            return Err(Error::config("ensemble.memory", "must be at least 2"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("ensemble.lambda", "must be finite and non-negative"));
        }
        if !(self.var_floor > 0.0) {
            return Err(Error::config("ensemble.var_floor", "must be positive"));
        }
        if !(self.dist_floor > 0.0) {
            return Err(Error::config("ensemble.dist_floor", "must be positive"));
        }
        self.stage.validate()
    }
}

/// Samples stored from each trained generator, in training order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleMemory {
    sets: Vec<Tensor>,
}

impl EnsembleMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, set: Tensor) -> Result<()> {
        if set.shape().len() != 2 || set.rows() == 0 {
            return Err(Error::invalid(format!("memory set must be a non-empty matrix, got {:?}", set.shape())));
        }
        if let Some(first) = self.sets.first() {
            if first.cols() != set.cols() {
                return Err(Error::ShapeMismatch {
                    op: "memory_push",
                    left: first.shape().to_vec(),
                    right: set.shape().to_vec(),
                });
            }
        }
        if !set.is_finite() {
            return Err(Error::NonFinite { op: "memory_push" });
        }
        self.sets.push(set);
        Ok(())
    }

    pub fn sets(&self) -> &[Tensor] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn total_samples(&self) -> usize {
        self.sets.iter().map(Tensor::rows).sum()
    }

    fn stacked(&self) -> Result<Option<Tensor>> {
        if self.sets.is_empty() {
            return Ok(None);
        }
        let parts: Vec<&Tensor> = self.sets.iter().collect();
        Tensor::vstack(&parts).map(Some)
    }
}

/// The distance penalty as used inside a training graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaPenalty {
    memory: Option<Tensor>,
    lambda: f64,
    dist_floor: f64,
}

impl ThetaPenalty {
    pub fn new(memory: &EnsembleMemory, lambda: f64, dist_floor: f64) -> Result<Self> {
        Ok(Self {
            memory: memory.stacked()?,
            lambda,
            dist_floor,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.memory.is_none()
    }

    pub fn dim(&self) -> usize {
        self.memory.as_ref().map_or(0, Tensor::cols)
    }
}

/// Θ as a graph node, differentiable with respect to `fakes`. Zero when memory is empty.
pub fn theta_graph(g: &mut Graph, fakes: Var, penalty: &ThetaPenalty) -> Result<Var> {
    if g.value(fakes).rows() == 0 {
        return Err(Error::EmptyInput { op: "theta_regularizer" });
    }
    let Some(memory) = &penalty.memory else {
        return g.constant(Tensor::scalar(0.0));
    };
    let pairs = (memory.rows() * g.value(fakes).rows()) as f64;
    let q = g.constant(memory.clone())?;
    let dist = g.pairwise_distance(fakes, q, penalty.dist_floor)?;
    let total = g.sum(dist)?;
    let inv = g.recip(total)?;
    g.scale(inv, penalty.lambda * pairs)
}

pub fn theta_regularizer(memory: &EnsembleMemory, fakes: &Tensor, lambda: f64, dist_floor: f64) -> Result<f64> {
    let penalty = ThetaPenalty::new(memory, lambda, dist_floor)?;
    let mut g = Graph::new();
    let f = g.constant(fakes.clone())?;
    let theta = theta_graph(&mut g, f, &penalty)?;
    g.value(theta).item()
}

/// Generator loss plus Θ.
pub fn regularized_generator_loss(
    d_fake: &[f64],
    fakes: &Tensor,
    memory: &EnsembleMemory,
    lambda: f64,
    dist_floor: f64,
    mode: GeneratorLoss,
) -> Result<f64> {
    let base = gan_loss_generator(d_fake, mode)?;
    if memory.is_empty() {
        return Ok(base);
    }
    Ok(base + theta_regularizer(memory, fakes, lambda, dist_floor)?)
}

/// Diagonal Normal with floored variance.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimator {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl DensityEstimator {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != std.len() {
            return Err(Error::invalid("density estimator needs matching non-empty mean and std"));
        }
        if std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("density estimator needs finite means and positive stds"));
        }
        Ok(Self { mean, std })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                op: "density_logpdf",
                left: vec![self.dim()],
                right: vec![x.len()],
            });
        }
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        Ok(x
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((xi, mu), s)| {
                let z = (xi - mu) / s;
                -half_ln_2pi - s.ln() - 0.5 * z * z
            })
            .sum())
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.logpdf(x).map(f64::exp)
    }
}

/// Per-dimension population mean and variance (divided by `m`), variance floored at `var_floor`.
pub fn fit_density(samples: &Tensor, var_floor: f64) -> Result<DensityEstimator> {
    let m = samples.rows();
    if samples.shape().len() != 2 || m < 2 {
        return Err(Error::invalid(format!("density fit needs at least 2 samples, got {m}")));
    }
    let d = samples.cols();
    let mut mean = vec![0.0; d];
    for row in samples.iter_rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut var = vec![0.0; d];
    for row in samples.iter_rows() {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std = var.iter().map(|v| (v / m as f64).max(var_floor).sqrt()).collect();
    DensityEstimator::new(mean, std)
}

/// Samples already produced in one sampling session, with the running log-weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionState {
    samples: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
}

impl SelectionState {
    pub fn new(generators: usize) -> Self {
        Self {
            samples: Vec::new(),
            log_weights: vec![0.0; generators],
        }
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Adds `sample` and updates every generator's `Σ_g (1 − P_i(g))`.
    pub fn push(&mut self, estimators: &[DensityEstimator], sample: Vec<f64>) -> Result<()> {
        if estimators.len() != self.log_weights.len() {
            return Err(Error::invalid(format!(
                "selection state tracks {} generators, got {} estimators",
                self.log_weights.len(),
                estimators.len()
            )));
        }
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "selection_push" });
        }
        for (w, est) in self.log_weights.iter_mut().zip(estimators) {
            *w += 1.0 - est.pdf(&sample)?;
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Probabilities from the running sums; equal to [`selection_probabilities`] on the same state.
    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.log_weights)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Softmax over `Σ_g (1 − P_i(g))`; uniform when nothing has been generated yet.
pub fn selection_probabilities(estimators: &[DensityEstimator], generated: &[Vec<f64>]) -> Result<Vec<f64>> {
    if estimators.is_empty() {
        return Err(Error::EmptyInput {
            op: "selection_probabilities",
        });
    }
    let mut logits = vec![0.0; estimators.len()];
    for g in generated {
        for (l, est) in logits.iter_mut().zip(estimators) {
            *l += 1.0 - est.pdf(g)?;
        }
    }
    Ok(softmax(&logits))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSample {
    pub samples: Tensor,
    /// Index of the generator behind each row.
    pub generator_ids: Vec<usize>,
}

impl EnsembleSample {
    pub fn usage(&self, generators: usize) -> Vec<usize> {
        let mut counts = vec![0; generators];
        for &i in &self.generator_ids {
            counts[i] += 1;
        }
        counts
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorEnsemble {
    generators: Vec<Generator>,
    memory: EnsembleMemory,
    estimators: Vec<DensityEstimator>,
    histories: Vec<Vec<StepRecord>>,
    config: EnsembleConfig,
}

impl GeneratorEnsemble {
    pub fn from_parts(
        generators: Vec<Generator>,
        memory: EnsembleMemory,
        estimators: Vec<DensityEstimator>,
        config: EnsembleConfig,
    ) -> Result<Self> {
        if generators.is_empty() || generators.len() != memory.len() || generators.len() != estimators.len() {
            return Err(Error::invalid(format!(
                "ensemble needs equal non-zero counts: {} generators, {} memory sets, {} estimators",
                generators.len(),
                memory.len(),
                estimators.len()
            )));
        }
        if generators.iter().any(|g| g.groups().is_some()) {
            return Err(Error::invalid("ensemble generators must be unconditional"));
        }
        let d = generators[0].data_dim();
        if generators.iter().any(|g| g.data_dim() != d) || estimators.iter().any(|e| e.dim() != d) {
            return Err(Error::invalid("ensemble members disagree on the data dimension"));
        }
        Ok(Self {
            histories: vec![Vec::new(); generators.len()],
            generators,
            memory,
            estimators,
            config,
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn memory(&self) -> &EnsembleMemory {
        &self.memory
    }

    pub fn estimators(&self) -> &[DensityEstimator] {
        &self.estimators
    }

    pub fn histories(&self) -> &[Vec<StepRecord>] {
        &self.histories
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn data_dim(&self) -> usize {
        self.generators[0].data_dim()
    }

    pub fn selection_probabilities(&self, state: &SelectionState) -> Result<Vec<f64>> {
        selection_probabilities(&self.estimators, state.samples())
    }

    /// Draws `n` samples one at a time, re-weighting generators after every draw.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<EnsembleSample> {
        let mut state = SelectionState::new(self.len());
        let mut data = Vec::with_capacity(n * self.data_dim());
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let probs = state.probabilities();
            let i = rng.categorical(&probs)?;
            let x = self.generators[i].sample(1, rng, None)?.into_data();
            data.extend_from_slice(&x);
            state.push(&self.estimators, x)?;
            ids.push(i);
        }
        Ok(EnsembleSample {
            samples: Tensor::matrix(n, self.data_dim(), data)?,
            generator_ids: ids,
        })
    }

    /// Directory with `generator_<i>.mlp`, `memory_<i>.csv`, and `estimators.csv`, ids from 0.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, (g, q)) in self.generators.iter().zip(self.memory.sets()).enumerate() {
            g.net().save(&dir.join(format!("generator_{i}.mlp")))?;
            write_samples_csv(&dir.join(format!("memory_{i}.csv")), q, &vec![i; q.rows()])?;
        }
        let mut est = String::from("gen_id,dim,mean,std\n");
        for (i, e) in self.estimators.iter().enumerate() {
            for (d, (m, s)) in e.mean().iter().zip(e.std()).enumerate() {
                est.push_str(&format!("{i},{d},{m},{s}\n"));
            }
        }
        let path = dir.join("estimators.csv");
        std::fs::write(&path, est).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut generators = Vec::new();
        let mut memory = EnsembleMemory::new();
        while dir.join(format!("generator_{}.mlp", generators.len())).exists() {
            let i = generators.len();
            generators.push(Generator::unconditional(MlpNetwork::load(
                &dir.join(format!("generator_{i}.mlp")),
            )?));
            let (q, _) = read_samples_csv(&dir.join(format!("memory_{i}.csv")))?;
            memory.push(q)?;
        }
        let path = dir.join("estimators.csv");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut means: Vec<Vec<f64>> = vec![Vec::new(); generators.len()];
        let mut stds: Vec<Vec<f64>> = vec![Vec::new(); generators.len()];
        for (idx, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::parse(&path, idx + 1, format!("malformed row `{line}`"));
            if f.len() != 4 {
                return Err(bad());
            }
            let gen: usize = f[0].parse().map_err(|_| bad())?;
            let dim: usize = f[1].parse().map_err(|_| bad())?;
            if gen >= generators.len() || dim != means[gen].len() {
                return Err(bad());
            }
            means[gen].push(f[2].parse().map_err(|_| bad())?);
            stds[gen].push(f[3].parse().map_err(|_| bad())?);
        }
        let estimators = means
            .into_iter()
            .zip(stds)
            .map(|(m, s)| DensityEstimator::new(m, s))
            .collect::<Result<Vec<_>>>()?;
        let config = EnsembleConfig {
            size: generators.len(),
            memory: memory.sets().first().map_or(0, Tensor::rows),
            ..EnsembleConfig::default()
        };
        Self::from_parts(generators, memory, estimators, config)
    }
}

/// Trains `config.size` generators in sequence. Stage `i` starts from a fresh
/// generator/discriminator pair and penalizes closeness to the samples stored from stages `< i`.
pub fn train_boosted_ensemble(
    dataset: &GroupedDataset,
    config: &EnsembleConfig,
    rng: &mut Rng,
) -> Result<GeneratorEnsemble> {
    config.validate()?;
    let mut generators = Vec::with_capacity(config.size);
    let mut memory = EnsembleMemory::new();
    let mut estimators = Vec::with_capacity(config.size);
    let mut histories = Vec::with_capacity(config.size);
    for _ in 0..config.size {
        let penalty = ThetaPenalty::new(&memory, config.lambda, config.dist_floor)?;
        let trained = GanTrainer::new(dataset, &config.stage, false, Some(penalty), rng)?.run(rng)?;
        let q = trained.generator.sample(config.memory, rng, None)?;
        estimators.push(fit_density(&q, config.var_floor)?);
        memory.push(q)?;
        generators.push(trained.generator);
        histories.push(trained.history);
    }
    let mut ensemble = GeneratorEnsemble::from_parts(generators, memory, estimators, config.clone())?;
    ensemble.histories = histories;
    Ok(ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(rows, rows[0].len()).unwrap()
    }

    fn memory_of(sets: &[Tensor]) -> EnsembleMemory {
        let mut m = EnsembleMemory::new();
        for s in sets {
            m.push(s.clone()).unwrap();
        }
        m
    }

    #[test]
    fn theta_single_pair() {
        let m = memory_of(&[mat(&[&[0.0]])]);
        let theta = theta_regularizer(&m, &mat(&[&[1.0]]), 1.0, 1e-6).unwrap();
        assert_eq!(theta, 1.0);
    }

    #[test]
    fn theta_two_memory_points() {
        let m = memory_of(&[mat(&[&[0.0, 0.0], &[1.0, 0.0]])]);
        let theta = theta_regularizer(&m, &mat(&[&[0.0, 1.0]]), 1.0, 1e-6).unwrap();
        assert!((theta - 2.0 / (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((theta - 0.828427).abs() < 1e-6);
    }

    #[test]
    fn theta_is_zero_without_memory() {
        let theta = theta_regularizer(&EnsembleMemory::new(), &mat(&[&[1.0, 2.0]]), 1.0, 1e-6).unwrap();
        assert_eq!(theta, 0.0);
    }

    #[test]
    fn theta_coincident_points_hit_the_floor() {
        let m = memory_of(&[mat(&[&[0.5, 0.5]])]);
        let theta = theta_regularizer(&m, &mat(&[&[0.5, 0.5]]), 1.0, 1e-6).unwrap();
        assert!(theta.is_finite());
        assert!((theta - 1e6).abs() < 1e-3);
    }

    #[test]
    fn regularized_loss_composition() {
        let m = memory_of(&[mat(&[&[0.0, 0.0], &[1.0, 0.0]])]);
        let f = mat(&[&[0.0, 1.0]]);
        let base = gan_loss_generator(&[0.5], GeneratorLoss::NonSaturating).unwrap();
        let off = regularized_generator_loss(&[0.5], &f, &m, 0.0, 1e-6, GeneratorLoss::NonSaturating).unwrap();
        assert_eq!(off, base);
        let empty =
            regularized_generator_loss(&[0.5], &f, &EnsembleMemory::new(), 1.0, 1e-6, GeneratorLoss::NonSaturating)
                .unwrap();
        assert_eq!(empty, base);
        for lambda in [0.5, 1.0, 3.0] {
            let v = regularized_generator_loss(&[0.5], &f, &m, lambda, 1e-6, GeneratorLoss::NonSaturating).unwrap();
            let expect = std::f64::consts::LN_2 + 2.0 / (1.0 + 2f64.sqrt()) * lambda;
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn density_fit_moments() {
        let est = fit_density(&mat(&[&[1.0], &[3.0]]), 1e-6).unwrap();
        assert_eq!(est.mean(), &[2.0]);
        assert_eq!(est.std(), &[1.0]);

        let est = fit_density(&mat(&[&[4.0, -1.0], &[4.0, -1.0], &[4.0, -1.0]]), 1e-4).unwrap();
        assert_eq!(est.std(), &[1e-2, 1e-2]);

        assert!(fit_density(&mat(&[&[1.0, 2.0]]), 1e-6).is_err());
    }

    #[test]
    fn logpdf_values() {
        let std_normal = DensityEstimator::new(vec![0.0], vec![1.0]).unwrap();
        assert!((std_normal.logpdf(&[0.0]).unwrap() + 0.918939).abs() < 1e-6);
        assert!((std_normal.logpdf(&[1.0]).unwrap() + 1.418939).abs() < 1e-6);
        let d3 = DensityEstimator::new(vec![1.0, 2.0, 3.0], vec![1.0; 3]).unwrap();
        assert!((d3.logpdf(&[1.0, 2.0, 3.0]).unwrap() + 3.0 * 0.918_938_533_204_672_7).abs() < 1e-12);
        assert!(d3.logpdf(&[0.0]).is_err());
    }

    #[test]
    fn selection_trivial_cases() {
        let a = DensityEstimator::new(vec![0.0], vec![1.0]).unwrap();
        let p = selection_probabilities(&[a.clone(), a.clone()], &[vec![0.3], vec![-1.0]]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        let p = selection_probabilities(&[a.clone(), a.clone(), a.clone()], &[]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(selection_probabilities(&[], &[]).is_err());
    }

    #[test]
    fn selection_worked_example() {
        let p1 = DensityEstimator::new(vec![0.0], vec![1.0]).unwrap();
        let p2 = DensityEstimator::new(vec![5.0], vec![1.0]).unwrap();
        let p = selection_probabilities(&[p1, p2], &[vec![0.0]]).unwrap();
        assert!((p[0] - 0.4016).abs() < 1e-3, "{p:?}");
        assert!((p[1] - 0.5984).abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn running_state_matches_direct_evaluation() {
        let ests = vec![
            DensityEstimator::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap(),
            DensityEstimator::new(vec![2.0, 1.0], vec![0.3, 0.3]).unwrap(),
        ];
        let mut state = SelectionState::new(2);
        let mut rng = Rng::new(4);
        for _ in 0..30 {
            let x = vec![rng.uniform(-1.0, 3.0), rng.uniform(-1.0, 2.0)];
            state.push(&ests, x).unwrap();
            let direct = selection_probabilities(&ests, state.samples()).unwrap();
            assert_eq!(state.probabilities(), direct);
        }
    }

    #[test]
    fn memory_rejects_mixed_dimensions() {
        let mut m = EnsembleMemory::new();
        m.push(Tensor::zeros(&[3, 2])).unwrap();
        assert!(m.push(Tensor::zeros(&[3, 3])).is_err());
        assert!(m.push(Tensor::matrix(0, 2, vec![]).unwrap()).is_err());
        assert_eq!(m.total_samples(), 3);
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::default().validate().is_ok());
        let bad = EnsembleConfig {
            memory: 1,
            ..EnsembleConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { key, .. }) if key == "ensemble.memory"));
        let bad = EnsembleConfig {
            size: 0,
            ..EnsembleConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
