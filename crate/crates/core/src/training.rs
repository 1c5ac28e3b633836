//! Adversarial training: the minimax losses, the unconditional and conditional
//! training loops, and generator sampling.
//!
//! The discriminator minimizes `−[mean log D(x) + mean log(1 − D(G(z)))]`.
//! The generator minimizes either the non-saturating `−mean log D(G(z))`
//! (default) or `−mean log(1 − D(G(z)))`, the literal generator term used by
//! the boosting loss. Discriminator outputs are clamped to
//! `[D_CLAMP, 1 − D_CLAMP]` before any logarithm.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Batch, GroupedDataset};
use crate::ensemble::{theta_graph, ThetaPenalty};
use crate::error::{Error, Result};
use crate::models::{one_hot, Activation, Generator, MlpNetwork};
use crate::numerics::{Adam, AdamConfig, Graph, Rng, Tensor, Var};

pub const D_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorLoss {
    /// `−mean log D(G(z))`
    #[default]
    NonSaturating,
    /// `−mean log(1 − D(G(z)))`
    LiteralSaturating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub noise_dim: usize,
    /// Hidden layer widths shared by generator and discriminator.
    pub hidden: Vec<usize>,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub d_steps: usize,
    pub generator_loss: GeneratorLoss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 3000,
            batch_size: 64,
            noise_dim: 2,
            hidden: vec![32, 32],
            lr_generator: 2e-4,
            lr_discriminator: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
            d_steps: 1,
            generator_loss: GeneratorLoss::NonSaturating,
        }
    }
}

impl TrainConfig {
    /// Defaults for the 8x8 patch benchmark.
    pub fn for_patches() -> Self {
        Self {
            noise_dim: 8,
            ..Self::default()
        }
    }

    /// Checks invariants, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch_size", "must be at least 2"));
        }
        if self.noise_dim < 1 {
            return Err(Error::config("noise_dim", "must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer widths must be positive"));
        }
        if !(self.lr_generator > 0.0) {
            return Err(Error::config("lr_generator", "must be positive"));
        }
        if !(self.lr_discriminator > 0.0) {
            return Err(Error::config("lr_discriminator", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::config("beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta2", "must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", "must be positive"));
        }
        if self.d_steps < 1 {
            return Err(Error::config("d_steps", "must be at least 1"));
        }
        Ok(())
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

fn clamp_probs(g: &mut Graph, p: Var) -> Result<Var> {
    g.clamp(p, D_CLAMP, 1.0 - D_CLAMP)
}

fn mean_log_one_minus(g: &mut Graph, p: Var) -> Result<Var> {
    let neg = g.neg(p)?;
    let one_minus = g.add_scalar(neg, 1.0)?;
    let l = g.log(one_minus)?;
    g.mean(l)
}

/// Discriminator loss node; inputs are raw discriminator probabilities.
pub fn discriminator_loss_graph(g: &mut Graph, d_real: Var, d_fake: Var) -> Result<Var> {
    if g.value(d_real).is_empty() || g.value(d_fake).is_empty() {
        return Err(Error::EmptyInput {
            op: "gan_loss_discriminator",
        });
    }
    let real = clamp_probs(g, d_real)?;
    let fake = clamp_probs(g, d_fake)?;
    let log_real = g.log(real)?;
    let real_term = g.mean(log_real)?;
    let fake_term = mean_log_one_minus(g, fake)?;
    let value = g.add(real_term, fake_term)?;
    g.neg(value)
}

pub fn generator_loss_graph(g: &mut Graph, d_fake: Var, mode: GeneratorLoss) -> Result<Var> {
    if g.value(d_fake).is_empty() {
        return Err(Error::EmptyInput {
            op: "gan_loss_generator",
        });
    }
    let fake = clamp_probs(g, d_fake)?;
    let term = match mode {
        GeneratorLoss::NonSaturating => {
            let l = g.log(fake)?;
            g.mean(l)?
        }
        GeneratorLoss::LiteralSaturating => mean_log_one_minus(g, fake)?,
    };
    g.neg(term)
}

fn probs_var(g: &mut Graph, p: &[f64]) -> Result<Var> {
    g.constant(Tensor::matrix(p.len(), 1, p.to_vec())?)
}

pub fn gan_loss_discriminator(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    let mut g = Graph::new();
    let r = probs_var(&mut g, d_real)?;
    let f = probs_var(&mut g, d_fake)?;
    let loss = discriminator_loss_graph(&mut g, r, f)?;
    g.value(loss).item()
}

pub fn gan_loss_generator(d_fake: &[f64], mode: GeneratorLoss) -> Result<f64> {
    let mut g = Graph::new();
    let f = probs_var(&mut g, d_fake)?;
    let loss = generator_loss_graph(&mut g, f, mode)?;
    g.value(loss).item()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub d_loss: f64,
    pub g_loss: f64,
    pub mean_d_fake: f64,
}

/// Writes `step,d_loss,g_loss,mean_d_fake`, steps counted from 1.
pub fn write_history_csv(path: &Path, history: &[StepRecord]) -> Result<()> {
    let mut out = String::from("step,d_loss,g_loss,mean_d_fake\n");
    for (i, r) in history.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", i + 1, r.d_loss, r.g_loss, r.mean_d_fake));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// A trained generator/discriminator pair.
#[derive(Clone, Debug)]
pub struct TrainedGan {
    pub generator: Generator,
    pub discriminator: MlpNetwork,
    pub history: Vec<StepRecord>,
    pub config: TrainConfig,
    /// Label distribution used for unconditional draws from a conditional generator.
    pub label_proportions: Option<Vec<f64>>,
}

/// Conditional models share the representation; the generator carries the group count.
pub type TrainedCGan = TrainedGan;

impl TrainedGan {
    pub fn is_conditional(&self) -> bool {
        self.generator.groups().is_some()
    }

    pub fn sample(&self, n: usize, rng: &mut Rng, condition: Option<usize>) -> Result<Tensor> {
        sample_generator(&self.generator, n, rng, condition)
    }

    /// Draws `n` samples without a caller-chosen condition. Conditional models draw each
    /// row's label from the training proportions first.
    pub fn sample_marginal(&self, n: usize, rng: &mut Rng) -> Result<Tensor> {
        let (Some(k), Some(props)) = (self.generator.groups(), &self.label_proportions) else {
            return self.generator.sample(n, rng, None);
        };
        if n == 0 {
            return Tensor::matrix(0, self.generator.data_dim(), Vec::new());
        }
        let labels = (0..n).map(|_| rng.categorical(props)).collect::<Result<Vec<_>>>()?;
        let z = self.generator.noise().sample(n, rng)?;
        let input = crate::models::concat_labels(&z, &labels, k)?;
        self.generator.net().forward(&input)
    }
}

pub fn sample_generator(generator: &Generator, n: usize, rng: &mut Rng, condition: Option<usize>) -> Result<Tensor> {
    generator.sample(n, rng, condition)
}

/// Step-by-step trainer for the unconditional, conditional, and regularized variants.
#[derive(Clone, Debug)]
pub struct GanTrainer<'a> {
    dataset: &'a GroupedDataset,
    config: TrainConfig,
    generator: MlpNetwork,
    discriminator: MlpNetwork,
    g_opt: Adam,
    d_opt: Adam,
    groups: Option<usize>,
    penalty: Option<ThetaPenalty>,
    history: Vec<StepRecord>,
}

impl<'a> GanTrainer<'a> {
    /// Initializes the generator, then the discriminator, from `rng`.
    pub fn new(
        dataset: &'a GroupedDataset,
        config: &TrainConfig,
        conditional: bool,
        penalty: Option<ThetaPenalty>,
        rng: &mut Rng,
    ) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::EmptyInput { op: "train" });
        }
        let d = dataset.dim();
        let k = dataset.groups();
        let cond_width = if conditional { k } else { 0 };
        if let Some(p) = &penalty {
            if !p.is_empty() && p.dim() != d {
                return Err(Error::invalid(format!("memory dimension {} differs from data dimension {d}", p.dim())));
            }
        }

        let mut g_sizes = vec![config.noise_dim + cond_width];
        g_sizes.extend(&config.hidden);
        g_sizes.push(d);
        let mut d_sizes = vec![d + cond_width];
        d_sizes.extend(&config.hidden);
        d_sizes.push(1);

        let generator = MlpNetwork::new(&g_sizes, Activation::Tanh, Activation::Identity, rng)?;
        let discriminator = MlpNetwork::new(&d_sizes, Activation::leaky_relu(), Activation::Sigmoid, rng)?;
        let g_opt = Adam::new(config.adam(config.lr_generator), generator.params())?;
        let d_opt = Adam::new(config.adam(config.lr_discriminator), discriminator.params())?;
        Ok(Self {
            dataset,
            config: config.clone(),
            generator,
            discriminator,
            g_opt,
            d_opt,
            groups: conditional.then_some(k),
            penalty: penalty.filter(|p| !p.is_empty()),
            history: Vec::with_capacity(config.steps),
        })
    }

    pub fn generator(&self) -> &MlpNetwork {
        &self.generator
    }

    pub fn discriminator(&self) -> &MlpNetwork {
        &self.discriminator
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    fn draw_fake_labels(&self, rng: &mut Rng) -> Result<Option<Vec<usize>>> {
        match self.groups {
            None => Ok(None),
            Some(_) => (0..self.config.batch_size)
                .map(|_| rng.categorical(self.dataset.proportions()))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn with_condition(&self, g: &mut Graph, x: Var, labels: Option<&[usize]>) -> Result<Var> {
        match (self.groups, labels) {
            (Some(k), Some(labels)) => {
                let code = g.constant(one_hot(labels, k)?)?;
                g.concat_cols(x, code)
            }
            (None, None) => Ok(x),
            _ => Err(Error::invalid("condition labels do not match the trainer mode")),
        }
    }

    /// Draws the inputs of one discriminator update in a fixed order: real batch, noise, fake labels.
    pub fn draw_discriminator_inputs(&self, rng: &mut Rng) -> Result<(Batch, Tensor, Option<Vec<usize>>)> {
        let real = self.dataset.minibatch(self.config.batch_size, rng)?;
        let noise = rng.standard_normal(&[self.config.batch_size, self.config.noise_dim])?;
        let labels = self.draw_fake_labels(rng)?;
        Ok((real, noise, labels))
    }

    /// Draws the inputs of one generator update: noise, then fake labels.
    pub fn draw_generator_inputs(&self, rng: &mut Rng) -> Result<(Tensor, Option<Vec<usize>>)> {
        let noise = rng.standard_normal(&[self.config.batch_size, self.config.noise_dim])?;
        let labels = self.draw_fake_labels(rng)?;
        Ok((noise, labels))
    }

    fn discriminator_graph(
        &self,
        g: &mut Graph,
        real: &Batch,
        noise: &Tensor,
        fake_labels: Option<&[usize]>,
        trainable: bool,
    ) -> Result<(Var, Vec<Var>)> {
        let gen = self.generator.bind(g, false)?;
        let disc = self.discriminator.bind(g, trainable)?;
        let z = g.constant(noise.clone())?;
        let z = self.with_condition(g, z, fake_labels)?;
        let fake = gen.forward(g, z)?;
        let fake = self.with_condition(g, fake, fake_labels)?;
        let x = g.constant(real.samples.clone())?;
        let real_labels = self.groups.map(|_| real.labels.as_slice());
        let x = self.with_condition(g, x, real_labels)?;
        let d_real = disc.forward(g, x)?;
        let d_fake = disc.forward(g, fake)?;
        let loss = discriminator_loss_graph(g, d_real, d_fake)?;
        Ok((loss, disc.vars().to_vec()))
    }

    /// Discriminator loss for the given inputs under the current parameters.
    pub fn discriminator_loss_on(&self, real: &Batch, noise: &Tensor, fake_labels: Option<&[usize]>) -> Result<f64> {
        let mut g = Graph::new();
        let (loss, _) = self.discriminator_graph(&mut g, real, noise, fake_labels, false)?;
        g.value(loss).item()
    }

    fn generator_graph(
        &self,
        g: &mut Graph,
        noise: &Tensor,
        fake_labels: Option<&[usize]>,
        trainable: bool,
    ) -> Result<(Var, Var, Vec<Var>)> {
        let gen = self.generator.bind(g, trainable)?;
        let disc = self.discriminator.bind(g, false)?;
        let z = g.constant(noise.clone())?;
        let z = self.with_condition(g, z, fake_labels)?;
        let fake = gen.forward(g, z)?;
        let fake_in = self.with_condition(g, fake, fake_labels)?;
        let d_fake = disc.forward(g, fake_in)?;
        let mut loss = generator_loss_graph(g, d_fake, self.config.generator_loss)?;
        if let Some(p) = &self.penalty {
            let theta = theta_graph(g, fake, p)?;
            loss = g.add(loss, theta)?;
        }
        Ok((loss, d_fake, gen.vars().to_vec()))
    }

    /// Generator loss (including any distance penalty) and mean `D(G(z))` for the given inputs.
    pub fn generator_loss_on(&self, noise: &Tensor, fake_labels: Option<&[usize]>) -> Result<(f64, f64)> {
        let mut g = Graph::new();
        let (loss, d_fake, _) = self.generator_graph(&mut g, noise, fake_labels, false)?;
        let d = g.value(d_fake);
        Ok((g.value(loss).item()?, d.data().iter().sum::<f64>() / d.len() as f64))
    }

    /// One Adam update of the discriminator; the generator is untouched.
    pub fn discriminator_step(&mut self, rng: &mut Rng) -> Result<f64> {
        let (real, noise, labels) = self.draw_discriminator_inputs(rng)?;
        let mut g = Graph::new();
        let (loss, vars) = self.discriminator_graph(&mut g, &real, &noise, labels.as_deref(), true)?;
        let grads = g.backward(loss)?;
        let grad_refs = vars.iter().map(|v| grads.wrt(*v)).collect::<Result<Vec<_>>>()?;
        self.d_opt.step(self.discriminator.params_mut(), &grad_refs)?;
        g.value(loss).item()
    }

    /// One Adam update of the generator; the discriminator is untouched.
    /// Returns the generator loss and mean `D(G(z))`.
    pub fn generator_step(&mut self, rng: &mut Rng) -> Result<(f64, f64)> {
        let (noise, labels) = self.draw_generator_inputs(rng)?;
        let mut g = Graph::new();
        let (loss, d_fake, vars) = self.generator_graph(&mut g, &noise, labels.as_deref(), true)?;
        let grads = g.backward(loss)?;
        let grad_refs = vars.iter().map(|v| grads.wrt(*v)).collect::<Result<Vec<_>>>()?;
        self.g_opt.step(self.generator.params_mut(), &grad_refs)?;
        let d = g.value(d_fake);
        let mean_d_fake = d.data().iter().sum::<f64>() / d.len() as f64;
        Ok((g.value(loss).item()?, mean_d_fake))
    }

    /// `d_steps` discriminator updates followed by one generator update.
    pub fn step(&mut self, rng: &mut Rng) -> Result<StepRecord> {
        let step = self.history.len() + 1;
        let wrap = |e: Error| Error::Diverged {
            step,
            source: Box::new(e),
        };
        let mut d_loss = f64::NAN;
        for _ in 0..self.config.d_steps {
            d_loss = self.discriminator_step(rng).map_err(wrap)?;
        }
        let (g_loss, mean_d_fake) = self.generator_step(rng).map_err(wrap)?;
        let record = StepRecord {
            d_loss,
            g_loss,
            mean_d_fake,
        };
        self.history.push(record);
        Ok(record)
    }

    pub fn run(mut self, rng: &mut Rng) -> Result<TrainedGan> {
        while self.history.len() < self.config.steps {
            self.step(rng)?;
        }
        self.finish()
    }

    pub fn finish(self) -> Result<TrainedGan> {
        let generator = match self.groups {
            Some(k) => Generator::conditional(self.generator, k)?,
            None => Generator::unconditional(self.generator),
        };
        Ok(TrainedGan {
            generator,
            discriminator: self.discriminator,
            history: self.history,
            config: self.config,
            label_proportions: self.groups.map(|_| self.dataset.proportions().to_vec()),
        })
    }
}

/// Alternating Adam updates on the unconditional objective.
pub fn train_gan(dataset: &GroupedDataset, config: &TrainConfig, rng: &mut Rng) -> Result<TrainedGan> {
    GanTrainer::new(dataset, config, false, None, rng)?.run(rng)
}

/// Both networks see the one-hot group code appended to their inputs. Fake samples are
/// conditioned on labels drawn from the dataset's proportions.
pub fn train_cgan(dataset: &GroupedDataset, config: &TrainConfig, rng: &mut Rng) -> Result<TrainedCGan> {
    GanTrainer::new(dataset, config, true, None, rng)?.run(rng)
}
