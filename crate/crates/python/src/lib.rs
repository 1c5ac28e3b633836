//! Python bindings: datasets, GAN and ensemble training, group metrics and the ensemble math.

use std::path::PathBuf;

use ganfair::data::{
    default_prototypes, make_gaussian_mixture, make_inverted_patches, ring_mixture, two_mode_mixture, GroupAssigner,
    GroupedDataset, DEFAULT_PATCH_MARGIN,
};
use ganfair::diagnostics::gradient_suite;
use ganfair::ensemble::{self, DensityEstimator, EnsembleConfig, EnsembleMemory, GeneratorEnsemble};
use ganfair::experiment::run_experiment_file;
use ganfair::fairness;
use ganfair::numerics::{Rng, Tensor};
use ganfair::training::{train_cgan, train_gan, GeneratorLoss, TrainConfig, TrainedGan};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: ganfair::Error) -> PyErr {
    match e {
        ganfair::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn tensor(rows: &[Vec<f64>]) -> PyResult<Tensor> {
    let width = rows.first().map_or(0, Vec::len);
    Tensor::from_rows(rows, width).map_err(py_err)
}

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.iter_rows().map(<[f64]>::to_vec).collect()
}

fn parse_loss(name: &str) -> PyResult<GeneratorLoss> {
    match name {
        "non-saturating" => Ok(GeneratorLoss::NonSaturating),
        "literal-saturating" => Ok(GeneratorLoss::LiteralSaturating),
        _ => Err(PyValueError::new_err(format!("unknown loss `{name}`"))),
    }
}

/// A labelled point cloud with its generating proportions.
#[pyclass(name = "Dataset", module = "ganfair_py", frozen)]
struct PyDataset {
    inner: GroupedDataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    #[pyo3(signature = (proportions, n=2000, seed=0))]
    fn two_mode(proportions: Vec<f64>, n: usize, seed: u64) -> PyResult<Self> {
        let inner = two_mode_mixture(&proportions, n, &mut Rng::new(seed)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n=2000, seed=0))]
    fn ring(n: usize, seed: u64) -> PyResult<Self> {
        let inner = ring_mixture(n, &mut Rng::new(seed)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (centers, sigmas, proportions, n=2000, seed=0))]
    fn mixture(centers: Vec<Vec<f64>>, sigmas: Vec<f64>, proportions: Vec<f64>, n: usize, seed: u64) -> PyResult<Self> {
        let inner = make_gaussian_mixture(&centers, &sigmas, &proportions, n, &mut Rng::new(seed)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (proportions, n=2000, seed=0, noise_sigma=0.05, margin=DEFAULT_PATCH_MARGIN))]
    fn patches(proportions: Vec<f64>, n: usize, seed: u64, noise_sigma: f64, margin: f64) -> PyResult<Self> {
        let inner = make_inverted_patches(&default_prototypes(), margin, &proportions, n, noise_sigma, &mut Rng::new(seed))
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn samples(&self) -> Vec<Vec<f64>> {
        rows(self.inner.samples())
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn proportions(&self) -> Vec<f64> {
        self.inner.proportions().to_vec()
    }

    #[getter]
    fn groups(&self) -> usize {
        self.inner.groups()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Assigner spec accepted by `group_rates`.
    #[getter]
    fn assigner(&self) -> String {
        self.inner.natural_assigner().describe()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, dim={}, groups={})", self.inner.len(), self.inner.dim(), self.inner.groups())
    }
}

/// A trained GAN or conditional GAN.
#[pyclass(name = "Gan", module = "ganfair_py", frozen)]
struct PyGan {
    inner: TrainedGan,
}

#[pymethods]
impl PyGan {
    /// Draws `n` rows. Conditional models take a `label`; without one they draw labels
    /// from the training proportions.
    #[pyo3(signature = (n, seed=0, label=None))]
    fn sample(&self, n: usize, seed: u64, label: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
        let mut rng = Rng::new(seed);
        let out = match label {
            Some(_) => self.inner.sample(n, &mut rng, label),
            None => self.inner.sample_marginal(n, &mut rng),
        };
        out.map(|t| rows(&t)).map_err(py_err)
    }

    #[getter]
    fn conditional(&self) -> bool {
        self.inner.is_conditional()
    }

    /// `(d_loss, g_loss, mean_d_fake)` per step.
    #[getter]
    fn history(&self) -> Vec<(f64, f64, f64)> {
        self.inner.history.iter().map(|r| (r.d_loss, r.g_loss, r.mean_d_fake)).collect()
    }

    /// Writes the generator network in the text checkpoint format.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.generator.net().save(&path).map_err(py_err)
    }
}

#[pyclass(name = "Ensemble", module = "ganfair_py", frozen)]
struct PyEnsemble {
    inner: GeneratorEnsemble,
}

#[pymethods]
impl PyEnsemble {
    /// Returns `(samples, generator_ids)`.
    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
        let s = self.inner.sample(n, &mut Rng::new(seed)).map_err(py_err)?;
        Ok((rows(&s.samples), s.generator_ids))
    }

    /// `(mean, std)` of each generator's fitted density.
    #[getter]
    fn estimators(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.inner
            .estimators()
            .iter()
            .map(|e| (e.mean().to_vec(), e.std().to_vec()))
            .collect()
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(&dir).map_err(py_err)
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        GeneratorEnsemble::load(&dir).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn train_config(steps: usize, batch_size: usize, hidden: Vec<usize>, lr: f64, loss: &str) -> PyResult<TrainConfig> {
    let config = TrainConfig {
        steps,
        batch_size,
        hidden,
        lr_generator: lr,
        lr_discriminator: lr,
        generator_loss: parse_loss(loss)?,
        ..TrainConfig::default()
    };
    config.validate().map_err(py_err)?;
    Ok(config)
}

#[pyfunction]
#[pyo3(signature = (dataset, steps=3000, seed=0, conditional=false, batch_size=64, hidden=vec![32, 32], lr=2e-4, loss="non-saturating"))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    dataset: &PyDataset,
    steps: usize,
    seed: u64,
    conditional: bool,
    batch_size: usize,
    hidden: Vec<usize>,
    lr: f64,
    loss: &str,
) -> PyResult<PyGan> {
    let config = train_config(steps, batch_size, hidden, lr, loss)?;
    let ds = &dataset.inner;
    let inner = py
        .detach(|| {
            let mut rng = Rng::new(seed);
            if conditional {
                train_cgan(ds, &config, &mut rng)
            } else {
                train_gan(ds, &config, &mut rng)
            }
        })
        .map_err(py_err)?;
    Ok(PyGan { inner })
}

#[pyfunction]
#[pyo3(signature = (dataset, size=4, memory=50, lam=0.1, steps=3000, seed=0, batch_size=64, hidden=vec![32, 32], lr=2e-4))]
#[allow(clippy::too_many_arguments)]
fn train_ensemble(
    py: Python<'_>,
    dataset: &PyDataset,
    size: usize,
    memory: usize,
    lam: f64,
    steps: usize,
    seed: u64,
    batch_size: usize,
    hidden: Vec<usize>,
    lr: f64,
) -> PyResult<PyEnsemble> {
    let config = EnsembleConfig {
        size,
        memory,
        lambda: lam,
        stage: train_config(steps, batch_size, hidden, lr, "non-saturating")?,
        ..EnsembleConfig::default()
    };
    let ds = &dataset.inner;
    let inner = py
        .detach(|| ensemble::train_boosted_ensemble(ds, &config, &mut Rng::new(seed)))
        .map_err(py_err)?;
    Ok(PyEnsemble { inner })
}

/// Counts, rates and TV distance of `samples` under an assigner spec such as `two-mode`.
#[pyfunction]
fn group_rates<'py>(py: Python<'py>, samples: Vec<Vec<f64>>, assigner: &str, target: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let assigner = GroupAssigner::parse(assigner).map_err(py_err)?;
    let report = fairness::group_rates(&tensor(&samples)?, &assigner, &target).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("counts", report.counts)?;
    out.set_item("rates", report.rates)?;
    out.set_item("tv", report.tv)?;
    Ok(out)
}

#[pyfunction]
fn tv_distance(rates: Vec<f64>, target: Vec<f64>) -> PyResult<f64> {
    fairness::tv_distance(&rates, &target).map_err(py_err)
}

/// Regularizer value for `fakes` against stored sample sets.
#[pyfunction]
#[pyo3(signature = (memory, fakes, lam, dist_floor=1e-6))]
fn theta_regularizer(memory: Vec<Vec<Vec<f64>>>, fakes: Vec<Vec<f64>>, lam: f64, dist_floor: f64) -> PyResult<f64> {
    let mut mem = EnsembleMemory::new();
    for set in &memory {
        mem.push(tensor(set)?).map_err(py_err)?;
    }
    ensemble::theta_regularizer(&mem, &tensor(&fakes)?, lam, dist_floor).map_err(py_err)
}

/// Selection distribution over diagonal Gaussians given by `means[i]`, `stds[i]`.
#[pyfunction]
fn selection_probabilities(means: Vec<Vec<f64>>, stds: Vec<Vec<f64>>, generated: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    if means.len() != stds.len() {
        return Err(PyValueError::new_err("means and stds differ in length"));
    }
    let estimators = means
        .into_iter()
        .zip(stds)
        .map(|(m, s)| DensityEstimator::new(m, s))
        .collect::<ganfair::Result<Vec<_>>>()
        .map_err(py_err)?;
    ensemble::selection_probabilities(&estimators, &generated).map_err(py_err)
}

/// `(name, max relative error)` for every differentiable op and loss.
#[pyfunction]
#[pyo3(signature = (points=20, seed=0))]
fn gradcheck(points: usize, seed: u64) -> PyResult<Vec<(String, f64)>> {
    let results = gradient_suite(points, seed).map_err(py_err)?;
    Ok(results.into_iter().map(|r| (r.name.to_string(), r.max_error)).collect())
}

/// Runs a TOML experiment and returns its summary.
#[pyfunction]
#[pyo3(signature = (config, out=None, parallel=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: PathBuf,
    out: Option<PathBuf>,
    parallel: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let (_, outcome) = py
        .detach(|| run_experiment_file(&config, out.as_deref(), parallel))
        .map_err(py_err)?;
    let summary = PyDict::new(py);
    summary.set_item("out_dir", outcome.out_dir.to_string_lossy().into_owned())?;
    summary.set_item("runs", outcome.runs.len())?;
    summary.set_item("diverged", outcome.runs.iter().filter(|r| r.diverged()).count())?;
    if let Some(agg) = &outcome.aggregate {
        summary.set_item("median_tv", agg.median_tv())?;
        summary.set_item("max_tv", agg.max_tv())?;
        summary.set_item("worst_group_rate", agg.worst_group_min_rate)?;
    }
    Ok(summary)
}

#[pymodule]
fn ganfair_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyGan>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(train_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(group_rates, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(theta_regularizer, m)?)?;
    m.add_function(wrap_pyfunction!(selection_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
