use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    make_gaussian_mixture, make_inverted_patches, ring_centers, two_mode_centers, validate_proportions,
    default_prototypes, GroupAssigner, GroupedDataset, DEFAULT_PATCH_MARGIN, PATCH_SIDE,
};
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::training::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gan,
    Cgan,
    Ensemble,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Gan => "gan",
            ModelKind::Cgan => "cgan",
            ModelKind::Ensemble => "ensemble",
        }
    }
}

fn default_n() -> usize {
    2000
}

fn default_two_mode_proportions() -> Vec<f64> {
    vec![0.5, 0.5]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Components at (±3, 0) with σ = 0.5.
    TwoMode {
        #[serde(default = "default_two_mode_proportions")]
        proportions: Vec<f64>,
        #[serde(default = "default_n")]
        n: usize,
    },
    /// Eight components on a circle of radius 3 with σ = 0.3.
    Ring {
        #[serde(default)]
        proportions: Option<Vec<f64>>,
        #[serde(default = "default_n")]
        n: usize,
    },
    Mixture {
        centers: Vec<Vec<f64>>,
        sigmas: Vec<f64>,
        proportions: Vec<f64>,
        #[serde(default = "default_n")]
        n: usize,
    },
    /// 8x8 patches; group 0 is the base prototype, group 1 its inversion.
    Patches {
        proportions: Vec<f64>,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_noise_sigma")]
        noise_sigma: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
}

fn default_noise_sigma() -> f64 {
    0.05
}

fn default_margin() -> f64 {
    DEFAULT_PATCH_MARGIN
}

impl DatasetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetSpec::TwoMode { .. } => "two-mode",
            DatasetSpec::Ring { .. } => "ring",
            DatasetSpec::Mixture { .. } => "mixture",
            DatasetSpec::Patches { .. } => "patches",
        }
    }

    pub fn groups(&self) -> usize {
        match self {
            DatasetSpec::TwoMode { .. } | DatasetSpec::Patches { .. } => 2,
            DatasetSpec::Ring { .. } => 8,
            DatasetSpec::Mixture { centers, .. } => centers.len(),
        }
    }

    pub fn proportions(&self) -> Vec<f64> {
        match self {
            DatasetSpec::TwoMode { proportions, .. }
            | DatasetSpec::Mixture { proportions, .. }
            | DatasetSpec::Patches { proportions, .. } => proportions.clone(),
            DatasetSpec::Ring { proportions, .. } => proportions.clone().unwrap_or_else(|| vec![0.125; 8]),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DatasetSpec::TwoMode { .. } | DatasetSpec::Ring { .. } => 2,
            DatasetSpec::Mixture { centers, .. } => centers.first().map_or(0, Vec::len),
            DatasetSpec::Patches { .. } => PATCH_SIDE * PATCH_SIDE,
        }
    }

    fn n(&self) -> usize {
        match self {
            DatasetSpec::TwoMode { n, .. }
            | DatasetSpec::Ring { n, .. }
            | DatasetSpec::Mixture { n, .. }
            | DatasetSpec::Patches { n, .. } => *n,
        }
    }

    pub fn build(&self, rng: &mut Rng) -> Result<GroupedDataset> {
        let props = self.proportions();
        match self {
            DatasetSpec::TwoMode { n, .. } => make_gaussian_mixture(&two_mode_centers(), &[0.5, 0.5], &props, *n, rng),
            DatasetSpec::Ring { n, .. } => make_gaussian_mixture(&ring_centers(8, 3.0), &[0.3; 8], &props, *n, rng),
            DatasetSpec::Mixture { centers, sigmas, n, .. } => make_gaussian_mixture(centers, sigmas, &props, *n, rng),
            DatasetSpec::Patches {
                n, noise_sigma, margin, ..
            } => make_inverted_patches(&default_prototypes(), *margin, &props, *n, *noise_sigma, rng),
        }
    }

    fn validate(&self) -> Result<()> {
        validate_proportions(&self.proportions())
            .map_err(|e| Error::config("dataset.proportions", strip_invalid(e)))?;
        if self.proportions().len() != self.groups() {
            return Err(Error::config(
                "dataset.proportions",
                format!("expected {} entries, got {}", self.groups(), self.proportions().len()),
            ));
        }
        if self.n() < self.groups() {
            return Err(Error::config("dataset.n", "must be at least the number of groups"));
        }
        match self {
            DatasetSpec::Mixture { centers, sigmas, .. } => {
                if centers.is_empty() || centers.iter().any(|c| c.is_empty() || c.len() != centers[0].len()) {
                    return Err(Error::config("dataset.centers", "need non-empty centers of equal dimension"));
                }
                if sigmas.len() != centers.len() || sigmas.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::config("dataset.sigmas", "need one positive sigma per center"));
                }
            }
            DatasetSpec::Patches { noise_sigma, margin, .. } => {
                if !(*noise_sigma >= 0.0) {
                    return Err(Error::config("dataset.noise_sigma", "must be non-negative"));
                }
                if !(0.0..0.5).contains(margin) {
                    return Err(Error::config("dataset.margin", "must lie in [0, 0.5)"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Assigner matching how the dataset was generated.
    pub fn natural_assigner(&self) -> GroupAssigner {
        match self {
            DatasetSpec::TwoMode { .. } => GroupAssigner::NearestCenter(two_mode_centers()),
            DatasetSpec::Ring { .. } => GroupAssigner::NearestCenter(ring_centers(8, 3.0)),
            DatasetSpec::Mixture { centers, .. } => GroupAssigner::NearestCenter(centers.clone()),
            DatasetSpec::Patches { .. } => GroupAssigner::MeanThreshold(0.5),
        }
    }
}

fn strip_invalid(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    /// `"declared"` (the dataset's proportions) or `"uniform"`.
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::Named("declared".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Generated samples measured per run.
    pub draws: usize,
    /// Assigner spec; defaults to the dataset's own.
    pub assigner: Option<String>,
    pub target: TargetSpec,
    /// Conditional models only: samples per label for purity.
    pub samples_per_label: usize,
    pub scatter: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            draws: 1000,
            assigner: None,
            target: TargetSpec::default(),
            samples_per_label: 500,
            scatter: true,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<usize>,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

fn prefixed(prefix: &str, e: Error) -> Error {
    match e {
        Error::Config { key, message } => Error::config(format!("{prefix}.{key}"), message),
        other => other,
    }
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn from_str(text: &str) -> Result<Self> {
        let config: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::config(json_key(&e, text), e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::config(toml_key(&e, text), e.message().to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config is always serializable")
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            stage: self.train.clone(),
            ..self.ensemble.clone()
        }
    }

    pub fn assigner(&self) -> Result<GroupAssigner> {
        match &self.evaluation.assigner {
            None => Ok(self.dataset.natural_assigner()),
            Some(spec) => GroupAssigner::parse(spec).map_err(|e| Error::config("evaluation.assigner", strip_invalid(e))),
        }
    }

    pub fn target(&self) -> Result<Vec<f64>> {
        let k = self.dataset.groups();
        let t = match &self.evaluation.target {
            TargetSpec::Named(name) if name == "declared" => self.dataset.proportions(),
            TargetSpec::Named(name) if name == "uniform" => vec![1.0 / k as f64; k],
            TargetSpec::Named(name) => {
                return Err(Error::config(
                    "evaluation.target",
                    format!("unknown target `{name}`, expected declared, uniform, or a list"),
                ))
            }
            TargetSpec::Explicit(v) => v.clone(),
        };
        if t.len() != k {
            return Err(Error::config("evaluation.target", format!("expected {k} entries, got {}", t.len())));
        }
        validate_proportions(&t).map_err(|e| Error::config("evaluation.target", strip_invalid(e)))?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config("seeds", format!("seed {dup} appears more than once")));
        }
        if self.parallel == Some(0) {
            return Err(Error::config("parallel", "must be at least 1"));
        }
        self.dataset.validate()?;
        self.train.validate().map_err(|e| prefixed("train", e))?;
        if self.model == ModelKind::Ensemble {
            self.ensemble_config().validate().map_err(|e| match e {
                Error::Config { key, message } if !key.starts_with("ensemble.") => {
                    Error::config(format!("train.{key}"), message)
                }
                other => other,
            })?;
        }
        if self.evaluation.draws < 1 {
            return Err(Error::config("evaluation.draws", "must be at least 1"));
        }
        if self.model == ModelKind::Cgan && self.evaluation.samples_per_label < 1 {
            return Err(Error::config("evaluation.samples_per_label", "must be at least 1"));
        }
        let assigner = self.assigner()?;
        if assigner.groups() != self.dataset.groups() {
            return Err(Error::config(
                "evaluation.assigner",
                format!("produces {} groups but the dataset has {}", assigner.groups(), self.dataset.groups()),
            ));
        }
        if let GroupAssigner::NearestCenter(c) = &assigner {
            if c[0].len() != self.dataset.dim() {
                return Err(Error::config("evaluation.assigner", "center dimension differs from the data"));
            }
        }
        self.target()?;
        Ok(())
    }
}

/// Best-effort key for a TOML error: the `key =` text at the error span, else its table header.
fn toml_key(e: &toml::de::Error, text: &str) -> String {
    if let Some(field) = quoted_field(e.message()) {
        return field;
    }
    let Some(span) = e.span() else {
        return "config".into();
    };
    let upto = &text[..span.start.min(text.len())];
    let line_start = upto.rfind('\n').map_or(0, |i| i + 1);
    let line = &text[line_start..];
    let line = line.lines().next().unwrap_or("");
    let table = upto
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')).map(str::to_string));
    match (line.split_once('=').map(|(k, _)| k.trim().to_string()), table) {
        (Some(k), Some(t)) if !k.is_empty() => format!("{t}.{k}"),
        (Some(k), None) if !k.is_empty() => k,
        (_, Some(t)) => t,
        _ => "config".into(),
    }
}

fn json_key(e: &serde_json::Error, text: &str) -> String {
    if let Some(field) = quoted_field(&e.to_string()) {
        return field;
    }
    let line = text.lines().nth(e.line().saturating_sub(1)).unwrap_or("");
    line.split_once(':')
        .map(|(k, _)| k.trim().trim_matches('"').to_string())
        .filter(|k| !k.is_empty() && !k.contains('{'))
        .unwrap_or_else(|| "config".into())
}

/// Pulls the field name out of serde messages such as "unknown field `x`" or "missing field `x`".
fn quoted_field(message: &str) -> Option<String> {
    for marker in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(rest) = message.split(marker).nth(1) {
            return rest.split('`').next().map(str::to_string);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
model = "gan"
seeds = [1, 2, 3]

[dataset]
kind = "two-mode"
proportions = [0.7, 0.3]
n = 500

[train]
steps = 10
"#;

    #[test]
    fn parses_toml_with_defaults() {
        let c = ExperimentConfig::from_str(MINIMAL).unwrap();
        assert_eq!(c.model, ModelKind::Gan);
        assert_eq!(c.train.steps, 10);
        assert_eq!(c.train.batch_size, 64);
        assert_eq!(c.evaluation.draws, 1000);
        assert_eq!(c.target().unwrap(), vec![0.7, 0.3]);
    }

    #[test]
    fn json_is_accepted() {
        let json = r#"{"model": "ensemble", "seeds": [4],
            "dataset": {"kind": "ring"},
            "ensemble": {"size": 2, "memory": 10},
            "evaluation": {"target": "uniform"}}"#;
        let c = ExperimentConfig::from_str(json).unwrap();
        assert_eq!(c.ensemble_config().size, 2);
        assert_eq!(c.target().unwrap(), vec![0.125; 8]);
    }

    #[test]
    fn snapshot_round_trips() {
        let c = ExperimentConfig::from_str(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::from_str(&c.to_toml()).unwrap(), c);
    }

    fn key_of(text: &str) -> String {
        match ExperimentConfig::from_str(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(&MINIMAL.replace("[0.7, 0.3]", "[0.7, 0.5]")), "dataset.proportions");
        assert_eq!(key_of(&MINIMAL.replace("steps = 10", "steps = 0")), "train.steps");
        assert_eq!(key_of(&MINIMAL.replace("[1, 2, 3]", "[1, 1]")), "seeds");
        assert_eq!(key_of(&MINIMAL.replace("[1, 2, 3]", "[]")), "seeds");
        assert_eq!(key_of(&MINIMAL.replace("steps = 10", "stepz = 10")), "stepz");
        assert_eq!(key_of(&MINIMAL.replace("steps = 10", "steps = \"many\"")), "train.steps");
        assert_eq!(key_of(&format!("{MINIMAL}\n[evaluation]\ntarget = [1.0]\n")), "evaluation.target");
        assert_eq!(key_of(&format!("{MINIMAL}\n[evaluation]\nassigner = \"ring8\"\n")), "evaluation.assigner");
    }
}
