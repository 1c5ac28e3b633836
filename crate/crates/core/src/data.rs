//! Synthetic grouped datasets, group assignment rules, and minibatch sampling.

use std::path::Path;

use crate::error::{Error, Result};
use crate::models::GroupLabel;
use crate::numerics::{euclidean, Rng, Tensor};

/// Default margin between a patch prototype's mean intensity and the 0.5 threshold.
pub const DEFAULT_PATCH_MARGIN: f64 = 0.1;
pub const PATCH_SIDE: usize = 8;

/// How the groups of a dataset were generated.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupDescriptor {
    Mixture {
        centers: Vec<Vec<f64>>,
        sigmas: Vec<f64>,
    },
    Patches {
        prototypes: Vec<Vec<f64>>,
        noise_sigma: f64,
    },
}

/// Samples with group labels and the group proportions they were drawn with.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedDataset {
    samples: Tensor,
    labels: Vec<usize>,
    proportions: Vec<f64>,
    descriptor: GroupDescriptor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub samples: Tensor,
    pub labels: Vec<usize>,
}

impl GroupedDataset {
    pub fn samples(&self) -> &Tensor {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn groups(&self) -> usize {
        self.proportions.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.groups()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// The assigner that recovers this dataset's labels.
    pub fn natural_assigner(&self) -> GroupAssigner {
        match &self.descriptor {
            GroupDescriptor::Mixture { centers, .. } => GroupAssigner::NearestCenter(centers.clone()),
            GroupDescriptor::Patches { .. } => GroupAssigner::MeanThreshold(0.5),
        }
    }

    /// `batch_size` rows drawn uniformly with replacement.
    pub fn minibatch(&self, batch_size: usize, rng: &mut Rng) -> Result<Batch> {
        if self.is_empty() {
            return Err(Error::EmptyInput { op: "minibatch" });
        }
        if batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        let d = self.dim();
        let mut data = Vec::with_capacity(batch_size * d);
        let mut labels = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let i = rng.below(self.len());
            data.extend_from_slice(self.samples.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Batch {
            samples: Tensor::matrix(batch_size, d, data)?,
            labels,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_samples_csv(path, &self.samples, &self.labels)
    }
}

/// Splits `n` items according to `proportions` with the largest-remainder rule.
///
/// Leftover units go to the largest fractional parts, lowest index first on ties.
pub fn largest_remainder(proportions: &[f64], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

pub fn validate_proportions(proportions: &[f64]) -> Result<()> {
    if proportions.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 groups, got {}", proportions.len())));
    }
    if proportions.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(format!("proportions must be non-negative, got {proportions:?}")));
    }
    let total: f64 = proportions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("proportions must sum to 1, got {total}")));
    }
    Ok(())
}

/// Isotropic Gaussian components with the given centers, one group per component.
pub fn make_gaussian_mixture(
    centers: &[Vec<f64>],
    sigmas: &[f64],
    proportions: &[f64],
    n: usize,
    rng: &mut Rng,
) -> Result<GroupedDataset> {
    validate_proportions(proportions)?;
    let k = proportions.len();
    if centers.len() != k || sigmas.len() != k {
        return Err(Error::invalid(format!(
            "{k} proportions but {} centers and {} sigmas",
            centers.len(),
            sigmas.len()
        )));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::invalid(format!("sigma must be positive, got {s}")));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(Error::invalid("mixture centers must share a positive dimension"));
    }
    if n < k {
        return Err(Error::invalid(format!("need at least {k} samples, got {n}")));
    }

    let counts = largest_remainder(proportions, n);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (group, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            for &c in &centers[group] {
                data.push(c + sigmas[group] * rng.normal());
            }
            labels.push(group);
        }
    }
    Ok(GroupedDataset {
        samples: Tensor::matrix(n, d, data)?,
        labels,
        proportions: proportions.to_vec(),
        descriptor: GroupDescriptor::Mixture {
            centers: centers.to_vec(),
            sigmas: sigmas.to_vec(),
        },
    })
}

/// Components at `(±3, 0)` with σ = 0.5.
pub fn two_mode_centers() -> Vec<Vec<f64>> {
    vec![vec![-3.0, 0.0], vec![3.0, 0.0]]
}

/// `k` points evenly spaced on a circle, the first at angle 0.
pub fn ring_centers(k: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            vec![radius * angle.cos(), radius * angle.sin()]
        })
        .collect()
}

pub fn two_mode_mixture(proportions: &[f64], n: usize, rng: &mut Rng) -> Result<GroupedDataset> {
    make_gaussian_mixture(&two_mode_centers(), &[0.5, 0.5], proportions, n, rng)
}

/// Eight components on a circle of radius 3 with σ = 0.3, uniform proportions.
pub fn ring_mixture(n: usize, rng: &mut Rng) -> Result<GroupedDataset> {
    make_gaussian_mixture(&ring_centers(8, 3.0), &[0.3; 8], &[0.125; 8], n, rng)
}

/// Four 8x8 stroke patterns, each with 16 lit pixels (mean 0.25).
pub fn default_prototypes() -> Vec<Vec<f64>> {
    let mut zero = [[0.0; PATCH_SIDE]; PATCH_SIDE];
    for c in 2..=5 {
        zero[1][c] = 1.0;
        zero[6][c] = 1.0;
    }
    for row in zero.iter_mut().take(6).skip(2) {
        row[2] = 1.0;
        row[5] = 1.0;
    }

    let mut one = [[0.0; PATCH_SIDE]; PATCH_SIDE];
    for row in one.iter_mut() {
        row[3] = 1.0;
        row[4] = 1.0;
    }

    let mut seven = [[0.0; PATCH_SIDE]; PATCH_SIDE];
    for c in 1..=6 {
        seven[1][c] = 1.0;
    }
    for r in 2..=6 {
        seven[r][7 - r] = 1.0;
        seven[r][6 - r] = 1.0;
    }

    let mut ell = [[0.0; PATCH_SIDE]; PATCH_SIDE];
    for row in ell.iter_mut().take(7).skip(1) {
        row[2] = 1.0;
        row[3] = 1.0;
    }
    for c in 4..=7 {
        ell[6][c] = 1.0;
    }

    [zero, one, seven, ell]
        .iter()
        .map(|p| p.iter().flatten().copied().collect())
        .collect()
}

/// Base patches are noisy prototypes clamped to `[0, 1]`; the second group is their pixel-wise inversion.
///
/// `proportions` is `[base, inverted]`. Base samples get label 0, inverted ones label 1, matching
/// the mean-threshold assigner.
pub fn make_inverted_patches(
    prototypes: &[Vec<f64>],
    margin: f64,
    proportions: &[f64],
    n: usize,
    noise_sigma: f64,
    rng: &mut Rng,
) -> Result<GroupedDataset> {
    validate_proportions(proportions)?;
    if proportions.len() != 2 {
        return Err(Error::invalid("inverted patches have exactly 2 groups"));
    }
    let Some(first) = prototypes.first() else {
        return Err(Error::invalid("need at least one prototype"));
    };
    let d = first.len();
    if d == 0 || prototypes.iter().any(|p| p.len() != d) {
        return Err(Error::invalid("prototypes must share a positive size"));
    }
    for (i, p) in prototypes.iter().enumerate() {
        let mean = p.iter().sum::<f64>() / d as f64;
        if mean > 0.5 - margin {
            return Err(Error::invalid(format!(
                "prototype {i} has mean {mean:.4}, above the allowed {:.4}",
                0.5 - margin
            )));
        }
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::invalid(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {n}")));
    }

    let counts = largest_remainder(proportions, n);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (group, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let proto = &prototypes[rng.below(prototypes.len())];
            for &px in proto {
                let v = (px + noise_sigma * rng.normal()).clamp(0.0, 1.0);
                data.push(if group == 1 { 1.0 - v } else { v });
            }
            labels.push(group);
        }
    }
    Ok(GroupedDataset {
        samples: Tensor::matrix(n, d, data)?,
        labels,
        proportions: proportions.to_vec(),
        descriptor: GroupDescriptor::Patches {
            prototypes: prototypes.to_vec(),
            noise_sigma,
        },
    })
}

/// Maps a sample to exactly one group.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupAssigner {
    /// Group 1 ("white") iff the sample mean exceeds the threshold, else group 0.
    MeanThreshold(f64),
    /// Index of the closest center, lowest index on ties.
    NearestCenter(Vec<Vec<f64>>),
}

impl GroupAssigner {
    pub fn groups(&self) -> usize {
        match self {
            GroupAssigner::MeanThreshold(_) => 2,
            GroupAssigner::NearestCenter(c) => c.len(),
        }
    }

    pub fn assign(&self, sample: &[f64]) -> Result<usize> {
        match self {
            GroupAssigner::MeanThreshold(tau) => Ok(assign_group_mean_threshold(sample, *tau).id()),
            GroupAssigner::NearestCenter(centers) => Ok(assign_group_nearest_center(sample, centers)?.id()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GroupAssigner::MeanThreshold(tau) => format!("mean-threshold:{tau}"),
            GroupAssigner::NearestCenter(centers) => {
                let pts: Vec<String> = centers
                    .iter()
                    .map(|c| c.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
                    .collect();
                format!("nearest-center:{}", pts.join(";"))
            }
        }
    }

    /// Parses the [`GroupAssigner::describe`] form. `two-mode` and `ring8` name the default mixtures.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "two-mode" => return Ok(GroupAssigner::NearestCenter(two_mode_centers())),
            "ring8" => return Ok(GroupAssigner::NearestCenter(ring_centers(8, 3.0))),
            "mean-threshold" => return Ok(GroupAssigner::MeanThreshold(0.5)),
            _ => {}
        }
        if let Some(tau) = spec.strip_prefix("mean-threshold:") {
            let tau = tau
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("threshold `{tau}`: {e}")))?;
            return Ok(GroupAssigner::MeanThreshold(tau));
        }
        if let Some(rest) = spec.strip_prefix("nearest-center:") {
            let centers = rest
                .split(';')
                .map(|pt| {
                    pt.split(',')
                        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::invalid(format!("center `{pt}`: {e}"))))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            if centers.is_empty() || centers.iter().any(|c| c.len() != centers[0].len()) {
                return Err(Error::invalid("centers must share a dimension"));
            }
            return Ok(GroupAssigner::NearestCenter(centers));
        }
        Err(Error::invalid(format!("unknown assigner `{spec}`")))
    }
}

pub fn assign_group_mean_threshold(sample: &[f64], tau: f64) -> GroupLabel {
    let mean = if sample.is_empty() {
        0.0
    } else {
        sample.iter().sum::<f64>() / sample.len() as f64
    };
    let id = usize::from(mean > tau);
    GroupLabel::new(id, 2).expect("id is 0 or 1")
}

pub fn assign_group_nearest_center(sample: &[f64], centers: &[Vec<f64>]) -> Result<GroupLabel> {
    if centers.is_empty() {
        return Err(Error::invalid("nearest-center assigner needs at least one center"));
    }
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        if c.len() != sample.len() {
            return Err(Error::ShapeMismatch {
                op: "assign_group_nearest_center",
                left: vec![c.len()],
                right: vec![sample.len()],
            });
        }
        let dist = euclidean(sample, c);
        if dist < best_dist {
            best = i;
            best_dist = dist;
        }
    }
    GroupLabel::new(best, centers.len())
}

/// CSV with header `sample_idx,group_id,dim_0..dim_{d-1}`.
pub fn write_samples_csv(path: &Path, samples: &Tensor, labels: &[usize]) -> Result<()> {
    if labels.len() != samples.rows() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            labels.len(),
            samples.rows()
        )));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let d = samples.cols();
    let mut header = vec!["sample_idx".to_string(), "group_id".to_string()];
    header.extend((0..d).map(|i| format!("dim_{i}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, (row, label)) in samples.iter_rows().zip(labels).enumerate() {
        let mut rec = vec![i.to_string(), label.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads any CSV with `dim_*` columns and an optional `group_id` column.
///
/// Missing group ids read as 0.
pub fn read_samples_csv(path: &Path) -> Result<(Tensor, Vec<usize>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let dims: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("dim_"))
        .map(|(i, _)| i)
        .collect();
    if dims.is_empty() {
        return Err(Error::parse(path, 1, "no dim_* columns"));
    }
    let group_col = headers.iter().position(|h| h == "group_id");
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        for &c in &dims {
            let v = rec.get(c).unwrap_or("");
            data.push(
                v.parse::<f64>()
                    .map_err(|e| Error::parse(path, line + 2, format!("`{v}`: {e}")))?,
            );
        }
        let label = match group_col {
            Some(c) => {
                let v = rec.get(c).unwrap_or("");
                v.parse::<usize>()
                    .map_err(|e| Error::parse(path, line + 2, format!("group `{v}`: {e}")))?
            }
            None => 0,
        };
        labels.push(label);
    }
    let samples = Tensor::matrix(labels.len(), dims.len(), data)?;
    Ok((samples, labels))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, 0, format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_allocations() {
        assert_eq!(largest_remainder(&[0.5, 0.5], 1000), vec![500, 500]);
        assert_eq!(largest_remainder(&[0.7, 0.3], 10), vec![7, 3]);
        assert_eq!(largest_remainder(&[1.0 / 3.0; 3], 10), vec![4, 3, 3]);
        assert_eq!(largest_remainder(&[0.125; 8], 1001).iter().sum::<usize>(), 1001);
    }

    #[test]
    fn mixture_counts_follow_proportions() {
        let ds = two_mode_mixture(&[0.5, 0.5], 1000, &mut Rng::new(0)).unwrap();
        assert_eq!(ds.label_counts(), vec![500, 500]);
        let ds = two_mode_mixture(&[0.7, 0.3], 10, &mut Rng::new(0)).unwrap();
        assert_eq!(ds.label_counts(), vec![7, 3]);
        assert!(two_mode_mixture(&[0.6, 0.6], 10, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn mixture_rejects_bad_sigma_and_small_n() {
        let c = two_mode_centers();
        assert!(make_gaussian_mixture(&c, &[0.5, 0.0], &[0.5, 0.5], 10, &mut Rng::new(0)).is_err());
        assert!(make_gaussian_mixture(&c, &[0.5, 0.5], &[0.5, 0.5], 1, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn nearest_center_reproduces_mixture_labels() {
        // Adjacent ring centers are ~7.6σ apart, so a rare tail sample can cross over.
        let ds = ring_mixture(2000, &mut Rng::new(11)).unwrap();
        let assigner = ds.natural_assigner();
        let agree = ds
            .samples()
            .iter_rows()
            .zip(ds.labels())
            .filter(|(row, &label)| assigner.assign(row).unwrap() == label)
            .count();
        assert!(agree as f64 >= 0.99 * 2000.0, "{agree}");
        let ds = two_mode_mixture(&[0.7, 0.3], 2000, &mut Rng::new(12)).unwrap();
        let assigner = ds.natural_assigner();
        for (row, &label) in ds.samples().iter_rows().zip(ds.labels()) {
            assert_eq!(assigner.assign(row).unwrap(), label);
        }
    }

    #[test]
    fn prototypes_are_dark() {
        for p in default_prototypes() {
            assert_eq!(p.len(), PATCH_SIDE * PATCH_SIDE);
            assert_eq!(p.iter().sum::<f64>(), 16.0);
        }
    }

    #[test]
    fn inverted_patches_are_threshold_separable() {
        let protos = default_prototypes();
        let ds = make_inverted_patches(&protos, DEFAULT_PATCH_MARGIN, &[0.3, 0.7], 1000, 0.05, &mut Rng::new(3))
            .unwrap();
        assert_eq!(ds.label_counts(), vec![300, 700]);
        let assigner = ds.natural_assigner();
        for (row, &label) in ds.samples().iter_rows().zip(ds.labels()) {
            assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(assigner.assign(row).unwrap(), label);
        }
    }

    #[test]
    fn noiseless_inversion_mirrors_mean() {
        let proto = vec![vec![0.3; 4]];
        let ds = make_inverted_patches(&proto, 0.1, &[0.5, 0.5], 2, 0.0, &mut Rng::new(0)).unwrap();
        let inv = ds.samples().row(1);
        let mean = inv.iter().sum::<f64>() / 4.0;
        assert!((mean - 0.7).abs() < 1e-12);
    }

    #[test]
    fn prototype_violating_margin_is_rejected() {
        let proto = vec![vec![0.48; 4]];
        assert!(make_inverted_patches(&proto, 0.1, &[0.5, 0.5], 10, 0.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn mean_threshold_rule() {
        assert_eq!(assign_group_mean_threshold(&[0.6, 0.6], 0.5).id(), 1);
        assert_eq!(assign_group_mean_threshold(&[0.4, 0.6], 0.5).id(), 0);
        assert_eq!(assign_group_mean_threshold(&[0.0; 64], 0.5).id(), 0);
    }

    #[test]
    fn nearest_center_rule() {
        let c = vec![vec![-3.0, 0.0], vec![3.0, 0.0]];
        assert_eq!(assign_group_nearest_center(&[2.9, 0.1], &c).unwrap().id(), 1);
        assert_eq!(assign_group_nearest_center(&[-3.0, 0.0], &c).unwrap().id(), 0);
        assert_eq!(assign_group_nearest_center(&[0.0, 0.0], &c).unwrap().id(), 0);
        assert!(assign_group_nearest_center(&[0.0, 0.0], &[]).is_err());
    }

    #[test]
    fn assigner_spec_round_trip() {
        for a in [
            GroupAssigner::MeanThreshold(0.5),
            GroupAssigner::NearestCenter(vec![vec![-3.0, 0.0], vec![3.0, 0.5]]),
        ] {
            assert_eq!(GroupAssigner::parse(&a.describe()).unwrap(), a);
        }
        assert_eq!(GroupAssigner::parse("ring8").unwrap().groups(), 8);
        assert!(GroupAssigner::parse("nope").is_err());
    }

    #[test]
    fn minibatch_contract() {
        let ds = two_mode_mixture(&[0.7, 0.3], 1000, &mut Rng::new(1)).unwrap();
        let mut rng = Rng::new(5);
        let b = ds.minibatch(64, &mut rng).unwrap();
        assert_eq!(b.samples.shape(), &[64, 2]);
        assert_eq!(b.labels.len(), 64);
        let assigner = ds.natural_assigner();
        for (row, &l) in b.samples.iter_rows().zip(&b.labels) {
            assert_eq!(assigner.assign(row).unwrap(), l);
        }
        assert_eq!(ds.minibatch(64, &mut Rng::new(5)).unwrap(), b);
        assert!(ds.minibatch(0, &mut rng).is_err());
    }

    #[test]
    fn minibatch_label_frequency() {
        let ds = two_mode_mixture(&[0.7, 0.3], 1000, &mut Rng::new(1)).unwrap();
        let mut rng = Rng::new(77);
        let mut majority = 0usize;
        let mut total = 0usize;
        for _ in 0..10_000 {
            let b = ds.minibatch(8, &mut rng).unwrap();
            majority += b.labels.iter().filter(|&&l| l == 0).count();
            total += b.labels.len();
        }
        let freq = majority as f64 / total as f64;
        assert!((0.69..=0.71).contains(&freq), "{freq}");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let ds = two_mode_mixture(&[0.5, 0.5], 20, &mut Rng::new(2)).unwrap();
        ds.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sample_idx,group_id,dim_0,dim_1\n"));
        let (samples, labels) = read_samples_csv(&path).unwrap();
        assert_eq!(&samples, ds.samples());
        assert_eq!(labels, ds.labels());
    }
}
