//! Multilayer perceptrons for the generator and discriminator, plus one-hot conditioning.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Gradients, Graph, Rng, Tensor, Var, DEFAULT_LEAKY_SLOPE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
    LeakyRelu(f64),
}

impl Activation {
    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu(DEFAULT_LEAKY_SLOPE)
    }

    pub fn apply(self, g: &mut Graph, x: Var) -> Result<Var> {
        match self {
            Activation::Identity => Ok(x),
            Activation::Sigmoid => g.sigmoid(x),
            Activation::Tanh => g.tanh(x),
            Activation::LeakyRelu(alpha) => g.leaky_relu(x, alpha),
        }
    }

    pub fn name(self) -> String {
        match self {
            Activation::Identity => "identity".into(),
            Activation::Sigmoid => "sigmoid".into(),
            Activation::Tanh => "tanh".into(),
            Activation::LeakyRelu(alpha) => format!("leaky-relu:{alpha}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "leaky-relu" => Ok(Activation::leaky_relu()),
            _ => match s.strip_prefix("leaky-relu:").map(str::parse::<f64>) {
                Some(Ok(alpha)) => Ok(Activation::LeakyRelu(alpha)),
                _ => Err(Error::invalid(format!("unknown activation `{s}`"))),
            },
        }
    }
}

/// Fully connected network: affine layers with a shared hidden activation and a distinct output activation.
///
/// Parameters are stored interleaved as `[W0, b0, W1, b1, ...]` where `Wi` is
/// `sizes[i] x sizes[i+1]` and `bi` is `1 x sizes[i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpNetwork {
    sizes: Vec<usize>,
    params: Vec<Tensor>,
    hidden: Activation,
    output: Activation,
}

impl MlpNetwork {
    /// Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut Rng) -> Result<Self> {
        validate_sizes(sizes)?;
        let mut params = Vec::with_capacity(2 * (sizes.len() - 1));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out).map(|_| rng.uniform(-s, s)).collect();
            params.push(Tensor::matrix(fan_in, fan_out, data)?);
            params.push(Tensor::zeros(&[1, fan_out]));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            hidden,
            output,
        })
    }

    pub fn from_params(sizes: &[usize], params: Vec<Tensor>, hidden: Activation, output: Activation) -> Result<Self> {
        validate_sizes(sizes)?;
        if params.len() != 2 * (sizes.len() - 1) {
            return Err(Error::invalid(format!(
                "{} layers need {} parameter tensors, got {}",
                sizes.len() - 1,
                2 * (sizes.len() - 1),
                params.len()
            )));
        }
        for (i, w) in sizes.windows(2).enumerate() {
            let expect_w = [w[0], w[1]];
            let expect_b = [1, w[1]];
            if params[2 * i].shape() != expect_w || params[2 * i + 1].shape() != expect_b {
                return Err(Error::ShapeMismatch {
                    op: "mlp_params",
                    left: expect_w.to_vec(),
                    right: params[2 * i].shape().to_vec(),
                });
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite { op: "mlp_params" });
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            hidden,
            output,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn weight(&self, layer: usize) -> &Tensor {
        &self.params[2 * layer]
    }

    pub fn bias(&self, layer: usize) -> &Tensor {
        &self.params[2 * layer + 1]
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Registers the parameters in `g`, as trainable leaves or as constants.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Result<BoundMlp> {
        let vars = self
            .params
            .iter()
            .map(|p| if trainable { g.param(p.clone()) } else { g.constant(p.clone()) })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundMlp {
            vars,
            input_width: self.input_width(),
            hidden: self.hidden,
            output: self.output,
        })
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false)?;
        let x = g.constant(input.clone())?;
        let y = bound.forward(&mut g, x)?;
        Ok(g.value(y).clone())
    }

    /// Text checkpoint: `mlp <sizes>`, activation names, then one line per parameter row.
    pub fn to_text(&self) -> String {
        let mut out = String::from("mlp");
        for s in &self.sizes {
            let _ = write!(out, " {s}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{} {}", self.hidden.name(), self.output.name());
        for p in &self.params {
            for row in p.iter_rows() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty checkpoint"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("mlp") {
            return Err(Error::parse(origin, 1, "expected `mlp <sizes>` header"));
        }
        let sizes = fields
            .map(|f| f.parse::<usize>().map_err(|e| Error::parse(origin, 1, format!("layer size `{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        validate_sizes(&sizes).map_err(|e| Error::parse(origin, 1, e.to_string()))?;

        let (_, acts) = lines.next().ok_or_else(|| Error::parse(origin, 2, "missing activation line"))?;
        let acts: Vec<&str> = acts.split_whitespace().collect();
        if acts.len() != 2 {
            return Err(Error::parse(origin, 2, "expected `<hidden> <output>` activations"));
        }
        let hidden = Activation::parse(acts[0]).map_err(|e| Error::parse(origin, 2, e.to_string()))?;
        let output = Activation::parse(acts[1]).map_err(|e| Error::parse(origin, 2, e.to_string()))?;

        let mut params = Vec::new();
        for w in sizes.windows(2) {
            for (rows, cols) in [(w[0], w[1]), (1, w[1])] {
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (idx, line) = lines
                        .next()
                        .ok_or_else(|| Error::parse(origin, 0, "checkpoint ends early"))?;
                    let row = line
                        .split_whitespace()
                        .map(|v| v.parse::<f64>().map_err(|e| Error::parse(origin, idx + 1, format!("`{v}`: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    if row.len() != cols {
                        return Err(Error::parse(
                            origin,
                            idx + 1,
                            format!("expected {cols} values, found {}", row.len()),
                        ));
                    }
                    data.extend(row);
                }
                params.push(Tensor::matrix(rows, cols, data)?);
            }
        }
        if let Some((idx, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(origin, idx + 1, format!("trailing data `{extra}`")));
        }
        Self::from_params(&sizes, params, hidden, output)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::invalid(format!("an mlp needs at least 2 layer sizes, got {sizes:?}")));
    }
    if sizes.contains(&0) {
        return Err(Error::invalid(format!("layer sizes must be positive, got {sizes:?}")));
    }
    Ok(())
}

/// An [`MlpNetwork`] whose parameters live in a particular [`Graph`].
#[derive(Clone, Debug)]
pub struct BoundMlp {
    vars: Vec<Var>,
    input_width: usize,
    hidden: Activation,
    output: Activation,
}

impl BoundMlp {
    pub fn forward(&self, g: &mut Graph, input: Var) -> Result<Var> {
        let width = g.value(input).cols();
        if g.value(input).shape().len() != 2 || width != self.input_width {
            return Err(Error::ShapeMismatch {
                op: "mlp_forward",
                left: vec![self.input_width],
                right: g.value(input).shape().to_vec(),
            });
        }
        let layers = self.vars.len() / 2;
        let mut x = input;
        for layer in 0..layers {
            let z = g.matmul(x, self.vars[2 * layer])?;
            let z = g.add(z, self.vars[2 * layer + 1])?;
            let act = if layer + 1 == layers { self.output } else { self.hidden };
            x = act.apply(g, z)?;
        }
        Ok(x)
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Gradient tensors in parameter order, ready for [`crate::numerics::Adam::step`].
    pub fn gradients<'a>(&self, grads: &'a Gradients) -> Result<Vec<&'a Tensor>> {
        self.vars.iter().map(|v| grads.wrt(*v)).collect()
    }
}

/// Group index together with the number of groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupLabel {
    id: usize,
    groups: usize,
}

impl GroupLabel {
    pub fn new(id: usize, groups: usize) -> Result<Self> {
        if id >= groups {
            return Err(Error::invalid(format!("group label {id} out of range for {groups} groups")));
        }
        Ok(Self { id, groups })
    }

    pub fn id(self) -> usize {
        self.id
    }

    pub fn groups(self) -> usize {
        self.groups
    }
}

/// Rows of one-hot codes, `labels.len() x groups`.
pub fn one_hot(labels: &[usize], groups: usize) -> Result<Tensor> {
    let mut data = vec![0.0; labels.len() * groups];
    for (row, &label) in labels.iter().enumerate() {
        if label >= groups {
            return Err(Error::invalid(format!("group label {label} out of range for {groups} groups")));
        }
        data[row * groups + label] = 1.0;
    }
    Tensor::matrix(labels.len(), groups, data)
}

/// Appends the one-hot code of `label` to every row of `input`.
pub fn concat_condition(input: &Tensor, label: usize, groups: usize) -> Result<Tensor> {
    let labels = vec![label; input.rows()];
    concat_labels(input, &labels, groups)
}

/// Appends a per-row one-hot code.
pub fn concat_labels(input: &Tensor, labels: &[usize], groups: usize) -> Result<Tensor> {
    if input.shape().len() != 2 || labels.len() != input.rows() {
        return Err(Error::invalid(format!(
            "need one label per row: {} labels for shape {:?}",
            labels.len(),
            input.shape()
        )));
    }
    let code = one_hot(labels, groups)?;
    let d = input.cols();
    let mut data = Vec::with_capacity(input.rows() * (d + groups));
    for (row, onehot) in input.iter_rows().zip(code.iter_rows()) {
        data.extend_from_slice(row);
        data.extend_from_slice(onehot);
    }
    Tensor::matrix(input.rows(), d + groups, data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseSpec {
    pub dim: usize,
}

impl NoiseSpec {
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Tensor> {
        rng.standard_normal(&[n, self.dim])
    }
}

/// A generator network together with its noise width and optional conditioning.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    net: MlpNetwork,
    noise: NoiseSpec,
    groups: Option<usize>,
}

impl Generator {
    pub fn unconditional(net: MlpNetwork) -> Self {
        let noise = NoiseSpec { dim: net.input_width() };
        Self { net, noise, groups: None }
    }

    /// `net` must take `noise_dim + groups` inputs.
    pub fn conditional(net: MlpNetwork, groups: usize) -> Result<Self> {
        if groups == 0 || net.input_width() <= groups {
            return Err(Error::invalid(format!(
                "conditional generator with input width {} cannot hold {groups} groups",
                net.input_width()
            )));
        }
        let noise = NoiseSpec {
            dim: net.input_width() - groups,
        };
        Ok(Self {
            net,
            noise,
            groups: Some(groups),
        })
    }

    pub fn net(&self) -> &MlpNetwork {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut MlpNetwork {
        &mut self.net
    }

    pub fn into_net(self) -> MlpNetwork {
        self.net
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn groups(&self) -> Option<usize> {
        self.groups
    }

    pub fn data_dim(&self) -> usize {
        self.net.output_width()
    }

    /// Draws `n` samples on fresh noise. `condition` must be given exactly when the generator is conditional.
    pub fn sample(&self, n: usize, rng: &mut Rng, condition: Option<usize>) -> Result<Tensor> {
        match (self.groups, condition) {
            (None, Some(_)) => return Err(Error::invalid("unconditional generator given a condition")),
            (Some(_), None) => return Err(Error::invalid("conditional generator needs a condition")),
            (Some(k), Some(c)) if c >= k => {
                return Err(Error::invalid(format!("group label {c} out of range for {k} groups")))
            }
            _ => {}
        }
        if n == 0 {
            return Tensor::matrix(0, self.data_dim(), Vec::new());
        }
        let z = self.noise.sample(n, rng)?;
        let input = match (self.groups, condition) {
            (Some(k), Some(c)) => concat_condition(&z, c, k)?,
            _ => z,
        };
        self.net.forward(&input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_path(name: &str) -> std::path::PathBuf {
        std::path::PathBuf::from(format!("/nonexistent/{name}"))
    }

    #[test]
    fn parameter_count_and_zero_biases() {
        let mut rng = Rng::new(1);
        let net = MlpNetwork::new(&[2, 32, 1], Activation::Tanh, Activation::Sigmoid, &mut rng).unwrap();
        assert_eq!(net.parameter_count(), 2 * 32 + 32 + 32 + 1);
        assert_eq!(net.parameter_count(), 129);
        for l in 0..net.layers() {
            assert!(net.bias(l).data().iter().all(|&b| b == 0.0));
            let s = (6.0 / (net.sizes()[l] + net.sizes()[l + 1]) as f64).sqrt();
            assert!(net.weight(l).data().iter().all(|w| w.abs() <= s));
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = MlpNetwork::new(&[3, 8, 2], Activation::Tanh, Activation::Identity, &mut Rng::new(9)).unwrap();
        let b = MlpNetwork::new(&[3, 8, 2], Activation::Tanh, Activation::Identity, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_rejects_short_size_lists() {
        let mut rng = Rng::new(0);
        assert!(MlpNetwork::new(&[4], Activation::Tanh, Activation::Identity, &mut rng).is_err());
        assert!(MlpNetwork::new(&[4, 0, 1], Activation::Tanh, Activation::Identity, &mut rng).is_err());
    }

    #[test]
    fn zero_network_outputs_half() {
        let sizes = [3, 5, 1];
        let params = vec![
            Tensor::zeros(&[3, 5]),
            Tensor::zeros(&[1, 5]),
            Tensor::zeros(&[5, 1]),
            Tensor::zeros(&[1, 1]),
        ];
        let net = MlpNetwork::from_params(&sizes, params, Activation::leaky_relu(), Activation::Sigmoid).unwrap();
        let x = Rng::new(4).standard_normal(&[7, 3]).unwrap();
        let y = net.forward(&x).unwrap();
        assert_eq!(y.shape(), &[7, 1]);
        assert!(y.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn one_hidden_unit_matches_hand_evaluation() {
        // y = sigmoid(w2 * tanh(w1·x + b1) + b2)
        let params = vec![
            Tensor::matrix(2, 1, vec![0.7, -1.3]).unwrap(),
            Tensor::matrix(1, 1, vec![0.2]).unwrap(),
            Tensor::matrix(1, 1, vec![1.9]).unwrap(),
            Tensor::matrix(1, 1, vec![-0.4]).unwrap(),
        ];
        let net = MlpNetwork::from_params(&[2, 1, 1], params, Activation::Tanh, Activation::Sigmoid).unwrap();
        let x = Tensor::matrix(2, 2, vec![0.5, 0.25, -1.0, 2.0]).unwrap();
        let y = net.forward(&x).unwrap();
        for (row, out) in x.iter_rows().zip(y.data()) {
            let h = (0.7 * row[0] - 1.3 * row[1] + 0.2).tanh();
            let expect = 1.0 / (1.0 + (-(1.9 * h - 0.4)).exp());
            assert!((out - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = MlpNetwork::new(&[2, 4, 1], Activation::Tanh, Activation::Sigmoid, &mut Rng::new(0)).unwrap();
        assert!(net.forward(&Tensor::zeros(&[5, 3])).is_err());
    }

    #[test]
    fn condition_concatenation() {
        let x = Tensor::matrix(1, 2, vec![1.5, -2.5]).unwrap();
        let y = concat_condition(&x, 1, 2).unwrap();
        assert_eq!(y.data(), &[1.5, -2.5, 0.0, 1.0]);

        let many = Rng::new(3).standard_normal(&[6, 3]).unwrap();
        let y = concat_condition(&many, 2, 4).unwrap();
        for row in y.iter_rows() {
            assert_eq!(row[3..].iter().sum::<f64>(), 1.0);
        }
        assert!(concat_condition(&x, 5, 2).is_err());
        assert!(GroupLabel::new(5, 2).is_err());
        assert_eq!(GroupLabel::new(1, 2).unwrap().id(), 1);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let net = MlpNetwork::new(&[3, 7, 2], Activation::leaky_relu(), Activation::Tanh, &mut Rng::new(5)).unwrap();
        let text = net.to_text();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("mlp 3 7 2"));
        assert_eq!(lines.next(), Some("leaky-relu:0.2 tanh"));
        assert_eq!(text.lines().count(), 2 + 3 + 1 + 7 + 1);
        let back = MlpNetwork::from_text(&text, &tmp_path("net.mlp")).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn checkpoint_parse_errors_name_the_line() {
        let net = MlpNetwork::new(&[1, 2, 1], Activation::Tanh, Activation::Identity, &mut Rng::new(5)).unwrap();
        let text = net.to_text().replacen("mlp 1 2 1", "mlp 1 3 1", 1);
        assert!(MlpNetwork::from_text(&text, &tmp_path("x")).is_err());
        let err = MlpNetwork::from_text("mlp 2 1\nbogus identity\n", &tmp_path("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn generator_condition_contract() {
        let mut rng = Rng::new(2);
        let net = MlpNetwork::new(&[2, 8, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let g = Generator::unconditional(net.clone());
        assert_eq!(g.sample(0, &mut rng, None).unwrap().shape(), &[0, 2]);
        assert_eq!(g.sample(1000, &mut rng, None).unwrap().shape(), &[1000, 2]);
        assert!(g.sample(3, &mut rng, Some(0)).is_err());

        let c = Generator::conditional(net, 1).unwrap();
        assert_eq!(c.noise().dim, 1);
        assert!(c.sample(3, &mut rng, None).is_err());
        assert!(c.sample(3, &mut rng, Some(1)).is_err());
        assert!(c.sample(3, &mut rng, Some(0)).is_ok());
    }
}
