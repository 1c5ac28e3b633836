//! Reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Graph`] records every operation as a node. Nodes are appended in
//! evaluation order, so the node list is already a topological order and
//! [`Graph::backward`] walks it in reverse. Graphs are meant to be rebuilt
//! for every training step and dropped afterwards.

use std::collections::HashMap;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Slope used by [`Elementwise::LeakyRelu`] when none is given.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

/// Handle to a node inside one [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// Elementwise operation kinds. Binary kinds take a second operand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementwise {
    Add,
    Sub,
    Mul,
    Neg,
    Exp,
    Log,
    Sigmoid,
    Tanh,
    LeakyRelu(f64),
}

impl Elementwise {
    pub fn is_binary(self) -> bool {
        matches!(self, Elementwise::Add | Elementwise::Sub | Elementwise::Mul)
    }

    pub fn name(self) -> &'static str {
        match self {
            Elementwise::Add => "add",
            Elementwise::Sub => "sub",
            Elementwise::Mul => "mul",
            Elementwise::Neg => "neg",
            Elementwise::Exp => "exp",
            Elementwise::Log => "log",
            Elementwise::Sigmoid => "sigmoid",
            Elementwise::Tanh => "tanh",
            Elementwise::LeakyRelu(_) => "leaky_relu",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reduce {
    Sum,
    Mean,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Neg(Var),
    Exp(Var),
    Log(Var),
    Sigmoid(Var),
    Tanh(Var),
    LeakyRelu(Var, f64),
    Scale(Var, f64),
    AddScalar(Var),
    Recip(Var),
    Clamp(Var, f64, f64),
    Sum(Var),
    Mean(Var),
    ConcatCols(Var, Var),
    PairwiseDistance(Var, Var, f64),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Gradients of a scalar root with respect to every trainable leaf.
#[derive(Debug, Default)]
pub struct Gradients {
    map: HashMap<Var, Tensor>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.map.get(&var)
    }

    /// Gradient for `var`; errors if `var` is not a trainable leaf.
    pub fn wrt(&self, var: Var) -> Result<&Tensor> {
        self.map
            .get(&var)
            .ok_or_else(|| Error::invalid(format!("node {} is not a trainable leaf", var.0)))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Tensor)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }
}

/// A single-threaded computation graph.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, true)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: "leaf" });
        }
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push(&mut self, op_name: &'static str, value: Tensor, op: Op, parents: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: op_name });
        }
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::ShapeMismatch {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        Ok(())
    }

    fn matrix_dims(&self, op: &'static str, a: Var) -> Result<(usize, usize)> {
        let s = self.value(a).shape();
        if s.len() != 2 {
            return Err(Error::invalid(format!("{op}: expected a matrix, got shape {s:?}")));
        }
        Ok((s[0], s[1]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.matrix_dims("matmul", a)?;
        let (k2, n) = self.matrix_dims("matmul", b)?;
        if k != k2 {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: vec![m, k],
                right: vec![k2, n],
            });
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), m, k, n);
        let value = Tensor::matrix(m, n, out)?;
        self.push("matmul", value, Op::MatMul(a, b), &[a, b])
    }

    /// Dispatches on `kind`; `b` must be present exactly for binary kinds.
    pub fn elementwise(&mut self, kind: Elementwise, a: Var, b: Option<Var>) -> Result<Var> {
        match (kind.is_binary(), b) {
            (true, Some(b)) => match kind {
                Elementwise::Add => self.add(a, b),
                Elementwise::Sub => self.sub(a, b),
                _ => self.mul(a, b),
            },
            (false, None) => match kind {
                Elementwise::Neg => self.neg(a),
                Elementwise::Exp => self.exp(a),
                Elementwise::Log => self.log(a),
                Elementwise::Sigmoid => self.sigmoid(a),
                Elementwise::Tanh => self.tanh(a),
                Elementwise::LeakyRelu(alpha) => self.leaky_relu(a, alpha),
                _ => unreachable!(),
            },
            (true, None) => Err(Error::invalid(format!("{} needs two operands", kind.name()))),
            (false, Some(_)) => Err(Error::invalid(format!("{} takes one operand", kind.name()))),
        }
    }

    /// Elementwise sum. A `1 x n` right operand is broadcast across the rows of an `m x n` left operand.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb && sa.len() == 2 && sb.len() == 2 && sb[0] == 1 && sa[1] == sb[1] {
            let cols = sa[1];
            let bias = self.value(b).data().to_vec();
            let mut out = self.value(a).clone();
            for row in out.data_mut().chunks_mut(cols) {
                for (o, &bv) in row.iter_mut().zip(&bias) {
                    *o += bv;
                }
            }
            return self.push("add", out, Op::AddRow(a, b), &[a, b]);
        }
        self.same_shape("add", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push("add", out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x - y);
        self.push("sub", out, Op::Sub(a, b), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push("mul", out, Op::Mul(a, b), &[a, b])
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| -x);
        self.push("neg", out, Op::Neg(a), &[a])
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::exp);
        self.push("exp", out, Op::Exp(a), &[a])
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        if let Some(bad) = self.value(a).data().iter().find(|&&x| x <= 0.0) {
            return Err(Error::Domain {
                op: "log",
                message: format!("non-positive argument {bad}"),
            });
        }
        let out = self.value(a).map(f64::ln);
        self.push("log", out, Op::Log(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push("sigmoid", out, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.push("tanh", out, Op::Tanh(a), &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, alpha: f64) -> Result<Var> {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { alpha * x });
        self.push("leaky_relu", out, Op::LeakyRelu(a, alpha), &[a])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x * factor);
        self.push("scale", out, Op::Scale(a, factor), &[a])
    }

    pub fn add_scalar(&mut self, a: Var, offset: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x + offset);
        self.push("add_scalar", out, Op::AddScalar(a), &[a])
    }

    pub fn recip(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| 1.0 / x);
        self.push("recip", out, Op::Recip(a), &[a])
    }

    /// Clamps into `[lo, hi]`. The gradient passes through inside the interval and is zero outside.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x.clamp(lo, hi));
        self.push("clamp", out, Op::Clamp(a, lo, hi), &[a])
    }

    pub fn reduce(&mut self, kind: Reduce, a: Var) -> Result<Var> {
        match kind {
            Reduce::Sum => self.sum(a),
            Reduce::Mean => self.mean(a),
        }
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        if self.value(a).is_empty() {
            return Err(Error::EmptyInput { op: "sum" });
        }
        let s: f64 = self.value(a).data().iter().sum();
        self.push("sum", Tensor::scalar(s), Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(Error::EmptyInput { op: "mean" });
        }
        let s: f64 = self.value(a).data().iter().sum();
        self.push("mean", Tensor::scalar(s / n as f64), Op::Mean(a), &[a])
    }

    /// Joins two matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ra, ca) = self.matrix_dims("concat_cols", a)?;
        let (rb, cb) = self.matrix_dims("concat_cols", b)?;
        if ra != rb {
            return Err(Error::ShapeMismatch {
                op: "concat_cols",
                left: vec![ra, ca],
                right: vec![rb, cb],
            });
        }
        let (va, vb) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(ra * (ca + cb));
        for r in 0..ra {
            out.extend_from_slice(&va[r * ca..(r + 1) * ca]);
            out.extend_from_slice(&vb[r * cb..(r + 1) * cb]);
        }
        let value = Tensor::matrix(ra, ca + cb, out)?;
        self.push("concat_cols", value, Op::ConcatCols(a, b), &[a, b])
    }

    /// `out[i][j] = max(‖a_i − b_j‖₂, floor)` for rows of `a` (p x d) and `b` (q x d).
    pub fn pairwise_distance(&mut self, a: Var, b: Var, floor: f64) -> Result<Var> {
        let (p, d) = self.matrix_dims("pairwise_distance", a)?;
        let (q, d2) = self.matrix_dims("pairwise_distance", b)?;
        if d != d2 {
            return Err(Error::ShapeMismatch {
                op: "pairwise_distance",
                left: vec![p, d],
                right: vec![q, d2],
            });
        }
        let (va, vb) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(p * q);
        for i in 0..p {
            let ai = &va[i * d..(i + 1) * d];
            for j in 0..q {
                let bj = &vb[j * d..(j + 1) * d];
                out.push(euclidean(ai, bj).max(floor));
            }
        }
        let value = Tensor::matrix(p, q, out)?;
        self.push("pairwise_distance", value, Op::PairwiseDistance(a, b, floor), &[a, b])
    }

    /// Reverse-mode accumulation from a scalar root.
    ///
    /// Every trainable leaf in the graph gets an entry, zero when the root does not depend on it.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_value = self.value(root);
        if root_value.len() != 1 {
            return Err(Error::NonScalarRoot(root_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0]);

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &upstream, &mut grads)?;
            grads[idx] = Some(upstream);
        }

        let mut map = HashMap::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) {
                let data = grads
                    .get_mut(idx)
                    .and_then(Option::take)
                    .unwrap_or_else(|| vec![0.0; node.value.len()]);
                let g = Tensor::new(node.value.shape(), data)?;
                if !g.is_finite() {
                    return Err(Error::NonFinite { op: "backward" });
                }
                map.insert(Var(idx), g);
            }
        }
        Ok(Gradients { map })
    }

    fn propagate(&self, node: &Node, up: &[f64], grads: &mut [Option<Vec<f64>>]) -> Result<()> {
        let y = node.value.data();
        match node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = dims2(self.value(a));
                let n = self.value(b).shape()[1];
                if self.requires_grad(a) {
                    // dA = dC · Bᵀ
                    let bv = self.value(b).data();
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        for j in 0..n {
                            let g = up[i * n + j];
                            if g == 0.0 {
                                continue;
                            }
                            for t in 0..k {
                                da[i * k + t] += g * bv[t * n + j];
                            }
                        }
                    }
                    accumulate(grads, a, &da);
                }
                if self.requires_grad(b) {
                    // dB = Aᵀ · dC
                    let av = self.value(a).data();
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        for t in 0..k {
                            let x = av[i * k + t];
                            if x == 0.0 {
                                continue;
                            }
                            let row = &up[i * n..(i + 1) * n];
                            for (d, &g) in db[t * n..(t + 1) * n].iter_mut().zip(row) {
                                *d += x * g;
                            }
                        }
                    }
                    accumulate(grads, b, &db);
                }
            }
            Op::Add(a, b) => {
                self.accumulate_if(grads, a, up);
                self.accumulate_if(grads, b, up);
            }
            Op::AddRow(a, b) => {
                self.accumulate_if(grads, a, up);
                if self.requires_grad(b) {
                    let cols = self.value(b).len();
                    let mut db = vec![0.0; cols];
                    for row in up.chunks(cols) {
                        for (d, &g) in db.iter_mut().zip(row) {
                            *d += g;
                        }
                    }
                    accumulate(grads, b, &db);
                }
            }
            Op::Sub(a, b) => {
                self.accumulate_if(grads, a, up);
                if self.requires_grad(b) {
                    let neg: Vec<f64> = up.iter().map(|g| -g).collect();
                    accumulate(grads, b, &neg);
                }
            }
            Op::Mul(a, b) => {
                if self.requires_grad(a) {
                    let da = zip(up, self.value(b).data(), |g, x| g * x);
                    accumulate(grads, a, &da);
                }
                if self.requires_grad(b) {
                    let db = zip(up, self.value(a).data(), |g, x| g * x);
                    accumulate(grads, b, &db);
                }
            }
            Op::Neg(a) => {
                let d: Vec<f64> = up.iter().map(|g| -g).collect();
                accumulate(grads, a, &d);
            }
            Op::Exp(a) => accumulate(grads, a, &zip(up, y, |g, e| g * e)),
            Op::Log(a) => accumulate(grads, a, &zip(up, self.value(a).data(), |g, x| g / x)),
            Op::Sigmoid(a) => accumulate(grads, a, &zip(up, y, |g, s| g * s * (1.0 - s))),
            Op::Tanh(a) => accumulate(grads, a, &zip(up, y, |g, t| g * (1.0 - t * t))),
            Op::LeakyRelu(a, alpha) => {
                let d = zip(up, self.value(a).data(), |g, x| if x > 0.0 { g } else { alpha * g });
                accumulate(grads, a, &d);
            }
            Op::Scale(a, factor) => {
                let d: Vec<f64> = up.iter().map(|g| g * factor).collect();
                accumulate(grads, a, &d);
            }
            Op::AddScalar(a) => accumulate(grads, a, up),
            Op::Recip(a) => accumulate(grads, a, &zip(up, y, |g, r| -g * r * r)),
            Op::Clamp(a, lo, hi) => {
                let d = zip(up, self.value(a).data(), |g, x| if (lo..=hi).contains(&x) { g } else { 0.0 });
                accumulate(grads, a, &d);
            }
            Op::Sum(a) => {
                let d = vec![up[0]; self.value(a).len()];
                accumulate(grads, a, &d);
            }
            Op::Mean(a) => {
                let n = self.value(a).len();
                let d = vec![up[0] / n as f64; n];
                accumulate(grads, a, &d);
            }
            Op::ConcatCols(a, b) => {
                let (rows, ca) = dims2(self.value(a));
                let cb = self.value(b).shape()[1];
                let width = ca + cb;
                if self.requires_grad(a) {
                    let da: Vec<f64> = (0..rows).flat_map(|r| up[r * width..r * width + ca].iter().copied()).collect();
                    accumulate(grads, a, &da);
                }
                if self.requires_grad(b) {
                    let db: Vec<f64> = (0..rows).flat_map(|r| up[r * width + ca..(r + 1) * width].iter().copied()).collect();
                    accumulate(grads, b, &db);
                }
            }
            Op::PairwiseDistance(a, b, floor) => {
                let (p, d) = dims2(self.value(a));
                let q = self.value(b).shape()[0];
                let (va, vb) = (self.value(a).data(), self.value(b).data());
                let mut da = vec![0.0; p * d];
                let mut db = vec![0.0; q * d];
                for i in 0..p {
                    for j in 0..q {
                        let dist = y[i * q + j];
                        let g = up[i * q + j];
                        if g == 0.0 || dist <= floor {
                            continue;
                        }
                        for t in 0..d {
                            let unit = (va[i * d + t] - vb[j * d + t]) / dist;
                            da[i * d + t] += g * unit;
                            db[j * d + t] -= g * unit;
                        }
                    }
                }
                self.accumulate_if(grads, a, &da);
                self.accumulate_if(grads, b, &db);
            }
        }
        Ok(())
    }

    fn accumulate_if(&self, grads: &mut [Option<Vec<f64>>], var: Var, delta: &[f64]) {
        if self.requires_grad(var) {
            accumulate(grads, var, delta);
        }
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], var: Var, delta: &[f64]) {
    match &mut grads[var.0] {
        Some(existing) => {
            for (e, d) in existing.iter_mut().zip(delta) {
                *e += d;
            }
        }
        slot @ None => *slot = Some(delta.to_vec()),
    }
}

fn dims2(t: &Tensor) -> (usize, usize) {
    (t.shape()[0], t.shape()[1])
}

fn zip(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = zip(a.data(), b.data(), f);
    Tensor::new(a.shape(), data).expect("shapes checked by caller")
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for t in 0..k {
            let x = a[i * k + t];
            if x == 0.0 {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[t * n..(t + 1) * n]) {
                *o += x * bv;
            }
        }
    }
    out
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Tensor {
        Tensor::matrix(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity_and_hand_product() {
        let mut g = Graph::new();
        let id = g.constant(m(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        let x = g.constant(m(2, 2, &[1.5, -2.0, 0.25, 7.0])).unwrap();
        let y = g.matmul(id, x).unwrap();
        assert_eq!(g.value(y).data(), &[1.5, -2.0, 0.25, 7.0]);

        let a = g.constant(m(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let b = g.constant(m(2, 2, &[5.0, 6.0, 7.0, 8.0])).unwrap();
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_rejects_mismatched_inner_dims() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3])).unwrap();
        let b = g.constant(Tensor::zeros(&[2, 3])).unwrap();
        assert!(matches!(g.matmul(a, b), Err(Error::ShapeMismatch { op: "matmul", .. })));
    }

    #[test]
    fn elementwise_trivial_values() {
        let mut g = Graph::new();
        let zero = g.param(Tensor::scalar(0.0)).unwrap();
        let s = g.sigmoid(zero).unwrap();
        assert_eq!(g.value(s).item().unwrap(), 0.5);

        let one = g.constant(Tensor::scalar(1.0)).unwrap();
        let l = g.log(one).unwrap();
        assert_eq!(g.value(l).item().unwrap(), 0.0);

        let t = g.tanh(zero).unwrap();
        let grads = g.backward(t).unwrap();
        assert_eq!(grads.wrt(zero).unwrap().item().unwrap(), 1.0);
    }

    #[test]
    fn log_of_non_positive_is_an_error() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(0.0)).unwrap();
        assert!(matches!(g.log(x), Err(Error::Domain { op: "log", .. })));
        let x = g.constant(Tensor::scalar(-2.0)).unwrap();
        assert!(g.log(x).is_err());
    }

    #[test]
    fn overflow_is_reported_with_op_name() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(1000.0)).unwrap();
        assert!(matches!(g.exp(x), Err(Error::NonFinite { op: "exp" })));
        let z = g.constant(Tensor::scalar(0.0)).unwrap();
        assert!(matches!(g.recip(z), Err(Error::NonFinite { op: "recip" })));
        assert!(matches!(g.constant(Tensor::scalar(f64::NAN)), Err(Error::NonFinite { op: "leaf" })));
    }

    #[test]
    fn elementwise_dispatch_checks_arity() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(1.0)).unwrap();
        assert!(g.elementwise(Elementwise::Add, x, None).is_err());
        assert!(g.elementwise(Elementwise::Exp, x, Some(x)).is_err());
        let y = g.elementwise(Elementwise::Mul, x, Some(x)).unwrap();
        assert_eq!(g.value(y).item().unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_on_binary_ops() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 2])).unwrap();
        let b = g.constant(Tensor::zeros(&[2, 3])).unwrap();
        assert!(g.sub(a, b).is_err());
        assert!(g.mul(a, b).is_err());
        // only a single-row right operand broadcasts
        let c = g.constant(Tensor::zeros(&[2, 2])).unwrap();
        let r = g.constant(Tensor::zeros(&[1, 3])).unwrap();
        assert!(g.add(c, r).is_err());
    }

    #[test]
    fn row_broadcast_gradient_sums_rows() {
        let mut g = Graph::new();
        let x = g.constant(m(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).unwrap();
        let b = g.param(m(1, 2, &[10.0, 20.0])).unwrap();
        let y = g.add(x, b).unwrap();
        assert_eq!(g.value(y).data(), &[11.0, 22.0, 13.0, 24.0, 15.0, 26.0]);
        let s = g.sum(y).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.wrt(b).unwrap().data(), &[3.0, 3.0]);
    }

    #[test]
    fn reductions() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(&[3], vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let mean = g.mean(x).unwrap();
        assert_eq!(g.value(mean).item().unwrap(), 2.0);

        let empty = g.constant(Tensor::new(&[0], vec![]).unwrap()).unwrap();
        assert!(matches!(g.sum(empty), Err(Error::EmptyInput { op: "sum" })));
        assert!(matches!(g.reduce(Reduce::Mean, empty), Err(Error::EmptyInput { .. })));

        for n in [1, 7, 100] {
            let c = g.constant(Tensor::full(&[n], 3.25)).unwrap();
            let mc = g.mean(c).unwrap();
            assert_eq!(g.value(mc).item().unwrap(), 3.25);
        }
    }

    #[test]
    fn backward_trivial_cases() {
        let mut g = Graph::new();
        let a = g.param(Tensor::new(&[3], vec![1.0, -2.0, 0.5]).unwrap()).unwrap();
        let b = g.param(Tensor::new(&[3], vec![4.0, 5.0, -6.0]).unwrap()).unwrap();
        let unused = g.param(Tensor::zeros(&[2, 2])).unwrap();
        let ab = g.mul(a, b).unwrap();
        let root = g.sum(ab).unwrap();
        let grads = g.backward(root).unwrap();
        assert_eq!(grads.wrt(a).unwrap().data(), g.value(b).data());
        assert_eq!(grads.wrt(b).unwrap().data(), g.value(a).data());
        assert_eq!(grads.wrt(unused).unwrap(), &Tensor::zeros(&[2, 2]));

        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(3.0)).unwrap();
        let sq = g.mul(x, x).unwrap();
        let grads = g.backward(sq).unwrap();
        assert_eq!(grads.wrt(x).unwrap().item().unwrap(), 6.0);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let mut g = Graph::new();
        let x = g.param(Tensor::zeros(&[2])).unwrap();
        assert!(matches!(g.backward(x), Err(Error::NonScalarRoot(_))));
    }

    #[test]
    fn constants_get_no_gradient_entry() {
        let mut g = Graph::new();
        let c = g.constant(Tensor::scalar(2.0)).unwrap();
        let p = g.param(Tensor::scalar(3.0)).unwrap();
        let y = g.mul(c, p).unwrap();
        let grads = g.backward(y).unwrap();
        assert!(grads.get(c).is_none());
        assert_eq!(grads.wrt(p).unwrap().item().unwrap(), 2.0);
        assert_eq!(grads.len(), 1);
    }

    #[test]
    fn pairwise_distance_applies_floor() {
        let mut g = Graph::new();
        let a = g.param(m(2, 2, &[0.0, 0.0, 3.0, 4.0])).unwrap();
        let b = g.constant(m(1, 2, &[0.0, 0.0])).unwrap();
        let d = g.pairwise_distance(a, b, 1e-3).unwrap();
        assert_eq!(g.value(d).data(), &[1e-3, 5.0]);
        let s = g.sum(d).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.wrt(a).unwrap().data(), &[0.0, 0.0, 0.6, 0.8]);
    }

    #[test]
    fn concat_cols_splits_gradient() {
        let mut g = Graph::new();
        let a = g.param(m(2, 1, &[1.0, 2.0])).unwrap();
        let b = g.param(m(2, 2, &[3.0, 4.0, 5.0, 6.0])).unwrap();
        let c = g.concat_cols(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let w = g.constant(m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).unwrap();
        let p = g.mul(c, w).unwrap();
        let s = g.sum(p).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.wrt(a).unwrap().data(), &[1.0, 4.0]);
        assert_eq!(grads.wrt(b).unwrap().data(), &[2.0, 3.0, 5.0, 6.0]);
    }
}
