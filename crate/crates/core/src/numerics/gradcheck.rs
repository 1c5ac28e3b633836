use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Compares reverse-mode gradients against central differences.
///
/// `f` builds a scalar from the given parameter leaves. Returns the maximum over
/// all coordinates of `|analytic − numeric| / max(1, |analytic|)`.
pub fn grad_check<F>(f: F, point: &[Tensor], eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars = point
        .iter()
        .map(|t| g.param(t.clone()))
        .collect::<Result<Vec<_>>>()?;
    let root = f(&mut g, &vars)?;
    let grads = g.backward(root)?;

    let eval = |params: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let vars = params
            .iter()
            .map(|t| g.constant(t.clone()))
            .collect::<Result<Vec<_>>>()?;
        let root = f(&mut g, &vars)?;
        let v = g.value(root).item()?;
        if !v.is_finite() {
            return Err(Error::NonFinite { op: "grad_check" });
        }
        Ok(v)
    };

    let mut shifted = point.to_vec();
    let mut worst: f64 = 0.0;
    for (pi, var) in vars.iter().enumerate() {
        let analytic = grads.wrt(*var)?.data().to_vec();
        for (j, a) in analytic.iter().enumerate() {
            let orig = point[pi].data()[j];
            shifted[pi].data_mut()[j] = orig + eps;
            let up = eval(&shifted)?;
            shifted[pi].data_mut()[j] = orig - eps;
            let down = eval(&shifted)?;
            shifted[pi].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let err = (a - numeric).abs() / a.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
