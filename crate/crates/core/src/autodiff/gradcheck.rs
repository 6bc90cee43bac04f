use crate::autodiff::{Graph, NodeId, Tensor};
use crate::error::{invalid, Error, Result};

/// Compares reverse-mode gradients against central finite differences.
///
/// `f` receives a fresh graph and the node holding `x`, and must return a
/// scalar node. The result is the largest coordinatewise relative error
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, NodeId) -> Result<NodeId>,
{
    if !(eps > 0.0) {
        return Err(invalid("grad_check", format!("eps must be positive, got {eps}")));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("grad_check input"));
    }
    let mut g = Graph::new();
    let xn = g.param(x.clone());
    let out = f(&mut g, xn)?;
    let grads = g.backward(out)?;
    let analytic = grads
        .get(xn)
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(x.shape()));

    let eval = |probe: Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let xn = g.param(probe);
        let out = f(&mut g, xn)?;
        Ok(g.value(out).item())
    };

    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[k] += eps;
        let mut minus = x.clone();
        minus.data_mut()[k] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        let a = analytic.data()[k];
        if !a.is_finite() {
            return Err(Error::NonFinite("analytic gradient"));
        }
        if !numeric.is_finite() {
            return Err(Error::NonFinite("numeric gradient"));
        }
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
