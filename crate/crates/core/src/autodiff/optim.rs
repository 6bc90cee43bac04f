use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{shape_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Moment estimates carried between Adam steps. SGD keeps only the counter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl OptimizerState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Applies one update to `params` in place.
pub fn optimizer_step(
    params: &mut [&mut Tensor],
    grads: &[Option<&Tensor>],
    config: &OptimizerConfig,
    state: &mut OptimizerState,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(shape_err(
            "optimizer_step",
            format!("{} parameters but {} gradients", params.len(), grads.len()),
        ));
    }
    let mut checked = Vec::with_capacity(grads.len());
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        let g = g.ok_or(Error::MissingGradient(i))?;
        if g.shape() != p.shape() {
            return Err(shape_err(
                "optimizer_step",
                format!("parameter {i} has shape {:?}, gradient {:?}", p.shape(), g.shape()),
            ));
        }
        checked.push(g);
    }
    state.step += 1;
    match *config {
        OptimizerConfig::Sgd { lr } => {
            for (p, g) in params.iter_mut().zip(checked) {
                for (v, d) in p.data_mut().iter_mut().zip(g.data()) {
                    *v -= lr * d;
                }
            }
        }
        OptimizerConfig::Adam { lr, beta1, beta2, eps } => {
            if state.first.len() != params.len() {
                state.first = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
                state.second = state.first.clone();
            }
            let t = state.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for (k, (p, g)) in params.iter_mut().zip(checked).enumerate() {
                let m = state.first[k].data_mut();
                let s = state.second[k].data_mut();
                for (((v, &d), mi), si) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(s) {
                    *mi = beta1 * *mi + (1.0 - beta1) * d;
                    *si = beta2 * *si + (1.0 - beta2) * d * d;
                    let mhat = *mi / c1;
                    let shat = *si / c2;
                    *v -= lr * mhat / (shat.sqrt() + eps);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_step() {
        let mut p = Tensor::scalar(1.0);
        let g = Tensor::scalar(2.0);
        let mut st = OptimizerState::new();
        optimizer_step(&mut [&mut p], &[Some(&g)], &OptimizerConfig::Sgd { lr: 0.1 }, &mut st).unwrap();
        assert!((p.item() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_grad_is_noop() {
        for cfg in [OptimizerConfig::Sgd { lr: 0.5 }, OptimizerConfig::adam(0.1)] {
            let mut p = Tensor::new(vec![3], vec![1.0, -2.0, 3.0]).unwrap();
            let before = p.clone();
            let g = Tensor::zeros(&[3]);
            let mut st = OptimizerState::new();
            optimizer_step(&mut [&mut p], &[Some(&g)], &cfg, &mut st).unwrap();
            assert_eq!(p, before);
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // Step-1 bias correction gives mhat = g, shat = g^2, so the update is
        // lr * g / (|g| + eps), i.e. lr * sign(g) up to eps / |g|.
        for g0 in [0.37, -5.0, 1e-3] {
            let mut p = Tensor::scalar(0.0);
            let g = Tensor::scalar(g0);
            let mut st = OptimizerState::new();
            optimizer_step(&mut [&mut p], &[Some(&g)], &OptimizerConfig::adam(0.01), &mut st).unwrap();
            let expected = -0.01 * g0 / (g0.abs() + 1e-8);
            assert!((p.item() - expected).abs() < 1e-15);
            assert!((p.item() + 0.01 * g0.signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn missing_grad_is_error() {
        let mut p = Tensor::scalar(1.0);
        let mut st = OptimizerState::new();
        let err = optimizer_step(&mut [&mut p], &[None], &OptimizerConfig::Sgd { lr: 0.1 }, &mut st);
        assert!(matches!(err, Err(Error::MissingGradient(0))));
    }
}
