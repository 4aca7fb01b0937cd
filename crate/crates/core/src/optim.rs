//! Adam with bias-corrected moment estimates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Gradients, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        Ok(())
    }
}

/// First/second moment accumulators and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.weights.len() + params.bias.len();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn timestep(&self) -> u32 {
        self.t
    }
}

/// One Adam update of `params` in place:
/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`,
/// `theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, config: &AdamConfig) -> Result<()> {
    let n = params.weights.len() + params.bias.len();
    if grads.weights.len() != params.weights.len() || grads.bias.len() != params.bias.len() || state.m.len() != n {
        return Err(Error::LengthMismatch {
            what: "gradients",
            expected: n,
            got: grads.weights.len() + grads.bias.len(),
        });
    }
    if grads.weights.iter().chain(&grads.bias).any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradients"));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - libm::pow(config.beta1, t as f64);
    let c2 = 1.0 - libm::pow(config.beta2, t as f64);
    let thetas = params.weights.iter_mut().chain(params.bias.iter_mut());
    let gs = grads.weights.iter().chain(&grads.bias);
    for (((theta, &g), m), v) in thetas.zip(gs).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = config.beta1 * *m + (1.0 - config.beta1) * g;
        *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *theta -= config.learning_rate * m_hat / (libm::sqrt(v_hat) + config.eps);
    }
    Ok(())
}
