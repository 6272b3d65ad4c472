//! Adam and plain SGD over [`NetParams`]-shaped gradients.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Result};
use crate::net::{NetParams, ParamGrad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moment accumulators (bias-corrected at use).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ParamGrad,
    pub v: ParamGrad,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &NetParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }

    /// In-place update of `params` against `grad`.
    pub fn apply(&mut self, params: &mut NetParams, grad: &ParamGrad, lr: f64) -> Result<()> {
        if !params.same_layout(grad) || !params.same_layout(&self.m) {
            return dim_err("optimizer state, parameters and gradient differ in layout");
        }
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - self.beta1.powf(t);
        let c2 = 1.0 - self.beta2.powf(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let m = self.m.values_mut();
        let v = self.v.values_mut();
        for (((w, &g), mi), vi) in params
            .values_mut()
            .iter_mut()
            .zip(grad.values())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mi = b1 * *mi + (1.0 - b1) * g;
            *vi = b2 * *vi + (1.0 - b2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Functional Adam step.
pub fn adam_step(
    params: &NetParams,
    grad: &ParamGrad,
    state: &AdamState,
    lr: f64,
) -> Result<(NetParams, AdamState)> {
    let (mut p, mut s) = (params.clone(), state.clone());
    s.apply(&mut p, grad, lr)?;
    Ok((p, s))
}

/// `θ − lr · g`.
pub fn sgd_step(params: &NetParams, grad: &ParamGrad, lr: f64) -> Result<NetParams> {
    let mut p = params.clone();
    p.add_scaled(-lr, grad)?;
    Ok(p)
}

/// Optimizer state of either kind.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // one per trainer
pub enum OptState {
    Adam(AdamState),
    Sgd,
}

impl OptState {
    pub fn new(kind: OptimizerKind, params: &NetParams) -> Self {
        match kind {
            OptimizerKind::Adam => Self::Adam(AdamState::new(params)),
            OptimizerKind::Sgd => Self::Sgd,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            Self::Adam(_) => OptimizerKind::Adam,
            Self::Sgd => OptimizerKind::Sgd,
        }
    }

    pub fn apply(&mut self, params: &mut NetParams, grad: &ParamGrad, lr: f64) -> Result<()> {
        match self {
            Self::Adam(state) => state.apply(params, grad, lr),
            Self::Sgd => params.add_scaled(-lr, grad),
        }
    }
}
