//! Fully connected tanh networks: configuration, parameter storage and
//! initialization.
//!
//! All parameters live in one flat vector ordered layer by layer, each layer
//! its weight matrix (row-major, `out × in`) followed by its bias. That is
//! also the on-disk order of `model.bin`.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    /// 1 for an energy network, `input_dim` for a direct score network.
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub seed: u64,
}

impl NetConfig {
    pub fn energy(input_dim: usize, hidden_dims: &[usize], seed: u64) -> Self {
        Self {
            input_dim,
            hidden_dims: hidden_dims.to_vec(),
            output_dim: 1,
            activation: Activation::Tanh,
            seed,
        }
    }

    pub fn score_net(input_dim: usize, hidden_dims: &[usize], seed: u64) -> Self {
        Self {
            output_dim: input_dim,
            ..Self::energy(input_dim, hidden_dims, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::Config(
                "need at least one hidden layer, all widths positive".into(),
            ));
        }
        if self.output_dim != 1 && self.output_dim != self.input_dim {
            return Err(Error::Config(format!(
                "output_dim must be 1 or input_dim ({}), got {}",
                self.input_dim, self.output_dim
            )));
        }
        Ok(())
    }

    pub fn is_energy(&self) -> bool {
        self.output_dim == 1
    }

    /// `(fan_out, fan_in)` of every layer, hidden layers first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in &self.hidden_dims {
            shapes.push((h, fan_in));
            fan_in = h;
        }
        shapes.push((self.output_dim, fan_in));
        shapes
    }

    pub fn num_params(&self) -> usize {
        self.layer_shapes().iter().map(|(o, i)| o * (i + 1)).sum()
    }
}

/// Weights and biases of a network (also used for gradients and optimizer
/// moments, which share the layout).
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    config: NetConfig,
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

/// Gradient with respect to every entry of a [`NetParams`].
pub type ParamGrad = NetParams;

impl NetParams {
    pub fn zeros(config: &NetConfig) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut total = 0;
        for &(o, i) in &shapes {
            offsets.push(total);
            total += o * (i + 1);
        }
        Ok(Self {
            config: config.clone(),
            shapes,
            offsets,
            values: vec![0.0; total],
        })
    }

    pub fn from_values(config: &NetConfig, values: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        if values.len() != p.values.len() {
            return dim_err(format!(
                "network needs {} parameters, got {}",
                p.values.len(),
                values.len()
            ));
        }
        p.values = values;
        Ok(p)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(config: &NetConfig, rng: &mut RngState) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        for l in 0..p.num_layers() {
            let (fan_out, fan_in) = p.shapes[l];
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in p.weight_mut(l) {
                *w = rng.uniform_range(-limit, limit);
            }
        }
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    /// Number of affine layers, hidden plus output.
    pub fn num_layers(&self) -> usize {
        self.shapes.len()
    }

    pub fn shape(&self, layer: usize) -> (usize, usize) {
        self.shapes[layer]
    }

    pub fn weight(&self, layer: usize) -> &[f64] {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer];
        &self.values[start..start + o * i]
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut [f64] {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer];
        &mut self.values[start..start + o * i]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer] + o * i;
        &self.values[start..start + o]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer] + o * i;
        &mut self.values[start..start + o]
    }

    /// Mutable weight and bias of one layer at once.
    pub(crate) fn layer_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer];
        self.values[start..start + o * (i + 1)].split_at_mut(o * i)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_layout(&self, other: &NetParams) -> bool {
        self.shapes == other.shapes
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &NetParams) -> Result<()> {
        if !self.same_layout(other) {
            return dim_err("parameter layouts differ");
        }
        crate::tensor::axpy(alpha, &other.values, &mut self.values);
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &NetParams) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
