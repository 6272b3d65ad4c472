//! Energy `E(x; θ)` of a tanh MLP, its score `ψ = −∇ₓE`, and the
//! parameter derivatives the training objectives need.
//!
//! The score is obtained by an explicit reverse sweep over the cached
//! forward activations. [`score_param_vjp`] differentiates that sweep once
//! more: forward pass and input-gradient pass are written out as layer
//! recurrences and the composite graph is run backwards, giving
//! `∇_θ ⟨v, ∇ₓE(x; θ)⟩` exactly in a few matrix-vector products per layer.

use crate::error::{dim_err, Result};
use crate::net::{NetParams, ParamGrad};
use crate::tensor::{gemv, gemv_t_acc, outer_acc};

/// Activations of one forward pass. `activations[0]` is the input,
/// `activations[k]` the output of hidden layer `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub activations: Vec<Vec<f64>>,
    /// Linear output layer: the energy (length 1) or a score vector.
    pub output: Vec<f64>,
}

impl ForwardTrace {
    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }

    /// Last hidden layer `h(L)`.
    pub fn last_hidden(&self) -> &[f64] {
        self.activations.last().expect("trace has at least the input")
    }
}

fn check_input(p: &NetParams, x: &[f64]) -> Result<()> {
    let d = p.config().input_dim;
    if x.len() != d {
        return dim_err(format!("input has length {}, network expects {d}", x.len()));
    }
    Ok(())
}

fn check_energy(p: &NetParams) -> Result<()> {
    if p.config().output_dim != 1 {
        return dim_err(format!(
            "operation needs an energy network (output_dim 1), got output_dim {}",
            p.config().output_dim
        ));
    }
    Ok(())
}

pub fn forward(p: &NetParams, x: &[f64]) -> Result<ForwardTrace> {
    check_input(p, x)?;
    let hidden = p.num_layers() - 1;
    let mut activations = Vec::with_capacity(hidden + 1);
    activations.push(x.to_vec());
    for l in 0..hidden {
        let (out, inp) = p.shape(l);
        let mut z = vec![0.0; out];
        gemv(p.weight(l), out, inp, &activations[l], &mut z);
        for (zi, bi) in z.iter_mut().zip(p.bias(l)) {
            *zi = (*zi + bi).tanh();
        }
        activations.push(z);
    }
    let (out, inp) = p.shape(hidden);
    let mut output = vec![0.0; out];
    gemv(p.weight(hidden), out, inp, &activations[hidden], &mut output);
    for (o, b) in output.iter_mut().zip(p.bias(hidden)) {
        *o += b;
    }
    Ok(ForwardTrace {
        activations,
        output,
    })
}

pub fn energy(p: &NetParams, x: &[f64]) -> Result<f64> {
    check_energy(p)?;
    Ok(forward(p, x)?.output[0])
}

/// Input-gradient sweep. `deltas[k]` is `∂E/∂z` of hidden layer `k` and
/// `grads[k]` is `∂E/∂a_k` (so `grads[0] = ∇ₓE`).
struct InputGrad {
    deltas: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
}

fn input_grad(p: &NetParams, trace: &ForwardTrace) -> InputGrad {
    let hidden = p.num_layers() - 1;
    let mut grads = vec![Vec::new(); hidden + 1];
    let mut deltas = vec![Vec::new(); hidden];
    grads[hidden] = p.weight(hidden).to_vec();
    for k in (0..hidden).rev() {
        let a = &trace.activations[k + 1];
        let delta: Vec<f64> = grads[k + 1]
            .iter()
            .zip(a)
            .map(|(g, a)| g * (1.0 - a * a))
            .collect();
        let mut g = vec![0.0; p.shape(k).1];
        gemv_t_acc(p.weight(k), p.shape(k).1, &delta, &mut g);
        deltas[k] = delta;
        grads[k] = g;
    }
    InputGrad { deltas, grads }
}

/// `∇ₓE(x; θ)`.
pub fn energy_input_grad(p: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    check_energy(p)?;
    let trace = forward(p, x)?;
    Ok(input_grad(p, &trace).grads.swap_remove(0))
}

/// Score `ψ(x; θ) = −∇ₓE(x; θ)`.
pub fn score(p: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    let mut g = energy_input_grad(p, x)?;
    g.iter_mut().for_each(|v| *v = -*v);
    Ok(g)
}

/// Energy together with `∇ₓE`, sharing one forward pass.
pub fn energy_and_grad(p: &NetParams, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_energy(p)?;
    let trace = forward(p, x)?;
    let e = trace.output[0];
    Ok((e, input_grad(p, &trace).grads.swap_remove(0)))
}

/// `∇_θ ⟨v, ∇ₓE(x; θ)⟩`.
pub fn score_param_vjp(p: &NetParams, x: &[f64], v: &[f64]) -> Result<ParamGrad> {
    let mut grad = p.zeros_like();
    score_param_vjp_acc(p, x, v, 1.0, &mut grad)?;
    Ok(grad)
}

/// Adds `scale · ∇_θ ⟨v, ∇ₓE(x; θ)⟩` into `grad` and returns `∇ₓE(x)`.
pub(crate) fn score_param_vjp_acc(
    p: &NetParams,
    x: &[f64],
    v: &[f64],
    scale: f64,
    grad: &mut ParamGrad,
) -> Result<Vec<f64>> {
    check_input(p, v)?;
    input_grad_vjp_acc(p, x, scale, grad, |_| v.to_vec())
}

/// Like [`score_param_vjp_acc`], but the direction `v` is computed from
/// `∇ₓE(x)` by `direction`, reusing the same forward and input sweeps.
pub(crate) fn input_grad_vjp_acc(
    p: &NetParams,
    x: &[f64],
    scale: f64,
    grad: &mut ParamGrad,
    direction: impl FnOnce(&[f64]) -> Vec<f64>,
) -> Result<Vec<f64>> {
    check_energy(p)?;
    let trace = forward(p, x)?;
    let InputGrad { deltas, grads } = input_grad(p, &trace);
    let v = direction(&grads[0]);
    vjp_from_sweeps(p, &trace, &deltas, &grads, &v, scale, grad);
    Ok(grads.into_iter().next().expect("input gradient"))
}

/// Adjoint pass over the composite (forward ∘ input-gradient) graph.
fn vjp_from_sweeps(
    p: &NetParams,
    trace: &ForwardTrace,
    deltas: &[Vec<f64>],
    grads: &[Vec<f64>],
    v: &[f64],
    scale: f64,
    grad: &mut ParamGrad,
) {
    let hidden = p.num_layers() - 1;
    let acts = &trace.activations;

    // Reverse the input-gradient sweep, k = 0 upwards. `a_bar[k]` collects
    // what flows into activation k through the tanh' = 1 − a² factors.
    let mut g_bar: Vec<f64> = v.iter().map(|vi| scale * vi).collect();
    let mut a_bar: Vec<Vec<f64>> = vec![Vec::new(); hidden + 1];
    for k in 0..hidden {
        let (out, inp) = p.shape(k);
        // g_k = W_kᵀ δ_k
        let (gw, _) = grad.layer_mut(k);
        outer_acc(gw, &deltas[k], &g_bar);
        let mut delta_bar = vec![0.0; out];
        gemv(p.weight(k), out, inp, &g_bar, &mut delta_bar);
        // δ_k = g_{k+1} ⊙ (1 − a_{k+1}²)
        let a = &acts[k + 1];
        let g_up = &grads[k + 1];
        let mut next_g_bar = vec![0.0; out];
        let mut from_s = vec![0.0; out];
        for j in 0..out {
            next_g_bar[j] = delta_bar[j] * (1.0 - a[j] * a[j]);
            from_s[j] = -2.0 * a[j] * delta_bar[j] * g_up[j];
        }
        a_bar[k + 1] = from_s;
        g_bar = next_g_bar;
    }
    // g_L is the output weight row.
    {
        let (gw, _) = grad.layer_mut(hidden);
        for (w, gb) in gw.iter_mut().zip(&g_bar) {
            *w += gb;
        }
    }

    // Reverse the forward pass, top hidden layer down.
    let mut carry = std::mem::take(&mut a_bar[hidden]);
    for k in (0..hidden).rev() {
        let a = &acts[k + 1];
        let z_bar: Vec<f64> = carry
            .iter()
            .zip(a)
            .map(|(c, a)| c * (1.0 - a * a))
            .collect();
        let (gw, gb) = grad.layer_mut(k);
        outer_acc(gw, &z_bar, &acts[k]);
        for (b, z) in gb.iter_mut().zip(&z_bar) {
            *b += z;
        }
        if k > 0 {
            let mut below = std::mem::take(&mut a_bar[k]);
            gemv_t_acc(p.weight(k), p.shape(k).1, &z_bar, &mut below);
            carry = below;
        }
    }
}

/// Adds `∇_θ ⟨out_bar, output(x; θ)⟩` into `grad` (ordinary backprop).
pub(crate) fn backprop_output_acc(
    p: &NetParams,
    trace: &ForwardTrace,
    out_bar: &[f64],
    grad: &mut ParamGrad,
) {
    let hidden = p.num_layers() - 1;
    let acts = &trace.activations;
    {
        let (gw, gb) = grad.layer_mut(hidden);
        outer_acc(gw, out_bar, &acts[hidden]);
        for (b, o) in gb.iter_mut().zip(out_bar) {
            *b += o;
        }
    }
    let mut carry = vec![0.0; p.shape(hidden).1];
    gemv_t_acc(p.weight(hidden), p.shape(hidden).1, out_bar, &mut carry);
    for k in (0..hidden).rev() {
        let a = &acts[k + 1];
        let z_bar: Vec<f64> = carry
            .iter()
            .zip(a)
            .map(|(c, a)| c * (1.0 - a * a))
            .collect();
        let (gw, gb) = grad.layer_mut(k);
        outer_acc(gw, &z_bar, &acts[k]);
        for (b, z) in gb.iter_mut().zip(&z_bar) {
            *b += z;
        }
        if k > 0 {
            let mut below = vec![0.0; p.shape(k).1];
            gemv_t_acc(p.weight(k), p.shape(k).1, &z_bar, &mut below);
            carry = below;
        }
    }
}

/// `∇_θ E(x; θ)`.
pub fn energy_param_grad(p: &NetParams, x: &[f64]) -> Result<ParamGrad> {
    check_energy(p)?;
    let trace = forward(p, x)?;
    let mut grad = p.zeros_like();
    backprop_output_acc(p, &trace, &[1.0], &mut grad);
    Ok(grad)
}

/// Per-unit contributions `ε_α = w(L+1)_α h(L)_α`; they sum to the energy
/// minus the output bias, so `exp(−E)` factors as a product of experts.
pub fn expert_energies(p: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    check_energy(p)?;
    let trace = forward(p, x)?;
    let w = p.weight(p.num_layers() - 1);
    Ok(w.iter().zip(trace.last_hidden()).map(|(w, h)| w * h).collect())
}

/// Output of a direct score network (`output_dim == input_dim`).
pub fn score_net_forward(p: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    let cfg = p.config();
    if cfg.output_dim != cfg.input_dim {
        return dim_err(format!(
            "score network needs output_dim == input_dim ({}), got {}",
            cfg.input_dim, cfg.output_dim
        ));
    }
    Ok(forward(p, x)?.output)
}
