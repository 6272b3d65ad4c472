//! Row-block versions of the forward pass, the input-gradient sweep and
//! their adjoints. Rows of a block are processed together through matrix
//! products; the per-row functions in `energy` compute the same quantities
//! one sample at a time and serve as the reference.

use crate::net::{NetParams, ParamGrad};

/// `C = α op(A) op(B) + β C` over row-major slices; `op(A)` is `m × k`,
/// `op(B)` is `k × n`. `a_t` / `b_t` mean the slice stores the transpose.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m) } else { (k, 1) };
    let (rsb, csb) = if b_t { (1, k) } else { (n, 1) };
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` is a unique borrow not aliased by `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn col_sums_acc(m: &[f64], cols: usize, out: &mut [f64]) {
    for row in m.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

pub(crate) struct BlockTrace {
    pub rows: usize,
    /// `acts[0]` is the input block, `acts[k]` hidden layer `k`; each
    /// `rows × width`.
    pub acts: Vec<Vec<f64>>,
    /// `rows × output_dim`.
    pub output: Vec<f64>,
}

pub(crate) fn forward_block(p: &NetParams, x: &[f64], rows: usize) -> BlockTrace {
    let hidden = p.num_layers() - 1;
    let mut acts = Vec::with_capacity(hidden + 1);
    acts.push(x.to_vec());
    for l in 0..=hidden {
        let (out, inp) = p.shape(l);
        let mut z = vec![0.0; rows * out];
        gemm(rows, inp, out, 1.0, &acts[l], false, p.weight(l), true, 0.0, &mut z);
        for row in z.chunks_exact_mut(out) {
            for (zi, bi) in row.iter_mut().zip(p.bias(l)) {
                *zi += bi;
                if l < hidden {
                    *zi = zi.tanh();
                }
            }
        }
        if l < hidden {
            acts.push(z);
        } else {
            return BlockTrace { rows, acts, output: z };
        }
    }
    unreachable!("loop returns at the output layer")
}

pub(crate) struct BlockInputGrad {
    /// `∂E/∂z` per hidden layer, `rows × width`.
    pub deltas: Vec<Vec<f64>>,
    /// `∂E/∂a_k`; `grads[0]` is `∇ₓE` per row.
    pub grads: Vec<Vec<f64>>,
}

/// Energy networks only.
pub(crate) fn input_grad_block(p: &NetParams, t: &BlockTrace) -> BlockInputGrad {
    let hidden = p.num_layers() - 1;
    let rows = t.rows;
    let mut grads = vec![Vec::new(); hidden + 1];
    let mut deltas = vec![Vec::new(); hidden];
    grads[hidden] = p.weight(hidden).repeat(rows);
    for k in (0..hidden).rev() {
        let (out, inp) = p.shape(k);
        let delta: Vec<f64> = grads[k + 1]
            .iter()
            .zip(&t.acts[k + 1])
            .map(|(g, a)| g * (1.0 - a * a))
            .collect();
        let mut g = vec![0.0; rows * inp];
        gemm(rows, out, inp, 1.0, &delta, false, p.weight(k), false, 0.0, &mut g);
        deltas[k] = delta;
        grads[k] = g;
    }
    BlockInputGrad { deltas, grads }
}

/// Adds `scale · Σ_rows ∇_θ ⟨v_row, ∇ₓE(x_row)⟩` into `grad`.
pub(crate) fn input_grad_vjp_block(
    p: &NetParams,
    t: &BlockTrace,
    ig: &BlockInputGrad,
    v: &[f64],
    scale: f64,
    grad: &mut ParamGrad,
) {
    let hidden = p.num_layers() - 1;
    let rows = t.rows;
    let acts = &t.acts;

    let mut g_bar: Vec<f64> = v.iter().map(|vi| scale * vi).collect();
    let mut a_bar: Vec<Vec<f64>> = vec![Vec::new(); hidden + 1];
    for k in 0..hidden {
        let (out, inp) = p.shape(k);
        let (gw, _) = grad.layer_mut(k);
        gemm(out, rows, inp, 1.0, &ig.deltas[k], true, &g_bar, false, 1.0, gw);
        let mut delta_bar = vec![0.0; rows * out];
        gemm(rows, inp, out, 1.0, &g_bar, false, p.weight(k), true, 0.0, &mut delta_bar);
        let a = &acts[k + 1];
        let g_up = &ig.grads[k + 1];
        let mut next_g_bar = vec![0.0; rows * out];
        let mut from_s = vec![0.0; rows * out];
        for j in 0..rows * out {
            next_g_bar[j] = delta_bar[j] * (1.0 - a[j] * a[j]);
            from_s[j] = -2.0 * a[j] * delta_bar[j] * g_up[j];
        }
        a_bar[k + 1] = from_s;
        g_bar = next_g_bar;
    }
    {
        let width = p.shape(hidden).1;
        let (gw, _) = grad.layer_mut(hidden);
        col_sums_acc(&g_bar, width, gw);
    }

    let mut carry = std::mem::take(&mut a_bar[hidden]);
    for k in (0..hidden).rev() {
        let (out, inp) = p.shape(k);
        let z_bar: Vec<f64> = carry
            .iter()
            .zip(&acts[k + 1])
            .map(|(c, a)| c * (1.0 - a * a))
            .collect();
        let (gw, gb) = grad.layer_mut(k);
        gemm(out, rows, inp, 1.0, &z_bar, true, &acts[k], false, 1.0, gw);
        col_sums_acc(&z_bar, out, gb);
        if k > 0 {
            let mut below = std::mem::take(&mut a_bar[k]);
            gemm(rows, out, inp, 1.0, &z_bar, false, p.weight(k), false, 1.0, &mut below);
            carry = below;
        }
    }
}

/// Adds `Σ_rows ∇_θ ⟨out_bar_row, output(x_row)⟩` into `grad`.
pub(crate) fn backprop_block(p: &NetParams, t: &BlockTrace, out_bar: &[f64], grad: &mut ParamGrad) {
    let hidden = p.num_layers() - 1;
    let rows = t.rows;
    let (out, inp) = p.shape(hidden);
    {
        let (gw, gb) = grad.layer_mut(hidden);
        gemm(out, rows, inp, 1.0, out_bar, true, &t.acts[hidden], false, 1.0, gw);
        col_sums_acc(out_bar, out, gb);
    }
    let mut carry = vec![0.0; rows * inp];
    gemm(rows, out, inp, 1.0, out_bar, false, p.weight(hidden), false, 0.0, &mut carry);
    for k in (0..hidden).rev() {
        let (out, inp) = p.shape(k);
        let z_bar: Vec<f64> = carry
            .iter()
            .zip(&t.acts[k + 1])
            .map(|(c, a)| c * (1.0 - a * a))
            .collect();
        let (gw, gb) = grad.layer_mut(k);
        gemm(out, rows, inp, 1.0, &z_bar, true, &t.acts[k], false, 1.0, gw);
        col_sums_acc(&z_bar, out, gb);
        if k > 0 {
            let mut below = vec![0.0; rows * inp];
            gemm(rows, out, inp, 1.0, &z_bar, false, p.weight(k), false, 0.0, &mut below);
            carry = below;
        }
    }
}
