//! Training objectives: the DEEN (Parzen score matching) loss on an energy
//! network, the same loss on a direct score network (DSM), exact score
//! matching for low-dimensional diagnostics, and contrastive-divergence
//! updates with one Langevin step.
//!
//! Batch reductions run over fixed chunks of pairs and add the chunk
//! results in index order, so a result never depends on how many workers
//! evaluated it.

use std::ops::Range;

use crate::block::{backprop_block, forward_block, input_grad_block, input_grad_vjp_block};
use crate::data::NoisyPairBatch;
use crate::energy::{energy_input_grad, score_net_forward};
use crate::error::{dim_err, domain_err, Error, Result};
use crate::net::{NetParams, ParamGrad};
use crate::rng::RngState;
use crate::tensor::{dot, sq_dist, Tensor};

const CHUNK: usize = 64;

/// Sums `f(rows, grad)` over consecutive row ranges of length `CHUNK`
/// covering `0..n`; `f` returns the loss of its rows and adds their
/// gradient into `grad`.
fn reduce<F>(p: &NetParams, n: usize, f: F) -> Result<(f64, ParamGrad)>
where
    F: Fn(Range<usize>, &mut ParamGrad) -> Result<f64> + Sync,
{
    let chunk = |start: usize| -> Result<(f64, ParamGrad)> {
        let mut g = p.zeros_like();
        let loss = f(start..(start + CHUNK).min(n), &mut g)?;
        Ok((loss, g))
    };
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, ParamGrad)> = {
        use rayon::prelude::*;
        starts.par_iter().map(|&s| chunk(s)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, ParamGrad)> = starts.iter().map(|&s| chunk(s)).collect::<Result<_>>()?;

    let mut parts = parts.into_iter();
    let (mut loss, mut grad) = parts.next().unwrap_or_else(|| (0.0, p.zeros_like()));
    for (l, g) in parts {
        loss += l;
        grad.add_scaled(1.0, &g)?;
    }
    Ok((loss, grad))
}

fn rows_of<'a>(t: &'a Tensor, rows: &Range<usize>) -> &'a [f64] {
    let d = t.cols();
    &t.data()[rows.start * d..rows.end * d]
}

fn check_batch(p: &NetParams, batch: &NoisyPairBatch) -> Result<()> {
    if batch.is_empty() {
        return domain_err("empty batch");
    }
    if batch.clean.cols() != p.config().input_dim {
        return dim_err(format!(
            "batch dimension {} != network input {}",
            batch.clean.cols(),
            p.config().input_dim
        ));
    }
    Ok(())
}

/// Denoising residual `x − ξ + σ² ∇E(ξ)` of DEEN.
fn deen_residual(x: &[f64], xi: &[f64], grad_e: &[f64], sigma2: f64) -> Vec<f64> {
    x.iter()
        .zip(xi)
        .zip(grad_e)
        .map(|((x, xi), g)| x - xi + sigma2 * g)
        .collect()
}

/// Mean over pairs of `‖x − ξ + σ² ∂E(ξ;θ)/∂ξ‖²`.
pub fn deen_loss(p: &NetParams, batch: &NoisyPairBatch, sigma: f64) -> Result<f64> {
    check_batch(p, batch)?;
    let sigma2 = sigma * sigma;
    let mut total = 0.0;
    for (x, xi) in batch.pairs() {
        let g = energy_input_grad(p, xi)?;
        let r = deen_residual(x, xi, &g, sigma2);
        total += dot(&r, &r);
    }
    Ok(total / batch.len() as f64)
}

/// DEEN loss and its parameter gradient: per pair
/// `2σ² ∇_θ⟨r, ∇_ξE(ξ;θ)⟩` with `r` the residual held fixed, averaged.
pub fn deen_grad(p: &NetParams, batch: &NoisyPairBatch, sigma: f64) -> Result<(f64, ParamGrad)> {
    check_batch(p, batch)?;
    let sigma2 = sigma * sigma;
    let n = batch.len();
    let (total, mut grad) = reduce(p, n, |rows, g| {
        let (x, xi) = (rows_of(&batch.clean, &rows), rows_of(&batch.noisy, &rows));
        let trace = forward_block(p, xi, rows.len());
        let ig = input_grad_block(p, &trace);
        let r = deen_residual(x, xi, &ig.grads[0], sigma2);
        input_grad_vjp_block(p, &trace, &ig, &r, 2.0 * sigma2, g);
        Ok(sum_sq_rows(&r, batch.clean.cols()))
    })?;
    grad.scale(1.0 / n as f64);
    Ok((total / n as f64, grad))
}

/// Sum over rows of each row's squared norm, rows added in order.
fn sum_sq_rows(r: &[f64], d: usize) -> f64 {
    r.chunks_exact(d).map(|row| dot(row, row)).sum()
}

/// Mean over pairs of `‖x − (ξ + σ² ψ(ξ;θ))‖²` for a direct score network.
pub fn dsm_loss(p: &NetParams, batch: &NoisyPairBatch, sigma: f64) -> Result<f64> {
    check_batch(p, batch)?;
    let sigma2 = sigma * sigma;
    let mut total = 0.0;
    for (x, xi) in batch.pairs() {
        let psi = score_net_forward(p, xi)?;
        let r = dsm_residual(x, xi, &psi, sigma2);
        total += dot(&r, &r);
    }
    Ok(total / batch.len() as f64)
}

fn dsm_residual(x: &[f64], xi: &[f64], psi: &[f64], sigma2: f64) -> Vec<f64> {
    x.iter()
        .zip(xi)
        .zip(psi)
        .map(|((x, xi), s)| x - xi - sigma2 * s)
        .collect()
}

pub fn dsm_grad(p: &NetParams, batch: &NoisyPairBatch, sigma: f64) -> Result<(f64, ParamGrad)> {
    check_batch(p, batch)?;
    let cfg = p.config();
    if cfg.output_dim != cfg.input_dim {
        return dim_err("DSM needs a score network (output_dim == input_dim)");
    }
    let sigma2 = sigma * sigma;
    let n = batch.len();
    let (total, mut grad) = reduce(p, n, |rows, g| {
        let (x, xi) = (rows_of(&batch.clean, &rows), rows_of(&batch.noisy, &rows));
        let trace = forward_block(p, xi, rows.len());
        let r = dsm_residual(x, xi, &trace.output, sigma2);
        let out_bar: Vec<f64> = r.iter().map(|ri| -2.0 * sigma2 * ri).collect();
        backprop_block(p, &trace, &out_bar, g);
        Ok(sum_sq_rows(&r, batch.clean.cols()))
    })?;
    grad.scale(1.0 / n as f64);
    Ok((total / n as f64, grad))
}

/// Largest input dimension accepted by [`exact_sm_loss`].
pub const EXACT_SM_MAX_DIM: usize = 4;
/// Step of the central differences giving the diagonal Hessian.
pub const EXACT_SM_STEP: f64 = 1e-4;

/// Score-matching objective expanded in coordinates,
/// `(1/n) Σ_k Σ_i [(∂E/∂x_i)² − 2 ∂²E/∂x_i²] + λ Σ_k Σ_i ∂²E/∂x_i²`,
/// for an arbitrary energy given through its input gradient. The diagonal
/// second derivatives are central differences of that gradient.
pub fn exact_sm_loss_with<G>(energy_grad: G, data: &Tensor, lambda: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let d = data.cols();
    if d > EXACT_SM_MAX_DIM {
        return Err(Error::UnsupportedDimension {
            dim: d,
            max: EXACT_SM_MAX_DIM,
        });
    }
    if data.rows() == 0 || data.is_empty() {
        return domain_err("exact score matching needs data");
    }
    let h = EXACT_SM_STEP;
    let (mut fit, mut curvature) = (0.0, 0.0);
    for x in data.row_iter() {
        let g = energy_grad(x)?;
        if g.len() != d {
            return dim_err(format!("energy gradient has length {}, expected {d}", g.len()));
        }
        let mut probe = x.to_vec();
        for i in 0..d {
            probe[i] = x[i] + h;
            let up = energy_grad(&probe)?[i];
            probe[i] = x[i] - h;
            let down = energy_grad(&probe)?[i];
            probe[i] = x[i];
            let second = (up - down) / (2.0 * h);
            fit += g[i] * g[i] - 2.0 * second;
            curvature += second;
        }
    }
    Ok(fit / data.rows() as f64 + lambda * curvature)
}

pub fn exact_sm_loss(p: &NetParams, data: &Tensor, lambda: f64) -> Result<f64> {
    if data.cols() != p.config().input_dim {
        return dim_err(format!(
            "data dimension {} != network input {}",
            data.cols(),
            p.config().input_dim
        ));
    }
    exact_sm_loss_with(|x| energy_input_grad(p, x), data, lambda)
}

/// Result of one contrastive-divergence evaluation.
#[derive(Debug, Clone)]
pub struct CdUpdate {
    /// Batch mean of `∇_θE(x⁻) − ∇_θE(x)`; parameters move along `+direction`.
    pub direction: ParamGrad,
    /// Langevin negatives `x⁻ = x − σ²∇ₓE(x) + √2 σ ν`, one row per input.
    pub negatives: Tensor,
    /// Batch mean of `E(x⁻) − E(x)`, a progress monitor only.
    pub energy_gap: f64,
}

/// One Langevin step per row of `x_batch` and the resulting CD update
/// direction. This update follows no well-defined objective; it exists as
/// a baseline whose failure modes can be inspected.
pub fn cd_langevin_update(p: &NetParams, x_batch: &Tensor, sigma: f64, rng: &mut RngState) -> Result<CdUpdate> {
    let d = p.config().input_dim;
    if x_batch.cols() != d || x_batch.is_empty() {
        return dim_err(format!("batch of width {} for network input {d}", x_batch.cols()));
    }
    let n = x_batch.rows();
    let sigma2 = sigma * sigma;
    let noise_scale = std::f64::consts::SQRT_2 * sigma;
    let mut negatives = Vec::with_capacity(n * d);
    let mut nu = vec![0.0; d];
    for x in x_batch.row_iter() {
        let g = energy_input_grad(p, x)?;
        rng.fill_normal(&mut nu, 0.0, 1.0);
        negatives.extend((0..d).map(|i| x[i] - sigma2 * g[i] + noise_scale * nu[i]));
    }
    let negatives = Tensor::matrix(n, d, negatives)?;
    let (gap, mut direction) = reduce(p, n, |rows, g| {
        let m = rows.len();
        let pos = forward_block(p, rows_of(x_batch, &rows), m);
        let neg = forward_block(p, rows_of(&negatives, &rows), m);
        backprop_block(p, &neg, &vec![1.0; m], g);
        backprop_block(p, &pos, &vec![-1.0; m], g);
        Ok(neg.output.iter().zip(&pos.output).map(|(a, b)| a - b).sum())
    })?;
    direction.scale(1.0 / n as f64);
    Ok(CdUpdate {
        direction,
        negatives,
        energy_gap: gap / n as f64,
    })
}

/// `θ + lr · mean[∇_θE(x⁻) − ∇_θE(x)]`.
pub fn cd_langevin_step(
    p: &NetParams,
    x_batch: &Tensor,
    sigma: f64,
    lr: f64,
    rng: &mut RngState,
) -> Result<NetParams> {
    let update = cd_langevin_update(p, x_batch, sigma, rng)?;
    let mut next = p.clone();
    next.add_scaled(lr, &update.direction)?;
    Ok(next)
}

/// Mean squared norm of `x − ξ`, the DEEN/DSM loss of a zero score.
pub fn identity_loss(batch: &NoisyPairBatch) -> f64 {
    batch.pairs().map(|(x, xi)| sq_dist(x, xi)).sum::<f64>() / batch.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy, energy_param_grad};
    use crate::net::NetConfig;
    use proptest::prelude::*;

    fn random_net(cfg: &NetConfig, seed: u64) -> NetParams {
        let mut rng = RngState::new(seed);
        let mut p = NetParams::init(cfg, &mut rng).unwrap();
        for v in p.values_mut() {
            *v += 0.3 * rng.normal();
        }
        p
    }

    fn random_batch(n: usize, d: usize, sigma: f64, seed: u64) -> NoisyPairBatch {
        let mut rng = RngState::new(seed);
        let clean = crate::rng::gaussian(&mut rng, &[n, d], 0.0, 1.0).unwrap();
        let noise = crate::rng::gaussian(&mut rng, &[n, d], 0.0, sigma).unwrap();
        NoisyPairBatch::new(clean.clone(), clean.add(&noise).unwrap(), sigma).unwrap()
    }

    fn zero_final(mut p: NetParams) -> NetParams {
        let last = p.num_layers() - 1;
        p.weight_mut(last).fill(0.0);
        p.bias_mut(last).fill(0.0);
        p
    }

    fn fd_grad(p: &NetParams, f: impl Fn(&NetParams) -> f64) -> Vec<f64> {
        let h = 1e-5;
        (0..p.len())
            .map(|i| {
                let mut a = p.clone();
                a.values_mut()[i] += h;
                let mut b = p.clone();
                b.values_mut()[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    fn assert_close(analytic: &[f64], numeric: &[f64], tol: f64) {
        let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            assert!((a - n).abs() <= tol * scale, "param {i}: {a} vs {n}");
        }
    }

    #[test]
    fn deen_loss_of_zero_score_is_identity_loss() {
        let cfg = NetConfig::energy(3, &[5, 4], 0);
        let p = zero_final(random_net(&cfg, 1));
        let batch = random_batch(10, 3, 0.4, 2);
        let expect = identity_loss(&batch);
        assert!((deen_loss(&p, &batch, 0.4).unwrap() - expect).abs() < 1e-14);
        let q = random_net(&cfg, 3);
        assert_eq!(deen_loss(&q, &batch, 0.0).unwrap(), expect);
    }

    #[test]
    fn deen_loss_hand_evaluated() {
        let cfg = NetConfig::energy(1, &[1], 0);
        let (w1, b1, w2, b2) = (1.3, -0.2, 0.9, 0.4);
        let p = NetParams::from_values(&cfg, vec![w1, b1, w2, b2]).unwrap();
        let (x, xi, sigma) = (0.25, 0.9, 0.6);
        let t = (w1 * xi + b1).tanh();
        let de = w2 * w1 * (1.0 - t * t);
        let expect = (x - xi + sigma * sigma * de).powi(2);
        let batch = NoisyPairBatch::new(
            Tensor::matrix(1, 1, vec![x]).unwrap(),
            Tensor::matrix(1, 1, vec![xi]).unwrap(),
            sigma,
        )
        .unwrap();
        assert!((deen_loss(&p, &batch, sigma).unwrap() - expect).abs() < 1e-12);
        let (l, _) = deen_grad(&p, &batch, sigma).unwrap();
        assert!((l - expect).abs() < 1e-12);
    }

    #[test]
    fn deen_grad_matches_finite_differences() {
        for seed in 0..6 {
            let cfg = NetConfig::energy(2, &[4, 3], seed);
            let p = random_net(&cfg, seed);
            let sigma = 0.3 + 0.1 * seed as f64;
            let batch = random_batch(5, 2, sigma, 100 + seed);
            let (_, g) = deen_grad(&p, &batch, sigma).unwrap();
            let fd = fd_grad(&p, |q| deen_loss(q, &batch, sigma).unwrap());
            assert_close(g.values(), &fd, 1e-5);
        }
    }

    #[test]
    fn deen_grad_mean_invariant_under_duplication() {
        let cfg = NetConfig::energy(2, &[6], 0);
        let p = random_net(&cfg, 4);
        let batch = random_batch(7, 2, 0.5, 5);
        let (l1, g1) = deen_grad(&p, &batch, 0.5).unwrap();
        let (l3, g3) = deen_grad(&p, &batch.repeated(3), 0.5).unwrap();
        assert!((l1 - l3).abs() < 1e-12);
        assert!(g1.max_abs_diff(&g3) < 1e-12);
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let cfg = NetConfig::energy(2, &[5, 5], 0);
        let p = random_net(&cfg, 6);
        let sigma = 0.7;
        let noisy = random_batch(4, 2, 1.0, 7).noisy;
        let mut clean = noisy.clone();
        for i in 0..4 {
            let g = energy_input_grad(&p, noisy.row(i)).unwrap();
            for (c, gi) in clean.row_mut(i).iter_mut().zip(g) {
                *c -= sigma * sigma * gi;
            }
        }
        let batch = NoisyPairBatch::new(clean, noisy, sigma).unwrap();
        let (loss, g) = deen_grad(&p, &batch, sigma).unwrap();
        assert!(loss < 1e-28);
        assert!(g.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn empty_and_mismatched_batches() {
        let cfg = NetConfig::energy(2, &[3], 0);
        let p = random_net(&cfg, 0);
        let empty = NoisyPairBatch::new(Tensor::zeros(&[0, 2]), Tensor::zeros(&[0, 2]), 0.1).unwrap();
        assert!(deen_loss(&p, &empty, 0.1).is_err());
        assert!(deen_grad(&p, &empty, 0.1).is_err());
        let wrong = random_batch(3, 3, 0.1, 0);
        assert!(deen_grad(&p, &wrong, 0.1).is_err());
        assert!(dsm_grad(&p, &random_batch(3, 2, 0.1, 0), 0.1).is_err());
    }

    #[test]
    fn dsm_zero_net_and_zero_width() {
        let cfg = NetConfig::score_net(2, &[4], 0);
        let p = zero_final(random_net(&cfg, 1));
        let batch = random_batch(8, 2, 0.3, 1);
        assert!((dsm_loss(&p, &batch, 0.3).unwrap() - identity_loss(&batch)).abs() < 1e-14);
        let q = random_net(&cfg, 2);
        assert_eq!(dsm_loss(&q, &batch, 0.0).unwrap(), identity_loss(&batch));
    }

    #[test]
    fn dsm_grad_matches_finite_differences() {
        for seed in 0..4 {
            let cfg = NetConfig::score_net(2, &[5, 3], seed);
            let p = random_net(&cfg, seed);
            let batch = random_batch(6, 2, 0.5, 10 + seed);
            let (l, g) = dsm_grad(&p, &batch, 0.5).unwrap();
            assert!((l - dsm_loss(&p, &batch, 0.5).unwrap()).abs() < 1e-12);
            let fd = fd_grad(&p, |q| dsm_loss(q, &batch, 0.5).unwrap());
            assert_close(g.values(), &fd, 1e-6);
        }
    }

    #[test]
    fn exact_sm_zero_net() {
        let cfg = NetConfig::energy(2, &[4], 0);
        let p = zero_final(random_net(&cfg, 0));
        let data = random_batch(5, 2, 0.1, 0).clean;
        assert_eq!(exact_sm_loss(&p, &data, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn exact_sm_linear_energy() {
        let a = [0.5, -1.5, 2.0];
        let data = random_batch(6, 3, 0.1, 3).clean;
        let loss = exact_sm_loss_with(|_| Ok(a.to_vec()), &data, 0.7).unwrap();
        let norm2: f64 = a.iter().map(|v| v * v).sum();
        assert!((loss - norm2).abs() < 1e-12);
    }

    #[test]
    fn exact_sm_matches_all_numeric_evaluation() {
        for seed in 0..4 {
            let cfg = NetConfig::energy(2, &[5, 4], seed);
            let p = random_net(&cfg, seed);
            let data = random_batch(4, 2, 0.1, 20 + seed).clean;
            let lambda = 0.25;
            let e = |x: &[f64]| energy(&p, x).unwrap();
            let h = 1e-3;
            let (mut fit, mut curv) = (0.0, 0.0);
            for x in data.row_iter() {
                for i in 0..2 {
                    let (mut up, mut down) = (x.to_vec(), x.to_vec());
                    up[i] += h;
                    down[i] -= h;
                    let first = (e(&up) - e(&down)) / (2.0 * h);
                    let second = (e(&up) - 2.0 * e(x) + e(&down)) / (h * h);
                    fit += first * first - 2.0 * second;
                    curv += second;
                }
            }
            let numeric = fit / 4.0 + lambda * curv;
            let analytic = exact_sm_loss(&p, &data, lambda).unwrap();
            assert!((analytic - numeric).abs() <= 1e-4 * numeric.abs().max(1.0), "{analytic} vs {numeric}");
        }
    }

    #[test]
    fn exact_sm_rejects_high_dimension() {
        let cfg = NetConfig::energy(5, &[3], 0);
        let p = random_net(&cfg, 0);
        let data = Tensor::zeros(&[2, 5]);
        assert!(matches!(
            exact_sm_loss(&p, &data, 0.0),
            Err(Error::UnsupportedDimension { dim: 5, max: 4 })
        ));
    }

    #[test]
    fn cd_negatives_of_flat_energy_are_pure_noise() {
        let cfg = NetConfig::energy(2, &[4], 0);
        let p = zero_final(random_net(&cfg, 0));
        let x = random_batch(5, 2, 0.1, 1).clean;
        let sigma = 0.3;
        let upd = cd_langevin_update(&p, &x, sigma, &mut RngState::new(9)).unwrap();
        let mut rng = RngState::new(9);
        let mut nu = [0.0; 2];
        for i in 0..5 {
            rng.fill_normal(&mut nu, 0.0, 1.0);
            for ((got, xj), n) in upd.negatives.row(i).iter().zip(x.row(i)).zip(nu) {
                assert_eq!(*got, xj + std::f64::consts::SQRT_2 * sigma * n);
            }
        }
    }

    #[test]
    fn cd_zero_rate_is_identity() {
        let cfg = NetConfig::energy(2, &[4, 4], 0);
        let p = random_net(&cfg, 2);
        let x = random_batch(4, 2, 0.1, 3).clean;
        let next = cd_langevin_step(&p, &x, 0.2, 0.0, &mut RngState::new(1)).unwrap();
        assert_eq!(next, p);
    }

    #[test]
    fn cd_single_sample_matches_gradient_difference() {
        let cfg = NetConfig::energy(2, &[3, 3], 0);
        let p = random_net(&cfg, 5);
        let x = Tensor::matrix(1, 2, vec![0.4, -0.8]).unwrap();
        let (sigma, lr) = (0.4, 0.01);
        let upd = cd_langevin_update(&p, &x, sigma, &mut RngState::new(4)).unwrap();
        let mut expect = energy_param_grad(&p, upd.negatives.row(0)).unwrap();
        expect.add_scaled(-1.0, &energy_param_grad(&p, x.row(0)).unwrap()).unwrap();
        assert!(upd.direction.max_abs_diff(&expect) < 1e-14);
        let next = cd_langevin_step(&p, &x, sigma, lr, &mut RngState::new(4)).unwrap();
        let mut manual = p.clone();
        manual.add_scaled(lr, &expect).unwrap();
        assert!(next.max_abs_diff(&manual) < 1e-15);
    }

    #[test]
    fn cd_update_vanishes_with_kernel_width() {
        let cfg = NetConfig::energy(2, &[4], 0);
        let p = random_net(&cfg, 3);
        let x = random_batch(6, 2, 0.1, 2).clean;
        let big = cd_langevin_update(&p, &x, 0.5, &mut RngState::new(1)).unwrap();
        let small = cd_langevin_update(&p, &x, 1e-6, &mut RngState::new(1)).unwrap();
        let norm = |g: &ParamGrad| g.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm(&small.direction) < 1e-5 * norm(&big.direction).max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn losses_are_non_negative(seed in 0u64..1000, sigma in 0.0..2.0f64) {
            let e_cfg = NetConfig::energy(2, &[3, 3], seed);
            let s_cfg = NetConfig::score_net(2, &[3], seed);
            let batch = random_batch(4, 2, sigma, seed);
            prop_assert!(deen_loss(&random_net(&e_cfg, seed), &batch, sigma).unwrap() >= 0.0);
            prop_assert!(dsm_loss(&random_net(&s_cfg, seed), &batch, sigma).unwrap() >= 0.0);
        }
    }
}
