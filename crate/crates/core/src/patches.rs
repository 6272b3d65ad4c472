//! Image patches: extraction, the patch-dependent noise model and a
//! synthetic texture generator used when no natural images are at hand.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ImageMeta};
use crate::error::{dim_err, domain_err, Result};
use crate::rng::RngState;
use crate::tensor::Tensor;

/// Noise scale of the patch-dependent corruption.
pub const DEFAULT_NOISE_FACTOR: f64 = 0.5;

/// Population standard deviation of the entries of `x`.
pub fn pixel_std(x: &[f64]) -> f64 {
    if x.iter().all(|&v| v == x[0]) {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// `count` random `patch × patch` windows (uniform image, uniform top-left
/// corner), each shifted to zero mean. Contrast is left untouched.
pub fn extract_patches(images: &Dataset, patch: usize, count: usize, rng: &mut RngState) -> Result<Dataset> {
    let meta = images
        .image()
        .ok_or_else(|| crate::Error::Domain("patch extraction needs image metadata".into()))?;
    let raw = extract_raw(images, meta, patch, count, rng)?;
    let mut out = Vec::with_capacity(count * patch * patch);
    for (_, pixels) in raw {
        let mean = pixels.iter().sum::<f64>() / pixels.len() as f64;
        out.extend(pixels.iter().map(|v| v - mean));
    }
    Dataset::new(Tensor::matrix(count, patch * patch, out)?)?.with_image(ImageMeta {
        height: patch,
        width: patch,
    })
}

/// Patch location `(image, top, left)` and its unstandardized pixels.
pub(crate) type RawPatch = ((usize, usize, usize), Vec<f64>);

pub(crate) fn extract_raw(
    images: &Dataset,
    meta: ImageMeta,
    patch: usize,
    count: usize,
    rng: &mut RngState,
) -> Result<Vec<RawPatch>> {
    if patch == 0 || patch > meta.height || patch > meta.width {
        return dim_err(format!(
            "patch {patch} does not fit in {}x{} images",
            meta.height, meta.width
        ));
    }
    if count == 0 {
        return domain_err("patch count must be positive");
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let img = rng.below(images.len());
        let top = rng.below(meta.height - patch + 1);
        let left = rng.below(meta.width - patch + 1);
        let src = images.row(img);
        let mut pixels = Vec::with_capacity(patch * patch);
        for y in top..top + patch {
            pixels.extend_from_slice(&src[y * meta.width + left..y * meta.width + left + patch]);
        }
        out.push(((img, top, left), pixels));
    }
    Ok(out)
}

/// `ξ = x + factor · std(x) · ν` with `ν ~ N(0, I)`.
pub fn add_patch_noise(x: &[f64], factor: f64, rng: &mut RngState) -> Vec<f64> {
    let scale = factor * pixel_std(x);
    let mut noise = vec![0.0; x.len()];
    rng.fill_normal(&mut noise, 0.0, 1.0);
    x.iter().zip(noise).map(|(v, n)| v + scale * n).collect()
}

/// Parameters of the synthetic grating textures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureSpec {
    pub gratings: usize,
    pub period_min: f64,
    pub period_max: f64,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        Self {
            gratings: 3,
            period_min: 5.0,
            period_max: 16.0,
            amplitude_min: 0.5,
            amplitude_max: 1.0,
        }
    }
}

/// `n` grayscale `size × size` images, each a sum of plane-wave gratings
/// with random orientation, period, phase and amplitude.
pub fn gen_textures(n: usize, size: usize, spec: &TextureSpec, rng: &mut RngState) -> Result<Dataset> {
    if n == 0 || size == 0 || spec.gratings == 0 {
        return domain_err("textures need n, size and grating count >= 1");
    }
    if !(spec.period_min > 0.0 && spec.period_min <= spec.period_max) {
        return domain_err("texture periods must satisfy 0 < min <= max");
    }
    let mut data = vec![0.0; n * size * size];
    for img in data.chunks_exact_mut(size * size) {
        for _ in 0..spec.gratings {
            let theta = rng.uniform_range(0.0, PI);
            let period = rng.uniform_range(spec.period_min, spec.period_max);
            let phase = rng.uniform_range(0.0, TAU);
            let amp = rng.uniform_range(spec.amplitude_min, spec.amplitude_max);
            let (s, c) = theta.sin_cos();
            let k = TAU / period;
            for y in 0..size {
                for x in 0..size {
                    let u = k * (c * x as f64 + s * y as f64) + phase;
                    img[y * size + x] += amp * u.cos();
                }
            }
        }
    }
    Dataset::new(Tensor::matrix(n, size * size, data)?)?.with_image(ImageMeta {
        height: size,
        width: size,
    })
}
