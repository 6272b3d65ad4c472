//! Median + Gaussian filtering baseline and the per-pixel error metric.

use crate::error::{dim_err, domain_err, Result};
use crate::tensor::Tensor;

pub const DEFAULT_MEDIAN_WINDOW: usize = 3;
pub const DEFAULT_GAUSS_SIGMA: f64 = 1.0;

fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Median over a `window × window` neighbourhood, edges replicated.
pub fn median_filter(img: &[f64], height: usize, width: usize, window: usize) -> Vec<f64> {
    let r = (window / 2) as isize;
    let mut out = Vec::with_capacity(img.len());
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..height as isize {
        for x in 0..width as isize {
            buf.clear();
            for dy in -r..=r {
                let yy = clamp_index(y + dy, height);
                for dx in -r..=r {
                    buf.push(img[yy * width + clamp_index(x + dx, width)]);
                }
            }
            buf.sort_unstable_by(f64::total_cmp);
            out.push(buf[buf.len() / 2]);
        }
    }
    out
}

/// Normalized 1-D Gaussian taps truncated at `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable Gaussian blur with edge-replicate padding.
pub fn gaussian_blur(img: &[f64], height: usize, width: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return img.to_vec();
    }
    let taps = gaussian_kernel(sigma);
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; img.len()];
    for y in 0..height {
        for x in 0..width as isize {
            tmp[y * width + x as usize] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * img[y * width + clamp_index(x + k as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; img.len()];
    for y in 0..height as isize {
        for x in 0..width {
            out[y as usize * width + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[clamp_index(y + k as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

/// Median filter followed by Gaussian blur on an `h × w` image.
pub fn mg_filter(image: &Tensor, median_window: usize, gauss_sigma: f64) -> Result<Tensor> {
    if image.shape().len() != 2 {
        return dim_err(format!("mg_filter needs an h×w image, got {:?}", image.shape()));
    }
    let (h, w) = (image.shape()[0], image.shape()[1]);
    if median_window.is_multiple_of(2) {
        return domain_err(format!("median window must be odd, got {median_window}"));
    }
    if median_window > h || median_window > w {
        return dim_err(format!("median window {median_window} exceeds image {h}x{w}"));
    }
    if !(gauss_sigma >= 0.0) {
        return domain_err(format!("gaussian sigma must be non-negative, got {gauss_sigma}"));
    }
    let med = median_filter(image.data(), h, w, median_window);
    Tensor::matrix(h, w, gaussian_blur(&med, h, w, gauss_sigma))
}

/// `‖x − x̂‖²` divided by the number of pixels.
pub fn err_per_pixel(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return dim_err(format!("lengths {} and {} differ", x.len(), x_hat.len()));
    }
    if x.is_empty() {
        return domain_err("err_per_pixel of an empty image");
    }
    Ok(crate::tensor::sq_dist(x, x_hat) / x.len() as f64)
}
