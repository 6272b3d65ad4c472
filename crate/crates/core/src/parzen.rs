//! Gaussian Parzen-window density and kernel-width selection by held-out
//! likelihood.

use std::f64::consts::PI;

use crate::data::Dataset;
use crate::error::{dim_err, domain_err, Result};
use crate::tensor::{logsumexp, sq_dist};

/// `log P(query)` for `P(ξ) = (1/n) Σ_k N(ξ; x_k, σ² I)`.
pub fn parzen_logpdf(data: &Dataset, sigma: f64, query: &[f64]) -> Result<f64> {
    if !(sigma > 0.0) {
        return domain_err(format!("kernel width must be positive, got {sigma}"));
    }
    if query.len() != data.dim() {
        return dim_err(format!("query has length {}, data has dimension {}", query.len(), data.dim()));
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let exponents: Vec<f64> = data.rows().map(|x| -sq_dist(x, query) * inv).collect();
    let d = data.dim() as f64;
    let log_norm = 0.5 * d * (2.0 * PI).ln() + d * sigma.ln() + (data.len() as f64).ln();
    Ok(logsumexp(&exponents)? - log_norm)
}

/// Mean of [`parzen_logpdf`] over every row of `valid`.
pub fn mean_logpdf(train: &Dataset, valid: &Dataset, sigma: f64) -> Result<f64> {
    if train.dim() != valid.dim() {
        return dim_err(format!("train dimension {} != valid dimension {}", train.dim(), valid.dim()));
    }
    let logs: Vec<f64> = {
        let rows: Vec<&[f64]> = valid.rows().collect();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            rows.par_iter()
                .map(|q| parzen_logpdf(train, sigma, q))
                .collect::<Result<_>>()?
        }
        #[cfg(not(feature = "parallel"))]
        {
            rows.iter()
                .map(|q| parzen_logpdf(train, sigma, q))
                .collect::<Result<_>>()?
        }
    };
    // fixed summation order regardless of worker count
    Ok(logs.iter().sum::<f64>() / logs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSelection {
    pub sigma: f64,
    /// `(candidate, mean held-out log-likelihood)` in the input order.
    pub scores: Vec<(f64, f64)>,
}

/// Grid search for the kernel width maximizing the mean held-out
/// log-likelihood; ties go to the smaller width.
pub fn select_sigma(train: &Dataset, valid: &Dataset, candidates: &[f64]) -> Result<SigmaSelection> {
    if candidates.is_empty() {
        return domain_err("no kernel width candidates");
    }
    if let Some(bad) = candidates.iter().find(|&&s| !(s > 0.0)) {
        return domain_err(format!("kernel width candidates must be positive, got {bad}"));
    }
    let scores = candidates
        .iter()
        .map(|&s| Ok((s, mean_logpdf(train, valid, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = scores[0];
    for &(s, ll) in &scores[1..] {
        if ll > best.1 || (ll == best.1 && s < best.0) {
            best = (s, ll);
        }
    }
    Ok(SigmaSelection { sigma: best.0, scores })
}
