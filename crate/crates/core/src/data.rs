//! Datasets, synthetic generators and sampling from the joint
//! `J(x, ξ) = S(ξ | x) · E(x)` of clean points and kernel-perturbed copies.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, domain_err, Error, Result};
use crate::rng::RngState;
use crate::tensor::Tensor;

/// Single-channel image geometry attached to a dataset of flattened images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// `n × d` samples, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Tensor,
    image: Option<ImageMeta>,
    split: Option<Split>,
}

impl Dataset {
    pub fn new(samples: Tensor) -> Result<Self> {
        if samples.shape().len() != 2 {
            return dim_err(format!("dataset must be n×d, got shape {:?}", samples.shape()));
        }
        if samples.rows() == 0 || samples.cols() == 0 {
            return Err(Error::Domain("dataset must have at least one sample".into()));
        }
        Ok(Self {
            samples,
            image: None,
            split: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Tensor::from_rows(rows)?)
    }

    pub fn with_image(mut self, meta: ImageMeta) -> Result<Self> {
        if meta.height * meta.width != self.dim() {
            return dim_err(format!(
                "image {}x{} does not match sample dimension {}",
                meta.height,
                meta.width,
                self.dim()
            ));
        }
        self.image = Some(meta);
        Ok(self)
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.samples.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.row_iter()
    }

    pub fn samples(&self) -> &Tensor {
        &self.samples
    }

    pub fn image(&self) -> Option<ImageMeta> {
        self.image
    }

    pub fn split(&self) -> Option<Split> {
        self.split
    }

    /// Rows `indices` as a new dataset (metadata kept).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(Tensor::matrix(indices.len(), d, data)?)?;
        out.image = self.image;
        out.split = self.split;
        Ok(out)
    }

    /// First `k` rows and the rest.
    pub fn split_at(&self, k: usize) -> Result<(Self, Self)> {
        if k == 0 || k >= self.len() {
            return domain_err(format!("cannot split {} rows at {k}", self.len()));
        }
        let head: Vec<usize> = (0..k).collect();
        let tail: Vec<usize> = (k..self.len()).collect();
        Ok((self.select(&head)?, self.select(&tail)?))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_err(path, e))?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        Error::Format(format!(
                            "{}:{}: not a number: {field:?}",
                            path.display(),
                            line + 1
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format(format!("{}: no rows", path.display())));
        }
        Self::from_rows(&rows).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    /// Headerless CSV, one sample per line, shortest round-trip float text.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_rows_csv(path.as_ref(), None, self.rows())
    }
}

pub(crate) fn write_rows_csv<'a>(
    path: &Path,
    header: Option<&[&str]>,
    rows: impl Iterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    if let Some(h) = header {
        writer.write_record(h).map_err(|e| csv_err(path, e))?;
    }
    for row in rows {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush()?;
    Ok(())
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(format!("{}: {e}", path.display()))
    }
}

/// Clean points paired row by row with their kernel-perturbed copies.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyPairBatch {
    pub clean: Tensor,
    pub noisy: Tensor,
    pub sigma: f64,
}

impl NoisyPairBatch {
    pub fn new(clean: Tensor, noisy: Tensor, sigma: f64) -> Result<Self> {
        if clean.shape() != noisy.shape() || clean.shape().len() != 2 {
            return dim_err(format!(
                "clean {:?} and noisy {:?} must be equal n×d shapes",
                clean.shape(),
                noisy.shape()
            ));
        }
        Ok(Self {
            clean,
            noisy,
            sigma,
        })
    }

    pub fn len(&self) -> usize {
        self.clean.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.clean.row_iter().zip(self.noisy.row_iter())
    }

    /// The batch repeated `k` times.
    pub fn repeated(&self, k: usize) -> Self {
        let rep = |t: &Tensor| {
            let data = t.data().repeat(k);
            Tensor::matrix(t.rows() * k, t.cols(), data).expect("consistent shape")
        };
        Self {
            clean: rep(&self.clean),
            noisy: rep(&self.noisy),
            sigma: self.sigma,
        }
    }
}

/// `m` draws `ξ = x + σε`, `ε ~ N(0, I)`, for every row `x` of `data`
/// (consecutive rows of the result share a clean point).
pub fn sample_joint(data: &Dataset, sigma: f64, m: usize, rng: &mut RngState) -> Result<NoisyPairBatch> {
    let all: Vec<usize> = (0..data.len()).collect();
    sample_joint_rows(data, &all, sigma, m, rng)
}

/// As [`sample_joint`], restricted to the rows `indices`.
pub fn sample_joint_rows(
    data: &Dataset,
    indices: &[usize],
    sigma: f64,
    m: usize,
    rng: &mut RngState,
) -> Result<NoisyPairBatch> {
    if !(sigma >= 0.0) {
        return domain_err(format!("kernel width must be non-negative, got {sigma}"));
    }
    let d = data.dim();
    let pairs = indices.len() * m;
    let mut clean = Vec::with_capacity(pairs * d);
    for &i in indices {
        for _ in 0..m {
            clean.extend_from_slice(data.row(i));
        }
    }
    let mut noisy = vec![0.0; pairs * d];
    rng.fill_normal(&mut noisy, 0.0, sigma);
    for (n, c) in noisy.iter_mut().zip(&clean) {
        *n += c;
    }
    NoisyPairBatch::new(
        Tensor::matrix(pairs, d, clean)?,
        Tensor::matrix(pairs, d, noisy)?,
        sigma,
    )
}

/// Spiral angles are drawn from `[SPIRAL_T_MIN, SPIRAL_T_MAX]`.
pub const SPIRAL_T_MIN: f64 = 0.5;
pub const SPIRAL_T_MAX: f64 = 3.0 * PI;
/// Radius of the spiral's outer end.
pub const SPIRAL_SCALE: f64 = 4.0;

/// Points `(t cos t, t sin t) · 4/(3π)`, `t ~ U[0.5, 3π]`, plus isotropic
/// Gaussian jitter of standard deviation `noise_std`.
pub fn gen_spiral(n: usize, noise_std: f64, rng: &mut RngState) -> Result<Dataset> {
    if n == 0 {
        return domain_err("spiral needs n >= 1");
    }
    if !(noise_std >= 0.0) {
        return domain_err(format!("noise_std must be non-negative, got {noise_std}"));
    }
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let t = rng.uniform_range(SPIRAL_T_MIN, SPIRAL_T_MAX);
        let r = SPIRAL_SCALE * t / SPIRAL_T_MAX;
        let (jx, jy) = rng.normal_pair();
        data.push(r * t.cos() + noise_std * jx);
        data.push(r * t.sin() + noise_std * jy);
    }
    Dataset::new(Tensor::matrix(n, 2, data)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoGComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub std: f64,
}

/// Isotropic Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoGSpec {
    pub components: Vec<MoGComponent>,
}

impl MoGSpec {
    /// Four equal-weight blobs at `(±2, ±2)` with standard deviation 0.5.
    pub fn default_2d() -> Self {
        let corners = [(-2.0, -2.0), (2.0, -2.0), (-2.0, 2.0), (2.0, 2.0)];
        Self {
            components: corners
                .iter()
                .map(|&(x, y)| MoGComponent {
                    weight: 0.25,
                    mean: vec![x, y],
                    std: 0.5,
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.components.is_empty() || d == 0 {
            return Err(Error::Config("mixture needs at least one component of dimension >= 1".into()));
        }
        let mut total = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            if c.mean.len() != d {
                return Err(Error::Config(format!("component {k} has dimension {}, expected {d}", c.mean.len())));
            }
            if !(c.weight > 0.0) || !(c.std >= 0.0) {
                return Err(Error::Config(format!("component {k}: weight must be > 0 and std >= 0")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Ancestral sampling: component index, then a Gaussian draw.
pub fn gen_mog(n: usize, spec: &MoGSpec, rng: &mut RngState) -> Result<Dataset> {
    Ok(gen_mog_labelled(n, spec, rng)?.0)
}

/// [`gen_mog`] that also returns the component of every sample.
pub fn gen_mog_labelled(n: usize, spec: &MoGSpec, rng: &mut RngState) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    if n == 0 {
        return domain_err("mixture needs n >= 1");
    }
    let d = spec.dim();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut noise = vec![0.0; d];
    for _ in 0..n {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut k = spec.components.len() - 1;
        for (j, c) in spec.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                k = j;
                break;
            }
        }
        let c = &spec.components[k];
        rng.fill_normal(&mut noise, 0.0, 1.0);
        data.extend(c.mean.iter().zip(&noise).map(|(m, z)| m + c.std * z));
        labels.push(k);
    }
    Ok((Dataset::new(Tensor::matrix(n, d, data)?)?, labels))
}

/// `n` i.i.d. draws from `N(mean · 1, std² I)` in `d` dimensions.
pub fn gen_gaussian(n: usize, d: usize, mean: f64, std: f64, rng: &mut RngState) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return domain_err("gaussian data needs n, d >= 1");
    }
    let t = crate::rng::gaussian(rng, &[n, d], mean, std)?;
    Dataset::new(t)
}
