//! Run configurations: JSON file first, command-line flags on top.

use std::fs;
use std::path::{Path, PathBuf};

use deen_core::data::{gen_gaussian, gen_mog, gen_spiral, MoGSpec};
use deen_core::idx::load_idx;
use deen_core::patches::{extract_patches, gen_textures, TextureSpec};
use deen_core::{Dataset, GridSpec, ModelKind, RngState, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Reads a JSON config, or the type's defaults when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
}

/// Writes `<outdir>/resolved_config.json`.
pub fn echo<T: Serialize>(outdir: &Path, cfg: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(cfg).map_err(deen_core::Error::from)?;
    text.push('\n');
    fs::write(outdir.join("resolved_config.json"), text).map_err(deen_core::Error::from)?;
    Ok(())
}

macro_rules! overlay {
    ($($target:expr => $flag:expr),* $(,)?) => {
        $(if let Some(v) = $flag { $target = v; })*
    };
}
pub(crate) use overlay;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    #[default]
    Spiral,
    Mog,
    Gaussian,
    Textures,
}

/// Synthetic data generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub seed: u64,
    /// Spiral jitter standard deviation.
    pub noise: f64,
    /// Gaussian: dimension, mean and standard deviation per coordinate.
    pub dim: usize,
    pub mean: f64,
    pub std: f64,
    /// Texture image side length.
    pub size: usize,
    /// When set, `n` zero-mean `patch × patch` windows are cut from
    /// `images` texture images instead of returning whole images.
    pub patch: Option<usize>,
    pub images: usize,
    pub texture: TextureSpec,
    /// Mixture components; four blobs at (±2, ±2) when absent.
    pub mog: Option<MoGSpec>,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            kind: GenKind::Spiral,
            n: 1000,
            seed: 0,
            noise: 0.0,
            dim: 1,
            mean: 0.0,
            std: 1.0,
            size: 32,
            patch: None,
            images: 100,
            texture: TextureSpec::default(),
            mog: None,
        }
    }
}

impl GenSpec {
    pub fn generate(&self) -> Result<Dataset, Failure> {
        let base = RngState::new(self.seed);
        let data = match self.kind {
            GenKind::Spiral => gen_spiral(self.n, self.noise, &mut base.split("spiral"))?,
            GenKind::Mog => {
                let spec = self.mog.clone().unwrap_or_else(MoGSpec::default_2d);
                gen_mog(self.n, &spec, &mut base.split("mog"))?
            }
            GenKind::Gaussian => gen_gaussian(self.n, self.dim, self.mean, self.std, &mut base.split("gaussian"))?,
            GenKind::Textures => match self.patch {
                None => gen_textures(self.n, self.size, &self.texture, &mut base.split("textures"))?,
                Some(p) => {
                    let images = gen_textures(self.images, self.size, &self.texture, &mut base.split("textures"))?;
                    extract_patches(&images, p, self.n, &mut base.split("patches"))?
                }
            },
        };
        Ok(data)
    }
}

/// Where a command reads its samples from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    /// Headerless numeric CSV, one sample per row.
    Csv(PathBuf),
    /// IDX image file (pixels scaled to [0, 1]); rows `offset..offset+limit`.
    Idx {
        path: PathBuf,
        #[serde(default)]
        offset: usize,
        #[serde(default)]
        limit: Option<usize>,
    },
    Generate(GenSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset, Failure> {
        match self {
            Self::Csv(path) => Ok(Dataset::read_csv(path)?),
            Self::Idx { path, offset, limit } => {
                let all = load_idx(path)?;
                let end = limit.map_or(all.len(), |l| (offset + l).min(all.len()));
                if *offset >= end {
                    return Err(Failure::usage(format!(
                        "{}: offset {offset} leaves no rows (file has {})",
                        path.display(),
                        all.len()
                    )));
                }
                let rows: Vec<usize> = (*offset..end).collect();
                Ok(all.select(&rows)?)
            }
            Self::Generate(spec) => spec.generate(),
        }
    }

    /// `--data` / `--idx` style flags; at most one may be given.
    pub fn from_flags(csv: Option<PathBuf>, idx: Option<PathBuf>, limit: Option<usize>) -> Result<Option<Self>, Failure> {
        match (csv, idx) {
            (Some(_), Some(_)) => Err(Failure::usage("give either a CSV or an IDX data file, not both")),
            (Some(path), None) => Ok(Some(Self::Csv(path))),
            (None, Some(path)) => Ok(Some(Self::Idx {
                path,
                offset: 0,
                limit,
            })),
            (None, None) => Ok(None),
        }
    }
}

pub fn required<T>(value: Option<T>, what: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::usage(format!("missing {what} (flag or config file)")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub generator: GenSpec,
    /// File name inside the output directory.
    pub out: String,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            generator: GenSpec::default(),
            out: "data.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectSigmaConfig {
    pub data: Option<DataSource>,
    /// Held-out set; when absent the last `valid_fraction` of `data` is used.
    pub valid: Option<DataSource>,
    pub valid_fraction: f64,
    pub candidates: Vec<f64>,
}

impl Default for SelectSigmaConfig {
    fn default() -> Self {
        Self {
            data: None,
            valid: None,
            valid_fraction: 0.2,
            candidates: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub kind: ModelKind,
    pub data: Option<DataSource>,
    pub hidden_dims: Vec<usize>,
    pub net_seed: u64,
    pub train: TrainConfig,
    /// Checkpoint directory to continue from.
    pub resume: Option<PathBuf>,
    /// Progress line every this many iterations; 0 picks a tenth of the run.
    pub log_every: usize,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Deen,
            data: None,
            hidden_dims: vec![32, 32, 32],
            net_seed: 0,
            train: TrainConfig::default(),
            resume: None,
            log_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub model: Option<PathBuf>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurlConfig {
    pub model: Option<PathBuf>,
    pub grid: GridSpec,
    /// Reported against the interior max |curl| when set.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub model: Option<PathBuf>,
    pub input: Option<PathBuf>,
    /// Defaults to the training kernel width recorded in the checkpoint.
    pub sigma_prime: Option<f64>,
    pub out: String,
    /// Number of leading rows also written as PGM images (square inputs).
    pub pgm: usize,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            model: None,
            input: None,
            sigma_prime: None,
            out: "denoised.csv".into(),
            pgm: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub model: Option<PathBuf>,
    /// Clean held-out patches (square, row-major).
    pub clean: Option<DataSource>,
    pub noise_factor: f64,
    pub noise_seed: u64,
    pub sigma_prime: Option<f64>,
    pub median_window: usize,
    pub gauss_sigma: f64,
    pub pgm: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            model: None,
            clean: None,
            noise_factor: deen_core::patches::DEFAULT_NOISE_FACTOR,
            noise_seed: 0,
            sigma_prime: None,
            median_window: deen_core::filter::DEFAULT_MEDIAN_WINDOW,
            gauss_sigma: deen_core::filter::DEFAULT_GAUSS_SIGMA,
            pgm: 0,
        }
    }
}
