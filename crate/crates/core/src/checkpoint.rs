//! On-disk checkpoints.
//!
//! A checkpoint directory holds `model.json` (network config, format
//! version, optional training metadata), `model.bin` (all parameters as
//! little-endian f64 in [`NetParams`] storage order: layer by layer, W
//! row-major then b) and, for resumable training runs, `optim.bin` (Adam
//! first then second moments, same order) plus `loss.csv`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::net::{NetConfig, NetParams};
use crate::optim::{AdamState, OptState, OptimizerKind};
use crate::train::{LossHistory, ModelKind, TrainConfig, Trainer};

pub const FORMAT_VERSION: u32 = 1;
pub const MODEL_JSON: &str = "model.json";
pub const MODEL_BIN: &str = "model.bin";
pub const OPTIM_BIN: &str = "optim.bin";
pub const LOSS_CSV: &str = "loss.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub kind: ModelKind,
    pub iterations_done: usize,
    pub train: TrainConfig,
    /// Adam step counter; 0 for SGD.
    pub optimizer_steps: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelJson {
    format_version: u32,
    #[serde(flatten)]
    config: NetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training: Option<TrainingMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: NetParams,
    pub training: Option<TrainingMeta>,
}

impl Checkpoint {
    /// The model kind, falling back to the output shape when the checkpoint
    /// carries no training metadata.
    pub fn kind(&self) -> ModelKind {
        match &self.training {
            Some(meta) => meta.kind,
            None if self.params.config().is_energy() => ModelKind::Deen,
            None => ModelKind::Dsm,
        }
    }
}

fn encode_f64s(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn decode_f64s(bytes: &[u8], expected: usize, what: &Path) -> Result<Vec<f64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::Format(format!(
            "{}: expected {} bytes, found {}",
            what.display(),
            expected * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn write_params_bin(path: impl AsRef<Path>, params: &NetParams) -> Result<()> {
    fs::write(path, encode_f64s(params.values()))?;
    Ok(())
}

pub fn read_params_bin(path: impl AsRef<Path>, config: &NetConfig) -> Result<NetParams> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let values = decode_f64s(&bytes, config.num_params(), path)?;
    NetParams::from_values(config, values)
}

/// Writes `model.json` and `model.bin` into `dir`, creating it if needed.
pub fn save(dir: impl AsRef<Path>, params: &NetParams, training: Option<&TrainingMeta>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let doc = ModelJson {
        format_version: FORMAT_VERSION,
        config: params.config().clone(),
        training: training.cloned(),
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    fs::write(dir.join(MODEL_JSON), json)?;
    write_params_bin(dir.join(MODEL_BIN), params)
}

pub fn load(dir: impl AsRef<Path>) -> Result<Checkpoint> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MODEL_JSON))?;
    let doc: ModelJson = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", dir.join(MODEL_JSON).display())))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint format_version {} (expected {FORMAT_VERSION})",
            doc.format_version
        )));
    }
    doc.config
        .validate()
        .map_err(|e| Error::Format(format!("{}: {e}", dir.join(MODEL_JSON).display())))?;
    let params = read_params_bin(dir.join(MODEL_BIN), &doc.config)?;
    Ok(Checkpoint {
        params,
        training: doc.training,
    })
}

/// Everything needed to continue `trainer` bit-exactly.
pub fn save_trainer(dir: impl AsRef<Path>, trainer: &Trainer<'_>) -> Result<()> {
    let dir = dir.as_ref();
    let optimizer_steps = match trainer.optimizer() {
        OptState::Adam(state) => {
            let mut bytes = encode_f64s(state.m.values());
            bytes.extend(encode_f64s(state.v.values()));
            fs::create_dir_all(dir)?;
            fs::write(dir.join(OPTIM_BIN), bytes)?;
            state.t
        }
        OptState::Sgd => 0,
    };
    let meta = TrainingMeta {
        kind: trainer.kind(),
        iterations_done: trainer.iteration(),
        train: trainer.config().clone(),
        optimizer_steps,
    };
    save(dir, trainer.params(), Some(&meta))?;
    trainer.history().write_csv(dir.join(LOSS_CSV))
}

/// Rebuilds a trainer from a directory written by [`save_trainer`].
///
/// `cfg` may raise `iterations`; every other field must equal the saved
/// run's settings, since the minibatch and noise streams depend on them.
pub fn resume_trainer<'a>(dir: impl AsRef<Path>, cfg: &TrainConfig, data: &'a Dataset) -> Result<Trainer<'a>> {
    let dir = dir.as_ref();
    let ckpt = load(dir)?;
    let meta = ckpt
        .training
        .ok_or_else(|| Error::Config(format!("{} has no training state to resume", dir.display())))?;
    let saved = TrainConfig {
        iterations: cfg.iterations,
        ..meta.train.clone()
    };
    if &saved != cfg {
        return Err(Error::Config(
            "resume config differs from the checkpoint in more than `iterations`".into(),
        ));
    }
    let opt = match cfg.optimizer {
        OptimizerKind::Sgd => OptState::Sgd,
        OptimizerKind::Adam => {
            let path = dir.join(OPTIM_BIN);
            let bytes = fs::read(&path)?;
            let n = ckpt.params.len();
            let values = decode_f64s(&bytes, 2 * n, &path)?;
            let mut state = AdamState::new(&ckpt.params);
            state.m.values_mut().copy_from_slice(&values[..n]);
            state.v.values_mut().copy_from_slice(&values[n..]);
            state.t = meta.optimizer_steps;
            OptState::Adam(state)
        }
    };
    let history = LossHistory::read_csv(dir.join(LOSS_CSV), cfg.running_avg_window)?;
    if history.len() != meta.iterations_done {
        return Err(Error::Format(format!(
            "{} has {} rows but the checkpoint records {} iterations",
            dir.join(LOSS_CSV).display(),
            history.len(),
            meta.iterations_done
        )));
    }
    Trainer::resume(meta.kind, cfg, data, ckpt.params, opt, history, meta.iterations_done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_gaussian;
    use crate::rng::RngState;
    use crate::train::train;

    #[test]
    fn params_round_trip_exactly() {
        let cfg = NetConfig::score_net(3, &[5, 4], 9);
        let p = NetParams::init(&cfg, &mut RngState::new(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &p, None).unwrap();
        let back = load(dir.path()).unwrap();
        assert_eq!(back.params, p);
        assert_eq!(back.kind(), ModelKind::Dsm);
        let bytes = fs::read(dir.path().join(MODEL_BIN)).unwrap();
        assert_eq!(bytes.len(), 8 * p.len());
        assert_eq!(&bytes[..8], &p.values()[0].to_le_bytes());
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MODEL_JSON)).unwrap()).unwrap();
        assert_eq!(json["format_version"], 1);
        assert_eq!(json["input_dim"], 3);
        assert_eq!(json["hidden_dims"], serde_json::json!([5, 4]));
        assert_eq!(json["activation"], "tanh");
    }

    #[test]
    fn bad_files_are_format_errors() {
        let cfg = NetConfig::energy(2, &[3], 0);
        let p = NetParams::zeros(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &p, None).unwrap();
        fs::write(dir.path().join(MODEL_BIN), [0u8; 12]).unwrap();
        assert!(matches!(load(dir.path()), Err(Error::Format(_))));

        save(dir.path(), &p, None).unwrap();
        let text = fs::read_to_string(dir.path().join(MODEL_JSON)).unwrap();
        fs::write(dir.path().join(MODEL_JSON), text.replace("\"format_version\": 1", "\"format_version\": 7")).unwrap();
        assert!(matches!(load(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn resume_from_disk_is_bit_exact() {
        let data = gen_gaussian(80, 2, 0.0, 1.0, &mut RngState::new(4)).unwrap();
        let net = NetConfig::energy(2, &[6], 3);
        let cfg = TrainConfig {
            sigma: 0.3,
            batch_size: 16,
            iterations: 30,
            running_avg_window: 7,
            ..TrainConfig::default()
        };
        let full = train(ModelKind::Deen, &data, &net, &cfg).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let partial_cfg = TrainConfig { iterations: 12, ..cfg.clone() };
        let mut first = Trainer::new(ModelKind::Deen, &net, &partial_cfg, &data).unwrap();
        first.run().unwrap();
        save_trainer(dir.path(), &first).unwrap();

        let mut second = resume_trainer(dir.path(), &cfg, &data).unwrap();
        second.run().unwrap();
        assert_eq!(second.params(), &full.params);
        assert_eq!(second.history(), &full.history);

        let other = TrainConfig { sigma: 0.4, ..cfg };
        assert!(matches!(resume_trainer(dir.path(), &other, &data), Err(Error::Config(_))));
    }
}
