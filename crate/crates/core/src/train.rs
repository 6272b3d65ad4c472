//! Double-SGD training loop: random minibatches of clean points and fresh
//! kernel draws for each of them, every iteration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{csv_err, sample_joint, sample_joint_rows, write_rows_csv, Dataset, NoisyPairBatch};
use crate::error::{Error, Result};
use crate::net::{NetConfig, NetParams};
use crate::objectives::{cd_langevin_update, deen_grad, dsm_grad};
use crate::optim::{OptState, OptimizerKind};
use crate::rng::RngState;
use crate::tensor::Tensor;

/// Which network and update rule to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Energy network, Parzen score-matching objective.
    Deen,
    /// Direct score network, same objective.
    Dsm,
    /// Energy network, contrastive divergence with Langevin negatives.
    Cd,
}

impl ModelKind {
    pub fn net_config(self, input_dim: usize, hidden: &[usize], seed: u64) -> NetConfig {
        match self {
            Self::Dsm => NetConfig::score_net(input_dim, hidden, seed),
            Self::Deen | Self::Cd => NetConfig::energy(input_dim, hidden, seed),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Deen => "deen",
            Self::Dsm => "dsm",
            Self::Cd => "cd",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deen" => Ok(Self::Deen),
            "dsm" => Ok(Self::Dsm),
            "cd" => Ok(Self::Cd),
            other => Err(Error::Config(format!("unknown model kind {other:?} (deen, dsm, cd)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Parzen kernel width.
    pub sigma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    /// Kernel draws per clean point and iteration.
    pub noisy_per_point: usize,
    /// Draw fresh noisy points every iteration; otherwise a fixed set of
    /// `noisy_per_point` draws per data point is generated once.
    pub resample_each_iter: bool,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub running_avg_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            learning_rate: 0.001,
            batch_size: 128,
            iterations: 1000,
            noisy_per_point: 1,
            resample_each_iter: true,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            running_avg_window: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.noisy_per_point == 0 || self.running_avg_window == 0 {
            return bad("batch_size, noisy_per_point and running_avg_window must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss: f64,
    pub running_avg: f64,
}

/// Raw per-iteration losses with their trailing moving average.
#[derive(Debug, Clone, PartialEq)]
pub struct LossHistory {
    window: usize,
    records: Vec<LossRecord>,
}

impl LossHistory {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            records: Vec::new(),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Appends a raw loss; the running average covers the last `window`
    /// raw losses including this one.
    pub fn push(&mut self, iteration: usize, loss: f64) {
        let start = (self.records.len() + 1).saturating_sub(self.window);
        let tail = &self.records[start..];
        let sum = tail.iter().map(|r| r.loss).sum::<f64>() + loss;
        let running_avg = sum / (tail.len() + 1) as f64;
        self.records.push(LossRecord {
            iteration,
            loss,
            running_avg,
        });
    }

    pub fn records(&self) -> &[LossRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&LossRecord> {
        self.records.last()
    }

    pub fn at_iteration(&self, iteration: usize) -> Option<&LossRecord> {
        self.records.iter().find(|r| r.iteration == iteration)
    }

    /// Rebuilds a history from raw losses alone.
    pub fn from_raw(window: usize, raw: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut h = Self::new(window);
        for (it, loss) in raw {
            h.push(it, loss);
        }
        h
    }

    /// CSV with header `iter,loss,running_avg`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows: Vec<[f64; 3]> = self
            .records
            .iter()
            .map(|r| [r.iteration as f64, r.loss, r.running_avg])
            .collect();
        write_rows_csv(
            path.as_ref(),
            Some(&["iter", "loss", "running_avg"]),
            rows.iter().map(|r| &r[..]),
        )
    }

    /// Reads a loss CSV and recomputes the running averages from the raw
    /// column with `window`.
    pub fn read_csv(path: impl AsRef<Path>, window: usize) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut raw = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_err(path, e))?;
            let parse = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::Format(format!("{}: malformed row {record:?}", path.display())))
            };
            raw.push((parse(0)? as usize, parse(1)?));
        }
        Ok(Self::from_raw(window, raw))
    }
}

/// Stateful training run; can be constructed fresh or from a checkpoint.
#[derive(Debug, Clone)]
pub struct Trainer<'a> {
    kind: ModelKind,
    cfg: TrainConfig,
    data: &'a Dataset,
    params: NetParams,
    opt: OptState,
    history: LossHistory,
    iteration: usize,
    base_rng: RngState,
    fixed_joint: Option<NoisyPairBatch>,
}

impl<'a> Trainer<'a> {
    /// Fresh run: parameters initialized from `net_cfg.seed`.
    pub fn new(kind: ModelKind, net_cfg: &NetConfig, cfg: &TrainConfig, data: &'a Dataset) -> Result<Self> {
        let mut init_rng = RngState::new(net_cfg.seed).split("init");
        let params = NetParams::init(net_cfg, &mut init_rng)?;
        let opt = OptState::new(cfg.optimizer, &params);
        Self::resume(kind, cfg, data, params, opt, LossHistory::new(cfg.running_avg_window), 0)
    }

    /// Continue a run after `iteration` completed updates.
    pub fn resume(
        kind: ModelKind,
        cfg: &TrainConfig,
        data: &'a Dataset,
        params: NetParams,
        opt: OptState,
        history: LossHistory,
        iteration: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let net = params.config();
        if net.input_dim != data.dim() {
            return Err(Error::Config(format!(
                "network input {} does not match data dimension {}",
                net.input_dim,
                data.dim()
            )));
        }
        let wants_energy = kind != ModelKind::Dsm;
        if wants_energy != net.is_energy() {
            return Err(Error::Config(format!(
                "{kind} training needs output_dim {}",
                if wants_energy { 1 } else { net.input_dim }
            )));
        }
        if opt.kind() != cfg.optimizer {
            return Err(Error::Config("optimizer state does not match the configured optimizer".into()));
        }
        let base_rng = RngState::new(cfg.seed);
        let fixed_joint = if cfg.resample_each_iter || kind == ModelKind::Cd {
            None
        } else {
            let mut rng = base_rng.split("joint-set");
            Some(sample_joint(data, cfg.sigma, cfg.noisy_per_point, &mut rng)?)
        };
        Ok(Self {
            kind,
            cfg: cfg.clone(),
            data,
            params,
            opt,
            history,
            iteration,
            base_rng,
            fixed_joint,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &NetParams {
        &self.params
    }

    pub fn optimizer(&self) -> &OptState {
        &self.opt
    }

    pub fn history(&self) -> &LossHistory {
        &self.history
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    fn minibatch(&self, t: u64) -> Vec<usize> {
        let mut rng = self.base_rng.split_indexed("minibatch", t);
        (0..self.cfg.batch_size).map(|_| rng.below(self.data.len())).collect()
    }

    fn noisy_batch(&self, t: u64, indices: &[usize]) -> Result<NoisyPairBatch> {
        let m = self.cfg.noisy_per_point;
        match &self.fixed_joint {
            None => {
                let mut rng = self.base_rng.split_indexed("noise", t);
                sample_joint_rows(self.data, indices, self.cfg.sigma, m, &mut rng)
            }
            Some(joint) => {
                let rows: Vec<usize> = indices.iter().flat_map(|&i| i * m..(i + 1) * m).collect();
                let gather = |src: &Tensor| {
                    let mut out = Vec::with_capacity(rows.len() * src.cols());
                    for &r in &rows {
                        out.extend_from_slice(src.row(r));
                    }
                    Tensor::matrix(rows.len(), src.cols(), out)
                };
                NoisyPairBatch::new(gather(&joint.clean)?, gather(&joint.noisy)?, joint.sigma)
            }
        }
    }

    /// One parameter update; returns the recorded loss.
    pub fn step(&mut self) -> Result<f64> {
        let t = self.iteration as u64;
        let indices = self.minibatch(t);
        let (loss, grad) = match self.kind {
            ModelKind::Deen => deen_grad(&self.params, &self.noisy_batch(t, &indices)?, self.cfg.sigma)?,
            ModelKind::Dsm => dsm_grad(&self.params, &self.noisy_batch(t, &indices)?, self.cfg.sigma)?,
            ModelKind::Cd => {
                let x = self.data.select(&indices)?;
                let mut rng = self.base_rng.split_indexed("langevin", t);
                let update = cd_langevin_update(&self.params, x.samples(), self.cfg.sigma, &mut rng)?;
                let mut descent = update.direction;
                descent.scale(-1.0);
                (update.energy_gap, descent)
            }
        };
        if !loss.is_finite() || !grad.is_finite() {
            return Err(Error::NonFinite {
                iteration: self.iteration + 1,
            });
        }
        self.opt.apply(&mut self.params, &grad, self.cfg.learning_rate)?;
        if !self.params.is_finite() {
            return Err(Error::NonFinite {
                iteration: self.iteration + 1,
            });
        }
        self.iteration += 1;
        self.history.push(self.iteration, loss);
        Ok(loss)
    }

    /// Runs until `cfg.iterations` updates are done in total.
    pub fn run(&mut self) -> Result<()> {
        while self.iteration < self.cfg.iterations {
            self.step()?;
        }
        Ok(())
    }

    pub fn run_for(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_parts(self) -> (NetParams, OptState, LossHistory) {
        (self.params, self.opt, self.history)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetParams,
    pub history: LossHistory,
}

/// Trains a fresh network for `cfg.iterations` updates.
pub fn train(kind: ModelKind, data: &Dataset, net_cfg: &NetConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(kind, net_cfg, cfg, data)?;
    trainer.run()?;
    let (params, _, history) = trainer.into_parts();
    Ok(TrainOutcome { params, history })
}
