//! Demo state without any JavaScript types, so it runs under `cargo test`.

use deen_core::data::{gen_mog, gen_spiral, MoGSpec};
use deen_core::diagnostics::{curl_grid, curl_stats, eval_energy_grid, eval_score_grid, ssd_denoise};
use deen_core::optim::OptState;
use deen_core::parzen::parzen_logpdf;
use deen_core::{Dataset, Error, GridSpec, LossHistory, ModelKind, NetParams, Result, RngState, TrainConfig, Trainer};

/// Plotting window shared by every grid the page draws.
pub const VIEW: f64 = 4.0;

pub struct Session {
    kind: ModelKind,
    data: Dataset,
    cfg: TrainConfig,
    params: Option<NetParams>,
    opt: Option<OptState>,
    history: LossHistory,
    iteration: usize,
}

fn square(n: usize) -> GridSpec {
    GridSpec::square(-VIEW, VIEW, n)
}

impl Session {
    /// `dataset` is `"spiral"` or `"mog"`, `kind` one of `"deen"`, `"dsm"`, `"cd"`.
    pub fn new(dataset: &str, kind: &str, sigma: f64, n: usize, seed: u64) -> Result<Self> {
        let kind: ModelKind = kind.parse()?;
        let mut rng = RngState::new(seed).split(dataset);
        let data = match dataset {
            "spiral" => gen_spiral(n, 0.05, &mut rng)?,
            "mog" => gen_mog(n, &MoGSpec::default_2d(), &mut rng)?,
            other => return Err(Error::Config(format!("unknown dataset {other:?} (spiral, mog)"))),
        };
        let cfg = TrainConfig {
            sigma,
            batch_size: 128,
            iterations: usize::MAX,
            running_avg_window: 50,
            seed,
            ..TrainConfig::default()
        };
        cfg.validate()?;
        let net = kind.net_config(2, &[32, 32, 32], seed);
        let (params, opt, history) = Trainer::new(kind, &net, &cfg, &data)?.into_parts();
        Ok(Self {
            kind,
            data,
            cfg,
            params: Some(params),
            opt: Some(opt),
            history,
            iteration: 0,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &NetParams {
        self.params.as_ref().expect("parameters present between calls")
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn samples(&self) -> &[f64] {
        self.data.samples().data()
    }

    /// Runs `steps` updates and returns the running-average loss.
    pub fn train(&mut self, steps: usize) -> Result<f64> {
        let params = self.params.take().expect("parameters present between calls");
        let opt = self.opt.take().expect("optimizer present between calls");
        let history = std::mem::replace(&mut self.history, LossHistory::new(1));
        let mut trainer = Trainer::resume(self.kind, &self.cfg, &self.data, params, opt, history, self.iteration)?;
        let outcome = trainer.run_for(steps);
        self.iteration = trainer.iteration();
        let (params, opt, history) = trainer.into_parts();
        self.params = Some(params);
        self.opt = Some(opt);
        self.history = history;
        outcome?;
        Ok(self.history.last().map_or(f64::NAN, |r| r.running_avg))
    }

    /// `q = exp(−(E − min E))` on an `n × n` grid, rows in ascending `y`.
    pub fn q_grid(&self, n: usize) -> Result<Vec<f64>> {
        Ok(eval_energy_grid(self.params(), &square(n))?.q.values.into_data())
    }

    /// Score samples interleaved as `u, v` per grid point.
    pub fn score_field(&self, n: usize) -> Result<Vec<f64>> {
        let f = eval_score_grid(self.params(), &square(n))?;
        Ok(f.u.data().iter().zip(f.v.data()).flat_map(|(u, v)| [*u, *v]).collect())
    }

    pub fn curl_grid(&self, n: usize) -> Result<Vec<f64>> {
        Ok(curl_grid(&eval_score_grid(self.params(), &square(n))?)?.values.into_data())
    }

    /// Interior `[max |curl|, median |curl|]`.
    pub fn curl_stats(&self, n: usize) -> Result<[f64; 2]> {
        let s = curl_stats(&curl_grid(&eval_score_grid(self.params(), &square(n))?)?);
        Ok([s.max_abs, s.median_abs])
    }

    /// Parzen log-density of the training points with width `sigma`.
    pub fn parzen_grid(&self, sigma: f64, n: usize) -> Result<Vec<f64>> {
        square(n)
            .points()
            .iter()
            .map(|p| parzen_logpdf(&self.data, sigma, p))
            .collect()
    }

    pub fn denoise(&self, x: f64, y: f64, sigma_prime: f64) -> Result<[f64; 2]> {
        let out = ssd_denoise(self.params(), &[x, y], sigma_prime)?;
        Ok([out[0], out[1]])
    }
}
