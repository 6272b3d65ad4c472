use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use deen_core::checkpoint::{self, Checkpoint};
use deen_core::diagnostics::{curl_grid, curl_stats, eval_energy_grid, eval_score_grid, ssd_denoise, ssd_denoise_rows};
use deen_core::filter::{err_per_pixel, mg_filter};
use deen_core::output::{write_field_csv, write_grid_csv, write_pgm};
use deen_core::parzen::select_sigma as parzen_select;
use deen_core::patches::add_patch_noise;
use deen_core::{Dataset, Error, GridSpec, RngState, Tensor, Trainer};
use serde::Serialize;

use crate::config::{self, overlay, required, DataSource, GridConfig};
use crate::{CurlArgs, DenoiseArgs, EvalArgs, Failure, GenDataArgs, GridArgs, GridFlags, SelectSigmaArgs, TrainArgs};

pub struct Context {
    pub outdir: PathBuf,
    pub config: Option<PathBuf>,
}

impl Context {
    fn load<T: serde::de::DeserializeOwned + Default>(&self) -> Result<T, Failure> {
        config::load(self.config.as_deref())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.outdir.join(name)
    }
}

fn io(e: std::io::Error) -> Failure {
    Error::from(e).into()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(io)
}

pub fn gen_data(ctx: &Context, a: GenDataArgs) -> Result<(), Failure> {
    let mut cfg: config::GenDataConfig = ctx.load()?;
    let g = &mut cfg.generator;
    overlay! {
        g.kind => a.kind, g.n => a.n, g.seed => a.seed, g.noise => a.noise,
        g.dim => a.dim, g.mean => a.mean, g.std => a.std, g.size => a.size,
        g.images => a.images, cfg.out => a.out,
    }
    if a.patch.is_some() {
        cfg.generator.patch = a.patch;
    }
    config::echo(&ctx.outdir, &cfg)?;
    let data = cfg.generator.generate()?;
    data.write_csv(ctx.path(&cfg.out))?;
    fs::write(ctx.path("seed.txt"), format!("{}\n", cfg.generator.seed)).map_err(io)?;
    eprintln!("wrote {} samples of dimension {} to {}", data.len(), data.dim(), ctx.path(&cfg.out).display());
    Ok(())
}

pub fn select_sigma(ctx: &Context, a: SelectSigmaArgs) -> Result<(), Failure> {
    let mut cfg: config::SelectSigmaConfig = ctx.load()?;
    if let Some(src) = DataSource::from_flags(a.data, a.idx, a.limit)? {
        cfg.data = Some(src);
    }
    if let Some(src) = DataSource::from_flags(a.valid, a.valid_idx, a.valid_limit)? {
        cfg.valid = Some(src);
    }
    overlay! { cfg.valid_fraction => a.valid_fraction, cfg.candidates => a.candidates }
    config::echo(&ctx.outdir, &cfg)?;

    let pool = required(cfg.data.as_ref(), "training data")?.load()?;
    let (train, valid) = match &cfg.valid {
        Some(src) => (pool, src.load()?),
        None => {
            if !(cfg.valid_fraction > 0.0 && cfg.valid_fraction < 1.0) {
                return Err(Failure::usage("valid_fraction must lie in (0, 1)"));
            }
            let n_valid = ((pool.len() as f64) * cfg.valid_fraction).round() as usize;
            if n_valid == 0 || n_valid >= pool.len() {
                return Err(Failure::usage("too few samples to hold out a validation set"));
            }
            pool.split_at(pool.len() - n_valid)?
        }
    };
    let sel = parzen_select(&train, &valid, &cfg.candidates)?;
    let mut report = String::from("sigma,mean_loglik\n");
    for (s, ll) in &sel.scores {
        println!("sigma {s} mean log-likelihood {ll}");
        report.push_str(&format!("{s},{ll}\n"));
    }
    fs::write(ctx.path("sigma_report.csv"), report).map_err(io)?;
    println!("selected sigma {}", sel.sigma);
    Ok(())
}

pub fn train(ctx: &Context, a: TrainArgs) -> Result<(), Failure> {
    let mut cfg: config::TrainRunConfig = ctx.load()?;
    if let Some(src) = DataSource::from_flags(a.data, a.idx, a.limit)? {
        cfg.data = Some(src);
    }
    let t = &mut cfg.train;
    overlay! {
        cfg.kind => a.kind, cfg.hidden_dims => a.hidden, cfg.net_seed => a.net_seed,
        t.sigma => a.sigma, t.learning_rate => a.lr, t.batch_size => a.batch_size,
        t.iterations => a.iterations, t.noisy_per_point => a.noisy_per_point,
        t.optimizer => a.optimizer, t.seed => a.seed, t.running_avg_window => a.window,
        cfg.log_every => a.log_every,
    }
    if a.fixed_noise {
        cfg.train.resample_each_iter = false;
    }
    if a.resume.is_some() {
        cfg.resume = a.resume;
    }
    config::echo(&ctx.outdir, &cfg)?;

    let data = required(cfg.data.as_ref(), "training data")?.load()?;
    let mut trainer = match &cfg.resume {
        Some(dir) => {
            let trainer = checkpoint::resume_trainer(dir, &cfg.train, &data)?;
            if trainer.kind() != cfg.kind {
                return Err(Failure::usage(format!(
                    "checkpoint holds a {} model, not {}",
                    trainer.kind(),
                    cfg.kind
                )));
            }
            trainer
        }
        None => {
            let net = cfg.kind.net_config(data.dim(), &cfg.hidden_dims, cfg.net_seed);
            Trainer::new(cfg.kind, &net, &cfg.train, &data)?
        }
    };
    let total = cfg.train.iterations;
    let every = match cfg.log_every {
        0 => (total / 10).max(1),
        k => k,
    };
    while trainer.iteration() < total {
        let steps = (every - trainer.iteration() % every).min(total - trainer.iteration());
        trainer.run_for(steps)?;
        if let Some(r) = trainer.history().last() {
            eprintln!("iter {} loss {:.6} running_avg {:.6}", r.iteration, r.loss, r.running_avg);
        }
    }
    checkpoint::save_trainer(&ctx.outdir, &trainer)?;
    Ok(())
}

fn load_model(model: Option<&Path>) -> Result<Checkpoint, Failure> {
    Ok(checkpoint::load(required(model, "--model checkpoint directory")?)?)
}

fn apply_grid_flags(grid: &mut GridSpec, f: GridFlags) {
    overlay! {
        grid.x_min => f.x_min, grid.x_max => f.x_max, grid.y_min => f.y_min, grid.y_max => f.y_max,
        grid.nx => f.n.or(f.nx), grid.ny => f.n.or(f.ny),
    }
}

/// Rows in descending `y` so the image has `y` pointing up.
fn grid_image(values: &Tensor) -> Result<Tensor, Failure> {
    let rows: Vec<Vec<f64>> = values.row_iter().rev().map(<[f64]>::to_vec).collect();
    Ok(Tensor::from_rows(&rows)?)
}

#[derive(Serialize)]
struct EnergyGridMeta {
    /// `q = exp(−(E − shift))`; `shift` is the smallest energy on the grid.
    shift: f64,
    energy_min: f64,
    energy_max: f64,
}

pub fn grid(ctx: &Context, a: GridArgs) -> Result<(), Failure> {
    let mut cfg: GridConfig = ctx.load()?;
    if a.model.is_some() {
        cfg.model = a.model;
    }
    apply_grid_flags(&mut cfg.grid, a.grid);
    config::echo(&ctx.outdir, &cfg)?;
    let ckpt = load_model(cfg.model.as_deref())?;
    let p = &ckpt.params;

    write_field_csv(&eval_score_grid(p, &cfg.grid)?, ctx.path("score.csv"))?;
    if p.config().is_energy() {
        let g = eval_energy_grid(p, &cfg.grid)?;
        write_grid_csv(&g.energy, ctx.path("energy.csv"))?;
        write_grid_csv(&g.q, ctx.path("q.csv"))?;
        write_pgm(&grid_image(&g.q.values)?, ctx.path("q.pgm"))?;
        write_pgm(&grid_image(&g.energy.values)?, ctx.path("energy.pgm"))?;
        let e = g.energy.values.data();
        let meta = EnergyGridMeta {
            shift: g.shift,
            energy_min: g.shift,
            energy_max: e.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        write_json(&ctx.path("energy_meta.json"), &meta)?;
    }
    eprintln!("wrote grids for a {}×{} lattice", cfg.grid.nx, cfg.grid.ny);
    Ok(())
}

#[derive(Serialize)]
struct CurlReport {
    max_abs: f64,
    median_abs: f64,
    dx: f64,
    dy: f64,
    threshold: Option<f64>,
    below_threshold: Option<bool>,
}

pub fn curl(ctx: &Context, a: CurlArgs) -> Result<(), Failure> {
    let mut cfg: config::CurlConfig = ctx.load()?;
    if a.model.is_some() {
        cfg.model = a.model;
    }
    if a.threshold.is_some() {
        cfg.threshold = a.threshold;
    }
    apply_grid_flags(&mut cfg.grid, a.grid);
    config::echo(&ctx.outdir, &cfg)?;
    let ckpt = load_model(cfg.model.as_deref())?;
    let c = curl_grid(&eval_score_grid(&ckpt.params, &cfg.grid)?)?;
    write_grid_csv(&c, ctx.path("curl.csv"))?;
    let s = curl_stats(&c);
    println!("interior max |curl| {}", s.max_abs);
    println!("interior median |curl| {}", s.median_abs);
    let below = cfg.threshold.map(|t| s.max_abs < t);
    if let (Some(t), Some(b)) = (cfg.threshold, below) {
        println!("max |curl| {} threshold {t}", if b { "below" } else { "above" });
    }
    let report = CurlReport {
        max_abs: s.max_abs,
        median_abs: s.median_abs,
        dx: cfg.grid.dx(),
        dy: cfg.grid.dy(),
        threshold: cfg.threshold,
        below_threshold: below,
    };
    write_json(&ctx.path("curl_stats.json"), &report)
}

fn default_sigma_prime(given: Option<f64>, ckpt: &Checkpoint) -> Result<f64, Failure> {
    given
        .or_else(|| ckpt.training.as_ref().map(|m| m.train.sigma))
        .ok_or_else(|| Failure::usage("checkpoint records no training σ; pass --sigma-prime"))
}

/// Side length of a square image with `d` pixels.
fn square_side(d: usize) -> Option<usize> {
    let s = (d as f64).sqrt().round() as usize;
    (s * s == d).then_some(s)
}

fn row_image(row: &[f64], side: usize) -> Result<Tensor, Failure> {
    Ok(Tensor::matrix(side, side, row.to_vec())?)
}

pub fn denoise(ctx: &Context, a: DenoiseArgs) -> Result<(), Failure> {
    let mut cfg: config::DenoiseConfig = ctx.load()?;
    if a.model.is_some() {
        cfg.model = a.model;
    }
    if a.input.is_some() {
        cfg.input = a.input;
    }
    if a.sigma_prime.is_some() {
        cfg.sigma_prime = a.sigma_prime;
    }
    overlay! { cfg.out => a.out, cfg.pgm => a.pgm }
    let ckpt = load_model(cfg.model.as_deref())?;
    cfg.sigma_prime = Some(default_sigma_prime(cfg.sigma_prime, &ckpt)?);
    config::echo(&ctx.outdir, &cfg)?;
    let sigma_prime = cfg.sigma_prime.expect("resolved above");

    let input = Dataset::read_csv(required(cfg.input.as_ref(), "--input CSV")?)?;
    let out = ssd_denoise_rows(&ckpt.params, input.samples(), sigma_prime)?;
    let denoised = Dataset::new(out)?;
    denoised.write_csv(ctx.path(&cfg.out))?;
    if cfg.pgm > 0 {
        let side = square_side(denoised.dim())
            .ok_or_else(|| Failure::usage("PGM output needs square images"))?;
        for k in 0..cfg.pgm.min(denoised.len()) {
            write_pgm(&row_image(input.row(k), side)?, ctx.path(&format!("input_{k}.pgm")))?;
            write_pgm(&row_image(denoised.row(k), side)?, ctx.path(&format!("denoised_{k}.pgm")))?;
        }
    }
    eprintln!("denoised {} rows with σ′ = {sigma_prime}", denoised.len());
    Ok(())
}

pub fn eval(ctx: &Context, a: EvalArgs) -> Result<(), Failure> {
    let mut cfg: config::EvalConfig = ctx.load()?;
    if a.model.is_some() {
        cfg.model = a.model;
    }
    if let Some(path) = a.clean {
        cfg.clean = Some(DataSource::Csv(path));
    }
    if a.sigma_prime.is_some() {
        cfg.sigma_prime = a.sigma_prime;
    }
    overlay! {
        cfg.noise_factor => a.noise_factor, cfg.noise_seed => a.noise_seed,
        cfg.median_window => a.median_window, cfg.gauss_sigma => a.gauss_sigma, cfg.pgm => a.pgm,
    }
    let ckpt = load_model(cfg.model.as_deref())?;
    cfg.sigma_prime = Some(default_sigma_prime(cfg.sigma_prime, &ckpt)?);
    config::echo(&ctx.outdir, &cfg)?;
    let sigma_prime = cfg.sigma_prime.expect("resolved above");

    let clean = required(cfg.clean.as_ref(), "--clean patches")?.load()?;
    let side = square_side(clean.dim()).ok_or_else(|| Failure::usage("eval needs square patches"))?;
    let mut rng = RngState::new(cfg.noise_seed).split("eval-noise");
    let (mut e_noisy, mut e_mg, mut e_model) = (0.0, 0.0, 0.0);
    for (k, x) in clean.rows().enumerate() {
        let xi = add_patch_noise(x, cfg.noise_factor, &mut rng);
        let mg = mg_filter(&row_image(&xi, side)?, cfg.median_window, cfg.gauss_sigma)?;
        let den = ssd_denoise(&ckpt.params, &xi, sigma_prime)?;
        e_noisy += err_per_pixel(x, &xi)?;
        e_mg += err_per_pixel(x, mg.data())?;
        e_model += err_per_pixel(x, &den)?;
        if k < cfg.pgm {
            write_pgm(&row_image(x, side)?, ctx.path(&format!("eval_{k}_clean.pgm")))?;
            write_pgm(&row_image(&xi, side)?, ctx.path(&format!("eval_{k}_noisy.pgm")))?;
            write_pgm(&mg, ctx.path(&format!("eval_{k}_mg.pgm")))?;
            write_pgm(&row_image(&den, side)?, ctx.path(&format!("eval_{k}_model.pgm")))?;
        }
    }
    let n = clean.len() as f64;
    let rows = [("noisy", e_noisy / n), ("mg", e_mg / n), ("model", e_model / n)];
    let mut file = fs::File::create(ctx.path("eval.csv")).map_err(io)?;
    writeln!(file, "method,err_per_pixel").map_err(io)?;
    for (name, e) in rows {
        println!("err/pixel {name} {e}");
        writeln!(file, "{name},{e}").map_err(io)?;
    }
    Ok(())
}
