//! Grid evaluation of learned fields, the discrete curl, and single-step
//! denoising.

use serde::{Deserialize, Serialize};

use crate::energy::{energy, score, score_net_forward};
use crate::error::{dim_err, domain_err, Error, Result};
use crate::net::NetParams;
use crate::tensor::Tensor;

/// Rectangular sampling lattice including both end points on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(-4.0, 4.0, 100)
    }
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::Config("grid needs x_min < x_max and y_min < y_max".into()));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Config("grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy()
    }

    /// Points in row-major order: `y` index outer, `x` index inner.
    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| [self.x(i), self.y(j)]))
            .collect()
    }
}

/// Scalar samples on a [`GridSpec`]; `values` is `ny × nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub spec: GridSpec,
    pub values: Tensor,
    /// Set when the outermost ring carries no measurement (zeroed).
    pub boundary_zeroed: bool,
}

impl Grid2D {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.data()[j * self.spec.nx + i]
    }

    /// Values excluding the outermost ring.
    pub fn interior(&self) -> Vec<f64> {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        (1..ny.saturating_sub(1))
            .flat_map(|j| (1..nx - 1).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    pub spec: GridSpec,
    pub u: Tensor,
    pub v: Tensor,
}

/// Energy grid plus `q = exp(−(E − shift))`, `shift` being the grid minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    pub energy: Grid2D,
    pub q: Grid2D,
    pub shift: f64,
}

fn map_points<T: Send>(points: &[[f64; 2]], f: impl Fn(&[f64]) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(|p| f(p)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(|p| f(p)).collect()
    }
}

fn check_2d(p: &NetParams) -> Result<()> {
    if p.config().input_dim != 2 {
        return dim_err(format!("grid evaluation needs a 2-d model, got d = {}", p.config().input_dim));
    }
    Ok(())
}

pub fn eval_energy_grid(p: &NetParams, spec: &GridSpec) -> Result<EnergyGrid> {
    check_2d(p)?;
    spec.validate()?;
    let e = map_points(&spec.points(), |x| energy(p, x))?;
    let shift = e.iter().copied().fold(f64::INFINITY, f64::min);
    let q: Vec<f64> = e.iter().map(|v| (shift - v).exp()).collect();
    let grid = |values| -> Result<Grid2D> {
        Ok(Grid2D {
            spec: *spec,
            values: Tensor::matrix(spec.ny, spec.nx, values)?,
            boundary_zeroed: false,
        })
    };
    Ok(EnergyGrid {
        energy: grid(e)?,
        q: grid(q)?,
        shift,
    })
}

/// Score of either model type: `−∇ₓE` for an energy network, the raw
/// output for a direct score network.
pub fn model_score(p: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    if p.config().is_energy() {
        score(p, x)
    } else {
        score_net_forward(p, x)
    }
}

pub fn eval_score_grid(p: &NetParams, spec: &GridSpec) -> Result<VectorField2D> {
    check_2d(p)?;
    spec.validate()?;
    let s = map_points(&spec.points(), |x| model_score(p, x))?;
    let u = s.iter().map(|s| s[0]).collect();
    let v = s.iter().map(|s| s[1]).collect();
    Ok(VectorField2D {
        spec: *spec,
        u: Tensor::matrix(spec.ny, spec.nx, u)?,
        v: Tensor::matrix(spec.ny, spec.nx, v)?,
    })
}

/// Out-of-plane curl `∂v/∂x − ∂u/∂y` by central differences on interior
/// points; the boundary ring is left at zero.
pub fn curl_grid(field: &VectorField2D) -> Result<Grid2D> {
    let spec = field.spec;
    let (nx, ny) = (spec.nx, spec.ny);
    if nx < 3 || ny < 3 {
        return dim_err(format!("curl needs at least a 3×3 grid, got {nx}×{ny}"));
    }
    if field.u.shape() != [ny, nx] || field.v.shape() != [ny, nx] {
        return dim_err("field components do not match the grid shape");
    }
    let (u, v) = (field.u.data(), field.v.data());
    let (hx, hy) = (spec.dx(), spec.dy());
    let mut out = vec![0.0; nx * ny];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let dv_dx = (v[j * nx + i + 1] - v[j * nx + i - 1]) / (2.0 * hx);
            let du_dy = (u[(j + 1) * nx + i] - u[(j - 1) * nx + i]) / (2.0 * hy);
            out[j * nx + i] = dv_dx - du_dy;
        }
    }
    Ok(Grid2D {
        spec,
        values: Tensor::matrix(ny, nx, out)?,
        boundary_zeroed: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurlStats {
    pub max_abs: f64,
    pub median_abs: f64,
}

/// Max and median of `|curl|` over interior points.
pub fn curl_stats(curl: &Grid2D) -> CurlStats {
    let mut a: Vec<f64> = curl.interior().iter().map(|c| c.abs()).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len();
    let median_abs = match n {
        0 => 0.0,
        _ if n % 2 == 1 => a[n / 2],
        _ => 0.5 * (a[n / 2 - 1] + a[n / 2]),
    };
    CurlStats {
        max_abs: a.last().copied().unwrap_or(0.0),
        median_abs,
    }
}

/// Single-step denoising `x̂ = ξ + σ′² ψ(ξ)`.
pub fn ssd_denoise(p: &NetParams, xi: &[f64], sigma_prime: f64) -> Result<Vec<f64>> {
    if !sigma_prime.is_finite() {
        return domain_err(format!("σ′ must be finite, got {sigma_prime}"));
    }
    if xi.len() != p.config().input_dim {
        return dim_err(format!("input has {} entries, model expects {}", xi.len(), p.config().input_dim));
    }
    let s2 = sigma_prime * sigma_prime;
    if s2 == 0.0 {
        return Ok(xi.to_vec());
    }
    let psi = model_score(p, xi)?;
    Ok(xi.iter().zip(&psi).map(|(x, s)| x + s2 * s).collect())
}

/// [`ssd_denoise`] on every row of an `n × d` tensor.
pub fn ssd_denoise_rows(p: &NetParams, xi: &Tensor, sigma_prime: f64) -> Result<Tensor> {
    if xi.shape().len() != 2 {
        return dim_err("expected an n × d matrix");
    }
    let rows: Vec<&[f64]> = xi.row_iter().collect();
    let out: Vec<Vec<f64>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            rows.par_iter().map(|r| ssd_denoise(p, r, sigma_prime)).collect::<Result<_>>()?
        }
        #[cfg(not(feature = "parallel"))]
        {
            rows.iter().map(|r| ssd_denoise(p, r, sigma_prime)).collect::<Result<_>>()?
        }
    };
    Tensor::matrix(xi.rows(), xi.cols(), out.concat())
}
