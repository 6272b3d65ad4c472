//! WebAssembly bindings for the single-page demo in `www/`.

mod session;

pub use session::{Session, VIEW};
use wasm_bindgen::prelude::*;

fn js(e: deen_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    inner: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(dataset: &str, kind: &str, sigma: f64, n: usize, seed: u64) -> Result<Demo, JsError> {
        Ok(Self {
            inner: Session::new(dataset, kind, sigma, n, seed).map_err(js)?,
        })
    }

    /// Half-width of the square plotting window.
    pub fn view() -> f64 {
        VIEW
    }

    #[wasm_bindgen(getter)]
    pub fn iteration(&self) -> usize {
        self.inner.iteration()
    }

    #[wasm_bindgen(getter, js_name = hasEnergy)]
    pub fn has_energy(&self) -> bool {
        self.inner.params().config().is_energy()
    }

    pub fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    pub fn train(&mut self, steps: usize) -> Result<f64, JsError> {
        self.inner.train(steps).map_err(js)
    }

    #[wasm_bindgen(js_name = qGrid)]
    pub fn q_grid(&self, n: usize) -> Result<Vec<f64>, JsError> {
        self.inner.q_grid(n).map_err(js)
    }

    #[wasm_bindgen(js_name = scoreField)]
    pub fn score_field(&self, n: usize) -> Result<Vec<f64>, JsError> {
        self.inner.score_field(n).map_err(js)
    }

    #[wasm_bindgen(js_name = curlGrid)]
    pub fn curl_grid(&self, n: usize) -> Result<Vec<f64>, JsError> {
        self.inner.curl_grid(n).map_err(js)
    }

    #[wasm_bindgen(js_name = curlStats)]
    pub fn curl_stats(&self, n: usize) -> Result<Vec<f64>, JsError> {
        self.inner.curl_stats(n).map(|s| s.to_vec()).map_err(js)
    }

    #[wasm_bindgen(js_name = parzenGrid)]
    pub fn parzen_grid(&self, sigma: f64, n: usize) -> Result<Vec<f64>, JsError> {
        self.inner.parzen_grid(sigma, n).map_err(js)
    }

    pub fn denoise(&self, x: f64, y: f64, sigma_prime: f64) -> Result<Vec<f64>, JsError> {
        self.inner.denoise(x, y, sigma_prime).map(|p| p.to_vec()).map_err(js)
    }
}
