//! Browser bindings for the interactive deterioration-model demo.
//!
//! Three operations back the static page in `www/`: sample-path
//! simulation with the analytic predictive band, the variance curve with
//! its mean-at-maximum-variance marker, and the age-based replacement
//! cost-rate curve with its optimum. All take and return JSON strings so
//! the page needs no generated glue beyond `wasm-bindgen`.

use btgp::analysis::{mumv, predictive_band};
use btgp::model::{ModelSpec, Orientation, Theta, Variant};
use btgp::policy::{optimize_abr, CostConfig, GridRange, PolicyDecision};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Deserialize)]
struct ModelParams {
    model: String,
    theta1: f64,
    theta2: f64,
    theta3: f64,
    #[serde(default)]
    theta4: Option<f64>,
    #[serde(default = "default_xlim")]
    xlim: f64,
    #[serde(default = "default_orientation")]
    orientation: String,
}

fn default_xlim() -> f64 {
    100.0
}

fn default_orientation() -> String {
    "decreasing".into()
}

impl ModelParams {
    fn build(&self) -> Result<ModelSpec, btgp::Error> {
        let theta = match self.theta4 {
            Some(t4) => Theta::new4(self.theta1, self.theta2, self.theta3, t4),
            None => Theta::new3(self.theta1, self.theta2, self.theta3),
        };
        ModelSpec::new(
            Variant::parse(&self.model)?,
            theta,
            self.xlim,
            Orientation::parse(&self.orientation)?,
        )
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

fn err_json(e: impl std::fmt::Display) -> String {
    to_json(&serde_json::json!({ "error": e.to_string() }))
}

#[derive(Deserialize)]
struct SimulateRequest {
    #[serde(flatten)]
    model: ModelParams,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_step")]
    step: f64,
    #[serde(default = "default_n_paths")]
    n_paths: usize,
    #[serde(default)]
    seed: u64,
}

fn default_horizon() -> f64 {
    100.0
}

fn default_step() -> f64 {
    1.0
}

fn default_n_paths() -> usize {
    20
}

/// Sample paths plus the analytic mean and 95% predictive band.
#[wasm_bindgen]
pub fn simulate_demo(request: &str) -> String {
    let req: SimulateRequest = match serde_json::from_str(request) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let m = match req.model.build() {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    if !(req.horizon > 0.0) || !(req.step > 0.0) || req.n_paths == 0 || req.n_paths > 500 {
        return err_json("horizon and step must be positive; 1..=500 paths");
    }
    let n = (req.horizon / req.step).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * req.step).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(req.seed);
    let paths = match m.simulate_paths(&grid, req.n_paths, &mut rng) {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let band = match predictive_band(&m, &grid, (0.025, 0.975)) {
        Ok(b) => b,
        Err(e) => return err_json(e),
    };

    #[derive(Serialize)]
    struct Response {
        grid: Vec<f64>,
        paths: Vec<Vec<f64>>,
        lower: Vec<f64>,
        mean: Vec<f64>,
        upper: Vec<f64>,
    }
    to_json(&Response {
        grid,
        paths,
        lower: band.iter().map(|b| b.lower).collect(),
        mean: band.iter().map(|b| b.mean).collect(),
        upper: band.iter().map(|b| b.upper).collect(),
    })
}

/// Mean/variance curves over calendar time with the MUMV marker.
#[wasm_bindgen]
pub fn mumv_demo(request: &str) -> String {
    let params: ModelParams = match serde_json::from_str(request) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let m = match params.build() {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let peak = match mumv(&m) {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let t_end = (3.0 * peak.t_star).max(1e-6);
    let n = 160usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut means = Vec::with_capacity(n + 1);
    let mut variances = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = t_end * k as f64 / n as f64;
        match m.mean_variance(t) {
            Ok((mu, var)) => {
                times.push(t);
                means.push(m.orientation().from_degradation(mu, m.x_lim()));
                variances.push(var);
            }
            Err(e) => return err_json(e),
        }
    }

    #[derive(Serialize)]
    struct Response {
        times: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
        t_star: f64,
        tau_star: f64,
        max_variance: f64,
        mumv: f64,
    }
    to_json(&Response {
        times,
        means,
        variances,
        t_star: peak.t_star,
        tau_star: peak.tau_star,
        max_variance: peak.max_variance,
        mumv: peak.mumv,
    })
}

#[derive(Deserialize)]
struct AbrRequest {
    #[serde(flatten)]
    model: ModelParams,
    /// Failure threshold on the user scale.
    xi: f64,
    #[serde(default = "default_cr")]
    cr: f64,
    #[serde(default = "default_cf")]
    cf: f64,
    #[serde(default = "default_t_max")]
    t_max: f64,
}

fn default_cr() -> f64 {
    100.0
}

fn default_cf() -> f64 {
    500.0
}

fn default_t_max() -> f64 {
    150.0
}

/// Age-based replacement cost-rate curve and its optimum.
#[wasm_bindgen]
pub fn abr_demo(request: &str) -> String {
    let req: AbrRequest = match serde_json::from_str(request) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let m = match req.model.build() {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let costs = match CostConfig::new(0.0, req.cr, req.cf) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let grid = match GridRange::new(1.0, req.t_max.max(2.0), 0.25) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let xi_deg = m.orientation().to_degradation(req.xi, m.x_lim());
    let opt = match optimize_abr(&m, xi_deg, &costs, &grid) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let PolicyDecision::Abr { t_r } = opt.decision else {
        return err_json("unexpected decision kind");
    };

    #[derive(Serialize)]
    struct Response {
        ages: Vec<f64>,
        rates: Vec<f64>,
        t_r: f64,
        rate: f64,
    }
    to_json(&Response {
        ages: opt.trace.iter().map(|p| p.t).collect(),
        rates: opt.trace.iter().map(|p| p.rate).collect(),
        t_r,
        rate: opt.rate,
    })
}
