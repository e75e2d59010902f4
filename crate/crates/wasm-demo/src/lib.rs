//! Browser bindings for three small tcomp experiments: one completion run
//! with its descent trace, initialization error against sample size, and
//! row norms before and after trimming.
//!
//! Each export has a plain Rust counterpart returning `Result<_, String>` so
//! the logic is testable off the browser.

use nalgebra::DMatrix;
use tcomp::completion::{gog_run, GogConfig};
use tcomp::experiments::{
    generate_odeco, least_squares_estimate, relative_error, sample_size, SUCCESS_TOL,
};
use tcomp::grassmann::Frame;
use tcomp::observations::ObservationSet;
use tcomp::rng::{mix, Stream};
use tcomp::spectral::{initialize, spectral_frames};
use wasm_bindgen::prelude::*;

/// Keeps a single call from freezing the tab.
const MAX_DIM: usize = 40;

/// Result of [`complete`]: the per-iteration trace and the final numbers.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct Completion {
    objective: Vec<f64>,
    gradient_norm: Vec<f64>,
    distance_from_init: Vec<f64>,
    n: usize,
    rel_error: f64,
    init_rel_error: f64,
    dp_init: f64,
    converged: bool,
}

#[wasm_bindgen]
impl Completion {
    #[wasm_bindgen(getter)]
    pub fn objective(&self) -> Vec<f64> {
        self.objective.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn gradient_norm(&self) -> Vec<f64> {
        self.gradient_norm.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn distance_from_init(&self) -> Vec<f64> {
        self.distance_from_init.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn n(&self) -> usize {
        self.n
    }

    #[wasm_bindgen(getter)]
    pub fn rel_error(&self) -> f64 {
        self.rel_error
    }

    #[wasm_bindgen(getter)]
    pub fn init_rel_error(&self) -> f64 {
        self.init_rel_error
    }

    #[wasm_bindgen(getter)]
    pub fn dp_init(&self) -> f64 {
        self.dp_init
    }

    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.converged
    }

    #[wasm_bindgen(getter)]
    pub fn success(&self) -> bool {
        self.rel_error <= SUCCESS_TOL
    }
}

fn check_size(d: usize, r: usize) -> Result<(), String> {
    if d == 0 || d > MAX_DIM {
        return Err(format!("d must be in 1..={MAX_DIM}"));
    }
    if r == 0 || r > d {
        return Err(format!("r must be in 1..={d}"));
    }
    Ok(())
}

/// Completes an ODECO tensor of side `d` and rank `r` from
/// `round(α √r d^{3/2})` samples, starting from the trimmed spectral frames.
pub fn complete_trial(
    d: usize,
    r: usize,
    alpha: f64,
    seed: u64,
    max_iterations: usize,
) -> Result<Completion, String> {
    check_size(d, r)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err("alpha must be positive".into());
    }
    let run = || -> tcomp::Result<Completion> {
        let truth = generate_odeco(d, r, mix(&[seed, 1]))?;
        let n = sample_size(d, r, alpha);
        let obs = ObservationSet::sample_uniform(&truth.tensor, n, mix(&[seed, 2]))?;
        let mu0 = truth.coherence();
        let init = initialize(&obs, [r; 3], mu0)?;
        let config = GogConfig {
            mu0,
            max_iterations,
            ..GogConfig::default()
        };
        let init_estimate = least_squares_estimate(&init, &obs)?;
        let report = gog_run(&obs, [r; 3], &config, &init)?;
        Ok(Completion {
            objective: report.trace.iter().map(|e| e.objective).collect(),
            gradient_norm: report.trace.iter().map(|e| e.gradient_norm).collect(),
            distance_from_init: report.trace.iter().map(|e| e.distance_from_init).collect(),
            n,
            rel_error: relative_error(&report.reconstruction()?, &truth.tensor)?,
            init_rel_error: relative_error(&init_estimate, &truth.tensor)?,
            dp_init: init.distance(&truth.factors)?,
            converged: report.converged,
        })
    };
    run().map_err(|e| e.to_string())
}

/// Mean mode-1 projection distance between the untrimmed spectral frame
/// and the truth, one entry per `alphas[k]`, averaged over `seeds` draws.
pub fn init_error_curve(
    d: usize,
    r: usize,
    alphas: &[f64],
    seeds: usize,
) -> Result<Vec<f64>, String> {
    check_size(d, r)?;
    if seeds == 0 {
        return Err("need at least one seed".into());
    }
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(format!("alpha must be positive, got {alpha}"));
        }
        let mut total = 0.0;
        for s in 0..seeds as u64 {
            let one = || -> tcomp::Result<f64> {
                let truth = generate_odeco(d, r, mix(&[s, 1]))?;
                let n = sample_size(d, r, alpha).max(2);
                let obs = ObservationSet::sample_uniform(&truth.tensor, n, mix(&[s, 2]))?;
                spectral_frames(&obs, [r; 3])?
                    .x
                    .proj_distance(&truth.factors.x)
            };
            total += one().map_err(|e| e.to_string())?;
        }
        out.push(total / seeds as f64);
    }
    Ok(out)
}

/// Squared row norms of a random `d × r` frame with extra weight `spike` on
/// its first row, before and after trimming at `mu0`, concatenated
/// (`d` values each). The trimming threshold is `3 μ0 r / d`.
pub fn trim_rows(d: usize, r: usize, spike: f64, mu0: f64, seed: u64) -> Result<Vec<f64>, String> {
    check_size(d, r)?;
    if !(spike >= 0.0 && spike.is_finite()) {
        return Err("spike must be nonnegative".into());
    }
    let mut stream = Stream::new(seed);
    let mut m = DMatrix::from_fn(d, r, |_, _| stream.normal() / (d as f64).sqrt());
    for j in 0..r {
        m[(0, j)] += spike;
    }
    let run = || -> tcomp::Result<Vec<f64>> {
        let frame = Frame::orthonormalize(&m)?;
        let trimmed = frame.trim(mu0)?;
        let mut rows = frame.row_norms_sq();
        rows.extend(trimmed.row_norms_sq());
        Ok(rows)
    };
    run().map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn complete(
    d: usize,
    r: usize,
    alpha: f64,
    seed: u32,
    max_iterations: usize,
) -> Result<Completion, JsError> {
    complete_trial(d, r, alpha, u64::from(seed), max_iterations).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn init_error(d: usize, r: usize, alphas: Vec<f64>, seeds: usize) -> Result<Vec<f64>, JsError> {
    init_error_curve(d, r, &alphas, seeds).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn trim(d: usize, r: usize, spike: f64, mu0: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    trim_rows(d, r, spike, mu0, u64::from(seed)).map_err(|e| JsError::new(&e))
}
