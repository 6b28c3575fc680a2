//! Browser bindings: sample a trace, solve the angular eigenproblem, and
//! estimate a survival curve. Every function returns a flat `Float64Array`.

use sle_core::diffusion::{hull_exponent, leading_eigenvalue, survival_curve};
use sle_core::estimators::fit_exponential;
use sle_core::loewner::{compute_trace, sample_driving};
use sle_core::{Result, SleError};
use wasm_bindgen::prelude::*;

/// The zipper is quadratic in the step count; this keeps a page responsive.
pub const MAX_TRACE_STEPS: usize = 20_000;
pub const MAX_GRID: usize = 16_384;
pub const MAX_PATHS: usize = 50_000;

/// Survival times reported by [`survival`]: `0.25, 0.5, …, 4`.
pub fn survival_times() -> Vec<f64> {
    (1..=16).map(|k| 0.25 * k as f64).collect()
}

fn cap(what: &str, value: usize, max: usize) -> Result<()> {
    if value > max {
        return Err(SleError::Parameter(format!("{what} is limited to {max} here, got {value}")));
    }
    Ok(())
}

/// `[re₀, im₀, re₁, im₁, …]` for one seeded trace.
pub fn trace_points(kappa: f64, horizon: f64, steps: usize, seed: u64) -> Result<Vec<f64>> {
    cap("steps", steps, MAX_TRACE_STEPS)?;
    let trace = compute_trace(&sample_driving(kappa, horizon, steps, seed)?);
    Ok(trace.points.iter().flat_map(|p| [p.re, p.im]).collect())
}

/// `[λ̂, φ₁, …, φ_grid]`, the eigenvector max-normalized on the interior grid.
pub fn spectral(kappa: f64, grid: usize) -> Result<Vec<f64>> {
    cap("grid", grid, MAX_GRID)?;
    let r = leading_eigenvalue(kappa, grid)?;
    let mut out = Vec::with_capacity(grid + 1);
    out.push(r.lambda_hat);
    out.extend(r.eigenvector);
    Ok(out)
}

/// `[λ̂, 1 − κ/8, p(0.25), …, p(4)]` for the diffusion started at `π`.
/// `λ̂` is NaN when too few paths survive for a fit.
pub fn survival(kappa: f64, n_paths: usize, ds: f64, seed: u64) -> Result<Vec<f64>> {
    cap("paths", n_paths, MAX_PATHS)?;
    let s = survival_times();
    let est = survival_curve(kappa, std::f64::consts::PI, &s, n_paths, ds, seed)?;
    let rate = fit_exponential(&s, &est.probs).map_or(f64::NAN, |f| -f.slope);
    let mut out = vec![rate, hull_exponent(kappa)];
    out.extend(est.probs);
    Ok(out)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = tracePoints)]
pub fn trace_points_js(kappa: f64, horizon: f64, steps: u32, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(trace_points(kappa, horizon, steps as usize, seed as u64))
}

#[wasm_bindgen(js_name = spectral)]
pub fn spectral_js(kappa: f64, grid: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(spectral(kappa, grid as usize))
}

#[wasm_bindgen(js_name = survival)]
pub fn survival_js(kappa: f64, n_paths: u32, ds: f64, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(survival(kappa, n_paths as usize, ds, seed as u64))
}

#[wasm_bindgen(js_name = survivalTimes)]
pub fn survival_times_js() -> Vec<f64> {
    survival_times()
}
