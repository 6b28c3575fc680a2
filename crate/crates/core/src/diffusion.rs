//! The angular diffusion `dα = √κ dB + ((κ−4)/2)·cot(α/2) ds` on `(0, 2π)`,
//! killed at the boundary.
//!
//! Its survival probability decays like `e^{−(1−κ/8)s}`, which is the
//! one-point hitting exponent of the trace. This module simulates the
//! diffusion, measures the decay rate, and checks the explicit eigenfunction
//! `sin(x/2)^{8/κ−1}` of the generator both pointwise (finite-difference
//! residual) and spectrally (inverse iteration on the discretized
//! generator).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, SleError};
use crate::rng::{path_rng, rng_from_seed};

const TWO_PI: f64 = 2.0 * PI;

/// Default Euler step for exponent fits.
pub const DEFAULT_DS: f64 = 1e-4;

/// Largest drift displacement allowed in one Euler step.
const DRIFT_CAP: f64 = PI / 4.0;

/// `1 − κ/8`, the decay rate of the survival probability.
pub fn hull_exponent(kappa: f64) -> f64 {
    1.0 - kappa / 8.0
}

/// `8/κ − 1`, the power of `sin(x/2)` in the eigenfunction.
pub fn boundary_exponent(kappa: f64) -> f64 {
    8.0 / kappa - 1.0
}

/// The positive eigenfunction `sin(x/2)^{8/κ−1}`.
pub fn eigenfunction(kappa: f64, x: f64) -> f64 {
    (0.5 * x).sin().powf(boundary_exponent(kappa))
}

/// One realization of the angular diffusion.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaPath {
    pub kappa: f64,
    pub alpha0: f64,
    pub ds: f64,
    pub samples: Vec<f64>,
    pub absorbed_at: Option<f64>,
}

/// Euler–Maruyama integrator with absorption on leaving
/// `(ε_b, 2π − ε_b)`, `ε_b = min(10⁻³, √(κ·ds))`.
/// How Euler steps treat the singular drift near the absorbing ends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryScheme {
    /// Fixed step `ds`; killed on leaving `(ε_b, 2π − ε_b)` with
    /// `ε_b = min(10⁻³, √(κ·ds))`. The edge shifts the decay rate by roughly
    /// `ε_b^{8/κ−1}`, which is visible for κ close to 8.
    Fixed,
    /// Each step of length `ds` is split into substeps whose noise is at most
    /// `1/GRADED_RESOLUTION` of the distance to the nearest end; killed within
    /// `GRADED_EDGE` of an end.
    #[default]
    Graded,
}

pub const GRADED_EDGE: f64 = 1e-6;
pub const GRADED_RESOLUTION: f64 = 6.0;

#[derive(Clone, Copy, Debug)]
struct AlphaStepper {
    kappa: f64,
    drift_coef: f64,
    ds: f64,
    edge: f64,
    graded: bool,
}

impl AlphaStepper {
    fn new(kappa: f64, ds: f64, scheme: BoundaryScheme) -> Self {
        let (edge, graded) = match scheme {
            BoundaryScheme::Fixed => (1e-3_f64.min((kappa * ds).sqrt()), false),
            BoundaryScheme::Graded => (GRADED_EDGE, true),
        };
        Self { kappa, drift_coef: 0.5 * (kappa - 4.0), ds, edge, graded }
    }

    #[inline]
    fn euler<R: Rng + ?Sized>(&self, alpha: f64, h: f64, rng: &mut R) -> f64 {
        let half = 0.5 * alpha;
        let drift = (self.drift_coef * half.cos() / half.sin() * h).clamp(-DRIFT_CAP, DRIFT_CAP);
        let z: f64 = rng.sample(StandardNormal);
        alpha + drift + (self.kappa * h).sqrt() * z
    }

    /// Advances by `ds`. Returns the new angle, or the elapsed fraction of
    /// the step at which the path was absorbed.
    #[inline]
    fn step<R: Rng + ?Sized>(&self, alpha: f64, rng: &mut R) -> std::result::Result<f64, f64> {
        let (lo, hi) = (self.edge, TWO_PI - self.edge);
        if !self.graded {
            let next = self.euler(alpha, self.ds, rng);
            return if next <= lo || next >= hi { Err(1.0) } else { Ok(next) };
        }
        let scale = 1.0 / (GRADED_RESOLUTION * GRADED_RESOLUTION * self.kappa);
        let mut a = alpha;
        let mut t = 0.0;
        while t < self.ds {
            let d = a.min(TWO_PI - a);
            let h = (self.ds - t).min(d * d * scale);
            a = self.euler(a, h, rng);
            t += h;
            if a <= lo || a >= hi {
                return Err(t / self.ds);
            }
        }
        Ok(a)
    }

    /// Runs until absorption or `s_max`; returns the absorption time.
    fn absorption_time<R: Rng + ?Sized>(&self, alpha0: f64, s_max: f64, rng: &mut R) -> Option<f64> {
        let n = steps_for(s_max, self.ds);
        let mut alpha = alpha0;
        for k in 1..=n {
            match self.step(alpha, rng) {
                Ok(a) => alpha = a,
                Err(frac) => return Some((k as f64 - 1.0 + frac) * self.ds),
            }
        }
        None
    }

    /// Angle at each requested time (ascending), `None` once absorbed.
    fn angles_at<R: Rng + ?Sized>(&self, alpha0: f64, times: &[f64], rng: &mut R) -> Vec<Option<f64>> {
        let mut out = Vec::with_capacity(times.len());
        let mut alpha = alpha0;
        let mut k = 0usize;
        for &s in times {
            let target = steps_for(s, self.ds);
            while k < target {
                match self.step(alpha, rng) {
                    Ok(a) => alpha = a,
                    Err(_) => {
                        out.resize(times.len(), None);
                        return out;
                    }
                }
                k += 1;
            }
            out.push(Some(alpha));
        }
        out
    }
}

fn steps_for(s: f64, ds: f64) -> usize {
    // tolerate s/ds landing a hair below an integer
    (s / ds - 1e-9).ceil().max(0.0) as usize
}

fn check_alpha0(alpha0: f64) -> Result<()> {
    if !(alpha0 > 0.0 && alpha0 < TWO_PI) {
        return param(format!("alpha0 must lie in (0, 2π), got {alpha0}"));
    }
    Ok(())
}

fn check_kappa_ds(kappa: f64, ds: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return param(format!("kappa must be positive, got {kappa}"));
    }
    if !(ds > 0.0) || !ds.is_finite() {
        return param(format!("ds must be positive, got {ds}"));
    }
    Ok(())
}

/// Simulates one path up to `s_max`, recording every step.
pub fn simulate_alpha(kappa: f64, alpha0: f64, s_max: f64, ds: f64, seed: u64) -> Result<AlphaPath> {
    check_kappa_ds(kappa, ds)?;
    check_alpha0(alpha0)?;
    if !(s_max >= 0.0) {
        return param(format!("s_max must be nonnegative, got {s_max}"));
    }
    let stepper = AlphaStepper::new(kappa, ds, BoundaryScheme::default());
    let mut rng = rng_from_seed(seed);
    let n = steps_for(s_max, ds);
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(alpha0);
    let mut alpha = alpha0;
    let mut absorbed_at = None;
    for k in 1..=n {
        match stepper.step(alpha, &mut rng) {
            Ok(a) => {
                alpha = a;
                samples.push(a);
            }
            Err(frac) => {
                samples.push(if alpha < PI { 0.0 } else { TWO_PI });
                absorbed_at = Some((k as f64 - 1.0 + frac) * ds);
                break;
            }
        }
    }
    Ok(AlphaPath { kappa, alpha0, ds, samples, absorbed_at })
}

/// Ensemble survival probabilities `P(S > s)` on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub s_grid: Vec<f64>,
    pub probs: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub n_paths: usize,
}

impl SurvivalEstimate {
    /// CSV with header `s,prob,stderr`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,prob,stderr")?;
        for ((s, p), e) in self.s_grid.iter().zip(&self.probs).zip(&self.stderrs) {
            writeln!(out, "{s},{p},{e}")?;
        }
        Ok(())
    }
}

pub(crate) fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Absorption times of `n_paths` independent paths (`None` = survived to
/// `s_max`), in path-index order.
pub fn absorption_times(
    kappa: f64,
    alpha0: f64,
    s_max: f64,
    n_paths: usize,
    ds: f64,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    absorption_times_with(kappa, alpha0, s_max, n_paths, ds, seed, BoundaryScheme::default())
}

pub fn absorption_times_with(
    kappa: f64,
    alpha0: f64,
    s_max: f64,
    n_paths: usize,
    ds: f64,
    seed: u64,
    scheme: BoundaryScheme,
) -> Result<Vec<Option<f64>>> {
    check_kappa_ds(kappa, ds)?;
    check_alpha0(alpha0)?;
    let stepper = AlphaStepper::new(kappa, ds, scheme);
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| stepper.absorption_time(alpha0, s_max, &mut path_rng(seed, i)))
        .collect())
}

pub fn survival_curve(
    kappa: f64,
    alpha0: f64,
    s_grid: &[f64],
    n_paths: usize,
    ds: f64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    survival_curve_with(kappa, alpha0, s_grid, n_paths, ds, seed, BoundaryScheme::default())
}

pub fn survival_curve_with(
    kappa: f64,
    alpha0: f64,
    s_grid: &[f64],
    n_paths: usize,
    ds: f64,
    seed: u64,
    scheme: BoundaryScheme,
) -> Result<SurvivalEstimate> {
    if s_grid.is_empty() {
        return param("survival grid is empty");
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || s_grid[0] < 0.0 {
        return param("survival grid must be nonnegative and strictly increasing");
    }
    if n_paths == 0 {
        return param("n_paths must be at least 1");
    }
    let s_max = *s_grid.last().unwrap();
    let times = absorption_times_with(kappa, alpha0, s_max, n_paths, ds, seed, scheme)?;
    let probs: Vec<f64> = s_grid
        .iter()
        .map(|&s| {
            let alive = times.iter().filter(|t| t.is_none_or(|t| t > s)).count();
            alive as f64 / n_paths as f64
        })
        .collect();
    let stderrs = probs.iter().map(|&p| binomial_stderr(p, n_paths)).collect();
    Ok(SurvivalEstimate { s_grid: s_grid.to_vec(), probs, stderrs, n_paths })
}

/// Max finite-difference residual of `(κ/2)φ″ + ((κ−4)/2)cot(x/2)φ′ +
/// (1 − κ/8)φ` for `φ = sin(x/2)^{8/κ−1}`, over grid points in
/// `[π/8, 2π − π/8]` of the interior grid `x_i = i·2π/(grid_size + 1)`.
pub fn eigenfunction_residual(kappa: f64, grid_size: usize) -> Result<f64> {
    if !(kappa > 0.0) {
        return param(format!("kappa must be positive, got {kappa}"));
    }
    if grid_size < 16 {
        return param(format!("grid_size must be at least 16, got {grid_size}"));
    }
    let h = TWO_PI / (grid_size + 1) as f64;
    let lambda = hull_exponent(kappa);
    let drift = 0.5 * (kappa - 4.0);
    let lo = PI / 8.0;
    let hi = TWO_PI - PI / 8.0;
    let mut worst = 0.0_f64;
    for i in 1..=grid_size {
        let x = i as f64 * h;
        if x < lo || x > hi {
            continue;
        }
        let (fm, f0, fp) = (eigenfunction(kappa, x - h), eigenfunction(kappa, x), eigenfunction(kappa, x + h));
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        let d1 = (fp - fm) / (2.0 * h);
        let cot = (0.5 * x).cos() / (0.5 * x).sin();
        let r = 0.5 * kappa * d2 + drift * cot * d1 + lambda * f0;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub lambda_hat: f64,
    pub grid_size: usize,
    /// Positive, max-normalized, on `x_i = i·2π/(grid_size + 1)`.
    pub eigenvector: Vec<f64>,
}

impl SpectralResult {
    pub fn grid(&self) -> Vec<f64> {
        let h = TWO_PI / (self.grid_size + 1) as f64;
        (1..=self.grid_size).map(|i| i as f64 * h).collect()
    }
}

/// Nonsymmetric tridiagonal matrix stored by diagonals.
struct Tridiagonal {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl Tridiagonal {
    /// Thomas elimination; returns `None` on a vanishing pivot.
    fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 {
            return None;
        }
        c[0] = self.sup[0] / pivot;
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            c[i] = if i + 1 < n { self.sup[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - self.sub[i] * d[i - 1]) / pivot;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        Some(x)
    }
}

/// How the generator is turned into a tridiagonal matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Central differences for `φ″` and `φ′`. Second order for smooth
    /// eigenfunctions, but only `O(h^{8/κ−1})` when the eigenfunction has a
    /// root singularity at the boundary (`4 < κ < 8`).
    CentralDifference,
    /// Finite volumes in divergence form `Lφ = (pφ′)′/m`, with the face
    /// fluxes integrated against the scale density `1/p`. The boundary
    /// behavior `φ ~ x^{8/κ−1}` carries constant flux, so the scheme
    /// stays accurate for every `κ < 8`.
    ScaleFunction,
}

/// Central-difference discretization of `−L` with Dirichlet ends.
fn central_difference_generator(kappa: f64, grid_size: usize) -> Tridiagonal {
    let h = TWO_PI / (grid_size + 1) as f64;
    let diff = 0.5 * kappa / (h * h);
    let mut sub = vec![0.0; grid_size];
    let mut diag = vec![0.0; grid_size];
    let mut sup = vec![0.0; grid_size];
    for i in 0..grid_size {
        let x = (i + 1) as f64 * h;
        let b = 0.5 * (kappa - 4.0) * (0.5 * x).cos() / (0.5 * x).sin();
        sub[i] = -diff + b / (2.0 * h);
        diag[i] = 2.0 * diff;
        sup[i] = -diff - b / (2.0 * h);
    }
    Tridiagonal { sub, diag, sup }
}

// 8-point Gauss–Legendre on [0, 1]
const GL_NODES: [f64; 8] = [
    0.019_855_071_751_231_856,
    0.101_666_761_293_186_63,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_825,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.050_614_268_145_188_13,
    0.111_190_517_226_687_24,
    0.156_853_322_938_943_64,
    0.181_341_891_689_181,
    0.181_341_891_689_181,
    0.156_853_322_938_943_64,
    0.111_190_517_226_687_24,
    0.050_614_268_145_188_13,
];

fn gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let w = b - a;
    GL_NODES
        .iter()
        .zip(&GL_WEIGHTS)
        .map(|(x, wt)| wt * f(a + w * x))
        .sum::<f64>()
        * w
}

/// `∫_0^h sin(x/2)^e dx` for `e > −1`, by the substitution `x = h·u^{1/(e+1)}`
/// which absorbs the `x^e` endpoint behavior.
fn boundary_power_integral(e: f64, h: f64) -> f64 {
    let q = e + 1.0;
    // sin(x/2)^e = (x/2)^e · sinc^e, and ∫_0^h (x/2)^e dx = h·(h/2)^e / q
    let sinc_pow = |x: f64| {
        let half = 0.5 * x;
        if half == 0.0 { 1.0 } else { (half.sin() / half).powf(e) }
    };
    let scale = h * (0.5 * h).powf(e) / q;
    scale * gauss(|u: f64| sinc_pow(h * u.powf(1.0 / q)), 0.0, 1.0)
}

/// Scale-function finite-volume discretization of `−L` with Dirichlet ends.
///
/// With `a = κ/2` and `p(x) = sin(x/2)^{2(κ−4)/κ}` one has `Lφ = (a/p)(pφ′)′`.
/// Node `i` gets speed mass `M_i = ∫ p/a` over its cell, face `i+½` gets
/// resistance `R = ∫ 1/p` between neighboring nodes, and
/// `(Lφ)_i = [(φ_{i+1} − φ_i)/R_{i+½} − (φ_i − φ_{i−1})/R_{i−½}] / M_i`.
/// When `∫_0 1/p` diverges (`κ ≥ 8`) the end faces carry no flux.
fn scale_function_generator(kappa: f64, grid_size: usize) -> Tridiagonal {
    let h = TWO_PI / (grid_size + 1) as f64;
    let a = 0.5 * kappa;
    let e = 2.0 * (kappa - 4.0) / kappa;
    let p = |x: f64| (0.5 * x).sin().powf(e);
    let inv_p = |x: f64| (0.5 * x).sin().powf(-e);
    let n = grid_size;
    // resistances of faces 0..=n, face j between nodes j and j+1 (node 0
    // and node n+1 are the absorbing ends)
    let end_resistance = if -e > -1.0 {
        boundary_power_integral(-e, h)
    } else {
        f64::INFINITY
    };
    let resistance: Vec<f64> = (0..=n)
        .map(|j| {
            if j == 0 || j == n {
                end_resistance
            } else {
                gauss(inv_p, j as f64 * h, (j + 1) as f64 * h)
            }
        })
        .collect();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n {
        let x = (i + 1) as f64 * h;
        let mass = gauss(p, x - 0.5 * h, x + 0.5 * h) / a;
        let left = 1.0 / resistance[i];
        let right = 1.0 / resistance[i + 1];
        sub[i] = -left / mass;
        sup[i] = -right / mass;
        diag[i] = (left + right) / mass;
    }
    Tridiagonal { sub, diag, sup }
}

const MAX_SWEEPS: usize = 10_000;

/// Shift used by the inverse iteration, so that a singular `−L` (κ ≥ 8,
/// eigenvalue 0) is still invertible.
const SHIFT: f64 = 1.0;

/// Smallest-magnitude eigenvalue of `−L` by shifted inverse power iteration
/// on the scale-function discretization.
pub fn leading_eigenvalue(kappa: f64, grid_size: usize) -> Result<SpectralResult> {
    leading_eigenvalue_with(kappa, grid_size, Discretization::ScaleFunction)
}

pub fn leading_eigenvalue_with(
    kappa: f64,
    grid_size: usize,
    scheme: Discretization,
) -> Result<SpectralResult> {
    if !(kappa > 0.0) {
        return param(format!("kappa must be positive, got {kappa}"));
    }
    if grid_size < 64 {
        return param(format!("grid_size must be at least 64, got {grid_size}"));
    }
    let mut m = match scheme {
        Discretization::CentralDifference => central_difference_generator(kappa, grid_size),
        Discretization::ScaleFunction => scale_function_generator(kappa, grid_size),
    };
    m.diag.iter_mut().for_each(|d| *d += SHIFT);
    let h = TWO_PI / (grid_size + 1) as f64;
    // start from a positive bump; the Perron vector is positive
    let mut v: Vec<f64> = (1..=grid_size).map(|i| (0.5 * i as f64 * h).sin()).collect();
    normalize(&mut v);
    let mut mu = f64::NAN;
    for _ in 0..MAX_SWEEPS {
        let w = m
            .solve(&v)
            .ok_or_else(|| SleError::Numerical("singular tridiagonal pivot".into()))?;
        let vw: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let next = vv / vw;
        let mut w = w;
        normalize(&mut w);
        let converged = (next - mu).abs() <= 1e-14 * next.abs();
        mu = next;
        v = w;
        if converged {
            let peak = v.iter().cloned().fold(f64::MIN, f64::max);
            let eigenvector = v.iter().map(|x| x / peak).collect::<Vec<_>>();
            if eigenvector.iter().any(|&x| x <= 0.0) {
                return Err(SleError::Numerical("leading eigenvector is not positive".into()));
            }
            return Ok(SpectralResult { lambda_hat: mu - SHIFT, grid_size, eigenvector });
        }
    }
    Err(SleError::Numerical(format!(
        "inverse iteration did not converge in {MAX_SWEEPS} sweeps"
    )))
}

/// Scales to unit Euclidean norm with a positive sum.
fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    v.iter_mut().for_each(|x| *x *= sign / norm);
}

/// Mean and standard error of `X_s = sin(α_s/2)^{8/κ−1}·e^{(1−κ/8)s}`, with
/// `X_s = 0` on paths absorbed before `s`.
pub fn martingale_expectation(
    kappa: f64,
    alpha0: f64,
    s: f64,
    n_paths: usize,
    ds: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return param(format!("s must be positive, got {s}"));
    }
    Ok(martingale_profile(kappa, alpha0, &[s], n_paths, ds, seed)?[0])
}

/// [`martingale_expectation`] at several times on one ensemble.
pub fn martingale_profile(
    kappa: f64,
    alpha0: f64,
    times: &[f64],
    n_paths: usize,
    ds: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    check_kappa_ds(kappa, ds)?;
    check_alpha0(alpha0)?;
    if n_paths < 2 {
        return param("n_paths must be at least 2");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|&t| !(t >= 0.0)) {
        return param("times must be nonnegative and strictly increasing");
    }
    let paths = survivor_table(kappa, alpha0, times, n_paths, ds, seed);
    let lambda = hull_exponent(kappa);
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let weight = (lambda * s).exp();
            let xs: Vec<f64> = paths
                .iter()
                .map(|p| p[j].map_or(0.0, |a| eigenfunction(kappa, a) * weight))
                .collect();
            mean_stderr(&xs)
        })
        .collect())
}

fn survivor_table(
    kappa: f64,
    alpha0: f64,
    times: &[f64],
    n_paths: usize,
    ds: f64,
    seed: u64,
) -> Vec<Vec<Option<f64>>> {
    let stepper = AlphaStepper::new(kappa, ds, BoundaryScheme::default());
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| stepper.angles_at(alpha0, times, &mut path_rng(seed, i)))
        .collect()
}

/// Angles at time `s` of the paths still alive at `s`.
pub fn survivor_angles(
    kappa: f64,
    alpha0: f64,
    s: f64,
    n_paths: usize,
    ds: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_kappa_ds(kappa, ds)?;
    check_alpha0(alpha0)?;
    Ok(survivor_table(kappa, alpha0, &[s], n_paths, ds, seed)
        .into_iter()
        .filter_map(|p| p[0])
        .collect())
}

pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
