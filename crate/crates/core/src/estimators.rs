//! Hitting-probability Monte Carlo, power-law fits, closed-form one-point
//! quantities and the composition sum behind the second-moment bound.
//!
//! Hitting experiments sample a coarse driving path and then refine it
//! locally (Brownian-bridge bisection) wherever the trace passes near a
//! target, so that distances to the targets are resolved at a fraction of
//! the smallest radius without paying for a fine grid everywhere.

use std::collections::HashMap;
use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{binomial_stderr, hull_exponent};
use crate::error::{param, Result, SleError};
use crate::loewner::{
    refined_trace, sample_driving_with, segment_distance, ComplexPoint, Refinement, TracePath,
};
use crate::rng::path_rng;

/// Least-squares line through `(log x, log y)` (or `(x, log y)` for
/// [`fit_exponential`]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    /// Points used after dropping non-positive entries.
    pub used: usize,
    pub dropped: usize,
}

fn least_squares(xs: &[f64], ys: &[f64], dropped: usize) -> Result<PowerLawFit> {
    let n = xs.len();
    if n < 3 {
        return Err(SleError::Data(format!("need at least 3 usable points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(SleError::Data("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(PowerLawFit { slope, intercept, slope_stderr, r_squared, used: n, dropped })
}

fn usable(xs: &[f64], ys: &[f64], log_x: bool) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    if xs.len() != ys.len() {
        return Err(SleError::Data(format!("{} abscissae but {} ordinates", xs.len(), ys.len())));
    }
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    let mut dropped = 0;
    for (&x, &y) in xs.iter().zip(ys) {
        if y > 0.0 && y.is_finite() && (!log_x || x > 0.0) && x.is_finite() {
            lx.push(if log_x { x.ln() } else { x });
            ly.push(y.ln());
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} non-positive entries before the log fit");
    }
    Ok((lx, ly, dropped))
}

/// Slope of `log y` against `log x`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    let (lx, ly, dropped) = usable(xs, ys, true)?;
    least_squares(&lx, &ly, dropped)
}

/// Slope of `log y` against `x`; a decay `y ∝ e^{−λx}` has slope `−λ`.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    let (lx, ly, dropped) = usable(xs, ys, false)?;
    least_squares(&lx, &ly, dropped)
}

/// Capacity horizon used when none is given: `16·|z|²`.
pub fn default_horizon(z: ComplexPoint) -> f64 {
    16.0 * z.norm_sqr()
}

/// Coarse driving steps per unit capacity time in hitting experiments.
pub const STEPS_PER_UNIT_TIME: f64 = 250.0;

pub fn default_steps(horizon: f64) -> usize {
    (STEPS_PER_UNIT_TIME * horizon).ceil().max(1.0) as usize
}

/// Trace points near a target are refined to `min radius / MESH_RATIO`.
pub const MESH_RATIO: f64 = 5.0;

const MAX_REFINE_DEPTH: u32 = 30;

/// Common geometry of a hitting ensemble.
#[derive(Clone, Debug)]
struct HitSampler {
    kappa: f64,
    horizon: f64,
    steps: usize,
    targets: Vec<ComplexPoint>,
    radius: f64,
    mesh: f64,
}

/// Per-path distances from the trace to each target, and the coarsest
/// trace chord seen within `radius` of any target.
struct HitSample {
    distances: Vec<f64>,
    local_mesh: f64,
}

impl HitSampler {
    fn check(&self, n_paths: usize) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return param(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return param(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.steps == 0 {
            return param("steps must be at least 1");
        }
        if n_paths == 0 {
            return param("n_paths must be at least 1");
        }
        Ok(())
    }

    fn sample(&self, master_seed: u64, index: u64) -> HitSample {
        let mut rng = path_rng(master_seed, index);
        let driving = sample_driving_with(self.kappa, self.horizon, self.steps, &mut rng);
        let refine = Refinement::near(self.targets.clone(), self.radius, self.mesh, MAX_REFINE_DEPTH);
        let trace = refined_trace(&driving, &refine, &mut rng);
        let distances = self.targets.iter().map(|&z| crate::loewner::trace_distance(&trace, z)).collect();
        HitSample { distances, local_mesh: self.local_mesh(&trace) }
    }

    fn local_mesh(&self, trace: &TracePath) -> f64 {
        trace
            .points
            .windows(2)
            .filter(|w| self.targets.iter().any(|&z| segment_distance(w[0], w[1], z) <= self.radius))
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    fn run(&self, n_paths: usize, master_seed: u64) -> Vec<HitSample> {
        (0..n_paths as u64).into_par_iter().map(|i| self.sample(master_seed, i)).collect()
    }
}

fn check_interior(z: ComplexPoint, what: &str) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return param(format!("{what} must lie in the open upper half-plane, got {z}"));
    }
    Ok(())
}

fn check_radii(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return param("eps list is empty");
    }
    if eps_list.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return param("every eps must be positive");
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return param("eps list must be strictly decreasing");
    }
    Ok(())
}

fn frequencies(hits: &[usize], n: usize) -> (Vec<f64>, Vec<f64>) {
    let probs: Vec<f64> = hits.iter().map(|&h| h as f64 / n as f64).collect();
    let stderrs = probs.iter().map(|&p| binomial_stderr(p, n)).collect();
    (probs, stderrs)
}

fn warn_mesh(local_mesh: f64, eps_min: f64) {
    if local_mesh * MESH_RATIO > eps_min {
        warn!(
            "trace mesh near the target is {local_mesh:.3e}, more than 1/{MESH_RATIO} of the smallest eps {eps_min:.3e}"
        );
    }
}

/// One-point hitting frequencies `P(dist(z0, γ[0,T]) ≤ ε)` on one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub z0: ComplexPoint,
    pub kappa: f64,
    pub eps_list: Vec<f64>,
    pub probs: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub n_paths: usize,
    pub horizon: f64,
    pub steps: usize,
    /// Longest trace chord observed within `max eps` of `z0`.
    pub local_mesh: f64,
}

impl HittingEstimate {
    /// Fit of `prob` against `eps`; the slope estimates `1 − κ/8`.
    pub fn fit(&self) -> Result<PowerLawFit> {
        fit_power_law(&self.eps_list, &self.probs)
    }

    /// CSV with header `eps,prob,stderr`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "eps,prob,stderr")?;
        for ((e, p), s) in self.eps_list.iter().zip(&self.probs).zip(&self.stderrs) {
            writeln!(out, "{e:.16e},{p:.16e},{s:.16e}")?;
        }
        Ok(())
    }
}

pub fn hitting_probability_mc(
    z0: ComplexPoint,
    eps_list: &[f64],
    kappa: f64,
    n_paths: usize,
    horizon: f64,
    steps: usize,
    master_seed: u64,
) -> Result<HittingEstimate> {
    check_interior(z0, "z0")?;
    check_radii(eps_list)?;
    if eps_list[0] >= z0.im {
        return param(format!("eps {} must be below Im z0 = {}", eps_list[0], z0.im));
    }
    let eps_min = *eps_list.last().unwrap();
    let sampler = HitSampler {
        kappa,
        horizon,
        steps,
        targets: vec![z0],
        radius: eps_list[0],
        mesh: eps_min / MESH_RATIO,
    };
    sampler.check(n_paths)?;
    let samples = sampler.run(n_paths, master_seed);
    let hits: Vec<usize> = eps_list
        .iter()
        .map(|&e| samples.iter().filter(|s| s.distances[0] <= e).count())
        .collect();
    let local_mesh = samples.iter().map(|s| s.local_mesh).fold(0.0, f64::max);
    warn_mesh(local_mesh, eps_min);
    let (probs, stderrs) = frequencies(&hits, n_paths);
    Ok(HittingEstimate {
        z0,
        kappa,
        eps_list: eps_list.to_vec(),
        probs,
        stderrs,
        n_paths,
        horizon,
        steps,
        local_mesh,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglePoint {
    pub angle: f64,
    pub prob: f64,
    pub stderr: f64,
}

/// Hitting probability of `B(modulus·e^{iα}, eps)` for each angle, all on
/// one ensemble.
#[allow(clippy::too_many_arguments)]
pub fn angle_profile(
    kappa: f64,
    modulus: f64,
    angles: &[f64],
    eps: f64,
    n_paths: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
) -> Result<Vec<AnglePoint>> {
    if angles.is_empty() {
        return param("angle list is empty");
    }
    if angles.iter().any(|&a| !(a > 0.0 && a < PI)) {
        return param("angles must lie in (0, π)");
    }
    if !(modulus > 0.0) {
        return param(format!("modulus must be positive, got {modulus}"));
    }
    check_radii(&[eps])?;
    let min_im = angles.iter().map(|a| modulus * a.sin()).fold(f64::INFINITY, f64::min);
    if eps >= min_im {
        return param(format!("eps {eps} must be below the smallest Im z0 = {min_im}"));
    }
    let targets: Vec<ComplexPoint> = angles.iter().map(|&a| Complex64::from_polar(modulus, a)).collect();
    let sampler = HitSampler { kappa, horizon, steps, targets, radius: eps, mesh: eps / MESH_RATIO };
    sampler.check(n_paths)?;
    let samples = sampler.run(n_paths, seed);
    warn_mesh(samples.iter().map(|s| s.local_mesh).fold(0.0, f64::max), eps);
    Ok(angles
        .iter()
        .enumerate()
        .map(|(j, &angle)| {
            let hits = samples.iter().filter(|s| s.distances[j] <= eps).count();
            let prob = hits as f64 / n_paths as f64;
            AnglePoint { angle, prob, stderr: binomial_stderr(prob, n_paths) }
        })
        .collect())
}

/// Joint and marginal hitting frequencies of `z` with each partner point,
/// for each radius, all on one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointEstimate {
    pub z: ComplexPoint,
    pub partners: Vec<ComplexPoint>,
    pub kappa: f64,
    pub eps_list: Vec<f64>,
    /// `joint[p][e]`: both `z` and partner `p` within `eps_list[e]`.
    pub joint: Vec<Vec<f64>>,
    pub joint_stderr: Vec<Vec<f64>>,
    /// Per radius, the frequency for `z` alone.
    pub marginal_z: Vec<f64>,
    /// `marginal_partner[p][e]`.
    pub marginal_partner: Vec<Vec<f64>>,
    pub n_paths: usize,
    pub horizon: f64,
    pub steps: usize,
    pub local_mesh: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn two_point_table(
    z: ComplexPoint,
    partners: &[ComplexPoint],
    eps_list: &[f64],
    kappa: f64,
    n_paths: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
) -> Result<TwoPointEstimate> {
    check_interior(z, "z")?;
    if partners.is_empty() {
        return param("partner list is empty");
    }
    for &p in partners {
        check_interior(p, "partner point")?;
    }
    check_radii(eps_list)?;
    let eps_max = eps_list[0];
    for &p in partners {
        if eps_max >= 0.5 * (z - p).norm() {
            return param(format!("eps {eps_max} must be below |z − z′|/2 = {}", 0.5 * (z - p).norm()));
        }
        if eps_max >= p.im.min(z.im) {
            return param(format!("eps {eps_max} must be below the imaginary parts of both points"));
        }
    }
    let eps_min = *eps_list.last().unwrap();
    let mut targets = vec![z];
    targets.extend_from_slice(partners);
    let sampler = HitSampler { kappa, horizon, steps, targets, radius: eps_max, mesh: eps_min / MESH_RATIO };
    sampler.check(n_paths)?;
    let samples = sampler.run(n_paths, seed);
    let local_mesh = samples.iter().map(|s| s.local_mesh).fold(0.0, f64::max);
    warn_mesh(local_mesh, eps_min);
    let count = |pred: &dyn Fn(&HitSample, f64) -> bool| -> Vec<usize> {
        eps_list.iter().map(|&e| samples.iter().filter(|s| pred(s, e)).count()).collect()
    };
    let marginal_z = frequencies(&count(&|s, e| s.distances[0] <= e), n_paths).0;
    let mut joint = Vec::new();
    let mut joint_stderr = Vec::new();
    let mut marginal_partner = Vec::new();
    for j in 1..=partners.len() {
        let (p, s) = frequencies(&count(&|s, e| s.distances[0] <= e && s.distances[j] <= e), n_paths);
        joint.push(p);
        joint_stderr.push(s);
        marginal_partner.push(frequencies(&count(&|s, e| s.distances[j] <= e), n_paths).0);
    }
    Ok(TwoPointEstimate {
        z,
        partners: partners.to_vec(),
        kappa,
        eps_list: eps_list.to_vec(),
        joint,
        joint_stderr,
        marginal_z,
        marginal_partner,
        n_paths,
        horizon,
        steps,
        local_mesh,
    })
}

/// Frequency of the trace passing within `eps` of both `z` and `zp`.
#[allow(clippy::too_many_arguments)]
pub fn two_point_mc(
    z: ComplexPoint,
    zp: ComplexPoint,
    eps: f64,
    kappa: f64,
    n_paths: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let t = two_point_table(z, &[zp], &[eps], kappa, n_paths, horizon, steps, seed)?;
    Ok((t.joint[0][0], t.joint_stderr[0][0]))
}

/// Harmonic measure of the positive half-axis seen from `z`:
/// `1/2 + arctan(x/y)/π`.
pub fn harmonic_measure_pos_axis(z: ComplexPoint) -> Result<f64> {
    check_interior(z, "z")?;
    Ok(0.5 + (z.re / z.im).atan() / PI)
}

/// `min(ω, 1 − ω)` for `ω` the harmonic measure of the positive half-axis;
/// comparable to `sin(arg z)`.
pub fn min_side_measure(z: ComplexPoint) -> Result<f64> {
    let w = harmonic_measure_pos_axis(z)?;
    Ok(w.min(1.0 - w))
}

/// One-point function `Im(z)^{κ/8−1}·sin(arg z)^{8/κ−1}` with unit
/// prefactor.
pub fn phi1(z: ComplexPoint, kappa: f64) -> Result<f64> {
    check_interior(z, "z")?;
    if !(kappa > 0.0 && kappa < 8.0) {
        return param(format!("phi1 needs 0 < kappa < 8, got {kappa}"));
    }
    let sin_arg = z.im / z.norm();
    Ok(z.im.powf(kappa / 8.0 - 1.0) * sin_arg.powf(8.0 / kappa - 1.0))
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Cell values of the occupation density, row-major from the bottom-left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub window: Window,
    pub cells: usize,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn cell_center(&self, row: usize, col: usize) -> ComplexPoint {
        let w = &self.window;
        let dx = (w.x1 - w.x0) / self.cells as f64;
        let dy = (w.y1 - w.y0) / self.cells as f64;
        Complex64::new(w.x0 + (col as f64 + 0.5) * dx, w.y0 + (row as f64 + 0.5) * dy)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cells + col]
    }

    /// `Σ value · cell area`.
    pub fn total_mass(&self) -> f64 {
        let cell_area = self.window.area() / (self.cells * self.cells) as f64;
        self.values.iter().sum::<f64>() * cell_area
    }
}

/// Sample points per cell side in [`occupation_density`].
pub const DENSITY_SUBSAMPLES: usize = 4;

/// Bucket grid over trace points for radius queries.
struct PointBuckets {
    size: f64,
    buckets: HashMap<(i64, i64), Vec<ComplexPoint>>,
}

impl PointBuckets {
    fn key(&self, z: ComplexPoint) -> (i64, i64) {
        ((z.re / self.size).floor() as i64, (z.im / self.size).floor() as i64)
    }

    fn within(&self, z: ComplexPoint, r: f64) -> bool {
        let (i, j) = self.key(z);
        let r2 = r * r;
        (i - 1..=i + 1).any(|a| {
            (j - 1..=j + 1).any(|b| {
                self.buckets
                    .get(&(a, b))
                    .is_some_and(|pts| pts.iter().any(|p| (p - z).norm_sqr() <= r2))
            })
        })
    }
}

/// Density `ε^{−s}·1{dist(z, γ) ≤ ε}` averaged over each cell of a
/// `cells × cells` partition of `window`, with `s = 1 − κ/8` from the trace.
pub fn occupation_density(trace: &TracePath, eps: f64, window: Window, cells: usize) -> Result<DensityGrid> {
    if !(eps > 0.0) || !eps.is_finite() {
        return param(format!("eps must be positive, got {eps}"));
    }
    if !(window.x1 > window.x0 && window.y1 > window.y0) || !window.area().is_finite() {
        return param("window is degenerate");
    }
    if !(window.y0 > 0.0) {
        return param("window must lie in the open upper half-plane");
    }
    if cells == 0 {
        return param("cells must be at least 1");
    }
    let mut buckets = PointBuckets { size: eps, buckets: HashMap::new() };
    for &p in &trace.points {
        if p.re >= window.x0 - eps && p.re <= window.x1 + eps && p.im >= window.y0 - eps && p.im <= window.y1 + eps {
            let k = buckets.key(p);
            buckets.buckets.entry(k).or_default().push(p);
        }
    }
    let weight = eps.powf(-hull_exponent(trace.kappa));
    let sub = DENSITY_SUBSAMPLES;
    let dx = (window.x1 - window.x0) / (cells * sub) as f64;
    let dy = (window.y1 - window.y0) / (cells * sub) as f64;
    let mut values = vec![0.0; cells * cells];
    if buckets.buckets.is_empty() {
        return Ok(DensityGrid { window, cells, values });
    }
    for row in 0..cells {
        for col in 0..cells {
            let mut inside = 0usize;
            for a in 0..sub {
                for b in 0..sub {
                    let z = Complex64::new(
                        window.x0 + ((col * sub + b) as f64 + 0.5) * dx,
                        window.y0 + ((row * sub + a) as f64 + 0.5) * dy,
                    );
                    if buckets.within(z, eps) {
                        inside += 1;
                    }
                }
            }
            values[row * cells + col] = weight * inside as f64 / (sub * sub) as f64;
        }
    }
    Ok(DensityGrid { window, cells, values })
}

/// Ordered pair `(m, l)` of equal length with `Σm = k1`, `Σl = k2`, all
/// parts positive except possibly `m[0]` and `l[last]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionPair {
    pub m: Vec<u32>,
    pub l: Vec<u32>,
}

impl CompositionPair {
    /// `Σ_{i<I} (l_1 + … + l_i)`, the total of the partial sums of `l`
    /// excluding the full sum.
    pub fn l_plus(&self) -> u64 {
        partial_sum_total(&self.l)
    }
}

fn partial_sum_total(l: &[u32]) -> u64 {
    let mut acc = 0u64;
    let mut total = 0u64;
    for &x in &l[..l.len().saturating_sub(1)] {
        acc += x as u64;
        total += acc;
    }
    total
}

/// Default cap on the number of pairs visited by [`partition_sum`].
pub const PARTITION_BUDGET: u64 = 10_000_000;

/// All compositions of `total` into `parts` parts, each ≥ 1 except that
/// the part at `free` (if any) may be 0.
fn compositions(total: u32, parts: usize, free: Option<usize>) -> Vec<Vec<u32>> {
    fn go(total: u32, idx: usize, parts: usize, free: Option<usize>, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let min_of = |i: usize| if Some(i) == free { 0 } else { 1 };
        if idx == parts - 1 {
            if total >= min_of(idx) {
                cur.push(total);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let rest_min: u32 = (idx + 1..parts).map(min_of).sum();
        let lo = min_of(idx);
        if total < lo + rest_min {
            return;
        }
        for x in lo..=total - rest_min {
            cur.push(x);
            go(total - x, idx + 1, parts, free, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(total, 0, parts, free, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of admissible pairs of length `parts`: `C(k1, I−1)·C(k2, I−1)`.
fn pairs_of_length(k1: u32, k2: u32, parts: u64) -> u64 {
    binomial(k1 as u64, parts - 1).saturating_mul(binomial(k2 as u64, parts - 1))
}

fn check_partition_args(k1: u32, k2: u32, a: f64, c: f64, exps: [f64; 3]) -> Result<()> {
    if k1 == 0 || k2 == 0 {
        return param("k1 and k2 must be at least 1");
    }
    if !(a > 0.0 && a < 1.0) {
        return param(format!("a must lie in (0, 1), got {a}"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return param(format!("c must be positive, got {c}"));
    }
    if exps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return param("exponents must be positive");
    }
    Ok(())
}

/// Every admissible pair for `(k1, k2)`, by length.
pub fn composition_pairs(k1: u32, k2: u32, budget: u64) -> Result<Vec<CompositionPair>> {
    let count: u64 = (1..=k1.min(k2) as u64 + 1).map(|i| pairs_of_length(k1, k2, i)).sum();
    if count > budget {
        return Err(SleError::Resource(format!("{count} composition pairs exceed the budget of {budget}")));
    }
    let mut out = Vec::with_capacity(count as usize);
    for parts in 1..=k1.min(k2) as usize + 1 {
        let ms = compositions(k1, parts, Some(0));
        let ls = compositions(k2, parts, Some(parts - 1));
        for m in &ms {
            for l in &ls {
                out.push(CompositionPair { m: m.clone(), l: l.clone() });
            }
        }
    }
    Ok(out)
}

/// `Σ a^{α·Σm + β·Σl + γ·l⁺}·c^{|l|}` over all admissible pairs, with the
/// default budget.
pub fn partition_sum(k1: u32, k2: u32, a: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    partition_sum_with_budget(k1, k2, a, c, alpha, beta, gamma, PARTITION_BUDGET)
}

/// Enumerates the compositions of each length explicitly. Since the weight
/// of a pair is a product of an `m` factor and an `l` factor, the sum over
/// pairs of a given length is the product of the two one-sided sums; the
/// budget still counts pairs.
#[allow(clippy::too_many_arguments)]
pub fn partition_sum_with_budget(
    k1: u32,
    k2: u32,
    a: f64,
    c: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    budget: u64,
) -> Result<f64> {
    check_partition_args(k1, k2, a, c, [alpha, beta, gamma])?;
    let max_parts = k1.min(k2) as u64 + 1;
    let count: u64 = (1..=max_parts).map(|i| pairs_of_length(k1, k2, i)).sum();
    if count > budget {
        return Err(SleError::Resource(format!("{count} composition pairs exceed the budget of {budget}")));
    }
    let ln_a = a.ln();
    let mut total = 0.0;
    for parts in 1..=max_parts as usize {
        let m_sum: f64 = compositions(k1, parts, Some(0))
            .iter()
            .map(|m| (alpha * m.iter().map(|&x| x as f64).sum::<f64>() * ln_a).exp())
            .sum();
        let l_sum: f64 = compositions(k2, parts, Some(parts - 1))
            .iter()
            .map(|l| {
                let s: f64 = l.iter().map(|&x| x as f64).sum();
                ((beta * s + gamma * partial_sum_total(l) as f64) * ln_a).exp()
            })
            .sum();
        total += c.powi(parts as i32) * m_sum * l_sum;
    }
    Ok(total)
}
