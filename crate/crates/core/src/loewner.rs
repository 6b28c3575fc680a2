//! Discretized chordal Loewner evolution.
//!
//! The driving function is frozen on each step of a capacity-time grid, so
//! every step is an exact vertical slit map
//!
//! ```text
//! g ↦ w + √((g − w)² + 4·dt)
//! ```
//!
//! with the square root taken in the closed upper half-plane. Trace points
//! come from composing the inverse slit maps from the current step back to
//! time zero (the zipper composition), interior points are pushed forward
//! through the same maps while accumulating `log|g′|`.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Result, SleError};
use crate::rng::rng_from_seed;

/// A location in the closed upper half-plane.
pub type ComplexPoint = Complex64;

/// Swallowing threshold in units of `√dt`.
pub const SWALLOW_TOL: f64 = 1e-6;

/// Relative size of `Im` below which an image counts as lying on the real
/// axis.
pub const AXIS_TOL: f64 = 1e-14;

/// Square root with nonnegative imaginary part.
///
/// Arguments on the positive real axis (the cut) resolve to the
/// nonnegative real root.
#[inline]
pub fn sqrt_upper(z: Complex64) -> Complex64 {
    let (x, y) = sqrt_upper_parts(z.re, z.im);
    Complex64::new(x, y)
}

// Branch-free so that batched lanes vectorize.
#[inline(always)]
fn sqrt_upper_parts(a: f64, b: f64) -> (f64, f64) {
    let r = (a * a + b * b).sqrt();
    let s = ((r + a.abs()) * 0.5).sqrt().max(f64::MIN_POSITIVE);
    let q = b / (2.0 * s);
    if a >= 0.0 {
        (s.copysign(b), q.abs())
    } else {
        (q, s)
    }
}

/// One forward step of the Loewner flow with driving frozen at `dw`.
#[inline]
pub fn slit_map_forward(z: ComplexPoint, dt: f64, dw: f64) -> ComplexPoint {
    let u = z - dw;
    dw + sqrt_upper(u * u + 4.0 * dt)
}

/// Inverse of [`slit_map_forward`]: grows a vertical slit of height
/// `2√dt` above `dw`.
#[inline]
pub fn slit_map_inverse(w: ComplexPoint, dt: f64, dw: f64) -> ComplexPoint {
    let u = w - dw;
    dw + sqrt_upper(u * u - 4.0 * dt)
}

/// Driving function `√κ·B` sampled on a uniform capacity-time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingPath {
    kappa: f64,
    dt: f64,
    values: Vec<f64>,
    /// Whether [`refined_trace`] fills in steps with Brownian bridges
    /// (variance `κ·dt`) or, for deterministic paths, linear interpolation.
    brownian: bool,
}

impl DrivingPath {
    /// Wraps an explicit realization. `values[0]` must be 0.
    pub fn new(kappa: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return param(format!("kappa must be positive, got {kappa}"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return param(format!("dt must be positive, got {dt}"));
        }
        if values.is_empty() {
            return param("driving path needs at least one value");
        }
        if values[0] != 0.0 {
            return param("driving path must start at 0");
        }
        if values.iter().any(|w| !w.is_finite()) {
            return param("driving values must be finite");
        }
        Ok(Self { kappa, dt, values, brownian: true })
    }

    /// The constant driving `W ≡ 0`, whose trace is the segment `[0, 2i√T]`.
    /// Refinement keeps it constant.
    pub fn zero(kappa: f64, horizon: f64, steps: usize) -> Result<Self> {
        check_grid(kappa, horizon, steps)?;
        let mut d = Self::new(kappa, horizon / steps as f64, vec![0.0; steps + 1])?;
        d.brownian = false;
        Ok(d)
    }

    pub fn is_brownian(&self) -> bool {
        self.brownian
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of steps `n` (one less than the number of values).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    /// `W ↦ −W`.
    pub fn reflected(&self) -> Self {
        Self {
            kappa: self.kappa,
            dt: self.dt,
            values: self.values.iter().map(|w| -w).collect(),
            brownian: self.brownian,
        }
    }

    /// `(dt, W) ↦ (λ²·dt, λ·W)`; the trace scales by `λ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            kappa: self.kappa,
            dt: self.dt * lambda * lambda,
            values: self.values.iter().map(|w| w * lambda).collect(),
            brownian: self.brownian,
        }
    }

    /// Subsamples every `factor`-th value (coarser grid, same Brownian path).
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return param(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.steps()
            ));
        }
        Ok(Self {
            kappa: self.kappa,
            dt: self.dt * factor as f64,
            values: self.values.iter().step_by(factor).copied().collect(),
            brownian: self.brownian,
        })
    }
}

fn check_grid(kappa: f64, horizon: f64, steps: usize) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return param(format!("kappa must be positive, got {kappa}"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return param(format!("horizon must be positive, got {horizon}"));
    }
    if steps == 0 {
        return param("steps must be at least 1");
    }
    Ok(())
}

/// Samples `W_k = √κ·B_{t_k}` with i.i.d. `N(0, κ·dt)` increments.
pub fn sample_driving(kappa: f64, horizon: f64, steps: usize, seed: u64) -> Result<DrivingPath> {
    check_grid(kappa, horizon, steps)?;
    let mut rng = rng_from_seed(seed);
    Ok(sample_driving_with(kappa, horizon, steps, &mut rng))
}

pub(crate) fn sample_driving_with<R: Rng + ?Sized>(
    kappa: f64,
    horizon: f64,
    steps: usize,
    rng: &mut R,
) -> DrivingPath {
    let dt = horizon / steps as f64;
    let sd = (kappa * dt).sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        values.push(w);
    }
    DrivingPath { kappa, dt, values, brownian: true }
}

/// Approximate trace `γ(t_k)` of one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct TracePath {
    pub kappa: f64,
    pub times: Vec<f64>,
    pub points: Vec<ComplexPoint>,
}

impl TracePath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest distance between consecutive trace points.
    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|p| (p[1] - p[0]).norm())
            .fold(0.0, f64::max)
    }

    /// Bounding-box diagonal; within a factor `√2` of the true diameter.
    pub fn diameter(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &self.points {
            x0 = x0.min(p.re);
            x1 = x1.max(p.re);
            y0 = y0.min(p.im);
            y1 = y1.max(p.im);
        }
        (x1 - x0).hypot(y1 - y0)
    }

    /// CSV with header `t,re,im`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,re,im")?;
        for (t, p) in self.times.iter().zip(&self.points) {
            writeln!(out, "{t:.16e},{:.16e},{:.16e}", p.re, p.im)?;
        }
        Ok(())
    }
}

/// Applies `h_1 ∘ … ∘ h_k` to `w`, where `steps[j] = (dt_j, W_j)`.
#[inline]
fn unzip(steps: &[(f64, f64)], w: Complex64) -> Complex64 {
    let (mut x, mut y) = (w.re, w.im);
    for &(dt, dw) in steps.iter().rev() {
        let u = x - dw;
        let (sx, sy) = sqrt_upper_parts(u * u - y * y - 4.0 * dt, 2.0 * u * y);
        x = dw + sx;
        y = sy;
    }
    Complex64::new(x, y.max(0.0))
}

const LANES: usize = 16;

/// Unzips `LANES` consecutive trace points at once. Lane `l` starts from
/// the tip of step `k0 + l` and shares every map below `k0` with the other
/// lanes, so the inner loop runs independent chains side by side.
fn unzip_block(steps: &[(f64, f64)], k0: usize) -> [Complex64; LANES] {
    let mut xs = [0.0; LANES];
    let mut ys = [0.0; LANES];
    for l in 0..LANES {
        let z = unzip(&steps[k0..k0 + l], tip(steps[k0 + l]));
        xs[l] = z.re;
        ys[l] = z.im;
    }
    for &(dt, dw) in steps[..k0].iter().rev() {
        for l in 0..LANES {
            let u = xs[l] - dw;
            let y = ys[l];
            let (sx, sy) = sqrt_upper_parts(u * u - y * y - 4.0 * dt, 2.0 * u * y);
            xs[l] = dw + sx;
            ys[l] = sy;
        }
    }
    let mut out = [Complex64::new(0.0, 0.0); LANES];
    for l in 0..LANES {
        out[l] = Complex64::new(xs[l], ys[l].max(0.0));
    }
    out
}

#[inline]
fn tip((dt, w): (f64, f64)) -> Complex64 {
    Complex64::new(w, 2.0 * dt.sqrt())
}

/// Trace points after each step of a (possibly nonuniform) step list,
/// reusing `prefix` for the first `prefix.len() - 1` steps.
fn unzip_all(steps: &[(f64, f64)], mut prefix: Vec<ComplexPoint>) -> Vec<ComplexPoint> {
    if prefix.is_empty() {
        prefix.push(Complex64::new(0.0, 0.0));
    }
    let n = steps.len();
    let mut k0 = prefix.len() - 1;
    prefix.reserve(n + 1 - prefix.len());
    while k0 + LANES <= n {
        prefix.extend_from_slice(&unzip_block(steps, k0));
        k0 += LANES;
    }
    for k in k0..n {
        prefix.push(unzip(&steps[..k], tip(steps[k])));
    }
    prefix
}

/// Trace by inverse slit-map composition; `O(n²)` map evaluations.
pub fn compute_trace(driving: &DrivingPath) -> TracePath {
    let n = driving.steps();
    let steps = driving.step_list();
    TracePath {
        kappa: driving.kappa,
        times: (0..=n).map(|k| driving.time(k)).collect(),
        points: unzip_all(&steps, Vec::new()),
    }
}

impl DrivingPath {
    fn step_list(&self) -> Vec<(f64, f64)> {
        self.values[1..].iter().map(|&w| (self.dt, w)).collect()
    }
}

/// The composed forward map `g_T(z)` (no swallowing checks).
pub fn forward_map(driving: &DrivingPath, z: ComplexPoint) -> ComplexPoint {
    driving.values[1..]
        .iter()
        .fold(z, |g, &w| slit_map_forward(g, driving.dt, w))
}

/// Where [`refined_trace`] is allowed to subdivide steps.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Everywhere,
    /// Steps whose chord passes within `radius + |chord|` of a target.
    Near { targets: Vec<ComplexPoint>, radius: f64 },
}

/// Subdivision policy for [`refined_trace`]: steps in `region` whose chord
/// is longer than `mesh` get split, down to `2^-max_depth` of the base step.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub region: Region,
    pub mesh: f64,
    pub max_depth: u32,
}

impl Refinement {
    pub fn everywhere(mesh: f64, max_depth: u32) -> Self {
        Self { region: Region::Everywhere, mesh, max_depth }
    }

    pub fn near(targets: Vec<ComplexPoint>, radius: f64, mesh: f64, max_depth: u32) -> Self {
        Self { region: Region::Near { targets, radius }, mesh, max_depth }
    }

    fn wants_split(&self, a: ComplexPoint, b: ComplexPoint) -> bool {
        let len = (b - a).norm();
        if len <= self.mesh {
            return false;
        }
        match &self.region {
            Region::Everywhere => true,
            Region::Near { targets, radius } => targets
                .iter()
                .any(|&z| segment_distance(a, b, z) <= radius + len),
        }
    }
}

/// Distance from `z` to the segment `[a, b]`.
pub fn segment_distance(a: ComplexPoint, b: ComplexPoint, z: ComplexPoint) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (a + ab * t - z).norm()
}

const MAX_REFINE_PASSES: usize = 32;
const REFINE_CHUNK: usize = 256;
const NEAR_LEVELS_PER_PASS: u32 = 2;

/// Trace of `driving` with its grid subdivided where `refine` asks for it.
///
/// The base steps are processed in chunks. Within a chunk, trace points are
/// computed, and every offending step of length `dt` is replaced by `2^m`
/// substeps whose driving values come from Brownian-bridge bisection (`m`
/// chosen from the chord length). This repeats until the chunk is clean;
/// points of earlier chunks never depend on later maps, so they are final.
/// The returned times are nonuniform.
pub fn refined_trace<R: Rng + ?Sized>(
    driving: &DrivingPath,
    refine: &Refinement,
    rng: &mut R,
) -> TracePath {
    let noise = if driving.brownian { driving.kappa } else { 0.0 };
    let mut flat: Vec<(f64, f64)> = Vec::with_capacity(driving.steps());
    let mut points = vec![Complex64::new(0.0, 0.0)];
    for chunk in driving.values[1..].chunks(REFINE_CHUNK) {
        let mut pending: Vec<(f64, f64, u32)> = chunk.iter().map(|&w| (driving.dt, w, 0)).collect();
        let base = flat.len();
        for pass in 0.. {
            flat.truncate(base);
            flat.extend(pending.iter().map(|&(dt, w, _)| (dt, w)));
            points.truncate(base + 1);
            points = unzip_all(&flat, points);
            if pass == MAX_REFINE_PASSES {
                break;
            }
            let mut next = Vec::with_capacity(pending.len());
            let mut changed = false;
            let mut wa = if base == 0 { 0.0 } else { flat[base - 1].1 };
            for (j, &(dt, w, depth)) in pending.iter().enumerate() {
                let (a, b) = (points[base + j], points[base + j + 1]);
                if depth < refine.max_depth && refine.wants_split(a, b) {
                    let ratio = (b - a).norm() / refine.mesh;
                    // chords shrink like √dt on rough stretches; a step still
                    // too long after one split is treated as smooth (∝ dt)
                    let levels = if depth == 0 { 2.0 * ratio.log2() } else { 4.0 * ratio.log2() };
                    let mut m = (levels.ceil() as u32 + 1).clamp(1, refine.max_depth - depth);
                    if let Region::Near { .. } = refine.region {
                        // split gradually so only the stretch near a target
                        // ends up fine
                        m = m.min(NEAR_LEVELS_PER_PASS);
                    }
                    bisect(noise, wa, w, dt, m, depth, rng, &mut next);
                    changed = true;
                } else {
                    next.push((dt, w, depth));
                }
                wa = w;
            }
            if !changed {
                break;
            }
            pending = next;
        }
    }
    let mut t = 0.0;
    let mut times = Vec::with_capacity(flat.len() + 1);
    times.push(0.0);
    for &(dt, _) in &flat {
        t += dt;
        times.push(t);
    }
    TracePath { kappa: driving.kappa, times, points }
}

/// Depth cap for [`sample_refined_trace`].
pub const MAX_GLOBAL_DEPTH: u32 = 20;

/// Samples a driving path from `seed` and returns its trace refined
/// everywhere to chords of at most `mesh`. The bridge midpoints draw from
/// the same stream, after the base increments.
pub fn sample_refined_trace(kappa: f64, horizon: f64, steps: usize, mesh: f64, seed: u64) -> Result<TracePath> {
    check_grid(kappa, horizon, steps)?;
    if !(mesh > 0.0) {
        return param(format!("mesh must be positive, got {mesh}"));
    }
    let mut rng = rng_from_seed(seed);
    let driving = sample_driving_with(kappa, horizon, steps, &mut rng);
    Ok(refined_trace(&driving, &Refinement::everywhere(mesh, MAX_GLOBAL_DEPTH), &mut rng))
}

/// Splits a step from driving value `wa` to `wb` into `2^levels` pieces.
#[allow(clippy::too_many_arguments)]
fn bisect<R: Rng + ?Sized>(
    kappa: f64,
    wa: f64,
    wb: f64,
    dt: f64,
    levels: u32,
    depth: u32,
    rng: &mut R,
    out: &mut Vec<(f64, f64, u32)>,
) {
    if levels == 0 {
        out.push((dt, wb, depth));
        return;
    }
    let z: f64 = rng.sample(StandardNormal);
    let wm = 0.5 * (wa + wb) + (kappa * dt * 0.25).sqrt() * z;
    bisect(kappa, wa, wm, 0.5 * dt, levels - 1, depth + 1, rng, out);
    bisect(kappa, wm, wb, 0.5 * dt, levels - 1, depth + 1, rng, out);
}

/// Forward history of one interior point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackedPoint {
    pub origin: ComplexPoint,
    pub image: ComplexPoint,
    pub log_deriv: f64,
    pub swallowed_at: Option<f64>,
    /// Once the image has merged with the real axis: whether it lies to
    /// the right of the driving value.
    axis_side: Option<bool>,
}

impl TrackedPoint {
    pub fn new(z: ComplexPoint) -> Result<Self> {
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return param(format!("tracked point must lie in the open half-plane, got {z}"));
        }
        Ok(Self {
            origin: z,
            image: z,
            log_deriv: 0.0,
            swallowed_at: None,
            axis_side: None,
        })
    }

    pub fn is_swallowed(&self) -> bool {
        self.swallowed_at.is_some()
    }

    /// `|g_t′(z)|`.
    pub fn deriv_modulus(&self) -> f64 {
        self.log_deriv.exp()
    }

    /// Whether the image has merged with the real axis to working
    /// precision (it then moves like a boundary point).
    pub fn on_axis(&self) -> bool {
        self.axis_side.is_some()
    }

    /// Advances through one slit map ending at capacity time `t_end`.
    /// Swallowed points are left untouched.
    ///
    /// The point is swallowed when it comes within `swallow_tol·√dt` of
    /// the driving value, when it lies on the slit grown during the step,
    /// or when, after merging with the real axis, the driving value passes
    /// over it.
    pub fn step(&mut self, dt: f64, dw: f64, t_end: f64, swallow_tol: f64) {
        if self.swallowed_at.is_some() {
            return;
        }
        let u = self.image - dw;
        if u.norm() < swallow_tol * dt.sqrt() {
            self.swallowed_at = Some(t_end);
            return;
        }
        // on the slit grown during this step
        if u.re.abs() <= AXIS_TOL * u.norm() && u.im <= 2.0 * dt.sqrt() {
            self.swallowed_at = Some(t_end);
            return;
        }
        if let Some(right) = self.axis_side {
            if (u.re > 0.0) != right {
                self.swallowed_at = Some(t_end - dt);
                return;
            }
        }
        let v = sqrt_upper(u * u + 4.0 * dt);
        // g ↦ w + √((g−w)² + 4dt) has derivative (g − w)/√(…)
        self.log_deriv += u.norm().ln() - v.norm().ln();
        self.image = dw + v;
        if v.im <= AXIS_TOL * v.norm() {
            self.axis_side = Some(v.re > 0.0);
        }
    }
}

/// Pushes `z` through every step of `driving`, stopping at swallowing.
pub fn track_point(driving: &DrivingPath, z: ComplexPoint) -> Result<TrackedPoint> {
    track_point_with(driving, z, SWALLOW_TOL)
}

pub fn track_point_with(
    driving: &DrivingPath,
    z: ComplexPoint,
    swallow_tol: f64,
) -> Result<TrackedPoint> {
    let mut p = TrackedPoint::new(z)?;
    for (k, &w) in driving.values.iter().enumerate().skip(1) {
        p.step(driving.dt, w, driving.time(k), swallow_tol);
        if p.is_swallowed() {
            break;
        }
    }
    Ok(p)
}

/// Koebe quarter bounds `(q/4, 4q)`, `q = Im g_t(z) / |g_t′(z)|`, on the
/// distance from `z` to the hull.
pub fn conformal_distance_bounds(p: &TrackedPoint) -> Result<(f64, f64)> {
    if p.is_swallowed() {
        return Err(SleError::State("point has been swallowed by the hull".into()));
    }
    let q = p.image.im * (-p.log_deriv).exp();
    Ok((q / 4.0, 4.0 * q))
}

/// `min_k |γ_k − z|`.
pub fn trace_distance(trace: &TracePath, z: ComplexPoint) -> f64 {
    trace
        .points
        .iter()
        .map(|p| (p - z).norm_sqr())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}
