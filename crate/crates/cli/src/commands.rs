//! One function per experiment subcommand.
//!
//! Each command resolves its parameters (defaults, config layer, flags),
//! runs the computation, and writes `{name}.csv`, `{name}.json` and
//! `{name}.manifest.json` under the output directory.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use chrono::Utc;
use clap::Args;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sle_core::diffusion::{
    self, eigenfunction, eigenfunction_residual, hull_exponent, leading_eigenvalue_with, survival_curve_with,
    BoundaryScheme, Discretization,
};
use sle_core::estimators::{
    default_horizon, default_steps, fit_exponential, fit_power_law, hitting_probability_mc, partition_sum_with_budget,
    two_point_table, HittingEstimate, PARTITION_BUDGET,
};
use sle_core::fractal::{dimension_report, MESH_FACTOR};
use sle_core::loewner::{compute_trace, sample_driving, sample_refined_trace, DrivingPath};
use sle_core::rng::stream_seed;
use sle_core::SleError;

use crate::config::{resolve, ConfigSource};
use crate::error::CliError;
use crate::output::{Check, FitSummary, Reference, ResultDoc, Sink};

pub struct Context {
    pub out: PathBuf,
    pub name: Option<String>,
    pub source: ConfigSource,
}

impl Context {
    fn sink(&self, experiment: &str) -> Result<Sink, CliError> {
        Sink::new(&self.out, self.name.as_deref().unwrap_or(experiment))
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("parameters serialize")
}

fn point(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.trim().parse().map_err(|e| format!("{a}: {e}"))?,
            b.trim().parse().map_err(|e| format!("{b}: {e}"))?,
        ]),
        _ => Err(format!("expected RE,IM, got `{s}`")),
    }
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Window `[lo·reference, hi·reference]` for a positive reference.
fn relative_window(reference: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    (reference > 0.0).then_some((lo * reference, hi * reference))
}

fn relative_check(estimate: f64, reference: f64, lo: f64, hi: f64) -> Option<Check> {
    relative_window(reference, lo, hi).map(|(l, h)| Check::window(estimate, l, h))
}

fn done(failure: Option<SleError>) -> Result<(), CliError> {
    failure.map_or(Ok(()), |e| Err(e.into()))
}

// ---------------------------------------------------------------- trace

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceParams {
    pub kappa: f64,
    pub horizon: f64,
    pub steps: usize,
    pub seed: u64,
    /// Use `W ≡ 0` (the trace is the segment `[0, 2i√T]`).
    pub zero_driving: bool,
    /// Refine the trace to chords of at most this length.
    pub mesh: Option<f64>,
    pub svg: bool,
    /// Seconds; exceeding it is a resource error.
    pub time_budget: Option<f64>,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            kappa: 8.0 / 3.0,
            horizon: 1.0,
            steps: 10_000,
            seed: 1,
            zero_driving: false,
            mesh: None,
            svg: true,
            time_budget: None,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct TraceArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    zero_driving: Option<bool>,
    #[arg(long)]
    mesh: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    svg: Option<bool>,
    #[arg(long)]
    time_budget: Option<f64>,
}

pub fn trace(ctx: &Context, args: &TraceArgs) -> Result<(), CliError> {
    let p: TraceParams = resolve("trace", &TraceParams::default(), &ctx.source, args)?;
    if p.zero_driving && p.mesh.is_some() {
        return Err(usage("mesh refinement needs a random driving path"));
    }
    if p.time_budget.is_some_and(|b| !(b > 0.0)) {
        return Err(usage("time_budget must be positive"));
    }
    let started = Utc::now();
    let clock = Instant::now();
    let trace = if p.zero_driving {
        compute_trace(&DrivingPath::zero(p.kappa, p.horizon, p.steps)?)
    } else if let Some(mesh) = p.mesh {
        sample_refined_trace(p.kappa, p.horizon, p.steps, mesh, p.seed)?
    } else {
        compute_trace(&sample_driving(p.kappa, p.horizon, p.steps, p.seed)?)
    };
    let elapsed = clock.elapsed().as_secs_f64();
    if let Some(budget) = p.time_budget {
        if elapsed > budget {
            return Err(SleError::Resource(format!("trace took {elapsed:.1}s, over the budget of {budget}s")).into());
        }
    }
    let mut sink = ctx.sink("trace")?;
    sink.write(".csv", |out| trace.write_csv(out))?;
    if p.svg {
        sink.write(".svg", |out| crate::output::write_svg(&trace, out))?;
    }
    sink.finish("trace", to_json(&p), Some(p.seed), started)?;
    Ok(())
}

// ---------------------------------------------------------------- survival

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurvivalParams {
    pub kappa: f64,
    pub alpha0: f64,
    pub s_grid: Vec<f64>,
    pub n_paths: usize,
    pub ds: f64,
    pub seed: u64,
    pub scheme: BoundaryScheme,
}

impl Default for SurvivalParams {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            alpha0: PI,
            s_grid: (0..=10).map(|k| 1.0 + 0.5 * k as f64).collect(),
            n_paths: 100_000,
            ds: diffusion::DEFAULT_DS,
            seed: 1,
            scheme: BoundaryScheme::default(),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SurvivalArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    /// Comma-separated, increasing.
    #[arg(long, value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    ds: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `graded` or `fixed`.
    #[arg(long, value_parser = parse_enum::<BoundaryScheme>)]
    scheme: Option<BoundaryScheme>,
}

pub fn survival(ctx: &Context, args: &SurvivalArgs) -> Result<(), CliError> {
    let p: SurvivalParams = resolve("survival", &SurvivalParams::default(), &ctx.source, args)?;
    if p.s_grid.len() < 3 {
        return Err(usage(format!("the fit needs at least 3 survival times, got {}", p.s_grid.len())));
    }
    let started = Utc::now();
    let est = survival_curve_with(p.kappa, p.alpha0, &p.s_grid, p.n_paths, p.ds, p.seed, p.scheme)?;
    let reference = hull_exponent(p.kappa);

    let mut doc = ResultDoc::new("survival", Some(p.kappa), to_json(&p), Some(p.seed));
    doc.points = est
        .s_grid
        .iter()
        .zip(&est.probs)
        .zip(&est.stderrs)
        .map(|((s, pr), e)| json!({ "s": s, "prob": pr, "stderr": e }))
        .collect();
    doc.reference = Some(Reference { name: "1 - kappa/8".into(), value: reference });
    let failure = doc.record_fit(fit_exponential(&est.s_grid, &est.probs), -1.0, relative_window(reference, 0.9, 1.1));
    doc.set("lambda_hat", doc.estimate);

    let mut sink = ctx.sink("survival")?;
    sink.write(".csv", |out| est.write_csv(out))?;
    sink.write_json(".json", &doc)?;
    sink.finish("survival", to_json(&p), Some(p.seed), started)?;
    done(failure)
}

// ---------------------------------------------------------------- eigen

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenParams {
    pub kappa: f64,
    pub grid: usize,
    pub discretization: Discretization,
}

impl Default for EigenParams {
    fn default() -> Self {
        Self { kappa: 4.0, grid: 2048, discretization: Discretization::ScaleFunction }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct EigenArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    /// `scale-function` or `central-difference`.
    #[arg(long, value_parser = parse_enum::<Discretization>)]
    discretization: Option<Discretization>,
}

pub fn eigen(ctx: &Context, args: &EigenArgs) -> Result<(), CliError> {
    let p: EigenParams = resolve("eigen", &EigenParams::default(), &ctx.source, args)?;
    let started = Utc::now();
    let solved = leading_eigenvalue_with(p.kappa, p.grid, p.discretization)?;
    let residual = eigenfunction_residual(p.kappa, p.grid)?;
    let reference = hull_exponent(p.kappa);

    let mut doc = ResultDoc::new("eigen", Some(p.kappa), to_json(&p), None);
    doc.reference = Some(Reference { name: "1 - kappa/8".into(), value: reference });
    doc.estimate = Some(solved.lambda_hat);
    doc.check = relative_check(solved.lambda_hat, reference, 0.98, 1.02);
    doc.set("grid_size", solved.grid_size);
    doc.set("lambda_hat", solved.lambda_hat);
    doc.set("residual", residual);

    let mut sink = ctx.sink("eigen")?;
    sink.write(".csv", |out| {
        writeln!(out, "x,phi,phi_exact")?;
        for (x, v) in solved.grid().iter().zip(&solved.eigenvector) {
            writeln!(out, "{x},{v},{}", eigenfunction(p.kappa, *x))?;
        }
        Ok(())
    })?;
    sink.write_json(".json", &doc)?;
    sink.finish("eigen", to_json(&p), None, started)?;
    Ok(())
}

// ---------------------------------------------------------------- hitting

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HittingParams {
    pub kappa: f64,
    pub z0: [f64; 2],
    pub eps: Vec<f64>,
    pub n_paths: usize,
    /// Defaults to `16·|z0|²`.
    pub horizon: Option<f64>,
    /// Defaults to 250 per unit of horizon.
    pub steps: Option<usize>,
    pub seed: u64,
    /// Repeat with the horizon doubled and compare.
    pub stability_check: bool,
}

impl Default for HittingParams {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            z0: [0.0, 1.0],
            eps: vec![0.2, 0.1, 0.05, 0.025],
            n_paths: 10_000,
            horizon: None,
            steps: None,
            seed: 1,
            stability_check: false,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct HittingArgs {
    #[arg(long)]
    kappa: Option<f64>,
    /// Target point as `RE,IM`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    z0: Option<[f64; 2]>,
    /// Comma-separated, decreasing.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    stability_check: Option<bool>,
}

fn hitting_points(est: &HittingEstimate) -> Vec<Value> {
    est.eps_list
        .iter()
        .zip(&est.probs)
        .zip(&est.stderrs)
        .map(|((e, p), s)| json!({ "eps": e, "prob": p, "stderr": s }))
        .collect()
}

pub fn hitting(ctx: &Context, args: &HittingArgs) -> Result<(), CliError> {
    let p: HittingParams = resolve("hitting", &HittingParams::default(), &ctx.source, args)?;
    if p.eps.len() < 3 {
        return Err(usage(format!("the fit needs at least 3 radii, got {}", p.eps.len())));
    }
    let z0 = point(p.z0);
    let horizon = p.horizon.unwrap_or_else(|| default_horizon(z0));
    let steps = p.steps.unwrap_or_else(|| default_steps(horizon));
    let started = Utc::now();
    let est = hitting_probability_mc(z0, &p.eps, p.kappa, p.n_paths, horizon, steps, p.seed)?;
    let reference = hull_exponent(p.kappa);

    let mut doc = ResultDoc::new("hitting", Some(p.kappa), to_json(&p), Some(p.seed));
    doc.points = hitting_points(&est);
    doc.reference = Some(Reference { name: "1 - kappa/8".into(), value: reference });
    let failure = doc.record_fit(est.fit(), 1.0, relative_window(reference, 0.8, 1.2));
    doc.set("z0", p.z0);
    doc.set("horizon", horizon);
    doc.set("steps", steps);
    doc.set("local_mesh", est.local_mesh);

    if p.stability_check {
        let long = hitting_probability_mc(z0, &p.eps, p.kappa, p.n_paths, 2.0 * horizon, 2 * steps, p.seed)?;
        let worst = est
            .probs
            .iter()
            .zip(&long.probs)
            .zip(est.stderrs.iter().zip(&long.stderrs))
            .map(|((a, b), (sa, sb))| {
                let s = (sa * sa + sb * sb).sqrt();
                if s > 0.0 { (b - a).abs() / s } else if a == b { 0.0 } else { f64::INFINITY }
            })
            .fold(0.0, f64::max);
        doc.set(
            "stability",
            json!({
                "horizon": 2.0 * horizon,
                "steps": 2 * steps,
                "points": hitting_points(&long),
                "max_z": worst,
                "stable": worst <= 3.0,
            }),
        );
    }

    let mut sink = ctx.sink("hitting")?;
    sink.write(".csv", |out| est.write_csv(out))?;
    sink.write_json(".json", &doc)?;
    sink.finish("hitting", to_json(&p), Some(p.seed), started)?;
    done(failure)
}

// ---------------------------------------------------------------- twopoint

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoPointParams {
    pub kappa: f64,
    pub z: [f64; 2],
    /// Partner for the radius sweep.
    pub zp: [f64; 2],
    pub eps: Vec<f64>,
    /// Partners for the separation sweep, at radius `separation_eps`.
    pub partners: Vec<[f64; 2]>,
    pub separation_eps: f64,
    pub n_paths: usize,
    /// Defaults to `16·max |w|²` over the points.
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub seed: u64,
}

impl Default for TwoPointParams {
    fn default() -> Self {
        Self {
            kappa: 8.0 / 3.0,
            z: [0.0, 1.0],
            zp: [1.0, 1.0],
            eps: vec![0.2, 0.1, 0.05],
            partners: vec![[0.25, 1.0], [0.5, 1.0], [1.0, 1.0]],
            separation_eps: 0.05,
            n_paths: 10_000,
            horizon: None,
            steps: None,
            seed: 1,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct TwoPointArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    z: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    zp: Option<[f64; 2]>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Repeatable `RE,IM`.
    #[arg(long = "partner", value_parser = parse_point, allow_hyphen_values = true)]
    partners: Option<Vec<[f64; 2]>>,
    #[arg(long)]
    separation_eps: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn twopoint(ctx: &Context, args: &TwoPointArgs) -> Result<(), CliError> {
    let p: TwoPointParams = resolve("twopoint", &TwoPointParams::default(), &ctx.source, args)?;
    if p.eps.len() < 3 {
        return Err(usage(format!("the radius fit needs at least 3 radii, got {}", p.eps.len())));
    }
    if p.partners.len() < 3 {
        return Err(usage(format!("the separation fit needs at least 3 partners, got {}", p.partners.len())));
    }
    let z = point(p.z);
    let zp = point(p.zp);
    let partners: Vec<Complex64> = p.partners.iter().map(|&q| point(q)).collect();
    for &q in &partners {
        if !(p.separation_eps < 0.5 * (q - z).norm() && p.separation_eps < q.im.min(z.im)) {
            return Err(usage(format!(
                "separation_eps {} must be below half the separation and both imaginary parts for partner {q}",
                p.separation_eps
            )));
        }
    }
    let far = partners.iter().chain([&z, &zp]).map(|w| w.norm_sqr()).fold(0.0, f64::max);
    let horizon = p.horizon.unwrap_or(16.0 * far);
    let steps = p.steps.unwrap_or_else(|| default_steps(horizon));
    let started = Utc::now();
    let by_eps = two_point_table(z, &[zp], &p.eps, p.kappa, p.n_paths, horizon, steps, p.seed)?;
    let by_sep = two_point_table(
        z,
        &partners,
        &[p.separation_eps],
        p.kappa,
        p.n_paths,
        horizon,
        steps,
        stream_seed(p.seed, 1),
    )?;
    let s = hull_exponent(p.kappa);
    let seps: Vec<f64> = partners.iter().map(|q| (q - z).norm()).collect();
    let sep_probs: Vec<f64> = by_sep.joint.iter().map(|row| row[0]).collect();
    // P(both) / (P(z)·P(z')): the partner's own hitting probability varies
    // with its position, the ratio carries only the separation dependence
    let correlation: Vec<f64> = sep_probs
        .iter()
        .zip(&by_sep.marginal_partner)
        .map(|(j, m)| {
            let denom = by_sep.marginal_z[0] * m[0];
            if denom > 0.0 { j / denom } else { 0.0 }
        })
        .collect();

    let mut rows = Vec::new();
    for (e, (j, se)) in p.eps.iter().zip(by_eps.joint[0].iter().zip(&by_eps.joint_stderr[0])) {
        rows.push((p.zp, (zp - z).norm(), *e, *j, *se));
    }
    for (k, q) in p.partners.iter().enumerate() {
        rows.push((*q, seps[k], p.separation_eps, by_sep.joint[k][0], by_sep.joint_stderr[k][0]));
    }
    let row_json = |r: &([f64; 2], f64, f64, f64, f64)| {
        json!({ "partner": r.0, "separation": r.1, "eps": r.2, "prob": r.3, "stderr": r.4 })
    };

    let mut doc = ResultDoc::new("twopoint", Some(p.kappa), to_json(&p), Some(p.seed));
    doc.points = rows[..p.eps.len()].iter().map(row_json).collect();
    doc.reference = Some(Reference { name: "2(1 - kappa/8)".into(), value: 2.0 * s });
    let eps_failure = doc.record_fit(fit_power_law(&p.eps, &by_eps.joint[0]), 1.0, relative_window(2.0 * s, 0.825, 1.2));
    doc.set("horizon", horizon);
    doc.set("steps", steps);
    doc.set("marginal_z", &by_eps.marginal_z);
    doc.set("marginal_partner", &by_eps.marginal_partner[0]);

    let mut sep_doc = ResultDoc::new("twopoint-separation", Some(p.kappa), to_json(&p), Some(stream_seed(p.seed, 1)));
    sep_doc.points = rows[p.eps.len()..].iter().map(row_json).collect();
    sep_doc.reference = Some(Reference { name: "-(1 - kappa/8)".into(), value: -s });
    let sep_window = (s > 0.0).then_some((-1.5 * s, -0.6 * s));
    let sep_failure = sep_doc.record_fit(fit_power_law(&seps, &correlation), 1.0, sep_window);
    sep_doc.set("horizon", horizon);
    sep_doc.set("steps", steps);
    sep_doc.set("marginal_z", by_sep.marginal_z[0]);
    sep_doc.set("marginal_partner", by_sep.marginal_partner.iter().map(|m| m[0]).collect::<Vec<f64>>());
    sep_doc.set("correlation", &correlation);
    sep_doc.set("joint_slope", fit_power_law(&seps, &sep_probs).ok().map(|f| f.slope));

    let mut sink = ctx.sink("twopoint")?;
    sink.write(".csv", |out| {
        writeln!(out, "partner_re,partner_im,separation,eps,prob,stderr")?;
        for (q, sep, e, pr, se) in &rows {
            writeln!(out, "{},{},{sep},{e},{pr},{se}", q[0], q[1])?;
        }
        Ok(())
    })?;
    sink.write_json(".json", &doc)?;
    sink.write_json("-separation.json", &sep_doc)?;
    sink.finish("twopoint", to_json(&p), Some(p.seed), started)?;
    done(eps_failure.or(sep_failure))
}

// ---------------------------------------------------------------- boxdim

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxdimParams {
    pub kappa: f64,
    pub horizon: f64,
    pub steps: usize,
    pub eps: Vec<f64>,
    /// Trace refinement target; defaults to the smallest box over 5.
    pub mesh: Option<f64>,
    pub traces: usize,
    pub seed: u64,
}

impl Default for BoxdimParams {
    fn default() -> Self {
        Self {
            kappa: 8.0 / 3.0,
            horizon: 1.0,
            steps: 100_000,
            eps: (3..=7).map(|k| 2f64.powi(-k)).collect(),
            mesh: None,
            traces: 1,
            seed: 1,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct BoxdimArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    mesh: Option<f64>,
    #[arg(long)]
    traces: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn boxdim(ctx: &Context, args: &BoxdimArgs) -> Result<(), CliError> {
    let p: BoxdimParams = resolve("boxdim", &BoxdimParams::default(), &ctx.source, args)?;
    if p.traces == 0 {
        return Err(usage("traces must be at least 1"));
    }
    let lo = p.eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p.eps.iter().copied().fold(0.0, f64::max);
    if p.eps.len() < 3 || !(lo > 0.0) || hi / lo < 10.0 {
        return Err(usage("eps needs at least 3 positive sizes spanning a decade"));
    }
    let mesh = p.mesh.unwrap_or(lo / MESH_FACTOR);
    let started = Utc::now();
    let mut reports = Vec::with_capacity(p.traces);
    for i in 0..p.traces {
        let seed = if p.traces == 1 { p.seed } else { stream_seed(p.seed, i as u64) };
        let trace = sample_refined_trace(p.kappa, p.horizon, p.steps, mesh, seed)?;
        reports.push(dimension_report(&trace, &p.eps)?);
    }
    let d: Vec<f64> = reports.iter().map(|r| r.d_hat()).collect();
    let d_hat = d.iter().sum::<f64>() / d.len() as f64;
    let stderr = if d.len() > 1 {
        let var = d.iter().map(|x| (x - d_hat).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        (var / d.len() as f64).sqrt()
    } else {
        reports[0].fit.slope_stderr
    };
    let reference = (1.0 + p.kappa / 8.0).min(2.0);

    let mut doc = ResultDoc::new("boxdim", Some(p.kappa), to_json(&p), Some(p.seed));
    doc.points = reports
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            r.table.eps_list.iter().zip(&r.table.counts).map(move |(e, c)| json!({ "trace": i, "eps": e, "count": c }))
        })
        .collect();
    if p.traces == 1 {
        doc.fit = Some(FitSummary::from(&reports[0].fit));
    }
    doc.reference = Some(Reference { name: "min(2, 1 + kappa/8)".into(), value: reference });
    doc.estimate = Some(d_hat);
    doc.estimate_stderr = Some(stderr);
    doc.check = relative_check(d_hat, reference, 0.9, 1.0875);
    doc.set("n_steps", p.steps);
    let used = &reports[0].table.eps_list;
    doc.set("eps_range", [used.iter().copied().fold(f64::INFINITY, f64::min), used.iter().copied().fold(0.0, f64::max)]);
    doc.set("D_hat", d_hat);
    doc.set("stderr", stderr);
    doc.set("per_trace", &d);

    let mut sink = ctx.sink("boxdim")?;
    sink.write(".csv", |out| {
        if p.traces == 1 {
            reports[0].table.write_csv(out)
        } else {
            writeln!(out, "trace,eps,count")?;
            for (i, r) in reports.iter().enumerate() {
                for (e, c) in r.table.eps_list.iter().zip(&r.table.counts) {
                    writeln!(out, "{i},{e},{c}")?;
                }
            }
            Ok(())
        }
    })?;
    sink.write_json(".json", &doc)?;
    sink.finish("boxdim", to_json(&p), Some(p.seed), started)?;
    Ok(())
}

// ---------------------------------------------------------------- partition

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionParams {
    pub k1_max: u32,
    pub k2_max: u32,
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub budget: u64,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self { k1_max: 12, k2_max: 12, a: 0.05, c: 2.0, alpha: 1.0, beta: 1.0, gamma: 1.0, budget: PARTITION_BUDGET }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct PartitionArgs {
    #[arg(long)]
    k1_max: Option<u32>,
    #[arg(long)]
    k2_max: Option<u32>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
}

/// Sums are compared with `a^{α·k1/2 + β·k2}`; the witness bound is ten times
/// the ratio at `k1 = k2 = 1`.
const RATIO_BOUND_FACTOR: f64 = 10.0;

pub fn partition(ctx: &Context, args: &PartitionArgs) -> Result<(), CliError> {
    let p: PartitionParams = resolve("partition", &PartitionParams::default(), &ctx.source, args)?;
    if p.k1_max == 0 || p.k2_max == 0 {
        return Err(usage("k1_max and k2_max must be at least 1"));
    }
    // the largest pair set is the last one; check it before any output
    partition_sum_with_budget(p.k1_max, p.k2_max, p.a, p.c, p.alpha, p.beta, p.gamma, p.budget)?;
    let started = Utc::now();
    let mut rows = Vec::new();
    for k1 in 1..=p.k1_max {
        for k2 in 1..=p.k2_max {
            let sum = partition_sum_with_budget(k1, k2, p.a, p.c, p.alpha, p.beta, p.gamma, p.budget)?;
            let ratio = sum / p.a.powf(p.alpha * k1 as f64 / 2.0 + p.beta * k2 as f64);
            rows.push((k1, k2, sum, ratio));
        }
    }
    let base = rows[0].3;
    let (max_at, max_ratio) = rows.iter().map(|r| ((r.0, r.1), r.3)).fold(((1, 1), f64::NEG_INFINITY), |acc, x| {
        if x.1 > acc.1 { x } else { acc }
    });
    let min_ratio = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
    let bound = RATIO_BOUND_FACTOR * base;

    let mut doc = ResultDoc::new("partition", None, to_json(&p), None);
    doc.points = rows.iter().map(|(k1, k2, s, r)| json!({ "k1": k1, "k2": k2, "sum": s, "ratio": r })).collect();
    doc.reference = Some(Reference { name: "10 x ratio at k1 = k2 = 1".into(), value: bound });
    doc.estimate = Some(max_ratio);
    let finite = max_ratio.is_finite() && min_ratio > 0.0;
    doc.check = Some(Check { lower: 0.0, upper: bound, pass: finite && max_ratio <= bound });
    doc.set("max_ratio_at", [max_at.0, max_at.1]);
    doc.set("min_ratio", min_ratio);

    let mut sink = ctx.sink("partition")?;
    sink.write(".csv", |out| {
        writeln!(out, "k1,k2,sum,ratio")?;
        for (k1, k2, s, r) in &rows {
            writeln!(out, "{k1},{k2},{s},{r}")?;
        }
        Ok(())
    })?;
    sink.write_json(".json", &doc)?;
    sink.finish("partition", to_json(&p), None, started)?;
    Ok(())
}
