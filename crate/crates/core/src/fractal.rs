//! Box-counting dimension of traces and the swallowing diagnostic.
//!
//! Box counting (Minkowski dimension) stands in for Hausdorff dimension:
//! the two agree for SLE traces, and only the former can be computed from
//! samples.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, SleError};
use crate::estimators::{fit_power_law, PowerLawFit};
use crate::loewner::{sample_driving, track_point, ComplexPoint, TracePath};

/// Number of cells of the grid `eps·ℤ²` (anchored at the origin) that
/// contain at least one point.
pub fn box_count(points: &[ComplexPoint], eps: f64) -> usize {
    box_count_shifted(points, eps, 0.0, 0.0)
}

/// [`box_count`] for the grid translated by `(dx, dy)`.
pub fn box_count_shifted(points: &[ComplexPoint], eps: f64, dx: f64, dy: f64) -> usize {
    let cells: HashSet<(i64, i64)> = points
        .iter()
        .map(|p| (((p.re - dx) / eps).floor() as i64, ((p.im - dy) / eps).floor() as i64))
        .collect();
    cells.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountTable {
    pub eps_list: Vec<f64>,
    pub counts: Vec<usize>,
}

impl BoxCountTable {
    pub fn new(points: &[ComplexPoint], eps_list: &[f64]) -> Self {
        let counts = eps_list.par_iter().map(|&e| box_count(points, e)).collect();
        Self { eps_list: eps_list.to_vec(), counts }
    }

    /// Fit of `log N` against `log(1/ε)`.
    pub fn fit(&self) -> Result<PowerLawFit> {
        let inv: Vec<f64> = self.eps_list.iter().map(|e| 1.0 / e).collect();
        let counts: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        fit_power_law(&inv, &counts)
    }

    /// CSV with header `eps,count`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "eps,count")?;
        for (e, c) in self.eps_list.iter().zip(&self.counts) {
            writeln!(out, "{e:.16e},{c}")?;
        }
        Ok(())
    }
}

/// Smallest usable box size as a multiple of the trace mesh.
pub const MESH_FACTOR: f64 = 5.0;

/// Largest usable box size as a fraction of the trace diameter.
pub const DIAMETER_FRACTION: f64 = 0.25;

/// Dimension estimate with the fit-range bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub fit: PowerLawFit,
    pub table: BoxCountTable,
    pub mesh: f64,
    pub diameter: f64,
    /// Fits over the finer and the coarser half of the used sizes, when
    /// each half has at least 3 sizes.
    pub fine_half: Option<f64>,
    pub coarse_half: Option<f64>,
}

impl DimensionReport {
    pub fn d_hat(&self) -> f64 {
        self.fit.slope
    }
}

/// Box sizes from `eps_list` that the fit-range policy keeps: at least
/// `MESH_FACTOR·mesh` and at most `DIAMETER_FRACTION·diameter`.
pub fn usable_sizes(eps_list: &[f64], mesh: f64, diameter: f64) -> Vec<f64> {
    eps_list
        .iter()
        .copied()
        .filter(|&e| e >= MESH_FACTOR * mesh && e <= DIAMETER_FRACTION * diameter)
        .collect()
}

pub fn dimension_report(trace: &TracePath, eps_list: &[f64]) -> Result<DimensionReport> {
    if eps_list.len() < 3 {
        return param("need at least 3 box sizes");
    }
    if eps_list.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return param("box sizes must be positive");
    }
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0, f64::max);
    if hi / lo < 10.0 {
        return param(format!("box sizes span {:.2} decades, need at least one", (hi / lo).log10()));
    }
    if trace.is_empty() {
        return param("trace is empty");
    }
    let mesh = trace.mesh();
    let diameter = trace.diameter();
    if mesh * MESH_FACTOR > lo {
        return Err(SleError::Resolution(format!(
            "trace mesh {mesh:.3e} is coarser than 1/{MESH_FACTOR} of the smallest box {lo:.3e}"
        )));
    }
    let mut used = usable_sizes(eps_list, mesh, diameter);
    used.sort_by(|a, b| b.total_cmp(a));
    let span = used.first().zip(used.last()).map_or(1.0, |(a, b)| a / b);
    if used.len() < 3 || span < 10.0 {
        return Err(SleError::Resolution(format!(
            "only {} box sizes between {:.3e} and {:.3e} remain, spanning less than a decade",
            used.len(),
            MESH_FACTOR * mesh,
            DIAMETER_FRACTION * diameter
        )));
    }
    let table = BoxCountTable::new(&trace.points, &used);
    let fit = table.fit()?;
    let half = used.len() / 2;
    let sub_fit = |range: std::ops::Range<usize>| -> Option<f64> {
        if range.len() < 3 {
            return None;
        }
        let t = BoxCountTable { eps_list: table.eps_list[range.clone()].to_vec(), counts: table.counts[range].to_vec() };
        t.fit().ok().map(|f| f.slope)
    };
    let coarse_half = sub_fit(0..used.len() - half);
    let fine_half = sub_fit(half..used.len());
    Ok(DimensionReport { fit, table, mesh, diameter, fine_half, coarse_half })
}

/// Box-counting dimension `D̂`: slope of `log N(ε)` against `log(1/ε)`.
///
/// Fails with a resolution error when the trace mesh exceeds a fifth of the
/// smallest box, since under-resolved curves read as dimension 1.
pub fn dimension_fit(trace: &TracePath, eps_list: &[f64]) -> Result<PowerLawFit> {
    Ok(dimension_report(trace, eps_list)?.fit)
}

/// Fraction of `grid` swallowed by the hull before `horizon`, for one
/// driving sample.
pub fn swallow_fraction(kappa: f64, grid: &[ComplexPoint], horizon: f64, steps: usize, seed: u64) -> Result<f64> {
    if grid.is_empty() {
        return param("grid is empty");
    }
    if let Some(p) = grid.iter().find(|p| !(p.im > 0.0)) {
        return param(format!("grid point {p} is not interior"));
    }
    if horizon == 0.0 {
        return Ok(0.0);
    }
    let driving = sample_driving(kappa, horizon, steps, seed)?;
    let swallowed = grid
        .par_iter()
        .map(|&z| track_point(&driving, z).map(|p| p.swallowed_at.is_some_and(|t| t <= horizon)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(swallowed.iter().filter(|&&s| s).count() as f64 / grid.len() as f64)
}

/// The grid `{j/10 + i(1/2 + k/10)}` for `j ∈ [−10, 10]`, `k ∈ [0, 10]`.
pub fn standard_grid() -> Vec<ComplexPoint> {
    (0..=10)
        .flat_map(|k| (-10..=10).map(move |j| ComplexPoint::new(j as f64 / 10.0, 0.5 + k as f64 / 10.0)))
        .collect()
}
