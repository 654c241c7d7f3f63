//! Omnidirectional projection scans ("uniformity radar").
//!
//! A 2-D design is projected onto the rotating line `L_theta`, each
//! projection is transformed through its exact CDF and the KS (or CvM)
//! distance to uniformity is recorded per angle. In 3-D the line sweeps
//! longitude `theta` and latitude `phi`. Higher-dimensional designs are
//! scanned through every coordinate pair or triplet.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{argument, Result};
use crate::gof::{self, StatKind};
use crate::projdist::{Direction, ProjectionCdf};

/// Default 2-D angular step in degrees.
pub const DEFAULT_RESOLUTION_DEG: f64 = 0.5;
/// Default 3-D steps in degrees (theta and phi).
pub const DEFAULT_RESOLUTION_3D_DEG: f64 = 2.0;

/// Projects every design point onto `a`.
pub fn project(design: &Design, a: &Direction) -> Result<Vec<f64>> {
    if design.dim() != a.dim() {
        return Err(argument(format!(
            "direction has dimension {} but design has {}",
            a.dim(),
            design.dim()
        )));
    }
    Ok(design.rows().map(|x| a.dot(x)).collect())
}

/// Statistic of the design's projection onto one direction.
pub fn directional_statistic(
    design: &Design,
    cdf: &ProjectionCdf,
    a: &Direction,
    kind: StatKind,
    buf: &mut Vec<f64>,
) -> f64 {
    buf.clear();
    buf.extend(design.rows().map(|x| cdf.cdf(a.dot(x))));
    buf.sort_unstable_by(f64::total_cmp);
    match kind {
        StatKind::Ks => gof::ks_distance_sorted(buf),
        StatKind::Cvm => gof::cvm_distance_sorted(buf),
    }
}

/// Number of grid steps of `step_deg` in `span_deg`, or an error if the step
/// does not divide the span.
pub(crate) fn grid_steps(span_deg: f64, step_deg: f64) -> Result<usize> {
    if !step_deg.is_finite() || step_deg <= 0.0 {
        return Err(argument(format!(
            "angular step {step_deg} must be positive"
        )));
    }
    let steps = (span_deg / step_deg).round();
    if (steps * step_deg - span_deg).abs() > 1e-9 * span_deg || steps < 1.0 {
        return Err(argument(format!(
            "angular step {step_deg} deg does not divide {span_deg} deg"
        )));
    }
    Ok(steps as usize)
}

/// A fixed set of planar directions with their projection CDFs built once.
#[derive(Debug, Clone)]
pub struct PlanarGrid {
    theta_deg: Vec<f64>,
    directions: Vec<Direction>,
    cdfs: Vec<ProjectionCdf>,
}

impl PlanarGrid {
    /// `steps` equally spaced angles `k * span / steps` over `[0, span_deg)`.
    pub fn new(span_deg: f64, steps: usize) -> Self {
        let theta_deg: Vec<f64> = (0..steps)
            .map(|k| k as f64 * span_deg / steps as f64)
            .collect();
        Self::from_degrees(theta_deg)
    }

    pub fn from_degrees(theta_deg: Vec<f64>) -> Self {
        let directions: Vec<Direction> = theta_deg
            .iter()
            .map(|t| Direction::planar(t.to_radians()))
            .collect();
        let cdfs = directions
            .iter()
            .map(|d| ProjectionCdf::cube(d).expect("planar directions are non-zero"))
            .collect();
        Self {
            theta_deg,
            directions,
            cdfs,
        }
    }

    /// Grid over the half-turn `[0, 180)` with the given step.
    pub fn half_turn(step_deg: f64) -> Result<Self> {
        Ok(Self::new(180.0, grid_steps(180.0, step_deg)?))
    }

    pub fn theta_deg(&self) -> &[f64] {
        &self.theta_deg
    }

    pub fn len(&self) -> usize {
        self.theta_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_deg.is_empty()
    }

    /// Statistic at every grid angle (sequential; callers parallelize over designs).
    pub fn curve(&self, design: &Design, kind: StatKind, buf: &mut Vec<f64>) -> Vec<f64> {
        self.directions
            .iter()
            .zip(&self.cdfs)
            .map(|(a, f)| directional_statistic(design, f, a, kind, buf))
            .collect()
    }

    fn curve_par(&self, design: &Design, kind: StatKind) -> Vec<f64> {
        self.directions
            .par_iter()
            .zip(self.cdfs.par_iter())
            .map_init(Vec::new, |buf, (a, f)| {
                directional_statistic(design, f, a, kind, buf)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarScan2D {
    pub kind: StatKind,
    pub n: usize,
    pub level: f64,
    pub critical: f64,
    pub theta_deg: Vec<f64>,
    pub values: Vec<f64>,
    pub p_values: Vec<f64>,
}

impl RadarScan2D {
    /// `(theta_deg, value)` of the largest value (first on ties).
    pub fn max(&self) -> (f64, f64) {
        arg_extreme(&self.theta_deg, &self.values, |a, b| a > b)
    }

    pub fn min(&self) -> (f64, f64) {
        arg_extreme(&self.theta_deg, &self.values, |a, b| a < b)
    }

    pub fn exceeds(&self) -> bool {
        self.values.iter().any(|&v| v > self.critical)
    }

    /// Maximal runs of consecutive grid indices above the critical value,
    /// as inclusive `(start, end)` index pairs; a run may wrap past 360 deg.
    pub fn exceedance_runs(&self) -> Vec<(usize, usize)> {
        let m = self.values.len();
        let above: Vec<bool> = self.values.iter().map(|&v| v > self.critical).collect();
        if above.iter().all(|&a| a) {
            return vec![(0, m - 1)];
        }
        let Some(first_below) = above.iter().position(|&a| !a) else {
            return Vec::new();
        };
        let mut runs = Vec::new();
        let mut start: Option<usize> = None;
        for step in 1..=m {
            let i = (first_below + step) % m;
            match (above[i], start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, (i + m - 1) % m));
                    start = None;
                }
                _ => {}
            }
        }
        runs
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg,value,p_value\n");
        for ((t, v), p) in self.theta_deg.iter().zip(&self.values).zip(&self.p_values) {
            writeln!(out, "{t:.16e},{v:.16e},{p:.16e}").unwrap();
        }
        out
    }
}

fn arg_extreme(grid: &[f64], values: &[f64], better: impl Fn(f64, f64) -> bool) -> (f64, f64) {
    let mut best = 0;
    for i in 1..values.len() {
        if better(values[i], values[best]) {
            best = i;
        }
    }
    (grid[best], values[best])
}

/// 2-D radar: the statistic on every direction of a full-turn grid with
/// `resolution_deg` spacing.
pub fn radar2d(
    design: &Design,
    resolution_deg: f64,
    level: f64,
    kind: StatKind,
) -> Result<RadarScan2D> {
    if design.dim() != 2 {
        return Err(argument(format!(
            "radar2d needs a 2-D design, got d = {}",
            design.dim()
        )));
    }
    let steps = grid_steps(360.0, resolution_deg)?;
    if steps < 8 {
        return Err(argument("radar2d needs at least 8 angular steps"));
    }
    let critical = gof::critical(kind, design.n(), level)?;
    // L_theta and L_{theta + pi} are the same line
    let values = if steps % 2 == 0 {
        let half = PlanarGrid::new(180.0, steps / 2).curve_par(design, kind);
        half.iter().chain(half.iter()).copied().collect()
    } else {
        PlanarGrid::new(360.0, steps).curve_par(design, kind)
    };
    let n = design.n();
    Ok(RadarScan2D {
        kind,
        n,
        level,
        critical,
        theta_deg: (0..steps)
            .map(|k| k as f64 * 360.0 / steps as f64)
            .collect(),
        p_values: values.iter().map(|&v| gof::pvalue(kind, v, n)).collect(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarScan3D {
    pub kind: StatKind,
    pub n: usize,
    pub level: f64,
    pub critical: f64,
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
    /// `values[i][j]` at `(theta_deg[i], phi_deg[j])`.
    pub values: Vec<Vec<f64>>,
    pub p_values: Vec<Vec<f64>>,
}

impl RadarScan3D {
    /// `(theta_deg, phi_deg, value)` of the largest value.
    pub fn max(&self) -> (f64, f64, f64) {
        let mut best = (0, 0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > self.values[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        (
            self.theta_deg[best.0],
            self.phi_deg[best.1],
            self.values[best.0][best.1],
        )
    }

    pub fn exceeds(&self) -> bool {
        self.values.iter().flatten().any(|&v| v > self.critical)
    }

    /// Value at the grid node nearest to `(theta_deg, phi_deg)`.
    pub fn nearest(&self, theta_deg: f64, phi_deg: f64) -> f64 {
        let i = nearest_index(&self.theta_deg, theta_deg.rem_euclid(360.0), 360.0);
        let j = nearest_index(&self.phi_deg, phi_deg, f64::INFINITY);
        self.values[i][j]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg,phi_deg,value,p_value\n");
        for (i, t) in self.theta_deg.iter().enumerate() {
            for (j, p) in self.phi_deg.iter().enumerate() {
                writeln!(
                    out,
                    "{t:.16e},{p:.16e},{:.16e},{:.16e}",
                    self.values[i][j], self.p_values[i][j]
                )
                .unwrap();
            }
        }
        out
    }
}

fn nearest_index(grid: &[f64], x: f64, period: f64) -> usize {
    let dist = |g: f64| {
        let d = (g - x).abs();
        if period.is_finite() {
            d.min(period - d)
        } else {
            d
        }
    };
    (0..grid.len())
        .min_by(|&a, &b| dist(grid[a]).total_cmp(&dist(grid[b])))
        .unwrap_or(0)
}

/// 3-D KS radar on a `theta in [0, 360)`, `phi in [-90, 90]` grid.
pub fn radar3d(
    design: &Design,
    theta_step_deg: f64,
    phi_step_deg: f64,
    level: f64,
) -> Result<RadarScan3D> {
    radar3d_with(design, theta_step_deg, phi_step_deg, level, StatKind::Ks)
}

pub fn radar3d_with(
    design: &Design,
    theta_step_deg: f64,
    phi_step_deg: f64,
    level: f64,
    kind: StatKind,
) -> Result<RadarScan3D> {
    if design.dim() != 3 {
        return Err(argument(format!(
            "radar3d needs a 3-D design, got d = {}",
            design.dim()
        )));
    }
    let n_theta = grid_steps(360.0, theta_step_deg)?;
    let n_phi = grid_steps(180.0, phi_step_deg)? + 1;
    let critical = gof::critical(kind, design.n(), level)?;
    let theta_deg: Vec<f64> = (0..n_theta)
        .map(|k| k as f64 * 360.0 / n_theta as f64)
        .collect();
    let phi_deg: Vec<f64> = (0..n_phi)
        .map(|k| -90.0 + k as f64 * 180.0 / (n_phi - 1) as f64)
        .collect();
    let values: Vec<Vec<f64>> = theta_deg
        .par_iter()
        .map_init(Vec::new, |buf, &t| {
            phi_deg
                .iter()
                .map(|&p| {
                    let a = Direction::spherical(t.to_radians(), p.to_radians());
                    let f = ProjectionCdf::cube(&a).expect("unit direction");
                    directional_statistic(design, &f, &a, kind, buf)
                })
                .collect()
        })
        .collect();
    let n = design.n();
    let p_values = values
        .iter()
        .map(|row| row.iter().map(|&v| gof::pvalue(kind, v, n)).collect())
        .collect();
    Ok(RadarScan3D {
        kind,
        n,
        level,
        critical,
        theta_deg,
        phi_deg,
        values,
        p_values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dimension")]
pub enum RadarScan {
    #[serde(rename = "2")]
    Planar(RadarScan2D),
    #[serde(rename = "3")]
    Spatial(RadarScan3D),
}

impl RadarScan {
    pub fn exceeds(&self) -> bool {
        match self {
            RadarScan::Planar(s) => s.exceeds(),
            RadarScan::Spatial(s) => s.exceeds(),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            RadarScan::Planar(s) => s.max().1,
            RadarScan::Spatial(s) => s.max().2,
        }
    }

    pub fn critical(&self) -> f64 {
        match self {
            RadarScan::Planar(s) => s.critical,
            RadarScan::Spatial(s) => s.critical,
        }
    }
}

/// Radar of one coordinate subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceScan {
    /// 1-based coordinate indices.
    pub coords: Vec<usize>,
    pub scan: RadarScan,
    pub rejected: bool,
}

/// Every `k`-subset of `0..d` in lexicographic order.
pub fn combinations(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > d {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == d - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Runs the 2-D (arity 2) or 3-D (arity 3) radar on every coordinate
/// pair/triplet; 3-D scans use `resolution_deg` for both angles.
pub fn scan_subspaces(
    design: &Design,
    arity: usize,
    resolution_deg: f64,
    level: f64,
    kind: StatKind,
) -> Result<Vec<SubspaceScan>> {
    if !(arity == 2 || arity == 3) {
        return Err(argument(format!("arity must be 2 or 3, got {arity}")));
    }
    if design.dim() < arity {
        return Err(argument(format!(
            "design of dimension {} has no {arity}-subspaces",
            design.dim()
        )));
    }
    combinations(design.dim(), arity)
        .into_iter()
        .map(|coords| {
            let sub = design.restrict(&coords)?;
            let scan = if arity == 2 {
                RadarScan::Planar(radar2d(&sub, resolution_deg, level, kind)?)
            } else {
                RadarScan::Spatial(radar3d_with(
                    &sub,
                    resolution_deg,
                    resolution_deg,
                    level,
                    kind,
                )?)
            };
            Ok(SubspaceScan {
                coords: coords.iter().map(|c| c + 1).collect(),
                rejected: scan.exceeds(),
                scan,
            })
        })
        .collect()
}
