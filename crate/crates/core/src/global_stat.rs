//! The global ratio statistic `G_N = sup_theta D_N(theta) / inf_theta D_N(theta)`
//! for 2-D designs, its finite-N Monte Carlo quantile table, and the
//! asymptotic distribution through a discretized Gaussian field.
//!
//! Under uniformity, the empirical process indexed by the half-planes
//! `A = {x : R_theta(x) < t}` converges to a centered Gaussian field with
//! covariance `P(A_s ∩ A_t) - P(A_s) P(A_t)`. The probabilities are exact
//! areas of the clipped square, so the asymptotic law of `G_N` can be
//! sampled by factorizing that covariance.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{fill_uniform, Design};
use crate::error::{argument, Error, Result};
use crate::geometry::{square_area_within, HalfPlane};
use crate::gof::StatKind;
use crate::projdist::{Direction, ProjectionCdf};
use crate::radar::PlanarGrid;
use crate::seed;

/// Default angular step for `G_N` (degrees over `[0, 180)`).
pub const DEFAULT_GN_STEP_DEG: f64 = 1.0;
/// Levels of the bundled quantile table.
pub const TABLE_LEVELS: [f64; 5] = [0.80, 0.85, 0.90, 0.95, 0.99];
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const MIN_TABLE_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnResult {
    pub g: f64,
    pub sup_value: f64,
    pub inf_value: f64,
    pub sup_theta_deg: f64,
    pub inf_theta_deg: f64,
    pub n: usize,
}

/// `G_N` of a 2-D design over a `[0, 180)` grid with step `resolution_deg`.
pub fn gn(design: &Design, resolution_deg: f64) -> Result<GnResult> {
    let grid = PlanarGrid::half_turn(resolution_deg)?;
    gn_on_grid(design, &grid, &mut Vec::new())
}

pub fn gn_on_grid(design: &Design, grid: &PlanarGrid, buf: &mut Vec<f64>) -> Result<GnResult> {
    if design.dim() != 2 {
        return Err(argument(format!(
            "G_N needs a 2-D design, got d = {}",
            design.dim()
        )));
    }
    let curve = grid.curve(design, StatKind::Ks, buf);
    ratio_of_curve(&curve, grid.theta_deg(), design.n())
}

fn ratio_of_curve(curve: &[f64], theta_deg: &[f64], n: usize) -> Result<GnResult> {
    let (mut hi, mut lo) = (0, 0);
    for (i, &v) in curve.iter().enumerate() {
        if v > curve[hi] {
            hi = i;
        }
        if v < curve[lo] {
            lo = i;
        }
    }
    if curve[lo].is_nan() || curve[lo] <= 0.0 {
        return Err(Error::Internal(format!(
            "radar curve reached {} at {} deg; KS distances are at least 1/(2N)",
            curve[lo], theta_deg[lo]
        )));
    }
    Ok(GnResult {
        g: curve[hi] / curve[lo],
        sup_value: curve[hi],
        inf_value: curve[lo],
        sup_theta_deg: theta_deg[hi],
        inf_theta_deg: theta_deg[lo],
        n,
    })
}

/// Nearest-rank empirical quantile of an ascending sample.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Half the spread of the order statistics one binomial standard deviation
/// either side of the nearest rank.
fn quantile_std_error(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = (n as f64 * p * (1.0 - p)).sqrt().ceil() as usize;
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
    let lo = sorted[rank.saturating_sub(k)];
    let hi = sorted[(rank + k).min(n - 1)];
    0.5 * (hi - lo)
}

/// Monte Carlo quantiles of `G_N` under uniform sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnQuantileTable {
    pub n_values: Vec<usize>,
    pub levels: Vec<f64>,
    /// `quantiles[i][j]` at `n_values[i]`, `levels[j]`.
    pub quantiles: Vec<Vec<f64>>,
    #[serde(default)]
    pub std_errors: Vec<Vec<f64>>,
    pub replicates: usize,
    pub grid_step_deg: f64,
    pub seed: u64,
}

/// Sidecar metadata written next to a table CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub replicates: usize,
    pub grid_step: f64,
    pub seed: u64,
}

/// Where a looked-up threshold came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lookup {
    Exact,
    Interpolated,
    /// `N` beyond the table; the largest row was used.
    Clamped {
        used_n: usize,
    },
}

impl GnQuantileTable {
    pub fn meta(&self) -> TableMeta {
        TableMeta {
            replicates: self.replicates,
            grid_step: self.grid_step_deg,
            seed: self.seed,
        }
    }

    /// Level column label: 0.95 -> `P95`, 0.975 -> `P97.5`.
    fn level_label(p: f64) -> String {
        let pct = (p * 1000.0).round() / 10.0;
        if pct.fract() == 0.0 {
            format!("P{}", pct as u64)
        } else {
            format!("P{pct}")
        }
    }

    fn parse_level_label(s: &str) -> Result<f64> {
        s.strip_prefix('P')
            .and_then(|v| v.parse::<f64>().ok())
            .map(|v| v / 100.0)
            .ok_or_else(|| Error::Format(format!("bad table column '{s}'")))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N");
        for &p in &self.levels {
            write!(out, ",{}", Self::level_label(p)).unwrap();
        }
        out.push('\n');
        for (n, row) in self.n_values.iter().zip(&self.quantiles) {
            write!(out, "{n}").unwrap();
            for q in row {
                write!(out, ",{q:.4}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn meta_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.meta())?)
    }

    pub fn from_csv(csv_text: &str, meta: &TableMeta) -> Result<Self> {
        let mut lines = csv_text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty table".into()))?;
        let mut cols = header.split(',').map(str::trim);
        if cols.next() != Some("N") {
            return Err(Error::Format("table header must start with N".into()));
        }
        let levels: Vec<f64> = cols.map(Self::parse_level_label).collect::<Result<_>>()?;
        let mut n_values = Vec::new();
        let mut quantiles = Vec::new();
        for line in lines {
            let mut fields = line.split(',').map(str::trim);
            let n: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad table row '{line}'")))?;
            let row: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Format(format!("{e} in '{line}'")))
                })
                .collect::<Result<_>>()?;
            if row.len() != levels.len() {
                return Err(Error::Format(format!("ragged table row '{line}'")));
            }
            n_values.push(n);
            quantiles.push(row);
        }
        if n_values.is_empty() {
            return Err(Error::Format("table has no rows".into()));
        }
        Ok(Self {
            n_values,
            levels,
            quantiles,
            std_errors: Vec::new(),
            replicates: meta.replicates,
            grid_step_deg: meta.grid_step,
            seed: meta.seed,
        })
    }

    /// Reads `path` and its `.json` sidecar (same stem).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let meta_path = path.with_extension("json");
        let meta: TableMeta = match std::fs::read_to_string(&meta_path) {
            Ok(m) => serde_json::from_str(&m)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => TableMeta {
                replicates: 0,
                grid_step: DEFAULT_GN_STEP_DEG,
                seed: 0,
            },
            Err(e) => return Err(Error::io(meta_path, e)),
        };
        Self::from_csv(&text, &meta)
    }

    /// The table shipped with the crate: N = 1..100, 10^4 replicates,
    /// 1 deg grid, seed 42.
    pub fn bundled() -> Self {
        let meta: TableMeta = serde_json::from_str(include_str!("../data/gn_table.json"))
            .expect("bundled table metadata");
        Self::from_csv(include_str!("../data/gn_table.csv"), &meta).expect("bundled table")
    }

    pub fn level_index(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|&p| (p - level).abs() < 1e-9)
    }

    pub fn get(&self, n: usize, level: f64) -> Option<f64> {
        let i = self.n_values.iter().position(|&m| m == n)?;
        let j = self.level_index(level)?;
        Some(self.quantiles[i][j])
    }

    /// Threshold `g_N(level)`, interpolated linearly in `N` and in the level
    /// between tabulated columns. Past the last row the last row is used.
    pub fn threshold(&self, n: usize, level: f64) -> Result<(f64, Lookup)> {
        let (lo_l, hi_l) = (self.levels[0], self.levels[self.levels.len() - 1]);
        if level < lo_l - 1e-12 || level > hi_l + 1e-12 {
            return Err(argument(format!(
                "level {level} outside the tabulated range [{lo_l}, {hi_l}]"
            )));
        }
        let column = |row: &[f64]| -> f64 {
            if let Some(j) = self.level_index(level) {
                return row[j];
            }
            let j = self
                .levels
                .iter()
                .position(|&p| p > level)
                .unwrap_or(self.levels.len() - 1);
            let (p0, p1) = (self.levels[j - 1], self.levels[j]);
            let w = (level - p0) / (p1 - p0);
            row[j - 1] + w * (row[j] - row[j - 1])
        };
        let last = self.n_values.len() - 1;
        if n >= self.n_values[last] {
            let lookup = if n == self.n_values[last] {
                Lookup::Exact
            } else {
                Lookup::Clamped {
                    used_n: self.n_values[last],
                }
            };
            return Ok((column(&self.quantiles[last]), lookup));
        }
        if n <= self.n_values[0] {
            if n < self.n_values[0] {
                return Err(argument(format!("N = {n} below the smallest tabulated N")));
            }
            return Ok((column(&self.quantiles[0]), Lookup::Exact));
        }
        let i = self.n_values.iter().position(|&m| m >= n).unwrap();
        if self.n_values[i] == n {
            return Ok((column(&self.quantiles[i]), Lookup::Exact));
        }
        let (n0, n1) = (self.n_values[i - 1] as f64, self.n_values[i] as f64);
        let w = (n as f64 - n0) / (n1 - n0);
        let (a, b) = (column(&self.quantiles[i - 1]), column(&self.quantiles[i]));
        Ok((a + w * (b - a), Lookup::Interpolated))
    }
}

/// Sorted `G_N` values over `replicates` uniform designs of size `n`.
/// Replicate `r` draws from a stream seeded by `(seed, n, r)`.
pub fn simulate_gn(n: usize, replicates: usize, grid: &PlanarGrid, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(argument("G_N simulation needs N >= 1"));
    }
    let mut gs: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map_init(
            || (vec![0.0; 2 * n], Vec::with_capacity(n)),
            |(points, buf), r| {
                let mut rng = seed::rng(seed, &[n as u64, r as u64]);
                fill_uniform(&mut rng, points);
                let design = Design::from_flat(points.clone(), 2, "replicate")?;
                Ok(gn_on_grid(&design, grid, buf)?.g)
            },
        )
        .collect::<Result<_>>()?;
    gs.sort_by(f64::total_cmp);
    Ok(gs)
}

/// Quantile table of `G_N` by simulation.
pub fn gn_table(
    n_values: &[usize],
    levels: &[f64],
    replicates: usize,
    resolution_deg: f64,
    seed: u64,
) -> Result<GnQuantileTable> {
    if replicates < MIN_TABLE_REPLICATES {
        return Err(argument(format!(
            "gn_table needs at least {MIN_TABLE_REPLICATES} replicates, got {replicates}"
        )));
    }
    if n_values.is_empty() || levels.is_empty() {
        return Err(argument("gn_table needs at least one N and one level"));
    }
    if levels.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(argument("table levels must lie in (0, 1)"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(argument(
            "table N values and levels must be strictly increasing",
        ));
    }
    let grid = PlanarGrid::half_turn(resolution_deg)?;
    let mut quantiles = Vec::with_capacity(n_values.len());
    let mut std_errors = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let gs = simulate_gn(n, replicates, &grid, seed)?;
        quantiles.push(levels.iter().map(|&p| nearest_rank(&gs, p)).collect());
        std_errors.push(levels.iter().map(|&p| quantile_std_error(&gs, p)).collect());
    }
    Ok(GnQuantileTable {
        n_values: n_values.to_vec(),
        levels: levels.to_vec(),
        quantiles,
        std_errors,
        replicates,
        grid_step_deg: resolution_deg,
        seed,
    })
}

/// One index of the empirical process: direction angle and threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldNode {
    pub theta_deg: f64,
    pub t: f64,
}

impl FieldNode {
    fn half_plane(&self) -> HalfPlane {
        HalfPlane::from_angle(self.theta_deg.to_radians(), self.t)
    }
}

/// Node layout: `theta_count` angles over `[0, 180)`, each with `t_count`
/// thresholds at equal-probability levels `k / (t_count + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub theta_count: usize,
    pub t_count: usize,
}

impl Default for FieldGrid {
    fn default() -> Self {
        Self {
            theta_count: 180,
            t_count: 21,
        }
    }
}

impl FieldGrid {
    pub fn nodes(&self) -> Result<Vec<FieldNode>> {
        if self.theta_count == 0 || self.t_count == 0 {
            return Err(argument(
                "field grid needs at least one angle and one threshold",
            ));
        }
        let mut nodes = Vec::with_capacity(self.theta_count * self.t_count);
        for i in 0..self.theta_count {
            let theta_deg = i as f64 * 180.0 / self.theta_count as f64;
            let cdf = ProjectionCdf::cube(&Direction::planar(theta_deg.to_radians()))?;
            for k in 1..=self.t_count {
                let t = cdf.inverse(k as f64 / (self.t_count + 1) as f64);
                nodes.push(FieldNode { theta_deg, t });
            }
        }
        Ok(nodes)
    }
}

#[derive(Debug, Clone)]
pub struct GaussianFieldSpec {
    pub nodes: Vec<FieldNode>,
    pub covariance: DMatrix<f64>,
    /// Ridge added to the diagonal by the last successful factorization.
    pub jitter: f64,
}

/// Covariance of the limiting empirical process at `nodes`:
/// `area(A_i ∩ A_j ∩ square)/4 - (area(A_i)/4)(area(A_j)/4)`.
pub fn field_covariance(nodes: &[FieldNode]) -> GaussianFieldSpec {
    let m = nodes.len();
    let planes: Vec<HalfPlane> = nodes.iter().map(FieldNode::half_plane).collect();
    let marginals: Vec<f64> = planes
        .iter()
        .map(|h| square_area_within(&[*h]) / 4.0)
        .collect();
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i..m)
                .map(|j| {
                    let joint = if i == j {
                        marginals[i]
                    } else {
                        square_area_within(&[planes[i], planes[j]]) / 4.0
                    };
                    joint - marginals[i] * marginals[j]
                })
                .collect()
        })
        .collect();
    let mut cov = DMatrix::<f64>::zeros(m, m);
    for (i, row) in upper.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            cov[(i, i + k)] = v;
            cov[(i + k, i)] = v;
        }
    }
    GaussianFieldSpec {
        nodes: nodes.to_vec(),
        covariance: cov,
        jitter: 0.0,
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(matrix: &DMatrix<f64>) -> f64 {
    matrix
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Whether `matrix + tol * I` admits a Cholesky factorization, i.e. the
/// smallest eigenvalue is at least `-tol`.
pub fn psd_within(matrix: &DMatrix<f64>, tol: f64) -> bool {
    let shifted = matrix + DMatrix::<f64>::identity(matrix.nrows(), matrix.ncols()) * tol;
    Cholesky::new(shifted).is_some()
}

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-8;

impl GaussianFieldSpec {
    /// Cholesky factor of the covariance, retrying with a diagonal ridge
    /// escalating x10 from 1e-12 up to 1e-8.
    pub fn factorize(&mut self) -> Result<Cholesky<f64, Dyn>> {
        if let Some(c) = Cholesky::new(self.covariance.clone()) {
            self.jitter = 0.0;
            return Ok(c);
        }
        let m = self.covariance.nrows();
        let mut jitter = JITTER_START;
        while jitter <= JITTER_MAX * (1.0 + 1e-9) {
            let ridged = &self.covariance + DMatrix::<f64>::identity(m, m) * jitter;
            if let Some(c) = Cholesky::new(ridged) {
                self.jitter = jitter;
                return Ok(c);
            }
            jitter *= 10.0;
        }
        let diag_min = self.covariance.diagonal().min();
        Err(Error::Numerical(format!(
            "covariance of {m} nodes is not factorizable with jitter up to {JITTER_MAX:e} \
             (smallest diagonal entry {diag_min:e})"
        )))
    }

    /// Draws `replicates` field realizations and hands each one (values in
    /// node order) to `visit`. Replicate `r` uses the stream `(seed, r)`.
    pub fn simulate(
        &self,
        factor: &Cholesky<f64, Dyn>,
        replicates: usize,
        seed: u64,
        mut visit: impl FnMut(usize, &[f64]),
    ) {
        const BLOCK: usize = 256;
        let m = self.nodes.len();
        let lower = factor.l();
        let mut start = 0;
        while start < replicates {
            let count = BLOCK.min(replicates - start);
            let mut z = DMatrix::<f64>::zeros(m, count);
            for c in 0..count {
                let mut rng = seed::rng(seed, &[(start + c) as u64]);
                for v in z.column_mut(c).iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
            }
            let y = &lower * z;
            for c in 0..count {
                visit(start + c, y.column(c).as_slice());
            }
            start += count;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticGn {
    pub grid: FieldGrid,
    /// Sorted simulated ratios.
    pub ratios: Vec<f64>,
    pub levels: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub jitter: f64,
    pub seed: u64,
}

impl AsymptoticGn {
    pub fn quantile(&self, p: f64) -> f64 {
        nearest_rank(&self.ratios, p)
    }
}

/// Samples the limiting law of `G_N`: per realization of the Gaussian field,
/// the sup over thresholds of `|Y|` per angle, then the sup/inf ratio over
/// angles.
pub fn gn_asymptotic(
    grid: FieldGrid,
    replicates: usize,
    seed: u64,
    levels: &[f64],
) -> Result<AsymptoticGn> {
    if replicates == 0 {
        return Err(argument("gn_asymptotic needs at least one replicate"));
    }
    let mut spec = field_covariance(&grid.nodes()?);
    let factor = spec.factorize()?;
    asymptotic_from_spec(&spec, &factor, grid, replicates, seed, levels)
}

pub fn asymptotic_from_spec(
    spec: &GaussianFieldSpec,
    factor: &Cholesky<f64, Dyn>,
    grid: FieldGrid,
    replicates: usize,
    seed: u64,
    levels: &[f64],
) -> Result<AsymptoticGn> {
    if spec.nodes.len() != grid.theta_count * grid.t_count {
        return Err(argument("field spec does not match the grid"));
    }
    let mut ratios = vec![0.0; replicates];
    spec.simulate(factor, replicates, seed, |r, y| {
        let per_angle = y
            .chunks_exact(grid.t_count)
            .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let (sup, inf) = per_angle.fold((0.0f64, f64::INFINITY), |(s, i), v| (s.max(v), i.min(v)));
        ratios[r] = sup / inf;
    });
    ratios.sort_by(f64::total_cmp);
    let quantiles = levels.iter().map(|&p| nearest_rank(&ratios, p)).collect();
    Ok(AsymptoticGn {
        grid,
        ratios,
        levels: levels.to_vec(),
        quantiles,
        jitter: spec.jitter,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::gen_uniform;
    use rand::{Rng, SeedableRng};
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn single_origin_point() {
        let d = Design::new(vec![vec![0.0, 0.0]], "o").unwrap();
        let r = gn(&d, 1.0).unwrap();
        assert!((r.g - 1.0).abs() < 1e-12);
        assert!((r.sup_value - 0.5).abs() < 1e-12);
        assert!(gn(&gen_uniform(5, 3, 1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn g_at_least_one() {
        for seed in 0..20 {
            let r = gn(&gen_uniform(17, 2, seed).unwrap(), 2.0).unwrap();
            assert!(r.g >= 1.0);
            assert!((r.g - r.sup_value / r.inf_value).abs() < 1e-15);
        }
    }

    #[test]
    fn quarter_turn_invariance() {
        let d = gen_uniform(30, 2, 9).unwrap();
        let rotated = Design::new(d.rows().map(|p| vec![-p[1], p[0]]).collect(), "rot").unwrap();
        let a = gn(&d, 1.0).unwrap();
        let b = gn(&rotated, 1.0).unwrap();
        assert!((a.g - b.g).abs() < 1e-9, "{} vs {}", a.g, b.g);
    }

    #[test]
    fn nearest_rank_quantiles() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 0.95), 10.0);
        assert_eq!(nearest_rank(&v, 0.80), 8.0);
        assert_eq!(nearest_rank(&v, 0.81), 9.0);
        assert_eq!(nearest_rank(&v, 0.0), 1.0);
    }

    #[test]
    fn small_table_is_reproducible_and_monotone() {
        let a = gn_table(&[2, 5], &TABLE_LEVELS, 1000, 2.0, 5).unwrap();
        let b = gn_table(&[2, 5], &TABLE_LEVELS, 1000, 2.0, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        for row in &a.quantiles {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
            assert!(row.iter().all(|&q| q >= 1.0));
        }
        assert!(a.to_csv().starts_with("N,P80,P85,P90,P95,P99\n"));
        assert!(gn_table(&[2], &TABLE_LEVELS, 999, 2.0, 5).is_err());
    }

    #[test]
    fn single_point_table_is_bounded_by_two() {
        let t = gn_table(&[1], &[0.5, 0.99], 1000, 1.0, 3).unwrap();
        assert!(t.quantiles[0].iter().all(|&q| (1.0..=2.0).contains(&q)));
    }

    #[test]
    fn table_csv_round_trip_and_lookup() {
        let t = GnQuantileTable {
            n_values: vec![10, 20],
            levels: vec![0.9, 0.95],
            quantiles: vec![vec![3.0, 4.0], vec![3.5, 4.5]],
            std_errors: vec![],
            replicates: 1000,
            grid_step_deg: 1.0,
            seed: 1,
        };
        let back = GnQuantileTable::from_csv(&t.to_csv(), &t.meta()).unwrap();
        assert_eq!(back.quantiles, t.quantiles);
        assert_eq!(back.levels, t.levels);
        assert_eq!(t.threshold(10, 0.95).unwrap(), (4.0, Lookup::Exact));
        assert_eq!(t.threshold(15, 0.95).unwrap(), (4.25, Lookup::Interpolated));
        assert_eq!(
            t.threshold(150, 0.9).unwrap(),
            (3.5, Lookup::Clamped { used_n: 20 })
        );
        let (mid, _) = t.threshold(10, 0.925).unwrap();
        assert!((mid - 3.5).abs() < 1e-12);
        assert!(t.threshold(10, 0.99).is_err());
        assert!(t.threshold(5, 0.9).is_err());
    }

    #[test]
    fn bundled_table_shape() {
        let t = GnQuantileTable::bundled();
        assert_eq!(t.n_values, (1..=100).collect::<Vec<_>>());
        assert_eq!(t.levels, TABLE_LEVELS.to_vec());
        assert_eq!(t.replicates, DEFAULT_REPLICATES);
        assert_eq!(t.seed, 42);
        for row in &t.quantiles {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
            assert!(row[0] >= 1.0);
        }
    }

    fn node(theta_deg: f64, t: f64) -> FieldNode {
        FieldNode { theta_deg, t }
    }

    #[test]
    fn covariance_hand_cases() {
        // x < 0 twice, x < 0 with y < 0, x < 0 with (x + y)/sqrt2 < 0
        let spec = field_covariance(&[node(0.0, 0.0), node(90.0, 0.0), node(45.0, 0.0)]);
        let c = &spec.covariance;
        assert!((c[(0, 0)] - 0.25).abs() < 1e-12);
        assert!(c[(0, 1)].abs() < 1e-12);
        assert!((c[(0, 2)] - 0.125).abs() < 1e-12);
        assert_eq!(c[(2, 0)], c[(0, 2)]);
    }

    #[test]
    fn covariance_matches_monte_carlo() {
        let nodes = [node(0.0, 0.0), node(45.0, 0.0)];
        let spec = field_covariance(&nodes);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 400_000;
        let (mut both, mut a, mut b) = (0usize, 0usize, 0usize);
        for _ in 0..n {
            let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let ia = x < 0.0;
            let ib = (x + y) < 0.0;
            a += usize::from(ia);
            b += usize::from(ib);
            both += usize::from(ia && ib);
        }
        let nf = n as f64;
        let mc = both as f64 / nf - (a as f64 / nf) * (b as f64 / nf);
        assert!((mc - spec.covariance[(0, 1)]).abs() < 0.005);
    }

    #[test]
    fn diagonal_is_bernoulli_variance() {
        let grid = FieldGrid {
            theta_count: 6,
            t_count: 5,
        };
        let spec = field_covariance(&grid.nodes().unwrap());
        for (i, nd) in spec.nodes.iter().enumerate() {
            let p = ProjectionCdf::cube(&Direction::planar(nd.theta_deg.to_radians()))
                .unwrap()
                .cdf(nd.t);
            assert!((spec.covariance[(i, i)] - p * (1.0 - p)).abs() < 1e-12);
        }
        let c = &spec.covariance;
        assert!((c - c.transpose()).abs().max() <= 1e-12);
    }

    #[test]
    fn covariance_psd_on_moderate_grid() {
        let grid = FieldGrid {
            theta_count: 36,
            t_count: 21,
        };
        let spec = field_covariance(&grid.nodes().unwrap());
        assert_eq!(spec.covariance.nrows(), 756);
        let lam = min_eigenvalue(&spec.covariance);
        assert!(lam >= -1e-10, "min eigenvalue {lam}");
        assert!(psd_within(&spec.covariance, 1e-10));
    }

    #[test]
    fn field_marginal_is_normal() {
        let grid = FieldGrid {
            theta_count: 12,
            t_count: 5,
        };
        let mut spec = field_covariance(&grid.nodes().unwrap());
        let factor = spec.factorize().unwrap();
        assert!(spec.jitter <= 1e-8);
        let node = 7;
        let var = spec.covariance[(node, node)];
        let mut sample = Vec::new();
        spec.simulate(&factor, 4000, 11, |_, y| sample.push(y[node]));
        let normal = Normal::new(0.0, var.sqrt()).unwrap();
        let u: Vec<f64> = sample.iter().map(|&x| normal.cdf(x)).collect();
        let r = crate::gof::ks_statistic(&u).unwrap();
        assert!(r.p_value > 0.01, "p = {}", r.p_value);
        let emp_var = sample.iter().map(|x| x * x).sum::<f64>() / sample.len() as f64;
        assert!((emp_var - var).abs() < 0.1 * var);
    }

    #[test]
    fn asymptotic_is_reproducible() {
        let grid = FieldGrid {
            theta_count: 18,
            t_count: 7,
        };
        let a = gn_asymptotic(grid, 500, 3, &[0.5, 0.95]).unwrap();
        let b = gn_asymptotic(grid, 500, 3, &[0.5, 0.95]).unwrap();
        assert_eq!(a.ratios, b.ratios);
        assert!(a.ratios.iter().all(|&g| g >= 1.0));
        assert!(a.quantiles[0] <= a.quantiles[1]);
    }
}
