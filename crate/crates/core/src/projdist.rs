//! Distribution of the orthogonal projection of a uniform point onto a line.
//!
//! For `X` uniform on `[-1, 1]^d` and a unit vector `a`, `Z = a . X` is a sum
//! of independent uniforms on `[-|a_j|, |a_j|]`. Its CDF is the alternating
//! corner sum
//!
//! ```text
//! F(z) = prod_j 1/(2|a_j|) * sum_{s in {-1,1}^d} eps(s) (z + s.|a|)_+^d / d!
//! ```
//!
//! with `eps(s) = prod_j s_j`; the density is the same sum one degree lower.
//! Both are piecewise polynomials whose knots are the projected corners of
//! the cube. The disk case (uniform point in the unit disk) has the
//! closed form `1/2 + (asin z + z sqrt(1 - z^2)) / pi`.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{argument, Result};

/// Components with magnitude below this are treated as exactly zero.
pub const ZERO_COMPONENT: f64 = 1e-12;

/// Largest number of non-zero components the corner sum supports.
pub const MAX_CUBE_DIM: usize = 15;

/// A unit vector defining the projection line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `components`; the zero vector is rejected.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(argument("direction needs at least one component"));
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(argument("direction components must be finite"));
        }
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(argument("zero vector is not a direction"));
        }
        Ok(Self(components.into_iter().map(|x| x / norm).collect()))
    }

    /// `(cos theta, sin theta)`.
    pub fn planar(theta: f64) -> Self {
        Self(vec![theta.cos(), theta.sin()])
    }

    /// `(cos phi cos theta, cos phi sin theta, sin phi)`; theta is longitude,
    /// phi latitude.
    pub fn spherical(theta: f64, phi: f64) -> Self {
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = theta.sin_cos();
        Self(vec![cp * ct, cp * st, sp])
    }

    /// Unit basis vector `e_axis` in dimension `dim`.
    pub fn axis(dim: usize, axis: usize) -> Result<Self> {
        if axis >= dim {
            return Err(argument(format!("axis {axis} out of range for dim {dim}")));
        }
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Ok(Self(v))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Cube,
    Disk,
}

/// The projection distribution along one direction, ready for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct ProjectionCdf {
    kind: DomainKind,
    /// Projected corners `s . |a|` paired with `eps(s)`.
    corners: Vec<(f64, f64)>,
    degree: i32,
    cdf_scale: f64,
    pdf_scale: f64,
    lo: f64,
    hi: f64,
}

impl ProjectionCdf {
    /// Projection of the uniform distribution on `[-1, 1]^d` onto `a`.
    pub fn cube(a: &Direction) -> Result<Self> {
        let weights: Vec<f64> = a
            .components()
            .iter()
            .map(|x| x.abs())
            .filter(|&x| x >= ZERO_COMPONENT)
            .collect();
        if weights.is_empty() {
            return Err(argument("direction has no non-zero component"));
        }
        let d = weights.len();
        if d > MAX_CUBE_DIM {
            return Err(argument(format!(
                "projection CDF supports at most {MAX_CUBE_DIM} non-zero components, got {d}"
            )));
        }
        let corners: Vec<(f64, f64)> = (0u32..1 << d)
            .map(|mask| {
                let mut offset = 0.0;
                let mut sign = 1.0;
                for (j, w) in weights.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        offset += w;
                    } else {
                        offset -= w;
                        sign = -sign;
                    }
                }
                (offset, sign)
            })
            .collect();
        let prefactor: f64 = weights.iter().map(|w| 1.0 / (2.0 * w)).product();
        let fact_dm1: f64 = (1..d).map(|k| k as f64).product();
        let half_width: f64 = weights.iter().sum();
        Ok(Self {
            kind: DomainKind::Cube,
            corners,
            degree: d as i32,
            cdf_scale: prefactor / (fact_dm1 * d as f64),
            pdf_scale: prefactor / fact_dm1,
            lo: -half_width,
            hi: half_width,
        })
    }

    /// Projection of the uniform distribution on the unit disk onto any axis.
    pub fn disk() -> Self {
        Self {
            kind: DomainKind::Disk,
            corners: Vec::new(),
            degree: 2,
            cdf_scale: 1.0,
            pdf_scale: 1.0,
            lo: -1.0,
            hi: 1.0,
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Number of non-zero direction components kept in the corner sum.
    pub fn reduced_dim(&self) -> usize {
        match self.kind {
            DomainKind::Cube => self.degree as usize,
            DomainKind::Disk => 2,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Projected cube corners, the knots of the piecewise-polynomial density.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.corners.iter().map(|c| c.0).collect();
        k.sort_by(f64::total_cmp);
        k.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        k
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= self.lo {
            return 0.0;
        }
        if z >= self.hi {
            return 1.0;
        }
        match self.kind {
            DomainKind::Disk => disk_cdf(z),
            DomainKind::Cube => {
                let s = self.corner_sum(z, self.degree);
                (self.cdf_scale * s).clamp(0.0, 1.0)
            }
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if z < self.lo || z > self.hi {
            return 0.0;
        }
        match self.kind {
            DomainKind::Disk => disk_pdf(z),
            DomainKind::Cube => (self.pdf_scale * self.corner_sum(z, self.degree - 1)).max(0.0),
        }
    }

    /// Smallest `z` with `cdf(z) >= p`, by bisection.
    pub fn inverse(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.lo;
        }
        if p >= 1.0 {
            return self.hi;
        }
        let (mut lo, mut hi) = (self.lo, self.hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// `sum_s eps(s) (z + s.a)_+^power`, accumulated smallest-magnitude first
    /// with Kahan compensation. `power == 0` uses the convention `0^0 = 0`.
    fn corner_sum(&self, z: f64, power: i32) -> f64 {
        let mut terms: SmallVec<[f64; 16]> = self
            .corners
            .iter()
            .filter_map(|&(offset, sign)| {
                let y = z + offset;
                (y > 0.0).then(|| sign * if power == 0 { 1.0 } else { y.powi(power) })
            })
            .collect();
        terms.sort_unstable_by(|a, b| a.abs().total_cmp(&b.abs()));
        let mut sum = 0.0;
        let mut comp = 0.0;
        for t in terms {
            let y = t - comp;
            let next = sum + y;
            comp = (next - sum) - y;
            sum = next;
        }
        sum
    }
}

/// CDF of `a . X` for `X` uniform on the cube `[-1, 1]^d`.
pub fn cube_cdf(a: &Direction, z: f64) -> Result<f64> {
    Ok(ProjectionCdf::cube(a)?.cdf(z))
}

/// Density of `a . X` for `X` uniform on the cube `[-1, 1]^d`.
pub fn cube_pdf(a: &Direction, z: f64) -> Result<f64> {
    Ok(ProjectionCdf::cube(a)?.pdf(z))
}

/// CDF of the projection of a uniform point in the unit disk onto any axis.
pub fn disk_cdf(z: f64) -> f64 {
    let z = z.clamp(-1.0, 1.0);
    let v = 0.5 + (z.asin() + z * (1.0 - z * z).sqrt()) / std::f64::consts::PI;
    v.clamp(0.0, 1.0)
}

pub fn disk_pdf(z: f64) -> f64 {
    if z.abs() > 1.0 {
        return 0.0;
    }
    2.0 / std::f64::consts::PI * (1.0 - z * z).sqrt()
}
