//! Areas of the square `[-1, 1]^2` cut by half-planes.
//!
//! `P(A_s ∩ A_t)` for two projection half-planes is the area of a convex
//! polygon divided by 4; the polygon comes from clipping the square twice.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

/// Vertices within this distance of a clipping line count as on it.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Areas below this are reported as zero.
pub const SLIVER_AREA: f64 = 1e-15;

pub type Point = [f64; 2];

/// The open half-plane `{x : x . normal < offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    normal: [f64; 2],
    offset: f64,
}

impl HalfPlane {
    /// Half-plane with unit normal `(cos theta, sin theta)`.
    pub fn from_angle(theta: f64, offset: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            normal: [c, s],
            offset,
        }
    }

    /// Normalizes `normal`, rescaling `offset` to match.
    pub fn new(normal: [f64; 2], offset: f64) -> Result<Self> {
        let norm = normal[0].hypot(normal[1]);
        if norm.is_nan() || norm <= 0.0 || !offset.is_finite() {
            return Err(argument(
                "half-plane needs a non-zero normal and finite offset",
            ));
        }
        Ok(Self {
            normal: [normal[0] / norm, normal[1] / norm],
            offset: offset / norm,
        })
    }

    pub fn normal(&self) -> [f64; 2] {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance of `p` past the boundary; negative inside.
    pub fn excess(&self, p: Point) -> f64 {
        p[0] * self.normal[0] + p[1] * self.normal[1] - self.offset
    }

    pub fn complement(&self) -> Self {
        Self {
            normal: [-self.normal[0], -self.normal[1]],
            offset: -self.offset,
        }
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Checks counter-clockwise convexity (cross products >= -1e-12).
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let poly = Self { vertices };
        let n = poly.vertices.len();
        if n >= 3 {
            for i in 0..n {
                let a = poly.vertices[i];
                let b = poly.vertices[(i + 1) % n];
                let c = poly.vertices[(i + 2) % n];
                let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                if cross < -BOUNDARY_TOL {
                    return Err(argument("polygon is not convex and counter-clockwise"));
                }
            }
        }
        Ok(poly)
    }

    /// The domain `[-1, 1]^2`.
    pub fn square() -> Self {
        Self {
            vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }
}

/// Intersection of a convex polygon with a half-plane (Sutherland-Hodgman,
/// one edge). Boundary vertices are kept.
pub fn clip(poly: &ConvexPolygon, h: &HalfPlane) -> ConvexPolygon {
    let verts = &poly.vertices;
    let n = verts.len();
    let mut out: Vec<Point> = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = verts[i];
        let next = verts[(i + 1) % n];
        let ec = h.excess(cur);
        let en = h.excess(next);
        let cur_in = ec <= BOUNDARY_TOL;
        if cur_in {
            out.push(cur);
        }
        // strict crossing: one side clearly out, the other clearly in
        if (ec > BOUNDARY_TOL && en < -BOUNDARY_TOL) || (ec < -BOUNDARY_TOL && en > BOUNDARY_TOL) {
            let t = ec / (ec - en);
            out.push([
                cur[0] + t * (next[0] - cur[0]),
                cur[1] + t * (next[1] - cur[1]),
            ]);
        }
    }
    out.dedup_by(|a, b| (a[0] - b[0]).abs() <= BOUNDARY_TOL && (a[1] - b[1]).abs() <= BOUNDARY_TOL);
    if out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if (first[0] - last[0]).abs() <= BOUNDARY_TOL && (first[1] - last[1]).abs() <= BOUNDARY_TOL
        {
            out.pop();
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    ConvexPolygon { vertices: out }
}

/// Shoelace area; zero below three vertices or under `SLIVER_AREA`.
pub fn area(poly: &ConvexPolygon) -> f64 {
    let v = &poly.vertices;
    if v.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..v.len())
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    let a = 0.5 * twice.abs();
    if a < SLIVER_AREA {
        0.0
    } else {
        a
    }
}

/// Area of `[-1, 1]^2` inside every half-plane of `planes`.
pub fn square_area_within(planes: &[HalfPlane]) -> f64 {
    let mut poly = ConvexPolygon::square();
    for h in planes {
        poly = clip(&poly, h);
        if poly.is_empty() {
            return 0.0;
        }
    }
    area(&poly)
}
