//! Experimental designs: the N x d point sets under test.
//!
//! Every design lives in the cube `[-1, 1]^d`. Designs can be read from CSV
//! files or produced by the generators used throughout the examples: i.i.d.
//! uniform sampling, Halton sequences and the 49-point linear orthogonal
//! array.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::seed;

/// An immutable N x d point set in `[-1, 1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    label: String,
}

impl Design {
    /// Builds a design from rows, checking shape and bounds.
    pub fn new(rows: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(argument("a design needs at least one point"));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(argument("a design needs at least one coordinate"));
        }
        let mut points = Vec::with_capacity(n * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Format(format!(
                    "row {} has {} coordinates, expected {dim}",
                    i + 1,
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Self::from_flat(points, dim, label)
    }

    /// Builds a design from a row-major buffer.
    pub fn from_flat(points: Vec<f64>, dim: usize, label: impl Into<String>) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(argument(format!(
                "buffer of length {} is not a non-empty multiple of dim {dim}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|x| !(-1.0..=1.0).contains(x)) {
            return Err(Error::Domain(format!(
                "coordinate {} of point {} is {}, outside [-1, 1]",
                pos % dim + 1,
                pos / dim + 1,
                points[pos]
            )));
        }
        Ok(Self {
            n: points.len() / dim,
            points,
            dim,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// Keeps only the listed coordinates (0-based), in the given order.
    pub fn restrict(&self, coords: &[usize]) -> Result<Design> {
        if coords.is_empty() {
            return Err(argument("restriction needs at least one coordinate"));
        }
        if let Some(&c) = coords.iter().find(|&&c| c >= self.dim) {
            return Err(argument(format!(
                "coordinate index {c} out of range for dimension {}",
                self.dim
            )));
        }
        let mut points = Vec::with_capacity(self.n * coords.len());
        for row in self.rows() {
            points.extend(coords.iter().map(|&c| row[c]));
        }
        let names: Vec<String> = coords.iter().map(|c| (c + 1).to_string()).collect();
        Ok(Design {
            points,
            n: self.n,
            dim: coords.len(),
            label: format!("{}[{}]", self.label, names.join(",")),
        })
    }

    /// Writes the design as CSV with 17 significant digits per field.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 25);
        for row in self.rows() {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{x:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// How CSV coordinates are brought into `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Rescale {
    /// Coordinates must already lie in `[-1, 1]`.
    None,
    /// Each column's observed `[min, max]` maps to `[-1, 1]`.
    Observed,
    /// Each column's declared `[lo, hi]` maps to `[-1, 1]`.
    Declared(Vec<(f64, f64)>),
}

/// Reads a design from a CSV file; `rescale` maps observed column ranges onto `[-1, 1]`.
pub fn load_csv(path: impl AsRef<Path>, rescale: bool) -> Result<Design> {
    let mode = if rescale {
        Rescale::Observed
    } else {
        Rescale::None
    };
    load_csv_with(path, &mode)
}

pub fn load_csv_with(path: impl AsRef<Path>, rescale: &Rescale) -> Result<Design> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, rescale, label)
}

/// Parses CSV text. A non-numeric first row is treated as a header.
pub fn parse_csv(text: &str, rescale: &Rescale, label: impl Into<String>) -> Result<Design> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                    return Err(Error::Format(format!(
                        "line {}: non-finite value {x}",
                        line + 1
                    )));
                }
                rows.push(row);
            }
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Format(format!("line {}: {e}", line + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let dim = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != dim) {
        return Err(Error::Format(format!(
            "ragged rows: data row {} has {} fields, expected {dim}",
            i + 1,
            rows[i].len()
        )));
    }

    let bounds: Option<Vec<(f64, f64)>> = match rescale {
        Rescale::None => None,
        Rescale::Observed => Some(
            (0..dim)
                .map(|j| {
                    rows.iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                            (lo.min(r[j]), hi.max(r[j]))
                        })
                })
                .collect(),
        ),
        Rescale::Declared(b) => {
            if b.len() != dim {
                return Err(argument(format!(
                    "{} declared bounds for {dim} columns",
                    b.len()
                )));
            }
            Some(b.clone())
        }
    };
    if let Some(bounds) = bounds {
        for row in rows.iter_mut() {
            for (x, &(lo, hi)) in row.iter_mut().zip(&bounds) {
                *x = if hi > lo {
                    (-1.0 + 2.0 * (*x - lo) / (hi - lo)).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
            }
        }
    }
    Design::new(rows, label)
}

/// `n` i.i.d. points uniform on `[-1, 1]^d`, reproducible from `seed`.
pub fn gen_uniform(n: usize, d: usize, seed: u64) -> Result<Design> {
    if n == 0 || d == 0 {
        return Err(argument("uniform design needs n >= 1 and d >= 1"));
    }
    let mut rng = seed::rng(seed, &[]);
    let points: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Design::from_flat(points, d, format!("uniform(n={n},d={d},seed={seed})"))
}

/// Fills `buf` with i.i.d. uniform coordinates in `[-1, 1]`.
pub(crate) fn fill_uniform<R: Rng>(rng: &mut R, buf: &mut [f64]) {
    for x in buf {
        *x = rng.random_range(-1.0..=1.0);
    }
}

/// The first `k` primes.
pub fn primes(k: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(k);
    let mut c = 2u64;
    while out.len() < k {
        if out
            .iter()
            .take_while(|&&p| p * p <= c)
            .all(|&p| !c.is_multiple_of(p))
        {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Van der Corput radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points on the 1-based dimension indices `dims` (index k uses the
/// k-th prime), starting at sequence index `skip + 1`, mapped to `[-1, 1]`.
pub fn gen_halton(n: usize, dims: &[usize], skip: u64) -> Result<Design> {
    if dims.is_empty() {
        return Err(argument("halton needs at least one dimension index"));
    }
    if n == 0 {
        return Err(argument("halton needs n >= 1"));
    }
    if dims.contains(&0) {
        return Err(argument("halton dimension indices are 1-based"));
    }
    let max = *dims.iter().max().unwrap();
    let table = primes(max);
    let bases: Vec<u64> = dims.iter().map(|&k| table[k - 1]).collect();
    let mut points = Vec::with_capacity(n * dims.len());
    for i in 0..n as u64 {
        let index = skip + i + 1;
        points.extend(bases.iter().map(|&b| 2.0 * radical_inverse(index, b) - 1.0));
    }
    let names: Vec<String> = dims.iter().map(usize::to_string).collect();
    Design::from_flat(
        points,
        dims.len(),
        format!("halton(n={n},dims={},skip={skip})", names.join(",")),
    )
}

pub const OA49_LEVELS: u32 = 7;

/// Integer levels of the 49-point linear orthogonal array:
/// `x1 + 3 x2 + x3 = 0 (mod 7)`.
pub fn linear_oa49_levels() -> Vec<[u32; 3]> {
    let q = OA49_LEVELS;
    let mut out = Vec::with_capacity((q * q) as usize);
    for x1 in 0..q {
        for x2 in 0..q {
            let x3 = (3 * q - x1 - (3 * x2) % q) % q;
            out.push([x1, x2, x3]);
        }
    }
    out
}

/// The 49-point linear orthogonal array of strength two on a 7-level grid,
/// level `l` placed at the cell midpoint `-1 + (2l + 1) / 7`.
pub fn gen_linear_oa49() -> Design {
    let q = OA49_LEVELS as f64;
    let points: Vec<f64> = linear_oa49_levels()
        .into_iter()
        .flatten()
        .map(|l| -1.0 + (2.0 * l as f64 + 1.0) / q)
        .collect();
    Design::from_flat(points, 3, "linear-oa49").expect("levels map inside the cube")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), content).unwrap();
        f
    }

    #[test]
    fn load_single_origin() {
        let f = write_tmp("0,0\n");
        let d = load_csv(f.path(), false).unwrap();
        assert_eq!((d.n(), d.dim()), (1, 2));
        assert_eq!(d.point(0), &[0.0, 0.0]);
    }

    #[test]
    fn load_with_header_and_rescale() {
        let f = write_tmp("x,y\n0,0.5\n1,0.25\n0.5,1\n");
        let d = load_csv(f.path(), true).unwrap();
        assert_eq!(d.n(), 3);
        assert!(d.as_flat().iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(d.point(0)[0], -1.0);
        assert!((d.point(0)[1] + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.point(1)[0], 1.0);
        assert_eq!(d.point(1)[1], -1.0);
        assert_eq!(d.point(2)[1], 1.0);
    }

    #[test]
    fn declared_bounds() {
        let d = parse_csv(
            "0.5,5\n",
            &Rescale::Declared(vec![(0.0, 1.0), (0.0, 10.0)]),
            "t",
        )
        .unwrap();
        assert_eq!(d.point(0), &[0.0, 0.0]);
    }

    #[test]
    fn out_of_domain_without_rescale() {
        let f = write_tmp("1,2\n");
        assert!(matches!(load_csv(f.path(), false), Err(Error::Domain(_))));
    }

    #[test]
    fn ragged_and_empty_are_format_errors() {
        let f = write_tmp("0,0\n0.1\n");
        assert!(matches!(load_csv(f.path(), false), Err(Error::Format(_))));
        let f = write_tmp("");
        assert!(matches!(load_csv(f.path(), false), Err(Error::Format(_))));
        let f = write_tmp("a,b\n");
        assert!(matches!(load_csv(f.path(), false), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv("/nonexistent/design.csv", false),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn uniform_mean_and_determinism() {
        let d = gen_uniform(1000, 2, 7).unwrap();
        for j in 0..2 {
            let mean = d.rows().map(|r| r[j]).sum::<f64>() / 1000.0;
            assert!(mean.abs() <= 0.06, "column {j} mean {mean}");
        }
        assert_eq!(d, gen_uniform(1000, 2, 7).unwrap());
        let wide = gen_uniform(5, 15, 1).unwrap();
        assert_eq!((wide.n(), wide.dim()), (5, 15));
        assert!(gen_uniform(0, 2, 1).is_err());
        assert!(gen_uniform(3, 0, 1).is_err());
    }

    #[test]
    fn halton_first_values_base_two() {
        let d = gen_halton(3, &[1], 0).unwrap();
        let raw: Vec<f64> = d.rows().map(|r| (r[0] + 1.0) / 2.0).collect();
        assert_eq!(raw, vec![0.5, 0.25, 0.75]);
        assert!(gen_halton(3, &[], 0).is_err());
    }

    #[test]
    fn halton_bases_follow_primes() {
        assert_eq!(primes(15)[13..], [43, 47]);
        let d = gen_halton(1, &[1, 2], 0).unwrap();
        assert_eq!(d.point(0), &[0.0, 2.0 / 3.0 - 1.0]);
        let skipped = gen_halton(2, &[1, 2], 1).unwrap();
        assert_eq!(
            skipped.point(0),
            gen_halton(2, &[1, 2], 0).unwrap().point(1)
        );
    }

    #[test]
    fn halton_prefix_consistent() {
        let short = gen_halton(40, &[3, 6], 0).unwrap();
        let long = gen_halton(100, &[3, 6], 0).unwrap();
        assert_eq!(short.as_flat(), &long.as_flat()[..80]);
    }

    #[test]
    fn oa49_structure() {
        let d = gen_linear_oa49();
        assert_eq!((d.n(), d.dim()), (49, 3));
        let levels = linear_oa49_levels();
        for l in &levels {
            assert_eq!((l[0] + 3 * l[1] + l[2]) % 7, 0);
        }
        let distinct: HashSet<_> = levels.iter().collect();
        assert_eq!(distinct.len(), 49);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let cells: HashSet<_> = levels.iter().map(|l| (l[a], l[b])).collect();
            assert_eq!(cells.len(), 49, "projection ({a},{b}) is not the full grid");
        }
        for axis in 0..3 {
            let mut counts = [0; 7];
            for l in &levels {
                counts[l[axis] as usize] += 1;
            }
            assert_eq!(counts, [7; 7]);
        }
        assert_eq!(d.point(0)[0], -1.0 + 1.0 / 7.0);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let d = gen_uniform(50, 3, 11).unwrap();
        let back = parse_csv(&d.to_csv_string(), &Rescale::None, d.label()).unwrap();
        assert_eq!(back.as_flat(), d.as_flat());
    }

    #[test]
    fn restrict_keeps_order() {
        let d = Design::new(vec![vec![0.1, 0.2, 0.3]], "r").unwrap();
        let r = d.restrict(&[2, 0]).unwrap();
        assert_eq!(r.point(0), &[0.3, 0.1]);
        assert!(d.restrict(&[3]).is_err());
    }
}
