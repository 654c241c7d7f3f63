//! Goodness-of-fit statistics for projected samples.
//!
//! Projections are pushed through their exact CDF (probability integral
//! transform) so every statistic here compares a sample against the uniform
//! distribution on `[0, 1]`, whatever the projection direction.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::projdist::ProjectionCdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    /// Kolmogorov-Smirnov sup distance.
    #[default]
    Ks,
    /// Cramer-von Mises integrated squared distance.
    Cvm,
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatKind::Ks => "ks",
            StatKind::Cvm => "cvm",
        })
    }
}

impl std::str::FromStr for StatKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ks" => Ok(StatKind::Ks),
            "cvm" => Ok(StatKind::Cvm),
            other => Err(argument(format!("unknown statistic '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub kind: StatKind,
}

/// Probability integral transform `u_i = F(z_i)`.
pub fn pit(sample: &[f64], cdf: &ProjectionCdf) -> Vec<f64> {
    sample.iter().map(|&z| cdf.cdf(z)).collect()
}

/// KS distance of an ascending sample from U(0,1).
pub fn ks_distance_sorted(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    u.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let above = (i + 1) as f64 / n - x;
        let below = x - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Cramer-von Mises statistic `N w^2` of an ascending sample against U(0,1).
pub fn cvm_distance_sorted(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    let sum: f64 = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let e = x - (2 * i + 1) as f64 / (2.0 * n);
            e * e
        })
        .sum();
    1.0 / (12.0 * n) + sum
}

fn sorted_copy(u: &[f64]) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(argument("goodness-of-fit needs a non-empty sample"));
    }
    let mut v = u.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn ks_statistic(u: &[f64]) -> Result<GofResult> {
    let v = sorted_copy(u)?;
    let d = ks_distance_sorted(&v);
    Ok(GofResult {
        statistic: d,
        p_value: ks_pvalue(d, v.len()),
        n: v.len(),
        kind: StatKind::Ks,
    })
}

pub fn cvm_statistic(u: &[f64]) -> Result<GofResult> {
    let v = sorted_copy(u)?;
    let w = cvm_distance_sorted(&v);
    Ok(GofResult {
        statistic: w,
        p_value: cvm_pvalue(w, v.len()),
        n: v.len(),
        kind: StatKind::Cvm,
    })
}

pub fn statistic(kind: StatKind, u: &[f64]) -> Result<GofResult> {
    match kind {
        StatKind::Ks => ks_statistic(u),
        StatKind::Cvm => cvm_statistic(u),
    }
}

/// Limiting Kolmogorov distribution `P(K <= lambda)`.
pub fn kolmogorov_cdf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda < 1.18 {
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            let term = (c * m * m).exp();
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        ((2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += sign * term;
            sign = -sign;
            if term < 1e-17 {
                break;
            }
        }
        (1.0 - 2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Stephens' scaling turning a finite-N KS distance into a Kolmogorov variate.
fn stephens_scale(n: f64) -> f64 {
    let s = n.sqrt();
    s + 0.12 + 0.11 / s
}

/// Upper-tail probability of the KS distance `d` for a sample of size `n`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    1.0 - kolmogorov_cdf(stephens_scale(n as f64) * d)
}

/// Threshold `ks` with `P(D_n > ks) = 1 - level`, capped at 1.
pub fn ks_critical(n: usize, level: f64) -> Result<f64> {
    check_level(n, level)?;
    let lambda = bisect(|x| kolmogorov_cdf(x) - level, 0.0, 10.0);
    Ok((lambda / stephens_scale(n as f64)).min(1.0))
}

/// Modified Bessel function of the second kind `K_nu(z)`, `z > 0`, from
/// `int_0^inf exp(-z cosh t) cosh(nu t) dt`.
fn bessel_k(nu: f64, z: f64) -> f64 {
    // integrand decays as exp(-z (cosh t - 1)); stop once that is below e^-45
    let t_max = (1.0 + 45.0 / z).acosh();
    let steps = 600;
    let h = t_max / steps as f64;
    let f = |t: f64| (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let mut s = 0.5 * (f(0.0) + f(t_max));
    for i in 1..steps {
        s += f(i as f64 * h);
    }
    s * h * (-z).exp()
}

/// Limiting distribution of the Cramer-von Mises statistic `P(W^2 <= x)`
/// (Anderson-Darling series).
pub fn cvm_asymptotic_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    // Gamma(k + 1/2) / (Gamma(1/2) k!) = C(2k, k) / 4^k
    let mut coef = 1.0;
    for k in 0..200 {
        if k > 0 {
            coef *= (2 * k - 1) as f64 / (2 * k) as f64;
        }
        let m = (4 * k + 1) as f64;
        let z = m * m / (16.0 * x);
        if z > 700.0 {
            break;
        }
        let term = coef * m.sqrt() * bessel_k(0.25, z) * (-z).exp();
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    (sum / (PI * x.sqrt())).clamp(0.0, 1.0)
}

/// Stephens' finite-N modification of `N w^2`.
fn cvm_modified(w: f64, n: f64) -> f64 {
    (w - 0.4 / n + 0.6 / (n * n)) * (1.0 + 1.0 / n)
}

pub fn cvm_pvalue(w: f64, n: usize) -> f64 {
    1.0 - cvm_asymptotic_cdf(cvm_modified(w, n as f64))
}

/// Threshold on `N w^2` exceeded with probability `1 - level` under uniformity.
pub fn cvm_critical(n: usize, level: f64) -> Result<f64> {
    check_level(n, level)?;
    let star = bisect(|x| cvm_asymptotic_cdf(x) - level, 1e-4, 20.0);
    let n = n as f64;
    Ok(star / (1.0 + 1.0 / n) + 0.4 / n - 0.6 / (n * n))
}

pub fn critical(kind: StatKind, n: usize, level: f64) -> Result<f64> {
    match kind {
        StatKind::Ks => ks_critical(n, level),
        StatKind::Cvm => cvm_critical(n, level),
    }
}

pub fn pvalue(kind: StatKind, statistic: f64, n: usize) -> f64 {
    match kind {
        StatKind::Ks => ks_pvalue(statistic, n),
        StatKind::Cvm => cvm_pvalue(statistic, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test of `x` against `y`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<GofResult> {
    let xs = sorted_copy(x)?;
    let ys = sorted_copy(y)?;
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(GofResult {
        statistic: d,
        p_value: 1.0 - kolmogorov_cdf(stephens_scale(n_eff) * d),
        n: n + m,
        kind: StatKind::Ks,
    })
}

fn check_level(n: usize, level: f64) -> Result<()> {
    if n == 0 {
        return Err(argument("critical value needs n >= 1"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(argument(format!("level {level} outside (0, 1)")));
    }
    Ok(())
}

/// Root of an increasing function on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
