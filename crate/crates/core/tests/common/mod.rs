//! Numerical oracle for the projected-cube CDF: the law of `sum a_j X_j`,
//! `X_j ~ U[-1, 1]`, by FFT convolution of exact cell masses on a lattice.
#![allow(dead_code)]

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub const ORACLE_GRID: usize = 1 << 15;

/// CDF values of `sum a_j X_j` at the cell edges `(k + 1/2) h`.
pub struct ConvolutionCdf {
    pub h: f64,
    /// Lattice index of the first cell.
    pub k0: i64,
    /// `cdf[i]` = P(sum <= (k0 + i + 1/2) h).
    pub cdf: Vec<f64>,
}

impl ConvolutionCdf {
    pub fn new(a: &[f64]) -> Self {
        let m = ORACLE_GRID;
        let span: f64 = a.iter().map(|x| x.abs()).sum();
        // the summed lattice support must stay inside (-m/2, m/2)
        let h = 2.0 * span / (m as f64 - 4.0 * (a.len() as f64 + 2.0));
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        let mut acc = vec![Complex::new(1.0, 0.0); m];
        let mut total_k = 0i64;
        for &aj in a {
            let w = aj.abs();
            let mut buf = vec![Complex::new(0.0, 0.0); m];
            // exact mass of U[-w, w] on [(k - 1/2) h, (k + 1/2) h)
            let kmax = (w / h + 0.5).ceil() as i64;
            total_k += kmax;
            let cell_cdf = |x: f64| ((x + w) / (2.0 * w)).clamp(0.0, 1.0);
            for k in -kmax..=kmax {
                let mass = cell_cdf((k as f64 + 0.5) * h) - cell_cdf((k as f64 - 0.5) * h);
                buf[k.rem_euclid(m as i64) as usize].re = mass;
            }
            fft.process(&mut buf);
            for (x, y) in acc.iter_mut().zip(&buf) {
                *x *= y;
            }
        }
        assert!(2 * total_k < m as i64, "lattice support wraps");
        ifft.process(&mut acc);
        let mut cdf = Vec::with_capacity((2 * total_k + 1) as usize);
        let mut run = 0.0;
        for k in -total_k..=total_k {
            run += acc[k.rem_euclid(m as i64) as usize].re / m as f64;
            cdf.push(run);
        }
        Self {
            h,
            k0: -total_k,
            cdf,
        }
    }

    /// `(z, F(z))` pairs at the cell edges.
    pub fn edges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cdf
            .iter()
            .enumerate()
            .map(|(i, &f)| ((self.k0 + i as i64) as f64 * self.h + 0.5 * self.h, f))
    }
}
