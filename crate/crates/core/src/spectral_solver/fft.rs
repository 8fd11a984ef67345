//! Square 2D complex FFTs built from 1D rustfft plans.
//!
//! Spectra are kept in transposed layout: the coefficient of wavenumber
//! index `(a, b)` (x index `a`, y index `b`) sits at `a * n + b`. Skipping
//! the two back-transposes halves the memory traffic per transform pair.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Fft2 {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Fft2 {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            tmp: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn transpose_into_tmp(&mut self, data: &[Complex64]) {
        let n = self.n;
        const B: usize = 32;
        for jb in (0..n).step_by(B) {
            for ib in (0..n).step_by(B) {
                for j in jb..(jb + B).min(n) {
                    for i in ib..(ib + B).min(n) {
                        self.tmp[i * n + j] = data[j * n + i];
                    }
                }
            }
        }
    }

    /// Physical row-major data (x fastest) to transposed-layout spectrum, in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.forward.process_with_scratch(data, &mut self.scratch);
        self.transpose_into_tmp(data);
        self.forward.process_with_scratch(&mut self.tmp, &mut self.scratch);
        data.copy_from_slice(&self.tmp);
    }

    /// Transposed-layout spectrum back to physical data, normalized, in place.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.inverse.process_with_scratch(data, &mut self.scratch);
        self.transpose_into_tmp(data);
        self.inverse.process_with_scratch(&mut self.tmp, &mut self.scratch);
        let s = 1.0 / (self.n * self.n) as f64;
        for (d, t) in data.iter_mut().zip(&self.tmp) {
            *d = t * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_single_mode_location() {
        let n = 16;
        let mut f = Fft2::new(n);
        let orig: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let y = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                Complex64::new((3.0 * x + y).cos(), 0.0)
            })
            .collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        // cos(3x + y) -> coefficients n²/2 at (3, 1) and (-3, -1)
        let half = (n * n) as f64 / 2.0;
        assert!((d[3 * n + 1].re - half).abs() < 1e-9);
        assert!((d[(n - 3) * n + (n - 1)].re - half).abs() < 1e-9);
        f.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
