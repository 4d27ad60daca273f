use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalised d-dimensional complex FFT over a row-major `n^d` cube.
pub struct FftNd {
    n: usize,
    d: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(n: usize, d: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            d,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform without the `1/n^d` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match FFT shape");
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis is contiguous: batch all lanes in one call
        plan.process_with_scratch(data, &mut scratch);

        let mut lane = vec![Complex64::default(); n];
        let total = data.len();
        let mut stride = n;
        for _axis in 1..self.d {
            let block = stride * n;
            for base in (0..total).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (m, slot) in lane.iter_mut().enumerate() {
                        *slot = data[start + m * stride];
                    }
                    plan.process_with_scratch(&mut lane, &mut scratch);
                    for (m, v) in lane.iter().enumerate() {
                        data[start + m * stride] = *v;
                    }
                }
            }
            stride = block;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft2(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex64::default();
                for x in 0..n {
                    for y in 0..n {
                        let phase =
                            -2.0 * std::f64::consts::PI * ((a * x + b * y) as f64) / n as f64;
                        acc += data[x * n + y] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[a * n + b] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_two_dimensional_dft() {
        let n = 6;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let expected = naive_dft2(&data, n);
        let mut got = data.clone();
        FftNd::new(n, 2).forward(&mut got);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).norm() < 1e-10);
        }
        FftNd::new(n, 2).inverse(&mut got);
        for (g, e) in got.iter().zip(&data) {
            assert!((g / (n * n) as f64 - e).norm() < 1e-12);
        }
    }
}
