//! Small numerical helpers shared across modules.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Neumaier-compensated sum; order of the iterator is the reduction order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Smallest power of two `>= n` (and at least 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Forward/inverse FFT pair of a fixed length with unnormalized forward
/// and `1/L`-normalized inverse.
pub struct FftPair {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPair {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `X[j] = Σ_x x[x] e^{-2πi jx/L}`
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// `x[x] = (1/L) Σ_j X[j] e^{2πi jx/L}`
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(self.len, Complex64::new(0.0, 0.0));
        self.forward(&mut buf);
        buf
    }
}

/// Principal power `z^p` with the convention `0^p = 0` for `p > 0` and
/// `0^0 = 1`.
pub fn cpow(z: Complex64, p: f64) -> Complex64 {
    if p == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        return z.powi(p as i32);
    }
    z.powf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, -1.0];
        assert_eq!(neumaier_sum(v), 2e-16);
    }

    #[test]
    fn fft_round_trip() {
        let f = FftPair::new(8);
        let x: Vec<f64> = (0..8).map(|i| (i * i) as f64 - 3.0).collect();
        let mut buf = f.forward_real(&x);
        f.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&x) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn cpow_integer_and_zero() {
        let z = Complex64::new(0.3, -0.4);
        assert!((cpow(z, 2.0) - z * z).norm() < 1e-15);
        assert_eq!(cpow(Complex64::new(0.0, 0.0), 0.5), Complex64::new(0.0, 0.0));
        assert_eq!(cpow(Complex64::new(0.0, 0.0), 0.0), Complex64::new(1.0, 0.0));
    }
}
