//! Kernels of `Tⁿ(I - T)^r` and the Ritt trace `n ‖μ^{*n} * (δ₀ - μ)‖₁`.

use num_complex::Complex64;

use super::{
    convolve, fractional_coeffs, power, ExactMeasure, Measure, ProbabilityMeasure,
    SignedMeasure, Weight, DEFAULT_CAPACITY,
};
use crate::error::{Error, Result};
use crate::numeric::{neumaier_sum, next_pow2, FftPair};

/// Signed measure `ν_{n,r}` with `ν̂_{n,r} = μ̂ⁿ (1 - μ̂)^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaKernel {
    pub measure: SignedMeasure,
    /// Certified bound on the ℓ¹ distance to the untruncated kernel
    /// (fractional series tail plus pruning drift).
    pub remainder_bound: f64,
}

/// `μ^{*n} * (δ₀ - μ)^{*r}` for integer `r`, in any weight type.
pub fn delta_kernel_int<W: Weight>(mu: &Measure<W>, n: u32, r: u32) -> Result<Measure<W>> {
    let diff = Measure::dirac(0).sub(mu);
    let a = power(mu, n)?;
    let b = power(&diff, r)?;
    convolve(&a, &b)
}

/// Kernel of `Tⁿ(I - T)^r` for real `r > 0`.
///
/// The integer part of `r` is exact. A fractional part `ρ` is realized as
/// `δ₀ - Σ_{k ≤ K} g(ρ, k) μ^{*k}` with `K = frac_k`; the dropped tail
/// contributes at most `tail_mass(ρ, K) · ‖μ^{*n} * (δ₀ - μ)^{*⌊r⌋}‖₁`.
pub fn delta_kernel(mu: &ProbabilityMeasure, n: u32, r: f64, frac_k: usize) -> Result<DeltaKernel> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", format!("{r} must be a positive real")));
    }
    let whole = r.floor();
    let frac = r - whole;
    let base = delta_kernel_int(mu.measure(), n, whole as u32)?;
    if frac == 0.0 {
        let drift = base.drift();
        return Ok(DeltaKernel {
            measure: base,
            remainder_bound: drift,
        });
    }
    if frac_k == 0 {
        return Err(Error::param("frac_K", "must be at least 1 for fractional r"));
    }
    let fc = fractional_coeffs(frac, frac_k)?;
    let mut series = Measure::dirac(0);
    let mut mu_k: SignedMeasure = Measure::dirac(0);
    for g in &fc.coeffs {
        mu_k = convolve(&mu_k, mu.measure())?;
        series = series.sub(&mu_k.scale(*g));
    }
    let out = convolve(&base, &series)?;
    let remainder_bound = fc.tail_mass * base.tv_norm() + out.drift();
    Ok(DeltaKernel {
        measure: out,
        remainder_bound,
    })
}

/// How a Ritt trace was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RittMethod {
    /// Incremental direct convolution.
    Direct,
    /// Transform path: `μ̂ⁿ(1 - μ̂)` sampled on a grid longer than the
    /// kernel's span, then inverted; no aliasing.
    Transform,
}

/// `n ‖μ^{*n} * (δ₀ - μ)‖₁` for `n = 1..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct RittTrace {
    /// `values[n - 1]`
    pub values: Vec<f64>,
    pub running_max: Vec<f64>,
    pub method: RittMethod,
}

impl RittTrace {
    fn from_values(values: Vec<f64>, method: RittMethod) -> Self {
        let running_max = values
            .iter()
            .scan(f64::NEG_INFINITY, |m, &v| {
                *m = m.max(v);
                Some(*m)
            })
            .collect();
        RittTrace {
            values,
            running_max,
            method,
        }
    }

    pub fn value(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn max(&self) -> f64 {
        self.running_max.last().copied().unwrap_or(0.0)
    }

    /// Max over the last octave `(N/2, N]` divided by max over `[1, N/2]`.
    pub fn last_octave_growth(&self) -> f64 {
        let n = self.values.len();
        let half = n / 2;
        if half == 0 {
            return 1.0;
        }
        let head = self.running_max[half - 1];
        let tail = self.values[half..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        tail / head
    }
}

/// Direct-path cost budget (atom multiplications) before switching to the
/// transform path.
const DIRECT_BUDGET: f64 = 4e8;

/// Ritt trace of the shift-induced convolution operator on ℓ¹(ℤ).
pub fn ritt_constant(mu: &ProbabilityMeasure, n_max: usize) -> Result<RittTrace> {
    if n_max == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    let width = mu.span().saturating_sub(1) as f64;
    let atoms = mu.len() as f64;
    let nf = n_max as f64;
    let direct_cost = atoms * (nf * (nf + 1.0) / 2.0 * width + nf);
    let final_span = (n_max + 1) * mu.span().saturating_sub(1) + 1;
    if final_span > DEFAULT_CAPACITY {
        return Err(Error::Capacity {
            needed: final_span,
            limit: DEFAULT_CAPACITY,
        });
    }
    if direct_cost <= DIRECT_BUDGET {
        let norms = ritt_trace_direct(mu.measure(), n_max)?;
        let values = norms
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * v)
            .collect();
        Ok(RittTrace::from_values(values, RittMethod::Direct))
    } else {
        ritt_trace_transform(mu.measure(), n_max)
    }
}

/// `‖μ^{*n} - μ^{*(n+1)}‖₁` for `n = 1..=n_max`, by incremental
/// convolution in the weight type.
pub fn ritt_trace_direct<W: Weight>(mu: &Measure<W>, n_max: usize) -> Result<Vec<f64>> {
    let mut current = mu.clone();
    let mut out = Vec::with_capacity(n_max);
    for _ in 1..=n_max {
        let next = convolve(&current, mu)?;
        let diff = current.sub(&next);
        out.push(diff.total_variation().to_f64());
        current = next;
    }
    Ok(out)
}

/// Exact Ritt trace `n ‖μ^{*n} - μ^{*(n+1)}‖₁` in dyadic arithmetic.
pub fn ritt_trace_exact(mu: &ExactMeasure, n_max: usize) -> Result<Vec<super::Dyadic>> {
    let mut current = mu.clone();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let next = convolve(&current, mu)?;
        let tv = current.sub(&next).total_variation();
        out.push(tv.mul(&super::Dyadic::from_u64(n as u64)));
        current = next;
    }
    Ok(out)
}

fn ritt_trace_transform(mu: &SignedMeasure, n_max: usize) -> Result<RittTrace> {
    let width = mu.span().saturating_sub(1);
    let one = Complex64::new(1.0, 0.0);
    let mut values = Vec::with_capacity(n_max);
    let mut len = 0usize;
    let mut fft: Option<FftPair> = None;
    let mut symbol: Vec<Complex64> = Vec::new();
    let mut pow_n: Vec<Complex64> = Vec::new();
    let mut buf: Vec<Complex64> = Vec::new();
    for n in 1..=n_max {
        // Δ_n spans (n + 1) * width + 1 sites
        let need = next_pow2((n + 1) * width + 1);
        if need != len {
            len = need;
            let pair = FftPair::new(len);
            let mut dense = vec![0.0; len];
            for (site, w) in mu.atoms() {
                dense[site.rem_euclid(len as i64) as usize] += w;
            }
            symbol = pair.forward_real(&dense);
            pow_n = symbol.iter().map(|m| m.powu(n as u32)).collect();
            buf = vec![Complex64::new(0.0, 0.0); len];
            fft = Some(pair);
        } else {
            for (p, m) in pow_n.iter_mut().zip(&symbol) {
                *p *= m;
            }
        }
        let pair = fft.as_ref().expect("planned above");
        for ((b, p), m) in buf.iter_mut().zip(&pow_n).zip(&symbol) {
            *b = p * (one - m);
        }
        pair.inverse(&mut buf);
        let norm = neumaier_sum(buf.iter().map(|z| z.re.abs()));
        if !norm.is_finite() {
            return Err(Error::Numerical(format!("non-finite kernel norm at n = {n}")));
        }
        values.push(n as f64 * norm);
    }
    Ok(RittTrace::from_values(values, RittMethod::Transform))
}

/// Transform-path trace, exposed for cross-checking against the direct path.
pub fn ritt_constant_transform(mu: &ProbabilityMeasure, n_max: usize) -> Result<RittTrace> {
    ritt_trace_transform(mu.measure(), n_max)
}

#[cfg(test)]
mod tests {
    use super::super::{builtin, nu_alpha, power};
    use super::*;

    #[test]
    fn shift_kernel_is_binomial() {
        let mu = ProbabilityMeasure::dirac(1);
        let k = delta_kernel(&mu, 3, 2.0, 0).unwrap();
        assert_eq!(k.measure.atoms(), &[(3, 1.0), (4, -2.0), (5, 1.0)]);
        assert_eq!(k.remainder_bound, 0.0);
    }

    #[test]
    fn first_difference_at_n_zero() {
        let mu = builtin::lazy_walk();
        let k = delta_kernel(&mu, 0, 1.0, 0).unwrap();
        assert_eq!(k.measure, Measure::dirac(0).sub(mu.measure()));
    }

    #[test]
    fn difference_semigroup() {
        let mu = builtin::lazy_shift();
        for r in 1..4u32 {
            let a = delta_kernel(&mu, 2, (r + 1) as f64, 0).unwrap().measure;
            let b = delta_kernel(&mu, 2, r as f64, 0).unwrap().measure;
            let step = convolve(&b, &Measure::dirac(0).sub(mu.measure())).unwrap();
            assert_eq!(a, step);
        }
    }

    #[test]
    fn telescoping_sum() {
        let mu = builtin::lazy_walk().measure().to_exact();
        let n_total = 12;
        let mut acc = Measure::zero();
        for n in 0..n_total {
            acc = acc.add(&delta_kernel_int(&mu, n, 1).unwrap());
        }
        let expected = Measure::dirac(0).sub(&power(&mu, n_total).unwrap());
        assert_eq!(acc, expected);
    }

    #[test]
    fn fractional_kernel_remainder_is_certified() {
        let mu = builtin::lazy_shift();
        let coarse = delta_kernel(&mu, 1, 0.5, 32).unwrap();
        let fine = delta_kernel(&mu, 1, 0.5, 2048).unwrap();
        let gap = coarse.measure.sub(&fine.measure).tv_norm();
        assert!(gap <= coarse.remainder_bound + fine.remainder_bound + 1e-12);
        assert!(coarse.remainder_bound > fine.remainder_bound);
    }

    #[test]
    fn shift_trace_is_two_n() {
        let mu = ProbabilityMeasure::dirac(1);
        let tr = ritt_constant(&mu, 20).unwrap();
        for n in 1..=20 {
            assert_eq!(tr.value(n), 2.0 * n as f64);
        }
    }

    #[test]
    fn symmetric_walk_trace_exact() {
        let mu = builtin::symmetric_walk().measure().to_exact();
        let tr = ritt_trace_exact(&mu, 64).unwrap();
        for (i, v) in tr.iter().enumerate() {
            assert_eq!(*v, super::super::Dyadic::from_u64(2 * (i as u64 + 1)));
        }
    }

    #[test]
    fn transform_path_matches_direct() {
        let mu = nu_alpha(0.5, 64, true).unwrap().into_probability().unwrap();
        let direct = ritt_trace_direct(mu.measure(), 40).unwrap();
        let tr = ritt_constant_transform(&mu, 40).unwrap();
        for n in 1..=40 {
            let d = n as f64 * direct[n - 1];
            assert!((tr.value(n) - d).abs() < 1e-10 * d.max(1.0), "n {n}");
        }
    }
}
