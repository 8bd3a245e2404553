//! Signals on a window of ℤ or on the cyclic group ℤ_N, the operator
//! `T_ν f = Σ_k ν(k) Tᵏ f`, and the orbit engine producing
//! `Tⁿ(I - T)^r f` for `n = 1, 2, …`.
//!
//! Orientation: `Tᵏ f(x) = f(x - k)`, so `T_ν f = ν * f`. On ℤ_N the
//! transform of `T_ν f` is `ν̂(j/N) f̂(j)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{cpow, FftPair};
use crate::spectral::Symbol;
use crate::zmeasure::{delta_kernel, SignedMeasure, DEFAULT_CAPACITY};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Counting measure on the sites `start, start + 1, …`; zero outside.
    Window { start: i64 },
    /// Uniform probability on ℤ_N, `N = values.len()`.
    Cyclic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl Signal {
    pub fn window(start: i64, values: Vec<f64>) -> Self {
        Signal {
            domain: Domain::Window { start },
            values,
        }
    }

    pub fn cyclic(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("N", "cyclic signal needs N >= 1"));
        }
        Ok(Signal {
            domain: Domain::Cyclic,
            values,
        })
    }

    /// `N · 1_{at}` on ℤ_N, so that `‖f‖₁ = 1`.
    pub fn cyclic_spike(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::param("at", format!("{at} is outside Z_{n}")));
        }
        let mut v = vec![0.0; n];
        v[at] = n as f64;
        Self::cyclic(v)
    }

    /// `1_{at}` on ℤ.
    pub fn spike(at: i64) -> Self {
        Self::window(at, vec![1.0])
    }

    pub fn zeros_like(&self) -> Self {
        Signal {
            domain: self.domain,
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_cyclic(&self) -> bool {
        self.domain == Domain::Cyclic
    }

    /// 1 for the counting measure, `1/N` on ℤ_N.
    pub fn measure_weight(&self) -> f64 {
        match self.domain {
            Domain::Window { .. } => 1.0,
            Domain::Cyclic => 1.0 / self.values.len() as f64,
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.measure_weight() * crate::numeric::neumaier_sum(self.values.iter().map(|v| v.abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Site label of `values[i]`: the integer site on ℤ, `i` on ℤ_N.
    pub fn site(&self, i: usize) -> i64 {
        match self.domain {
            Domain::Window { start } => start + i as i64,
            Domain::Cyclic => i as i64,
        }
    }

    /// Value at site `x`; zero off the window, periodic on ℤ_N.
    pub fn get(&self, x: i64) -> f64 {
        match self.domain {
            Domain::Window { start } => {
                let i = x - start;
                if i < 0 || i as usize >= self.values.len() {
                    0.0
                } else {
                    self.values[i as usize]
                }
            }
            Domain::Cyclic => self.values[x.rem_euclid(self.values.len() as i64) as usize],
        }
    }

    /// `a f + b g` on the same domain.
    pub fn combine(a: f64, f: &Signal, b: f64, g: &Signal) -> Result<Signal> {
        if f.domain != g.domain || f.len() != g.len() {
            return Err(Error::param("g", "signals live on different domains"));
        }
        Ok(Signal {
            domain: f.domain,
            values: f.values.iter().zip(&g.values).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        Signal {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// `T_ν f = ν * f`. On ℤ the output covers the sum window; on ℤ_N the
/// convolution is circular.
pub fn apply_measure(nu: &SignedMeasure, f: &Signal) -> Result<Signal> {
    match f.domain {
        Domain::Window { start } => {
            let Some((lo, hi)) = nu.support() else {
                return Ok(Signal::window(start, Vec::new()));
            };
            if f.is_empty() {
                return Ok(Signal::window(start + lo, Vec::new()));
            }
            let len = f.len() + (hi - lo) as usize;
            if len > DEFAULT_CAPACITY {
                return Err(Error::Capacity {
                    needed: len,
                    limit: DEFAULT_CAPACITY,
                });
            }
            let mut out = vec![0.0; len];
            for &(k, w) in nu.atoms() {
                let off = (k - lo) as usize;
                for (o, v) in out[off..off + f.len()].iter_mut().zip(&f.values) {
                    *o += w * v;
                }
            }
            Ok(Signal::window(start + lo, out))
        }
        Domain::Cyclic => {
            let n = f.len();
            let folded = periodize(nu, n);
            let mut out = vec![0.0; n];
            for (k, &w) in folded.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (x, o) in out.iter_mut().enumerate() {
                    *o += w * f.values[(x + n - k) % n];
                }
            }
            Ok(Signal {
                domain: Domain::Cyclic,
                values: out,
            })
        }
    }
}

/// `ν` folded onto ℤ_N.
fn periodize(nu: &SignedMeasure, n: usize) -> Vec<f64> {
    let mut folded = vec![0.0; n];
    for &(k, w) in nu.atoms() {
        folded[k.rem_euclid(n as i64) as usize] += w;
    }
    folded
}

/// Materialized orbit `u_n = Tⁿ(I - T)^r f`, `n = 1..=n_max`, on a common
/// domain: ℤ_N itself, or on ℤ a window containing every `u_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub domain: Domain,
    pub width: usize,
    /// `rows[n - 1][i]`
    pub rows: Vec<Vec<f64>>,
    /// Certified ℓ¹ truncation error of the fractional difference on ℤ
    /// (zero on ℤ_N and for integer `r`).
    pub remainder_bound: f64,
}

impl Orbit {
    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    pub fn site(&self, i: usize) -> i64 {
        match self.domain {
            Domain::Window { start } => start + i as i64,
            Domain::Cyclic => i as i64,
        }
    }

    /// `(u_1(x), …, u_{n_max}(x))` at column `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn signal(&self, values: Vec<f64>) -> Signal {
        Signal {
            domain: self.domain,
            values,
        }
    }
}

/// Orbit engine.
///
/// On ℤ_N the multipliers `μ̂(j/N)ⁿ (1 - μ̂(j/N))^r` are applied to `f̂`
/// and inverted, which is exact for every real `r` (principal power) and
/// for the closed-form `ν_α` symbol. On ℤ the kernels are built from the
/// atoms with [`delta_kernel`]; `ν_α` is truncated at `frac_k` atoms.
pub fn orbit(symbol: &Symbol, r: f64, f: &Signal, n_max: usize, frac_k: usize) -> Result<Orbit> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::param("r", format!("{r} must be a nonnegative real")));
    }
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    match f.domain {
        Domain::Cyclic => orbit_cyclic(symbol, r, f, n_max),
        Domain::Window { .. } => orbit_window(symbol, r, f, n_max, frac_k),
    }
}

fn orbit_cyclic(symbol: &Symbol, r: f64, f: &Signal, n_max: usize) -> Result<Orbit> {
    let n = f.len();
    let fft = FftPair::new(n);
    let fhat = fft.forward_real(&f.values);
    let samples: Vec<_> = (0..n).map(|j| symbol.eval(j as f64 / n as f64)).collect();
    let mut mult: Vec<Complex64> = samples.iter().map(|v| cpow(v.one_minus, r)).collect();
    let mut rows = Vec::with_capacity(n_max);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for step in 1..=n_max {
        for ((m, v), (b, fh)) in mult.iter_mut().zip(&samples).zip(buf.iter_mut().zip(&fhat)) {
            *m *= v.m0;
            *b = *m * fh;
        }
        fft.inverse(&mut buf);
        let row: Vec<f64> = buf.iter().map(|z| z.re).collect();
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite orbit value at n = {step}")));
        }
        rows.push(row);
    }
    Ok(Orbit {
        domain: Domain::Cyclic,
        width: n,
        rows,
        remainder_bound: 0.0,
    })
}

fn orbit_window(
    symbol: &Symbol,
    r: f64,
    f: &Signal,
    n_max: usize,
    frac_k: usize,
) -> Result<Orbit> {
    let Domain::Window { start } = f.domain else {
        unreachable!("window orbit on a cyclic signal")
    };
    let mu = symbol.to_measure(frac_k)?;
    let base = if r == 0.0 {
        crate::zmeasure::DeltaKernel {
            measure: mu.measure().clone(),
            remainder_bound: 0.0,
        }
    } else {
        delta_kernel(&mu, 1, r, frac_k)?
    };
    let (Some((blo, bhi)), Some((mlo, mhi))) = (base.measure.support(), mu.support()) else {
        return Ok(Orbit {
            domain: f.domain,
            width: f.len(),
            rows: vec![vec![0.0; f.len()]; n_max],
            remainder_bound: base.remainder_bound,
        });
    };
    let steps = (n_max - 1) as i64;
    let lo = start + blo + steps * mlo.min(0);
    let hi = start + f.len() as i64 - 1 + bhi + steps * mhi.max(0);
    let width = (hi - lo + 1) as usize;
    if width.saturating_mul(n_max) > DEFAULT_CAPACITY * 4 {
        return Err(Error::Capacity {
            needed: width * n_max,
            limit: DEFAULT_CAPACITY * 4,
        });
    }
    let mut rows = Vec::with_capacity(n_max);
    let mut current = apply_measure(&base.measure, f)?;
    for step in 1..=n_max {
        if step > 1 {
            current = apply_measure(mu.measure(), &current)?;
        }
        let mut row = vec![0.0; width];
        let Domain::Window { start: cs } = current.domain else {
            unreachable!()
        };
        let off = (cs - lo) as usize;
        row[off..off + current.len()].copy_from_slice(&current.values);
        rows.push(row);
    }
    // the kernel of Tⁿ(I-T)^r is μ^{n-1} * base, so the truncation error
    // never grows beyond that of the base kernel
    Ok(Orbit {
        domain: Domain::Window { start: lo },
        width,
        rows,
        remainder_bound: base.remainder_bound * f.l1_norm(),
    })
}
