//! Fourier-side evaluation of `μ̂, μ̂′, μ̂″` and the BA, BA₁, BA₂ and
//! Dungey regularity checks.
//!
//! Convention everywhere: `μ̂(t) = Σ_k μ(k) e^{-2πikt}`.

mod conditions;
mod profile;

pub use conditions::{
    check_ba, check_ba1_ba2, dungey_check, refinement_drift, search_h, ConditionRecord, REFINEMENT_TOL,
    ConditionReport,
};
pub use profile::{HProfile, HShape};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::cpow;
use crate::zmeasure::{ProbabilityMeasure, SignedMeasure};

/// Cells per dyadic level on the spectral grid.
pub const CELLS_PER_LEVEL: usize = 64;

/// A Fourier symbol: either the finite sum over the atoms of a measure, or
/// the closed form of the untruncated `ν_α`.
#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    Atoms(SignedMeasure),
    /// `ν̂_α(t) = 1 - (1 - e^{-2πit})^α`
    NuAlpha { alpha: f64 },
}

/// `μ̂(t)`, `1 - μ̂(t)` (computed without cancellation), `μ̂′(t)`, `μ̂″(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolValue {
    pub m0: Complex64,
    pub one_minus: Complex64,
    pub m1: Complex64,
    pub m2: Complex64,
}

impl Symbol {
    pub fn nu_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("{alpha} is outside (0, 1)")));
        }
        Ok(Symbol::NuAlpha { alpha })
    }

    pub fn name(&self) -> String {
        match self {
            Symbol::Atoms(m) => format!("atoms[{}]", m.len()),
            Symbol::NuAlpha { alpha } => format!("nu_{alpha}"),
        }
    }

    /// `‖μ‖₁`
    pub fn total_variation(&self) -> f64 {
        match self {
            Symbol::Atoms(m) => m.tv_norm(),
            Symbol::NuAlpha { .. } => 1.0,
        }
    }

    pub fn supported_on_nonnegative(&self) -> bool {
        match self {
            Symbol::Atoms(m) => m.support().map_or(true, |(lo, _)| lo >= 0),
            Symbol::NuAlpha { .. } => true,
        }
    }

    /// Finite atoms of the symbol; `ν_α` is truncated at `frac_k` atoms
    /// and renormalized.
    pub fn to_measure(&self, frac_k: usize) -> Result<ProbabilityMeasure> {
        match self {
            Symbol::Atoms(m) => ProbabilityMeasure::new(m.clone()),
            Symbol::NuAlpha { alpha } => {
                crate::zmeasure::nu_alpha(*alpha, frac_k, true)?.into_probability()
            }
        }
    }

    pub fn eval(&self, t: f64) -> SymbolValue {
        match self {
            Symbol::Atoms(m) => eval_atoms(m, t),
            Symbol::NuAlpha { alpha } => eval_nu(*alpha, t),
        }
    }
}

impl From<SignedMeasure> for Symbol {
    fn from(m: SignedMeasure) -> Self {
        Symbol::Atoms(m)
    }
}

impl From<&ProbabilityMeasure> for Symbol {
    fn from(m: &ProbabilityMeasure) -> Self {
        Symbol::Atoms(m.measure().clone())
    }
}

impl From<ProbabilityMeasure> for Symbol {
    fn from(m: ProbabilityMeasure) -> Self {
        Symbol::Atoms(m.into_measure())
    }
}

fn eval_atoms(mu: &SignedMeasure, t: f64) -> SymbolValue {
    let mut m0 = Complex64::new(0.0, 0.0);
    let mut m1 = Complex64::new(0.0, 0.0);
    let mut m2 = Complex64::new(0.0, 0.0);
    // 1 - μ̂ = (1 - Σμ) + Σ μ(k)(1 - e^{-2πikt}),
    // 1 - e^{-iθ} = 2 sin²(θ/2) + i sin θ
    let mut one_minus = Complex64::new(0.0, 0.0);
    for &(k, w) in mu.atoms() {
        let theta = 2.0 * PI * k as f64 * t;
        let (s, c) = theta.sin_cos();
        let e = Complex64::new(c, -s);
        let half = (0.5 * theta).sin();
        one_minus += Complex64::new(w * 2.0 * half * half, w * s);
        let a = -2.0 * PI * k as f64;
        m0 += w * e;
        m1 += w * Complex64::new(0.0, a) * e;
        m2 += w * (-(a * a)) * e;
    }
    let defect = 1.0 - crate::numeric::neumaier_sum(mu.atoms().iter().map(|&(_, w)| w));
    SymbolValue {
        m0,
        one_minus: one_minus + defect,
        m1,
        m2,
    }
}

fn eval_nu(alpha: f64, t: f64) -> SymbolValue {
    let theta = 2.0 * PI * t;
    let (s, c) = theta.sin_cos();
    let half = (PI * t).sin();
    // w = 1 - e^{-2πit}
    let w = Complex64::new(2.0 * half * half, s);
    let e = Complex64::new(c, -s);
    let w1 = Complex64::new(0.0, 2.0 * PI) * e;
    let w2 = 4.0 * PI * PI * e;
    let wa = cpow(w, alpha);
    let one_minus = wa;
    let m0 = Complex64::new(1.0, 0.0) - wa;
    if w.norm() == 0.0 {
        // t ∈ ℤ: the derivatives blow up; report them as infinite
        let inf = Complex64::new(f64::INFINITY, f64::INFINITY);
        return SymbolValue {
            m0,
            one_minus,
            m1: inf,
            m2: inf,
        };
    }
    let wa1 = wa / w;
    let wa2 = wa1 / w;
    let m1 = -alpha * wa1 * w1;
    let m2 = -alpha * (alpha - 1.0) * wa2 * w1 * w1 - alpha * wa1 * w2;
    SymbolValue {
        m0,
        one_minus,
        m1,
        m2,
    }
}

/// `Σ_k μ(k) (-2πik)^order e^{-2πikt}` at each `t`.
pub fn fourier_eval(mu: &SignedMeasure, ts: &[f64], order: u8) -> Result<Vec<Complex64>> {
    if order > 2 {
        return Err(Error::param("order", format!("{order} is not 0, 1 or 2")));
    }
    Ok(ts
        .iter()
        .map(|&t| {
            let v = eval_atoms(mu, t);
            match order {
                0 => v.m0,
                1 => v.m1,
                _ => v.m2,
            }
        })
        .collect())
}

/// Dyadic grid refined toward 0: `t = 2^{-(j+1)}(1 + i/64)`, `j = 1..=levels`,
/// `i = 0..64`, plus `t = 1/2`; ascending.
pub fn dyadic_ts(levels: usize) -> Vec<f64> {
    let mut ts = Vec::with_capacity(levels * CELLS_PER_LEVEL + 1);
    for j in (1..=levels).rev() {
        let base = 0.5f64.powi(j as i32 + 1);
        for i in 0..CELLS_PER_LEVEL {
            ts.push(base * (1.0 + i as f64 / CELLS_PER_LEVEL as f64));
        }
    }
    ts.push(0.5);
    ts
}

/// Samples of `μ̂, μ̂′, μ̂″` on a grid in `(0, 1/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    pub ts: Vec<f64>,
    pub m0: Vec<Complex64>,
    pub one_minus: Vec<Complex64>,
    pub m1: Vec<Complex64>,
    pub m2: Vec<Complex64>,
    /// `‖μ‖₁`, used for the bound `|μ̂| ≤ ‖μ‖₁`.
    pub total_variation: f64,
    pub nonnegative_support: bool,
}

impl SpectralGrid {
    pub fn new(symbol: &Symbol, ts: Vec<f64>) -> Result<Self> {
        if ts.is_empty() {
            return Err(Error::param("ts", "grid is empty"));
        }
        if let Some(bad) = ts.iter().find(|&&t| !(t > 0.0 && t <= 0.5)) {
            return Err(Error::param("ts", format!("{bad} is outside (0, 1/2]")));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("ts", "grid must be strictly increasing"));
        }
        let values = crate::par::map(&ts, |&t| symbol.eval(t));
        Ok(SpectralGrid {
            m0: values.iter().map(|v| v.m0).collect(),
            one_minus: values.iter().map(|v| v.one_minus).collect(),
            m1: values.iter().map(|v| v.m1).collect(),
            m2: values.iter().map(|v| v.m2).collect(),
            ts,
            total_variation: symbol.total_variation(),
            nonnegative_support: symbol.supported_on_nonnegative(),
        })
    }

    pub fn dyadic(symbol: &Symbol, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::param("levels", "must be at least 1"));
        }
        Self::new(symbol, dyadic_ts(levels))
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// `1 - |μ̂(t)|`, through `1 - |μ̂|² = 2 Re(1-μ̂) - |1-μ̂|²` to avoid
    /// cancellation near `t = 0`.
    pub fn one_minus_abs(&self, i: usize) -> f64 {
        let d = self.one_minus[i];
        let gap2 = 2.0 * d.re - d.norm_sqr();
        gap2 / (1.0 + self.m0[i].norm())
    }
}
