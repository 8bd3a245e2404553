use super::{Measure, ProbabilityMeasure, SignedMeasure};
use crate::error::{Error, Result};
use crate::numeric::neumaier_sum;

/// Coefficients `g(α, k)`, `k = 1..=K`, of `(1 - x)^α = 1 - Σ_k g(α,k) x^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalCoeffs {
    pub alpha: f64,
    /// `coeffs[k - 1] = g(α, k)`
    pub coeffs: Vec<f64>,
    /// `1 - Σ_{k ≤ K} g(α, k)`
    pub tail_mass: f64,
}

impl FractionalCoeffs {
    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.coeffs.get(i)).copied()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("{alpha} is outside (0, 1)")));
    }
    Ok(())
}

/// `g(α,1) = α`, `g(α,k+1) = g(α,k)(k - α)/(k + 1)`.
pub fn fractional_coeffs(alpha: f64, k_max: usize) -> Result<FractionalCoeffs> {
    check_alpha(alpha)?;
    if k_max == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    let mut coeffs = Vec::with_capacity(k_max);
    let mut g = alpha;
    coeffs.push(g);
    for k in 1..k_max {
        let kf = k as f64;
        g *= (kf - alpha) / (kf + 1.0);
        coeffs.push(g);
    }
    let partial = neumaier_sum(coeffs.iter().copied());
    Ok(FractionalCoeffs {
        alpha,
        coeffs,
        tail_mass: (1.0 - partial).max(0.0),
    })
}

/// Truncation of `ν_α` to the sites `1..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedNu {
    pub alpha: f64,
    pub measure: SignedMeasure,
    /// Mass of `ν_α` beyond `K`, before any renormalization.
    pub tail_mass: f64,
    pub renormalized: bool,
}

impl TruncatedNu {
    /// The truncation as a probability measure; only renormalized
    /// truncations have unit mass.
    pub fn into_probability(self) -> Result<ProbabilityMeasure> {
        if !self.renormalized {
            return Err(Error::param(
                "renormalize",
                format!(
                    "unrenormalized truncation has mass 1 - {:e}; pass renormalize = true",
                    self.tail_mass
                ),
            ));
        }
        ProbabilityMeasure::new(self.measure)
    }
}

/// `ν_α` truncated at `K` atoms.
pub fn nu_alpha(alpha: f64, k_max: usize, renormalize: bool) -> Result<TruncatedNu> {
    nu_alpha_with_tail(alpha, k_max, renormalize, None)
}

/// As [`nu_alpha`], failing when the tail mass exceeds `max_tail`.
pub fn nu_alpha_with_tail(
    alpha: f64,
    k_max: usize,
    renormalize: bool,
    max_tail: Option<f64>,
) -> Result<TruncatedNu> {
    let fc = fractional_coeffs(alpha, k_max)?;
    if let Some(tol) = max_tail {
        if fc.tail_mass > tol {
            return Err(Error::TailTooLarge {
                k: k_max,
                achievable: fc.tail_mass,
                requested: tol,
            });
        }
    }
    let scale = if renormalize {
        1.0 / neumaier_sum(fc.coeffs.iter().copied())
    } else {
        1.0
    };
    let measure = Measure::from_dense(1, fc.coeffs.iter().map(|g| g * scale).collect());
    Ok(TruncatedNu {
        alpha,
        measure,
        tail_mass: fc.tail_mass,
        renormalized: renormalize,
    })
}
