//! Finitely supported signed measures on ℤ and their convolution algebra.
//!
//! A [`Measure`] stores its atoms as a sorted list of `(site, weight)`
//! pairs with nonzero weights. Convolution is computed exactly in the
//! weight type (direct double sum); with `f64` weights this means one
//! rounding per product/accumulation, with [`Dyadic`] weights it is exact.
//!
//! The same module provides the fractional-difference coefficients
//! `g(α, k)` of `(1 - x)^α = 1 - Σ g(α,k) x^k`, the induced probability
//! measure `ν_α`, and the kernels of `Tⁿ(I - T)^r`.

mod fractional;
mod kernel;
mod text;
mod weight;

pub use fractional::{fractional_coeffs, nu_alpha, nu_alpha_with_tail, FractionalCoeffs, TruncatedNu};
pub use kernel::{
    delta_kernel, delta_kernel_int, ritt_constant, ritt_constant_transform, ritt_trace_direct,
    ritt_trace_exact,
    DeltaKernel, RittMethod, RittTrace,
};
pub use weight::{Dyadic, Weight};

use std::ops::Deref;

use crate::error::{Error, Result};

/// Default bound on the site span of any measure produced by convolution.
pub const DEFAULT_CAPACITY: usize = 1 << 22;

/// Finite signed measure on ℤ.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure<W: Weight = f64> {
    atoms: Vec<(i64, W)>,
    pruning_tol: f64,
    /// ℓ¹ mass discarded by pruning, accumulated through every operation
    /// that produced this measure.
    drift: f64,
}

pub type SignedMeasure = Measure<f64>;
pub type ExactMeasure = Measure<Dyadic>;

impl<W: Weight> Measure<W> {
    /// Builds a measure from arbitrary `(site, weight)` pairs. Duplicate
    /// sites are merged, zero weights dropped.
    pub fn new(mut atoms: Vec<(i64, W)>) -> Self {
        atoms.sort_by_key(|&(site, _)| site);
        let mut merged: Vec<(i64, W)> = Vec::with_capacity(atoms.len());
        for (site, w) in atoms {
            match merged.last_mut() {
                Some((last, acc)) if *last == site => *acc = acc.add(&w),
                _ => merged.push((site, w)),
            }
        }
        merged.retain(|(_, w)| !w.is_zero());
        Measure {
            atoms: merged,
            pruning_tol: 0.0,
            drift: 0.0,
        }
    }

    pub fn zero() -> Self {
        Measure {
            atoms: Vec::new(),
            pruning_tol: 0.0,
            drift: 0.0,
        }
    }

    /// Point mass at `site`.
    pub fn dirac(site: i64) -> Self {
        Measure {
            atoms: vec![(site, W::one())],
            pruning_tol: 0.0,
            drift: 0.0,
        }
    }

    /// Dense weights starting at `offset`; zeros are skipped.
    pub fn from_dense(offset: i64, weights: Vec<W>) -> Self {
        let atoms = weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, w)| (offset + i as i64, w))
            .collect();
        Measure {
            atoms,
            pruning_tol: 0.0,
            drift: 0.0,
        }
    }

    pub fn with_pruning_tol(mut self, tol: f64) -> Self {
        self.pruning_tol = tol.max(0.0);
        self.prune();
        self
    }

    pub fn atoms(&self) -> &[(i64, W)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn pruning_tol(&self) -> f64 {
        self.pruning_tol
    }

    /// Certified ℓ¹ distance to the unpruned result.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// `(min site, max site)`, `None` for the zero measure.
    pub fn support(&self) -> Option<(i64, i64)> {
        Some((self.atoms.first()?.0, self.atoms.last()?.0))
    }

    /// Number of integer sites between the extreme atoms, inclusive.
    pub fn span(&self) -> usize {
        self.support().map_or(0, |(lo, hi)| (hi - lo) as usize + 1)
    }

    pub fn weight_at(&self, site: i64) -> W {
        match self.atoms.binary_search_by_key(&site, |&(s, _)| s) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => W::zero(),
        }
    }

    /// Dense weights over the support span, with the first site.
    pub fn to_dense(&self) -> (i64, Vec<W>) {
        let Some((lo, _)) = self.support() else {
            return (0, Vec::new());
        };
        let mut dense = vec![W::zero(); self.span()];
        for (site, w) in &self.atoms {
            dense[(site - lo) as usize] = w.clone();
        }
        (lo, dense)
    }

    /// Exact total variation in the weight type.
    pub fn total_variation(&self) -> W {
        self.atoms
            .iter()
            .fold(W::zero(), |acc, (_, w)| acc.add(&w.abs()))
    }

    pub fn total_mass(&self) -> W {
        self.atoms.iter().fold(W::zero(), |acc, (_, w)| acc.add(w))
    }

    pub fn neg(&self) -> Self {
        Measure {
            atoms: self.atoms.iter().map(|(s, w)| (*s, w.neg())).collect(),
            pruning_tol: self.pruning_tol,
            drift: self.drift,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let take_left = j >= other.atoms.len()
                || (i < self.atoms.len() && self.atoms[i].0 < other.atoms[j].0);
            let take_right = i >= self.atoms.len()
                || (j < other.atoms.len() && other.atoms[j].0 < self.atoms[i].0);
            if take_left {
                out.push(self.atoms[i].clone());
                i += 1;
            } else if take_right {
                out.push(other.atoms[j].clone());
                j += 1;
            } else {
                let w = self.atoms[i].1.add(&other.atoms[j].1);
                if !w.is_zero() {
                    out.push((self.atoms[i].0, w));
                }
                i += 1;
                j += 1;
            }
        }
        let mut m = Measure {
            atoms: out,
            pruning_tol: self.pruning_tol.max(other.pruning_tol),
            drift: self.drift + other.drift,
        };
        m.prune();
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Translate every atom by `by`.
    pub fn shift(&self, by: i64) -> Self {
        Measure {
            atoms: self.atoms.iter().map(|(s, w)| (s + by, w.clone())).collect(),
            pruning_tol: self.pruning_tol,
            drift: self.drift,
        }
    }

    pub fn map_weights<V: Weight>(&self, f: impl Fn(&W) -> V) -> Measure<V> {
        Measure::new(self.atoms.iter().map(|(s, w)| (*s, f(w))).collect())
    }

    pub fn to_f64(&self) -> SignedMeasure {
        self.map_weights(Weight::to_f64)
    }

    fn prune(&mut self) {
        if self.pruning_tol <= 0.0 {
            return;
        }
        let tol = self.pruning_tol;
        let mut dropped = 0.0;
        self.atoms.retain(|(_, w)| {
            if w.below(tol) {
                dropped += w.to_f64().abs();
                false
            } else {
                true
            }
        });
        self.drift += dropped;
    }
}

impl SignedMeasure {
    /// Σ|w|, compensated.
    pub fn tv_norm(&self) -> f64 {
        crate::numeric::neumaier_sum(self.atoms.iter().map(|(_, w)| w.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut m = Measure::new(self.atoms.iter().map(|(s, w)| (*s, w * c)).collect());
        m.pruning_tol = self.pruning_tol;
        m.drift = self.drift * c.abs();
        m
    }

    pub fn to_exact(&self) -> ExactMeasure {
        self.map_weights(|w| Dyadic::from_f64(*w))
    }
}

/// Total variation of an `f64` measure; the operator norm of the induced
/// convolution operator on ℓ¹(ℤ).
pub fn tv_norm(nu: &SignedMeasure) -> f64 {
    nu.tv_norm()
}

/// Convolution `(a * b)(k) = Σ_j a(j) b(k - j)` with the default capacity.
pub fn convolve<W: Weight>(a: &Measure<W>, b: &Measure<W>) -> Result<Measure<W>> {
    convolve_with_capacity(a, b, DEFAULT_CAPACITY)
}

/// Convolution that fails when the output site span would exceed `capacity`.
pub fn convolve_with_capacity<W: Weight>(
    a: &Measure<W>,
    b: &Measure<W>,
    capacity: usize,
) -> Result<Measure<W>> {
    let tol = a.pruning_tol.max(b.pruning_tol);
    let (Some((alo, ahi)), Some((blo, bhi))) = (a.support(), b.support()) else {
        return Ok(Measure {
            atoms: Vec::new(),
            pruning_tol: tol,
            drift: 0.0,
        });
    };
    let lo = alo + blo;
    let span = (ahi + bhi - lo) as usize + 1;
    if span > capacity {
        return Err(Error::Capacity {
            needed: span,
            limit: capacity,
        });
    }
    let mut dense = vec![W::zero(); span];
    for (sa, wa) in &a.atoms {
        let base = (sa - alo) as usize;
        for (sb, wb) in &b.atoms {
            wa.mul_add_to(wb, &mut dense[base + (sb - blo) as usize]);
        }
    }
    // |a + ea| |b + eb| bound on the effect of inherited pruning
    let inherited = a.drift * b.total_variation().to_f64().abs()
        + b.drift * a.total_variation().to_f64().abs()
        + a.drift * b.drift;
    let mut m = Measure::from_dense(lo, dense);
    m.pruning_tol = tol;
    m.drift = inherited;
    m.prune();
    Ok(m)
}

/// `n`-fold convolution power by repeated squaring; `power(μ, 0) = δ₀`.
pub fn power<W: Weight>(mu: &Measure<W>, n: u32) -> Result<Measure<W>> {
    power_with_capacity(mu, n, DEFAULT_CAPACITY)
}

pub fn power_with_capacity<W: Weight>(
    mu: &Measure<W>,
    n: u32,
    capacity: usize,
) -> Result<Measure<W>> {
    let mut result = Measure::dirac(0);
    result.pruning_tol = mu.pruning_tol;
    let mut base = mu.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = convolve_with_capacity(&result, &base, capacity)?;
        }
        e >>= 1;
        if e > 0 {
            base = convolve_with_capacity(&base, &base, capacity)?;
        }
    }
    Ok(result)
}

/// Tolerance on `|Σ w - 1|` accepted for a probability measure.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// A nonnegative measure of unit mass.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMeasure {
    inner: SignedMeasure,
    mass_defect: f64,
}

impl ProbabilityMeasure {
    pub fn new(measure: SignedMeasure) -> Result<Self> {
        if let Some((site, w)) = measure.atoms().iter().find(|(_, w)| *w < 0.0) {
            return Err(Error::param(
                "mu",
                format!("negative weight {w} at site {site}"),
            ));
        }
        let mass = crate::numeric::neumaier_sum(measure.atoms().iter().map(|(_, w)| *w));
        let defect = mass - 1.0;
        if !(defect.abs() <= PROBABILITY_TOL) {
            return Err(Error::param(
                "mu",
                format!("total mass {mass} differs from 1 by {defect:e}"),
            ));
        }
        Ok(ProbabilityMeasure {
            inner: measure,
            mass_defect: defect,
        })
    }

    /// Convenience constructor from `(site, weight)` pairs.
    pub fn from_atoms(atoms: Vec<(i64, f64)>) -> Result<Self> {
        Self::new(Measure::new(atoms))
    }

    pub fn dirac(site: i64) -> Self {
        ProbabilityMeasure {
            inner: Measure::dirac(site),
            mass_defect: 0.0,
        }
    }

    /// `Σ w - 1` at validation time.
    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    pub fn measure(&self) -> &SignedMeasure {
        &self.inner
    }

    pub fn into_measure(self) -> SignedMeasure {
        self.inner
    }

    /// True when every atom sits in ℕ₀.
    pub fn supported_on_nonnegative(&self) -> bool {
        self.inner.support().map_or(true, |(lo, _)| lo >= 0)
    }
}

impl Deref for ProbabilityMeasure {
    type Target = SignedMeasure;
    fn deref(&self) -> &SignedMeasure {
        &self.inner
    }
}

/// A few measures that recur in examples and tests.
pub mod builtin {
    use super::ProbabilityMeasure;

    /// `½δ₋₁ + ½δ₁`
    pub fn symmetric_walk() -> ProbabilityMeasure {
        ProbabilityMeasure::from_atoms(vec![(-1, 0.5), (1, 0.5)]).unwrap()
    }

    /// `¼δ₋₁ + ½δ₀ + ¼δ₁`
    pub fn lazy_walk() -> ProbabilityMeasure {
        ProbabilityMeasure::from_atoms(vec![(-1, 0.25), (0, 0.5), (1, 0.25)]).unwrap()
    }

    /// `½δ₀ + ½δ₁`
    pub fn lazy_shift() -> ProbabilityMeasure {
        ProbabilityMeasure::from_atoms(vec![(0, 0.5), (1, 0.5)]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(atoms: &[(i64, f64)]) -> SignedMeasure {
        Measure::new(atoms.to_vec())
    }

    #[test]
    fn new_merges_and_drops_zeros() {
        let x = m(&[(3, 1.0), (1, 2.0), (3, -1.0), (0, 0.0)]);
        assert_eq!(x.atoms(), &[(1, 2.0)]);
    }

    #[test]
    fn dirac_is_identity() {
        let a = m(&[(-2, 0.3), (5, -1.25), (7, 2.0)]);
        assert_eq!(convolve(&Measure::dirac(0), &a).unwrap(), a);
        assert_eq!(convolve(&a, &Measure::dirac(0)).unwrap(), a);
    }

    #[test]
    fn fair_coin_squared() {
        let c = m(&[(0, 0.5), (1, 0.5)]);
        let sq = convolve(&c, &c).unwrap();
        assert_eq!(sq.atoms(), &[(0, 0.25), (1, 0.5), (2, 0.25)]);
    }

    #[test]
    fn signed_difference_squared() {
        let d = m(&[(0, 1.0), (1, -1.0)]);
        let sq = convolve(&d, &d).unwrap();
        assert_eq!(sq.atoms(), &[(0, 1.0), (1, -2.0), (2, 1.0)]);
        assert_eq!(sq.tv_norm(), 4.0);
    }

    #[test]
    fn power_zero_and_symmetric_square() {
        let mu = builtin::symmetric_walk();
        assert_eq!(power(mu.measure(), 0).unwrap(), Measure::dirac(0));
        let sq = power(mu.measure(), 2).unwrap();
        assert_eq!(sq.atoms(), &[(-2, 0.25), (0, 0.5), (2, 0.25)]);
    }

    #[test]
    fn tv_norm_examples() {
        assert_eq!(tv_norm(&Measure::dirac(0)), 1.0);
        assert_eq!(tv_norm(&m(&[(0, 1.0), (1, -2.0), (2, 1.0)])), 4.0);
    }

    #[test]
    fn capacity_error_is_explicit() {
        let a = m(&[(0, 1.0), (1000, 1.0)]);
        let err = convolve_with_capacity(&a, &a, 1000).unwrap_err();
        assert_eq!(
            err,
            Error::Capacity {
                needed: 2001,
                limit: 1000
            }
        );
    }

    #[test]
    fn pruning_accumulates_drift() {
        let a = m(&[(0, 1.0), (1, 1e-9)]).with_pruning_tol(1e-12);
        let sq = convolve(&a, &a).unwrap();
        // 1e-18 is pruned, 2e-9 kept
        assert_eq!(sq.len(), 2);
        assert!((sq.drift() - 1e-18).abs() < 1e-30);
    }

    #[test]
    fn probability_validation() {
        assert!(ProbabilityMeasure::from_atoms(vec![(0, 0.5), (1, 0.5)]).is_ok());
        assert!(ProbabilityMeasure::from_atoms(vec![(0, 0.5), (1, 0.4)]).is_err());
        assert!(ProbabilityMeasure::from_atoms(vec![(0, 1.5), (1, -0.5)]).is_err());
    }

    #[test]
    fn add_and_sub_cancel() {
        let a = m(&[(-1, 0.5), (2, 1.5)]);
        let b = m(&[(2, 1.5), (4, 3.0)]);
        assert_eq!(a.add(&b).sub(&b), a);
        assert!(a.sub(&a).is_empty());
    }
}
