//! Exact s-variation by dynamic programming, oscillation norms over
//! blocks, block-sequence generators, and variation statistics of
//! weighted operator orbits `n^β Tⁿ(I - T)^r f`.
//!
//! Array positions are 0-based. For orbits, position `n - 1` holds the
//! term with index `n`.

use crate::error::{Error, Result};
use crate::output::{float, Table};
use crate::signal::{orbit, Signal};
use crate::spectral::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariationMethod {
    ExactDp,
    BruteForce,
}

impl VariationMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            VariationMethod::ExactDp => "exact-DP",
            VariationMethod::BruteForce => "brute-force",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationReport {
    pub value: f64,
    /// Optimal increasing index sequence; empty when the value is 0.
    pub optimal_partition: Vec<usize>,
    pub method: VariationMethod,
}

impl VariationReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["value", "method", "partition"]);
        let part: Vec<String> = self.optimal_partition.iter().map(|i| i.to_string()).collect();
        t.push(vec![float(self.value), self.method.as_str().into(), part.join(";")]);
        t
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv()
    }
}

fn pow_s(x: f64, s: f64) -> f64 {
    if s == 1.0 {
        x
    } else if s == 2.0 {
        x * x
    } else {
        x.powf(s)
    }
}

/// `Σ |x_{p_{k+1}} - x_{p_k}|^s` along `partition`, left to right.
pub fn partition_sum(x: &[f64], s: f64, partition: &[usize]) -> f64 {
    partition
        .windows(2)
        .fold(0.0, |acc, w| acc + pow_s((x[w[1]] - x[w[0]]).abs(), s))
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::param("s", format!("{s} must be a finite real >= 1")));
    }
    Ok(())
}

/// `v(s)` by `V(j) = max(0, max_{i<j} V(i) + |x_j - x_i|^s)`; O(n²).
pub fn svariation_dp(x: &[f64], s: f64) -> Result<VariationReport> {
    check_s(s)?;
    if x.is_empty() {
        return Err(Error::param("x", "array is empty"));
    }
    let n = x.len();
    let mut v = vec![0.0f64; n];
    let mut back = vec![usize::MAX; n];
    for j in 1..n {
        for i in 0..j {
            let cand = v[i] + pow_s((x[j] - x[i]).abs(), s);
            if cand > v[j] {
                v[j] = cand;
                back[j] = i;
            }
        }
    }
    let (mut end, mut best) = (0, 0.0);
    for (j, &vj) in v.iter().enumerate() {
        if vj > best {
            best = vj;
            end = j;
        }
    }
    let mut partition = Vec::new();
    if best > 0.0 {
        let mut j = end;
        partition.push(j);
        while back[j] != usize::MAX {
            j = back[j];
            partition.push(j);
        }
        partition.reverse();
    }
    Ok(VariationReport {
        value: best.powf(1.0 / s),
        optimal_partition: partition,
        method: VariationMethod::ExactDp,
    })
}

/// Largest array accepted by [`svariation_brute`].
pub const BRUTE_MAX_LEN: usize = 16;

/// `v(s)` by enumerating every index subset of size ≥ 2.
pub fn svariation_brute(x: &[f64], s: f64) -> Result<VariationReport> {
    check_s(s)?;
    if x.is_empty() {
        return Err(Error::param("x", "array is empty"));
    }
    if x.len() > BRUTE_MAX_LEN {
        return Err(Error::param(
            "x",
            format!("length {} exceeds {BRUTE_MAX_LEN}", x.len()),
        ));
    }
    let n = x.len();
    let mut best = 0.0;
    let mut best_part = Vec::new();
    let mut part = Vec::with_capacity(n);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        part.clear();
        part.extend((0..n).filter(|i| mask >> i & 1 == 1));
        let v = partition_sum(x, s, &part);
        if v > best {
            best = v;
            best_part.clone_from(&part);
        }
    }
    Ok(VariationReport {
        value: best.powf(1.0 / s),
        optimal_partition: best_part,
        method: VariationMethod::BruteForce,
    })
}

/// Increasing indices `{n_k}` with an optional gap-growth certificate
/// `c₁ n_k^a ≤ n_{k+1} - n_k ≤ c₂ n_k^a`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSequence {
    pub indices: Vec<u64>,
    pub growth_a: Option<f64>,
    /// `(c₁, c₂)` measured over the sequence when `growth_a` is set.
    pub certificate: Option<(f64, f64)>,
    /// Side conditions echoed from the constructor, e.g. `a < (s-1)/(s+1)`.
    pub notes: Vec<String>,
}

impl BlockSequence {
    pub fn new(indices: Vec<u64>) -> Result<Self> {
        if indices.first() == Some(&0) {
            return Err(Error::param("blocks", "indices must be positive"));
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("blocks", "indices must be strictly increasing"));
        }
        Ok(BlockSequence {
            indices,
            growth_a: None,
            certificate: None,
            notes: Vec::new(),
        })
    }

    /// Attaches the growth exponent and measures `(c₁, c₂)`.
    pub fn with_growth(mut self, a: f64) -> Self {
        let ratios: Vec<f64> = self
            .indices
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / (w[0] as f64).powf(a))
            .collect();
        self.certificate = (!ratios.is_empty()).then(|| {
            (
                ratios.iter().copied().fold(f64::INFINITY, f64::min),
                ratios.iter().copied().fold(0.0, f64::max),
            )
        });
        self.growth_a = Some(a);
        self
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Blocks `[n_k, n_{k+1}]`.
    pub fn blocks(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.indices.windows(2).map(|w| (w[0], w[1]))
    }

    /// `max_k n_{k+1} / n_k`.
    pub fn max_step_ratio(&self) -> f64 {
        self.blocks()
            .map(|(a, b)| b as f64 / a as f64)
            .fold(1.0, f64::max)
    }
}

/// `(Σ_k (max - min over positions n_k..=n_{k+1})^s)^{1/s}`.
pub fn oscillation_norm(x: &[f64], s: f64, blocks: &BlockSequence) -> Result<f64> {
    check_s(s)?;
    let mut acc = 0.0;
    for (a, b) in blocks.blocks() {
        let (a, b) = (a as usize, b as usize);
        if b >= x.len() {
            return Err(Error::param(
                "blocks",
                format!("block [{a}, {b}] exceeds array length {}", x.len()),
            ));
        }
        let seg = &x[a..=b];
        let hi = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = seg.iter().copied().fold(f64::INFINITY, f64::min);
        acc += pow_s(hi - lo, s);
    }
    Ok(acc.powf(1.0 / s))
}

/// `⌈y⌉`, treating values within a few ulps of an integer as that integer.
fn robust_ceil(y: f64) -> f64 {
    let r = y.round();
    if (y - r).abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
        r
    } else {
        y.ceil()
    }
}

/// `n_{k+1} = n_k + max(1, ⌈n_k^a⌉)` from `n_start` while `≤ n_stop`.
pub fn gap_sequence(a: f64, n_start: u64, n_stop: u64) -> Result<BlockSequence> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::param("a", format!("{a} is outside (0, 1]")));
    }
    if n_start == 0 {
        return Err(Error::param("n_start", "must be at least 1"));
    }
    let mut indices = Vec::new();
    let mut n = n_start;
    while n <= n_stop {
        indices.push(n);
        let gap = robust_ceil((n as f64).powf(a)).max(1.0) as u64;
        n += gap;
    }
    Ok(BlockSequence::new(indices)?.with_growth(a))
}

/// Dyadic points `2^k`, `k = 0..=k_max`, with `N_k = round(2^{k(1-a)})`
/// equally spaced points inserted in `[2^k, 2^{k+1})`:
/// `r_{k,j} = 2^k + ⌊j 2^k / N_k⌋`. Ends at `2^{k_max+1}`.
pub fn interpolated_dyadic(a: f64, k_max: u32) -> Result<BlockSequence> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param("a", format!("{a} is outside (0, 1)")));
    }
    if k_max > 40 {
        return Err(Error::param("k_max", "at most 40"));
    }
    let mut indices = Vec::new();
    for k in 0..=k_max {
        let base = 1u64 << k;
        let nk = ((k as f64 * (1.0 - a)).exp2().round() as u64).clamp(1, base);
        for j in 0..nk {
            indices.push(base + j * base / nk);
        }
    }
    indices.push(1u64 << (k_max + 1));
    let mut seq = BlockSequence::new(indices)?.with_growth(a);
    seq.notes
        .push(format!("caller must ensure a < (s-1)/(s+1); a = {a}"));
    Ok(seq)
}

/// Pointwise `v(s)` (or block `o(s)`) of `n ↦ n^β Tⁿ(I - T)^r f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitVariation {
    pub values: Signal,
    pub l1_norm: f64,
    /// `β < r`, and with blocks also `β < r - (1 - a)/s`.
    pub thresholds: Vec<(String, f64)>,
}

/// Default work budget `n_max² · points` for exact DP on orbits.
pub const DEFAULT_DP_BUDGET: f64 = 4e9;

#[allow(clippy::too_many_arguments)]
pub fn orbit_variation(
    mu: &Symbol,
    beta: f64,
    r: f64,
    s: f64,
    f: &Signal,
    n_max: usize,
    blocks: Option<&BlockSequence>,
    frac_k: usize,
    budget: f64,
) -> Result<OrbitVariation> {
    check_s(s)?;
    if let Some(b) = blocks {
        if let Some(&last) = b.indices.last() {
            if last as usize > n_max {
                return Err(Error::param(
                    "blocks",
                    format!("last index {last} exceeds n_max = {n_max}"),
                ));
            }
        }
    }
    let orb = orbit(mu, r, f, n_max, frac_k)?;
    if blocks.is_none() {
        let cost = (n_max as f64).powi(2) * orb.width as f64;
        if cost > budget {
            return Err(Error::param(
                "n_max",
                format!(
                    "exact variation needs ~{cost:.2e} steps (budget {budget:.2e}); use blocks"
                ),
            ));
        }
    }
    let shifted = blocks.map(|b| BlockSequence {
        indices: b.indices.iter().map(|&i| i - 1).collect(),
        ..b.clone()
    });
    let weights: Vec<f64> = (1..=n_max).map(|n| (n as f64).powf(beta)).collect();
    let values = crate::par::map_range(orb.width, |i| {
        let col: Vec<f64> = orb.rows.iter().zip(&weights).map(|(r, w)| w * r[i]).collect();
        match &shifted {
            Some(b) => oscillation_norm(&col, s, b),
            None => svariation_dp(&col, s).map(|v| v.value),
        }
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let out = orb.signal(values);
    let mut thresholds = vec![("beta < r".to_string(), r)];
    if let Some(a) = blocks.and_then(|b| b.growth_a) {
        thresholds.push(("beta < r - (1-a)/s".into(), r - (1.0 - a) / s));
    }
    Ok(OrbitVariation {
        l1_norm: out.l1_norm(),
        values: out,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        let x = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(svariation_dp(&x, 1.0).unwrap().value, 3.0);
        assert_eq!(svariation_dp(&x, 2.0).unwrap().value, 3f64.sqrt());
        let m = svariation_dp(&[0.0, 1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(m.value, 3.0);
        assert_eq!(m.optimal_partition, vec![0, 3]);
    }

    #[test]
    fn brute_trivial_cases() {
        assert_eq!(svariation_brute(&[2.0; 5], 1.5).unwrap().value, 0.0);
        assert_eq!(svariation_brute(&[0.0, 1.0], 3.0).unwrap().value, 1.0);
        assert!(svariation_brute(&[0.0; 17], 1.0).is_err());
        assert!(svariation_dp(&[0.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn partition_reproduces_value() {
        let x = [0.3, -1.2, 2.5, 2.4, -0.7, 1.1, 0.0];
        for s in [1.0, 1.5, 2.0, 3.0] {
            let r = svariation_dp(&x, s).unwrap();
            let again = partition_sum(&x, s, &r.optimal_partition).powf(1.0 / s);
            assert!((again - r.value).abs() <= 1e-12 * r.value);
        }
    }

    #[test]
    fn alternating_signs_keep_every_point_at_s_one() {
        let x = [0.0, 2.0, -1.0, 3.0, -2.0];
        assert_eq!(svariation_dp(&x, 1.0).unwrap().optimal_partition, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn oscillation_examples() {
        let blocks = BlockSequence::new(vec![1, 3]).unwrap();
        assert_eq!(oscillation_norm(&[0.0, 1.0, 0.0, 1.0], 2.0, &blocks).unwrap(), 1.0);
        let mono = [1.0, 2.0, 4.0, 7.0];
        let all = BlockSequence::new(vec![1, 3]).unwrap();
        assert_eq!(oscillation_norm(&mono, 1.0, &all).unwrap(), 5.0);
        assert!(oscillation_norm(&mono, 1.0, &BlockSequence::new(vec![1, 9]).unwrap()).is_err());
    }

    #[test]
    fn gap_sequence_examples() {
        let d = gap_sequence(1.0, 1, 64).unwrap();
        assert_eq!(d.indices, vec![1, 2, 4, 8, 16, 32, 64]);
        let h = gap_sequence(0.5, 4, 20).unwrap();
        assert_eq!(h.indices, vec![4, 6, 9, 12, 16, 20]);
        let long = gap_sequence(0.5, 1, 10_000).unwrap();
        let (c1, c2) = long.certificate.unwrap();
        assert!(c2 / c1 <= 2.0, "{c1} {c2}");
    }

    #[test]
    fn interpolated_dyadic_examples() {
        let seq = interpolated_dyadic(0.5, 4).unwrap();
        let level4: Vec<u64> = seq.indices.iter().copied().filter(|&r| (16..32).contains(&r)).collect();
        assert_eq!(level4, vec![16, 20, 24, 28]);
        let near_one = interpolated_dyadic(0.999, 10).unwrap();
        assert_eq!(near_one.indices, (0..=11).map(|k| 1u64 << k).collect::<Vec<_>>());
        let scan = interpolated_dyadic(0.5, 12).unwrap();
        for w in scan.indices.windows(2) {
            let ratio = (w[1] - w[0]) as f64 / (w[0] as f64).powf(0.5);
            assert!((0.5..=2.0).contains(&ratio), "{w:?} {ratio}");
        }
    }

    #[test]
    fn orbit_variation_trivial() {
        let nu = Symbol::nu_alpha(0.5).unwrap();
        let zero = Signal::cyclic(vec![0.0; 8]).unwrap();
        let v = orbit_variation(&nu, 0.4, 0.5, 2.0, &zero, 16, None, 0, DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(v.l1_norm, 0.0);
        let id = Symbol::from(&crate::zmeasure::ProbabilityMeasure::dirac(0));
        let f = Signal::cyclic(vec![1.0, 2.0, 3.0]).unwrap();
        let v = orbit_variation(&id, 0.0, 1.0, 2.0, &f, 8, None, 0, DEFAULT_DP_BUDGET).unwrap();
        assert!(v.l1_norm < 1e-12);
    }

    #[test]
    fn orbit_variation_budget() {
        let nu = Symbol::nu_alpha(0.5).unwrap();
        let f = Signal::cyclic_spike(64, 0).unwrap();
        assert!(orbit_variation(&nu, 0.4, 0.5, 2.0, &f, 256, None, 0, 1e3).is_err());
        let blocks = gap_sequence(0.5, 1, 256).unwrap();
        assert!(orbit_variation(&nu, 0.4, 0.5, 2.0, &f, 256, Some(&blocks), 0, 1e3).is_ok());
    }

    #[test]
    fn csv_layout() {
        let r = svariation_dp(&[0.0, 1.0, 2.0, 3.0], 2.0).unwrap();
        assert!(r.to_csv().ends_with(",exact-DP,0;3\n"));
    }

    fn arrays() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, 1..=10)
    }

    proptest! {
        #[test]
        fn dp_equals_brute(x in arrays(), si in 0usize..4) {
            let s = [1.0, 1.5, 2.0, 3.0][si];
            let a = svariation_dp(&x, s).unwrap();
            let b = svariation_brute(&x, s).unwrap();
            prop_assert_eq!(a.value, b.value);
        }

        #[test]
        fn oscillation_below_variation(x in proptest::collection::vec(-5.0f64..5.0, 4..=12)) {
            let blocks = gap_sequence(0.5, 1, x.len() as u64 - 1).unwrap();
            let o = oscillation_norm(&x, 2.0, &blocks).unwrap();
            let v = svariation_dp(&x, 2.0).unwrap().value;
            prop_assert!(o <= v * (1.0 + 1e-12));
        }

        #[test]
        fn variation_nonincreasing_in_s(x in proptest::collection::vec(0.0f64..1.0, 2..=12)) {
            let v: Vec<f64> = [1.0, 1.5, 2.0, 3.0].iter().map(|&s| svariation_dp(&x, s).unwrap().value).collect();
            prop_assert!(v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }
}
