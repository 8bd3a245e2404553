//! Generalized square functions
//! `Q_{α,s,r} f = (Σ_{n≥1} n^α |Tⁿ(I - T)^r f|^s)^{1/s}`, weighted maximal
//! orbits `sup_n n^β |Tⁿ(I - T)^r f|`, and the Abel-summation domination
//! of the latter by `Q_{β-1,1,r} f + Q_{β,1,r+1} f`.
//!
//! Infinite sums are cut at `n_max`; the partial sums at `n_max/4` and
//! `n_max/2` are kept so boundedness can be judged by stabilization.

use crate::error::{Error, Result};
use crate::output::{float, Table};
use crate::signal::{orbit, Orbit, Signal};
use crate::spectral::Symbol;

/// Parameters of `Q_{α,s,r}` and its truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QSpec {
    pub alpha: f64,
    pub s: f64,
    pub r: f64,
    pub n_max: usize,
    /// Atoms kept when `ν_α` or a fractional difference must be truncated
    /// (window model only).
    pub frac_k: usize,
}

impl QSpec {
    pub fn new(alpha: f64, s: f64, r: f64, n_max: usize) -> Self {
        QSpec {
            alpha,
            s,
            r,
            n_max,
            frac_k: 4096,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > -1.0) {
            return Err(Error::param("alpha", format!("{} must exceed -1", self.alpha)));
        }
        if !(self.s >= 1.0) || !self.s.is_finite() {
            return Err(Error::param("s", format!("{} must be at least 1", self.s)));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::param("r", format!("{} must be positive", self.r)));
        }
        if self.n_max == 0 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        Ok(())
    }

    /// `s r > α + 1`, the bounded regime.
    pub fn in_bounded_regime(&self) -> bool {
        self.s * self.r > self.alpha + 1.0
    }
}

/// Pointwise `Q` values with the partial-sum ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct QResult {
    pub spec: QSpec,
    pub q: Signal,
    /// `Q` truncated at `n_max / 4` and `n_max / 2`.
    pub partial_quarter: Vec<f64>,
    pub partial_half: Vec<f64>,
    /// The `n` with the largest term `n^α |u_n|^s`; 0 where every term is 0.
    pub argmax_n: Vec<usize>,
    /// Max over points of the last-quarter share of the `s`-th power sum.
    pub tail_diagnostic: f64,
    /// Points where the truncated sum vanishes but `u_{n_max+1}` does not.
    pub tail_flags: Vec<usize>,
}

impl QResult {
    pub fn l1_norm(&self) -> f64 {
        self.q.l1_norm()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["x", "q_value", "partial_q_quarter", "partial_q_half", "argmax_n"]);
        for i in 0..self.q.len() {
            t.push(vec![
                self.q.site(i).to_string(),
                float(self.q.values[i]),
                float(self.partial_quarter[i]),
                float(self.partial_half[i]),
                self.argmax_n[i].to_string(),
            ]);
        }
        t
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv()
    }
}

fn power_sum_term(n: usize, alpha: f64, s: f64, u: f64) -> f64 {
    let a = u.abs();
    let p = if s == 1.0 {
        a
    } else if s == 2.0 {
        a * a
    } else {
        a.powf(s)
    };
    (n as f64).powf(alpha) * p
}

fn root(x: f64, s: f64) -> f64 {
    if s == 1.0 {
        x
    } else if s == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / s)
    }
}

/// `Q_{α,s,r} f` from a materialized orbit (which must reach `n_max + 1`
/// for the tail flags; shorter orbits skip them).
pub fn q_from_orbit(orb: &Orbit, spec: &QSpec) -> Result<QResult> {
    spec.validate()?;
    let n_max = spec.n_max.min(orb.n_max());
    let quarter = (n_max / 4).max(1);
    let half = (n_max / 2).max(1);
    let three = (3 * n_max / 4).max(1);
    let width = orb.width;
    let mut sums = vec![0.0; width];
    let mut at_quarter = vec![0.0; width];
    let mut at_half = vec![0.0; width];
    let mut at_three = vec![0.0; width];
    let mut best = vec![(0.0f64, 0usize); width];
    for n in 1..=n_max {
        let row = &orb.rows[n - 1];
        for i in 0..width {
            let term = power_sum_term(n, spec.alpha, spec.s, row[i]);
            if !term.is_finite() {
                return Err(Error::Numerical(format!("non-finite Q term at n = {n}")));
            }
            sums[i] += term;
            if term > best[i].0 {
                best[i] = (term, n);
            }
        }
        if n == quarter {
            at_quarter.copy_from_slice(&sums);
        }
        if n == half {
            at_half.copy_from_slice(&sums);
        }
        if n == three {
            at_three.copy_from_slice(&sums);
        }
    }
    let tail_diagnostic = (0..width)
        .filter(|&i| sums[i] > 0.0)
        .map(|i| (sums[i] - at_three[i]) / sums[i])
        .fold(0.0, f64::max);
    let tail_flags = match orb.rows.get(n_max) {
        Some(next) => (0..width).filter(|&i| sums[i] == 0.0 && next[i] != 0.0).collect(),
        None => Vec::new(),
    };
    Ok(QResult {
        spec: *spec,
        q: orb.signal(sums.iter().map(|&x| root(x, spec.s)).collect()),
        partial_quarter: at_quarter.iter().map(|&x| root(x, spec.s)).collect(),
        partial_half: at_half.iter().map(|&x| root(x, spec.s)).collect(),
        argmax_n: best.iter().map(|b| b.1).collect(),
        tail_diagnostic,
        tail_flags,
    })
}

/// `Q_{α,s,r} f` truncated at `spec.n_max`.
pub fn q_function(mu: &Symbol, spec: &QSpec, f: &Signal) -> Result<QResult> {
    spec.validate()?;
    let orb = orbit(mu, spec.r, f, spec.n_max + 1, spec.frac_k)?;
    q_from_orbit(&orb, spec)
}

/// Pointwise `sup_{n ≤ n_max} n^β |Tⁿ(I - T)^r f|` and its maximizer.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxOrbit {
    pub sup: Signal,
    /// Maximizing `n` per point; 0 where the orbit vanishes.
    pub argmax_n: Vec<usize>,
    /// `β < r`, where the maximal function is bounded.
    pub bounded_regime: bool,
}

pub fn max_from_orbit(orb: &Orbit, beta: f64, r: f64) -> MaxOrbit {
    let mut sup = vec![0.0f64; orb.width];
    let mut arg = vec![0usize; orb.width];
    for (k, row) in orb.rows.iter().enumerate() {
        let n = k + 1;
        let w = (n as f64).powf(beta);
        for i in 0..orb.width {
            let v = w * row[i].abs();
            if v > sup[i] {
                sup[i] = v;
                arg[i] = n;
            }
        }
    }
    MaxOrbit {
        sup: orb.signal(sup),
        argmax_n: arg,
        bounded_regime: beta < r,
    }
}

pub fn max_weighted_orbit(
    mu: &Symbol,
    beta: f64,
    r: f64,
    f: &Signal,
    n_max: usize,
    frac_k: usize,
) -> Result<MaxOrbit> {
    if !(beta >= 0.0) {
        return Err(Error::param("beta", format!("{beta} must be nonnegative")));
    }
    if !(r > 0.0) {
        return Err(Error::param("r", format!("{r} must be positive")));
    }
    let orb = orbit(mu, r, f, n_max, frac_k)?;
    Ok(max_from_orbit(&orb, beta, r))
}

/// Pointwise comparison of `sup_n n^β|Tⁿ(I-T)^r f|` with
/// `Q_{β-1,1,r} f + Q_{β,1,r+1} f`.
#[derive(Clone, Debug, PartialEq)]
pub struct AbelReport {
    /// Largest pointwise ratio lhs/rhs (`0/0 = 0`, `x/0 = ∞`).
    pub ratio: f64,
    pub lhs_max: f64,
    pub rhs_at_worst: f64,
    /// Site of the largest ratio, or of a violation with zero rhs.
    pub worst_site: Option<i64>,
}

impl AbelReport {
    pub fn holds_with(&self, c: f64) -> bool {
        self.ratio <= c
    }
}

/// Abel-summation domination for integer `r ≥ 1`. `Q_{β-1,1,r}` with
/// `β = 0` uses `α = -1`, which [`QSpec`] excludes; the sum is computed
/// directly here.
pub fn abel_domination_check(
    mu: &Symbol,
    beta: f64,
    r: u32,
    f: &Signal,
    n_max: usize,
) -> Result<AbelReport> {
    if r == 0 {
        return Err(Error::param("r", "must be an integer >= 1"));
    }
    if !(beta >= 0.0) {
        return Err(Error::param("beta", format!("{beta} must be nonnegative")));
    }
    let rf = r as f64;
    let lower = orbit(mu, rf, f, n_max, 0)?;
    let upper = orbit(mu, rf + 1.0, f, n_max, 0)?;
    let lhs = max_from_orbit(&lower, beta, rf).sup;
    let mut rhs = vec![0.0; lower.width];
    for n in 1..=n_max {
        let a = (n as f64).powf(beta - 1.0);
        let b = (n as f64).powf(beta);
        for i in 0..lower.width {
            rhs[i] += a * lower.rows[n - 1][i].abs() + b * upper.rows[n - 1][i].abs();
        }
    }
    let mut report = AbelReport {
        ratio: 0.0,
        lhs_max: lhs.values.iter().fold(0.0, |m, v| m.max(*v)),
        rhs_at_worst: 0.0,
        worst_site: None,
    };
    for i in 0..lower.width {
        let l = lhs.values[i];
        let ratio = match (l == 0.0, rhs[i] == 0.0) {
            (true, _) => 0.0,
            (false, true) => f64::INFINITY,
            (false, false) => l / rhs[i],
        };
        if ratio > report.ratio {
            report.ratio = ratio;
            report.rhs_at_worst = rhs[i];
            report.worst_site = Some(lower.site(i));
        }
    }
    Ok(report)
}
