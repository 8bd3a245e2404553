//! Ergodic Calderón–Zygmund decomposition for the rotation `x ↦ x + 1` on
//! ℤ_N with uniform probability, the ergodic maximal function, and
//! empirical weak-(1,1) profiles.

use crate::error::{Error, Result};
use crate::output::{float, Table};
use crate::signal::Signal;

fn require_cyclic(f: &Signal) -> Result<()> {
    if !f.is_cyclic() {
        return Err(Error::param("f", "signal must live on Z_N"));
    }
    Ok(())
}

/// `f*(x) = sup |Σ_{k=-m}^{n} f(x + k)| / (n + m + 1)` over windows of
/// length ≤ N containing `x`. Reference version, O(N³).
pub fn ergodic_maximal_reference(f: &Signal) -> Result<Signal> {
    require_cyclic(f)?;
    let n = f.len();
    let v = &f.values;
    let mut out = vec![0.0f64; n];
    for (x, o) in out.iter_mut().enumerate() {
        for m in 0..n {
            let start = (x + n - m) % n;
            let mut sum = 0.0;
            for len in 1..=n {
                sum += v[(start + len - 1) % n];
                if len > m {
                    let avg = sum.abs() / len as f64;
                    if avg > *o {
                        *o = avg;
                    }
                }
            }
        }
    }
    Signal::cyclic(out)
}

/// Same maximal function in O(N²): window sums are extended one length at
/// a time in the reference's summation order, and each length's averages
/// are swept with a monotone deque. Bitwise equal to the reference.
pub fn ergodic_maximal(f: &Signal) -> Result<Signal> {
    require_cyclic(f)?;
    let n = f.len();
    let v = &f.values;
    let mut sums = vec![0.0f64; n];
    let mut out = vec![0.0f64; n];
    let mut avg = vec![0.0f64; n];
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::with_capacity(n);
    for len in 1..=n {
        for (s, sum) in sums.iter_mut().enumerate() {
            *sum += v[(s + len - 1) % n];
            avg[s] = sum.abs() / len as f64;
        }
        // x is covered by starts x-len+1 ..= x (cyclically); sweep the
        // doubled index range so every window is contiguous
        deque.clear();
        for idx in 0..(n + len - 1) {
            let s = idx % n;
            while deque.back().is_some_and(|&b| avg[b % n] <= avg[s]) {
                deque.pop_back();
            }
            deque.push_back(idx);
            if idx + 1 >= len {
                let lo = idx + 1 - len;
                while deque.front().is_some_and(|&fr| fr < lo) {
                    deque.pop_front();
                }
                let x = idx % n;
                let best = avg[deque.front().copied().unwrap() % n];
                if best > out[x] {
                    out[x] = best;
                }
            }
        }
    }
    Signal::cyclic(out)
}

/// One bad part: arc `E_i = {p, …, p + l - 1}` with base `B_i = {p - 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CzPart {
    pub base: usize,
    pub start: usize,
    pub len: usize,
    /// `b_i` restricted to the arc, in arc order.
    pub values: Vec<f64>,
}

impl CzPart {
    pub fn sites(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |j| (self.start + j) % n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub g: Signal,
    pub parts: Vec<CzPart>,
}

impl CzDecomposition {
    /// `Σ_i b_i` as a signal.
    pub fn bad(&self) -> Signal {
        let n = self.g.len();
        let mut b = vec![0.0; n];
        for p in &self.parts {
            for (x, v) in p.sites(n).zip(&p.values) {
                b[x] += v;
            }
        }
        Signal {
            domain: self.g.domain,
            values: b,
        }
    }

    pub fn bad_set_measure(&self) -> f64 {
        self.parts.iter().map(|p| p.len).sum::<usize>() as f64 / self.g.len() as f64
    }
}

/// Decomposition at height `λ`.
///
/// The bad set is `U = {(|f|)* > λ}`, split into maximal arcs. On an arc
/// `I` the good part is the average of `f` and `b = (f - avg_I f) 1_I`.
/// Taking the maximal function of `|f|` keeps `|avg_I f| ≤ 2λ` for signed
/// `f`; for `f ≥ 0` it is the plain `f*`.
pub fn cz_decompose(f: &Signal, lambda: f64) -> Result<CzDecomposition> {
    require_cyclic(f)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("{lambda} must be positive")));
    }
    let n = f.len();
    let star = ergodic_maximal(&f.map(f64::abs))?;
    let bad: Vec<bool> = star.values.iter().map(|&m| m > lambda).collect();
    let Some(anchor) = bad.iter().position(|&b| !b) else {
        return Err(Error::Degenerate(format!(
            "every point has maximal average above lambda = {lambda}; \
             lambda > 2||f||_1 = {} always leaves a good point",
            2.0 * f.l1_norm()
        )));
    };
    let mut g = f.values.clone();
    let mut parts = Vec::new();
    let mut j = 1;
    while j <= n {
        let x = (anchor + j) % n;
        if !bad[x] {
            j += 1;
            continue;
        }
        let start = x;
        let mut len = 0;
        while j <= n && bad[(anchor + j) % n] {
            len += 1;
            j += 1;
        }
        let sites: Vec<usize> = (0..len).map(|k| (start + k) % n).collect();
        let avg = crate::numeric::neumaier_sum(sites.iter().map(|&y| f.values[y])) / len as f64;
        let values = sites.iter().map(|&y| f.values[y] - avg).collect();
        for &y in &sites {
            g[y] = avg;
        }
        parts.push(CzPart {
            base: (start + n - 1) % n,
            start,
            len,
            values,
        });
    }
    Ok(CzDecomposition {
        lambda,
        g: Signal::cyclic(g)?,
        parts,
    })
}

/// One checked property of the decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct CzCheck {
    pub property: &'static str,
    pub holds: bool,
    /// Worst observed value of the checked quantity.
    pub observed: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CzReport {
    pub checks: Vec<CzCheck>,
}

impl CzReport {
    pub fn get(&self, property: &str) -> Option<&CzCheck> {
        self.checks.iter().find(|c| c.property == property)
    }

    /// Every property except the literal reading of d).
    pub fn all_hold(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.property != "d_literal")
            .all(|c| c.holds)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["property", "holds", "observed", "bound"]);
        for c in &self.checks {
            t.push(vec![
                c.property.into(),
                c.holds.to_string(),
                float(c.observed),
                float(c.bound),
            ]);
        }
        t
    }
}

/// Checks the decomposition against `f`.
///
/// * reconstruction `f = g + Σ b_i` (1e-12, relative to `‖f‖∞`)
/// * a) bases disjoint and inside `{f* ≤ λ}`; b) arcs disjoint
/// * c) `Σ_{k=1}^{l_i} b_i(τᵏ x) = 0` on `B_i` (1e-10, relative)
/// * d) both `Σ_k |b_i(τᵏ x)| ≤ 2λ` and its average over `l_i`
/// * e) `Σ m(E_i) ≤ 2‖f‖₁/λ`
/// * f) `‖g‖∞ ≤ 2λ`, `‖g‖₁ ≤ ‖f‖₁`
pub fn verify_cz(d: &CzDecomposition, f: &Signal) -> Result<CzReport> {
    require_cyclic(f)?;
    let n = f.len();
    if d.g.len() != n {
        return Err(Error::param("f", "decomposition and signal sizes differ"));
    }
    let scale = f.sup_norm().max(f64::MIN_POSITIVE);
    let lambda = d.lambda;
    let bad = d.bad();
    let recon = (0..n)
        .map(|x| (f.values[x] - d.g.values[x] - bad.values[x]).abs())
        .fold(0.0, f64::max)
        / scale;

    let mut owner = vec![usize::MAX; n];
    let mut disjoint = true;
    for (i, p) in d.parts.iter().enumerate() {
        for x in p.sites(n) {
            disjoint &= owner[x] == usize::MAX;
            owner[x] = i;
        }
    }
    let star = ergodic_maximal(f)?;
    let mut bases: Vec<usize> = d.parts.iter().map(|p| p.base).collect();
    bases.sort_unstable();
    let bases_disjoint = bases.windows(2).all(|w| w[0] != w[1]);
    let bases_good = d.parts.iter().all(|p| star.values[p.base] <= lambda);

    let mut cancel = 0.0f64;
    let mut d_lit = 0.0f64;
    let mut d_avg = 0.0f64;
    for p in &d.parts {
        let sum = crate::numeric::neumaier_sum(p.values.iter().copied());
        cancel = cancel.max(sum.abs() / scale);
        let abs_sum = crate::numeric::neumaier_sum(p.values.iter().map(|v| v.abs()));
        d_lit = d_lit.max(abs_sum);
        d_avg = d_avg.max(abs_sum / p.len as f64);
    }
    let f_l1 = f.l1_norm();
    let e_ratio = if f_l1 > 0.0 {
        d.bad_set_measure() * lambda / f_l1
    } else {
        0.0
    };
    let g_sup = d.g.sup_norm();
    let g_l1 = d.g.l1_norm();

    let check = |property, holds, observed, bound| CzCheck {
        property,
        holds,
        observed,
        bound,
    };
    Ok(CzReport {
        checks: vec![
            check("reconstruction", recon <= 1e-12, recon, 1e-12),
            check("a_bases", bases_disjoint && bases_good, bases.len() as f64, 0.0),
            check("b_disjoint", disjoint, d.parts.len() as f64, 0.0),
            check("c_cancellation", cancel <= 1e-10, cancel, 1e-10),
            check("d_literal", d_lit <= 2.0 * lambda, d_lit, 2.0 * lambda),
            check("d_averaged", d_avg <= 2.0 * lambda, d_avg, 2.0 * lambda),
            check("e_measure", e_ratio <= 2.0, e_ratio, 2.0),
            check("f_sup", g_sup <= 2.0 * lambda, g_sup, 2.0 * lambda),
            check("f_l1", g_l1 <= f_l1 * (1.0 + 1e-12), g_l1, f_l1),
        ],
    })
}

/// Level-set profile `λ ↦ λ m{|h| > λ} / ‖f‖₁` of `h = op(f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakProfile {
    /// `(λ, m{|h| > λ}, λ m{|h| > λ} / ‖f‖₁)`
    pub rows: Vec<(f64, f64, f64)>,
    /// Exact `sup_λ` over all `λ > 0`, not only the sampled ones.
    pub sup_constant: f64,
}

impl WeakProfile {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["lambda", "level_measure", "weak_constant"]);
        for &(l, m, c) in &self.rows {
            t.push(vec![float(l), float(m), float(c)]);
        }
        t
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv()
    }
}

/// Weak-(1,1) profile of an already evaluated `h = op(f)`.
pub fn weak11_profile_of(h: &Signal, f_norm: f64, lambdas: &[f64]) -> WeakProfile {
    let w = h.measure_weight();
    let normalize = |x: f64| if f_norm > 0.0 { x / f_norm } else { 0.0 };
    let rows = lambdas
        .iter()
        .map(|&l| {
            let count = h.values.iter().filter(|v| v.abs() > l).count();
            let m = count as f64 * w;
            (l, m, normalize(l * m))
        })
        .collect();
    // sup over λ of λ·#{|h| > λ} is approached as λ ↑ q_(j)
    let mut sorted: Vec<f64> = h.values.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let sup = sorted
        .iter()
        .enumerate()
        .map(|(j, &q)| q * (j + 1) as f64 * w)
        .fold(0.0, f64::max);
    WeakProfile {
        rows,
        sup_constant: normalize(sup),
    }
}

/// Weak-(1,1) profile of `op` at `f`.
pub fn weak11_profile<F>(op: F, f: &Signal, lambdas: &[f64]) -> Result<WeakProfile>
where
    F: Fn(&Signal) -> Result<Signal>,
{
    let h = op(f)?;
    Ok(weak11_profile_of(&h, f.l1_norm(), lambdas))
}
