use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Closed-form candidate majorants `h` with their derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HShape {
    /// `t²`
    TSquared,
    /// `sin²(πt)`, the periodic surrogate of `t²`
    SinSquared,
    /// `|2 sin πt|^α`
    SinPower(f64),
    /// `|t|^α`
    TPower(f64),
}

impl HShape {
    pub fn name(&self) -> String {
        match self {
            HShape::TSquared => "t^2".into(),
            HShape::SinSquared => "sin^2(pi t)".into(),
            HShape::SinPower(a) => format!("|2 sin pi t|^{a}"),
            HShape::TPower(a) => format!("|t|^{a}"),
        }
    }

    /// `(h(t), h′(t))` for `t > 0`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            HShape::TSquared => (t * t, 2.0 * t),
            HShape::SinSquared => {
                let s = (PI * t).sin();
                (s * s, PI * (2.0 * PI * t).sin())
            }
            HShape::SinPower(a) => {
                let base = 2.0 * (PI * t).sin();
                (base.powf(a), a * base.powf(a - 1.0) * 2.0 * PI * (PI * t).cos())
            }
            HShape::TPower(a) => (t.powf(a), a * t.powf(a - 1.0)),
        }
    }

    /// The library searched by [`super::search_h`], for a symbol whose
    /// expected order of contact at `t = 0` is `alpha`.
    pub fn library(alpha: f64) -> Vec<HShape> {
        vec![
            HShape::TSquared,
            HShape::SinSquared,
            HShape::SinPower(alpha),
            HShape::TPower(alpha),
        ]
    }
}

/// `h` and `h′` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HProfile {
    pub name: String,
    pub ts: Vec<f64>,
    pub h: Vec<f64>,
    pub hprime: Vec<f64>,
}

impl HProfile {
    pub fn sample(shape: HShape, ts: &[f64]) -> Self {
        let (h, hprime) = ts.iter().map(|&t| shape.eval(t)).unzip();
        HProfile {
            name: shape.name(),
            ts: ts.to_vec(),
            h,
            hprime,
        }
    }

    /// User-supplied table; `h` must be positive.
    pub fn tabulated(name: &str, ts: Vec<f64>, h: Vec<f64>, hprime: Vec<f64>) -> Result<Self> {
        if h.len() != ts.len() || hprime.len() != ts.len() {
            return Err(Error::param("h", "table columns differ in length"));
        }
        if let Some(i) = h.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::param("h", format!("h({}) = {} is not positive", ts[i], h[i])));
        }
        Ok(HProfile {
            name: name.to_string(),
            ts,
            h,
            hprime,
        })
    }

    /// Power-law exponent of `h` fitted on the two smallest grid points;
    /// positive means `h(0⁺) = 0`.
    pub fn contact_exponent(&self) -> Option<f64> {
        if self.ts.len() < 2 {
            return None;
        }
        let (t0, t1) = (self.ts[0], self.ts[1]);
        Some((self.h[1] / self.h[0]).ln() / (t1 / t0).ln())
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.contact_exponent().is_some_and(|p| p > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let step = 1e-7;
        for shape in [
            HShape::TSquared,
            HShape::SinSquared,
            HShape::SinPower(0.5),
            HShape::TPower(0.3),
        ] {
            for t in [0.01, 0.2, 0.4] {
                let fd = (shape.eval(t + step).0 - shape.eval(t - step).0) / (2.0 * step);
                let d = shape.eval(t).1;
                assert!((fd - d).abs() <= 1e-6 * d.abs(), "{shape:?} at {t}");
            }
        }
    }

    #[test]
    fn contact_exponent_recovers_power() {
        let p = HProfile::sample(HShape::SinPower(0.5), &super::super::dyadic_ts(10));
        assert!((p.contact_exponent().unwrap() - 0.5).abs() < 1e-3);
        assert!(p.vanishes_at_zero());
    }

    #[test]
    fn tabulated_rejects_nonpositive() {
        assert!(HProfile::tabulated("x", vec![0.1], vec![0.0], vec![1.0]).is_err());
    }
}
