//! Text serialization: one `site<TAB>weight` line per atom, ascending
//! sites, `#` comments, weights written with 17 significant digits.

use std::fmt::Write as _;

use super::{Measure, SignedMeasure};
use crate::error::{Error, Result};

impl SignedMeasure {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (site, w) in self.atoms() {
            let _ = writeln!(out, "{site}\t{w:.16e}");
        }
        out
    }

    /// Parses the text format. Sites must be strictly ascending.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut last: Option<i64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t').map(str::trim).filter(|p| !p.is_empty());
            let (Some(s), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected `site<TAB>weight`, got {raw:?}"),
                });
            };
            let site: i64 = s.parse().map_err(|e| Error::Parse {
                line: line_no,
                reason: format!("bad site {s:?}: {e}"),
            })?;
            let weight: f64 = w.parse().map_err(|e| Error::Parse {
                line: line_no,
                reason: format!("bad weight {w:?}: {e}"),
            })?;
            if !weight.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "weight is not finite".into(),
                });
            }
            if last.is_some_and(|l| site <= l) {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("site {site} is not strictly ascending"),
                });
            }
            last = Some(site);
            atoms.push((site, weight));
        }
        Ok(Measure::new(atoms))
    }
}
