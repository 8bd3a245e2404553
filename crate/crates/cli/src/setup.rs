//! Builds core inputs from a config.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rittlab::spectral::HShape;
use rittlab::varosc::{gap_sequence, interpolated_dyadic, BlockSequence};
use rittlab::zmeasure::{builtin, nu_alpha, ProbabilityMeasure};
use rittlab::{Signal, SignedMeasure, Symbol};

use crate::config::{parse_list, Config};
use crate::error::{config_err, CliResult};

pub struct MeasureSetup {
    /// Finite measure (truncated for `ν_α`).
    pub measure: ProbabilityMeasure,
    /// Symbol used by spectral and orbit code; the closed form for `ν_α`
    /// unless `closed_form = false`.
    pub symbol: Symbol,
    /// `α` of `ν_α`, when that is the measure.
    pub nu: Option<f64>,
}

pub fn measure(cfg: &Config) -> CliResult<MeasureSetup> {
    let kind = cfg.str_or("measure", "kind", "nu_alpha");
    let finite = |m: ProbabilityMeasure| MeasureSetup {
        symbol: (&m).into(),
        measure: m,
        nu: None,
    };
    Ok(match kind {
        "nu_alpha" => {
            let alpha = cfg.parse_or("measure", "alpha", 0.5)?;
            let k = cfg.parse_or("measure", "k", 4096usize)?;
            let renormalize = cfg.parse_or("measure", "renormalize", true)?;
            let measure = nu_alpha(alpha, k, renormalize)?.into_probability()?;
            let symbol = if cfg.parse_or("measure", "closed_form", true)? {
                Symbol::nu_alpha(alpha)?
            } else {
                (&measure).into()
            };
            MeasureSetup {
                measure,
                symbol,
                nu: Some(alpha),
            }
        }
        "symmetric_walk" => finite(builtin::symmetric_walk()),
        "lazy_walk" => finite(builtin::lazy_walk()),
        "lazy_shift" => finite(builtin::lazy_shift()),
        "atoms" => {
            let text = cfg
                .get("measure", "atoms")
                .ok_or_else(|| config_err("[measure] kind = atoms needs `atoms`"))?;
            finite(ProbabilityMeasure::from_atoms(parse_atoms(text)?)?)
        }
        "file" => {
            let path = cfg
                .get("measure", "path")
                .ok_or_else(|| config_err("[measure] kind = file needs `path`"))?;
            let text = std::fs::read_to_string(path)?;
            finite(ProbabilityMeasure::new(SignedMeasure::from_text(&text)?)?)
        }
        other => return Err(config_err(format!("unknown measure kind {other:?}"))),
    })
}

/// `"site weight, site weight, ..."`
pub fn parse_atoms(text: &str) -> CliResult<Vec<(i64, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(|a| {
            let bad = || config_err(format!("[measure] atoms: {a:?} is not `site weight`"));
            let mut it = a.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(s), Some(w), None) => Ok((s.parse().map_err(|_| bad())?, w.parse().map_err(|_| bad())?)),
                _ => Err(bad()),
            }
        })
        .collect()
}

pub fn is_cyclic(cfg: &Config) -> CliResult<bool> {
    match cfg.str_or("model", "domain", "cyclic") {
        "cyclic" => Ok(true),
        "window" => Ok(false),
        other => Err(config_err(format!("unknown domain {other:?}"))),
    }
}

pub fn signal(cfg: &Config) -> CliResult<Signal> {
    let cyclic = is_cyclic(cfg)?;
    let n = cfg.parse_or("model", "n", 256usize)?;
    let start = cfg.parse_or("model", "start", 0i64)?;
    let wrap = |values: Vec<f64>| -> CliResult<Signal> {
        Ok(if cyclic {
            Signal::cyclic(values)?
        } else {
            Signal::window(start, values)
        })
    };
    match cfg.str_or("signal", "kind", "spike") {
        "spike" => {
            if cyclic {
                Ok(Signal::cyclic_spike(n, cfg.parse_or("signal", "at", 0usize)?)?)
            } else {
                Ok(Signal::spike(cfg.parse_or("signal", "at", 0i64)?))
            }
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.parse_or("signal", "seed", 0u64)?);
            wrap((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        }
        "file" => {
            let path = cfg
                .get("signal", "path")
                .ok_or_else(|| config_err("[signal] kind = file needs `path`"))?;
            let text = std::fs::read_to_string(path)?;
            let values = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .map(|v| v.parse().map_err(|_| config_err(format!("{path}: {v:?} is not a number"))))
                .collect::<CliResult<Vec<f64>>>()?;
            wrap(values)
        }
        other => Err(config_err(format!("unknown signal kind {other:?}"))),
    }
}

/// Explicit `values`, else `count` geometric points in `[min, max]`
/// given relative to `‖f‖₁`.
pub fn lambdas(cfg: &Config, f_norm: f64) -> CliResult<Vec<f64>> {
    if let Some(v) = cfg.list("lambda", "values")? {
        return Ok(v);
    }
    let min: f64 = cfg.parse_or("lambda", "min", 0.01)?;
    let max: f64 = cfg.parse_or("lambda", "max", 100.0)?;
    let count: usize = cfg.parse_or("lambda", "count", 41)?;
    if !(min > 0.0 && max >= min) || count == 0 {
        return Err(config_err("[lambda] needs 0 < min <= max and count >= 1"));
    }
    let step = if count > 1 { (max / min).ln() / (count - 1) as f64 } else { 0.0 };
    Ok((0..count)
        .map(|i| f_norm * min * (step * i as f64).exp())
        .collect())
}

pub fn h_shape(name: &str, alpha: f64) -> CliResult<HShape> {
    Ok(match name {
        "t_squared" => HShape::TSquared,
        "sin_squared" => HShape::SinSquared,
        "sin_power" => HShape::SinPower(alpha),
        "t_power" => HShape::TPower(alpha),
        other => return Err(config_err(format!("unknown h shape {other:?}"))),
    })
}

/// Block sequence from `section`: `blocks = none | gap | dyadic | list`.
pub fn blocks(cfg: &Config, section: &str, n_stop: u64) -> CliResult<Option<BlockSequence>> {
    let a = cfg.parse_or(section, "a", 0.5)?;
    Ok(match cfg.str_or(section, "blocks", "none") {
        "none" => None,
        "gap" => Some(gap_sequence(a, cfg.parse_or(section, "n_start", 1u64)?, n_stop)?),
        "dyadic" => {
            let k_max = cfg.parse_or(section, "k_max", 6u32)?;
            Some(interpolated_dyadic(a, k_max)?)
        }
        "list" => {
            let text = cfg
                .get(section, "indices")
                .ok_or_else(|| config_err(format!("[{section}] blocks = list needs `indices`")))?;
            Some(BlockSequence::new(parse_list(text, section, "indices")?)?.with_growth(a))
        }
        other => return Err(config_err(format!("unknown block kind {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_format() {
        assert_eq!(parse_atoms("-1 0.5, 1 0.5").unwrap(), vec![(-1, 0.5), (1, 0.5)]);
        assert!(parse_atoms("-1:0.5").is_err());
    }

    #[test]
    fn geometric_lambdas() {
        let cfg = Config::parse("[lambda]\nmin = 1\nmax = 4\ncount = 3\n").unwrap();
        let l = lambdas(&cfg, 2.0).unwrap();
        assert_eq!(l.len(), 3);
        assert!((l[1] - 4.0).abs() < 1e-12 && (l[2] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn random_signal_is_seeded() {
        let cfg = Config::parse("[signal]\nkind = random\nseed = 3\n[model]\nn = 16\n").unwrap();
        assert_eq!(signal(&cfg).unwrap(), signal(&cfg).unwrap());
    }
}
