//! One function per subcommand. Each returns its CSV tables and a
//! single summary row; writing is left to the caller.

use rittlab::czdecomp::{cz_decompose, ergodic_maximal, verify_cz, weak11_profile_of};
use rittlab::lemmalab::{
    envelope_check, quad_abcd, quad_blocks, Estimate, KernelFamily, Weights, DEFAULT_LEVELS, DEFAULT_N_MAX,
};
use rittlab::output::{float, Table};
use rittlab::spectral::{check_ba, check_ba1_ba2, dungey_check, search_h, ConditionReport, HProfile, HShape, SpectralGrid};
use rittlab::sqfun::{max_weighted_orbit, q_function, QSpec};
use rittlab::varosc::{orbit_variation, DEFAULT_DP_BUDGET};
use rittlab::zmeasure::ritt_constant;

use crate::config::Config;
use crate::error::{config_err, CliResult};
use crate::setup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Atoms of the configured measure
    Measure,
    /// Spectral regularity conditions on a dyadic grid
    CheckBa,
    /// n ‖μ^n * (δ0 - μ)‖₁ for n up to n_max
    Ritt,
    /// Square function Q_{α,s,r} f
    Sqfn,
    /// Pointwise s-variation (or block oscillation) of the weighted orbit
    Var,
    /// Calderón-Zygmund decomposition with invariant checks
    Cz,
    /// Weak-(1,1) level-set profile of an operator
    Weak11,
    /// Quadratures and envelope estimates for kernel families
    Lemmalab,
    /// Summary rows over a grid of config values
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Measure => "measure",
            Command::CheckBa => "check-ba",
            Command::Ritt => "ritt",
            Command::Sqfn => "sqfn",
            Command::Var => "var",
            Command::Cz => "cz",
            Command::Weak11 => "weak11",
            Command::Lemmalab => "lemmalab",
            Command::Sweep => "sweep",
        }
    }

    pub fn parse(name: &str) -> CliResult<Self> {
        ALL.iter()
            .copied()
            .find(|c| c.name() == name)
            .ok_or_else(|| config_err(format!("unknown command {name:?}")))
    }
}

const ALL: [Command; 9] = [
    Command::Measure,
    Command::CheckBa,
    Command::Ritt,
    Command::Sqfn,
    Command::Var,
    Command::Cz,
    Command::Weak11,
    Command::Lemmalab,
    Command::Sweep,
];

pub struct Artifact {
    /// File stem.
    pub name: &'static str,
    pub table: Table,
}

#[derive(Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    fn artifact(&mut self, name: &'static str, table: Table) {
        self.artifacts.push(Artifact { name, table });
    }

    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn summary_table(&self) -> Table {
        let cols: Vec<&str> = self.summary.iter().map(|(k, _)| k.as_str()).collect();
        let mut t = Table::new(&cols);
        t.push(self.summary.iter().map(|(_, v)| v.clone()).collect());
        t
    }
}

/// Runs one non-sweep command.
pub fn run(cmd: Command, cfg: &Config) -> CliResult<Outcome> {
    match cmd {
        Command::Measure => measure(cfg),
        Command::CheckBa => check_ba_cmd(cfg),
        Command::Ritt => ritt(cfg),
        Command::Sqfn => sqfn(cfg),
        Command::Var => var(cfg),
        Command::Cz => cz(cfg),
        Command::Weak11 => weak11(cfg),
        Command::Lemmalab => lemmalab(cfg),
        Command::Sweep => Err(config_err("sweep cannot run a sweep")),
    }
}

fn qspec(cfg: &Config) -> CliResult<QSpec> {
    let mut spec = QSpec::new(
        cfg.parse_or("operator", "alpha", 1.0)?,
        cfg.parse_or("operator", "s", 2.0)?,
        cfg.parse_or("operator", "r", 1.0)?,
        cfg.parse_or("operator", "n_max", 512)?,
    );
    spec.frac_k = cfg.parse_or("operator", "frac_k", spec.frac_k)?;
    Ok(spec)
}

fn measure(cfg: &Config) -> CliResult<Outcome> {
    let m = setup::measure(cfg)?;
    let atoms = m.measure.measure().atoms();
    let mut t = Table::new(&["site", "weight"]);
    for (site, w) in atoms {
        t.push(vec![site.to_string(), float(*w)]);
    }
    let mut out = Outcome::default();
    out.artifact("measure", t);
    out.put("symbol", m.symbol.name());
    out.put("atoms", atoms.len());
    let (lo, hi) = m.measure.measure().support().unwrap_or((0, 0));
    out.put("support_min", lo);
    out.put("support_max", hi);
    out.put("mass_defect", float(m.measure.mass_defect()));
    out.put("nonnegative_support", m.measure.supported_on_nonnegative());
    Ok(out)
}

fn append(t: &mut Table, test: &str, r: &ConditionReport) {
    for row in r.to_table().rows {
        let mut full = vec![test.to_string()];
        full.extend(row);
        t.push(full);
    }
}

fn check_ba_cmd(cfg: &Config) -> CliResult<Outcome> {
    let m = setup::measure(cfg)?;
    let levels = cfg.parse_or("spectral", "levels", DEFAULT_LEVELS)?;
    let h_alpha = cfg.parse_or("spectral", "h_alpha", m.nu.unwrap_or(2.0))?;
    let grid = SpectralGrid::dyadic(&m.symbol, levels)?;
    let mut t = Table::new(&["test", "condition", "holds", "best_constant", "worst_t"]);
    let mut out = Outcome::default();

    let ba = check_ba(&grid);
    append(&mut t, "ba", &ba);
    out.put("ba_holds", ba.holds());

    let h = cfg.str_or("spectral", "h", "search");
    let found: Option<(HShape, ConditionReport)> = if h == "search" {
        search_h(&m.symbol, levels, &HShape::library(h_alpha), true)?
    } else {
        let shape = setup::h_shape(h, h_alpha)?;
        let report = check_ba1_ba2(&grid, &HProfile::sample(shape, &grid.ts), true)?;
        Some((shape, report))
    };
    match &found {
        Some((shape, report)) => {
            append(&mut t, "ba1_ba2", report);
            out.put("h", shape.name());
            out.put("ba1_ba2_holds", report.holds());
        }
        None => {
            out.put("h", "none");
            out.put("ba1_ba2_holds", false);
        }
    }

    let dungey_alpha = match cfg.get("spectral", "dungey_alpha") {
        Some(_) => Some(cfg.parse_or("spectral", "dungey_alpha", 0.0)?),
        None => m.nu,
    };
    match dungey_alpha {
        Some(alpha) => {
            let d = dungey_check(&grid, alpha)?;
            append(&mut t, "dungey", &d);
            out.put("dungey_holds", d.holds());
        }
        None => out.put("dungey_holds", "na"),
    }
    out.artifact("conditions", t);
    Ok(out)
}

fn ritt(cfg: &Config) -> CliResult<Outcome> {
    let m = setup::measure(cfg)?;
    let n_max = cfg.parse_or("operator", "n_max", 512usize)?;
    let tr = ritt_constant(&m.measure, n_max)?;
    let mut t = Table::new(&["n", "value", "running_max"]);
    for (i, (v, mx)) in tr.values.iter().zip(&tr.running_max).enumerate() {
        t.push(vec![(i + 1).to_string(), float(*v), float(*mx)]);
    }
    let mut out = Outcome::default();
    out.artifact("ritt_trace", t);
    out.put("max", float(tr.max()));
    out.put("final", float(tr.value(n_max)));
    out.put("last_octave_growth", float(tr.last_octave_growth()));
    out.put("method", format!("{:?}", tr.method).to_lowercase());
    Ok(out)
}

fn sqfn(cfg: &Config) -> CliResult<Outcome> {
    let m = setup::measure(cfg)?;
    let f = setup::signal(cfg)?;
    let spec = qspec(cfg)?;
    let q = q_function(&m.symbol, &spec, &f)?;
    let mut out = Outcome::default();
    out.put("q_l1", float(q.l1_norm()));
    out.put("q_sup", float(q.q.sup_norm()));
    out.put("f_l1", float(f.l1_norm()));
    out.put("tail_diagnostic", float(q.tail_diagnostic));
    out.put("tail_flags", q.tail_flags.len());
    out.put("bounded_regime", spec.in_bounded_regime());
    out.artifact("q_trace", q.to_table());
    Ok(out)
}

fn var(cfg: &Config) -> CliResult<Outcome> {
    let m = setup::measure(cfg)?;
    let f = setup::signal(cfg)?;
    let beta = cfg.parse_or("operator", "beta", 0.0)?;
    let r = cfg.parse_or("operator", "r", 1.0)?;
    let s = cfg.parse_or("operator", "s", 2.0)?;
    let n_max = cfg.parse_or("operator", "n_max", 256usize)?;
    let frac_k = cfg.parse_or("operator", "frac_k", 4096usize)?;
    let budget = cfg.parse_or("variation", "budget", DEFAULT_DP_BUDGET)?;
    let blocks = setup::blocks(cfg, "variation", n_max as u64)?;
    let v = orbit_variation(&m.symbol, beta, r, s, &f, n_max, blocks.as_ref(), frac_k, budget)?;
    let mut t = Table::new(&["x", "variation"]);
    for (i, x) in v.values.values.iter().enumerate() {
        t.push(vec![v.values.site(i).to_string(), float(*x)]);
    }
    let mut out = Outcome::default();
    out.artifact("variation", t);
    out.put("l1_norm", float(v.l1_norm));
    out.put("sup", float(v.values.sup_norm()));
    out.put("blocks", blocks.as_ref().map_or(0, |b| b.len()));
    for (name, margin) in &v.thresholds {
        out.put(format!("threshold_{name}"), float(*margin));
    }
    Ok(out)
}

fn cz(cfg: &Config) -> CliResult<Outcome> {
    let f = setup::signal(cfg)?;
    if !f.is_cyclic() {
        return Err(config_err("cz needs [model] domain = cyclic"));
    }
    let norm = f.l1_norm();
    let lambdas = if cfg.entries("lambda").is_empty() {
        vec![4.0 * norm]
    } else {
        setup::lambdas(cfg, norm)?
    };
    let mut checks = Table::new(&["lambda", "property", "holds", "observed", "bound"]);
    let mut parts = Table::new(&["lambda", "base", "start", "len"]);
    let (mut all_hold, mut n_parts, mut worst_measure) = (true, 0, 0.0f64);
    for &lambda in &lambdas {
        let d = cz_decompose(&f, lambda)?;
        let r = verify_cz(&d, &f)?;
        all_hold &= r.all_hold();
        n_parts += d.parts.len();
        worst_measure = worst_measure.max(d.bad_set_measure() * lambda / norm.max(f64::MIN_POSITIVE));
        for row in r.to_table().rows {
            let mut full = vec![float(lambda)];
            full.extend(row);
            checks.push(full);
        }
        for p in &d.parts {
            parts.push(vec![float(lambda), p.base.to_string(), p.start.to_string(), p.len.to_string()]);
        }
    }
    let mut out = Outcome::default();
    out.artifact("cz_checks", checks);
    out.artifact("cz_parts", parts);
    out.put("lambdas", lambdas.len());
    out.put("parts", n_parts);
    out.put("all_hold", all_hold);
    out.put("max_lambda_measure_over_l1", float(worst_measure));
    Ok(out)
}

fn weak11(cfg: &Config) -> CliResult<Outcome> {
    let m = setup::measure(cfg)?;
    let f = setup::signal(cfg)?;
    let op = cfg.str_or("weak11", "operator", "sqfn");
    let h = match op {
        "sqfn" => q_function(&m.symbol, &qspec(cfg)?, &f)?.q,
        "max_orbit" => {
            let spec = qspec(cfg)?;
            let beta = cfg.parse_or("operator", "beta", 0.0)?;
            max_weighted_orbit(&m.symbol, beta, spec.r, &f, spec.n_max, spec.frac_k)?.sup
        }
        "ergodic_max" => ergodic_maximal(&f)?,
        other => return Err(config_err(format!("unknown weak11 operator {other:?}"))),
    };
    let profile = weak11_profile_of(&h, f.l1_norm(), &setup::lambdas(cfg, f.l1_norm())?);
    let mut out = Outcome::default();
    out.put("operator", op);
    out.put("sup_constant", float(profile.sup_constant));
    out.artifact("weak11", profile.to_table());
    Ok(out)
}

fn family(cfg: &Config, n_max: u64) -> CliResult<KernelFamily> {
    let m = setup::measure(cfg)?;
    let r = cfg.parse_or("operator", "r", 1.0)?;
    let beta = cfg.parse_or("operator", "beta", 0.0)?;
    let blocks = || -> CliResult<_> {
        let mut c = cfg.clone();
        if c.get("lemmalab", "blocks").is_none() {
            c.set("lemmalab", "blocks", "gap")?;
        }
        Ok(setup::blocks(&c, "lemmalab", n_max)?.expect("blocks set"))
    };
    Ok(match cfg.str_or("lemmalab", "family", "q") {
        "q" => KernelFamily::q(
            m.symbol,
            cfg.parse_or("operator", "alpha", 1.0)?,
            cfg.parse_or("operator", "s", 2.0)?,
            r,
        )?,
        "block_diff" => KernelFamily::block_diff(m.symbol, beta, r, blocks()?)?,
        "block_max" => KernelFamily::block_max(m.symbol, beta, r, blocks()?)?,
        other => return Err(config_err(format!("unknown family {other:?}"))),
    })
}

fn lemmalab(cfg: &Config) -> CliResult<Outcome> {
    let n_max = cfg.parse_or("lemmalab", "n_max", DEFAULT_N_MAX)?;
    let levels = cfg.parse_or("lemmalab", "levels", DEFAULT_LEVELS)?;
    let s = cfg.parse_or("operator", "s", 2.0)?;
    let fam = family(cfg, n_max)?;
    let mut out = Outcome::default();
    match cfg.str_or("lemmalab", "mode", "quad") {
        "quad" => {
            let weights = Weights::parse(cfg.str_or("lemmalab", "weights", "standard"))?;
            let res = if fam.blocks().is_some() {
                quad_blocks(&fam, s, n_max, levels, weights)?
            } else {
                quad_abcd(&fam, s, n_max, levels, weights)?
            };
            for q in &res.quantities {
                out.put(format!("{}_value", q.name), float(q.value()));
                out.put(format!("{}_verdict", q.name), q.verdict.as_str());
            }
            out.put("max_relative_slack", float(res.max_relative_slack));
            out.artifact("quad", res.to_table());
        }
        "envelope" => {
            let m_nu = setup::measure(cfg)?.nu;
            let shape = setup::h_shape(
                cfg.str_or("lemmalab", "h", "sin_power"),
                cfg.parse_or("lemmalab", "h_alpha", m_nu.unwrap_or(2.0))?,
            )?;
            let est = Estimate::parse(
                cfg.str_or("lemmalab", "estimate", "eqII2"),
                cfg.parse_or("lemmalab", "gamma", 1.0)?,
            )?;
            let rep = envelope_check(&fam, shape, est, s, n_max, levels)?;
            out.put("estimate", rep.estimate);
            out.put("empirical_c", float(rep.empirical_c));
            out.put("refined_c", float(rep.refined_c));
            out.put("holds", rep.holds);
            out.artifact("envelope", rep.to_table());
        }
        other => return Err(config_err(format!("unknown lemmalab mode {other:?}"))),
    }
    Ok(out)
}
