//! Cartesian sweeps: `[sweep] section.key = v1, v2, ...`, first key
//! slowest. Cells run in parallel; rows come back in grid order.

use rayon::prelude::*;

use rittlab::output::Table;

use crate::commands::{self, Command};
use crate::config::Config;
use crate::error::{config_err, CliResult};

pub struct Axis {
    pub section: String,
    pub key: String,
    pub values: Vec<String>,
}

pub fn axes(cfg: &Config) -> CliResult<(Command, Vec<Axis>)> {
    let command = Command::parse(
        cfg.get("sweep", "command")
            .ok_or_else(|| config_err("[sweep] needs `command`"))?,
    )?;
    if command == Command::Sweep {
        return Err(config_err("[sweep] command cannot be sweep"));
    }
    let axes = cfg
        .entries("sweep")
        .iter()
        .filter(|(k, _)| k != "command")
        .map(|(k, v)| {
            let (section, key) = k.split_once('.').expect("validated on parse");
            let values: Vec<String> = v
                .split(',')
                .map(|x| x.trim().to_string())
                .filter(|x| !x.is_empty())
                .collect();
            if values.is_empty() {
                return Err(config_err(format!("[sweep] {k} lists no values")));
            }
            Ok(Axis {
                section: section.into(),
                key: key.into(),
                values,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((command, axes))
}

/// Value indices of cell `i`, first axis slowest.
fn cell(axes: &[Axis], mut i: usize) -> Vec<usize> {
    let mut idx = vec![0; axes.len()];
    for (j, a) in axes.iter().enumerate().rev() {
        idx[j] = i % a.values.len();
        i /= a.values.len();
    }
    idx
}

pub fn run(cfg: &Config) -> CliResult<Table> {
    let (command, axes) = axes(cfg)?;
    let cells: usize = axes.iter().map(|a| a.values.len()).product();
    let results: Vec<(Vec<String>, CliResult<Vec<(String, String)>>)> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let idx = cell(&axes, i);
            let values: Vec<String> = axes.iter().zip(&idx).map(|(a, &j)| a.values[j].clone()).collect();
            let outcome = (|| {
                let mut c = cfg.clone();
                for (a, v) in axes.iter().zip(&values) {
                    c.set(&a.section, &a.key, v)?;
                }
                commands::run(command, &c).map(|o| o.summary)
            })();
            (values, outcome)
        })
        .collect();

    let summary_cols: Vec<String> = results
        .iter()
        .find_map(|(_, r)| r.as_ref().ok())
        .map(|s| s.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut cols: Vec<String> = axes.iter().map(|a| format!("{}.{}", a.section, a.key)).collect();
    cols.push("status".into());
    cols.extend(summary_cols.iter().cloned());
    let mut table = Table {
        columns: cols,
        rows: Vec::new(),
    };
    for (values, result) in results {
        let mut row = values;
        match result {
            Ok(summary) => {
                row.push("ok".into());
                row.extend(summary_cols.iter().map(|c| {
                    summary
                        .iter()
                        .find(|(k, _)| k == c)
                        .map(|(_, v)| v.clone())
                        .unwrap_or_default()
                }));
            }
            Err(e) => {
                row.push(format!("error_{}", e.kind()));
                row.extend(summary_cols.iter().map(|_| String::new()));
            }
        }
        table.rows.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_first_axis_slowest() {
        let cfg = Config::parse("[sweep]\ncommand = ritt\noperator.n_max = 4, 8\nmeasure.alpha = 0.3, 0.5, 0.7\n").unwrap();
        let (_, axes) = axes(&cfg).unwrap();
        assert_eq!(cell(&axes, 0), vec![0, 0]);
        assert_eq!(cell(&axes, 1), vec![0, 1]);
        assert_eq!(cell(&axes, 3), vec![1, 0]);
        assert_eq!(cell(&axes, 5), vec![1, 2]);
    }
}
