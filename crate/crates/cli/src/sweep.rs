//! Figure sweeps: exact `I_N` against the model bound over a parameter grid.

use std::fmt::Write as _;

use leggett::crypto::{is_violation, leggett_l_analytic, weak_lower_bound};
use leggett::qcorr::quantum_chained_in;
use leggett::Result;
use rayon::prelude::*;
use serde::Serialize;

use crate::format::{round12, fmt12};

pub const CSV_HEADER: &str = "d,N,eta,i_n,bound,l_analytic,violated";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub eta: f64,
    pub i_n: f64,
    pub bound: f64,
    pub l_analytic: f64,
    pub violated: bool,
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub etas: Vec<f64>,
    pub ns: Vec<usize>,
}

impl SweepConfig {
    pub fn figure(fig: u8) -> SweepConfig {
        match fig {
            2 => SweepConfig {
                dims: vec![3],
                etas: vec![1.0],
                ns: (2..=30).collect(),
            },
            _ => SweepConfig {
                dims: (2..=8).collect(),
                etas: vec![0.5, 0.7, 0.9, 1.0],
                ns: (2..=500).collect(),
            },
        }
    }
}

/// Rows sorted by `(d, η, N)`. `I_N` does not depend on `η`, so it is
/// computed once per `(d, N)`, in parallel; the output order never depends
/// on completion order.
pub fn run(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut dims = config.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut etas = config.etas.clone();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    let mut ns = config.ns.clone();
    ns.sort_unstable();
    ns.dedup();

    let grid: Vec<(usize, usize)> = dims.iter().flat_map(|&d| ns.iter().map(move |&n| (d, n))).collect();
    let all = grid
        .par_iter()
        .map(|&(d, n)| quantum_chained_in(d, n))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(dims.len() * etas.len() * ns.len());
    for (&d, values) in dims.iter().zip(all.chunks(ns.len().max(1))) {
        for &eta in &etas {
            let bound = weak_lower_bound(d, eta)?;
            let l_analytic = leggett_l_analytic(d, eta)?.value;
            for (&n, &i_n) in ns.iter().zip(values) {
                rows.push(SweepRow {
                    d,
                    n,
                    eta,
                    i_n,
                    bound,
                    l_analytic,
                    violated: is_violation(i_n, bound),
                });
            }
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.d,
            r.n,
            fmt12(r.eta),
            fmt12(r.i_n),
            fmt12(r.bound),
            fmt12(r.l_analytic),
            r.violated
        )
        .expect("writing to a String");
    }
    out
}

pub fn to_json(rows: &[SweepRow]) -> String {
    let rounded: Vec<SweepRow> = rows
        .iter()
        .map(|r| SweepRow {
            eta: round12(r.eta),
            i_n: round12(r.i_n),
            bound: round12(r.bound),
            l_analytic: round12(r.l_analytic),
            ..r.clone()
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&rounded).expect("rows serialize");
    out.push('\n');
    out
}

/// First violated `N` for every `(d, η)` present, in row order.
pub fn first_violations(rows: &[SweepRow]) -> Vec<(usize, f64, Option<usize>)> {
    let mut out: Vec<(usize, f64, Option<usize>)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(last) if last.0 == r.d && last.1 == r.eta => {
                if last.2.is_none() && r.violated {
                    last.2 = Some(r.n);
                }
            }
            _ => out.push((r.d, r.eta, r.violated.then_some(r.n))),
        }
    }
    out
}
