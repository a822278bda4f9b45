//! Expected-profit profile `P(k) = R - C1 T1(k) - C2 T2(k)` and the
//! equilibrium threshold: the least `k` with `P(k) < 0`, or infinity when
//! profit never turns negative.
//!
//! The scan must terminate, so each outcome is only reported when it is
//! backed by something:
//!
//! * `Finite(K)` is the first negative entry of a scan that started at 0.
//! * `InfiniteCertified` needs `C2 = 0` and `mu1 > mu2`, where `P` is
//!   non-increasing with closed-form limit `R - C1/(mu1 - mu2)`.
//! * anything else that runs out of room is `UnresolvedAtCap`.
//!
//! Because every customer ahead must clear node 2 first, `T(k) >= (k+1)/mu2`
//! and so `P(k) <= R - min(C1, C2) (k+1)/mu2`. When both costs are positive
//! this bounds how far the scan has to go.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::partial::{t1_cond, t2_cond};
use crate::sojourn::{
    build_table_with, max_table_size, SojournTable, TableOptions, DEFAULT_OPS_BUDGET,
};

pub const DEFAULT_CAP: usize = 10_000;

/// Rows reported for an infinite threshold.
pub const INFINITE_PROFILE_LEN: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfitRow {
    pub k: usize,
    pub t1: f64,
    pub t2: f64,
    pub profit: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProfitProfile {
    pub rows: Vec<ProfitRow>,
}

impl ProfitProfile {
    pub fn profits(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.profit)
    }

    /// Number of switches between the non-negative and negative regimes.
    pub fn sign_changes(&self) -> usize {
        self.rows
            .windows(2)
            .filter(|w| (w[0].profit < 0.0) != (w[1].profit < 0.0))
            .count()
    }

    /// CSV with header `k,t1,t2,profit`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"k,t1,t2,profit\n")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.k, r.t1, r.t2, r.profit)?;
        }
        Ok(())
    }
}

pub fn profit(params: &ModelParams, table: &SojournTable, k: usize) -> Result<f64> {
    Ok(profit_row(params, table, k)?.profit)
}

fn profit_row(params: &ModelParams, table: &SojournTable, k: usize) -> Result<ProfitRow> {
    let t1 = t1_cond(table.mu1(), table.mu2(), k);
    let t2 = t2_cond(table, k)?;
    Ok(ProfitRow {
        k,
        t1,
        t2,
        profit: params.reward - params.cost1 * t1 - params.cost2 * t2,
    })
}

/// Sufficient conditions for a non-increasing profit profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub mu1_gt_mu2: bool,
    pub c1_ge_c2: bool,
    pub monotone: bool,
}

pub fn monotone_conditions(params: &ModelParams) -> ConditionReport {
    let mu1_gt_mu2 = params.mu1 > params.mu2;
    let c1_ge_c2 = params.cost1 >= params.cost2;
    ConditionReport {
        mu1_gt_mu2,
        c1_ge_c2,
        monotone: mu1_gt_mu2 || c1_ge_c2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Finite(usize),
    InfiniteCertified,
    /// No negative profit up to and including this `k`.
    UnresolvedAtCap(usize),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Finite(_) => "finite",
            Outcome::InfiniteCertified => "infinite",
            Outcome::UnresolvedAtCap(_) => "unresolved",
        }
    }

    pub fn threshold(&self) -> Option<usize> {
        match *self {
            Outcome::Finite(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdResult {
    pub outcome: Outcome,
    pub cap: usize,
    pub conditions: ConditionReport,
    /// `ceil(R mu2 / min(C1, C2)) + 1` when both costs are positive.
    pub certified_bound: Option<usize>,
    pub notes: Vec<String>,
    pub profile: ProfitProfile,
}

/// JSON form of a [`ThresholdResult`].
#[derive(Debug, Serialize)]
pub struct ThresholdDocument<'a> {
    pub outcome: &'static str,
    #[serde(rename = "K")]
    pub threshold: Option<usize>,
    pub cap: usize,
    pub monotone: bool,
    pub profile: &'a ProfitProfile,
    pub conditions: ConditionReport,
    pub notes: &'a [String],
}

impl ThresholdResult {
    pub fn document(&self) -> ThresholdDocument<'_> {
        ThresholdDocument {
            outcome: self.outcome.label(),
            threshold: self.outcome.threshold(),
            cap: self.cap,
            monotone: self.conditions.monotone,
            profile: &self.profile,
            conditions: self.conditions,
            notes: &self.notes,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ThresholdOptions {
    pub cap: usize,
    pub ops_budget: u128,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            ops_budget: DEFAULT_OPS_BUDGET,
        }
    }
}

/// Evaluates profit rows, growing the sojourn table on demand.
struct Scanner<'a> {
    params: &'a ModelParams,
    table: Option<SojournTable>,
    max_n: usize,
    ops_budget: u128,
}

impl<'a> Scanner<'a> {
    fn new(params: &'a ModelParams, ops_budget: u128) -> Self {
        let max_n = max_table_size(ops_budget);
        Self {
            params,
            table: None,
            max_n,
            ops_budget,
        }
    }

    fn row(&mut self, k: usize) -> Result<ProfitRow> {
        let needed = k + 1;
        let current = self.table.as_ref().map(|t| t.n_max());
        if current.is_none_or(|n| n < needed) {
            let grown = current
                .map_or(64, |n| 2 * n)
                .min(self.max_n)
                .max(needed);
            let opts = TableOptions {
                ops_budget: self.ops_budget,
                ..TableOptions::default()
            };
            self.table = Some(build_table_with(
                self.params.mu1,
                self.params.mu2,
                grown,
                &opts,
            )?);
        }
        profit_row(self.params, self.table.as_ref().expect("built above"), k)
    }
}

pub fn find_threshold(params: &ModelParams, cap: usize) -> Result<ThresholdResult> {
    find_threshold_with(
        params,
        &ThresholdOptions {
            cap,
            ..ThresholdOptions::default()
        },
    )
}

pub fn find_threshold_with(params: &ModelParams, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    if opts.cap < 1 {
        return Err(Error::Config("cap must be >= 1".into()));
    }
    let cap = opts.cap;
    let conditions = monotone_conditions(params);
    let mut notes = Vec::new();
    let mut scanner = Scanner::new(params, opts.ops_budget);
    let mut profile = ProfitProfile::default();

    let min_cost = params.cost1.min(params.cost2);
    let certified_bound = (min_cost > 0.0).then(|| {
        let b = (params.reward * params.mu2 / min_cost).ceil();
        if b < (usize::MAX / 2) as f64 {
            b as usize + 1
        } else {
            usize::MAX / 2
        }
    });

    if params.cost2 == 0.0 && params.mu1 > params.mu2 {
        let limit = params.reward - params.cost1 / (params.mu1 - params.mu2);
        if limit >= 0.0 {
            notes.push(format!(
                "profit is non-increasing with limit {limit} >= 0 (c2 = 0, mu1 > mu2)"
            ));
            for k in 0..=cap.min(INFINITE_PROFILE_LEN) {
                profile.rows.push(scanner.row(k)?);
            }
            return Ok(ThresholdResult {
                outcome: Outcome::InfiniteCertified,
                cap,
                conditions,
                certified_bound,
                notes,
                profile,
            });
        }
    }

    let scan_limit = certified_bound.map_or(cap, |b| b.min(cap));
    let mut last_scanned = None;
    for k in 0..=scan_limit {
        let row = match scanner.row(k) {
            Ok(row) => row,
            Err(Error::BudgetExceeded { n_max, .. }) => {
                notes.push(format!(
                    "scan stopped at k = {k}: a sojourn table of size {n_max} exceeds the operation budget"
                ));
                break;
            }
            Err(e) => return Err(e),
        };
        profile.rows.push(row);
        last_scanned = Some(k);
        if row.profit < 0.0 {
            return Ok(ThresholdResult {
                outcome: Outcome::Finite(k),
                cap,
                conditions,
                certified_bound,
                notes,
                profile,
            });
        }
    }

    if certified_bound.is_some_and(|b| b <= cap) && last_scanned == Some(scan_limit) {
        log::warn!("profit stayed non-negative through the certified bound {scan_limit}");
        notes.push(format!(
            "profit stayed non-negative through the certified bound k = {scan_limit}"
        ));
    }
    let reached = match last_scanned {
        Some(k) => k,
        None => {
            return Err(Error::Config(
                "operation budget too small to evaluate P(0)".into(),
            ))
        }
    };
    Ok(ThresholdResult {
        outcome: Outcome::UnresolvedAtCap(reached),
        cap,
        conditions,
        certified_bound,
        notes,
        profile,
    })
}
