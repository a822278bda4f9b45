//! Cross-oracle check suite: every closed form against an independent route.

use std::fmt;

use serde::Serialize;

use crate::model::ModelParams;
use crate::partial::{
    conditional_dist, lr_order_check, stationary_law, t1_cond, t1_cond_direct, t_cond,
    t_cond_direct, Node, Relation,
};
use crate::sim::solve_steady_state;
use crate::sojourn::{build_table_with, delta1_t2_row0, TableOptions};

pub const RATE_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const LAMBDA_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const RATIO_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];

#[derive(Clone, Copy, Debug, Default)]
pub struct SuiteOptions {
    /// Threshold and grid sizes capped at 10.
    pub quick: bool,
    /// Corrupts one comparison so the suite must fail.
    pub inject_fault: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<28} max_error={:<10.3e} tol={:.0e} cases={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.tolerance,
            self.cases
        )
    }
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    max_error: f64,
    cases: usize,
    failed: bool,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            max_error: 0.0,
            cases: 0,
            failed: false,
        }
    }

    fn record(&mut self, error: f64) {
        self.cases += 1;
        if error.is_nan() || error > self.tolerance {
            self.failed = true;
        }
        if error > self.max_error || error.is_nan() {
            self.max_error = error;
        }
    }

    fn fail(&mut self) {
        self.cases += 1;
        self.failed = true;
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            passed: !self.failed,
            max_error: self.max_error,
            tolerance: self.tolerance,
            cases: self.cases,
        }
    }
}

fn rate_pairs() -> impl Iterator<Item = (f64, f64)> {
    RATE_GRID
        .iter()
        .flat_map(|&a| RATE_GRID.iter().map(move |&b| (a, b)))
}

fn no_verify() -> TableOptions {
    TableOptions {
        verify: false,
        ..TableOptions::default()
    }
}

pub fn run_suite(opts: SuiteOptions) -> Vec<CheckOutcome> {
    let max_k = if opts.quick { 10 } else { 30 };
    let n_max = if opts.quick { 10 } else { 40 };
    let max_k_cond = if opts.quick { 10 } else { 60 };
    let max_k_lr = if opts.quick { 10 } else { 40 };
    let sign = if opts.inject_fault { -1.0 } else { 1.0 };
    let mut out = Vec::new();

    let mut check = Tracker::new("product_form_vs_linear_solve", 1e-10);
    for &lambda in &LAMBDA_GRID {
        for (mu1, mu2) in rate_pairs() {
            let p = ModelParams::new(lambda, mu1, mu2, 1.0, 1.0, 1.0);
            for k in 0..=max_k {
                match (stationary_law(&p, k), solve_steady_state(&p, k)) {
                    (Ok(a), Ok(b)) => check.record(a.max_abs_diff(&b)),
                    _ => check.fail(),
                }
            }
        }
    }
    out.push(check.finish());

    let mut check = Tracker::new("recursion_dual_path", 1e-10);
    for &ratio in &RATIO_GRID {
        match build_table_with(ratio, 1.0, n_max, &no_verify()) {
            Ok(t) => {
                check.record(t.max_dual_path_error().0);
                check.record(t.max_decomposition_error().0);
            }
            Err(_) => check.fail(),
        }
    }
    out.push(check.finish());

    let mut check = Tracker::new("delta1_t2_closed_form", 1e-12);
    for &ratio in &RATIO_GRID {
        let Ok(t) = build_table_with(ratio, 1.0, n_max, &no_verify()) else {
            check.fail();
            continue;
        };
        for m in 0..n_max {
            let diff = t.t2(1, m) - t.t2(0, m);
            check.record((sign * delta1_t2_row0(ratio, 1.0, m) - diff).abs());
        }
    }
    out.push(check.finish());

    let mut check = Tracker::new("t1_closed_vs_direct_sum", 1e-11);
    for (mu1, mu2) in rate_pairs() {
        for k in 0..=max_k_cond {
            check.record((t1_cond(mu1, mu2, k) - t1_cond_direct(mu1, mu2, k)).abs());
        }
    }
    out.push(check.finish());

    let mut check = Tracker::new("t_cond_dual_path", 1e-10);
    for (mu1, mu2) in rate_pairs() {
        let Ok(t) = build_table_with(mu1, mu2, max_k_cond + 1, &no_verify()) else {
            check.fail();
            continue;
        };
        for k in 0..=max_k_cond {
            match (t_cond(&t, k), t_cond_direct(&t, k)) {
                (Ok(a), Ok(b)) => check.record((a - b).abs()),
                _ => check.fail(),
            }
        }
    }
    out.push(check.finish());

    let mut check = Tracker::new("conditional_k_independence", 1e-12);
    for &lambda in &LAMBDA_GRID {
        for (mu1, mu2) in rate_pairs() {
            let p = ModelParams::new(lambda, mu1, mu2, 1.0, 1.0, 1.0);
            for k in 0..=max_k.min(20) {
                let want = conditional_dist(mu1, mu2, k, Node::First);
                for big_k in k..=k + 10 {
                    let Ok(law) = stationary_law(&p, big_k) else {
                        check.fail();
                        continue;
                    };
                    let got = law.conditional(k, Node::First).expect("k <= K");
                    let err = want
                        .weights
                        .iter()
                        .zip(&got.weights)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    check.record(err);
                }
            }
        }
    }
    out.push(check.finish());

    let mut check = Tracker::new("likelihood_ratio_order", 1e-12);
    for (mu1, mu2) in rate_pairs() {
        for node in [Node::First, Node::Second] {
            for k in 0..=max_k_lr {
                let report = lr_order_check(mu1, mu2, k, node);
                for c in &report.comparisons {
                    if c.n < k {
                        let scale = c.lhs.abs().max(c.rhs.abs());
                        let rel = if scale > 0.0 {
                            (c.lhs - c.rhs).abs() / scale
                        } else {
                            0.0
                        };
                        check.record(rel);
                    } else if c.relation == Relation::Strict {
                        check.record(0.0);
                    } else {
                        check.fail();
                    }
                }
            }
        }
    }
    out.push(check.finish());

    out
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let outcomes = run_suite(SuiteOptions {
            quick: true,
            inject_fault: false,
        });
        for o in &outcomes {
            assert!(o.passed, "{o}");
            assert!(o.cases > 0);
        }
    }

    #[test]
    fn injected_fault_fails() {
        let outcomes = run_suite(SuiteOptions {
            quick: true,
            inject_fault: true,
        });
        assert!(!all_passed(&outcomes));
        let failing: Vec<_> = outcomes.iter().filter(|o| !o.passed).collect();
        assert_eq!(failing.len(), 1);
        assert_eq!(failing[0].name, "delta1_t2_closed_form");
    }
}
