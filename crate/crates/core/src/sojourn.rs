//! Full-information expected sojourn times.
//!
//! A tagged customer who is about to occupy position `n` of queue 1 while
//! `m` customers sit in queue 2 spends on average `T1(n,m) = n/mu1` at
//! node 1 and `T2(n,m)` at node 2. The table stores both together with
//! their sum `T(n,m)` on the triangle `n + m <= n_max`.
//!
//! `T2` is filled with the explicit geometric-sum recursion in `n`; the
//! total can additionally be computed from the first-step difference
//! equation on `T` so the two routes can be compared.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the estimated number of inner-loop operations.
pub const DEFAULT_OPS_BUDGET: u128 = 2_000_000_000;

/// Tolerance used when comparing the two fill routes.
pub const DUAL_PATH_TOL: f64 = 1e-10;

/// Slack allowed before a decrease counts as a monotonicity violation.
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct TableOptions {
    pub ops_budget: u128,
    /// Also fill `T` by the difference equation and fail on disagreement.
    pub verify: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            ops_budget: DEFAULT_OPS_BUDGET,
            verify: cfg!(debug_assertions),
        }
    }
}

#[inline]
fn tri_index(n: usize, m: usize) -> usize {
    let d = n + m;
    d * (d + 1) / 2 + n
}

fn tri_len(n_max: usize) -> usize {
    (n_max + 1) * (n_max + 2) / 2
}

/// Operation count of the geometric-sum fill, `sum over grid of m`.
pub fn fill_cost(n_max: usize) -> u128 {
    let n = n_max as u128;
    n * (n + 1) * (n + 2) / 6
}

/// Largest `n_max` whose fill fits in `ops_budget`.
pub fn max_table_size(ops_budget: u128) -> usize {
    let (mut lo, mut hi) = (0usize, 1usize << 24);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if fill_cost(mid) <= ops_budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Triangular arrays of `T1`, `T2` and `T` for `n + m <= n_max`.
#[derive(Clone, Debug)]
pub struct SojournTable {
    n_max: usize,
    mu1: f64,
    mu2: f64,
    t1: Vec<f64>,
    t2: Vec<f64>,
    t: Vec<f64>,
}

fn check_rates(mu1: f64, mu2: f64) -> Result<()> {
    for (field, v) in [("mu1", mu1), ("mu2", mu2)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter {
                field,
                reason: "must be a finite rate > 0".into(),
            });
        }
    }
    Ok(())
}

/// Builds the table with the default operation budget.
pub fn build_table(mu1: f64, mu2: f64, n_max: usize) -> Result<SojournTable> {
    build_table_with(mu1, mu2, n_max, &TableOptions::default())
}

pub fn build_table_with(
    mu1: f64,
    mu2: f64,
    n_max: usize,
    opts: &TableOptions,
) -> Result<SojournTable> {
    check_rates(mu1, mu2)?;
    let ops = fill_cost(n_max);
    if ops > opts.ops_budget {
        return Err(Error::BudgetExceeded {
            n_max,
            ops,
            budget: opts.ops_budget,
        });
    }

    let len = tri_len(n_max);
    let mut t1 = vec![0.0; len];
    let mut t2 = vec![0.0; len];

    let total = mu1 + mu2;
    let a = mu1 / total;
    let r = mu2 / total;
    let mut r_pow = Vec::with_capacity(n_max + 1);
    let mut w = 1.0;
    for _ in 0..=n_max {
        r_pow.push(w);
        w *= r;
    }

    for m in 0..=n_max {
        t2[tri_index(0, m)] = m as f64 / mu2;
    }
    for n in 1..=n_max {
        let t1_n = n as f64 / mu1;
        for m in 0..=(n_max - n) {
            t1[tri_index(n, m)] = t1_n;
            let mut acc = r_pow[m] * t2[tri_index(n - 1, 1)];
            let mut sum = 0.0;
            for (j, rj) in r_pow.iter().take(m).enumerate() {
                sum += rj * t2[tri_index(n - 1, m + 1 - j)];
            }
            acc += a * sum;
            t2[tri_index(n, m)] = acc;
        }
    }

    let t: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| x + y).collect();
    let table = SojournTable {
        n_max,
        mu1,
        mu2,
        t1,
        t2,
        t,
    };
    if opts.verify {
        table.verify_dual_path(DUAL_PATH_TOL)?;
    }
    Ok(table)
}

/// Fills `T(n,m)` directly from the first-step difference equation and its
/// boundary conditions. Returned in the same triangular layout as the table.
pub fn total_by_first_step(mu1: f64, mu2: f64, n_max: usize) -> Result<Vec<f64>> {
    check_rates(mu1, mu2)?;
    let total = mu1 + mu2;
    let hold = 1.0 / total;
    let a = mu1 / total;
    let b = mu2 / total;
    let mut t = vec![0.0; tri_len(n_max)];
    for d in 0..=n_max {
        t[tri_index(0, d)] = d as f64 / mu2;
        for n in 1..=d {
            let m = d - n;
            t[tri_index(n, m)] = if m == 0 {
                1.0 / mu1 + t[tri_index(n - 1, 1)]
            } else {
                hold + a * t[tri_index(n - 1, m + 1)] + b * t[tri_index(n, m - 1)]
            };
        }
    }
    Ok(t)
}

impl SojournTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    /// True if every `(n, m)` with `n + m <= diag` is stored.
    pub fn covers(&self, diag: usize) -> bool {
        diag <= self.n_max
    }

    #[inline]
    fn at(&self, data: &[f64], n: usize, m: usize) -> f64 {
        assert!(
            n + m <= self.n_max,
            "({n}, {m}) outside table of size {}",
            self.n_max
        );
        data[tri_index(n, m)]
    }

    pub fn t1(&self, n: usize, m: usize) -> f64 {
        self.at(&self.t1, n, m)
    }

    pub fn t2(&self, n: usize, m: usize) -> f64 {
        self.at(&self.t2, n, m)
    }

    pub fn t(&self, n: usize, m: usize) -> f64 {
        self.at(&self.t, n, m)
    }

    /// Iterates grid points in `n`-major order as `(n, m, t1, t2, t)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + '_ {
        (0..=self.n_max).flat_map(move |n| {
            (0..=(self.n_max - n)).map(move |m| {
                let i = tri_index(n, m);
                (n, m, self.t1[i], self.t2[i], self.t[i])
            })
        })
    }

    /// Largest `|T - T1 - T2|`, reported with its coordinates.
    pub fn max_decomposition_error(&self) -> (f64, usize, usize) {
        self.rows()
            .map(|(n, m, a, b, t)| ((t - a - b).abs(), n, m))
            .fold((0.0, 0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    }

    /// Largest disagreement between the stored total and the total filled by
    /// the first-step difference equation.
    pub fn max_dual_path_error(&self) -> (f64, usize, usize) {
        let direct = total_by_first_step(self.mu1, self.mu2, self.n_max)
            .expect("table rates were validated on construction");
        self.rows()
            .map(|(n, m, _, _, t)| ((t - direct[tri_index(n, m)]).abs(), n, m))
            .fold((0.0, 0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    }

    pub fn verify_dual_path(&self, tolerance: f64) -> Result<()> {
        let (error, n, m) = self.max_dual_path_error();
        if error > tolerance || error.is_nan() {
            return Err(Error::DualPathMismatch {
                n,
                m,
                error,
                tolerance,
            });
        }
        Ok(())
    }

    /// CSV with header `n,m,t1,t2,t`, one LF-terminated row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"n,m,t1,t2,t\n")?;
        for (n, m, a, b, t) in self.rows() {
            writeln!(out, "{n},{m},{a},{b},{t}")?;
        }
        Ok(())
    }
}

/// Closed form of `T2(1,m) - T2(0,m)`,
/// `(1/mu2) * (alpha - 1 + (alpha + 1)^-m) / alpha` with `alpha = mu1/mu2`.
pub fn delta1_t2_row0(mu1: f64, mu2: f64, m: usize) -> f64 {
    let alpha = mu1 / mu2;
    let decay = (alpha + 1.0).powf(-(m as f64));
    (alpha - 1.0 + decay) / alpha / mu2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    /// Grid points compared: the value at `to` is expected to be at least
    /// the value at `from`.
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub from_value: f64,
    pub to_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

impl MonotoneCheck {
    fn scan(pairs: impl Iterator<Item = ((usize, usize), (usize, usize))>, f: impl Fn(usize, usize) -> f64) -> Self {
        for (from, to) in pairs {
            let lo = f(from.0, from.1);
            let hi = f(to.0, to.1);
            if hi < lo - MONOTONE_TOL * lo.abs().max(1.0) {
                return Self {
                    holds: false,
                    counterexample: Some(Counterexample {
                        from,
                        to,
                        from_value: lo,
                        to_value: hi,
                    }),
                };
            }
        }
        Self {
            holds: true,
            counterexample: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// `T1(n,m)` non-decreasing in `n`.
    pub t1_in_n: MonotoneCheck,
    /// `T(n, k-n)` non-decreasing in `n` along every anti-diagonal.
    pub t_antidiagonal: MonotoneCheck,
    /// `T2(n,m)` non-decreasing in `n`.
    pub t2_in_n: MonotoneCheck,
}

/// Scans the table for the first decrease of each monotone quantity.
pub fn check_monotonicity(table: &SojournTable) -> MonotonicityReport {
    let n_max = table.n_max;
    let along_n = || {
        (0..n_max).flat_map(move |m| (0..(n_max - m)).map(move |n| ((n, m), (n + 1, m))))
    };
    let along_diag = || {
        (1..=n_max).flat_map(move |k| (0..k).map(move |n| ((n, k - n), (n + 1, k - n - 1))))
    };
    MonotonicityReport {
        t1_in_n: MonotoneCheck::scan(along_n(), |n, m| table.t1(n, m)),
        t_antidiagonal: MonotoneCheck::scan(along_diag(), |n, m| table.t(n, m)),
        t2_in_n: MonotoneCheck::scan(along_n(), |n, m| table.t2(n, m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn boundary_row_is_linear_in_m() {
        let table = build_table(1.7, 1.0, 12).unwrap();
        for m in 0..=12 {
            assert_eq!(table.t(0, m), m as f64);
            assert_eq!(table.t2(0, m), m as f64);
            assert_eq!(table.t1(0, m), 0.0);
        }
    }

    #[test]
    fn small_hand_values() {
        let table = build_table(1.0, 1.0, 4).unwrap();
        assert!(close(table.t(1, 0), 2.0, 1e-15));
        assert!(close(table.t(1, 1), 2.5, 1e-15));
        assert!(close(table.t2(1, 1), 1.5, 1e-15));
        assert!(close(table.t2(1, 2), 2.25, 1e-15));
        assert!(close(table.t2(2, 1), 1.875, 1e-15));
    }

    #[test]
    fn t1_is_exactly_n_over_mu1() {
        let table = build_table(0.3, 2.0, 10).unwrap();
        for (n, m, t1, _, _) in table.rows() {
            assert_eq!(t1, n as f64 / 0.3, "({n},{m})");
        }
    }

    #[test]
    fn degenerate_grid() {
        let table = build_table(1.0, 3.0, 0).unwrap();
        assert_eq!(table.rows().count(), 1);
        assert_eq!(table.t(0, 0), 0.0);
    }

    #[test]
    fn rejects_bad_rates_and_budget() {
        assert!(matches!(
            build_table(0.0, 1.0, 3),
            Err(Error::InvalidParameter { field: "mu1", .. })
        ));
        assert!(build_table(1.0, f64::NAN, 3).is_err());
        let opts = TableOptions {
            ops_budget: 100,
            verify: false,
        };
        assert!(matches!(
            build_table_with(1.0, 1.0, 50, &opts),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn closed_form_delta_matches_table() {
        for &(mu1, mu2) in &[(1.0, 1.0), (2.0, 1.0), (0.1, 1.0), (3.0, 0.5)] {
            let table = build_table(mu1, mu2, 30).unwrap();
            for m in 0..30 {
                let diff = table.t2(1, m) - table.t2(0, m);
                assert!(
                    close(delta1_t2_row0(mu1, mu2, m), diff, 1e-12),
                    "mu=({mu1},{mu2}) m={m}"
                );
            }
        }
        assert_eq!(delta1_t2_row0(1.0, 1.0, 0), 1.0);
        assert_eq!(delta1_t2_row0(1.0, 1.0, 1), 0.5);
        assert!(close(delta1_t2_row0(2.0, 1.0, 200), 0.5, 1e-15));
    }

    #[test]
    fn monotonicity_counterexample_for_slow_first_node() {
        let table = build_table(0.1, 1.0, 10).unwrap();
        let report = check_monotonicity(&table);
        assert!(report.t1_in_n.holds);
        assert!(report.t_antidiagonal.holds);
        assert!(!report.t2_in_n.holds);
        let ce = report.t2_in_n.counterexample.unwrap();
        assert_eq!((ce.from, ce.to), ((0, 2), (1, 2)));
        assert!(ce.to_value < ce.from_value);
    }

    #[test]
    fn csv_layout() {
        let table = build_table(1.0, 1.0, 2).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,m,t1,t2,t");
        assert_eq!(lines.len(), 7);
        assert!(lines.contains(&"0,2,0,2,2"));
        assert!(lines.contains(&"1,1,1,1.5,2.5"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }
}
