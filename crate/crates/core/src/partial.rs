//! What an arrival can infer from the total occupancy `k = Q1 + Q2` alone.
//!
//! Under a threshold-`K` population the network is semi-open and has the
//! product-form law `pi_K(n, m) = c_K rho1^n rho2^m` on `n + m <= K`. The
//! law of `Q1` given `Q1 + Q2 = k` is geometric on `0..=k` and does not
//! depend on `K` or on `lambda`, so the conditional mean sojourn times
//! below take only the service rates.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sojourn::SojournTable;

/// Memory guard for [`stationary_law`].
pub const DEFAULT_LAW_CAP: usize = 2000;

/// Relative rate gap below which the equal-rates formulas are used.
pub const EQUAL_RATES_REL: f64 = 1e-9;

/// Relative tolerance for the equality cases of the likelihood-ratio check.
pub const LR_EQUALITY_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    First,
    Second,
}

impl Node {
    pub fn index(self) -> u8 {
        match self {
            Node::First => 1,
            Node::Second => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Node::First),
            2 => Some(Node::Second),
            _ => None,
        }
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.index())
    }
}

pub fn rates_equal(mu1: f64, mu2: f64) -> bool {
    (mu1 - mu2).abs() <= EQUAL_RATES_REL * mu1.max(mu2)
}

/// Unnormalized `p1(n|k)` for `n = 0..=k` and their sum.
///
/// With `t = min(mu)/max(mu) < 1` the weights are `t^j` where `j = n` if
/// node 1 is faster and `j = k - n` otherwise, so no intermediate exceeds
/// one; the normalizer is the folded sum `1 + t + ... + t^k`. Equal rates
/// give unit weights.
fn node1_raw_weights(mu1: f64, mu2: f64, k: usize) -> (Vec<f64>, f64) {
    if rates_equal(mu1, mu2) {
        return (vec![1.0; k + 1], k as f64 + 1.0);
    }
    let t = mu1.min(mu2) / mu1.max(mu2);
    let mut powers = Vec::with_capacity(k + 1);
    let mut w = 1.0;
    let mut sum = 0.0;
    for _ in 0..=k {
        powers.push(w);
        sum += w;
        w *= t;
    }
    if mu1 < mu2 {
        powers.reverse();
    }
    (powers, sum)
}

fn node1_weights(mu1: f64, mu2: f64, k: usize) -> Vec<f64> {
    let (raw, sum) = node1_raw_weights(mu1, mu2, k);
    raw.into_iter().map(|w| w / sum).collect()
}

/// `E[f(Q1*(k))]`, dividing by the normalizer once at the end.
fn expect_node1(mu1: f64, mu2: f64, k: usize, f: impl Fn(usize) -> f64) -> f64 {
    let (raw, sum) = node1_raw_weights(mu1, mu2, k);
    raw.iter().enumerate().map(|(n, w)| w * f(n)).sum::<f64>() / sum
}

/// Conditional law `p_node(n | k)` of the occupancy of one node given the
/// total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalDistribution {
    pub k: usize,
    pub node: Node,
    pub weights: Vec<f64>,
}

impl ConditionalDistribution {
    pub fn p(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| n as f64 * w)
            .sum()
    }
}

pub fn conditional_dist(mu1: f64, mu2: f64, k: usize, node: Node) -> ConditionalDistribution {
    let mut weights = node1_weights(mu1, mu2, k);
    if node == Node::Second {
        weights.reverse();
    }
    ConditionalDistribution { k, node, weights }
}

/// Product-form stationary law of the network under a threshold-`K`
/// population.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryLaw {
    pub threshold: usize,
    pub rho1: f64,
    pub rho2: f64,
    /// `1 / sum rho1^n rho2^m`. May underflow for large, heavily loaded
    /// triangles even though `probs` stays accurate.
    pub c_k: f64,
    /// Triangular layout, anti-diagonal `d = n + m` first, then `n`.
    probs: Vec<f64>,
}

fn tri_index(n: usize, m: usize) -> usize {
    let d = n + m;
    d * (d + 1) / 2 + n
}

impl StationaryLaw {
    /// Builds a law from arbitrary state probabilities in `(n, m)` form. Used
    /// by the linear-solve oracle.
    pub(crate) fn from_fn(
        threshold: usize,
        rho1: f64,
        rho2: f64,
        c_k: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let len = (threshold + 1) * (threshold + 2) / 2;
        let mut probs = vec![0.0; len];
        for d in 0..=threshold {
            for n in 0..=d {
                probs[tri_index(n, d - n)] = f(n, d - n);
            }
        }
        Self {
            threshold,
            rho1,
            rho2,
            c_k,
            probs,
        }
    }

    /// `pi(n, m)`, zero outside the triangle.
    pub fn prob(&self, n: usize, m: usize) -> f64 {
        if n + m > self.threshold {
            0.0
        } else {
            self.probs[tri_index(n, m)]
        }
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..=self.threshold)
            .flat_map(move |d| (0..=d).map(move |n| (n, d - n, self.probs[tri_index(n, d - n)])))
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Law of the total occupancy `Q1 + Q2`.
    pub fn total_marginal(&self) -> Vec<f64> {
        (0..=self.threshold)
            .map(|d| (0..=d).map(|n| self.probs[tri_index(n, d - n)]).sum())
            .collect()
    }

    /// Distribution of the node occupancy given total `k`, extracted from the
    /// joint law.
    pub fn conditional(&self, k: usize, node: Node) -> Option<ConditionalDistribution> {
        if k > self.threshold {
            return None;
        }
        let slice: Vec<f64> = (0..=k).map(|n| self.prob(n, k - n)).collect();
        let total: f64 = slice.iter().sum();
        let mut weights: Vec<f64> = slice.iter().map(|p| p / total).collect();
        if node == Node::Second {
            weights.reverse();
        }
        Some(ConditionalDistribution { k, node, weights })
    }

    pub fn max_abs_diff(&self, other: &StationaryLaw) -> f64 {
        let k = self.threshold.max(other.threshold);
        (0..=k)
            .flat_map(|d| (0..=d).map(move |n| (n, d - n)))
            .map(|(n, m)| (self.prob(n, m) - other.prob(n, m)).abs())
            .fold(0.0, f64::max)
    }

    /// Total-variation distance to a probability vector in `states()` order.
    pub fn total_variation(&self, other: impl IntoIterator<Item = f64>) -> f64 {
        0.5 * self
            .states()
            .zip(other)
            .map(|((_, _, p), q)| (p - q).abs())
            .sum::<f64>()
    }
}

pub fn stationary_law(params: &ModelParams, threshold: usize) -> Result<StationaryLaw> {
    stationary_law_capped(params, threshold, DEFAULT_LAW_CAP)
}

pub fn stationary_law_capped(
    params: &ModelParams,
    threshold: usize,
    cap: usize,
) -> Result<StationaryLaw> {
    if threshold > cap {
        return Err(Error::ThresholdCap { k: threshold, cap });
    }
    let rho1 = params.lambda / params.mu1;
    let rho2 = params.lambda / params.mu2;
    let (l1, l2) = (rho1.ln(), rho2.ln());
    let log_weight = |n: usize, m: usize| n as f64 * l1 + m as f64 * l2;

    let mut peak = f64::NEG_INFINITY;
    for d in 0..=threshold {
        for n in 0..=d {
            peak = peak.max(log_weight(n, d - n));
        }
    }
    let mut sum = 0.0;
    for d in 0..=threshold {
        for n in 0..=d {
            sum += (log_weight(n, d - n) - peak).exp();
        }
    }
    let c_k = (-peak - sum.ln()).exp();
    Ok(StationaryLaw::from_fn(threshold, rho1, rho2, c_k, |n, m| {
        (log_weight(n, m) - peak).exp() / sum
    }))
}

/// Mean node-1 sojourn of an arrival that finds `k` customers, closed form.
pub fn t1_cond(mu1: f64, mu2: f64, k: usize) -> f64 {
    let kp1 = k as f64 + 1.0;
    if rates_equal(mu1, mu2) {
        return (1.0 + k as f64 / 2.0) / mu1;
    }
    // t^(k+1) over the folded geometric sum 1 + t + ... + t^k.
    let t = mu1.min(mu2) / mu1.max(mu2);
    let mut w = 1.0;
    let mut sum = 0.0;
    for _ in 0..=k {
        sum += w;
        w *= t;
    }
    if mu1 > mu2 {
        (1.0 - kp1 * w / sum) / (mu1 - mu2)
    } else {
        (kp1 * mu2 / (mu1 * sum) - 1.0) / (mu2 - mu1)
    }
}

/// `sum_n (n+1)/mu1 * p1(n|k)`; the definition the closed form simplifies.
pub fn t1_cond_direct(mu1: f64, mu2: f64, k: usize) -> f64 {
    expect_node1(mu1, mu2, k, |n| (n as f64 + 1.0) / mu1)
}

fn require_diag(table: &SojournTable, k: usize) -> Result<()> {
    if k.checked_add(1).is_none_or(|d| !table.covers(d)) {
        return Err(Error::GridTooSmall {
            needed: k.saturating_add(1),
            available: table.n_max(),
        });
    }
    Ok(())
}

/// Mean node-2 sojourn given total `k`: `sum_n T2(n+1, k-n) p1(n|k)`.
pub fn t2_cond(table: &SojournTable, k: usize) -> Result<f64> {
    require_diag(table, k)?;
    Ok(expect_node1(table.mu1(), table.mu2(), k, |n| {
        table.t2(n + 1, k - n)
    }))
}

/// Mean total sojourn given `k`, as `t1_cond + t2_cond`.
pub fn t_cond(table: &SojournTable, k: usize) -> Result<f64> {
    Ok(t1_cond(table.mu1(), table.mu2(), k) + t2_cond(table, k)?)
}

/// `E[T(Q1*(k) + 1, k - Q1*(k))]` computed straight from the table.
pub fn t_cond_direct(table: &SojournTable, k: usize) -> Result<f64> {
    require_diag(table, k)?;
    Ok(expect_node1(table.mu1(), table.mu2(), k, |n| {
        table.t(n + 1, k - n)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Equal,
    Strict,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LrComparison {
    pub n: usize,
    /// `P{Q(k+1) = n+1} P{Q(k) = n}`
    pub lhs: f64,
    /// `P{Q(k+1) = n} P{Q(k) = n+1}`
    pub rhs: f64,
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderReport {
    pub k: usize,
    pub node: Node,
    pub comparisons: Vec<LrComparison>,
}

impl OrderReport {
    pub fn holds(&self) -> bool {
        self.comparisons
            .iter()
            .all(|c| c.relation != Relation::Violated)
    }

    /// Equality for every `n < k` and strict inequality at `n = k`.
    pub fn has_expected_pattern(&self) -> bool {
        self.comparisons.iter().all(|c| {
            let want = if c.n < self.k {
                Relation::Equal
            } else {
                Relation::Strict
            };
            c.relation == want
        })
    }
}

/// Checks the likelihood-ratio inequality between the node laws at totals
/// `k` and `k + 1` for every `n <= k`.
pub fn lr_order_check(mu1: f64, mu2: f64, k: usize, node: Node) -> OrderReport {
    let lo = conditional_dist(mu1, mu2, k, node);
    let hi = conditional_dist(mu1, mu2, k + 1, node);
    let comparisons = (0..=k)
        .map(|n| {
            let lhs = hi.p(n + 1) * lo.p(n);
            let rhs = hi.p(n) * lo.p(n + 1);
            let scale = lhs.abs().max(rhs.abs());
            let relation = if (lhs - rhs).abs() <= LR_EQUALITY_REL * scale {
                Relation::Equal
            } else if lhs > rhs {
                Relation::Strict
            } else {
                Relation::Violated
            };
            LrComparison {
                n,
                lhs,
                rhs,
                relation,
            }
        })
        .collect();
    OrderReport { k, node, comparisons }
}
