//! Independent oracles for the analytic results: a seeded event simulation
//! of the tandem network under a threshold population, and an exact
//! linear-algebra steady-state solve of the truncated chain.

mod stats;
mod steady;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub use stats::{BatchCell, LevelStats, PairMoments};
pub use steady::{solve_steady_state, solve_steady_state_capped, DEFAULT_SOLVER_CAP};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Events discarded at the start of every replication.
    pub warmup_events: u64,
    /// Events measured per replication. Every transition counts, including
    /// arrivals that balk.
    pub measured_events: u64,
    pub replications: u32,
    /// Batches per replication for the batch-means standard errors.
    pub batches: u32,
    /// Number of completed customers to keep as a departure trace.
    #[serde(skip)]
    pub trace_limit: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            warmup_events: 100_000,
            measured_events: 1_000_000,
            replications: 1,
            batches: 50,
            trace_limit: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.measured_events < 1 {
            return Err(Error::Config("measured_events must be >= 1".into()));
        }
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.batches < 1 {
            return Err(Error::Config("batches must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateOccupancy {
    pub n: usize,
    pub m: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelEstimate {
    pub k: usize,
    pub count: u64,
    pub t1_mean: Option<f64>,
    pub t1_se: Option<f64>,
    pub t2_mean: Option<f64>,
    pub t2_se: Option<f64>,
}

/// One customer's passage, in order of departure from node 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub id: u64,
    pub arrival: f64,
    pub node1_exit: f64,
    pub node2_exit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimEstimate {
    pub seed: u64,
    #[serde(rename = "K")]
    pub threshold: usize,
    pub config: SimConfig,
    /// Time-weighted over the measurement windows, anti-diagonal order.
    pub occupancy: Vec<StateOccupancy>,
    pub per_k: Vec<LevelEstimate>,
    pub acceptance_fraction: f64,
    /// Measured arrivals (joining or not) by the total they observed.
    pub arrivals_by_k: Vec<u64>,
    #[serde(skip)]
    pub levels: Vec<LevelStats>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl SimEstimate {
    pub fn occupancy_probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.occupancy.iter().map(|s| s.p)
    }
}

#[derive(Clone, Copy, Debug)]
struct Customer {
    id: u64,
    observed: usize,
    arrival: f64,
    node1_exit: f64,
    /// Batch index of the arrival; `None` while warming up.
    batch: Option<usize>,
}

struct ReplicationOutput {
    state_time: Vec<f64>,
    levels: Vec<LevelStats>,
    arrivals_by_k: Vec<u64>,
    joined: u64,
    trace: Vec<TraceRecord>,
}

fn state_index(n: usize, m: usize) -> usize {
    let d = n + m;
    d * (d + 1) / 2 + n
}

fn run_replication(
    params: &ModelParams,
    threshold: usize,
    config: &SimConfig,
    replication: u32,
) -> ReplicationOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(replication as u64);

    let batches = config.batches as usize;
    let dim = (threshold + 1) * (threshold + 2) / 2;
    let mut out = ReplicationOutput {
        state_time: vec![0.0; dim],
        levels: (0..threshold)
            .map(|_| LevelStats::with_batches(batches))
            .collect(),
        arrivals_by_k: vec![0; threshold + 1],
        joined: 0,
        trace: Vec::new(),
    };

    let mut node1: VecDeque<Customer> = VecDeque::new();
    let mut node2: VecDeque<Customer> = VecDeque::new();
    let mut clock = 0.0;
    let mut next_id = 0u64;
    let total_events = config.warmup_events + config.measured_events;

    for event in 0..total_events {
        let measuring = event >= config.warmup_events;
        let batch = measuring.then(|| {
            ((event - config.warmup_events) as u128 * batches as u128
                / config.measured_events as u128) as usize
        });

        let rate1 = if node1.is_empty() { 0.0 } else { params.mu1 };
        let rate2 = if node2.is_empty() { 0.0 } else { params.mu2 };
        let total_rate = params.lambda + rate1 + rate2;
        let hold: f64 = rng.sample::<f64, _>(Exp1) / total_rate;
        if measuring {
            out.state_time[state_index(node1.len(), node2.len())] += hold;
        }
        clock += hold;

        let pick = rng.random::<f64>() * total_rate;
        if pick < params.lambda {
            let observed = node1.len() + node2.len();
            if measuring {
                out.arrivals_by_k[observed] += 1;
            }
            if observed < threshold {
                if measuring {
                    out.joined += 1;
                }
                node1.push_back(Customer {
                    id: next_id,
                    observed,
                    arrival: clock,
                    node1_exit: f64::NAN,
                    batch,
                });
                next_id += 1;
            }
        } else if pick < params.lambda + rate1 {
            let mut c = node1.pop_front().expect("node 1 busy");
            c.node1_exit = clock;
            node2.push_back(c);
        } else {
            let c = node2.pop_front().expect("node 2 busy");
            if let Some(b) = c.batch {
                out.levels[c.observed].push(b, c.node1_exit - c.arrival, clock - c.node1_exit);
            }
            if out.trace.len() < config.trace_limit {
                out.trace.push(TraceRecord {
                    id: c.id,
                    arrival: c.arrival,
                    node1_exit: c.node1_exit,
                    node2_exit: clock,
                });
            }
        }
    }
    out
}

/// Simulates the network with every arrival joining iff it sees fewer than
/// `threshold` customers. Replications use independent streams of one seed
/// and are merged in index order, so equal configs give equal estimates.
pub fn simulate(params: &ModelParams, threshold: usize, config: &SimConfig) -> Result<SimEstimate> {
    config.validate()?;
    let outputs: Vec<ReplicationOutput> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(params, threshold, config, r))
        .collect();

    let dim = (threshold + 1) * (threshold + 2) / 2;
    let mut state_time = vec![0.0; dim];
    let mut levels: Vec<LevelStats> = (0..threshold)
        .map(|_| LevelStats::with_batches(0))
        .collect();
    let mut arrivals_by_k = vec![0u64; threshold + 1];
    let mut joined = 0u64;
    let mut trace = Vec::new();
    for o in &outputs {
        for (acc, t) in state_time.iter_mut().zip(&o.state_time) {
            *acc += t;
        }
        for (acc, l) in levels.iter_mut().zip(&o.levels) {
            acc.absorb(l);
        }
        for (acc, a) in arrivals_by_k.iter_mut().zip(&o.arrivals_by_k) {
            *acc += a;
        }
        joined += o.joined;
        if trace.is_empty() {
            trace = o.trace.clone();
        }
    }

    let horizon: f64 = state_time.iter().sum();
    let mut occupancy = Vec::with_capacity(dim);
    for d in 0..=threshold {
        for n in 0..=d {
            occupancy.push(StateOccupancy {
                n,
                m: d - n,
                p: state_time[state_index(n, d - n)] / horizon,
            });
        }
    }
    let per_k = levels
        .iter()
        .enumerate()
        .map(|(k, l)| LevelEstimate {
            k,
            count: l.count(),
            t1_mean: l.mean(1.0, 0.0),
            t1_se: l.standard_error(1.0, 0.0),
            t2_mean: l.mean(0.0, 1.0),
            t2_se: l.standard_error(0.0, 1.0),
        })
        .collect();
    let arrivals: u64 = arrivals_by_k.iter().sum();
    let acceptance_fraction = if arrivals == 0 {
        0.0
    } else {
        joined as f64 / arrivals as f64
    };

    Ok(SimEstimate {
        seed: config.seed,
        threshold,
        config: *config,
        occupancy,
        per_k,
        acceptance_fraction,
        arrivals_by_k,
        levels,
        trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalProfit {
    pub k: usize,
    pub count: u64,
    /// `None` when no arrival at this level completed in the window.
    pub profit: Option<f64>,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Plugs per-level simulated sojourns into `R - C1 S1 - C2 S2` with
/// normal-approximation intervals at quantile `z`.
pub fn profit_from_estimate(params: &ModelParams, est: &SimEstimate, z: f64) -> Vec<EmpiricalProfit> {
    let (a1, a2) = (-params.cost1, -params.cost2);
    est.levels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let profit = l.mean(a1, a2).map(|x| params.reward + x);
            let se = l.standard_error(a1, a2);
            let (ci_low, ci_high) = match (profit, se) {
                (Some(p), Some(s)) => (Some(p - z * s), Some(p + z * s)),
                _ => (None, None),
            };
            EmpiricalProfit {
                k,
                count: l.count(),
                profit,
                se,
                ci_low,
                ci_high,
            }
        })
        .collect()
}

/// Simulates and returns 95% intervals for the empirical profit per level.
pub fn estimate_profit_empirical(
    params: &ModelParams,
    threshold: usize,
    config: &SimConfig,
) -> Result<Vec<EmpiricalProfit>> {
    let est = simulate(params, threshold, config)?;
    Ok(profit_from_estimate(params, &est, Z_95))
}
