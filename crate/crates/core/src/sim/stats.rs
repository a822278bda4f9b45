//! Mergeable per-level statistics for paired node sojourn samples.

/// Welford moments of a pair `(x1, x2)` including the cross moment, so the
/// variance of any linear combination can be recovered.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairMoments {
    pub n: u64,
    mean1: f64,
    mean2: f64,
    m11: f64,
    m22: f64,
    m12: f64,
}

impl PairMoments {
    pub fn push(&mut self, x1: f64, x2: f64) {
        self.n += 1;
        let n = self.n as f64;
        let d1 = x1 - self.mean1;
        let d2 = x2 - self.mean2;
        self.mean1 += d1 / n;
        self.mean2 += d2 / n;
        self.m11 += d1 * (x1 - self.mean1);
        self.m22 += d2 * (x2 - self.mean2);
        self.m12 += d1 * (x2 - self.mean2);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &PairMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let d1 = other.mean1 - self.mean1;
        let d2 = other.mean2 - self.mean2;
        self.m11 += other.m11 + d1 * d1 * na * nb / n;
        self.m22 += other.m22 + d2 * d2 * na * nb / n;
        self.m12 += other.m12 + d1 * d2 * na * nb / n;
        self.mean1 += d1 * nb / n;
        self.mean2 += d2 * nb / n;
        self.n += other.n;
    }

    pub fn mean(&self, a1: f64, a2: f64) -> Option<f64> {
        (self.n > 0).then_some(a1 * self.mean1 + a2 * self.mean2)
    }

    /// Sample variance of `a1 x1 + a2 x2`.
    pub fn variance(&self, a1: f64, a2: f64) -> Option<f64> {
        (self.n > 1).then(|| {
            (a1 * a1 * self.m11 + a2 * a2 * self.m22 + 2.0 * a1 * a2 * self.m12)
                / (self.n as f64 - 1.0)
        })
    }
}

/// Sample count and sums within one batch of the measurement window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BatchCell {
    pub n: u64,
    pub sum1: f64,
    pub sum2: f64,
}

/// Statistics for arrivals that observed one occupancy level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelStats {
    pub moments: PairMoments,
    pub batches: Vec<BatchCell>,
}

impl LevelStats {
    pub fn with_batches(batches: usize) -> Self {
        Self {
            moments: PairMoments::default(),
            batches: vec![BatchCell::default(); batches],
        }
    }

    pub fn push(&mut self, batch: usize, x1: f64, x2: f64) {
        self.moments.push(x1, x2);
        let cell = &mut self.batches[batch];
        cell.n += 1;
        cell.sum1 += x1;
        cell.sum2 += x2;
    }

    /// Merges moments and appends the other accumulator's batches.
    pub fn absorb(&mut self, other: &LevelStats) {
        self.moments.merge(&other.moments);
        self.batches.extend_from_slice(&other.batches);
    }

    pub fn count(&self) -> u64 {
        self.moments.n
    }

    pub fn mean(&self, a1: f64, a2: f64) -> Option<f64> {
        self.moments.mean(a1, a2)
    }

    /// Standard error of the mean of `a1 x1 + a2 x2`.
    ///
    /// Uses weighted batch means, `sqrt(B/(B-1) * sum_b (s_b - n_b xbar)^2) / N`,
    /// which absorbs the serial correlation between customers that share a
    /// busy period. Falls back to the iid formula with fewer than two batches.
    pub fn standard_error(&self, a1: f64, a2: f64) -> Option<f64> {
        let n = self.moments.n;
        if n < 2 {
            return None;
        }
        let xbar = self.mean(a1, a2)?;
        let b = self.batches.len();
        let occupied = self.batches.iter().filter(|c| c.n > 0).count();
        if b < 2 || occupied < 2 {
            return self.moments.variance(a1, a2).map(|v| (v / n as f64).sqrt());
        }
        let ss: f64 = self
            .batches
            .iter()
            .map(|c| {
                let dev = a1 * c.sum1 + a2 * c.sum2 - c.n as f64 * xbar;
                dev * dev
            })
            .sum();
        let bf = b as f64;
        Some((ss * bf / (bf - 1.0)).sqrt() / n as f64)
    }
}
