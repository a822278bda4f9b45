//! Brute-force reference computations shared by the integration tests.
//! Nothing here calls into the library's numerical routines.
#![allow(dead_code)]

use std::collections::HashMap;

/// `T2(n, m)` by memoized first-step recursion:
/// `T2(n,m) = a T2(n-1,m+1) + b T2(n,m-1)`, `T2(n,0) = T2(n-1,1)`,
/// `T2(0,m) = m/mu2`.
pub struct FirstStepT2 {
    mu1: f64,
    mu2: f64,
    memo: HashMap<(usize, usize), f64>,
}

impl FirstStepT2 {
    pub fn new(mu1: f64, mu2: f64) -> Self {
        Self {
            mu1,
            mu2,
            memo: HashMap::new(),
        }
    }

    pub fn get(&mut self, n: usize, m: usize) -> f64 {
        // Fill by anti-diagonals so the recursion depth stays bounded.
        for d in 0..=(n + m) {
            for i in 0..=d {
                let j = d - i;
                if self.memo.contains_key(&(i, j)) {
                    continue;
                }
                let v = if i == 0 {
                    j as f64 / self.mu2
                } else if j == 0 {
                    self.memo[&(i - 1, 1)]
                } else {
                    let s = self.mu1 + self.mu2;
                    self.mu1 / s * self.memo[&(i - 1, j + 1)] + self.mu2 / s * self.memo[&(i, j - 1)]
                };
                self.memo.insert((i, j), v);
            }
        }
        self.memo[&(n, m)]
    }
}

/// `P(Q1 = n | Q1 + Q2 = k)` from the unnormalized product-form weights.
pub fn conditional_from_rhos(lambda: f64, mu1: f64, mu2: f64, k: usize) -> Vec<f64> {
    let (r1, r2) = (lambda / mu1, lambda / mu2);
    let w: Vec<f64> = (0..=k)
        .map(|n| r1.powi(n as i32) * r2.powi((k - n) as i32))
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Conditional mean sojourns `(T1(k), T2(k))` by direct enumeration.
pub fn conditional_sojourns(mu1: f64, mu2: f64, k: usize) -> (f64, f64) {
    let p = conditional_from_rhos(1.0, mu1, mu2, k);
    let mut t2 = FirstStepT2::new(mu1, mu2);
    let mut a = 0.0;
    let mut b = 0.0;
    for (n, pn) in p.iter().enumerate() {
        a += pn * (n as f64 + 1.0) / mu1;
        b += pn * t2.get(n + 1, k - n);
    }
    (a, b)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
