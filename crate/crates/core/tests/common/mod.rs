//! Reference computations shared by integration tests. Nothing here calls
//! into the crate's numerics.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DELTA: f64 = 8e6;
pub const BITS: f64 = 7200.0;
pub const FIXED: f64 = 9.797e-3 + 5e-3;
pub const A_MAX: f64 = 1.0 / (BITS / DELTA + FIXED);

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E1 for x > 0: power series below 1, continued
/// fraction (modified Lentz) above.
pub fn e1(x: f64) -> f64 {
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

pub fn cap_of_rate(rate: f64) -> f64 {
    1.0 / (BITS / rate + FIXED)
}

pub fn g_oracle(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let d = 1.0 - a * FIXED;
    if d <= 0.0 {
        return 1.0;
    }
    (a * BITS / (DELTA * d)).min(1.0)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn award_oracle(a: f64, prizes: &[f64], n_t: usize) -> f64 {
    let g = g_oracle(a);
    prizes
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let m = i + 1;
            r * binom(n_t - 1, m - 1) * g.powi((n_t - m) as i32) * (1.0 - g).powi((m - 1) as i32)
        })
        .sum()
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Equilibrium effort `a·R(a) − ∫₀^a R`.
pub fn effort_oracle(a: f64, prizes: &[f64], n_t: usize) -> f64 {
    a * award_oracle(a, prizes, n_t) - simpson(|y| award_oracle(y, prizes, n_t), 0.0, a, 2000)
}

/// Empirical rank-based award as a function of one's own effort when two
/// rivals follow the equilibrium strategy. Rival efforts come from stratified
/// uniform rates; rank frequencies are counted over all n² rival pairs.
pub struct RankOracle {
    rival_efforts: Vec<f64>,
}

impl RankOracle {
    pub fn new(prizes: &[f64], samples: usize, seed: u64) -> Self {
        let knots = 4001;
        let table: Vec<f64> = (0..knots).map(|i| effort_oracle(A_MAX * i as f64 / (knots - 1) as f64, prizes, 3)).collect();
        let strategy = |a: f64| {
            let x = (a / A_MAX * (knots - 1) as f64).clamp(0.0, (knots - 1) as f64);
            let i = (x.floor() as usize).min(knots - 2);
            let w = x - i as f64;
            table[i] * (1.0 - w) + table[i + 1] * w
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rival_efforts: Vec<f64> = (0..samples)
            .map(|i| {
                let u = (i as f64 + rng.random::<f64>()) / samples as f64;
                strategy(cap_of_rate(u * DELTA))
            })
            .collect();
        rival_efforts.sort_by(f64::total_cmp);
        Self { rival_efforts }
    }

    pub fn award(&self, effort: f64, prizes: &[f64]) -> f64 {
        let n = self.rival_efforts.len() as f64;
        let p = self.rival_efforts.partition_point(|&e| e < effort) as f64 / n;
        let rank = [p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p)];
        prizes.iter().zip(rank).map(|(r, q)| r * q).sum()
    }

    /// Effort maximizing `R̂(f) − f/a` over an even grid on `[0, top]`.
    pub fn best_response(&self, a: f64, prizes: &[f64], top: f64, grid: usize) -> f64 {
        let payoff = |f: f64| self.award(f, prizes) - f / a;
        (0..grid)
            .map(|i| top * i as f64 / (grid - 1) as f64)
            .max_by(|x, y| payoff(*x).total_cmp(&payoff(*y)))
            .expect("non-empty grid")
    }
}
