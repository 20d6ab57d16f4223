//! Sensing-data market: transmitter capability, rival beliefs, expected
//! awards, equilibrium effort and award design.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Effort integrals are solved to this tolerance relative to `a·R(a)`.
const EFFORT_REL_TOL: f64 = 1e-9;
/// Coefficient sums below this fraction of their magnitude count as zero.
const DEGENERATE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmitterProfile {
    pub data_rate_bps: f64,
    pub semantic_encode_time_s: f64,
    pub recog_time_semantic_s: f64,
    /// Recognition time on raw data; defaults to the semantic time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recog_time_raw_s: Option<f64>,
    pub raw_bits: f64,
    pub semantic_bits: f64,
}

impl TransmitterProfile {
    /// Shared timing and payload sizes with a transmitter-specific rate.
    pub fn with_rate(data_rate_bps: f64) -> Self {
        Self {
            data_rate_bps,
            semantic_encode_time_s: 9.797e-3,
            recog_time_semantic_s: 5e-3,
            recog_time_raw_s: None,
            raw_bits: 96_000.0,
            semantic_bits: 7_200.0,
        }
    }

    /// The three reference transmitters at 7, 6 and 5 Mbps.
    pub fn reference_set() -> Vec<Self> {
        [7e6, 6e6, 5e6].into_iter().map(Self::with_rate).collect()
    }

    pub fn validate(&self, cfg: &MarketConfig) -> Result<()> {
        let positive = [
            self.data_rate_bps,
            self.semantic_encode_time_s,
            self.recog_time_semantic_s,
            self.recog_time_raw_s.unwrap_or(1.0),
            self.raw_bits,
            self.semantic_bits,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMarket("transmitter fields must be positive and finite".into()));
        }
        if self.data_rate_bps > cfg.delta_bps {
            return Err(Error::InvalidMarket(format!(
                "data rate {} bps exceeds the market maximum {} bps",
                self.data_rate_bps, cfg.delta_bps
            )));
        }
        Ok(())
    }

    /// Payload bits and rate-independent cycle time for the chosen mode.
    fn cycle(&self, use_semantic: bool) -> (f64, f64) {
        if use_semantic {
            (self.semantic_bits, self.semantic_encode_time_s + self.recog_time_semantic_s)
        } else {
            (self.raw_bits, self.recog_time_raw_s.unwrap_or(self.recog_time_semantic_s))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskAttitude {
    Neutral,
    Averse,
}

impl RiskAttitude {
    /// Prize utility; a zero prize contributes nothing under log utility.
    pub fn utility(&self, prize: f64) -> f64 {
        match self {
            Self::Neutral => prize,
            Self::Averse if prize > 0.0 => prize.ln(),
            Self::Averse => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub n_transmitters: usize,
    pub n_awards: usize,
    pub total_award: f64,
    pub delta_bps: f64,
    pub risk: RiskAttitude,
    pub use_semantic: bool,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            n_transmitters: 3,
            n_awards: 2,
            total_award: 1.0,
            delta_bps: 8e6,
            risk: RiskAttitude::Neutral,
            use_semantic: true,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_awards == 0 || self.n_awards > self.n_transmitters {
            return Err(Error::InvalidMarket(format!(
                "need 1 <= n_awards ({}) <= n_transmitters ({})",
                self.n_awards, self.n_transmitters
            )));
        }
        if !(self.total_award > 0.0) || !self.total_award.is_finite() {
            return Err(Error::InvalidMarket("total_award must be positive".into()));
        }
        if !(self.delta_bps > 0.0) || !self.delta_bps.is_finite() {
            return Err(Error::InvalidMarket("delta_bps must be positive".into()));
        }
        Ok(())
    }

    fn check_profiles(&self, profiles: &[TransmitterProfile]) -> Result<()> {
        self.validate()?;
        if profiles.len() != self.n_transmitters {
            return Err(Error::InvalidMarket(format!(
                "{} profiles for {} transmitters",
                profiles.len(),
                self.n_transmitters
            )));
        }
        profiles.iter().try_for_each(|p| p.validate(self))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwardScheme {
    pub prizes: Vec<f64>,
}

impl AwardScheme {
    pub fn new(prizes: Vec<f64>, total_award: f64) -> Result<Self> {
        if prizes.is_empty() {
            return Err(Error::InvalidMarket("award scheme has no prizes".into()));
        }
        if prizes.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidMarket(format!("prizes must be non-negative: {prizes:?}")));
        }
        if prizes.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(Error::InvalidMarket(format!("prizes must be non-increasing: {prizes:?}")));
        }
        if prizes.iter().sum::<f64>() > total_award + 1e-12 * total_award.max(1.0) {
            return Err(Error::InvalidMarket(format!("prizes exceed the total award {total_award}")));
        }
        Ok(Self { prizes })
    }

    pub fn winner_take_all(total_award: f64, n_awards: usize) -> Self {
        let mut prizes = vec![0.0; n_awards.max(1)];
        prizes[0] = total_award;
        Self { prizes }
    }

    pub fn uniform(total_award: f64, n_awards: usize) -> Self {
        let n = n_awards.max(1);
        Self {
            prizes: vec![total_award / n as f64; n],
        }
    }

    /// First prize `share·r`; the remainder split evenly over the other ranks.
    pub fn first_prize_share(total_award: f64, n_awards: usize, share: f64) -> Result<Self> {
        if n_awards == 1 {
            return Self::new(vec![total_award * share], total_award);
        }
        let rest = total_award * (1.0 - share) / (n_awards - 1) as f64;
        let mut prizes = vec![rest; n_awards];
        prizes[0] = total_award * share;
        Self::new(prizes, total_award)
    }

    pub fn total(&self) -> f64 {
        self.prizes.iter().sum()
    }
}

/// Belief about rivals' capabilities when their data rates are uniform on
/// `(0, delta)` and they share the given payload and fixed cycle time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapabilityBelief {
    pub bits: f64,
    pub fixed_time_s: f64,
    pub delta_bps: f64,
}

impl CapabilityBelief {
    pub fn of(profile: &TransmitterProfile, cfg: &MarketConfig) -> Self {
        let (bits, fixed_time_s) = profile.cycle(cfg.use_semantic);
        Self {
            bits,
            fixed_time_s,
            delta_bps: cfg.delta_bps,
        }
    }

    /// Largest attainable capability (at rate `delta`).
    pub fn max_capability(&self) -> f64 {
        1.0 / (self.bits / self.delta_bps + self.fixed_time_s)
    }

    pub fn cdf(&self, a: f64) -> f64 {
        capability_cdf(a, self)
    }
}

/// Uploads per second the transmitter can sustain.
pub fn capability(profile: &TransmitterProfile, cfg: &MarketConfig) -> f64 {
    let (bits, fixed) = profile.cycle(cfg.use_semantic);
    1.0 / (bits / profile.data_rate_bps + fixed)
}

/// Probability that a rival's capability is below `a`.
pub fn capability_cdf(a: f64, belief: &CapabilityBelief) -> f64 {
    if !(a > 0.0) {
        return 0.0;
    }
    if a >= belief.max_capability() {
        return 1.0;
    }
    let g = a * belief.bits / (belief.delta_bps * (1.0 - a * belief.fixed_time_s));
    g.clamp(0.0, 1.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability of finishing at rank `m` (1-based) among `n_t` given `G`.
fn rank_weight(g: f64, n_t: usize, m: usize) -> f64 {
    binomial(n_t - 1, m - 1) * g.powi((n_t - m) as i32) * (1.0 - g).powi((m - 1) as i32)
}

/// Expected prize utility of a transmitter with capability `a`.
pub fn expected_award(a: f64, scheme: &AwardScheme, cfg: &MarketConfig, belief: &CapabilityBelief) -> f64 {
    let g = capability_cdf(a, belief);
    scheme
        .prizes
        .iter()
        .enumerate()
        .take(cfg.n_transmitters)
        .map(|(i, &r)| {
            let u = cfg.risk.utility(r);
            if u == 0.0 {
                0.0
            } else {
                u * rank_weight(g, cfg.n_transmitters, i + 1)
            }
        })
        .sum()
}

/// `a·h(a) − ∫₀^a h`, the effort induced by a reward curve `h`.
fn effort_integral<F: Fn(f64) -> f64>(h: F, a: f64) -> Result<f64> {
    let top = a * h(a);
    let tol = (EFFORT_REL_TOL * top.abs()).max(1e-15);
    let area = integrate(&h, 0.0, a, QuadOptions::abs(tol))?.value;
    Ok(top - area)
}

/// Equilibrium effort before clamping at zero.
pub fn unclamped_effort(profile: &TransmitterProfile, scheme: &AwardScheme, cfg: &MarketConfig) -> Result<f64> {
    cfg.validate()?;
    profile.validate(cfg)?;
    let a = capability(profile, cfg);
    let belief = CapabilityBelief::of(profile, cfg);
    effort_integral(|y| expected_award(y, scheme, cfg, &belief), a)
}

/// Equilibrium upload frequency (per second), clamped at zero.
pub fn optimal_effort(profile: &TransmitterProfile, scheme: &AwardScheme, cfg: &MarketConfig) -> Result<f64> {
    Ok(unclamped_effort(profile, scheme, cfg)?.max(0.0))
}

/// Utility-independent effort coefficient of each rank `1..=n_awards`.
pub fn prize_coefficients(profile: &TransmitterProfile, cfg: &MarketConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    profile.validate(cfg)?;
    let a = capability(profile, cfg);
    let belief = CapabilityBelief::of(profile, cfg);
    (1..=cfg.n_awards)
        .map(|m| effort_integral(|y| rank_weight(belief.cdf(y), cfg.n_transmitters, m), a))
        .collect()
}

/// Per-rank coefficient sums over all transmitters.
pub fn coefficient_sums(profiles: &[TransmitterProfile], cfg: &MarketConfig) -> Result<Vec<f64>> {
    cfg.check_profiles(profiles)?;
    let mut sums = vec![0.0; cfg.n_awards];
    for p in profiles {
        for (s, f) in sums.iter_mut().zip(prize_coefficients(p, cfg)?) {
            *s += f;
        }
    }
    Ok(sums)
}

/// Effort-maximizing award scheme for the market's risk attitude.
///
/// Risk-neutral transmitters get winner-take-all. Risk-averse transmitters
/// get prizes proportional to the per-rank coefficient sums.
pub fn optimal_awards(profiles: &[TransmitterProfile], cfg: &MarketConfig) -> Result<AwardScheme> {
    cfg.check_profiles(profiles)?;
    match cfg.risk {
        RiskAttitude::Neutral => Ok(AwardScheme::winner_take_all(cfg.total_award, cfg.n_awards)),
        RiskAttitude::Averse => {
            let sums = coefficient_sums(profiles, cfg)?;
            let total: f64 = sums.iter().sum();
            let scale: f64 = sums.iter().map(|s| s.abs()).sum();
            if !(total.abs() > DEGENERATE_REL_TOL * scale) {
                return Err(Error::DegenerateCoefficients(total));
            }
            let prizes = sums.iter().map(|s| cfg.total_award * s / total).collect();
            AwardScheme::new(prizes, cfg.total_award)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortResult {
    pub per_transmitter_effort: Vec<f64>,
    pub capabilities: Vec<f64>,
    pub total_effort: f64,
    pub expected_awards: Vec<f64>,
    /// Transmitters whose computed effort was negative and set to zero.
    pub clamped: Vec<bool>,
}

impl EffortResult {
    pub fn total_expected_award(&self) -> f64 {
        self.expected_awards.iter().sum()
    }
}

pub fn market_summary(profiles: &[TransmitterProfile], cfg: &MarketConfig, scheme: &AwardScheme) -> Result<EffortResult> {
    cfg.check_profiles(profiles)?;
    let mut out = EffortResult {
        per_transmitter_effort: Vec::with_capacity(profiles.len()),
        capabilities: Vec::with_capacity(profiles.len()),
        total_effort: 0.0,
        expected_awards: Vec::with_capacity(profiles.len()),
        clamped: Vec::with_capacity(profiles.len()),
    };
    for p in profiles {
        let a = capability(p, cfg);
        let raw = unclamped_effort(p, scheme, cfg)?;
        out.capabilities.push(a);
        out.per_transmitter_effort.push(raw.max(0.0));
        out.clamped.push(raw < 0.0);
        out.expected_awards.push(expected_award(a, scheme, cfg, &CapabilityBelief::of(p, cfg)));
    }
    out.total_effort = out.per_transmitter_effort.iter().sum();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitterReport {
    pub capability: f64,
    pub effort: f64,
    pub expected_award: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketReport {
    pub scheme: Vec<f64>,
    pub per_transmitter: Vec<TransmitterReport>,
    pub total_effort: f64,
}

impl MarketReport {
    pub fn new(scheme: &AwardScheme, result: &EffortResult) -> Self {
        Self {
            scheme: scheme.prizes.clone(),
            per_transmitter: (0..result.capabilities.len())
                .map(|i| TransmitterReport {
                    capability: result.capabilities[i],
                    effort: result.per_transmitter_effort[i],
                    expected_award: result.expected_awards[i],
                })
                .collect(),
            total_effort: result.total_effort,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("market report serializes")
    }
}

/// Total effort for each first-prize share.
pub fn first_prize_sweep(profiles: &[TransmitterProfile], cfg: &MarketConfig, shares: &[f64]) -> Result<Vec<(f64, f64)>> {
    shares
        .iter()
        .map(|&s| {
            let scheme = AwardScheme::first_prize_share(cfg.total_award, cfg.n_awards, s)?;
            Ok((s, market_summary(profiles, cfg, &scheme)?.total_effort))
        })
        .collect()
}

pub fn first_prize_sweep_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("first_prize_share,total_effort\n");
    for (s, e) in rows {
        out.push_str(&format!("{s},{e}\n"));
    }
    out
}

/// Every non-increasing prize vector summing to `total_award` whose shares
/// lie on a grid of the given step.
pub fn prize_grid(total_award: f64, n_awards: usize, step: f64) -> Result<Vec<AwardScheme>> {
    if !(step > 0.0 && step <= 1.0) || n_awards == 0 {
        return Err(Error::InvalidMarket(format!("grid step {step} must lie in (0, 1]")));
    }
    let units = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n_awards);
    fn fill(left: usize, cap: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            if left <= cap {
                current.push(left);
                out.push(current.clone());
                current.pop();
            }
            return;
        }
        for v in (0..=left.min(cap)).rev() {
            current.push(v);
            fill(left - v, v, slots - 1, current, out);
            current.pop();
        }
    }
    let mut raw = Vec::new();
    fill(units, units, n_awards, &mut current, &mut raw);
    for shares in raw {
        let prizes = shares.iter().map(|&u| total_award * u as f64 / units as f64).collect();
        out.push(AwardScheme::new(prizes, total_award)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwardCountPoint {
    pub n_awards: usize,
    /// `None` when the optimal scheme is undefined for this award count.
    pub scheme: Option<AwardScheme>,
    pub total_effort: Option<f64>,
}

/// Optimal scheme and total effort for every award count `1..=n_transmitters`.
pub fn award_count_sweep(profiles: &[TransmitterProfile], cfg: &MarketConfig) -> Result<Vec<AwardCountPoint>> {
    (1..=cfg.n_transmitters)
        .map(|n_awards| {
            let c = MarketConfig { n_awards, ..*cfg };
            match optimal_awards(profiles, &c) {
                Ok(scheme) => {
                    let total = market_summary(profiles, &c, &scheme)?.total_effort;
                    Ok(AwardCountPoint {
                        n_awards,
                        scheme: Some(scheme),
                        total_effort: Some(total),
                    })
                }
                Err(Error::DegenerateCoefficients(_)) => Ok(AwardCountPoint {
                    n_awards,
                    scheme: None,
                    total_effort: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
