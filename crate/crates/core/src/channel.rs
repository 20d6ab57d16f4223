//! Fading link model: MRC SNR density, ergodic capacity, average bit-error
//! probability and bit-level payload corruption.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Upper-tail mass of the SNR density ignored by the quadrature.
const TAIL_MASS: f64 = 1e-12;
const CAPACITY_TOL: f64 = 1e-9;
const BEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FadingModel {
    Rayleigh,
    Nakagami { m: f64 },
}

impl FadingModel {
    pub fn name(&self) -> String {
        match self {
            Self::Rayleigh => "rayleigh".into(),
            Self::Nakagami { m } => format!("nakagami-{m}"),
        }
    }
}

/// Mean SNR derived from transmit power and large-scale path loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub transmit_power_dbw: f64,
    pub distance_m: f64,
    pub path_loss_exp: f64,
    pub noise_power_dbw: f64,
}

impl LinkBudget {
    pub fn mean_snr_db(&self) -> f64 {
        self.transmit_power_dbw - 10.0 * self.path_loss_exp * self.distance_m.log10() - self.noise_power_dbw
    }
}

/// Per-branch fading with `n_branches` i.i.d. branches combined by MRC.
/// Exactly one of `mean_snr_db` and `link_budget` must be set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingSpec {
    pub model: FadingModel,
    pub n_branches: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_budget: Option<LinkBudget>,
}

impl FadingSpec {
    pub fn new(model: FadingModel, n_branches: usize, mean_snr_db: f64) -> Self {
        Self {
            model,
            n_branches,
            mean_snr_db: Some(mean_snr_db),
            link_budget: None,
        }
    }

    pub fn rayleigh(n_branches: usize, mean_snr_db: f64) -> Self {
        Self::new(FadingModel::Rayleigh, n_branches, mean_snr_db)
    }

    pub fn nakagami(m: f64, n_branches: usize, mean_snr_db: f64) -> Self {
        Self::new(FadingModel::Nakagami { m }, n_branches, mean_snr_db)
    }

    pub fn with_link_budget(model: FadingModel, n_branches: usize, budget: LinkBudget) -> Self {
        Self {
            model,
            n_branches,
            mean_snr_db: None,
            link_budget: Some(budget),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_branches == 0 {
            return Err(Error::InvalidSpec("at least one receive branch is required".into()));
        }
        if let FadingModel::Nakagami { m } = self.model {
            if !(m >= 0.5) || !m.is_finite() {
                return Err(Error::InvalidSpec(format!("Nakagami m = {m} is below 0.5")));
            }
        }
        if let Some(b) = &self.link_budget {
            if !(b.distance_m > 0.0) || !(b.path_loss_exp >= 0.0) {
                return Err(Error::InvalidSpec("link budget needs positive distance and non-negative exponent".into()));
            }
        }
        let db = match (self.mean_snr_db, &self.link_budget) {
            (Some(db), None) => db,
            (None, Some(b)) => b.mean_snr_db(),
            _ => return Err(Error::InvalidSpec("set exactly one of mean_snr_db and link_budget".into())),
        };
        if !db.is_finite() {
            return Err(Error::InvalidSpec(format!("mean SNR {db} dB is not finite")));
        }
        Ok(())
    }

    /// Per-branch mean SNR in dB.
    pub fn mean_snr(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.mean_snr_db.unwrap_or_else(|| self.link_budget.expect("validated").mean_snr_db()))
    }

    /// Shape and scale of the Gamma law followed by the combined SNR.
    pub fn gamma_params(&self) -> Result<(f64, f64)> {
        let mean = 10f64.powf(self.mean_snr()? / 10.0);
        let n = self.n_branches as f64;
        Ok(match self.model {
            FadingModel::Rayleigh => (n, mean),
            FadingModel::Nakagami { m } => (n * m, mean / m),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationScheme {
    pub tau1: f64,
    pub tau2: f64,
    pub name: String,
}

impl ModulationScheme {
    pub fn custom(name: &str, tau1: f64, tau2: f64) -> Result<Self> {
        if !(tau1 > 0.0 && tau2 > 0.0) || !tau1.is_finite() || !tau2.is_finite() {
            return Err(Error::InvalidSpec(format!("{name}: tau1 and tau2 must be positive")));
        }
        Ok(Self {
            tau1,
            tau2,
            name: name.to_string(),
        })
    }

    fn named(name: &str, tau1: f64, tau2: f64) -> Self {
        Self {
            tau1,
            tau2,
            name: name.to_string(),
        }
    }

    pub fn bfsk_coherent() -> Self {
        Self::named("bfsk-coherent", 0.5, 0.5)
    }

    pub fn bpsk() -> Self {
        Self::named("bpsk", 1.0, 0.5)
    }

    pub fn on_bfsk() -> Self {
        Self::named("on-bfsk", 0.5, 1.0)
    }

    pub fn dpsk() -> Self {
        Self::named("dpsk", 1.0, 1.0)
    }

    /// Look up a named scheme (`bfsk-coherent`, `bpsk`, `on-bfsk`, `dpsk`).
    pub fn preset(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "bfsk-coherent" | "bfsk" => Self::bfsk_coherent(),
            "bpsk" => Self::bpsk(),
            "on-bfsk" | "onbfsk" => Self::on_bfsk(),
            "dpsk" => Self::dpsk(),
            _ => return None,
        })
    }

    pub fn presets() -> [Self; 4] {
        [Self::bfsk_coherent(), Self::bpsk(), Self::on_bfsk(), Self::dpsk()]
    }

    /// Bit-error probability at instantaneous SNR `gamma`.
    pub fn conditional_bep(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            0.5
        } else {
            0.5 * gamma_ur(self.tau2, self.tau1 * gamma)
        }
    }
}

/// Unit-scale Gamma(k, 1) density.
fn unit_gamma_pdf(k: f64, u: f64) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    if u == 0.0 {
        return match k.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0,
            _ => 0.0,
        };
    }
    ((k - 1.0) * u.ln() - u - ln_gamma(k)).exp()
}

/// Density of the combined SNR at `gamma` (linear).
pub fn snr_pdf(spec: &FadingSpec, gamma: f64) -> Result<f64> {
    let (k, theta) = spec.gamma_params()?;
    Ok(unit_gamma_pdf(k, gamma / theta) / theta)
}

/// Smallest u with Gamma(k, 1) upper tail below `TAIL_MASS`.
fn tail_cutoff(k: f64) -> f64 {
    let mut u = k.max(1.0);
    while gamma_ur(k, u) > TAIL_MASS {
        u *= 1.5;
    }
    u
}

/// E[h(gamma)] under the spec's SNR law, integrated in the unit-scale variable.
fn expect<F: Fn(f64) -> f64>(spec: &FadingSpec, h: F, tol: f64) -> Result<f64> {
    let (k, theta) = spec.gamma_params()?;
    let g = |u: f64| h(theta * u) * unit_gamma_pdf(k, u);
    let opts = QuadOptions::abs(tol / 2.0);
    let split = k.min(tail_cutoff(k) / 2.0);
    Ok(integrate(&g, 0.0, split, opts)?.value + integrate(&g, split, tail_cutoff(k), opts)?.value)
}

/// Ergodic data rate in bits/second.
pub fn ergodic_capacity(spec: &FadingSpec, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::InvalidSpec(format!("bandwidth {bandwidth_hz} Hz must be positive")));
    }
    let efficiency = expect(spec, |g| g.ln_1p() / std::f64::consts::LN_2, CAPACITY_TOL)?;
    Ok(bandwidth_hz * efficiency.max(0.0))
}

/// Average bit-error probability over the fading law.
pub fn average_bep(spec: &FadingSpec, modulation: &ModulationScheme) -> Result<f64> {
    ModulationScheme::custom(&modulation.name, modulation.tau1, modulation.tau2)?;
    let bep = expect(spec, |g| modulation.conditional_bep(g), BEP_TOL)?;
    Ok(bep.clamp(0.0, 0.5))
}

/// Flip each payload bit independently with probability `bep`.
///
/// Every bit consumes one uniform draw whether or not it flips, so for a
/// fixed seed the flipped set at a lower `bep` is a subset of the flipped set
/// at any higher `bep`.
pub fn corrupt_payload(payload: &[u8], bep: f64, seed: u64) -> Result<Vec<u8>> {
    if !(0.0..=0.5).contains(&bep) {
        return Err(Error::InvalidSpec(format!("bit-error probability {bep} is outside [0, 0.5]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(payload
        .iter()
        .map(|&byte| {
            let mut mask = 0u8;
            for bit in 0..8 {
                if rng.random::<f64>() < bep {
                    mask |= 1 << bit;
                }
            }
            byte ^ mask
        })
        .collect())
}

/// Time to send `payload_bits` at `capacity_bps`.
pub fn transmission_time(payload_bits: u64, capacity_bps: f64) -> Result<f64> {
    if !(capacity_bps > 0.0) {
        return Err(Error::InvalidSpec(format!("capacity {capacity_bps} bps must be positive")));
    }
    Ok(payload_bits as f64 / capacity_bps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub capacity_bps: f64,
    pub avg_bep: f64,
    pub bandwidth_hz: f64,
}

pub fn link_report(spec: &FadingSpec, modulation: &ModulationScheme, bandwidth_hz: f64) -> Result<LinkReport> {
    Ok(LinkReport {
        capacity_bps: ergodic_capacity(spec, bandwidth_hz)?,
        avg_bep: average_bep(spec, modulation)?,
        bandwidth_hz,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub model: String,
    pub modulation: String,
    pub bep: f64,
    pub capacity_bps: f64,
}

/// Evaluate every model × modulation pair over an SNR grid (dB).
pub fn sweep(
    models: &[FadingModel],
    modulations: &[ModulationScheme],
    snr_db: &[f64],
    n_branches: usize,
    bandwidth_hz: f64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(models.len() * modulations.len() * snr_db.len());
    for model in models {
        for &db in snr_db {
            let spec = FadingSpec::new(*model, n_branches, db);
            let capacity = ergodic_capacity(&spec, bandwidth_hz)?;
            for m in modulations {
                rows.push(SweepRow {
                    snr_db: db,
                    model: model.name(),
                    modulation: m.name.clone(),
                    bep: average_bep(&spec, m)?,
                    capacity_bps: capacity,
                });
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("snr_db,model,modulation,bep,capacity_bps\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{:e},{}\n", r.snr_db, r.model, r.modulation, r.bep, r.capacity_bps));
    }
    out
}
