use semsense_core::contest::{
    capability, optimal_awards, optimal_effort, AwardScheme, MarketConfig, RiskAttitude, TransmitterProfile,
};

use crate::{core, fail, guard, non_null, slice, SemStatus};

/// Contest market. Transmitters are described by their data rate only;
/// timing and payload sizes take the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SemMarket {
    pub n_transmitters: u32,
    pub n_awards: u32,
    pub total_award: f64,
    pub delta_bps: f64,
    pub risk_averse: bool,
    pub use_semantic: bool,
}

impl From<MarketConfig> for SemMarket {
    fn from(m: MarketConfig) -> Self {
        Self {
            n_transmitters: m.n_transmitters as u32,
            n_awards: m.n_awards as u32,
            total_award: m.total_award,
            delta_bps: m.delta_bps,
            risk_averse: m.risk == RiskAttitude::Averse,
            use_semantic: m.use_semantic,
        }
    }
}

fn market_of(m: *const SemMarket) -> Result<MarketConfig, SemStatus> {
    non_null(m, "market")?;
    let m = unsafe { &*m };
    let cfg = MarketConfig {
        n_transmitters: m.n_transmitters as usize,
        n_awards: m.n_awards as usize,
        total_award: m.total_award,
        delta_bps: m.delta_bps,
        risk: if m.risk_averse { RiskAttitude::Averse } else { RiskAttitude::Neutral },
        use_semantic: m.use_semantic,
    };
    core(cfg.validate())?;
    Ok(cfg)
}

fn profile(rate: f64, cfg: &MarketConfig) -> Result<TransmitterProfile, SemStatus> {
    let p = TransmitterProfile::with_rate(rate);
    core(p.validate(cfg))?;
    Ok(p)
}

#[no_mangle]
pub extern "C" fn sem_market_default() -> SemMarket {
    MarketConfig::default().into()
}

/// Contest capability of a transmitter with the given data rate.
///
/// # Safety
/// `market` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_capability(market: *const SemMarket, data_rate_bps: f64, out: *mut f64) -> SemStatus {
    guard(|| {
        let cfg = market_of(market)?;
        let p = profile(data_rate_bps, &cfg)?;
        non_null(out, "out")?;
        *out = capability(&p, &cfg);
        Ok(())
    })
}

/// Equilibrium effort under the prize vector `prizes` (best first).
///
/// # Safety
/// `market` readable, `prizes` holding `n_prizes` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_optimal_effort(
    market: *const SemMarket,
    data_rate_bps: f64,
    prizes: *const f64,
    n_prizes: usize,
    out: *mut f64,
) -> SemStatus {
    guard(|| {
        let cfg = market_of(market)?;
        let p = profile(data_rate_bps, &cfg)?;
        let scheme = core(AwardScheme::new(slice(prizes, n_prizes, "prizes")?.to_vec(), cfg.total_award))?;
        non_null(out, "out")?;
        *out = core(optimal_effort(&p, &scheme, &cfg))?;
        Ok(())
    })
}

/// Effort-maximizing prize vector for `n_transmitters` data rates.
///
/// Writes `n_awards` prizes into `out_prizes`.
///
/// # Safety
/// `market` readable, `rates` holding `n_rates` values, `out_prizes`
/// holding `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn sem_optimal_awards(
    market: *const SemMarket,
    rates: *const f64,
    n_rates: usize,
    out_prizes: *mut f64,
    capacity: usize,
) -> SemStatus {
    guard(|| {
        let cfg = market_of(market)?;
        let profiles = slice(rates, n_rates, "rates")?
            .iter()
            .map(|&r| profile(r, &cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let scheme = core(optimal_awards(&profiles, &cfg))?;
        non_null(out_prizes, "out_prizes")?;
        if capacity < scheme.prizes.len() {
            return Err(fail(SemStatus::BufferTooSmall, format!("need {} prizes, have {capacity}", scheme.prizes.len())));
        }
        std::ptr::copy_nonoverlapping(scheme.prizes.as_ptr(), out_prizes, scheme.prizes.len());
        Ok(())
    })
}
