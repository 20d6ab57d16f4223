use semsense_core::channel::{average_bep, ergodic_capacity, FadingModel, FadingSpec, ModulationScheme};

use crate::{core, guard, non_null, SemStatus};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemFadingModel {
    Rayleigh = 0,
    Nakagami = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemModulation {
    Bpsk = 0,
    BfskCoherent = 1,
    Dpsk = 2,
    OnBfsk = 3,
}

/// Fading link with maximal-ratio combining over `n_branches` antennas.
/// `nakagami_m` is ignored for Rayleigh.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SemFading {
    pub model: SemFadingModel,
    pub nakagami_m: f64,
    pub n_branches: u32,
    pub mean_snr_db: f64,
}

fn spec_of(f: *const SemFading) -> Result<FadingSpec, SemStatus> {
    non_null(f, "fading")?;
    let f = unsafe { &*f };
    let model = match f.model {
        SemFadingModel::Rayleigh => FadingModel::Rayleigh,
        SemFadingModel::Nakagami => FadingModel::Nakagami { m: f.nakagami_m },
    };
    let spec = FadingSpec::new(model, f.n_branches as usize, f.mean_snr_db);
    core(spec.validate())?;
    Ok(spec)
}

fn modulation_of(m: SemModulation) -> ModulationScheme {
    match m {
        SemModulation::Bpsk => ModulationScheme::bpsk(),
        SemModulation::BfskCoherent => ModulationScheme::bfsk_coherent(),
        SemModulation::Dpsk => ModulationScheme::dpsk(),
        SemModulation::OnBfsk => ModulationScheme::on_bfsk(),
    }
}

/// Average bit error probability over the fading distribution.
///
/// # Safety
/// `fading` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_average_bep(fading: *const SemFading, modulation: SemModulation, out: *mut f64) -> SemStatus {
    guard(|| {
        let spec = spec_of(fading)?;
        non_null(out, "out")?;
        *out = core(average_bep(&spec, &modulation_of(modulation)))?;
        Ok(())
    })
}

/// Ergodic capacity in bit/s.
///
/// # Safety
/// `fading` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_ergodic_capacity(fading: *const SemFading, bandwidth_hz: f64, out: *mut f64) -> SemStatus {
    guard(|| {
        let spec = spec_of(fading)?;
        non_null(out, "out")?;
        *out = core(ergodic_capacity(&spec, bandwidth_hz))?;
        Ok(())
    })
}
