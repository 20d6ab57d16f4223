//! Sinusoidal semantic encoding of CFR power.
//!
//! `encode` runs PCA denoising, DC removal, FFT order estimation and
//! Levenberg–Marquardt fitting, then grows the basis set one sinusoid at a
//! time until the normalized residual drops below the configured threshold.

mod lm;
mod pca;
pub mod payload;
mod spectrum;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_model::CfrPowerTrace;

pub use lm::{lm_fit, LmFit};
pub use payload::{decode_payload, encode_payload, payload_bits, DecodedCode};
pub use pca::{explained_variance, pca_denoise};
pub use spectrum::{estimate_order, magnitude_spectrum, remove_dc};

/// One sinusoid `A · sin(2πF·t + θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticBasis {
    #[serde(rename = "a")]
    pub amplitude: f64,
    #[serde(rename = "f")]
    pub frequency_hz: f64,
    #[serde(rename = "theta")]
    pub phase_rad: f64,
}

impl SemanticBasis {
    pub fn new(amplitude: f64, frequency_hz: f64, phase_rad: f64) -> Self {
        Self {
            amplitude,
            frequency_hz,
            phase_rad,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (TAU * self.frequency_hz * t + self.phase_rad).sin()
    }

    /// Same waveform with `amplitude >= 0`, `frequency >= 0` and phase in `[0, 2π)`.
    pub fn canonical(self) -> Self {
        let (mut a, mut f, mut th) = (self.amplitude, self.frequency_hz, self.phase_rad);
        if f < 0.0 {
            // sin(-x + θ) = sin(x + π - θ)
            f = -f;
            th = PI - th;
        }
        if a < 0.0 {
            a = -a;
            th += PI;
        }
        Self::new(a, f, wrap_phase(th))
    }
}

/// Map any finite angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Compressed representation of one power trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticCode {
    pub order: usize,
    pub mean_power: f64,
    pub sample_rate_hz: f64,
    pub trace_len: usize,
    /// Residual RMS over centered-signal RMS at termination. Not carried by
    /// the binary payload; decoded codes report 0.
    pub fit_nrmse: f64,
    pub bases: Vec<SemanticBasis>,
}

impl SemanticCode {
    /// Build a code, sorting bases by descending amplitude.
    pub fn new(mut bases: Vec<SemanticBasis>, mean_power: f64, sample_rate_hz: f64, trace_len: usize, fit_nrmse: f64) -> Self {
        bases.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
        Self {
            order: bases.len(),
            mean_power,
            sample_rate_hz,
            trace_len,
            fit_nrmse,
            bases,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("code serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let code: Self = serde_json::from_str(text).map_err(|e| Error::InvalidCode(e.to_string()))?;
        if code.order != code.bases.len() {
            return Err(Error::InvalidCode(format!("order {} but {} bases", code.order, code.bases.len())));
        }
        Ok(code)
    }

    /// Evaluate the basis sum (without the DC level) at sample `i`.
    pub fn model_at(&self, i: usize) -> f64 {
        let t = i as f64 / self.sample_rate_hz;
        self.bases.iter().map(|b| b.eval(t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecConfig {
    /// Outer-loop stop threshold on normalized RMSE.
    pub fit_error_threshold: f64,
    pub max_outer_iterations: usize,
    pub max_order: usize,
    /// 1-based principal component whose score series is encoded.
    pub pca_component_index: usize,
    pub lm_max_inner_iterations: usize,
    pub lm_initial_damping: f64,
    pub lm_damping_factor: f64,
    pub feature_bits_per_value: u32,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            fit_error_threshold: 0.10,
            max_outer_iterations: 20,
            max_order: 16,
            pca_component_index: 1,
            lm_max_inner_iterations: 200,
            lm_initial_damping: 1e-3,
            lm_damping_factor: 10.0,
            feature_bits_per_value: 32,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(format!("codec: {m}")));
        if !(self.fit_error_threshold > 0.0 && self.fit_error_threshold < 1.0) {
            return bad("fit_error_threshold must be in (0, 1)");
        }
        if self.max_order == 0 || self.max_order > 255 {
            return bad("max_order must be in 1..=255");
        }
        if self.pca_component_index == 0 {
            return bad("pca_component_index is 1-based");
        }
        if !(self.lm_initial_damping > 0.0) || !(self.lm_damping_factor > 1.0) {
            return bad("LM damping must be positive with factor > 1");
        }
        if self.feature_bits_per_value != 32 && self.feature_bits_per_value != 64 {
            return bad("feature_bits_per_value must be 32 or 64");
        }
        Ok(())
    }
}

fn rms(x: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// RMS of `reference - estimate` over the RMS of `reference` about its mean.
pub fn nrmse(reference: &[f64], estimate: &[f64]) -> f64 {
    let mean = reference.iter().sum::<f64>() / reference.len().max(1) as f64;
    let num = rms(reference.iter().zip(estimate).map(|(r, e)| r - e));
    let den = rms(reference.iter().map(|r| r - mean));
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `mean_power + Σ A sin(2πF t + θ)` over the code's sample grid.
pub fn reconstruct(code: &SemanticCode) -> CfrPowerTrace {
    let samples = (0..code.trace_len).map(|i| code.mean_power + code.model_at(i)).collect();
    CfrPowerTrace::scalar(samples, code.sample_rate_hz)
}

/// Stages of one encode call, for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeTrace {
    /// Denoised single-series input (before DC removal).
    pub denoised: CfrPowerTrace,
    pub initial_order: usize,
    /// `fit_nrmse` after the initial fit and after every accepted refinement.
    pub nrmse_history: Vec<f64>,
    pub code: SemanticCode,
}

pub fn encode(trace: &CfrPowerTrace, cfg: &CodecConfig) -> Result<SemanticCode> {
    encode_traced(trace, cfg).map(|t| t.code)
}

/// Remove bases that sit within one FFT bin of a stronger basis.
fn dedup_bases(bases: &mut Vec<SemanticBasis>, bin_hz: f64) -> bool {
    bases.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    let mut kept: Vec<SemanticBasis> = Vec::with_capacity(bases.len());
    for b in bases.iter() {
        if kept.iter().all(|k| (k.frequency_hz - b.frequency_hz).abs() >= bin_hz) {
            kept.push(*b);
        }
    }
    let changed = kept.len() != bases.len();
    *bases = kept;
    changed
}

fn fit_and_dedup(centered: &CfrPowerTrace, seeds: Vec<SemanticBasis>, cfg: &CodecConfig, bin_hz: f64) -> Result<LmFit> {
    let mut fit = lm_fit(centered, &seeds, cfg)?;
    while dedup_bases(&mut fit.bases, bin_hz) && !fit.bases.is_empty() {
        fit = lm_fit(centered, &fit.bases, cfg)?;
    }
    Ok(fit)
}

/// Largest residual-spectrum peak at least one bin away from every basis.
fn next_seed(centered: &CfrPowerTrace, bases: &[SemanticBasis], offset: f64, bin_hz: f64) -> Option<SemanticBasis> {
    let residual: Vec<f64> = centered
        .samples
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let t = i as f64 / centered.sample_rate_hz;
            y - offset - bases.iter().map(|b| b.eval(t)).sum::<f64>()
        })
        .collect();
    let spec = spectrum::Spectrum::of(&residual, centered.sample_rate_hz);
    (1..=spec.last_seed_bin())
        .filter(|&k| bases.iter().all(|b| (b.frequency_hz - spec.freq(k)).abs() >= bin_hz))
        .max_by(|&a, &b| spec.magnitude[a].total_cmp(&spec.magnitude[b]))
        .map(|k| spec.seed(k))
}

/// Like [`encode`] but also returns the intermediate stages.
pub fn encode_traced(trace: &CfrPowerTrace, cfg: &CodecConfig) -> Result<EncodeTrace> {
    cfg.validate()?;
    if trace.is_empty() {
        return Err(Error::EmptyInput("trace has no samples".into()));
    }
    let denoised = pca_denoise(trace, cfg)?;
    let (centered, mean_power) = remove_dc(&denoised)?;
    let n = centered.len();
    let bin_hz = centered.sample_rate_hz / n as f64;
    // Keep the problem over-determined: more than three samples per basis.
    let order_cap = cfg.max_order.min(n.saturating_sub(1) / 3);
    if order_cap == 0 {
        return Err(Error::EmptyInput(format!("{n} samples are too few to fit a basis")));
    }
    let capped = CodecConfig {
        max_order: order_cap,
        ..cfg.clone()
    };
    let (initial_order, seeds) = estimate_order(&centered, &capped);
    let mut fit = fit_and_dedup(&centered, seeds, cfg, bin_hz)?;
    let mut history = vec![fit.fit_nrmse];
    let mut iteration = 0;
    while fit.fit_nrmse > cfg.fit_error_threshold && iteration < cfg.max_outer_iterations && fit.bases.len() < order_cap {
        iteration += 1;
        let Some(seed) = next_seed(&centered, &fit.bases, fit.offset, bin_hz) else {
            break;
        };
        let mut seeds = fit.bases.clone();
        seeds.push(seed);
        let cand = fit_and_dedup(&centered, seeds, cfg, bin_hz)?;
        if !(cand.fit_nrmse < fit.fit_nrmse) {
            break;
        }
        fit = cand;
        history.push(fit.fit_nrmse);
    }
    let code = SemanticCode::new(fit.bases, mean_power + fit.offset, centered.sample_rate_hz, n, fit.fit_nrmse);
    Ok(EncodeTrace {
        denoised,
        initial_order,
        nrmse_history: history,
        code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone_sum(parts: &[(f64, f64, f64)], n: usize, rate: f64, offset: f64) -> CfrPowerTrace {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                offset + parts.iter().map(|&(a, f, p)| a * (TAU * f * t + p).sin()).sum::<f64>()
            })
            .collect();
        CfrPowerTrace::scalar(samples, rate)
    }

    #[test]
    fn canonical_form() {
        let b = SemanticBasis::new(-2.0, 5.0, 0.5).canonical();
        assert_eq!(b.amplitude, 2.0);
        assert!((b.phase_rad - (0.5 + PI)).abs() < 1e-15);
        let raw = SemanticBasis::new(-1.3, -4.0, 7.0);
        let c = raw.canonical();
        assert!(c.amplitude >= 0.0 && c.frequency_hz >= 0.0 && (0.0..TAU).contains(&c.phase_rad));
        for i in 0..50 {
            let t = i as f64 * 0.013;
            assert!((raw.eval(t) - c.eval(t)).abs() < 1e-12);
        }
        assert_eq!(wrap_phase(-1e-18), 0.0);
    }

    #[test]
    fn noiseless_two_tone_encode() {
        let trace = tone_sum(&[(0.8, 12.3, 1.0), (0.3, 31.7, 4.0)], 600, 600.0, 2.0);
        let code = encode(&trace, &CodecConfig::default()).unwrap();
        assert_eq!(code.order, 2);
        assert!(code.fit_nrmse <= 1e-6, "{}", code.fit_nrmse);
        assert!((code.mean_power - 2.0).abs() < 0.01);
        assert!(code.bases[0].amplitude >= code.bases[1].amplitude);
    }

    #[test]
    fn round_trip_matches_stored_nrmse() {
        let mut trace = tone_sum(&[(0.5, 7.2, 0.3), (0.4, 19.9, 2.0), (0.1, 44.4, 5.0)], 600, 600.0, 1.0);
        for (i, s) in trace.samples.iter_mut().enumerate() {
            *s += 0.05 * ((i * 7919 % 613) as f64 / 613.0 - 0.5);
        }
        let traced = encode_traced(&trace, &CodecConfig::default()).unwrap();
        let rebuilt = reconstruct(&traced.code);
        let err = nrmse(&traced.denoised.samples, &rebuilt.samples);
        assert!((err - traced.code.fit_nrmse).abs() < 1e-9);
    }

    #[test]
    fn zero_amplitude_code_reconstructs_constant() {
        let code = SemanticCode::new(vec![SemanticBasis::new(0.0, 10.0, 1.0); 2], 3.5, 600.0, 20, 0.0);
        assert!(reconstruct(&code).samples.iter().all(|&x| x == 3.5));
    }

    #[test]
    fn json_shape() {
        let code = SemanticCode::new(vec![SemanticBasis::new(1.0, 2.0, 3.0)], 0.5, 600.0, 600, 0.01);
        let v: serde_json::Value = serde_json::from_str(&code.to_json()).unwrap();
        assert_eq!(v["order"], 1);
        assert_eq!(v["bases"][0]["a"], 1.0);
        assert_eq!(v["bases"][0]["theta"], 3.0);
        assert_eq!(SemanticCode::from_json(&code.to_json()).unwrap(), code);
        assert!(SemanticCode::from_json(r#"{"order":2,"mean_power":0,"sample_rate_hz":1,"trace_len":1,"fit_nrmse":0,"bases":[]}"#).is_err());
    }

    #[test]
    fn empty_trace_rejected() {
        let t = CfrPowerTrace::scalar(vec![], 600.0);
        assert!(matches!(encode(&t, &CodecConfig::default()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn config_validation() {
        let cfg = CodecConfig {
            fit_error_threshold: 1.5,
            ..CodecConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(CodecConfig::default().validate().is_ok());
    }
}
