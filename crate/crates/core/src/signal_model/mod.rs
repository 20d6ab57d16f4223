//! Parametric multipath model of WiFi CFR power.
//!
//! A scene is a set of static reflectors plus moving (human-induced)
//! reflectors. Each path contributes `a · exp(-j2πf(d0 + v·t)/c + jφ)` to the
//! CFR; the power `|H_s + H_d(t)|²` splits into a DC level, cross-terms at
//! the Doppler frequencies `f·v/c`, and self-terms at `f·|v_k - v_l|/c`.

mod dataset;
pub mod io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{link_variants, make_activity_dataset, ActivityClass, DatasetConfig, LabeledTrace};

/// Propagation speed used for all path-length to phase conversions (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
pub const DEFAULT_CARRIER_HZ: f64 = 5.805e9;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 600.0;
pub const DEFAULT_SUBCARRIER_SPACING_HZ: f64 = 312.5e3;

/// One reflection path. Static paths have `velocity_mps == 0.0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub amplitude: f64,
    pub initial_distance_m: f64,
    pub velocity_mps: f64,
    #[serde(default)]
    pub initial_phase_rad: f64,
}

impl PathComponent {
    pub fn fixed(amplitude: f64, initial_distance_m: f64) -> Self {
        Self {
            amplitude,
            initial_distance_m,
            velocity_mps: 0.0,
            initial_phase_rad: 0.0,
        }
    }

    pub fn moving(amplitude: f64, initial_distance_m: f64, velocity_mps: f64) -> Self {
        Self {
            amplitude,
            initial_distance_m,
            velocity_mps,
            initial_phase_rad: 0.0,
        }
    }

    fn gain(&self, freq_hz: f64, t: f64) -> Complex64 {
        let path_len = self.initial_distance_m + self.velocity_mps * t;
        let phase = -2.0 * std::f64::consts::PI * freq_hz * path_len / SPEED_OF_LIGHT + self.initial_phase_rad;
        Complex64::from_polar(self.amplitude, phase)
    }

    /// Doppler shift of this path at `freq_hz`.
    pub fn doppler_hz(&self, freq_hz: f64) -> f64 {
        freq_hz * self.velocity_mps.abs() / SPEED_OF_LIGHT
    }
}

fn default_subcarriers() -> usize {
    1
}

fn default_spacing() -> f64 {
    DEFAULT_SUBCARRIER_SPACING_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub carrier_freq_hz: f64,
    pub static_paths: Vec<PathComponent>,
    pub dynamic_paths: Vec<PathComponent>,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub noise_std: f64,
    pub rng_seed: u64,
    #[serde(default = "default_subcarriers")]
    pub n_subcarriers: usize,
    #[serde(default = "default_spacing")]
    pub subcarrier_spacing_hz: f64,
}

impl SceneSpec {
    /// Scene at the default 5.805 GHz carrier and 600 Hz packet rate.
    pub fn new(static_paths: Vec<PathComponent>, dynamic_paths: Vec<PathComponent>, duration_s: f64) -> Self {
        Self {
            carrier_freq_hz: DEFAULT_CARRIER_HZ,
            static_paths,
            dynamic_paths,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            duration_s,
            noise_std: 0.0,
            rng_seed: 0,
            n_subcarriers: 1,
            subcarrier_spacing_hz: DEFAULT_SUBCARRIER_SPACING_HZ,
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Carrier frequency of subcarrier `j`.
    pub fn subcarrier_freq(&self, j: usize) -> f64 {
        self.carrier_freq_hz + j as f64 * self.subcarrier_spacing_hz
    }

    pub fn validate(&self) -> Result<()> {
        if self.static_paths.is_empty() && self.dynamic_paths.is_empty() {
            return Err(Error::EmptyScene);
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.carrier_freq_hz) || !positive(self.sample_rate_hz) || !positive(self.duration_s) {
            return Err(Error::InvalidScene("carrier, sample rate and duration must be positive".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::InvalidScene("noise_std must be finite and non-negative".into()));
        }
        if self.n_subcarriers == 0 {
            return Err(Error::InvalidScene("n_subcarriers must be at least 1".into()));
        }
        if self.duration_s * self.sample_rate_hz < 2.0 {
            return Err(Error::InvalidScene("trace must contain at least two samples".into()));
        }
        for p in self.static_paths.iter().chain(&self.dynamic_paths) {
            if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
                return Err(Error::InvalidScene(format!("path amplitude {} must be >= 0", p.amplitude)));
            }
            if !p.initial_distance_m.is_finite() || !p.velocity_mps.is_finite() || !p.initial_phase_rad.is_finite() {
                return Err(Error::InvalidScene("path parameters must be finite".into()));
            }
        }
        if let Some(p) = self.static_paths.iter().find(|p| p.velocity_mps != 0.0) {
            return Err(Error::InvalidScene(format!("static path has velocity {}", p.velocity_mps)));
        }
        let top_freq = self.subcarrier_freq(self.n_subcarriers - 1);
        let max_doppler = self
            .dynamic_paths
            .iter()
            .map(|p| p.doppler_hz(top_freq))
            .fold(0.0, f64::max);
        if self.sample_rate_hz <= 2.0 * max_doppler {
            return Err(Error::InvalidScene(format!(
                "sample rate {} Hz does not exceed twice the maximum Doppler {max_doppler:.3} Hz",
                self.sample_rate_hz
            )));
        }
        Ok(())
    }
}

/// Sampled CFR power. `samples` is time-major: sample `i` of subcarrier `j`
/// lives at `i * n_subcarriers + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfrPowerTrace {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub n_subcarriers: usize,
    #[serde(default)]
    pub label: Option<String>,
}

impl CfrPowerTrace {
    pub fn scalar(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
            n_subcarriers: 1,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Number of time samples.
    pub fn len(&self) -> usize {
        self.samples.len() / self.n_subcarriers.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn subcarrier(&self, j: usize) -> Vec<f64> {
        self.samples.iter().skip(j).step_by(self.n_subcarriers).copied().collect()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    /// Keep every `factor`-th time sample, without anti-alias filtering, as
    /// a slower radio would capture it.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidConfig("decimation factor must be positive".into()));
        }
        let nsc = self.n_subcarriers.max(1);
        let samples = (0..self.len())
            .step_by(factor)
            .flat_map(|i| self.samples[i * nsc..(i + 1) * nsc].iter().copied())
            .collect();
        Ok(Self {
            samples,
            sample_rate_hz: self.sample_rate_hz / factor as f64,
            n_subcarriers: self.n_subcarriers,
            label: self.label.clone(),
        })
    }
}

fn static_sum(scene: &SceneSpec, freq: f64) -> Complex64 {
    scene.static_paths.iter().map(|p| p.gain(freq, 0.0)).sum()
}

/// Sample `|H_s + H_d(t)|²` plus white Gaussian noise of `scene.noise_std`.
pub fn synthesize_power(scene: &SceneSpec) -> Result<CfrPowerTrace> {
    scene.validate()?;
    let n = scene.n_samples();
    let nsc = scene.n_subcarriers;
    let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
    let noise = Normal::new(0.0, scene.noise_std).map_err(|e| Error::InvalidScene(e.to_string()))?;
    let statics: Vec<Complex64> = (0..nsc).map(|j| static_sum(scene, scene.subcarrier_freq(j))).collect();
    let mut samples = Vec::with_capacity(n * nsc);
    for i in 0..n {
        let t = i as f64 / scene.sample_rate_hz;
        for (j, hs) in statics.iter().enumerate() {
            let f = scene.subcarrier_freq(j);
            let h: Complex64 = hs + scene.dynamic_paths.iter().map(|p| p.gain(f, t)).sum::<Complex64>();
            let mut power = h.norm_sqr();
            if scene.noise_std > 0.0 {
                power += noise.sample(&mut rng);
            }
            samples.push(power);
        }
    }
    Ok(CfrPowerTrace {
        samples,
        sample_rate_hz: scene.sample_rate_hz,
        n_subcarriers: nsc,
        label: None,
    })
}

/// DC, cross-term and self-term parts of the noiseless power at the carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDecomposition {
    pub dc: f64,
    pub cross: CfrPowerTrace,
    pub self_term: CfrPowerTrace,
}

/// Split the carrier-frequency power into its DC, cross and self parts.
/// Noise is ignored; multi-subcarrier scenes are decomposed at the carrier.
pub fn decompose_power(scene: &SceneSpec) -> Result<PowerDecomposition> {
    scene.validate()?;
    let f = scene.carrier_freq_hz;
    let hs = static_sum(scene, f);
    let dc = hs.norm_sqr() + scene.dynamic_paths.iter().map(|p| p.amplitude * p.amplitude).sum::<f64>();
    let n = scene.n_samples();
    let mut cross = Vec::with_capacity(n);
    let mut self_term = Vec::with_capacity(n);
    let mut gains = Vec::with_capacity(scene.dynamic_paths.len());
    for i in 0..n {
        let t = i as f64 / scene.sample_rate_hz;
        gains.clear();
        gains.extend(scene.dynamic_paths.iter().map(|p| p.gain(f, t)));
        cross.push(gains.iter().map(|g| 2.0 * (hs * g.conj()).re).sum());
        let mut s = 0.0;
        for k in 0..gains.len() {
            for l in k + 1..gains.len() {
                s += 2.0 * (gains[k] * gains[l].conj()).re;
            }
        }
        self_term.push(s);
    }
    Ok(PowerDecomposition {
        dc,
        cross: CfrPowerTrace::scalar(cross, scene.sample_rate_hz),
        self_term: CfrPowerTrace::scalar(self_term, scene.sample_rate_hz),
    })
}
