use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{FadingModel, ModulationScheme};
use crate::codec::CodecConfig;
use crate::contest::{MarketConfig, RiskAttitude, TransmitterProfile};
use crate::error::{Error, Result};
use crate::semantic_space::KnnConfig;
use crate::signal_model::{ActivityClass, DatasetConfig, DEFAULT_CARRIER_HZ, DEFAULT_SAMPLE_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
}

/// One run of one experiment. Every section has defaults, so a minimal
/// config is `{"experiment_id": "E4"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: ExperimentId,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub codec: CodecConfig,
    #[serde(default)]
    pub knn: KnnConfig,
    #[serde(default)]
    pub roundtrip: RoundTripSection,
    #[serde(default)]
    pub compression: CompressionSection,
    #[serde(default)]
    pub recognition: RecognitionSection,
    #[serde(default)]
    pub market: MarketSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Built-in preset names.
    pub classes: Vec<String>,
    /// Additional fully specified classes.
    pub custom_classes: Vec<ActivityClass>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub carrier_freq_hz: f64,
    pub n_subcarriers: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            classes: ActivityClass::presets().into_iter().map(|c| c.label).collect(),
            custom_classes: Vec::new(),
            train_per_class: 30,
            test_per_class: 20,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            duration_s: 1.0,
            carrier_freq_hz: DEFAULT_CARRIER_HZ,
            n_subcarriers: 1,
        }
    }
}

impl DatasetSection {
    pub fn activity_classes(&self) -> Result<Vec<ActivityClass>> {
        let mut out = Vec::with_capacity(self.classes.len() + self.custom_classes.len());
        for (i, name) in self.classes.iter().enumerate() {
            let class = ActivityClass::preset(name)
                .ok_or_else(|| Error::ConfigInvalid(format!("dataset.classes[{i}]: unknown preset {name:?}")))?;
            out.push(class);
        }
        out.extend(self.custom_classes.iter().cloned());
        if out.is_empty() {
            return Err(Error::ConfigInvalid("dataset.classes: no activity classes".into()));
        }
        Ok(out)
    }

    pub fn dataset_config(&self, per_class: usize, seed: u64) -> Result<DatasetConfig> {
        Ok(DatasetConfig {
            classes: self.activity_classes()?,
            traces_per_class: per_class,
            rng_seed: seed,
            sample_rate_hz: self.sample_rate_hz,
            duration_s: self.duration_s,
            carrier_freq_hz: self.carrier_freq_hz,
            n_subcarriers: self.n_subcarriers,
        })
    }
}

/// Synthetic multi-tone traces for codec identifiability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundTripSection {
    pub n_traces: usize,
    pub max_tones: usize,
    pub snr_db: f64,
    pub min_spacing_bins: f64,
    pub frequency_range_hz: [f64; 2],
    pub amplitude_range: [f64; 2],
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub tolerance_hz: f64,
}

impl Default for RoundTripSection {
    fn default() -> Self {
        Self {
            n_traces: 100,
            max_tones: 8,
            snr_db: 20.0,
            min_spacing_bins: 3.0,
            frequency_range_hz: [2.0, 120.0],
            amplitude_range: [0.5, 1.5],
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            n_samples: 600,
            tolerance_hz: 0.1,
        }
    }
}

/// Raw upload unit: `raw_packets × n_subcarriers × 2 × raw_bits_per_value`
/// unless `raw_unit_bits` overrides it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionSection {
    pub raw_packets: u64,
    pub raw_bits_per_value: u64,
    pub raw_unit_bits: Option<u64>,
}

impl Default for CompressionSection {
    fn default() -> Self {
        Self {
            raw_packets: 50,
            raw_bits_per_value: 32,
            raw_unit_bits: None,
        }
    }
}

impl CompressionSection {
    pub fn raw_bits(&self, n_subcarriers: usize) -> u64 {
        self.raw_unit_bits
            .unwrap_or(self.raw_packets * n_subcarriers as u64 * 2 * self.raw_bits_per_value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognitionSection {
    pub link_count: usize,
    /// Each rate must divide the dataset sampling rate.
    pub sample_rates_hz: Vec<f64>,
    pub models: Vec<FadingModel>,
    pub modulations: Vec<String>,
    pub n_branches: usize,
    pub transmit_power_dbw: Vec<f64>,
    pub distance_m: f64,
    pub path_loss_exp: f64,
    pub noise_power_dbw: f64,
    pub bandwidth_hz: f64,
    /// Classify decoded payloads without passing them through the channel.
    pub skip_channel: bool,
}

impl Default for RecognitionSection {
    fn default() -> Self {
        Self {
            link_count: 3,
            sample_rates_hz: vec![100.0, 150.0, 200.0, 300.0, 600.0],
            models: vec![
                FadingModel::Rayleigh,
                FadingModel::Nakagami { m: 2.0 },
                FadingModel::Nakagami { m: 5.0 },
                FadingModel::Nakagami { m: 10.0 },
            ],
            modulations: ModulationScheme::presets().into_iter().map(|m| m.name).collect(),
            n_branches: 1,
            transmit_power_dbw: (0..9).map(|i| -70.0 + 5.0 * i as f64).collect(),
            distance_m: 20.0,
            path_loss_exp: 3.0,
            noise_power_dbw: -100.0,
            bandwidth_hz: 20e6,
            skip_channel: false,
        }
    }
}

impl RecognitionSection {
    pub fn modulation_schemes(&self) -> Result<Vec<ModulationScheme>> {
        self.modulations
            .iter()
            .enumerate()
            .map(|(i, name)| {
                ModulationScheme::preset(name)
                    .ok_or_else(|| Error::ConfigInvalid(format!("recognition.modulations[{i}]: unknown scheme {name:?}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSection {
    pub rates_bps: Vec<f64>,
    pub semantic_encode_time_s: f64,
    pub recog_time_semantic_s: f64,
    pub recog_time_raw_s: Option<f64>,
    pub raw_bits: f64,
    pub semantic_bits: f64,
    pub delta_bps: f64,
    pub total_award: f64,
    pub n_awards: usize,
    pub first_prize_shares: Vec<f64>,
    pub grid_step: f64,
    /// Prize pool for the risk-appetite comparison; log utility makes the
    /// comparison depend on its absolute size.
    pub averse_total_award: f64,
}

impl Default for MarketSection {
    fn default() -> Self {
        let p = TransmitterProfile::with_rate(1.0);
        Self {
            rates_bps: vec![7e6, 6e6, 5e6],
            semantic_encode_time_s: p.semantic_encode_time_s,
            recog_time_semantic_s: p.recog_time_semantic_s,
            recog_time_raw_s: None,
            raw_bits: p.raw_bits,
            semantic_bits: p.semantic_bits,
            delta_bps: 8e6,
            total_award: 1.0,
            n_awards: 2,
            first_prize_shares: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            grid_step: 0.02,
            averse_total_award: 20.0,
        }
    }
}

impl MarketSection {
    pub fn profiles(&self) -> Vec<TransmitterProfile> {
        self.rates_bps
            .iter()
            .map(|&data_rate_bps| TransmitterProfile {
                data_rate_bps,
                semantic_encode_time_s: self.semantic_encode_time_s,
                recog_time_semantic_s: self.recog_time_semantic_s,
                recog_time_raw_s: self.recog_time_raw_s,
                raw_bits: self.raw_bits,
                semantic_bits: self.semantic_bits,
            })
            .collect()
    }

    pub fn market(&self, risk: RiskAttitude, use_semantic: bool) -> MarketConfig {
        MarketConfig {
            n_transmitters: self.rates_bps.len(),
            n_awards: self.n_awards,
            total_award: self.total_award,
            delta_bps: self.delta_bps,
            risk,
            use_semantic,
        }
    }
}

fn field(name: &str, e: Error) -> Error {
    Error::ConfigInvalid(format!("{name}: {e}"))
}

impl ExperimentConfig {
    pub fn new(experiment_id: ExperimentId) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment_id": experiment_id })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::ConfigInvalid(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        d.dataset_config(d.train_per_class, 0)?;
        if d.train_per_class == 0 || d.test_per_class == 0 {
            return Err(Error::ConfigInvalid("dataset: train_per_class and test_per_class must be positive".into()));
        }
        if !(d.sample_rate_hz > 0.0) || !(d.duration_s > 0.0) || d.n_subcarriers == 0 {
            return Err(Error::ConfigInvalid("dataset: rate, duration and subcarrier count must be positive".into()));
        }
        self.codec.validate().map_err(|e| field("codec", e))?;
        let n_classes = d.activity_classes()?.len();
        if self.knn.k == 0 || self.knn.k > d.train_per_class * n_classes {
            return Err(Error::ConfigInvalid(format!("knn.k = {} exceeds the training set", self.knn.k)));
        }

        let rt = &self.roundtrip;
        let span = rt.frequency_range_hz[1] - rt.frequency_range_hz[0];
        let bin = rt.sample_rate_hz / rt.n_samples.max(1) as f64;
        if rt.max_tones == 0 || rt.n_samples < 4 || !(span > 0.0) || rt.frequency_range_hz[0] < 0.0 {
            return Err(Error::ConfigInvalid("roundtrip: need tones, samples and a positive frequency range".into()));
        }
        if rt.frequency_range_hz[1] >= rt.sample_rate_hz / 2.0 {
            return Err(Error::ConfigInvalid("roundtrip.frequency_range_hz: must stay below Nyquist".into()));
        }
        if (rt.max_tones - 1) as f64 * rt.min_spacing_bins * bin > span {
            return Err(Error::ConfigInvalid("roundtrip: frequency range too narrow for the tone spacing".into()));
        }
        if !(rt.amplitude_range[0] > 0.0 && rt.amplitude_range[0] <= rt.amplitude_range[1]) {
            return Err(Error::ConfigInvalid("roundtrip.amplitude_range: must be positive and ordered".into()));
        }

        if self.compression.raw_bits(d.n_subcarriers) == 0 {
            return Err(Error::ConfigInvalid("compression: raw upload unit is zero bits".into()));
        }

        let r = &self.recognition;
        if r.link_count == 0 || r.n_branches == 0 {
            return Err(Error::ConfigInvalid("recognition: link_count and n_branches must be positive".into()));
        }
        for (i, &rate) in r.sample_rates_hz.iter().enumerate() {
            let factor = d.sample_rate_hz / rate;
            if !(rate > 0.0) || (factor - factor.round()).abs() > 1e-9 {
                return Err(Error::ConfigInvalid(format!(
                    "recognition.sample_rates_hz[{i}]: {rate} Hz does not divide {} Hz",
                    d.sample_rate_hz
                )));
            }
        }
        for (i, m) in r.models.iter().enumerate() {
            if let FadingModel::Nakagami { m } = m {
                if !(*m >= 0.5) {
                    return Err(Error::ConfigInvalid(format!("recognition.models[{i}]: Nakagami m = {m} is below 0.5")));
                }
            }
        }
        r.modulation_schemes()?;
        if !(r.distance_m > 0.0) || !(r.bandwidth_hz > 0.0) {
            return Err(Error::ConfigInvalid("recognition: distance and bandwidth must be positive".into()));
        }

        let m = &self.market;
        let cfg = m.market(RiskAttitude::Neutral, true);
        cfg.validate().map_err(|e| field("market", e))?;
        for p in m.profiles() {
            p.validate(&cfg).map_err(|e| field("market", e))?;
        }
        if m.first_prize_shares.iter().any(|s| !(1.0 / m.n_awards as f64 - 1e-12..=1.0).contains(s)) {
            return Err(Error::ConfigInvalid(
                "market.first_prize_shares: each share must lie in [1/n_awards, 1]".into(),
            ));
        }
        if !(m.grid_step > 0.0 && m.grid_step <= 1.0) || !(m.averse_total_award > 0.0) {
            return Err(Error::ConfigInvalid("market: grid_step in (0, 1] and positive averse_total_award".into()));
        }
        Ok(())
    }

    /// Canonical JSON of everything that affects results (not the output
    /// location).
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
