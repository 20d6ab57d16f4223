use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{synthesize_power, CfrPowerTrace, PathComponent, SceneSpec};
use crate::error::{Error, Result};

/// Scene distribution for one activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityClass {
    pub label: String,
    /// Inclusive range of moving reflectors.
    pub dynamic_paths: [usize; 2],
    /// Speed range of moving reflectors (m/s).
    pub velocity_mps: [f64; 2],
    pub amplitude: [f64; 2],
    pub static_amplitude: [f64; 2],
    pub noise_std: f64,
}

impl ActivityClass {
    /// Built-in class by name: `falling`, `walking`, `sitting` or `standing`.
    pub fn preset(name: &str) -> Option<Self> {
        let (paths, vel, amp) = match name {
            "walking" => ([7, 9], [0.6, 2.6], [0.025, 0.04]),
            "sitting" => ([5, 7], [0.15, 1.2], [0.025, 0.04]),
            "falling" => ([3, 5], [1.5, 4.0], [0.04, 0.06]),
            "standing" => ([2, 4], [0.1, 0.8], [0.04, 0.06]),
            _ => return None,
        };
        Some(Self {
            label: name.to_string(),
            dynamic_paths: paths,
            velocity_mps: vel,
            amplitude: amp,
            static_amplitude: [0.8, 1.2],
            noise_std: 0.004,
        })
    }

    pub fn presets() -> Vec<Self> {
        ["falling", "walking", "sitting", "standing"]
            .iter()
            .map(|n| Self::preset(n).expect("known preset"))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if self.label.is_empty() {
            return Err(Error::InvalidConfig("class label is empty".into()));
        }
        if self.dynamic_paths[0] > self.dynamic_paths[1] {
            return Err(Error::InvalidConfig(format!("{}: dynamic path range is reversed", self.label)));
        }
        if !ordered(self.velocity_mps) || !ordered(self.amplitude) || !ordered(self.static_amplitude) {
            return Err(Error::InvalidConfig(format!("{}: parameter range is reversed or non-finite", self.label)));
        }
        if self.amplitude[0] < 0.0 || self.static_amplitude[0] < 0.0 || self.noise_std < 0.0 {
            return Err(Error::InvalidConfig(format!("{}: amplitudes and noise must be non-negative", self.label)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub classes: Vec<ActivityClass>,
    pub traces_per_class: usize,
    pub rng_seed: u64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_carrier")]
    pub carrier_freq_hz: f64,
    #[serde(default = "default_subcarriers")]
    pub n_subcarriers: usize,
}

fn default_rate() -> f64 {
    super::DEFAULT_SAMPLE_RATE_HZ
}
fn default_duration() -> f64 {
    1.0
}
fn default_carrier() -> f64 {
    super::DEFAULT_CARRIER_HZ
}
fn default_subcarriers() -> usize {
    1
}

impl DatasetConfig {
    /// All four presets with the default radio settings.
    pub fn presets(traces_per_class: usize, rng_seed: u64) -> Self {
        Self::with_classes(ActivityClass::presets(), traces_per_class, rng_seed)
    }

    pub fn with_classes(classes: Vec<ActivityClass>, traces_per_class: usize, rng_seed: u64) -> Self {
        Self {
            classes,
            traces_per_class,
            rng_seed,
            sample_rate_hz: default_rate(),
            duration_s: default_duration(),
            carrier_freq_hz: default_carrier(),
            n_subcarriers: 1,
        }
    }
}

/// A generated trace together with the scene and seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub trace: CfrPowerTrace,
    pub scene: SceneSpec,
    pub seed: u64,
}

impl LabeledTrace {
    pub fn label(&self) -> &str {
        self.trace.label.as_deref().unwrap_or("")
    }
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

const SLOT_MARGIN: f64 = 0.25;

/// Draw one scene for `class` from `rng`.
pub(crate) fn draw_scene(class: &ActivityClass, cfg: &DatasetConfig, rng: &mut ChaCha8Rng) -> SceneSpec {
    let n_dyn = rng.random_range(class.dynamic_paths[0]..=class.dynamic_paths[1]);
    let tau = std::f64::consts::TAU;
    let static_paths = vec![PathComponent {
        amplitude: draw(rng, class.static_amplitude),
        initial_distance_m: rng.random_range(2.0..6.0),
        velocity_mps: 0.0,
        initial_phase_rad: rng.random_range(0.0..tau),
    }];
    // One reflector per equal speed slot, jittered inside the middle half of
    // the slot, so Doppler tones stay resolvable.
    let [v_lo, v_hi] = class.velocity_mps;
    let slot = (v_hi - v_lo) / n_dyn.max(1) as f64;
    let dynamic_paths = (0..n_dyn)
        .map(|k| PathComponent {
            amplitude: draw(rng, class.amplitude),
            initial_distance_m: rng.random_range(2.0..8.0),
            velocity_mps: v_lo + slot * (k as f64 + draw(rng, [SLOT_MARGIN, 1.0 - SLOT_MARGIN])),
            initial_phase_rad: rng.random_range(0.0..tau),
        })
        .collect();
    SceneSpec {
        carrier_freq_hz: cfg.carrier_freq_hz,
        static_paths,
        dynamic_paths,
        sample_rate_hz: cfg.sample_rate_hz,
        duration_s: cfg.duration_s,
        noise_std: class.noise_std,
        rng_seed: rng.random(),
        n_subcarriers: cfg.n_subcarriers,
        subcarrier_spacing_hz: super::DEFAULT_SUBCARRIER_SPACING_HZ,
    }
}

/// Generate `traces_per_class` labeled traces for every class, class by class.
pub fn make_activity_dataset(cfg: &DatasetConfig) -> Result<Vec<LabeledTrace>> {
    if cfg.classes.is_empty() {
        return Err(Error::InvalidConfig("no activity classes".into()));
    }
    for class in &cfg.classes {
        class.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut out = Vec::with_capacity(cfg.classes.len() * cfg.traces_per_class);
    for class in &cfg.classes {
        for _ in 0..cfg.traces_per_class {
            let scene = draw_scene(class, cfg, &mut rng);
            let trace = synthesize_power(&scene)?.with_label(class.label.clone());
            out.push(LabeledTrace {
                seed: scene.rng_seed,
                trace,
                scene,
            });
        }
    }
    Ok(out)
}

/// Scenes of the same activity as seen by `n_links` receivers.
///
/// Link 0 is the original scene. Other links keep every reflector's speed
/// but redraw geometry: path phases and distances, static gain, reflector
/// gains scaled by up to 25%, and receiver noise.
pub fn link_variants(scene: &SceneSpec, n_links: usize, seed: u64) -> Vec<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut out = vec![scene.clone()];
    for _ in 1..n_links {
        let mut s = scene.clone();
        for p in &mut s.static_paths {
            p.amplitude *= rng.random_range(0.8..1.25);
            p.initial_distance_m = rng.random_range(2.0..6.0);
            p.initial_phase_rad = rng.random_range(0.0..tau);
        }
        for p in &mut s.dynamic_paths {
            p.amplitude *= rng.random_range(0.8..1.25);
            p.initial_distance_m = rng.random_range(2.0..8.0);
            p.initial_phase_rad = rng.random_range(0.0..tau);
        }
        s.rng_seed = rng.random();
        out.push(s);
    }
    out.truncate(n_links);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_variants_keep_speeds() {
        let cfg = DatasetConfig::presets(1, 4);
        let ds = make_activity_dataset(&cfg).unwrap();
        let scene = &ds[0].scene;
        let links = link_variants(scene, 3, 11);
        assert_eq!(links.len(), 3);
        assert_eq!(&links[0], scene);
        for l in &links[1..] {
            assert_ne!(l.rng_seed, scene.rng_seed);
            for (a, b) in l.dynamic_paths.iter().zip(&scene.dynamic_paths) {
                assert_eq!(a.velocity_mps, b.velocity_mps);
                assert!(a.amplitude >= 0.8 * b.amplitude && a.amplitude <= 1.25 * b.amplitude);
            }
        }
        assert_eq!(link_variants(scene, 3, 11), links);
        assert!(link_variants(scene, 0, 11).is_empty());
    }

    #[test]
    fn counts_and_labels() {
        let cfg = DatasetConfig::with_classes(
            vec![ActivityClass::preset("walking").unwrap(), ActivityClass::preset("sitting").unwrap()],
            10,
            5,
        );
        let ds = make_activity_dataset(&cfg).unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(ds.iter().filter(|t| t.label() == "walking").count(), 10);
        assert!(ds.iter().all(|t| t.trace.len() == 600));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = DatasetConfig::presets(3, 99);
        assert_eq!(make_activity_dataset(&cfg).unwrap(), make_activity_dataset(&cfg).unwrap());
    }

    #[test]
    fn empty_class_list_rejected() {
        let cfg = DatasetConfig::with_classes(vec![], 3, 1);
        assert!(matches!(make_activity_dataset(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn unknown_preset() {
        assert!(ActivityClass::preset("juggling").is_none());
    }
}
