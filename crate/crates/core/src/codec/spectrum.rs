use std::f64::consts::FRAC_PI_2;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{wrap_phase, CodecConfig, SemanticBasis};
use crate::error::{Error, Result};
use crate::signal_model::CfrPowerTrace;

/// Normal-consistency factor turning a raw MAD into a standard deviation.
const MAD_SCALE: f64 = 1.482_602_218_505_602;
const PEAK_MADS: f64 = 4.0;
/// Peaks below this fraction of the strongest bin are treated as leakage
/// sidelobes; weaker tones are picked up later from the residual.
const RELATIVE_FLOOR: f64 = 0.15;

/// One-sided FFT of a real series (bins `0..=N/2`).
pub(crate) struct Spectrum {
    pub bins: Vec<Complex64>,
    pub magnitude: Vec<f64>,
    pub n: usize,
    pub rate: f64,
}

impl Spectrum {
    pub fn of(x: &[f64], rate: f64) -> Self {
        let n = x.len();
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        buf.truncate(n / 2 + 1);
        let magnitude = buf.iter().map(|c| c.norm()).collect();
        Self {
            bins: buf,
            magnitude,
            n,
            rate,
        }
    }

    /// Last bin that can seed a sine basis. On an even-length series the
    /// Nyquist bin samples `sin` only at its zeros, so it is excluded.
    pub fn last_seed_bin(&self) -> usize {
        let last = self.magnitude.len() - 1;
        if self.n % 2 == 0 { last - 1 } else { last }
    }

    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.rate / self.n as f64
    }

    /// Sinusoid seed read off bin `k`, expressed for the sine model.
    pub fn seed(&self, k: usize) -> SemanticBasis {
        let amp = 2.0 * self.magnitude[k] / self.n as f64;
        SemanticBasis::new(amp, self.freq(k), wrap_phase(self.bins[k].arg() + FRAC_PI_2))
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Magnitudes `|X_k|` for `k = 0..=N/2` with their frequencies.
pub fn magnitude_spectrum(trace: &CfrPowerTrace) -> Vec<(f64, f64)> {
    let s = Spectrum::of(&trace.samples, trace.sample_rate_hz);
    (0..s.magnitude.len()).map(|k| (s.freq(k), s.magnitude[k])).collect()
}

/// Subtract the sample mean; returns the centered trace and the mean.
pub fn remove_dc(trace: &CfrPowerTrace) -> Result<(CfrPowerTrace, f64)> {
    if trace.is_empty() {
        return Err(Error::EmptyInput("cannot remove DC from an empty trace".into()));
    }
    let n = trace.samples.len() as f64;
    let mean = trace.samples.iter().sum::<f64>() / n;
    let mut centered = trace.clone();
    centered.samples.iter_mut().for_each(|s| *s -= mean);
    // Second pass removes the rounding residue of the first.
    let resid = centered.samples.iter().sum::<f64>() / n;
    centered.samples.iter_mut().for_each(|s| *s -= resid);
    Ok((centered, mean + resid))
}

/// Count spectral peaks above `median + 4·MAD` and seed one basis per peak.
///
/// Peaks are local maxima strictly between DC and Nyquist of the magnitude spectrum; the strongest
/// `max_order` are kept. When nothing clears the threshold the global
/// maximum is used, so the order is always at least one.
pub fn estimate_order(centered: &CfrPowerTrace, cfg: &CodecConfig) -> (usize, Vec<SemanticBasis>) {
    let spec = Spectrum::of(&centered.samples, centered.sample_rate_hz);
    let mag = &spec.magnitude;
    if spec.n < 3 {
        return (1, vec![SemanticBasis::new(0.0, 0.0, 0.0)]);
    }
    let last = spec.last_seed_bin();
    let mut body: Vec<f64> = mag[1..].to_vec();
    let med = median(&mut body);
    let mut dev: Vec<f64> = mag[1..].iter().map(|m| (m - med).abs()).collect();
    let top = mag[1..].iter().copied().fold(0.0, f64::max);
    let threshold = (med + PEAK_MADS * MAD_SCALE * median(&mut dev)).max(RELATIVE_FLOOR * top);
    let mut peaks: Vec<usize> = (1..=last)
        .filter(|&k| {
            let left = mag[k - 1];
            let right = mag.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
            mag[k] > left && mag[k] >= right && mag[k] > threshold
        })
        .collect();
    if peaks.is_empty() {
        let k = (1..=last).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).expect("non-empty");
        peaks.push(k);
    }
    peaks.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]));
    peaks.truncate(cfg.max_order.max(1));
    let seeds: Vec<SemanticBasis> = peaks.iter().map(|&k| spec.seed(k)).collect();
    (seeds.len(), seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    fn sine(n: usize, rate: f64, a: f64, f: f64, p: f64) -> Vec<f64> {
        (0..n).map(|i| a * (TAU * f * i as f64 / rate + p).sin()).collect()
    }

    #[test]
    fn constant_trace() {
        let (c, m) = remove_dc(&CfrPowerTrace::scalar(vec![5.0; 10], 1.0)).unwrap();
        assert_eq!(m, 5.0);
        assert!(c.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn whole_period_sine_has_no_dc() {
        let x = sine(600, 600.0, 1.0, 10.0, 0.3);
        let (c, m) = remove_dc(&CfrPowerTrace::scalar(x.clone(), 600.0)).unwrap();
        assert!(m.abs() < 1e-12);
        assert!(c.samples.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn centered_mean_is_zero() {
        let x: Vec<f64> = (0..1000).map(|i| 1e6 + (i as f64 * 0.37).sin()).collect();
        let input_rms = (x.iter().map(|v| v * v).sum::<f64>() / 1000.0).sqrt();
        let (c, _) = remove_dc(&CfrPowerTrace::scalar(x, 1.0)).unwrap();
        let mean = c.samples.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() <= 1e-12 * input_rms);
    }

    #[test]
    fn empty_rejected() {
        assert!(remove_dc(&CfrPowerTrace::scalar(vec![], 1.0)).is_err());
    }

    #[test]
    fn single_tone_order_one() {
        let t = CfrPowerTrace::scalar(sine(600, 600.0, 1.0, 10.0, 0.7), 600.0);
        let (order, seeds) = estimate_order(&t, &CodecConfig::default());
        assert_eq!(order, 1);
        assert!((seeds[0].frequency_hz - 10.0).abs() <= 1.0);
        assert!((seeds[0].amplitude - 1.0).abs() < 1e-9);
        assert!((seeds[0].phase_rad - 0.7).abs() < 1e-9);
    }

    #[test]
    fn white_noise_falls_back_to_order_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..600).map(|_| noise.sample(&mut rng)).collect();
        let (order, _) = estimate_order(&CfrPowerTrace::scalar(x, 600.0), &CodecConfig::default());
        assert_eq!(order, 1);
    }

    #[test]
    fn max_order_caps_peaks() {
        let mut x = vec![0.0; 600];
        for (i, f) in [10.0, 40.0, 70.0, 100.0].iter().enumerate() {
            for (s, v) in x.iter_mut().zip(sine(600, 600.0, 1.0 + i as f64, *f, 0.0)) {
                *s += v;
            }
        }
        let cfg = CodecConfig {
            max_order: 2,
            ..CodecConfig::default()
        };
        let (order, seeds) = estimate_order(&CfrPowerTrace::scalar(x, 600.0), &cfg);
        assert_eq!(order, 2);
        assert_eq!(seeds[0].frequency_hz, 100.0);
        assert_eq!(seeds[1].frequency_hz, 70.0);
    }
}
