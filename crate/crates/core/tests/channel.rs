use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::erf::erfc;

use semsense_core::channel::*;
mod common;
use common::e1;

use semsense_core::codec::{decode_payload, encode_payload, CodecConfig, SemanticBasis, SemanticCode};

fn lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Monte Carlo mean and standard error of `g(γ)` under the combined SNR law.
fn monte_carlo(shape: f64, scale: f64, n: usize, seed: u64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let dist = Gamma::new(shape, scale).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v = g(dist.sample(&mut rng));
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn pdf_examples() {
    let spec = FadingSpec::rayleigh(1, 0.0);
    assert!((snr_pdf(&spec, 0.0).unwrap() - 1.0).abs() < 1e-12);
    for g in [0.1, 1.0, 3.7] {
        assert!((snr_pdf(&spec, g).unwrap() - (-g as f64).exp()).abs() < 1e-12);
    }
    for n in 1..4 {
        for db in [-5.0, 0.0, 7.0, 15.0] {
            for g in [0.01, 0.5, 2.0, 10.0, 40.0] {
                let r = snr_pdf(&FadingSpec::rayleigh(n, db), g).unwrap();
                let m = snr_pdf(&FadingSpec::nakagami(1.0, n, db), g).unwrap();
                assert!((r - m).abs() <= 1e-12, "{n} {db} {g}");
            }
        }
    }
    assert!(snr_pdf(&FadingSpec::nakagami(0.4, 1, 0.0), 1.0).is_err());
}

#[test]
fn pdf_integrates_to_one() {
    let specs = [
        FadingSpec::rayleigh(1, 0.0),
        FadingSpec::rayleigh(4, 12.0),
        FadingSpec::nakagami(0.5, 1, 3.0),
        FadingSpec::nakagami(2.0, 2, -4.0),
        FadingSpec::nakagami(10.0, 1, 20.0),
    ];
    for spec in specs {
        // γ = s² removes the shape < 1 singularity at the origin.
        let (k, theta) = spec.gamma_params().unwrap();
        let top = (theta * (k + 60.0 + 12.0 * k.sqrt())).sqrt();
        let n = 200_000;
        let h = top / n as f64;
        let g = |s: f64| 2.0 * s * snr_pdf(&spec, s * s).unwrap();
        // the integrand has a finite limit at s = 0 even when the density does not
        let mut sum = g(1e-150) + g(top);
        for i in 1..n {
            sum += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let total = sum * h / 3.0;
        assert!((total - 1.0).abs() < 1e-8, "{spec:?}: {total}");
    }
}

#[test]
fn capacity_matches_closed_form() {
    let bw = 20e6;
    for db in [-10.0, 0.0, 5.0, 10.0, 20.0, 30.0] {
        let g = lin(db);
        let oracle = bw * std::f64::consts::LOG2_E * (1.0 / g).exp() * e1(1.0 / g);
        let got = ergodic_capacity(&FadingSpec::rayleigh(1, db), bw).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-6, "{db} dB: {got} vs {oracle}");
    }
    let tiny = ergodic_capacity(&FadingSpec::rayleigh(1, -60.0), 1.0).unwrap();
    assert!(tiny < 1e-4);
}

#[test]
fn capacity_matches_monte_carlo() {
    for (i, spec) in [FadingSpec::rayleigh(2, 10.0), FadingSpec::nakagami(2.0, 1, 5.0)].iter().enumerate() {
        let (k, theta) = spec.gamma_params().unwrap();
        let (mean, se) = monte_carlo(k, theta, 10_000_000, 10 + i as u64, |g| (1.0 + g).log2());
        let got = ergodic_capacity(spec, 1.0).unwrap();
        assert!((got - mean).abs() <= 3.0 * se, "{got} vs {mean} ± {se}");
    }
}

#[test]
fn bpsk_rayleigh_closed_form() {
    for db in [-10.0, 0.0, 5.0, 10.0, 20.0, 30.0] {
        let g = lin(db);
        let oracle = 0.5 * (1.0 - (g / (1.0 + g)).sqrt());
        let got = average_bep(&FadingSpec::rayleigh(1, db), &ModulationScheme::bpsk()).unwrap();
        assert!((got - oracle).abs() < 1e-8, "{db} dB: {got} vs {oracle}");
    }
}

#[test]
fn bpsk_nakagami_monte_carlo() {
    let spec = FadingSpec::nakagami(2.0, 2, 3.0);
    let (k, theta) = spec.gamma_params().unwrap();
    let (mean, se) = monte_carlo(k, theta, 2_000_000, 3, |g| 0.5 * erfc(g.sqrt()));
    let got = average_bep(&spec, &ModulationScheme::bpsk()).unwrap();
    assert!((got - mean).abs() <= 3.0 * se, "{got} vs {mean} ± {se}");
}

#[test]
fn bep_limits_and_orderings() {
    for m in ModulationScheme::presets() {
        let low = average_bep(&FadingSpec::rayleigh(1, -80.0), &m).unwrap();
        assert!((low - 0.5).abs() < 1e-3, "{}: {low}", m.name);
    }
    let spec = FadingSpec::rayleigh(1, 10.0);
    let bep = |m: ModulationScheme| average_bep(&spec, &m).unwrap();
    assert!(bep(ModulationScheme::bpsk()) < bep(ModulationScheme::dpsk()));
    assert!(bep(ModulationScheme::dpsk()) < bep(ModulationScheme::on_bfsk()));

    let models = [
        FadingModel::Rayleigh,
        FadingModel::Nakagami { m: 2.0 },
        FadingModel::Nakagami { m: 5.0 },
        FadingModel::Nakagami { m: 10.0 },
    ];
    for m in ModulationScheme::presets() {
        for db in [0.0, 10.0, 20.0] {
            let beps: Vec<f64> = models.iter().map(|&f| average_bep(&FadingSpec::new(f, 1, db), &m).unwrap()).collect();
            assert!(beps.windows(2).all(|w| w[1] < w[0]), "{} {db}: {beps:?}", m.name);
        }
    }
}

#[test]
fn monotone_in_mean_snr() {
    let grid: Vec<f64> = (0..20).map(|i| -10.0 + 2.0 * i as f64).collect();
    for model in [FadingModel::Rayleigh, FadingModel::Nakagami { m: 2.0 }, FadingModel::Nakagami { m: 10.0 }] {
        for branches in [1, 3] {
            let specs: Vec<FadingSpec> = grid.iter().map(|&db| FadingSpec::new(model, branches, db)).collect();
            for m in ModulationScheme::presets() {
                let beps: Vec<f64> = specs.iter().map(|s| average_bep(s, &m).unwrap()).collect();
                assert!(beps.windows(2).all(|w| w[1] < w[0]), "{model:?} {}", m.name);
            }
            let caps: Vec<f64> = specs.iter().map(|s| ergodic_capacity(s, 1.0).unwrap()).collect();
            assert!(caps.windows(2).all(|w| w[1] > w[0]));
        }
    }
}

#[test]
fn capacity_linear_in_bandwidth() {
    let spec = FadingSpec::nakagami(5.0, 2, 8.0);
    let unit = ergodic_capacity(&spec, 1.0).unwrap();
    for bw in [1e3, 2e6, 20e6, 160e6] {
        let c = ergodic_capacity(&spec, bw).unwrap();
        assert!((c - unit * bw).abs() <= 1e-12 * c);
    }
}

#[test]
fn link_budget_sets_mean_snr() {
    let budget = LinkBudget {
        transmit_power_dbw: -40.0,
        distance_m: 20.0,
        path_loss_exp: 3.0,
        noise_power_dbw: -100.0,
    };
    let spec = FadingSpec::with_link_budget(FadingModel::Rayleigh, 1, budget);
    let db = -40.0 - 30.0 * 20f64.log10() + 100.0;
    assert!((spec.mean_snr().unwrap() - db).abs() < 1e-12);
    let direct = FadingSpec::rayleigh(1, db);
    assert_eq!(average_bep(&spec, &ModulationScheme::dpsk()).unwrap(), average_bep(&direct, &ModulationScheme::dpsk()).unwrap());
    let both = FadingSpec {
        mean_snr_db: Some(3.0),
        ..spec
    };
    assert!(both.validate().is_err());
}

#[test]
fn transmission_times() {
    assert!((transmission_time(7200, 7e6).unwrap() - 1.0286e-3).abs() < 1e-7);
    assert!((transmission_time(96_000, 5e6).unwrap() - 19.2e-3).abs() < 1e-12);
    assert_eq!(transmission_time(0, 5e6).unwrap(), 0.0);
    assert!(transmission_time(10, 0.0).is_err());
}

fn ones(bytes: &[u8]) -> u64 {
    bytes.iter().map(|b| u64::from(b.count_ones())).sum()
}

#[test]
fn corruption_statistics() {
    let payload = vec![0u8; 125_000];
    assert_eq!(corrupt_payload(&payload, 0.0, 1).unwrap(), payload);
    let half = corrupt_payload(&payload, 0.5, 1).unwrap();
    let frac = ones(&half) as f64 / 1e6;
    assert!((frac - 0.5).abs() <= 0.002, "{frac}");
    let small = corrupt_payload(&payload, 0.01, 2).unwrap();
    let frac = ones(&small) as f64 / 1e6;
    assert!((frac - 0.01).abs() <= 4.0 * (0.01f64 * 0.99 / 1e6).sqrt(), "{frac}");
    assert_eq!(corrupt_payload(&payload, 0.2, 9).unwrap(), corrupt_payload(&payload, 0.2, 9).unwrap());
    assert!(corrupt_payload(&payload, 0.6, 0).is_err());
    assert!(corrupt_payload(&payload, -0.1, 0).is_err());
}

#[test]
fn corrupted_code_is_repaired() {
    let cfg = CodecConfig::default();
    let code = SemanticCode::new(
        (0..8).map(|i| SemanticBasis::new(0.5 + 0.1 * i as f64, 5.0 + 9.0 * i as f64, 0.3 * i as f64)).collect(),
        1.2,
        600.0,
        600,
        0.05,
    );
    let bytes = encode_payload(&code, &cfg).unwrap();
    let mut dropped_any = false;
    for seed in 0..200 {
        let bad = corrupt_payload(&bytes, 0.05, seed).unwrap();
        let d = decode_payload(&bad, 32).unwrap();
        dropped_any |= d.dropped > 0;
        if let Some(c) = d.code {
            assert_eq!(c.order + d.dropped, 8);
            for b in &c.bases {
                assert!(b.amplitude.is_finite() && (0.0..=1e6).contains(&b.amplitude));
                assert!(b.frequency_hz.is_finite() && (0.0..=c.sample_rate_hz / 2.0).contains(&b.frequency_hz));
                assert!(b.phase_rad.is_finite());
            }
        } else {
            assert_eq!(d.dropped, 8);
        }
    }
    assert!(dropped_any);
}

#[test]
fn sweep_table() {
    let rows = sweep(&[FadingModel::Rayleigh, FadingModel::Nakagami { m: 2.0 }], &ModulationScheme::presets(), &[0.0, 10.0], 1, 20e6).unwrap();
    assert_eq!(rows.len(), 2 * 4 * 2);
    let csv = sweep_csv(&rows);
    assert_eq!(csv.lines().next(), Some("snr_db,model,modulation,bep,capacity_bps"));
    assert_eq!(csv.lines().count(), rows.len() + 1);
}

proptest! {
    #[test]
    fn flips_are_nested_and_reproducible(len in 1usize..300, p in 0.0f64..0.5, q in 0.0f64..0.5, seed in any::<u64>()) {
        let payload = vec![0u8; len];
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let a = corrupt_payload(&payload, lo, seed).unwrap();
        let b = corrupt_payload(&payload, hi, seed).unwrap();
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x & !y == 0));
        prop_assert_eq!(corrupt_payload(&payload, hi, seed).unwrap(), b);
    }

    #[test]
    fn bep_is_a_probability(db in -30.0f64..40.0, m in 0.5f64..20.0, branches in 1usize..5, t1 in 0.1f64..3.0, t2 in 0.1f64..3.0) {
        let modulation = ModulationScheme::custom("x", t1, t2).unwrap();
        let e = average_bep(&FadingSpec::nakagami(m, branches, db), &modulation).unwrap();
        prop_assert!((0.0..=0.5).contains(&e));
        let c = ergodic_capacity(&FadingSpec::nakagami(m, branches, db), 1.0).unwrap();
        prop_assert!(c >= 0.0);
    }
}
