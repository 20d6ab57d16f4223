use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::{sub_seed, Outputs};
use crate::channel::{self, corrupt_payload, FadingSpec, LinkBudget, ModulationScheme};
use crate::codec::{self, decode_payload, encode_payload, payload_bits, CodecConfig, SemanticCode};
use crate::contest::{
    self, first_prize_sweep, first_prize_sweep_csv, market_summary, prize_grid, AwardScheme, MarketReport, RiskAttitude,
};
use crate::error::{Error, Result};
use crate::semantic_space::{
    accuracy, classification_report_csv, classify, to_point, vote, ClassificationRecord, KnnConfig, TrainingSet,
};
use crate::signal_model::{link_variants, make_activity_dataset, synthesize_power, CfrPowerTrace, LabeledTrace};

const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_LINKS: u64 = 3;
const STREAM_ORDER: u64 = 4;
const STREAM_CHANNEL: u64 = 5;
const STREAM_VOTE: u64 = 6;
const STREAM_TONES: u64 = 7;

const REFERENCE_COMPRESSION: f64 = 0.2787;
const REFERENCE_UPLIFT_PCT: f64 = 27.47;
const REFERENCE_AVERSE_UPLIFT_PCT: f64 = 20.0;

fn staged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

fn encode_all(traces: &[CfrPowerTrace], cfg: &CodecConfig) -> Result<Vec<SemanticCode>> {
    traces.par_iter().map(|t| codec::encode(t, cfg)).collect()
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------- E1

struct ToneTrial {
    tones: usize,
    order: usize,
    fit_nrmse: f64,
    recovered: bool,
    roundtrip_error: f64,
}

fn tone_trial(cfg: &ExperimentConfig, trial: usize) -> Result<ToneTrial> {
    let s = &cfg.roundtrip;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(sub_seed(cfg.rng_seed, STREAM_TONES), trial as u64));
    let k = rng.random_range(1..=s.max_tones);
    let spacing = s.min_spacing_bins * s.sample_rate_hz / s.n_samples as f64;
    let mut freqs: Vec<f64> = Vec::with_capacity(k);
    let mut attempts = 0;
    while freqs.len() < k {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::ConfigInvalid("roundtrip: could not place tones with the requested spacing".into()));
        }
        let f = rng.random_range(s.frequency_range_hz[0]..s.frequency_range_hz[1]);
        if freqs.iter().all(|g| (f - g).abs() >= spacing) {
            freqs.push(f);
        }
    }
    let tones: Vec<(f64, f64, f64)> = freqs
        .iter()
        .map(|&f| {
            let a = if s.amplitude_range[0] == s.amplitude_range[1] {
                s.amplitude_range[0]
            } else {
                rng.random_range(s.amplitude_range[0]..s.amplitude_range[1])
            };
            (a, f, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let power: f64 = tones.iter().map(|t| t.0 * t.0 / 2.0).sum();
    let noise = Normal::new(0.0, (power / 10f64.powf(s.snr_db / 10.0)).sqrt()).expect("finite noise");
    let samples = (0..s.n_samples)
        .map(|i| {
            let t = i as f64 / s.sample_rate_hz;
            2.0 + tones.iter().map(|&(a, f, p)| a * (std::f64::consts::TAU * f * t + p).sin()).sum::<f64>()
                + noise.sample(&mut rng)
        })
        .collect();
    let trace = CfrPowerTrace::scalar(samples, s.sample_rate_hz);
    let enc = codec::encode_traced(&trace, &cfg.codec)?;
    let recon = codec::reconstruct(&enc.code);
    let roundtrip_error = (codec::nrmse(&enc.denoised.samples, &recon.samples) - enc.code.fit_nrmse).abs();
    let recovered = freqs
        .iter()
        .all(|f| enc.code.bases.iter().any(|b| (b.frequency_hz - f).abs() <= s.tolerance_hz));
    Ok(ToneTrial {
        tones: k,
        order: enc.code.order,
        fit_nrmse: enc.code.fit_nrmse,
        recovered,
        roundtrip_error,
    })
}

pub(super) fn roundtrip(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let trials = staged(
        "roundtrip encode",
        (0..cfg.roundtrip.n_traces).into_par_iter().map(|i| tone_trial(cfg, i)).collect::<Result<Vec<_>>>(),
    )?;
    let n = trials.len().max(1) as f64;
    let threshold = cfg.codec.fit_error_threshold;
    let mut csv = String::from("trial,tones,order,fit_nrmse,frequencies_recovered\n");
    for (i, t) in trials.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{},{}\n", t.tones, t.order, t.fit_nrmse, t.recovered));
    }
    out.write("e1_trials.csv", &csv)?;
    out.metric("nrmse_pass_rate", trials.iter().filter(|t| t.fit_nrmse <= threshold).count() as f64 / n);
    out.metric("frequency_recovery_rate", trials.iter().filter(|t| t.recovered).count() as f64 / n);
    out.metric(
        "trial_pass_rate",
        trials.iter().filter(|t| t.recovered && t.fit_nrmse <= threshold).count() as f64 / n,
    );
    out.metric("mean_fit_nrmse", trials.iter().map(|t| t.fit_nrmse).sum::<f64>() / n);
    out.metric("max_roundtrip_error", trials.iter().map(|t| t.roundtrip_error).fold(0.0, f64::max));
    out.metric(
        "mean_extra_bases",
        trials.iter().map(|t| t.order as f64 - t.tones as f64).sum::<f64>() / n,
    );
    Ok(())
}

// ---------------------------------------------------------------- E2

fn train_set(cfg: &ExperimentConfig) -> Result<Vec<LabeledTrace>> {
    let d = &cfg.dataset;
    make_activity_dataset(&d.dataset_config(d.train_per_class, sub_seed(cfg.rng_seed, STREAM_TRAIN))?)
}

fn test_set(cfg: &ExperimentConfig) -> Result<Vec<LabeledTrace>> {
    let d = &cfg.dataset;
    make_activity_dataset(&d.dataset_config(d.test_per_class, sub_seed(cfg.rng_seed, STREAM_TEST))?)
}

pub(super) fn compression(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let data = staged("dataset", train_set(cfg))?;
    let traces: Vec<CfrPowerTrace> = data.iter().map(|t| t.trace.clone()).collect();
    let codes = staged("encode", encode_all(&traces, &cfg.codec))?;
    let raw = cfg.compression.raw_bits(cfg.dataset.n_subcarriers) as f64;
    let mut csv = String::from("trace_id,label,order,payload_bits,raw_bits,ratio\n");
    let mut per_class: std::collections::BTreeMap<&str, (f64, f64, usize)> = Default::default();
    let mut total_ratio = 0.0;
    for (i, (t, code)) in data.iter().zip(&codes).enumerate() {
        let bits = payload_bits(code, &cfg.codec) as f64;
        let ratio = bits / raw;
        total_ratio += ratio;
        let e = per_class.entry(t.label()).or_default();
        e.0 += code.order as f64;
        e.1 += ratio;
        e.2 += 1;
        csv.push_str(&format!("{i},{},{},{bits},{raw},{ratio}\n", t.label(), code.order));
    }
    out.write("e2_compression.csv", &csv)?;
    out.metric("mean_ratio", total_ratio / codes.len().max(1) as f64);
    out.metric("reference_ratio", REFERENCE_COMPRESSION);
    out.metric("raw_unit_bits", raw);
    for (label, (orders, ratios, n)) in per_class {
        out.metric(format!("mean_order_{label}"), orders / n as f64);
        out.metric(format!("mean_ratio_{label}"), ratios / n as f64);
    }
    Ok(())
}

// ---------------------------------------------------------------- E3

/// Serialized codes of one test capture, one payload per receiving link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPayloads {
    pub label: String,
    pub links: Vec<Vec<u8>>,
}

/// Classify every capture by majority vote over its links.
///
/// With `bep = Some(p)` each link payload first passes through the binary
/// channel; link `l` of capture `i` always uses the same flip stream, so
/// corruption is nested across error probabilities. A link whose decoded
/// code has no usable basis abstains. Ties fall back to the previous
/// capture's result.
pub fn recognize(
    ts: &TrainingSet,
    captures: &[LinkPayloads],
    bep: Option<f64>,
    codec: &CodecConfig,
    knn: &KnnConfig,
    seed: u64,
) -> Result<Vec<ClassificationRecord>> {
    let channel_seed = sub_seed(seed, STREAM_CHANNEL);
    let vote_seed = sub_seed(seed, STREAM_VOTE);
    let mut previous: Option<String> = None;
    let mut rows = Vec::with_capacity(captures.len());
    for (i, capture) in captures.iter().enumerate() {
        let mut labels = Vec::with_capacity(capture.links.len());
        for (l, payload) in capture.links.iter().enumerate() {
            let received = match bep {
                Some(p) => corrupt_payload(payload, p, sub_seed(channel_seed, (i * capture.links.len() + l) as u64))?,
                None => payload.clone(),
            };
            let decoded = decode_payload(&received, codec.feature_bits_per_value)?;
            let Some(point) = decoded.code.as_ref().and_then(|c| to_point(c).ok()) else {
                continue;
            };
            labels.push(classify(&point, ts, knn)?);
        }
        let predicted = if labels.is_empty() {
            None
        } else {
            Some(vote(&labels, previous.as_deref(), sub_seed(vote_seed, i as u64))?)
        };
        if predicted.is_some() {
            previous = predicted.clone();
        }
        rows.push(ClassificationRecord {
            trace_id: i,
            true_label: capture.label.clone(),
            predicted_label: predicted,
            link_count: labels.len(),
        });
    }
    Ok(rows)
}

/// Spearman rank correlation with average ranks for ties. A constant
/// series has no ordering to contradict, so the correlation is reported
/// as 1 when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 1.0;
    }
    cov / (vx * vy).sqrt()
}

struct RecognitionData {
    train: Vec<LabeledTrace>,
    /// Test captures in presentation order, each with its link traces.
    tests: Vec<(String, Vec<CfrPowerTrace>)>,
}

fn recognition_data(cfg: &ExperimentConfig) -> Result<RecognitionData> {
    let train = train_set(cfg)?;
    let test = test_set(cfg)?;
    let link_seed = sub_seed(cfg.rng_seed, STREAM_LINKS);
    let mut tests = test
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let traces = link_variants(&t.scene, cfg.recognition.link_count, sub_seed(link_seed, i as u64))
                .iter()
                .map(synthesize_power)
                .collect::<Result<Vec<_>>>()?;
            Ok((t.label().to_string(), traces))
        })
        .collect::<Result<Vec<_>>>()?;
    tests.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(cfg.rng_seed, STREAM_ORDER)));
    Ok(RecognitionData { train, tests })
}

fn build_at_rate(
    cfg: &ExperimentConfig,
    data: &RecognitionData,
    factor: usize,
) -> Result<(TrainingSet, Vec<LinkPayloads>)> {
    let train: Vec<CfrPowerTrace> = data.train.iter().map(|t| t.trace.decimate(factor)).collect::<Result<_>>()?;
    let codes = encode_all(&train, &cfg.codec)?;
    let labeled: Vec<(SemanticCode, String)> =
        codes.into_iter().zip(&data.train).map(|(c, t)| (c, t.label().to_string())).collect();
    let alphabet: Vec<String> = cfg.dataset.activity_classes()?.into_iter().map(|c| c.label).collect();
    let ts = TrainingSet::build_with_alphabet(&labeled, &alphabet)?;
    let captures = data
        .tests
        .par_iter()
        .map(|(label, links)| {
            let links = links
                .iter()
                .map(|t| encode_payload(&codec::encode(&t.decimate(factor)?, &cfg.codec)?, &cfg.codec))
                .collect::<Result<Vec<_>>>()?;
            Ok(LinkPayloads {
                label: label.clone(),
                links,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ts, captures))
}

#[derive(Serialize)]
struct PowerPoint {
    transmit_power_dbw: f64,
    mean_snr_db: f64,
    model: String,
    modulation: String,
    bep: f64,
    accuracy: f64,
}

pub(super) fn recognition(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let r = &cfg.recognition;
    let data = staged("dataset", recognition_data(cfg))?;
    let base_rate = cfg.dataset.sample_rate_hz;

    let mut rate_csv = String::from("sample_rate_hz,accuracy\n");
    for &rate in &r.sample_rates_hz {
        let factor = (base_rate / rate).round() as usize;
        let (ts, captures) = staged("encode", build_at_rate(cfg, &data, factor))?;
        let rows = staged("classify", recognize(&ts, &captures, None, &cfg.codec, &cfg.knn, cfg.rng_seed))?;
        let acc = accuracy(&rows);
        rate_csv.push_str(&format!("{},{acc}\n", fmt_num(rate)));
        out.metric(format!("accuracy_rate_{}hz", fmt_num(rate)), acc);
    }
    out.write("e3_rate.csv", &rate_csv)?;

    let (ts, captures) = staged("encode", build_at_rate(cfg, &data, 1))?;
    let rows = staged("classify", recognize(&ts, &captures, None, &cfg.codec, &cfg.knn, cfg.rng_seed))?;
    out.metric("accuracy_clean", accuracy(&rows));
    out.write("e3_classification.csv", &classification_report_csv(&rows))?;
    let single: Vec<LinkPayloads> = captures
        .iter()
        .map(|c| LinkPayloads {
            label: c.label.clone(),
            links: c.links[..1].to_vec(),
        })
        .collect();
    let single_rows = staged("classify", recognize(&ts, &single, None, &cfg.codec, &cfg.knn, cfg.rng_seed))?;
    out.metric("accuracy_single_link", accuracy(&single_rows));
    if r.skip_channel {
        return Ok(());
    }

    let modulations = r.modulation_schemes()?;
    let combos: Vec<(channel::FadingModel, ModulationScheme, f64)> = r
        .models
        .iter()
        .flat_map(|m| modulations.iter().flat_map(move |md| r.transmit_power_dbw.iter().map(move |&p| (*m, md.clone(), p))))
        .collect();
    let points = staged(
        "channel",
        combos
            .par_iter()
            .map(|(model, modulation, power)| {
                let budget = LinkBudget {
                    transmit_power_dbw: *power,
                    distance_m: r.distance_m,
                    path_loss_exp: r.path_loss_exp,
                    noise_power_dbw: r.noise_power_dbw,
                };
                let spec = FadingSpec::with_link_budget(*model, r.n_branches, budget);
                let bep = channel::average_bep(&spec, modulation)?;
                let rows = recognize(&ts, &captures, Some(bep), &cfg.codec, &cfg.knn, cfg.rng_seed)?;
                Ok(PowerPoint {
                    transmit_power_dbw: *power,
                    mean_snr_db: budget.mean_snr_db(),
                    model: model.name(),
                    modulation: modulation.name.clone(),
                    bep,
                    accuracy: accuracy(&rows),
                })
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let mut csv = String::from("transmit_power_dbw,mean_snr_db,model,modulation,bep,accuracy\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{},{:e},{}\n",
            fmt_num(p.transmit_power_dbw),
            fmt_num(p.mean_snr_db),
            p.model,
            p.modulation,
            p.bep,
            p.accuracy
        ));
        let key = format!("{}_{}_{}dbw", p.model, p.modulation, fmt_num(p.transmit_power_dbw));
        out.metric(format!("accuracy_{key}"), p.accuracy);
        out.metric(format!("bep_{key}"), p.bep);
    }
    out.write("e3_power.csv", &csv)?;

    let mut min_rho = f64::INFINITY;
    let mut violations = 0usize;
    for chunk in points.chunks(r.transmit_power_dbw.len().max(1)) {
        let mut by_power: Vec<&PowerPoint> = chunk.iter().collect();
        by_power.sort_by(|a, b| a.transmit_power_dbw.total_cmp(&b.transmit_power_dbw));
        violations += by_power.windows(2).filter(|w| w[1].accuracy < w[0].accuracy).count();
        let x: Vec<f64> = chunk.iter().map(|p| p.transmit_power_dbw).collect();
        let y: Vec<f64> = chunk.iter().map(|p| p.accuracy).collect();
        let rho = spearman(&x, &y);
        min_rho = min_rho.min(rho);
        out.metric(format!("spearman_{}_{}", chunk[0].model, chunk[0].modulation), rho);
    }
    if min_rho.is_finite() {
        out.metric("spearman_power_min", min_rho);
    }
    out.metric("power_monotone_violations", violations as f64);

    let per_curve = r.transmit_power_dbw.len();
    let snrs: Vec<f64> = points.iter().take(per_curve).map(|p| p.mean_snr_db).collect();
    let sweep = staged("channel", channel::sweep(&r.models, &modulations, &snrs, r.n_branches, r.bandwidth_hz))?;
    out.write("e3_channel.csv", &channel::sweep_csv(&sweep))?;
    Ok(())
}

// ---------------------------------------------------------------- E4

fn uplift_pct(new: f64, old: f64) -> f64 {
    100.0 * (new - old) / old
}

pub(super) fn award_sweep(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let m = &cfg.market;
    let profiles = m.profiles();
    for (tag, semantic) in [("semantic", true), ("raw", false)] {
        let market = m.market(RiskAttitude::Neutral, semantic);
        let rows = staged("contest", first_prize_sweep(&profiles, &market, &m.first_prize_shares))?;
        out.write(&format!("e4_sweep_{tag}.csv"), &first_prize_sweep_csv(&rows))?;
        for (share, total) in &rows {
            out.metric(format!("total_effort_{tag}_share_{}", fmt_num(*share)), *total);
        }
        if let Some((best, _)) = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
            out.metric(format!("best_share_{tag}"), *best);
        }
    }

    let market = m.market(RiskAttitude::Neutral, true);
    let wta = AwardScheme::winner_take_all(m.total_award, m.n_awards);
    let wta_result = staged("contest", market_summary(&profiles, &market, &wta))?;
    let uniform = staged(
        "contest",
        market_summary(&profiles, &market, &AwardScheme::uniform(m.total_award, m.n_awards)),
    )?;
    out.metric("uplift_wta_vs_uniform_pct", uplift_pct(wta_result.total_effort, uniform.total_effort));
    out.metric("reference_uplift_pct", REFERENCE_UPLIFT_PCT);
    out.write("e4_market.json", &MarketReport::new(&wta, &wta_result).to_json())?;

    let grid = staged("contest", prize_grid(m.total_award, m.n_awards, m.grid_step))?;
    let totals = staged(
        "contest",
        grid.par_iter()
            .map(|s| Ok(market_summary(&profiles, &market, s)?.total_effort))
            .collect::<Result<Vec<f64>>>(),
    )?;
    let (best_idx, best_total) =
        totals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, t)| (i, *t)).unwrap_or((0, 0.0));
    out.metric("grid_schemes", grid.len() as f64);
    out.metric("grid_best_first_share", grid[best_idx].prizes[0] / m.total_award);
    out.metric("grid_excess_over_wta", best_total - wta_result.total_effort);
    Ok(())
}

// ---------------------------------------------------------------- E5

#[derive(Serialize)]
struct SchemeOutcome {
    scheme: String,
    risk: RiskAttitude,
    prizes: Vec<f64>,
    total_effort: f64,
    total_expected_award: f64,
    per_transmitter: Vec<contest::TransmitterReport>,
}

pub(super) fn risk_appetite(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let m = &cfg.market;
    let profiles = m.profiles();
    let pool = m.averse_total_award;
    let averse = contest::MarketConfig {
        total_award: pool,
        ..m.market(RiskAttitude::Averse, true)
    };
    let schemes = [
        ("wta", AwardScheme::winner_take_all(pool, m.n_awards)),
        ("uniform", AwardScheme::uniform(pool, m.n_awards)),
        ("proportional", staged("contest", contest::optimal_awards(&profiles, &averse))?),
    ];
    let mut outcomes = Vec::new();
    for risk in [RiskAttitude::Neutral, RiskAttitude::Averse] {
        let market = contest::MarketConfig { risk, ..averse };
        for (name, scheme) in &schemes {
            let res = staged("contest", market_summary(&profiles, &market, scheme))?;
            let tag = match risk {
                RiskAttitude::Neutral => "neutral",
                RiskAttitude::Averse => "averse",
            };
            out.metric(format!("total_award_{name}_{tag}"), res.total_expected_award());
            out.metric(format!("total_effort_{name}_{tag}"), res.total_effort);
            outcomes.push(SchemeOutcome {
                scheme: name.to_string(),
                risk,
                prizes: scheme.prizes.clone(),
                total_effort: res.total_effort,
                total_expected_award: res.total_expected_award(),
                per_transmitter: MarketReport::new(scheme, &res).per_transmitter,
            });
        }
    }
    let get = |k: &str| out.metrics[k];
    let uplift = uplift_pct(get("total_award_proportional_averse"), get("total_award_wta_averse"));
    out.metric("uplift_proportional_vs_wta_averse_pct", uplift);
    out.metric("reference_averse_uplift_pct", REFERENCE_AVERSE_UPLIFT_PCT);
    out.metric("total_award_pool", pool);
    out.write("e5_schemes.json", &serde_json::to_string_pretty(&outcomes).expect("outcomes serialize"))?;
    Ok(())
}
