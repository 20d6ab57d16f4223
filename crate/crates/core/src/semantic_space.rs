//! Activity recognition in the three-axis semantic space.
//!
//! A code with `B` bases maps to the centroid of its per-basis points
//! `(F_r / B, ln(A_r / B), B)`. Classification is k-nearest-neighbour on
//! axis-standardized coordinates; results from several links are fused by
//! majority vote.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::SemanticCode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticPoint {
    /// Mean frequency per basis (Hz).
    pub x: f64,
    /// Mean log amplitude per basis.
    pub y: f64,
    /// Number of bases.
    pub z: f64,
}

impl SemanticPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn axes(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub point: SemanticPoint,
    pub label: String,
}

/// Map a code to its semantic-space centroid. Phases are ignored.
pub fn to_point(code: &SemanticCode) -> Result<SemanticPoint> {
    if code.bases.is_empty() || code.order != code.bases.len() {
        return Err(Error::InvalidCode("code has no bases".into()));
    }
    let b = code.order as f64;
    let mut x = 0.0;
    let mut y = 0.0;
    for basis in &code.bases {
        if !(basis.amplitude > 0.0) || !basis.amplitude.is_finite() {
            return Err(Error::InvalidCode(format!("amplitude {} has no logarithm", basis.amplitude)));
        }
        x += basis.frequency_hz / b;
        y += (basis.amplitude / b).ln();
    }
    Ok(SemanticPoint::new(x / b, y / b, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub points: Vec<LabeledPoint>,
    /// Per-axis sample standard deviation; degenerate axes use 1.
    pub axis_scales: [f64; 3],
    pub labels: Vec<String>,
}

fn sample_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 1.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        sd
    } else {
        1.0
    }
}

impl TrainingSet {
    /// Build from labeled codes; the label alphabet is taken from the data.
    pub fn build(codes: &[(SemanticCode, String)]) -> Result<Self> {
        let mut alphabet: Vec<String> = codes.iter().map(|(_, l)| l.clone()).collect();
        alphabet.sort();
        alphabet.dedup();
        Self::build_with_alphabet(codes, &alphabet)
    }

    /// Build against a fixed alphabet; every label needs at least one code.
    pub fn build_with_alphabet(codes: &[(SemanticCode, String)], alphabet: &[String]) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptyInput("no training codes".into()));
        }
        let points = codes
            .iter()
            .map(|(code, label)| {
                if !alphabet.contains(label) {
                    return Err(Error::InvalidCode(format!("label {label:?} is not in the alphabet")));
                }
                Ok(LabeledPoint {
                    point: to_point(code)?,
                    label: label.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_points(points, alphabet)
    }

    pub fn from_points(points: Vec<LabeledPoint>, alphabet: &[String]) -> Result<Self> {
        if let Some(empty) = alphabet.iter().find(|l| !points.iter().any(|p| &p.label == *l)) {
            return Err(Error::EmptyClass(empty.clone()));
        }
        let axis = |i: usize| sample_std(points.iter().map(move |p| p.point.axes()[i]));
        let axis_scales = [axis(0), axis(1), axis(2)];
        Ok(Self {
            points,
            axis_scales,
            labels: alphabet.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared standardized distance between two points.
    pub fn distance2(&self, a: &SemanticPoint, b: &SemanticPoint) -> f64 {
        a.axes()
            .iter()
            .zip(b.axes())
            .zip(self.axis_scales)
            .map(|((u, v), s)| ((u - v) / s).powi(2))
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("training set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidCode(format!("training set: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
    pub tie_break_seed: u64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 3,
            tie_break_seed: 0,
        }
    }
}

/// Labels with the highest count, in lexical order.
fn modal_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts.into_iter().filter(|&(_, c)| c == best).map(|(l, _)| l).collect()
}

fn pick(tied: &[&str], seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tied[rng.random_range(0..tied.len())].to_string()
}

/// Majority label among the `k` nearest training points.
///
/// Distance ties at the k-th neighbour are broken by label, then by
/// coordinates, so the result does not depend on training-set order.
pub fn classify(test: &SemanticPoint, ts: &TrainingSet, cfg: &KnnConfig) -> Result<String> {
    if cfg.k == 0 || cfg.k > ts.len() {
        return Err(Error::InvalidConfig(format!("k = {} with {} training points", cfg.k, ts.len())));
    }
    let mut ranked: Vec<(f64, &LabeledPoint)> = ts.points.iter().map(|p| (ts.distance2(test, &p.point), p)).collect();
    let key = |a: &(f64, &LabeledPoint), b: &(f64, &LabeledPoint)| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.label.cmp(&b.1.label))
            .then_with(|| a.1.point.x.total_cmp(&b.1.point.x))
            .then_with(|| a.1.point.y.total_cmp(&b.1.point.y))
            .then_with(|| a.1.point.z.total_cmp(&b.1.point.z))
    };
    if cfg.k < ranked.len() {
        ranked.select_nth_unstable_by(cfg.k - 1, key);
    }
    let tied = modal_labels(ranked[..cfg.k].iter().map(|(_, p)| p.label.as_str()));
    if tied.len() == 1 {
        return Ok(tied[0].to_string());
    }
    Ok(pick(&tied, cfg.tie_break_seed))
}

/// Fuse per-link labels by majority.
///
/// On a tie the previous recognition result wins if it is among the tied
/// labels; otherwise one tied label is drawn uniformly using `seed`.
pub fn vote(link_results: &[String], previous: Option<&str>, seed: u64) -> Result<String> {
    if link_results.is_empty() {
        return Err(Error::EmptyInput("no link results to vote on".into()));
    }
    let tied = modal_labels(link_results.iter().map(String::as_str));
    if tied.len() == 1 {
        return Ok(tied[0].to_string());
    }
    if let Some(prev) = previous.filter(|p| tied.contains(p)) {
        return Ok(prev.to_string());
    }
    Ok(pick(&tied, seed))
}

/// One row of a classification report; `predicted_label` is `None` when
/// every link abstained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub trace_id: usize,
    pub true_label: String,
    pub predicted_label: Option<String>,
    pub link_count: usize,
}

impl ClassificationRecord {
    pub fn is_correct(&self) -> bool {
        self.predicted_label.as_deref() == Some(self.true_label.as_str())
    }
}

pub fn classification_report_csv(rows: &[ClassificationRecord]) -> String {
    let mut out = String::from("trace_id,true_label,predicted_label,link_count\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.trace_id,
            r.true_label,
            r.predicted_label.as_deref().unwrap_or(""),
            r.link_count
        ));
    }
    out
}

/// Fraction of rows whose prediction matches the true label.
pub fn accuracy(rows: &[ClassificationRecord]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.is_correct()).count() as f64 / rows.len() as f64
}
