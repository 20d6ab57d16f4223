//! CSV form of a power trace and the JSON manifest for datasets.
//!
//! ```text
//! sample_rate_hz,600
//! label,walking
//! 1.0213,0.9981        <- one row per time sample, one column per subcarrier
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CfrPowerTrace, LabeledTrace};
use crate::error::{Error, Result};

pub fn trace_to_csv(trace: &CfrPowerTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sample_rate_hz,{}", trace.sample_rate_hz);
    let _ = writeln!(out, "label,{}", trace.label.as_deref().unwrap_or(""));
    for row in trace.samples.chunks(trace.n_subcarriers.max(1)) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn mismatch(line: usize, message: impl Into<String>) -> Error {
    Error::SchemaMismatch {
        line,
        message: message.into(),
    }
}

pub fn trace_from_csv(text: &str) -> Result<CfrPowerTrace> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (ln, first) = lines.next().ok_or_else(|| mismatch(1, "empty file"))?;
    let rate = match first.split_once(',') {
        Some(("sample_rate_hz", v)) => v
            .trim()
            .parse::<f64>()
            .map_err(|e| mismatch(ln, format!("bad sample rate: {e}")))?,
        _ => return Err(mismatch(ln, "expected `sample_rate_hz,<value>` header")),
    };
    if !(rate.is_finite() && rate > 0.0) {
        return Err(mismatch(ln, "sample rate must be positive"));
    }
    let (ln, second) = lines.next().ok_or_else(|| mismatch(2, "missing label header"))?;
    let label = match second.split_once(',') {
        Some(("label", v)) if v.is_empty() => None,
        Some(("label", v)) => Some(v.to_string()),
        _ => return Err(mismatch(ln, "expected `label,<name>` header")),
    };
    let mut samples = Vec::new();
    let mut width = None;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(mismatch(ln, format!("expected {w} columns, found {}", row.len())));
            }
            _ => {}
        }
        for cell in row {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| mismatch(ln, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(mismatch(ln, format!("non-finite value `{cell}`")));
            }
            samples.push(v);
        }
    }
    let n_subcarriers = width.ok_or_else(|| mismatch(3, "no samples"))?;
    Ok(CfrPowerTrace {
        samples,
        sample_rate_hz: rate,
        n_subcarriers,
        label,
    })
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &CfrPowerTrace) -> Result<()> {
    fs::write(path.as_ref(), trace_to_csv(trace)).map_err(|e| Error::io(path, e))
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<CfrPowerTrace> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path, e))?;
    trace_from_csv(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub rng_seed: u64,
    pub traces: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Write one CSV per trace plus `manifest.json` into `dir`.
pub fn write_dataset(dir: impl AsRef<Path>, traces: &[LabeledTrace], rng_seed: u64) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(traces.len());
    for (i, t) in traces.iter().enumerate() {
        let file = format!("trace_{i:05}.csv");
        write_trace_csv(dir.join(&file), &t.trace)?;
        entries.push(ManifestEntry {
            file,
            label: t.label().to_string(),
            seed: t.seed,
        });
    }
    let manifest = Manifest {
        rng_seed,
        traces: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    serde_json::from_str(&text).map_err(|e| mismatch(e.line(), format!("manifest: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let t = CfrPowerTrace {
            samples: vec![1.0, 0.1 + 0.2, -3.5e-7, 2.0, 7.25, 1e300],
            sample_rate_hz: 600.0,
            n_subcarriers: 2,
            label: Some("walking".into()),
        };
        assert_eq!(trace_from_csv(&trace_to_csv(&t)).unwrap(), t);
    }

    #[test]
    fn missing_rate_header() {
        let err = trace_from_csv("label,x\n1.0\n").unwrap_err();
        assert_eq!(
            err,
            Error::SchemaMismatch {
                line: 1,
                message: "expected `sample_rate_hz,<value>` header".into()
            }
        );
    }

    #[test]
    fn ragged_and_non_finite_rows() {
        let err = trace_from_csv("sample_rate_hz,600\nlabel,\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { line: 4, .. }));
        let err = trace_from_csv("sample_rate_hz,600\nlabel,\n1\nNaN\n").unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { line: 4, .. }));
        let err = trace_from_csv("sample_rate_hz,600\nlabel,\n1\ninf\n").unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { line: 4, .. }));
    }

    #[test]
    fn unlabeled_trace() {
        let t = trace_from_csv("sample_rate_hz,100\nlabel,\n0.5\n0.25\n").unwrap();
        assert_eq!(t.label, None);
        assert_eq!(t.samples, vec![0.5, 0.25]);
    }
}
