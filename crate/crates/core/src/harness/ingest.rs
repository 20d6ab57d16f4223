use std::path::Path;

use crate::error::Result;
use crate::signal_model::io::{read_manifest, read_trace_csv, MANIFEST_FILE};
use crate::signal_model::CfrPowerTrace;

/// Load traces from a single CSV file, a dataset directory, or a manifest
/// file. Manifest labels take precedence over labels inside the CSVs.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<CfrPowerTrace>> {
    let path = path.as_ref();
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else if path.extension().is_some_and(|e| e == "json") {
        path.to_path_buf()
    } else {
        return Ok(vec![read_trace_csv(path)?]);
    };
    let manifest = read_manifest(&manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .traces
        .iter()
        .map(|entry| Ok(read_trace_csv(dir.join(&entry.file))?.with_label(entry.label.clone())))
        .collect()
}

/// Like [`ingest_csv`], keeping only traces that carry a label.
pub fn ingest_labeled(path: impl AsRef<Path>) -> Result<Vec<(CfrPowerTrace, String)>> {
    Ok(ingest_csv(path)?
        .into_iter()
        .filter_map(|t| {
            let label = t.label.clone().filter(|l| !l.is_empty())?;
            Some((t, label))
        })
        .collect())
}
