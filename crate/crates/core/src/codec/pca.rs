use nalgebra::{DMatrix, SymmetricEigen};

use super::CodecConfig;
use crate::error::{Error, Result};
use crate::signal_model::CfrPowerTrace;

struct Components {
    /// Eigenvalues in descending order.
    values: Vec<f64>,
    /// Matching unit eigenvectors (columns).
    vectors: DMatrix<f64>,
    means: Vec<f64>,
    centered: DMatrix<f64>,
}

fn components(trace: &CfrPowerTrace) -> Components {
    let n = trace.len();
    let s = trace.n_subcarriers;
    let mut x = DMatrix::from_row_slice(n, s, &trace.samples);
    let means: Vec<f64> = (0..s).map(|j| x.column(j).mean()).collect();
    for (j, m) in means.iter().enumerate() {
        x.column_mut(j).add_scalar_mut(-m);
    }
    let cov = x.tr_mul(&x) / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Components {
        values,
        vectors,
        means,
        centered: x,
    }
}

/// Fraction of total variance carried by each principal component.
pub fn explained_variance(trace: &CfrPowerTrace) -> Vec<f64> {
    let c = components(trace);
    let total: f64 = c.values.iter().sum();
    if total == 0.0 {
        return vec![0.0; c.values.len()];
    }
    c.values.iter().map(|v| v / total).collect()
}

/// Collapse a multi-subcarrier trace onto one principal component.
///
/// The returned series is the component score plus the projection of the
/// per-subcarrier means, so the DC level survives for `remove_dc`. Eigenvector
/// sign is chosen so the loadings sum to a non-negative value. Single
/// subcarrier traces are returned unchanged.
pub fn pca_denoise(trace: &CfrPowerTrace, cfg: &CodecConfig) -> Result<CfrPowerTrace> {
    let s = trace.n_subcarriers;
    if cfg.pca_component_index == 0 || cfg.pca_component_index > s {
        return Err(Error::InvalidIndex {
            index: cfg.pca_component_index,
            available: s,
        });
    }
    if s == 1 {
        return Ok(trace.clone());
    }
    if trace.len() < 2 {
        return Err(Error::EmptyInput("PCA needs at least two time samples".into()));
    }
    let c = components(trace);
    let mut v = c.vectors.column(cfg.pca_component_index - 1).into_owned();
    if v.sum() < 0.0 {
        v.neg_mut();
    }
    let offset: f64 = c.means.iter().zip(v.iter()).map(|(m, w)| m * w).sum();
    let scores = &c.centered * &v;
    Ok(CfrPowerTrace {
        samples: scores.iter().map(|s| s + offset).collect(),
        sample_rate_hz: trace.sample_rate_hz,
        n_subcarriers: 1,
        label: trace.label.clone(),
    })
}
