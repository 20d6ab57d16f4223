//! Damped least-squares fit of a sum of sinusoids.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use super::{CodecConfig, SemanticBasis};
use crate::error::{Error, Result};
use crate::signal_model::CfrPowerTrace;

const REL_COST_TOL: f64 = 1e-10;
const MAX_DAMPING: f64 = 1e16;

/// Parameter vector layout: `[A_1, F_1, θ_1, ..., A_K, F_K, θ_K, offset]`.
fn pack(bases: &[SemanticBasis]) -> DVector<f64> {
    DVector::from_iterator(
        bases.len() * 3 + 1,
        bases
            .iter()
            .flat_map(|b| [b.amplitude, b.frequency_hz, b.phase_rad])
            .chain(std::iter::once(0.0)),
    )
}

fn unpack(p: &DVector<f64>) -> Vec<SemanticBasis> {
    p.as_slice()[..p.len() - 1]
        .chunks_exact(3)
        .map(|c| SemanticBasis::new(c[0], c[1], c[2]))
        .collect()
}

/// Best amplitudes, phases and offset for fixed seed frequencies.
///
/// `A sin(ωt + θ) = α sin ωt + β cos ωt` makes this linear. Returns `None`
/// when the design matrix is rank deficient.
fn project(seeds: &[SemanticBasis], t: &[f64], y: &[f64]) -> Option<DVector<f64>> {
    let k = seeds.len();
    let x = DMatrix::from_fn(t.len(), 2 * k + 1, |i, c| {
        if c == 2 * k {
            return 1.0;
        }
        let w = TAU * seeds[c / 2].frequency_hz * t[i];
        if c % 2 == 0 { w.sin() } else { w.cos() }
    });
    let coef = x.tr_mul(&x).cholesky()?.solve(&x.tr_mul(&DVector::from_column_slice(y)));
    let mut p = DVector::zeros(3 * k + 1);
    for (b, s) in seeds.iter().enumerate() {
        let (al, be) = (coef[2 * b], coef[2 * b + 1]);
        p[3 * b] = al.hypot(be);
        p[3 * b + 1] = s.frequency_hz;
        p[3 * b + 2] = be.atan2(al);
    }
    p[3 * k] = coef[2 * k];
    coef.iter().all(|v| v.is_finite()).then_some(p)
}

/// Residuals `y - model` and, optionally, the model Jacobian.
fn evaluate(p: &DVector<f64>, t: &[f64], y: &[f64], jac: Option<&mut DMatrix<f64>>) -> DVector<f64> {
    let k = p.len() / 3;
    let offset = p[p.len() - 1];
    let mut r = DVector::from_iterator(y.len(), y.iter().map(|v| v - offset));
    match jac {
        Some(j) => {
            for (i, &ti) in t.iter().enumerate() {
                j[(i, 3 * k)] = 1.0;
                for b in 0..k {
                    let (a, f, th) = (p[3 * b], p[3 * b + 1], p[3 * b + 2]);
                    let (s, c) = (TAU * f * ti + th).sin_cos();
                    r[i] -= a * s;
                    j[(i, 3 * b)] = s;
                    j[(i, 3 * b + 1)] = TAU * ti * a * c;
                    j[(i, 3 * b + 2)] = a * c;
                }
            }
        }
        None => {
            for (i, &ti) in t.iter().enumerate() {
                for b in 0..k {
                    r[i] -= p[3 * b] * (TAU * p[3 * b + 1] * ti + p[3 * b + 2]).sin();
                }
            }
        }
    }
    r
}

/// Output of [`lm_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct LmFit {
    /// Canonical bases in seed order.
    pub bases: Vec<SemanticBasis>,
    /// Constant left over after mean removal (non-zero when the sinusoids do
    /// not complete whole periods over the window).
    pub offset: f64,
    /// `RMS(residual) / RMS(centered)`.
    pub fit_nrmse: f64,
}

/// Levenberg–Marquardt fit of `c + Σ A_r sin(2π F_r t + θ_r)` to a centered trace.
///
/// Starts from `seeds` (and `c = 0`), or from their linear least-squares
/// amplitudes and phases at the seed frequencies when that fits better. Uses the analytic Jacobian with
/// Marquardt diagonal scaling, and stops on a relative cost change below
/// 1e-10 or after `lm_max_inner_iterations`.
pub fn lm_fit(centered: &CfrPowerTrace, seeds: &[SemanticBasis], cfg: &CodecConfig) -> Result<LmFit> {
    let y = &centered.samples;
    let n = y.len();
    if seeds.is_empty() {
        return Err(Error::DegenerateFit("no seeds".into()));
    }
    if n <= 3 * seeds.len() {
        return Err(Error::DegenerateFit(format!("{n} samples cannot determine {} bases", seeds.len())));
    }
    for (i, a) in seeds.iter().enumerate() {
        if seeds[i + 1..].iter().any(|b| a.frequency_hz == b.frequency_hz) {
            return Err(Error::DegenerateFit(format!("duplicate seed frequency {} Hz", a.frequency_hz)));
        }
    }
    let t: Vec<f64> = (0..n).map(|i| i as f64 / centered.sample_rate_hz).collect();
    let m = seeds.len() * 3 + 1;
    let mut p = pack(seeds);
    if let Some(q) = project(seeds, &t, y) {
        if evaluate(&q, &t, y, None).norm_squared() < evaluate(&p, &t, y, None).norm_squared() {
            p = q;
        }
    }
    let mut jac = DMatrix::zeros(n, m);
    let mut r = evaluate(&p, &t, y, Some(&mut jac));
    let mut cost = r.norm_squared();
    let mut lambda = cfg.lm_initial_damping;
    let mut iterations = 0;
    while iterations < cfg.lm_max_inner_iterations && cost > 0.0 {
        iterations += 1;
        let jtj = jac.tr_mul(&jac);
        let g = jac.tr_mul(&r);
        let diag_floor = jtj.diagonal().max() * 1e-12 + f64::MIN_POSITIVE;
        let mut accepted = false;
        while lambda <= MAX_DAMPING {
            let mut a = jtj.clone();
            for d in 0..m {
                a[(d, d)] += lambda * jtj[(d, d)].max(diag_floor);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= cfg.lm_damping_factor;
                continue;
            };
            let step = chol.solve(&g);
            let trial = &p + &step;
            let trial_r = evaluate(&trial, &t, y, None);
            let trial_cost = trial_r.norm_squared();
            if trial_cost.is_finite() && trial_cost < cost {
                let rel = (cost - trial_cost) / cost;
                p = trial;
                r = evaluate(&p, &t, y, Some(&mut jac));
                cost = trial_cost;
                lambda = (lambda / cfg.lm_damping_factor).max(1e-15);
                accepted = true;
                if rel < REL_COST_TOL {
                    iterations = cfg.lm_max_inner_iterations;
                }
                break;
            }
            lambda *= cfg.lm_damping_factor;
        }
        if !accepted {
            break;
        }
    }
    if !cost.is_finite() {
        return Err(Error::DegenerateFit("residual became non-finite".into()));
    }
    let bases: Vec<SemanticBasis> = unpack(&p).into_iter().map(SemanticBasis::canonical).collect();
    let y_rms = (y.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let fit_nrmse = if y_rms > 0.0 {
        (cost / n as f64).sqrt() / y_rms
    } else {
        0.0
    };
    Ok(LmFit {
        bases,
        offset: p[m - 1],
        fit_nrmse,
    })
}
