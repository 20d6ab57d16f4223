//! Packed little-endian wire form of a [`SemanticCode`].
//!
//! Layout: `order: u8`, `mean_power`, `trace_len: u16`, `sample_rate_hz`,
//! then `(amplitude, frequency, phase)` per basis. Real values are `f32` or
//! `f64` according to `feature_bits_per_value`.

use super::{wrap_phase, CodecConfig, SemanticBasis, SemanticCode};
use crate::error::{Error, Result};

const ORDER_BITS: u64 = 8;
const TRACE_LEN_BITS: u64 = 16;
/// Decoded amplitudes above this are treated as corrupted.
pub const MAX_PLAUSIBLE_AMPLITUDE: f64 = 1e6;

/// Size of the packed payload in bits.
pub fn payload_bits(code: &SemanticCode, cfg: &CodecConfig) -> u64 {
    let v = u64::from(cfg.feature_bits_per_value);
    code.order as u64 * 3 * v + ORDER_BITS + v + TRACE_LEN_BITS + v
}

fn header_bytes(value_bytes: usize) -> usize {
    1 + value_bytes + 2 + value_bytes
}

fn put(buf: &mut Vec<u8>, x: f64, value_bytes: usize) {
    if value_bytes == 4 {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    } else {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn get(bytes: &[u8], value_bytes: usize) -> f64 {
    if value_bytes == 4 {
        f64::from(f32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")))
    } else {
        f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
    }
}

pub fn encode_payload(code: &SemanticCode, cfg: &CodecConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    let order = u8::try_from(code.order).map_err(|_| Error::InvalidCode(format!("order {} exceeds 255", code.order)))?;
    let trace_len = u16::try_from(code.trace_len)
        .map_err(|_| Error::InvalidCode(format!("trace length {} exceeds 65535", code.trace_len)))?;
    let vb = cfg.feature_bits_per_value as usize / 8;
    let mut buf = Vec::with_capacity(header_bytes(vb) + code.bases.len() * 3 * vb);
    buf.push(order);
    put(&mut buf, code.mean_power, vb);
    buf.extend_from_slice(&trace_len.to_le_bytes());
    put(&mut buf, code.sample_rate_hz, vb);
    for b in &code.bases {
        put(&mut buf, b.amplitude, vb);
        put(&mut buf, b.frequency_hz, vb);
        put(&mut buf, b.phase_rad, vb);
    }
    debug_assert_eq!(buf.len() as u64 * 8, payload_bits(code, cfg));
    Ok(buf)
}

/// Result of decoding a possibly corrupted payload.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedCode {
    /// `None` when no basis survived repair; the link abstains.
    pub code: Option<SemanticCode>,
    /// Bases discarded by the repair rule.
    pub dropped: usize,
    /// Order field as received (may disagree with the payload length).
    pub header_order: u8,
}

/// Decode a payload, dropping bases that cannot be valid.
///
/// The basis count comes from the payload length, not the (possibly
/// corrupted) order byte. A basis is dropped when any value is non-finite,
/// the amplitude is outside `[0, 1e6]` or the frequency is outside
/// `[0, sample_rate/2]`. Finite phases are wrapped into `[0, 2π)`.
pub fn decode_payload(bytes: &[u8], feature_bits_per_value: u32) -> Result<DecodedCode> {
    if feature_bits_per_value != 32 && feature_bits_per_value != 64 {
        return Err(Error::InvalidCode("feature_bits_per_value must be 32 or 64".into()));
    }
    let vb = feature_bits_per_value as usize / 8;
    let head = header_bytes(vb);
    if bytes.len() < head || (bytes.len() - head) % (3 * vb) != 0 {
        return Err(Error::InvalidCode(format!("payload of {} bytes does not match the layout", bytes.len())));
    }
    let header_order = bytes[0];
    let mean_power = get(&bytes[1..], vb);
    let trace_len = u16::from_le_bytes([bytes[1 + vb], bytes[2 + vb]]) as usize;
    let sample_rate_hz = get(&bytes[3 + vb..], vb);
    let rate_ok = sample_rate_hz.is_finite() && sample_rate_hz > 0.0;
    let mut bases = Vec::new();
    let mut dropped = 0;
    for chunk in bytes[head..].chunks_exact(3 * vb) {
        let a = get(chunk, vb);
        let f = get(&chunk[vb..], vb);
        let th = get(&chunk[2 * vb..], vb);
        let valid = rate_ok
            && a.is_finite()
            && f.is_finite()
            && th.is_finite()
            && (0.0..=MAX_PLAUSIBLE_AMPLITUDE).contains(&a)
            && (0.0..=sample_rate_hz / 2.0).contains(&f);
        if valid {
            bases.push(SemanticBasis::new(a, f, wrap_phase(th)));
        } else {
            dropped += 1;
        }
    }
    let code = (!bases.is_empty()).then(|| SemanticCode {
        order: bases.len(),
        mean_power,
        sample_rate_hz,
        trace_len,
        fit_nrmse: 0.0,
        bases,
    });
    Ok(DecodedCode {
        code,
        dropped,
        header_order,
    })
}
