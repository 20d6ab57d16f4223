use std::ffi::c_char;

use semsense_core::codec::{decode_payload, encode, encode_payload, payload_bits, CodecConfig, SemanticCode};
use semsense_core::semantic_space::{classify, to_point, KnnConfig, TrainingSet};
use semsense_core::signal_model::CfrPowerTrace;

use crate::{core, fail, guard, non_null, out_string, slice, utf8, SemStatus};

/// Opaque semantic code.
pub struct SemCode {
    code: SemanticCode,
    cfg: CodecConfig,
}

/// Opaque labelled training set for kNN classification.
pub struct SemTrainingSet {
    codes: Vec<(SemanticCode, String)>,
    built: Option<TrainingSet>,
}

/// One sinusoidal basis `A·sin(2πft + θ)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SemBasis {
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

fn code_ref<'a>(code: *const SemCode) -> Result<&'a SemCode, SemStatus> {
    non_null(code, "code")?;
    Ok(unsafe { &*code })
}

fn put_code(code: SemanticCode, cfg: CodecConfig, out: *mut *mut SemCode) -> Result<(), SemStatus> {
    non_null(out, "out")?;
    unsafe { *out = Box::into_raw(Box::new(SemCode { code, cfg })) };
    Ok(())
}

/// Encode a single-subcarrier power trace with the default codec settings.
///
/// # Safety
/// `samples` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sem_encode(samples: *const f64, len: usize, sample_rate_hz: f64, out: *mut *mut SemCode) -> SemStatus {
    guard(|| {
        let xs = slice(samples, len, "samples")?.to_vec();
        let cfg = CodecConfig::default();
        let code = core(encode(&CfrPowerTrace::scalar(xs, sample_rate_hz), &cfg))?;
        put_code(code, cfg, out)
    })
}

/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sem_code_free(code: *mut SemCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Number of bases, or 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sem_code_order(code: *const SemCode) -> usize {
    code.as_ref().map_or(0, |c| c.code.order)
}

/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sem_code_fit_nrmse(code: *const SemCode) -> f64 {
    code.as_ref().map_or(f64::NAN, |c| c.code.fit_nrmse)
}

/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sem_code_mean_power(code: *const SemCode) -> f64 {
    code.as_ref().map_or(f64::NAN, |c| c.code.mean_power)
}

/// Bases are ordered by frequency.
///
/// # Safety
/// `code` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_code_basis(code: *const SemCode, index: usize, out: *mut SemBasis) -> SemStatus {
    guard(|| {
        let c = code_ref(code)?;
        non_null(out, "out")?;
        let b = c.code.bases.get(index).ok_or_else(|| {
            fail(SemStatus::InvalidArgument, format!("basis {index} of {}", c.code.order))
        })?;
        *out = SemBasis {
            amplitude: b.amplitude,
            frequency_hz: b.frequency_hz,
            phase_rad: b.phase_rad,
        };
        Ok(())
    })
}

/// Payload size in bits.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sem_code_payload_bits(code: *const SemCode) -> u64 {
    code.as_ref().map_or(0, |c| payload_bits(&c.code, &c.cfg))
}

/// Serialize the code as JSON; free the result with `sem_string_free`.
///
/// # Safety
/// `code` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_code_to_json(code: *const SemCode, out: *mut *mut c_char) -> SemStatus {
    guard(|| out_string(code_ref(code)?.code.to_json(), out))
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_code_from_json(json: *const c_char, out: *mut *mut SemCode) -> SemStatus {
    guard(|| {
        let code = core(SemanticCode::from_json(utf8(json, "json")?))?;
        put_code(code, CodecConfig::default(), out)
    })
}

/// Write the binary payload into `buf`.
///
/// `out_len` always receives the required size; pass a null `buf` to query
/// it. Returns `BUFFER_TOO_SMALL` when `capacity` is short.
///
/// # Safety
/// `buf` must be null or hold `capacity` bytes; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sem_code_payload(code: *const SemCode, buf: *mut u8, capacity: usize, out_len: *mut usize) -> SemStatus {
    guard(|| {
        let c = code_ref(code)?;
        non_null(out_len, "out_len")?;
        let bytes = core(encode_payload(&c.code, &c.cfg))?;
        *out_len = bytes.len();
        if buf.is_null() {
            return Ok(());
        }
        if capacity < bytes.len() {
            return Err(fail(SemStatus::BufferTooSmall, format!("need {} bytes, have {capacity}", bytes.len())));
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// Decode a possibly corrupted payload, dropping invalid bases.
///
/// `out_dropped` (optional) receives the number of discarded bases. Fails
/// with `INVALID_CODE` when nothing survives.
///
/// # Safety
/// `bytes` must hold `len` bytes; `out` writable; `out_dropped` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sem_code_from_payload(bytes: *const u8, len: usize, out: *mut *mut SemCode, out_dropped: *mut usize) -> SemStatus {
    guard(|| {
        let cfg = CodecConfig::default();
        let decoded = core(decode_payload(slice(bytes, len, "bytes")?, cfg.feature_bits_per_value))?;
        if !out_dropped.is_null() {
            *out_dropped = decoded.dropped;
        }
        let code = decoded
            .code
            .ok_or_else(|| fail(SemStatus::InvalidCode, "no basis survived repair"))?;
        put_code(code, cfg, out)
    })
}

#[no_mangle]
pub extern "C" fn sem_training_set_new() -> *mut SemTrainingSet {
    Box::into_raw(Box::new(SemTrainingSet {
        codes: Vec::new(),
        built: None,
    }))
}

/// # Safety
/// `ts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sem_training_set_free(ts: *mut SemTrainingSet) {
    if !ts.is_null() {
        drop(Box::from_raw(ts));
    }
}

/// Add a labelled code; the code is copied.
///
/// # Safety
/// `ts` and `code` must be live handles; `label` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sem_training_set_add(ts: *mut SemTrainingSet, code: *const SemCode, label: *const c_char) -> SemStatus {
    guard(|| {
        non_null(ts, "training set")?;
        let c = code_ref(code)?;
        let label = utf8(label, "label")?;
        core(to_point(&c.code))?;
        let ts = &mut *ts;
        ts.codes.push((c.code.clone(), label.to_string()));
        ts.built = None;
        Ok(())
    })
}

/// # Safety
/// `ts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sem_training_set_len(ts: *const SemTrainingSet) -> usize {
    ts.as_ref().map_or(0, |t| t.codes.len())
}

/// kNN label of `code`; free the result with `sem_string_free`.
///
/// # Safety
/// `ts` and `code` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sem_classify(ts: *mut SemTrainingSet, code: *const SemCode, k: usize, seed: u64, out: *mut *mut c_char) -> SemStatus {
    guard(|| {
        non_null(ts, "training set")?;
        let c = code_ref(code)?;
        let ts = &mut *ts;
        if ts.built.is_none() {
            ts.built = Some(core(TrainingSet::build(&ts.codes))?);
        }
        let point = core(to_point(&c.code))?;
        let knn = KnnConfig { k, tie_break_seed: seed };
        let label = core(classify(&point, ts.built.as_ref().unwrap(), &knn))?;
        out_string(label, out)
    })
}
