use std::f64::consts::TAU;
use std::ffi::{CStr, CString};
use std::ptr;

use semsense_ffi::*;

fn tone(freqs: &[(f64, f64)], n: usize, rate: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            3.0 + freqs.iter().map(|&(a, f)| a * (TAU * f * t + 0.4).sin()).sum::<f64>()
        })
        .collect()
}

fn encode(xs: &[f64]) -> *mut SemCode {
    let mut code = ptr::null_mut();
    assert_eq!(unsafe { sem_encode(xs.as_ptr(), xs.len(), 600.0, &mut code) }, SemStatus::Ok);
    code
}

fn last_error() -> String {
    let p = sem_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn encode_and_read_bases() {
    let xs = tone(&[(1.0, 12.0), (0.5, 31.0)], 600, 600.0);
    let code = encode(&xs);
    unsafe {
        assert_eq!(sem_code_order(code), 2);
        assert!(sem_code_fit_nrmse(code) < 1e-6);
        assert!((sem_code_mean_power(code) - 3.0).abs() < 1e-6);
        let mut b = SemBasis::default();
        assert_eq!(sem_code_basis(code, 1, &mut b), SemStatus::Ok);
        assert!((b.frequency_hz - 31.0).abs() < 1e-6);
        assert!((b.amplitude - 0.5).abs() < 1e-6);
        assert_eq!(sem_code_basis(code, 2, &mut b), SemStatus::InvalidArgument);
        assert!(last_error().contains("basis 2"));
        assert_eq!(sem_code_payload_bits(code), 2 * 96 + 88);
        sem_code_free(code);
    }
}

#[test]
fn payload_round_trip_and_buffer_protocol() {
    let code = encode(&tone(&[(1.0, 20.0)], 600, 600.0));
    unsafe {
        let mut len = 0;
        assert_eq!(sem_code_payload(code, ptr::null_mut(), 0, &mut len), SemStatus::Ok);
        assert_eq!(len as u64 * 8, sem_code_payload_bits(code));
        let mut small = vec![0u8; len - 1];
        assert_eq!(sem_code_payload(code, small.as_mut_ptr(), small.len(), &mut len), SemStatus::BufferTooSmall);
        let mut buf = vec![0u8; len];
        assert_eq!(sem_code_payload(code, buf.as_mut_ptr(), buf.len(), &mut len), SemStatus::Ok);

        let mut back = ptr::null_mut();
        let mut dropped = 7;
        assert_eq!(sem_code_from_payload(buf.as_ptr(), buf.len(), &mut back, &mut dropped), SemStatus::Ok);
        assert_eq!(dropped, 0);
        assert_eq!(sem_code_order(back), 1);

        assert_eq!(sem_code_from_payload(buf.as_ptr(), 5, &mut back, ptr::null_mut()), SemStatus::InvalidCode);
        sem_code_free(back);
        sem_code_free(code);
    }
}

#[test]
fn json_round_trip() {
    let code = encode(&tone(&[(1.0, 20.0), (0.3, 44.0)], 600, 600.0));
    unsafe {
        let mut json = ptr::null_mut();
        assert_eq!(sem_code_to_json(code, &mut json), SemStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        assert!(text.contains("\"bases\""));
        let mut back = ptr::null_mut();
        assert_eq!(sem_code_from_json(json, &mut back), SemStatus::Ok);
        assert_eq!(sem_code_order(back), 2);
        sem_string_free(json);
        sem_code_free(back);
        sem_code_free(code);

        let bad = CString::new("{").unwrap();
        assert_eq!(sem_code_from_json(bad.as_ptr(), &mut back), SemStatus::InvalidCode);
    }
}

#[test]
fn encode_errors() {
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(sem_encode(ptr::null(), 10, 600.0, &mut code), SemStatus::NullPointer);
        assert!(last_error().contains("samples"));
        let flat = vec![1.0; 64];
        assert_ne!(sem_encode(flat.as_ptr(), 0, 600.0, &mut code), SemStatus::Ok);
        assert_eq!(sem_encode(flat.as_ptr(), flat.len(), 600.0, ptr::null_mut()), SemStatus::NullPointer);
    }
    assert!(code.is_null());
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        sem_code_free(ptr::null_mut());
        sem_training_set_free(ptr::null_mut());
        sem_string_free(ptr::null_mut());
        assert_eq!(sem_code_order(ptr::null()), 0);
        assert!(sem_code_fit_nrmse(ptr::null()).is_nan());
        assert_eq!(sem_training_set_len(ptr::null()), 0);
    }
}

#[test]
fn classify_two_classes() {
    let ts = sem_training_set_new();
    let slow = CString::new("slow").unwrap();
    let fast = CString::new("fast").unwrap();
    unsafe {
        for i in 0..4 {
            let d = i as f64;
            let a = encode(&tone(&[(1.0, 5.0 + d)], 600, 600.0));
            let b = encode(&tone(&[(1.0, 60.0 + d), (0.5, 90.0 + d)], 600, 600.0));
            assert_eq!(sem_training_set_add(ts, a, slow.as_ptr()), SemStatus::Ok);
            assert_eq!(sem_training_set_add(ts, b, fast.as_ptr()), SemStatus::Ok);
            sem_code_free(a);
            sem_code_free(b);
        }
        assert_eq!(sem_training_set_len(ts), 8);
        let probe = encode(&tone(&[(1.0, 62.5), (0.5, 92.5)], 600, 600.0));
        let mut label = ptr::null_mut();
        assert_eq!(sem_classify(ts, probe, 3, 0, &mut label), SemStatus::Ok);
        assert_eq!(CStr::from_ptr(label).to_str().unwrap(), "fast");
        sem_string_free(label);
        assert_eq!(sem_classify(ts, probe, 0, 0, &mut label), SemStatus::InvalidArgument);
        sem_code_free(probe);
        sem_training_set_free(ts);
    }
}

#[test]
fn channel_closed_forms() {
    let fading = SemFading {
        model: SemFadingModel::Rayleigh,
        nakagami_m: 0.0,
        n_branches: 1,
        mean_snr_db: 10.0,
    };
    let mut bep = 0.0;
    let mut cap = 0.0;
    unsafe {
        assert_eq!(sem_average_bep(&fading, SemModulation::Bpsk, &mut bep), SemStatus::Ok);
        assert_eq!(sem_ergodic_capacity(&fading, 2.0, &mut cap), SemStatus::Ok);
    }
    assert!((bep - 0.5 * (1.0 - (10.0f64 / 11.0).sqrt())).abs() < 1e-10);
    assert!(cap > 2.0 * 2.9 && cap < 2.0 * 3.0);

    let mut dpsk = 0.0;
    unsafe { sem_average_bep(&fading, SemModulation::Dpsk, &mut dpsk) };
    assert!((dpsk - 0.5 / 11.0).abs() < 1e-10);

    let bad = SemFading {
        model: SemFadingModel::Nakagami,
        nakagami_m: 0.2,
        ..fading
    };
    assert_eq!(unsafe { sem_average_bep(&bad, SemModulation::Bpsk, &mut bep) }, SemStatus::InvalidSpec);
    assert_eq!(unsafe { sem_average_bep(ptr::null(), SemModulation::Bpsk, &mut bep) }, SemStatus::NullPointer);
}

#[test]
fn contest_calls() {
    let market = sem_market_default();
    assert_eq!(market.n_transmitters, 3);
    let mut a = 0.0;
    unsafe {
        assert_eq!(sem_capability(&market, 7e6, &mut a), SemStatus::Ok);
    }
    assert!((a - 63.19).abs() < 0.01, "{a}");

    let mut hi = 0.0;
    let mut lo = 0.0;
    let prizes = [1.0, 0.0];
    unsafe {
        assert_eq!(sem_optimal_effort(&market, 7e6, prizes.as_ptr(), 2, &mut hi), SemStatus::Ok);
        assert_eq!(sem_optimal_effort(&market, 4e6, prizes.as_ptr(), 2, &mut lo), SemStatus::Ok);
        let rising = [0.2, 0.8];
        assert_eq!(sem_optimal_effort(&market, 7e6, rising.as_ptr(), 2, &mut hi), SemStatus::InvalidMarket);
    }
    assert!(hi > lo && lo > 0.0);

    let averse = SemMarket {
        risk_averse: true,
        total_award: 20.0,
        ..market
    };
    let rates = [7e6, 6e6, 5e6];
    let mut out = [0.0; 2];
    unsafe {
        assert_eq!(sem_optimal_awards(&averse, rates.as_ptr(), 3, out.as_mut_ptr(), 2), SemStatus::Ok);
        assert_eq!(sem_optimal_awards(&averse, rates.as_ptr(), 3, out.as_mut_ptr(), 1), SemStatus::BufferTooSmall);
        assert_eq!(sem_optimal_awards(&averse, rates.as_ptr(), 2, out.as_mut_ptr(), 2), SemStatus::InvalidMarket);
    }
    assert!((out[0] + out[1] - 20.0).abs() < 1e-9 && out[0] > out[1] && out[1] > 0.0);
}
