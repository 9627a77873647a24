mod common;

use std::f64::consts::PI;

use fiberloc::caf::{caf_discrete, peak_search, refine_peak, CafGrid};
use fiberloc::channel::{propagate, FiberScenario};
use fiberloc::signal::{matched_filter, synthesize, Baseband, WaveformSpec};
use num_complex::Complex64;
use proptest::prelude::*;

const FS: f64 = 16_000.0;

fn baseband(samples: Vec<Complex64>) -> Baseband {
    Baseband::new(samples, FS, 0.0).unwrap()
}

fn signal(len: usize, seed: u64) -> Vec<Complex64> {
    common::gaussian(len, seed)
}

#[test]
fn fast_matches_direct_sum_on_256_samples() {
    let u1 = signal(256, 1);
    let u2 = signal(256, 2);
    let grid = CafGrid::new(-255, 255, 3, 256, FS).unwrap();
    let fast = caf_discrete(&baseband(u1.clone()), &baseband(u2.clone()), &grid).unwrap();
    let lags: Vec<i64> = grid.lags().collect();
    let direct = common::direct_caf(&u1, &u2, &lags, &grid.doppler_hz, FS);
    for (a, b) in fast.amplitudes().iter().zip(&direct) {
        assert!((a - b).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_matches_direct_sum(k in 1usize..160, m in 1usize..160, seed in any::<u64>(), half in 0usize..3) {
        let u1 = signal(k, seed);
        let u2 = signal(m, seed ^ 0x9e37);
        let reach = k.max(m) as i64 - 1;
        let grid = CafGrid::new(-reach, reach, half, k, FS).unwrap();
        let fast = caf_discrete(&baseband(u1.clone()), &baseband(u2.clone()), &grid).unwrap();
        let lags: Vec<i64> = grid.lags().collect();
        let direct = common::direct_caf(&u1, &u2, &lags, &grid.doppler_hz, FS);
        for (a, b) in fast.amplitudes().iter().zip(&direct) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn integer_shift_moves_the_peak(d in 0usize..40, seed in any::<u64>()) {
        let x = signal(128, seed);
        let mut shifted = vec![Complex64::new(0.0, 0.0); d];
        shifted.extend_from_slice(&x);
        let grid = CafGrid::window(48, 1, 128, FS).unwrap();
        let peak = peak_search(&caf_discrete(&baseband(x), &baseband(shifted), &grid).unwrap());
        prop_assert_eq!(peak.lag, -(d as i64));
        prop_assert_eq!(peak.doppler_hz, 0.0);
    }

    #[test]
    fn scaling_u2_scales_every_cell(c in 0.01..100.0f64, seed in any::<u64>()) {
        let x = signal(96, seed);
        let y = signal(96, seed.wrapping_add(1));
        let scaled: Vec<Complex64> = y.iter().map(|z| z * c).collect();
        let grid = CafGrid::window(20, 2, 96, FS).unwrap();
        let a = caf_discrete(&baseband(x.clone()), &baseband(y), &grid).unwrap();
        let b = caf_discrete(&baseband(x), &baseband(scaled), &grid).unwrap();
        for (p, q) in a.amplitudes().iter().zip(b.amplitudes()) {
            prop_assert!((q - c * p).abs() <= 1e-12 * (1.0 + c * p));
        }
        let (pa, pb) = (peak_search(&a), peak_search(&b));
        prop_assert_eq!((pa.lag, pa.doppler_index), (pb.lag, pb.doppler_index));
    }

    #[test]
    fn doppler_rotation_moves_the_peak(bin in -3i64..=3, seed in any::<u64>()) {
        let k = 128;
        let x = signal(k, seed);
        let nu0 = bin as f64 * FS / k as f64;
        let rotated: Vec<Complex64> = x
            .iter()
            .enumerate()
            .map(|(i, z)| z * Complex64::from_polar(1.0, -2.0 * PI * nu0 * i as f64 / FS))
            .collect();
        let grid = CafGrid::window(8, 4, k, FS).unwrap();
        let peak = peak_search(&caf_discrete(&baseband(x), &baseband(rotated), &grid).unwrap());
        prop_assert_eq!(peak.lag, 0);
        prop_assert!((peak.doppler_hz - nu0).abs() < 1e-9);
    }
}

#[test]
fn quarter_sample_delay_is_refined() {
    let spec = WaveformSpec::reference(7).unwrap();
    let wave = synthesize(&spec).unwrap();
    let ts = spec.sample_period();
    let v = 2e8;
    // δτ = (2Δ1 − L)/v_f = Ts/4
    let scenario = FiberScenario::new(60_000.0, 0.0, (60_000.0 + 0.25 * ts * v) / 2.0).noiseless();
    let pair = propagate(&wave, &scenario, spec.carrier_hz, 0).unwrap();
    assert!((pair.meta.delta_tau_s / ts - 0.25).abs() < 1e-9);
    let y1 = matched_filter(&pair.u1, &spec).unwrap();
    let y2 = matched_filter(&pair.u2, &spec).unwrap();
    let grid = CafGrid::window(16, 2, y1.len(), FS).unwrap();
    let refined = refine_peak(&caf_discrete(&y1, &y2, &grid).unwrap());
    let est = refined.delta_tau_s / ts;
    assert!((est - 0.25).abs() < 0.05, "refined lag {est}");
    assert!(refined.refined());
}
