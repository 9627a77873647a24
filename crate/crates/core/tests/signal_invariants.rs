use std::f64::consts::PI;

use fiberloc::channel::{complex_noise, noise_rng};
use fiberloc::signal::{gen_mseq, matched_filter, rrc_taps, shape_pulse, synthesize, Baseband, PnSpec, WaveformSpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn reference(degree: u32) -> WaveformSpec {
    WaveformSpec::reference(degree).unwrap()
}

#[test]
fn periodic_autocorrelation_is_two_valued() {
    for degree in 5..=9 {
        let chips = gen_mseq(&PnSpec::with_default_taps(degree).unwrap()).unwrap();
        let n = chips.len();
        for lag in 0..n {
            let r: f64 = (0..n).map(|i| chips[i] * chips[(i + lag) % n]).sum();
            let expected = if lag == 0 { n as f64 } else { -1.0 };
            assert_eq!(r, expected, "degree {degree} lag {lag}");
        }
    }
}

proptest! {
    #[test]
    fn any_nonzero_seed_gives_a_balanced_full_period(degree in 5u32..=9, seed in 1u32..512) {
        let mut spec = PnSpec::with_default_taps(degree).unwrap();
        spec.seed_state = seed % ((1 << degree) - 1) + 1;
        let chips = gen_mseq(&spec).unwrap();
        prop_assert_eq!(chips.len(), (1usize << degree) - 1);
        let plus = chips.iter().filter(|&&c| c == 1.0).count() as i64;
        let minus = chips.len() as i64 - plus;
        prop_assert_eq!((plus - minus).abs(), 1);
        prop_assert_eq!(&chips, &gen_mseq(&spec).unwrap());
    }
}

#[test]
fn raised_cosine_chain_has_no_inter_chip_interference() {
    let spec = reference(7);
    let h = rrc_taps(&spec).unwrap();
    // Tx ∗ matched filter; the filter is real and symmetric
    let mut g = vec![0.0; 2 * h.len() - 1];
    for (i, a) in h.iter().enumerate() {
        for (j, b) in h.iter().enumerate() {
            g[i + j] += a * b;
        }
    }
    let center = h.len() - 1;
    let worst = (1..=center / spec.oversampling)
        .flat_map(|m| [center - m * spec.oversampling, center + m * spec.oversampling])
        .map(|i| (g[i] / g[center]).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "worst inter-chip interference {worst:.3e}");
}

#[test]
fn waveform_energy_is_chip_count_times_chip_energy() {
    for degree in 5..=9 {
        let spec = reference(degree);
        let wave = synthesize(&spec).unwrap();
        let chip_energy: f64 = rrc_taps(&spec).unwrap().iter().map(|h| h * h).sum();
        let expected = spec.pn.period() as f64 * chip_energy;
        let rel = (wave.energy() - expected).abs() / expected;
        assert!(rel < 0.01, "degree {degree}: relative error {rel:.3e}");
    }
}

#[test]
fn alternating_chips_stay_inside_the_rolloff_band() {
    let spec = reference(7);
    let chips: Vec<f64> = (0..512).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let wave = shape_pulse(&chips, &spec).unwrap();
    let fs = spec.sample_rate;
    let edge = (1.0 + spec.rolloff) / 2.0 * spec.chip_rate();
    let mut in_band = 0f64;
    let mut out_band = 0f64;
    let step = 2.0;
    let mut f = 0.0;
    while f <= fs / 2.0 {
        let p = wave
            .samples
            .iter()
            .enumerate()
            .map(|(k, &x)| x * Complex64::from_polar(1.0, -2.0 * PI * f * k as f64 / fs))
            .sum::<Complex64>()
            .norm_sqr();
        if f <= edge {
            in_band = in_band.max(p);
        } else {
            out_band = out_band.max(p);
        }
        f += step;
    }
    let db = 10.0 * (out_band / in_band).log10();
    assert!(db < -40.0, "stopband at {db:.1} dB");
}

#[test]
fn matched_filter_preserves_unit_noise_variance() {
    let spec = reference(7);
    let n = 1_000_000;
    let noise = complex_noise(n, 1.0, &mut noise_rng(11, 1));
    let rx = Baseband::new(noise, spec.sample_rate, 0.0).unwrap();
    let y = matched_filter(&rx, &spec).unwrap();
    let taps = spec.tap_count();
    // steady-state part only
    let core = &y.samples[taps..y.len() - taps];
    let var = core.iter().map(|z| z.norm_sqr()).sum::<f64>() / core.len() as f64;
    assert!((var - 1.0).abs() < 0.02, "output variance {var}");
}

#[test]
fn synthesis_is_bit_identical() {
    let spec = reference(9);
    assert_eq!(synthesize(&spec).unwrap(), synthesize(&spec).unwrap());
}
