//! Two-receiver fiber channel.
//!
//! A source at distance Δ1 from receiver 1 reaches receiver 1 after
//! τ1 = Δ1/v_f and receiver 2 after τ2 = (L − Δ1)/v_f. The shared bulk delay
//! L/(2 v_f) is removed from the sample streams and kept in [`ChannelMeta`];
//! only the residual ±δτ/2 offsets are applied, as exact fractional delays
//! through a linear phase ramp in the frequency domain.
//!
//! Signal levels are anchored so that receiver i sees
//! `snr_ref_db − α · Δi` dB above its noise floor. The weaker receiver is the
//! stronger one scaled by kappa.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Baseband;

/// Largest stream `propagate` will allocate.
pub const MAX_BUFFER_SAMPLES: usize = 1 << 22;

/// Extra zero samples on each side of the delayed burst.
const GUARD_SAMPLES: usize = 8;

pub const DEFAULT_LIGHT_SPEED: f64 = 2.0e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberScenario {
    pub length_m: f64,
    pub loss_db_per_km: f64,
    pub light_speed_mps: f64,
    /// Δ1, distance from receiver 1.
    pub source_position_m: f64,
    /// SNR at a receiver's output with the source at that receiver's input.
    pub snr_ref_db: f64,
    /// Receiver output noise power; 0 dB is unit variance.
    pub noise_floor_db: f64,
    pub add_noise: bool,
}

impl FiberScenario {
    /// 60 km cable, 10 dB reference SNR, 0 dB noise floor, v_f = 2e8 m/s.
    pub fn new(length_m: f64, loss_db_per_km: f64, source_position_m: f64) -> Self {
        Self {
            length_m,
            loss_db_per_km,
            light_speed_mps: DEFAULT_LIGHT_SPEED,
            source_position_m,
            snr_ref_db: 10.0,
            noise_floor_db: 0.0,
            add_noise: true,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.add_noise = false;
        self
    }

    pub fn with_snr_ref_db(mut self, snr_ref_db: f64) -> Self {
        self.snr_ref_db = snr_ref_db;
        self
    }

    pub fn at_position(&self, source_position_m: f64) -> Self {
        Self {
            source_position_m,
            ..self.clone()
        }
    }

    /// Δ2 = L − Δ1.
    pub fn distance_to_receiver2(&self) -> f64 {
        self.length_m - self.source_position_m
    }

    /// One-way fiber transit time T_L = L / v_f.
    pub fn transit_time(&self) -> f64 {
        self.length_m / self.light_speed_mps
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m.is_finite() && self.length_m > 0.0) {
            return Err(Error::param("length_m", "must be positive"));
        }
        if !(self.light_speed_mps.is_finite() && self.light_speed_mps > 0.0) {
            return Err(Error::param("light_speed_mps", "must be positive"));
        }
        if !(self.loss_db_per_km.is_finite() && self.loss_db_per_km >= 0.0) {
            return Err(Error::param("loss_db_per_km", "must be non-negative"));
        }
        if !(0.0..=self.length_m).contains(&self.source_position_m) {
            return Err(Error::param(
                "source_position_m",
                format!(
                    "{} outside [0, {}]",
                    self.source_position_m, self.length_m
                ),
            ));
        }
        if !self.snr_ref_db.is_finite() || !self.noise_floor_db.is_finite() {
            return Err(Error::param("snr_ref_db", "levels must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Receiver {
    One,
    Two,
}

impl Receiver {
    pub fn index(self) -> u8 {
        match self {
            Receiver::One => 1,
            Receiver::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPair {
    pub tau1_s: f64,
    pub tau2_s: f64,
    /// δτ = τ1 − τ2.
    pub delta_tau_s: f64,
}

pub fn delay_pair(scenario: &FiberScenario) -> DelayPair {
    let tau1_s = scenario.source_position_m / scenario.light_speed_mps;
    let tau2_s = scenario.distance_to_receiver2() / scenario.light_speed_mps;
    DelayPair {
        tau1_s,
        tau2_s,
        delta_tau_s: tau1_s - tau2_s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa {
    /// Amplitude of the weaker receiver relative to the stronger one.
    pub magnitude: f64,
    /// Receiver seeing the stronger signal; receiver 1 on the midpoint.
    pub reference: Receiver,
}

/// |κ| = 10^(−α |L − 2Δ1| / 20), with α in dB/km and lengths in meters.
pub fn kappa_of_position(scenario: &FiberScenario) -> Kappa {
    let path_difference_km = (scenario.length_m - 2.0 * scenario.source_position_m).abs() / 1000.0;
    let magnitude = 10f64.powf(-scenario.loss_db_per_km * path_difference_km / 20.0);
    let reference = if scenario.source_position_m <= scenario.length_m / 2.0 {
        Receiver::One
    } else {
        Receiver::Two
    };
    Kappa {
        magnitude,
        reference,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSnrs {
    pub receiver1_db: f64,
    pub receiver2_db: f64,
}

impl ReceiverSnrs {
    pub fn reference_db(&self) -> f64 {
        self.receiver1_db.max(self.receiver2_db)
    }
}

/// Output SNR at each receiver after the fiber loss from the source.
pub fn expected_snrs(scenario: &FiberScenario) -> ReceiverSnrs {
    let alpha = scenario.loss_db_per_km;
    ReceiverSnrs {
        receiver1_db: scenario.snr_ref_db - alpha * scenario.source_position_m / 1000.0,
        receiver2_db: scenario.snr_ref_db - alpha * scenario.distance_to_receiver2() / 1000.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMeta {
    pub tau1_s: f64,
    pub tau2_s: f64,
    pub delta_tau_s: f64,
    /// Common delay L/(2 v_f) removed from both streams.
    pub bulk_delay_s: f64,
    pub kappa_mag: f64,
    /// −2π f0 (τ0 + τφ) with τ0 the weaker receiver's delay relative to the reference.
    pub kappa_phase: f64,
    /// Front-end group delay τg; the simulated front end is ideal.
    pub group_delay_s: f64,
    pub reference_receiver: Receiver,
    /// Linear amplitude applied to the unit waveform at each receiver.
    pub amplitude1: f64,
    pub amplitude2: f64,
    /// Per-receiver complex noise variance (0 when noise is disabled).
    pub noise_variance: f64,
    pub length_m: f64,
    pub light_speed_mps: f64,
}

/// Receiver output streams; `u1` is always receiver 1 and `u2` receiver 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPair {
    pub u1: Baseband,
    pub u2: Baseband,
    pub meta: ChannelMeta,
    pub rng_seed: u64,
}

/// Delays a stream by `delays` seconds each, through one shared forward FFT.
struct FractionalDelay {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

impl FractionalDelay {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    fn spectrum(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        buf.resize(self.len, Complex64::new(0.0, 0.0));
        self.forward.process(&mut buf);
        buf
    }

    fn delayed(&self, spectrum: &[Complex64], delay_samples: f64, out_len: usize) -> Vec<Complex64> {
        let n = self.len;
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let bin = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                let mut phase = -2.0 * PI * bin * delay_samples / n as f64;
                if n % 2 == 0 && k == n / 2 {
                    // Nyquist bin: keep the shift real-valued for integer delays
                    phase = -PI * delay_samples;
                }
                x * Complex64::from_polar(1.0, phase)
            })
            .collect();
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.truncate(out_len);
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }
}

/// Circular complex white Gaussian noise of total variance `variance`.
pub fn complex_noise(len: usize, variance: f64, rng: &mut ChaCha20Rng) -> Vec<Complex64> {
    let sigma = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// Independent noise generator for receiver `stream` (1 or 2) under `seed`.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Produces the two receiver observations of `wave` for `scenario`.
///
/// `carrier_hz` is the acoustic carrier f0 and only sets the phase of kappa.
pub fn propagate(
    wave: &Baseband,
    scenario: &FiberScenario,
    carrier_hz: f64,
    seed: u64,
) -> Result<ObservationPair> {
    scenario.validate()?;
    if wave.is_empty() {
        return Err(Error::EmptyInput("waveform"));
    }
    let power = wave.mean_power();
    if power <= 0.0 {
        return Err(Error::param("waveform", "zero power"));
    }

    let ts = wave.sample_period();
    let delays = delay_pair(scenario);
    let bulk = scenario.transit_time() / 2.0;
    let d1 = (delays.tau1_s - bulk) / ts;
    let d2 = (delays.tau2_s - bulk) / ts;

    let pad = (bulk / ts).ceil() as usize + GUARD_SAMPLES;
    let len = wave.len() + 2 * pad;
    if len > MAX_BUFFER_SAMPLES {
        return Err(Error::BufferOverflow {
            needed: len,
            limit: MAX_BUFFER_SAMPLES,
        });
    }

    let kappa = kappa_of_position(scenario);
    let snrs = expected_snrs(scenario);
    let noise_variance = 10f64.powf(scenario.noise_floor_db / 10.0);
    let amplitude = |snr_db: f64| (noise_variance * 10f64.powf(snr_db / 10.0) / power).sqrt();
    let amplitude1 = amplitude(snrs.receiver1_db);
    let amplitude2 = amplitude(snrs.receiver2_db);

    let tau0 = match kappa.reference {
        Receiver::One => delays.tau2_s - delays.tau1_s,
        Receiver::Two => delays.tau1_s - delays.tau2_s,
    };
    let kappa_phase = -2.0 * PI * carrier_hz * tau0;
    let rotation = Complex64::from_polar(1.0, kappa_phase);
    let (gain1, gain2) = match kappa.reference {
        Receiver::One => (Complex64::new(amplitude1, 0.0), rotation * amplitude2),
        Receiver::Two => (rotation * amplitude1, Complex64::new(amplitude2, 0.0)),
    };

    let mut centered = vec![Complex64::new(0.0, 0.0); pad];
    centered.extend_from_slice(&wave.samples);
    let fft_len = (2 * len).next_power_of_two();
    let shifter = FractionalDelay::new(fft_len);
    let spectrum = shifter.spectrum(&centered);

    let mut s1 = shifter.delayed(&spectrum, d1, len);
    let mut s2 = shifter.delayed(&spectrum, d2, len);
    s1.iter_mut().for_each(|z| *z *= gain1);
    s2.iter_mut().for_each(|z| *z *= gain2);

    if scenario.add_noise {
        let mut rng1 = noise_rng(seed, 1);
        let mut rng2 = noise_rng(seed, 2);
        let n1 = complex_noise(len, noise_variance, &mut rng1);
        let n2 = complex_noise(len, noise_variance, &mut rng2);
        s1.iter_mut().zip(n1).for_each(|(z, n)| *z += n);
        s2.iter_mut().zip(n2).for_each(|(z, n)| *z += n);
    }

    let origin = wave.origin_time - pad as f64 * ts;
    Ok(ObservationPair {
        u1: Baseband::new(s1, wave.sample_rate, origin)?,
        u2: Baseband::new(s2, wave.sample_rate, origin)?,
        meta: ChannelMeta {
            tau1_s: delays.tau1_s,
            tau2_s: delays.tau2_s,
            delta_tau_s: delays.delta_tau_s,
            bulk_delay_s: bulk,
            kappa_mag: kappa.magnitude,
            kappa_phase,
            group_delay_s: 0.0,
            reference_receiver: kappa.reference,
            amplitude1,
            amplitude2,
            noise_variance: if scenario.add_noise { noise_variance } else { 0.0 },
            length_m: scenario.length_m,
            light_speed_mps: scenario.light_speed_mps,
        },
        rng_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, WaveformSpec};

    const L: f64 = 60_000.0;

    #[test]
    fn delay_pair_point_values() {
        let mid = delay_pair(&FiberScenario::new(L, 0.1, L / 2.0));
        assert_eq!(mid.delta_tau_s, 0.0);
        let end = delay_pair(&FiberScenario::new(L, 0.1, L));
        assert_eq!(end.delta_tau_s, 3e-4);
        let p29 = delay_pair(&FiberScenario::new(L, 0.1, 29_000.0));
        assert!((p29.delta_tau_s - (-1e-5)).abs() < 1e-18);
    }

    #[test]
    fn kappa_point_values() {
        for alpha in [0.0, 0.05, 0.1, 0.5] {
            let k = kappa_of_position(&FiberScenario::new(L, alpha, 30_000.0));
            assert_eq!(k.magnitude, 1.0);
            assert_eq!(k.reference, Receiver::One);
        }
        for pos in [0.0, 1_000.0, 45_000.0, L] {
            assert_eq!(kappa_of_position(&FiberScenario::new(L, 0.0, pos)).magnitude, 1.0);
        }
        // far path loses 6 dB more than the near path
        let k = kappa_of_position(&FiberScenario::new(L, 0.1, 0.0));
        let near_gain = 10f64.powf(-0.1 * 0.0 / 20.0);
        let far_gain = 10f64.powf(-0.1 * 60.0 / 20.0);
        assert!((k.magnitude - far_gain / near_gain).abs() < 1e-15);
        assert!((k.magnitude - 0.501_187).abs() < 1e-6);
        assert_eq!(
            kappa_of_position(&FiberScenario::new(L, 0.1, 31_000.0)).reference,
            Receiver::Two
        );
    }

    #[test]
    fn expected_snr_point_values() {
        let s = expected_snrs(&FiberScenario::new(L, 0.1, 0.0));
        assert!((s.receiver1_db - 10.0).abs() < 1e-12);
        assert!((s.receiver2_db - 4.0).abs() < 1e-12);
        let m = expected_snrs(&FiberScenario::new(L, 0.3, L / 2.0));
        assert_eq!(m.receiver1_db, m.receiver2_db);
        let lossless = expected_snrs(&FiberScenario::new(L, 0.0, 12_345.0));
        assert_eq!((lossless.receiver1_db, lossless.receiver2_db), (10.0, 10.0));
    }

    #[test]
    fn source_outside_cable_rejected() {
        let wave = synthesize(&WaveformSpec::reference(5).unwrap()).unwrap();
        let bad = FiberScenario::new(L, 0.1, L + 1.0);
        assert!(matches!(
            propagate(&wave, &bad, 0.0, 1),
            Err(Error::InvalidParameter { name: "source_position_m", .. })
        ));
    }

    #[test]
    fn oversized_waveform_rejected() {
        let wave = Baseband::new(
            vec![Complex64::new(1.0, 0.0); MAX_BUFFER_SAMPLES],
            16_000.0,
            0.0,
        )
        .unwrap();
        let scenario = FiberScenario::new(L, 0.1, 10_000.0).noiseless();
        assert!(matches!(
            propagate(&wave, &scenario, 0.0, 1),
            Err(Error::BufferOverflow { .. })
        ));
    }

    #[test]
    fn midpoint_lossless_streams_differ_only_by_phase() {
        let spec = WaveformSpec::reference(6).unwrap();
        let wave = synthesize(&spec).unwrap();
        let scenario = FiberScenario::new(L, 0.0, L / 2.0).noiseless();
        let pair = propagate(&wave, &scenario, spec.carrier_hz, 3).unwrap();
        let rotation = Complex64::from_polar(1.0, pair.meta.kappa_phase);
        for (a, b) in pair.u1.samples.iter().zip(&pair.u2.samples) {
            assert!((a * rotation - b).norm() < 1e-12);
        }
    }

    #[test]
    fn integer_delay_is_an_exact_shift() {
        // v_f chosen so δτ/2 is exactly two samples at 16 kSps
        let spec = WaveformSpec::reference(5).unwrap();
        let wave = synthesize(&spec).unwrap();
        let mut scenario = FiberScenario::new(L, 0.0, 0.0).noiseless();
        scenario.light_speed_mps = L / (4.0 / 16_000.0) ;
        let pair = propagate(&wave, &scenario, 0.0, 0).unwrap();
        let shift = 4;
        for k in shift..pair.u2.len() {
            let a = pair.u1.samples[k - shift] * pair.meta.amplitude2 / pair.meta.amplitude1;
            let b = pair.u2.samples[k];
            assert!((a - b).norm() < 1e-12, "k {k}");
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let wave = synthesize(&WaveformSpec::reference(5).unwrap()).unwrap();
        let scenario = FiberScenario::new(L, 0.2, 12_000.0);
        let a = propagate(&wave, &scenario, 1e4, 99).unwrap();
        let b = propagate(&wave, &scenario, 1e4, 99).unwrap();
        assert_eq!(a, b);
        let c = propagate(&wave, &scenario, 1e4, 100).unwrap();
        assert_ne!(a.u1.samples, c.u1.samples);
    }
}
