//! Acoustic waveform synthesis: maximal-length PN sequences, BPSK chip
//! mapping, root-raised-cosine pulse shaping and the matched-filter front end.
//!
//! Chips are mapped `0 -> +1`, `1 -> -1`. A shaped burst carries exactly one
//! PN period and is zero-padded by the filter span, so its length is
//! `chips * oversampling + filter_span * oversampling`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fibonacci feedback taps for one primitive polynomial per register length.
///
/// Tap `t` refers to register stage `t` (1-based); the highest tap is the
/// register length. Degrees 5..9 cover PN lengths 31..511.
pub const DEFAULT_TAPS: &[(u32, &[u32])] = &[
    (2, &[2, 1]),
    (3, &[3, 2]),
    (4, &[4, 3]),
    (5, &[5, 3]),
    (6, &[6, 5]),
    (7, &[7, 6]),
    (8, &[8, 6, 5, 4]),
    (9, &[9, 5]),
    (10, &[10, 7]),
    (11, &[11, 9]),
];

const MAX_DEGREE: u32 = 24;

pub fn default_taps(degree: u32) -> Option<&'static [u32]> {
    DEFAULT_TAPS
        .iter()
        .find(|(d, _)| *d == degree)
        .map(|(_, taps)| *taps)
}

/// Linear feedback shift register definition for an m-sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PnSpec {
    pub degree: u32,
    pub taps: Vec<u32>,
    pub seed_state: u32,
}

impl PnSpec {
    /// Built-in primitive polynomial for `degree` with an all-ones-in-stage-1 seed.
    pub fn with_default_taps(degree: u32) -> Result<Self> {
        let taps = default_taps(degree).ok_or_else(|| {
            Error::param("degree", format!("no built-in polynomial for degree {degree}"))
        })?;
        Ok(Self {
            degree,
            taps: taps.to_vec(),
            seed_state: 1,
        })
    }

    /// Period of a maximal-length sequence, `2^degree - 1`.
    pub fn period(&self) -> usize {
        (1usize << self.degree) - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 2 || self.degree > MAX_DEGREE {
            return Err(Error::param(
                "degree",
                format!("{} outside 2..={MAX_DEGREE}", self.degree),
            ));
        }
        if self.taps.is_empty() {
            return Err(Error::param("taps", "tap set is empty"));
        }
        if let Some(t) = self.taps.iter().find(|&&t| t == 0 || t > self.degree) {
            return Err(Error::param(
                "taps",
                format!("tap {t} outside 1..={}", self.degree),
            ));
        }
        if self.seed_state == 0 {
            return Err(Error::DegenerateLfsr);
        }
        if self.seed_state >> self.degree != 0 {
            return Err(Error::param(
                "seed_state",
                format!("{:#b} wider than {} bits", self.seed_state, self.degree),
            ));
        }
        Ok(())
    }
}

/// One full period of the m-sequence as `+1/-1` chips.
///
/// The register is stepped until it returns to its seed; a return before
/// `2^degree - 1` steps (or no return at all) rejects the tap set.
pub fn gen_mseq(spec: &PnSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let degree = spec.degree;
    let mask = (1u32 << degree) - 1;
    let tap_mask = spec.taps.iter().fold(0u32, |m, &t| m | 1 << (t - 1));
    let expected = spec.period();

    let mut state = spec.seed_state;
    let mut chips = Vec::with_capacity(expected);
    for step in 1..=expected {
        let out = (state >> (degree - 1)) & 1;
        chips.push(if out == 0 { 1.0 } else { -1.0 });
        let feedback = (state & tap_mask).count_ones() & 1;
        state = ((state << 1) | feedback) & mask;
        if state == spec.seed_state && step < expected {
            return Err(Error::NonMaximalPolynomial {
                taps: spec.taps.clone(),
                period: step,
                expected,
            });
        }
    }
    if state != spec.seed_state {
        // singular register (top stage not tapped): never returns to the seed
        return Err(Error::NonMaximalPolynomial {
            taps: spec.taps.clone(),
            period: 0,
            expected,
        });
    }
    Ok(chips)
}

/// Transmit waveform parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub pn: PnSpec,
    /// Samples per second after oversampling.
    pub sample_rate: f64,
    /// Samples per chip.
    pub oversampling: usize,
    pub rolloff: f64,
    /// Filter length in chips; the filter has `filter_span * oversampling + 1` taps.
    pub filter_span: usize,
    /// Acoustic carrier f0. Processing stays at complex baseband; the carrier
    /// only enters through the phase of kappa.
    pub carrier_hz: f64,
}

impl WaveformSpec {
    /// 16 kSps, 4 samples per chip, roll-off 0.31, 8-chip filter.
    pub fn reference(pn_degree: u32) -> Result<Self> {
        Ok(Self {
            pn: PnSpec::with_default_taps(pn_degree)?,
            sample_rate: 16_000.0,
            oversampling: 4,
            rolloff: 0.31,
            filter_span: 8,
            carrier_hz: 10_000.0,
        })
    }

    pub fn chip_rate(&self) -> f64 {
        self.sample_rate / self.oversampling as f64
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn tap_count(&self) -> usize {
        self.filter_span * self.oversampling + 1
    }

    /// Group delay of one pulse-shaping filter in samples.
    pub fn filter_delay_samples(&self) -> usize {
        self.filter_span * self.oversampling / 2
    }

    pub fn validate(&self) -> Result<()> {
        self.pn.validate()?;
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::param("sample_rate", "must be positive and finite"));
        }
        if self.oversampling == 0 {
            return Err(Error::param("oversampling", "must be at least 1"));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::param(
                "rolloff",
                format!("{} outside (0, 1]", self.rolloff),
            ));
        }
        if self.filter_span == 0 {
            return Err(Error::param("filter_span", "must be at least 1"));
        }
        if (self.filter_span * self.oversampling) % 2 != 0 {
            return Err(Error::param(
                "filter_span",
                "filter_span * oversampling must be even for a symmetric odd-length filter",
            ));
        }
        if !self.carrier_hz.is_finite() || self.carrier_hz < 0.0 {
            return Err(Error::param("carrier_hz", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Complex baseband sample stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseband {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    /// Time of the first sample in seconds.
    pub origin_time: f64,
}

impl Baseband {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, origin_time: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::param("sample_rate", "must be positive and finite"));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::param("samples", "non-finite sample"));
        }
        Ok(Self {
            samples,
            sample_rate,
            origin_time,
        })
    }

    /// Sample count K.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Mean power over all K samples.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Time of sample `k`.
    pub fn time_of(&self, k: usize) -> f64 {
        self.origin_time + k as f64 / self.sample_rate
    }
}

/// Continuous root-raised-cosine impulse response at `t` chips.
fn rrc_response(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let singular = 1.0 / (4.0 * beta);
    if (t.abs() - singular).abs() < 1e-9 {
        let s = (PI / (4.0 * beta)).sin();
        let c = (PI / (4.0 * beta)).cos();
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * s + (1.0 - 2.0 / PI) * c);
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Unit-energy root-raised-cosine taps, `filter_span * oversampling + 1` long.
pub fn rrc_taps(spec: &WaveformSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.tap_count();
    let center = (n - 1) as f64 / 2.0;
    let osf = spec.oversampling as f64;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| rrc_response((i as f64 - center) / osf, spec.rolloff))
        .collect();
    let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|h| *h /= norm);
    Ok(taps)
}

fn convolve(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + taps.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &h) in taps.iter().enumerate() {
            y[i + j] += xi * h;
        }
    }
    y
}

/// Upsamples `chips` and filters them with the transmit RRC.
///
/// `origin_time` is set so that t = 0 is the center of the first chip's pulse.
pub fn shape_pulse(chips: &[f64], spec: &WaveformSpec) -> Result<Baseband> {
    if chips.is_empty() {
        return Err(Error::EmptyInput("chips"));
    }
    let taps = rrc_taps(spec)?;
    let osf = spec.oversampling;
    let mut impulses = vec![Complex64::new(0.0, 0.0); chips.len() * osf];
    for (i, &c) in chips.iter().enumerate() {
        impulses[i * osf] = Complex64::new(c, 0.0);
    }
    let mut samples = convolve(&impulses, &taps);
    // drop the trailing zero-stuffing so the burst is chips*osf + span*osf long
    samples.truncate(chips.len() * osf + spec.filter_span * osf);
    let origin = -(spec.filter_delay_samples() as f64) * spec.sample_period();
    Baseband::new(samples, spec.sample_rate, origin)
}

/// Generates and shapes one PN period.
pub fn synthesize(spec: &WaveformSpec) -> Result<Baseband> {
    let chips = gen_mseq(&spec.pn)?;
    shape_pulse(&chips, spec)
}

/// Convolves with the conjugate time-reversed transmit pulse.
///
/// The filter group delay is folded into `origin_time`, so a pulse centered
/// at time t before filtering peaks at time t afterwards.
pub fn matched_filter(rx: &Baseband, spec: &WaveformSpec) -> Result<Baseband> {
    if !same_rate(rx.sample_rate, spec.sample_rate) {
        return Err(Error::SampleRateMismatch {
            left: rx.sample_rate,
            right: spec.sample_rate,
        });
    }
    if rx.is_empty() {
        return Err(Error::EmptyInput("rx"));
    }
    // RRC taps are real and symmetric: the reversed conjugate is the filter itself
    let mut taps = rrc_taps(spec)?;
    taps.reverse();
    let samples = convolve(&rx.samples, &taps);
    let origin = rx.origin_time - spec.filter_delay_samples() as f64 * spec.sample_period();
    Baseband::new(samples, rx.sample_rate, origin)
}

pub(crate) fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(degree: u32) -> WaveformSpec {
        WaveformSpec::reference(degree).unwrap()
    }

    #[test]
    fn degree3_sequence_matches_hand_stepped_register() {
        // stages (1,2,3) from (1,0,0); output stage 3, feedback 3 xor 1
        let spec = PnSpec {
            degree: 3,
            taps: vec![3, 1],
            seed_state: 0b001,
        };
        let chips = gen_mseq(&spec).unwrap();
        assert_eq!(chips, vec![1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn default_polynomials_are_maximal_and_balanced() {
        for degree in 2..=11 {
            let chips = gen_mseq(&PnSpec::with_default_taps(degree).unwrap()).unwrap();
            assert_eq!(chips.len(), (1 << degree) - 1);
            let sum: f64 = chips.iter().sum();
            assert_eq!(sum, -1.0, "degree {degree}");
        }
    }

    #[test]
    fn zero_seed_is_degenerate() {
        let spec = PnSpec {
            degree: 5,
            taps: vec![5, 3],
            seed_state: 0,
        };
        assert_eq!(gen_mseq(&spec), Err(Error::DegenerateLfsr));
    }

    #[test]
    fn non_primitive_taps_rejected() {
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2 is not primitive
        let spec = PnSpec {
            degree: 4,
            taps: vec![4, 2],
            seed_state: 1,
        };
        assert!(matches!(
            gen_mseq(&spec),
            Err(Error::NonMaximalPolynomial { expected: 15, .. })
        ));
        let singular = PnSpec {
            degree: 5,
            taps: vec![3, 2],
            seed_state: 1,
        };
        assert!(matches!(
            gen_mseq(&singular),
            Err(Error::NonMaximalPolynomial { .. })
        ));
    }

    #[test]
    fn reference_filter_has_33_symmetric_taps() {
        let taps = rrc_taps(&reference(7)).unwrap();
        assert_eq!(taps.len(), 8 * 4 + 1);
        for i in 0..taps.len() {
            assert!((taps[i] - taps[taps.len() - 1 - i]).abs() < 1e-15);
        }
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        assert!((energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rolloff_out_of_range_rejected() {
        let mut spec = reference(5);
        spec.rolloff = 0.0;
        assert!(matches!(
            shape_pulse(&[1.0], &spec),
            Err(Error::InvalidParameter { name: "rolloff", .. })
        ));
        spec.rolloff = 1.2;
        assert!(shape_pulse(&[1.0], &spec).is_err());
    }

    #[test]
    fn single_chip_reproduces_impulse_response() {
        let spec = reference(5);
        let wave = shape_pulse(&[1.0], &spec).unwrap();
        let taps = rrc_taps(&spec).unwrap();
        assert_eq!(wave.len(), 4 + 32);
        for (i, h) in taps.iter().enumerate().take(wave.len()) {
            assert!((wave.samples[i].re - h).abs() < 1e-15);
        }
        // pulse center at t = 0
        assert!((wave.time_of(16)).abs() < 1e-15);
    }

    #[test]
    fn matched_filter_peak_is_pulse_energy_at_center() {
        let spec = reference(5);
        let wave = shape_pulse(&[1.0], &spec).unwrap();
        let y = matched_filter(&wave, &spec).unwrap();
        let (idx, peak) = y
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(idx, 32);
        assert!((peak.re - 1.0).abs() < 1e-12);
        assert!(y.time_of(idx).abs() < 1e-15);
    }

    #[test]
    fn matched_filter_rejects_rate_mismatch() {
        let spec = reference(5);
        let rx = Baseband::new(vec![Complex64::new(1.0, 0.0); 8], 8000.0, 0.0).unwrap();
        assert!(matches!(
            matched_filter(&rx, &spec),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn chip_rate_sampling_recovers_chips() {
        let spec = reference(7);
        let chips = gen_mseq(&spec.pn).unwrap();
        let y = matched_filter(&shape_pulse(&chips, &spec).unwrap(), &spec).unwrap();
        let first_peak = 2 * spec.filter_delay_samples();
        for (i, &c) in chips.iter().enumerate() {
            let v = y.samples[first_peak + i * spec.oversampling].re;
            assert_eq!(v.signum(), c, "chip {i}");
        }
    }

    #[test]
    fn non_finite_samples_rejected() {
        assert!(Baseband::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0, 0.0).is_err());
    }
}
