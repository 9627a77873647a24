//! Discrete cross-ambiguity function between the two receiver streams.
//!
//! The surface is indexed by the delay difference δτ = τ1 − τ2 in samples:
//!
//! ```text
//! A(ℓ, ν) = | (1/K) Σ_k u1(k) · conj(u2(k − ℓ)) · exp(−j2πνk·Ts) |
//! ```
//!
//! so a copy of u1 arriving ℓ samples earlier at receiver 2 peaks at lag ℓ,
//! and a stream u2 rotated by exp(−j2πν₀k·Ts) peaks at Doppler ν₀. Samples of
//! u2 outside its buffer are zero (aperiodic correlation). Each Doppler row is
//! one FFT cross-correlation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::{same_rate, Baseband};

/// Delay/Doppler evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CafGrid {
    pub min_lag: i64,
    pub max_lag: i64,
    /// Doppler frequencies in Hz; always contains 0.
    pub doppler_hz: Vec<f64>,
    pub sample_rate: f64,
}

impl CafGrid {
    /// Integer Doppler bins `−half..=half` of width 1/(K·Ts).
    pub fn new(
        min_lag: i64,
        max_lag: i64,
        doppler_half_bins: usize,
        k_samples: usize,
        sample_rate: f64,
    ) -> Result<Self> {
        if k_samples == 0 {
            return Err(Error::param("k_samples", "must be positive"));
        }
        let width = sample_rate / k_samples as f64;
        let half = doppler_half_bins as i64;
        let doppler_hz = (-half..=half).map(|b| b as f64 * width).collect();
        Self::with_doppler(min_lag, max_lag, doppler_hz, sample_rate)
    }

    pub fn with_doppler(
        min_lag: i64,
        max_lag: i64,
        doppler_hz: Vec<f64>,
        sample_rate: f64,
    ) -> Result<Self> {
        if min_lag > max_lag {
            return Err(Error::param("lags", format!("{min_lag} > {max_lag}")));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::param("sample_rate", "must be positive"));
        }
        if !doppler_hz.contains(&0.0) {
            return Err(Error::param("doppler_hz", "bin 0 must be present"));
        }
        Ok(Self {
            min_lag,
            max_lag,
            doppler_hz,
            sample_rate,
        })
    }

    /// Symmetric lag window `±max_lag`.
    pub fn window(max_lag: usize, doppler_half_bins: usize, k_samples: usize, sample_rate: f64) -> Result<Self> {
        let m = max_lag as i64;
        Self::new(-m, m, doppler_half_bins, k_samples, sample_rate)
    }

    /// Lags covering every physically possible δτ on a cable, ±(⌈L/(v_f·Ts)⌉ + 1).
    ///
    /// The extra lag keeps end-of-cable peaks off the grid edge so they can be refined.
    pub fn for_fiber(
        length_m: f64,
        light_speed_mps: f64,
        doppler_half_bins: usize,
        k_samples: usize,
        sample_rate: f64,
    ) -> Result<Self> {
        let max = (length_m / light_speed_mps * sample_rate).ceil() as usize + 1;
        Self::window(max, doppler_half_bins, k_samples, sample_rate)
    }

    pub fn n_lags(&self) -> usize {
        (self.max_lag - self.min_lag + 1) as usize
    }

    pub fn n_doppler(&self) -> usize {
        self.doppler_hz.len()
    }

    pub fn lag(&self, index: usize) -> i64 {
        self.min_lag + index as i64
    }

    pub fn lag_seconds(&self, index: usize) -> f64 {
        self.lag(index) as f64 / self.sample_rate
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        self.min_lag..=self.max_lag
    }
}

/// CAF modulus over a [`CafGrid`], row-major in lag then Doppler.
#[derive(Debug, Clone, PartialEq)]
pub struct CafSurface {
    amplitudes: Vec<f64>,
    pub grid: CafGrid,
    /// K, the length of u1 and the normalization count.
    pub k_samples: usize,
}

impl CafSurface {
    pub fn from_amplitudes(grid: CafGrid, k_samples: usize, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != grid.n_lags() * grid.n_doppler() {
            return Err(Error::param(
                "amplitudes",
                format!(
                    "{} cells for a {}x{} grid",
                    amplitudes.len(),
                    grid.n_lags(),
                    grid.n_doppler()
                ),
            ));
        }
        if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::param("amplitudes", "must be finite and non-negative"));
        }
        Ok(Self {
            amplitudes,
            grid,
            k_samples,
        })
    }

    pub fn get(&self, lag_index: usize, doppler_index: usize) -> f64 {
        self.amplitudes[lag_index * self.grid.n_doppler() + doppler_index]
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Amplitudes along the lag axis at one Doppler bin.
    pub fn lag_cut(&self, doppler_index: usize) -> Vec<f64> {
        (0..self.grid.n_lags())
            .map(|i| self.get(i, doppler_index))
            .collect()
    }

    /// Index of the zero-Doppler bin.
    pub fn zero_doppler_index(&self) -> usize {
        self.grid
            .doppler_hz
            .iter()
            .position(|&d| d == 0.0)
            .expect("grid invariant: Doppler 0 present")
    }

    /// `(lag_index, doppler_index, amplitude)` for every cell.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let nd = self.grid.n_doppler();
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, &a)| (i / nd, i % nd, a))
    }

    /// Root-mean-square cell amplitude.
    pub fn rms(&self) -> f64 {
        let sum: f64 = self.amplitudes.iter().map(|a| a * a).sum();
        (sum / self.amplitudes.len() as f64).sqrt()
    }

    pub fn median(&self) -> f64 {
        let mut v = self.amplitudes.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

/// Discrete CAF of `u1` against `u2` over `grid`, normalized by K = len(u1).
pub fn caf_discrete(u1: &Baseband, u2: &Baseband, grid: &CafGrid) -> Result<CafSurface> {
    if u1.is_empty() {
        return Err(Error::EmptyInput("u1"));
    }
    if u2.is_empty() {
        return Err(Error::EmptyInput("u2"));
    }
    if !same_rate(u1.sample_rate, u2.sample_rate) {
        return Err(Error::SampleRateMismatch {
            left: u1.sample_rate,
            right: u2.sample_rate,
        });
    }
    if !same_rate(u1.sample_rate, grid.sample_rate) {
        return Err(Error::SampleRateMismatch {
            left: u1.sample_rate,
            right: grid.sample_rate,
        });
    }
    let k = u1.len();
    let m = u2.len();
    // |ℓ| ≥ max(K, M) leaves no overlap with the zero-padded u2
    let limit = k.max(m);
    for lag in [grid.min_lag, grid.max_lag] {
        if lag.unsigned_abs() as usize >= limit {
            return Err(Error::LagOutOfRange { lag, limit });
        }
    }

    // queried lags outside the correlation support must not alias onto it
    let reach = grid.min_lag.unsigned_abs().max(grid.max_lag.unsigned_abs()) as usize;
    let n = (k + m + reach).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut b = u2.samples.clone();
    b.resize(n, Complex64::new(0.0, 0.0));
    forward.process(&mut b);
    b.iter_mut().for_each(|z| *z = z.conj());

    let ts = u1.sample_period();
    let scale = 1.0 / (k as f64 * n as f64);
    let rows: Vec<Vec<f64>> = grid
        .doppler_hz
        .par_iter()
        .map(|&nu| {
            let mut a: Vec<Complex64> = u1
                .samples
                .iter()
                .enumerate()
                .map(|(i, &x)| x * Complex64::from_polar(1.0, -2.0 * PI * nu * i as f64 * ts))
                .collect();
            a.resize(n, Complex64::new(0.0, 0.0));
            forward.process(&mut a);
            a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
            inverse.process(&mut a);
            // circular index of lag ℓ is ℓ mod n
            grid.lags()
                .map(|lag| a[lag.rem_euclid(n as i64) as usize].norm() * scale)
                .collect()
        })
        .collect();

    let nd = grid.n_doppler();
    let mut amplitudes = vec![0.0; grid.n_lags() * nd];
    for (d, row) in rows.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            amplitudes[l * nd + d] = v;
        }
    }
    CafSurface::from_amplitudes(grid.clone(), k, amplitudes)
}

/// Grid maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub lag_index: usize,
    pub doppler_index: usize,
    pub lag: i64,
    pub doppler_hz: f64,
    pub amplitude: f64,
}

/// Argmax of the surface; ties go to the smallest |lag|, then smallest |ν|.
pub fn peak_search(surface: &CafSurface) -> Peak {
    let grid = &surface.grid;
    let key = |li: usize, di: usize| (grid.lag(li).unsigned_abs(), grid.doppler_hz[di].abs());
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for (li, di, a) in surface.cells() {
        let better = a > best.2
            || (a == best.2 && {
                let (bl, bd) = key(best.0, best.1);
                let (cl, cd) = key(li, di);
                cl < bl || (cl == bl && cd < bd)
            });
        if better {
            best = (li, di, a);
        }
    }
    Peak {
        lag_index: best.0,
        doppler_index: best.1,
        lag: grid.lag(best.0),
        doppler_hz: grid.doppler_hz[best.1],
        amplitude: best.2,
    }
}

/// Vertex offset of the parabola through (−1, a), (0, b), (1, c).
pub fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
}

/// Sub-cell peak position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedPeak {
    pub peak: Peak,
    pub delta_tau_s: f64,
    pub doppler_hz: f64,
    /// Fractional lag offset applied, in samples.
    pub lag_offset: f64,
    pub doppler_offset: f64,
    /// True when the peak sits on the lag edge of the grid and was not refined.
    pub lag_boundary: bool,
    pub doppler_boundary: bool,
}

impl RefinedPeak {
    pub fn refined(&self) -> bool {
        !self.lag_boundary
    }
}

/// Separable three-point parabolic interpolation around the grid maximum.
pub fn refine_peak(surface: &CafSurface) -> RefinedPeak {
    let peak = peak_search(surface);
    let grid = &surface.grid;
    let (li, di) = (peak.lag_index, peak.doppler_index);
    let b = peak.amplitude;

    let lag_boundary = li == 0 || li + 1 == grid.n_lags();
    let lag_offset = if lag_boundary {
        0.0
    } else {
        parabolic_offset(surface.get(li - 1, di), b, surface.get(li + 1, di))
    };

    let doppler_boundary = di == 0 || di + 1 == grid.n_doppler();
    let doppler_offset = if doppler_boundary {
        0.0
    } else {
        parabolic_offset(surface.get(li, di - 1), b, surface.get(li, di + 1))
    };
    let doppler_hz = if doppler_boundary {
        peak.doppler_hz
    } else {
        let step = if doppler_offset >= 0.0 {
            grid.doppler_hz[di + 1] - grid.doppler_hz[di]
        } else {
            grid.doppler_hz[di] - grid.doppler_hz[di - 1]
        };
        peak.doppler_hz + doppler_offset * step
    };

    RefinedPeak {
        peak,
        delta_tau_s: (peak.lag as f64 + lag_offset) / grid.sample_rate,
        doppler_hz,
        lag_offset,
        doppler_offset,
        lag_boundary,
        doppler_boundary,
    }
}

/// Cells within `lag` samples and `doppler` bins of the main peak are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exclusion {
    pub lag: usize,
    pub doppler: usize,
}

impl Exclusion {
    /// One chip in lag, one bin in Doppler.
    pub fn mainlobe(oversampling: usize) -> Self {
        Self {
            lag: oversampling,
            doppler: 1,
        }
    }

    pub fn none() -> Self {
        Self { lag: 0, doppler: 0 }
    }

    fn contains(&self, peak: &Peak, lag_index: usize, doppler_index: usize) -> bool {
        lag_index.abs_diff(peak.lag_index) <= self.lag
            && doppler_index.abs_diff(peak.doppler_index) <= self.doppler
    }
}

/// Cell amplitudes outside the main-peak exclusion, divided by the peak amplitude.
pub fn sidelobes(surface: &CafSurface, exclusion: Exclusion) -> Result<Vec<f64>> {
    let peak = peak_search(surface);
    let norm = if peak.amplitude > 0.0 { peak.amplitude } else { 1.0 };
    let values: Vec<f64> = surface
        .cells()
        .filter(|&(li, di, _)| {
            // radius 0 still keeps the peak cell itself
            exclusion == Exclusion::none() || !exclusion.contains(&peak, li, di)
        })
        .map(|(_, _, a)| a / norm)
        .collect();
    if values.is_empty() {
        return Err(Error::AllCellsExcluded);
    }
    Ok(values)
}

/// Empirical complementary CDF of normalized CAF amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccdf {
    sorted: Vec<f64>,
}

impl Ccdf {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::AllCellsExcluded);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    /// Pools normalized values from several surfaces.
    pub fn pooled<I: IntoIterator<Item = Vec<f64>>>(parts: I) -> Result<Self> {
        Self::from_values(parts.into_iter().flatten().collect())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of cells strictly above `threshold`.
    pub fn exceedance(&self, threshold: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&v| v <= threshold);
        (self.sorted.len() - at_or_below) as f64 / self.sorted.len() as f64
    }

    /// `(threshold, exceedance)` at `points` evenly spaced thresholds in [0, 1].
    pub fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        let steps = points.max(2) - 1;
        (0..=steps)
            .map(|i| {
                let t = i as f64 / steps as f64;
                (t, self.exceedance(t))
            })
            .collect()
    }
}

/// CCDF of one surface outside the main-peak exclusion region.
pub fn ccdf(surface: &CafSurface, exclusion: Exclusion) -> Result<Ccdf> {
    Ccdf::from_values(sidelobes(surface, exclusion)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of the CAF product terms for independent factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermMoments {
    /// x1·x2*: its mean is the signal autocorrelation, its variance is not
    /// covered by the independent-factor formulas.
    pub signal: Option<Moments>,
    pub noise1_signal2: Moments,
    pub signal1_noise2: Moments,
    pub noise_noise: Moments,
}

/// Closed-form moments for noises with means μ and variances σ², and
/// zero-mean signals with variances σx².
pub fn term_moments(
    mu1: f64,
    mu2: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
    sigma_x1_sq: f64,
    sigma_x2_sq: f64,
) -> Result<TermMoments> {
    for (name, v) in [
        ("sigma1_sq", sigma1_sq),
        ("sigma2_sq", sigma2_sq),
        ("sigma_x1_sq", sigma_x1_sq),
        ("sigma_x2_sq", sigma_x2_sq),
    ] {
        if !(v >= 0.0) {
            return Err(Error::param(name, "variance must be non-negative"));
        }
    }
    let second1 = sigma1_sq + mu1 * mu1;
    let second2 = sigma2_sq + mu2 * mu2;
    Ok(TermMoments {
        signal: None,
        noise1_signal2: Moments {
            mean: 0.0,
            variance: second1 * sigma_x2_sq,
        },
        signal1_noise2: Moments {
            mean: 0.0,
            variance: second2 * sigma_x1_sq,
        },
        noise_noise: Moments {
            mean: mu1 * mu2,
            variance: second1 * second2 - mu1 * mu1 * mu2 * mu2,
        },
    })
}

/// Variance of the mean of M zero-mean samples with variance σ².
pub fn mean_variance_law(sigma_sq: f64, m_samples: usize) -> Result<f64> {
    if m_samples == 0 {
        return Err(Error::param("m_samples", "must be at least 1"));
    }
    Ok(sigma_sq / m_samples as f64)
}
