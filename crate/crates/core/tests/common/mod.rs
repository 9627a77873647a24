//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// Direct double sum: |(1/K) Σ_k u1(k) u2*(k−ℓ) e^{−j2πνk/fs}|, u2 zero outside its support.
pub fn direct_caf(u1: &[Complex64], u2: &[Complex64], lags: &[i64], doppler_hz: &[f64], fs: f64) -> Vec<f64> {
    let k_len = u1.len() as f64;
    let mut out = Vec::with_capacity(lags.len() * doppler_hz.len());
    for &lag in lags {
        for &nu in doppler_hz {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &x) in u1.iter().enumerate() {
                let j = k as i64 - lag;
                if j < 0 || j >= u2.len() as i64 {
                    continue;
                }
                let rot = Complex64::from_polar(1.0, -2.0 * PI * nu * k as f64 / fs);
                acc += x * u2[j as usize].conj() * rot;
            }
            out.push(acc.norm() / k_len);
        }
    }
    out
}

/// Band-limited interpolation by `factor` through a direct DFT with zero padding.
pub fn upsample(x: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = x.len();
    let spectrum: Vec<Complex64> = (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                .sum()
        })
        .collect();
    let m = n * factor;
    (0..m)
        .map(|t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &s) in spectrum.iter().enumerate() {
                let bin = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                acc += s * Complex64::from_polar(1.0, 2.0 * PI * bin * t as f64 / m as f64);
            }
            acc / n as f64
        })
        .collect()
}

/// Lag (in the input's sample units) maximizing |Σ a(k) b*(k−ℓ)| over `max_lag` lags either side.
pub fn dense_xcorr_peak(a: &[Complex64], b: &[Complex64], max_lag: i64) -> i64 {
    (-max_lag..=max_lag)
        .map(|lag| {
            let v: Complex64 = a
                .iter()
                .enumerate()
                .filter_map(|(k, &x)| {
                    let j = k as i64 - lag;
                    (j >= 0 && j < b.len() as i64).then(|| x * b[j as usize].conj())
                })
                .sum();
            (lag, v.norm())
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
        .0
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Unit-variance circular complex Gaussian samples from a seeded generator.
pub fn gaussian(len: usize, seed: u64) -> Vec<Complex64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let s = 0.5f64.sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}
