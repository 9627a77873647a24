//! Cramér-Rao bound on the delay between the two receiver streams.
//!
//! For circular Gaussian signal and noise with PSDs S, N1, N2 and a relative
//! scale κ between the receivers, the delay Fisher information from N samples
//! is `8π²|κ|²N ∫ f² S²(f) / Δκ(f) df` over `[−1/(2Ts), 1/(2Ts)]`, where
//! `Δκ = (S + N1)(S + N2) − |κ|² S²`. With flat PSDs the integral closes to
//! `(2/3) π² |κ|² N S² / (Ts³ ((1 − |κ|²) S² + N1 N2 + S N1 + S N2))`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::channel::{expected_snrs, kappa_of_position, FiberScenario};
use crate::error::{Error, Result};

/// CRB values above this many squared sample periods are not meaningful.
pub const APPLICABLE_LIMIT_TS2: f64 = 1.0;

const MIN_INTERVALS: usize = 1 << 14;
const MAX_INTERVALS: usize = 1 << 24;
const RELATIVE_TOLERANCE: f64 = 1e-10;

type Psd = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Signal and noise power spectral densities over the sampled band.
pub struct PsdModel {
    pub signal: Psd,
    pub noise1: Psd,
    pub noise2: Psd,
    pub ts: f64,
}

impl PsdModel {
    pub fn new(signal: Psd, noise1: Psd, noise2: Psd, ts: f64) -> Self {
        Self {
            signal,
            noise1,
            noise2,
            ts,
        }
    }

    pub fn flat(s: f64, n1: f64, n2: f64, ts: f64) -> Self {
        Self::new(
            Box::new(move |_| s),
            Box::new(move |_| n1),
            Box::new(move |_| n2),
            ts,
        )
    }

    pub fn band_edge(&self) -> f64 {
        0.5 / self.ts
    }
}

impl std::fmt::Debug for PsdModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PsdModel").field("ts", &self.ts).finish_non_exhaustive()
    }
}

fn check_kappa(kappa_mag: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&kappa_mag) {
        return Err(Error::param(
            "kappa_mag",
            format!("{kappa_mag} outside [0, 1]"),
        ));
    }
    if kappa_mag == 0.0 {
        return Err(Error::UnboundedCrb);
    }
    Ok(())
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    Ok(())
}

/// Composite Simpson over `[a, b]` with `intervals` (even) panels.
fn simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, intervals: usize) -> Result<f64> {
    let h = (b - a) / intervals as f64;
    let mut sum = f(a)? + f(b)?;
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h)?;
    }
    Ok(sum * h / 3.0)
}

/// Delay CRB in seconds² from arbitrary PSDs, integrated numerically.
///
/// Simpson panels double from 2^14 until successive estimates agree to 1e-10
/// relative; the Richardson-extrapolated value is returned.
pub fn crb_general(psd: &PsdModel, kappa_mag: f64, n_samples: usize) -> Result<f64> {
    check_kappa(kappa_mag)?;
    check_samples(n_samples)?;
    if !(psd.ts.is_finite() && psd.ts > 0.0) {
        return Err(Error::param("ts", "must be positive"));
    }
    let k2 = kappa_mag * kappa_mag;
    let integrand = |f: f64| -> Result<f64> {
        let s = (psd.signal)(f);
        let n1 = (psd.noise1)(f);
        let n2 = (psd.noise2)(f);
        if s < 0.0 || n1 <= 0.0 || n2 <= 0.0 {
            return Err(Error::InvalidPsd {
                frequency: f,
                value: s.min(n1).min(n2),
            });
        }
        let det = (s + n1) * (s + n2) - k2 * s * s;
        if det <= 0.0 || !det.is_finite() {
            return Err(Error::InvalidPsd {
                frequency: f,
                value: det,
            });
        }
        Ok(f * f * s * s / det)
    };

    let edge = psd.band_edge();
    let mut intervals = MIN_INTERVALS;
    let mut coarse = simpson(&integrand, -edge, edge, intervals)?;
    let integral = loop {
        intervals *= 2;
        let fine = simpson(&integrand, -edge, edge, intervals)?;
        let change = (fine - coarse).abs();
        if change <= RELATIVE_TOLERANCE * fine.abs() {
            break fine + (fine - coarse) / 15.0;
        }
        if intervals >= MAX_INTERVALS {
            return Err(Error::IntegrationDiverged { intervals });
        }
        coarse = fine;
    };
    if integral <= 0.0 {
        return Err(Error::UnboundedCrb);
    }
    Ok(1.0 / (8.0 * PI * PI * k2 * n_samples as f64 * integral))
}

/// Closed-form delay CRB in seconds² for flat PSD levels.
pub fn crb_flat(s: f64, n1: f64, n2: f64, kappa_mag: f64, n_samples: usize, ts: f64) -> Result<f64> {
    check_kappa(kappa_mag)?;
    check_samples(n_samples)?;
    if !(ts.is_finite() && ts > 0.0) {
        return Err(Error::param("ts", "must be positive"));
    }
    if !(s > 0.0 && n1 > 0.0 && n2 > 0.0) {
        return Err(Error::param("psd", "levels must be positive"));
    }
    let k2 = kappa_mag * kappa_mag;
    let denominator = (1.0 - k2) * s * s + n1 * n2 + s * n1 + s * n2;
    let information = 2.0 / 3.0 / ts.powi(3) * PI * PI * k2 * n_samples as f64 * s * s / denominator;
    Ok(1.0 / information)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrbPoint {
    pub position_m: f64,
    pub kappa_mag: f64,
    /// `f64::INFINITY` when |κ| underflows to zero.
    pub crb_s2: f64,
    /// CRB mapped to position: δτ errors scale by v_f/2.
    pub crb_m2: f64,
    /// CRB at or below one squared sample period.
    pub applicable: bool,
    pub unbounded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrbCurve {
    pub points: Vec<CrbPoint>,
    pub n_samples: usize,
    pub loss_db_per_km: f64,
    pub snr_ref_db: f64,
    pub ts: f64,
}

impl CrbCurve {
    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.position_m)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.crb_s2)
    }

    /// Point with the smallest CRB.
    pub fn minimum(&self) -> Option<&CrbPoint> {
        self.points
            .iter()
            .min_by(|a, b| a.crb_s2.total_cmp(&b.crb_s2))
    }
}

/// Flat-PSD CRB along the cable for one sample count.
///
/// At each Δ1 the stronger receiver's SNR sets S (noise floor N1 = N2), and
/// the weaker receiver enters through |κ|.
pub fn crb_position_sweep(
    template: &FiberScenario,
    n_samples: usize,
    ts: f64,
    positions_m: &[f64],
) -> Result<CrbCurve> {
    template.validate()?;
    let noise = 10f64.powf(template.noise_floor_db / 10.0);
    let half_speed = template.light_speed_mps / 2.0;
    let points = positions_m
        .par_iter()
        .map(|&position_m| {
            let scenario = template.at_position(position_m);
            scenario.validate()?;
            let kappa = kappa_of_position(&scenario).magnitude;
            let s = noise * 10f64.powf(expected_snrs(&scenario).reference_db() / 10.0);
            match crb_flat(s, noise, noise, kappa, n_samples, ts) {
                Ok(crb_s2) => Ok(CrbPoint {
                    position_m,
                    kappa_mag: kappa,
                    crb_s2,
                    crb_m2: crb_s2 * half_speed * half_speed,
                    applicable: crb_s2 / (ts * ts) <= APPLICABLE_LIMIT_TS2,
                    unbounded: false,
                }),
                Err(Error::UnboundedCrb) => Ok(CrbPoint {
                    position_m,
                    kappa_mag: kappa,
                    crb_s2: f64::INFINITY,
                    crb_m2: f64::INFINITY,
                    applicable: false,
                    unbounded: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrbCurve {
        points,
        n_samples,
        loss_db_per_km: template.loss_db_per_km,
        snr_ref_db: template.snr_ref_db,
        ts,
    })
}

/// Positions `0, step, 2·step, …` up to and including L.
pub fn position_grid(length_m: f64, step_m: f64) -> Result<Vec<f64>> {
    if !(step_m > 0.0 && step_m <= length_m) {
        return Err(Error::param("position_step_m", "must lie in (0, L]"));
    }
    let n = (length_m / step_m + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step_m).min(length_m)).collect();
    if *grid.last().unwrap() < length_m {
        grid.push(length_m);
    }
    Ok(grid)
}

/// Admissible (|κ|, N) pairs whose flat-PSD CRB does not exceed `upper_bound`.
pub fn feasible_region(
    upper_bound: f64,
    s: f64,
    n1: f64,
    n2: f64,
    ts: f64,
    kappas: &[f64],
    sample_counts: &[usize],
) -> Result<Vec<(f64, usize)>> {
    if !(upper_bound > 0.0) {
        return Err(Error::param("upper_bound", "must be positive"));
    }
    let mut admitted = Vec::new();
    for &kappa in kappas {
        for &n in sample_counts {
            if crb_flat(s, n1, n2, kappa, n, ts)? <= upper_bound {
                admitted.push((kappa, n));
            }
        }
    }
    Ok(admitted)
}
