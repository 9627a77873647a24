//! Experiment configuration and runners behind the `fiberloc` binary.
//!
//! A run reads one JSON config (or a bundled preset), validates every
//! scenario and waveform it references, then writes fixed-schema CSV files,
//! optional SVG plots and a `run_manifest.json` into the output directory.
//!
//! | experiment  | CSV columns |
//! |-------------|-------------|
//! | `crb-sweep` | `position_m,n_samples,loss_db_per_km,crb_s2,crb_m2,applicable_flag` |
//! | `kappa`     | `position_m,loss_db_per_km,kappa2` |
//! | `caf`       | `lag_s,doppler_hz,amplitude` |
//! | `ccdf`      | `threshold_norm,ccdf` (one file per sweep value) |
//! | `mc`        | `trial,truth_m,estimate_m,delta_tau_hat_s` plus `mc_summary.csv` |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::caf::{caf_discrete, sidelobes, CafGrid, CafSurface, Ccdf, Exclusion};
use crate::channel::{kappa_of_position, propagate, FiberScenario};
use crate::crb::{crb_position_sweep, position_grid};
use crate::positioning::{monte_carlo, trial_seed};
use crate::signal::{matched_filter, synthesize, Baseband, PnSpec, WaveformSpec};

mod plot;

/// Failure classes, each with its own process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unparseable config, unknown field, wrong type.
    #[error("config error: {0}")]
    Schema(String),
    /// Parameters parse but violate a scenario or waveform invariant.
    #[error("invalid configuration: {0}")]
    Invariant(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CrbSweep,
    Kappa,
    Caf,
    Ccdf,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub length_m: f64,
    pub loss_db_per_km: f64,
    pub light_speed_mps: f64,
    pub source_position_m: f64,
    pub snr_ref_db: f64,
    pub noise_floor_db: f64,
    pub add_noise: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            length_m: 60_000.0,
            loss_db_per_km: 0.1,
            light_speed_mps: 2e8,
            source_position_m: 29_000.0,
            snr_ref_db: 10.0,
            noise_floor_db: 0.0,
            add_noise: true,
        }
    }
}

impl ScenarioConfig {
    pub fn to_scenario(&self) -> FiberScenario {
        FiberScenario {
            length_m: self.length_m,
            loss_db_per_km: self.loss_db_per_km,
            light_speed_mps: self.light_speed_mps,
            source_position_m: self.source_position_m,
            snr_ref_db: self.snr_ref_db,
            noise_floor_db: self.noise_floor_db,
            add_noise: self.add_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveformConfig {
    pub pn_degree: u32,
    /// Feedback taps; the built-in polynomial for `pn_degree` when absent.
    pub pn_taps: Option<Vec<u32>>,
    pub pn_seed: u32,
    pub sample_rate: f64,
    pub oversampling: usize,
    pub rolloff: f64,
    pub filter_span: usize,
    pub carrier_hz: f64,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            pn_degree: 7,
            pn_taps: None,
            pn_seed: 1,
            sample_rate: 16_000.0,
            oversampling: 4,
            rolloff: 0.31,
            filter_span: 8,
            carrier_hz: 10_000.0,
        }
    }
}

impl WaveformConfig {
    pub fn to_spec(&self) -> Result<WaveformSpec, CliError> {
        let taps = match &self.pn_taps {
            Some(t) => t.clone(),
            None => PnSpec::with_default_taps(self.pn_degree)
                .map_err(|e| CliError::Invariant(e.to_string()))?
                .taps,
        };
        let spec = WaveformSpec {
            pn: PnSpec {
                degree: self.pn_degree,
                taps,
                seed_state: self.pn_seed,
            },
            sample_rate: self.sample_rate,
            oversampling: self.oversampling,
            rolloff: self.rolloff,
            filter_span: self.filter_span,
            carrier_hz: self.carrier_hz,
        };
        spec.validate().map_err(|e| CliError::Invariant(e.to_string()))?;
        // non-maximal tap sets only show up when the register is stepped
        crate::signal::gen_mseq(&spec.pn).map_err(|e| CliError::Invariant(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrbSweepConfig {
    pub position_step_m: f64,
    pub n_samples: Vec<usize>,
    pub losses_db_per_km: Vec<f64>,
    /// Sample period used in the flat-PSD bound.
    pub ts: f64,
}

impl Default for CrbSweepConfig {
    fn default() -> Self {
        Self {
            position_step_m: 500.0,
            n_samples: vec![31, 63, 127, 255],
            losses_db_per_km: vec![0.1],
            ts: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KappaConfig {
    pub position_step_m: f64,
    pub losses_db_per_km: Vec<f64>,
}

impl Default for KappaConfig {
    fn default() -> Self {
        Self {
            position_step_m: 500.0,
            losses_db_per_km: vec![0.1, 0.2, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CafConfig {
    /// Lag half-width in samples; the cable-wide ±L/v_f window when absent.
    pub max_lag_samples: Option<usize>,
    pub doppler_half_bins: usize,
    pub matched_filter: bool,
}

impl Default for CafConfig {
    fn default() -> Self {
        Self {
            max_lag_samples: None,
            doppler_half_bins: 2,
            matched_filter: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    LossDbPerKm,
    PnDegree,
    SourcePositionM,
}

impl SweepParameter {
    fn label(self) -> &'static str {
        match self {
            SweepParameter::LossDbPerKm => "loss_db_per_km",
            SweepParameter::PnDegree => "pn_degree",
            SweepParameter::SourcePositionM => "source_position_m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CcdfConfig {
    /// Independent noise realizations pooled per curve.
    pub trials: usize,
    pub threshold_points: usize,
    /// Lag cells excluded around the peak; one chip when absent.
    pub exclusion_lag: Option<usize>,
    pub exclusion_doppler: usize,
    pub sweep: Option<Sweep>,
}

impl Default for CcdfConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            threshold_points: 101,
            exclusion_lag: None,
            exclusion_doppler: 1,
            sweep: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub trials: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { trials: 200 }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub crb_sweep: CrbSweepConfig,
    #[serde(default)]
    pub kappa: KappaConfig,
    #[serde(default)]
    pub caf: CafConfig,
    #[serde(default)]
    pub ccdf: CcdfConfig,
    #[serde(default)]
    pub mc: McConfig,
}

/// Parses config text; errors carry serde's line/column diagnostics.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Schema("config is empty".into()));
    }
    serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../presets/", $name, ".json")))),*
        ];
    };
}

presets!(
    "fig_crb_loss01",
    "fig_crb_loss05",
    "fig_kappa2",
    "fig_caf_noiseless_pn127",
    "fig_caf_noise_only_pn127",
    "fig_ccdf_noiseless_pn127",
    "fig_ccdf_noise_only_pn127",
    "fig_caf_pos29_loss01",
    "fig_caf_pos29_loss05",
    "fig_ccdf_pos29_pn127",
    "fig_ccdf_pos2_pn127",
    "fig_caf_pos29_pn63_loss02",
    "fig_caf_pos29_pn255_loss02",
    "fig_ccdf_pos29_loss01",
    "fig_ccdf_pos29_loss05",
    "fig_mc_midpoint_pn511",
);

/// Names of the bundled configs.
pub fn list_presets() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// One series of a sweep: the varied value and the configs it produces.
struct Variant {
    label: String,
    scenario: FiberScenario,
    waveform: WaveformSpec,
}

impl ExperimentConfig {
    fn variants(&self) -> Result<Vec<Variant>, CliError> {
        let base_wave = self.waveform.clone();
        let base_scenario = self.scenario.clone();
        let build = |label: String, scenario: ScenarioConfig, wave: WaveformConfig| {
            let s = scenario.to_scenario();
            s.validate().map_err(|e| CliError::Invariant(e.to_string()))?;
            Ok(Variant {
                label,
                scenario: s,
                waveform: wave.to_spec()?,
            })
        };
        match (&self.experiment, &self.ccdf.sweep) {
            (ExperimentKind::Ccdf, Some(sweep)) => {
                if sweep.values.is_empty() {
                    return Err(CliError::Invariant("ccdf.sweep.values is empty".into()));
                }
                sweep
                    .values
                    .iter()
                    .map(|&v| {
                        let mut scenario = base_scenario.clone();
                        let mut wave = base_wave.clone();
                        match sweep.parameter {
                            SweepParameter::LossDbPerKm => scenario.loss_db_per_km = v,
                            SweepParameter::SourcePositionM => scenario.source_position_m = v,
                            SweepParameter::PnDegree => {
                                if v.fract() != 0.0 || v < 0.0 {
                                    return Err(CliError::Invariant(format!(
                                        "pn_degree sweep value {v} is not an integer"
                                    )));
                                }
                                wave.pn_degree = v as u32;
                                wave.pn_taps = None;
                            }
                        }
                        build(format!("{}_{}", sweep.parameter.label(), v), scenario, wave)
                    })
                    .collect()
            }
            _ => Ok(vec![build(String::new(), base_scenario, base_wave)?]),
        }
    }

    /// Checks every referenced sub-config before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let invariant = |msg: &str| Err(CliError::Invariant(msg.to_string()));
        self.variants()?;
        match self.experiment {
            ExperimentKind::CrbSweep => {
                let c = &self.crb_sweep;
                if c.n_samples.is_empty() || c.n_samples.contains(&0) {
                    return invariant("crb_sweep.n_samples must be non-empty and positive");
                }
                if c.losses_db_per_km.is_empty() || c.losses_db_per_km.iter().any(|&a| !(a >= 0.0)) {
                    return invariant("crb_sweep.losses_db_per_km must be non-empty and non-negative");
                }
                if !(c.ts > 0.0) {
                    return invariant("crb_sweep.ts must be positive");
                }
                position_grid(self.scenario.length_m, c.position_step_m)
                    .map_err(|e| CliError::Invariant(e.to_string()))?;
            }
            ExperimentKind::Kappa => {
                let c = &self.kappa;
                if c.losses_db_per_km.is_empty() || c.losses_db_per_km.iter().any(|&a| !(a >= 0.0)) {
                    return invariant("kappa.losses_db_per_km must be non-empty and non-negative");
                }
                position_grid(self.scenario.length_m, c.position_step_m)
                    .map_err(|e| CliError::Invariant(e.to_string()))?;
            }
            ExperimentKind::Ccdf => {
                if self.ccdf.trials == 0 {
                    return invariant("ccdf.trials must be at least 1");
                }
                if self.ccdf.threshold_points < 2 {
                    return invariant("ccdf.threshold_points must be at least 2");
                }
            }
            ExperimentKind::Mc => {
                if self.mc.trials == 0 {
                    return invariant("mc.trials must be at least 1");
                }
            }
            ExperimentKind::Caf => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: ExperimentKind,
    pub config_sha256: String,
    pub seed: u64,
    pub artifacts: Vec<String>,
}

struct Output<'a> {
    dir: &'a Path,
    svg: bool,
    written: Vec<String>,
}

impl Output<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn plot(
        &mut self,
        name: &str,
        draw: impl FnOnce(&Path) -> Result<(), String>,
    ) -> Result<(), CliError> {
        if self.svg {
            draw(&self.dir.join(name)).map_err(CliError::Runtime)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }
}

/// Validates and runs `config`, writing artifacts into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path, svg: bool) -> Result<RunManifest, CliError> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut out = Output {
        dir: out_dir,
        svg,
        written: Vec::new(),
    };
    match config.experiment {
        ExperimentKind::CrbSweep => run_crb_sweep(config, &mut out)?,
        ExperimentKind::Kappa => run_kappa(config, &mut out)?,
        ExperimentKind::Caf => run_caf(config, &mut out)?,
        ExperimentKind::Ccdf => run_ccdf(config, &mut out)?,
        ExperimentKind::Mc => run_mc(config, &mut out)?,
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment,
        config_sha256: config.hash(),
        seed: config.seed,
        artifacts: out.written.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(out_dir.join("run_manifest.json"), json + "\n")?;
    Ok(manifest)
}

fn run_crb_sweep(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let c = &config.crb_sweep;
    let base = config.scenario.to_scenario();
    let positions = position_grid(base.length_m, c.position_step_m)?;
    let mut csv = String::from("position_m,n_samples,loss_db_per_km,crb_s2,crb_m2,applicable_flag\n");
    let mut series = Vec::new();
    for &loss in &c.losses_db_per_km {
        let template = FiberScenario {
            loss_db_per_km: loss,
            ..base.clone()
        };
        for &n in &c.n_samples {
            let curve = crb_position_sweep(&template, n, c.ts, &positions)?;
            for p in &curve.points {
                writeln!(
                    csv,
                    "{},{},{},{:e},{:e},{}",
                    p.position_m, n, loss, p.crb_s2, p.crb_m2, p.applicable as u8
                )
                .unwrap();
            }
            series.push(plot::Series {
                label: format!("N={n}, {loss} dB/km"),
                points: curve
                    .points
                    .iter()
                    .map(|p| (p.position_m / 1000.0, p.crb_s2))
                    .collect(),
            });
        }
    }
    out.write("crb_sweep.csv", &csv)?;
    out.plot("crb_sweep.svg", |path| {
        plot::lines(path, "Delay CRB along the cable", "position [km]", "CRB [s^2]", &series, true)
    })
}

fn run_kappa(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let base = config.scenario.to_scenario();
    let positions = position_grid(base.length_m, config.kappa.position_step_m)?;
    let mut csv = String::from("position_m,loss_db_per_km,kappa2\n");
    let mut series = Vec::new();
    for &loss in &config.kappa.losses_db_per_km {
        let mut points = Vec::with_capacity(positions.len());
        for &pos in &positions {
            let scenario = FiberScenario {
                loss_db_per_km: loss,
                source_position_m: pos,
                ..base.clone()
            };
            let k = kappa_of_position(&scenario).magnitude;
            writeln!(csv, "{},{},{:e}", pos, loss, k * k).unwrap();
            points.push((pos / 1000.0, k * k));
        }
        series.push(plot::Series {
            label: format!("{loss} dB/km"),
            points,
        });
    }
    out.write("kappa2.csv", &csv)?;
    out.plot("kappa2.svg", |path| {
        plot::lines(path, "|kappa|^2 along the cable", "position [km]", "|kappa|^2", &series, false)
    })
}

/// Receiver streams for one realization, matched-filtered when requested.
fn observe(variant: &Variant, caf: &CafConfig, seed: u64) -> Result<(Baseband, Baseband), CliError> {
    let wave = synthesize(&variant.waveform)?;
    let pair = propagate(&wave, &variant.scenario, variant.waveform.carrier_hz, seed)?;
    if caf.matched_filter {
        Ok((
            matched_filter(&pair.u1, &variant.waveform)?,
            matched_filter(&pair.u2, &variant.waveform)?,
        ))
    } else {
        Ok((pair.u1, pair.u2))
    }
}

fn caf_grid(config: &CafConfig, scenario: &FiberScenario, u1: &Baseband) -> Result<CafGrid, CliError> {
    let grid = match config.max_lag_samples {
        Some(max) => CafGrid::window(max, config.doppler_half_bins, u1.len(), u1.sample_rate),
        None => CafGrid::for_fiber(
            scenario.length_m,
            scenario.light_speed_mps,
            config.doppler_half_bins,
            u1.len(),
            u1.sample_rate,
        ),
    };
    Ok(grid?)
}

fn surface_for(variant: &Variant, caf: &CafConfig, seed: u64) -> Result<CafSurface, CliError> {
    let (y1, y2) = observe(variant, caf, seed)?;
    let grid = caf_grid(caf, &variant.scenario, &y1)?;
    Ok(caf_discrete(&y1, &y2, &grid)?)
}

fn run_caf(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let variant = config.variants()?.remove(0);
    let surface = surface_for(&variant, &config.caf, config.seed)?;
    let grid = &surface.grid;
    let mut csv = String::from("lag_s,doppler_hz,amplitude\n");
    for (li, di, a) in surface.cells() {
        writeln!(csv, "{:e},{},{:e}", grid.lag_seconds(li), grid.doppler_hz[di], a).unwrap();
    }
    out.write("caf.csv", &csv)?;
    let zero = surface.zero_doppler_index();
    let cut = plot::Series {
        label: "Doppler 0".into(),
        points: surface
            .lag_cut(zero)
            .into_iter()
            .enumerate()
            .map(|(i, a)| (grid.lag_seconds(i) * 1e3, a))
            .collect(),
    };
    out.plot("caf.svg", |path| plot::heatmap(path, "CAF amplitude", &surface))?;
    out.plot("caf_zero_doppler.svg", |path| {
        plot::lines(path, "CAF at zero Doppler", "delay [ms]", "amplitude", &[cut], false)
    })
}

fn run_ccdf(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let c = &config.ccdf;
    let mut series = Vec::new();
    for variant in config.variants()? {
        let exclusion = Exclusion {
            lag: c.exclusion_lag.unwrap_or(variant.waveform.oversampling),
            doppler: c.exclusion_doppler,
        };
        let parts = (0..c.trials as u64)
            .into_par_iter()
            .map(|t| {
                let surface = surface_for(&variant, &config.caf, trial_seed(config.seed, t))?;
                Ok(sidelobes(&surface, exclusion)?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let ccdf = Ccdf::pooled(parts)?;
        let curve = ccdf.curve(c.threshold_points);
        let mut csv = String::from("threshold_norm,ccdf\n");
        for (t, p) in &curve {
            writeln!(csv, "{},{:e}", t, p).unwrap();
        }
        let name = if variant.label.is_empty() {
            "ccdf.csv".to_string()
        } else {
            format!("ccdf_{}.csv", variant.label)
        };
        out.write(&name, &csv)?;
        series.push(plot::Series {
            label: if variant.label.is_empty() {
                "CCDF".into()
            } else {
                variant.label.replace('_', " ")
            },
            // zero exceedance cannot go on a log axis
            points: curve.into_iter().filter(|&(_, p)| p > 0.0).collect(),
        });
    }
    out.plot("ccdf.svg", |path| {
        plot::lines(path, "CCDF of CAF amplitudes", "threshold / peak", "P(amplitude > threshold)", &series, true)
    })
}

fn run_mc(config: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let variant = config.variants()?.remove(0);
    let report = monte_carlo(&variant.scenario, &variant.waveform, config.mc.trials, config.seed)?;
    let mut csv = String::from("trial,truth_m,estimate_m,delta_tau_hat_s\n");
    for r in &report.records {
        writeln!(
            csv,
            "{},{},{},{:e}",
            r.trial, r.truth_m, r.estimate.position_m, r.estimate.delta_tau_s
        )
        .unwrap();
    }
    out.write("mc_trials.csv", &csv)?;
    let summary = format!(
        "trials,n_samples,bias_s,rmse_s,rmse_m,variance_s2,crb_flat_s2,crb_shaped_s2,unreliable\n{},{},{:e},{:e},{},{:e},{:e},{:e},{}\n",
        report.trials,
        report.n_samples,
        report.bias_s,
        report.rmse_s,
        report.rmse_m,
        report.variance_s2,
        report.crb_s2,
        report.crb_shaped_s2,
        report.unreliable_count()
    );
    out.write("mc_summary.csv", &summary)?;
    let series = plot::Series {
        label: "estimate".into(),
        points: report
            .records
            .iter()
            .map(|r| (r.trial as f64, r.estimate.position_m / 1000.0))
            .collect(),
    };
    out.plot("mc_estimates.svg", |path| {
        plot::lines(path, "Position estimates per trial", "trial", "position [km]", &[series], false)
    })
}

/// Resolves the config from a preset name or file, applies the seed override.
pub fn load(
    config_path: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let text = match (config_path, preset) {
        (_, Some(name)) => preset_text(name)
            .ok_or_else(|| {
                CliError::Schema(format!(
                    "unknown preset `{name}`; available: {}",
                    list_presets().join(", ")
                ))
            })?
            .to_string(),
        (Some(path), None) => fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?,
        (None, None) => return Err(CliError::Schema("no config file or --preset given".into())),
    };
    let mut config = parse_config(&text)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Default output directory for a run.
pub fn default_out_dir(config_path: Option<&Path>, preset: Option<&str>) -> PathBuf {
    let stem = preset
        .map(str::to_string)
        .or_else(|| {
            config_path
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "run".into());
    PathBuf::from("out").join(stem)
}
