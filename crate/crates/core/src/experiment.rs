//! Declarative experiments: JSON config in, reproducible bundle out.
//!
//! A run walks data collection → noise → SVD → subspace selection →
//! imaging → structure predictions → output, recording wall time per stage.
//! The manifest written alongside the maps holds the fully resolved config,
//! so `rerun` reproduces every CSV byte for byte.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::export::{self, Format};
use crate::forward::{self, Coupling, MsrMatrix};
use crate::geometry::Vec2;
use crate::migration::{self, HeatMap, SvdBasis, TestVector};
use crate::scene::{self, Background, Scatterer, Scene, SearchGrid};
use crate::theory::{self, ComparisonReport, PeakSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForwardModel {
    Born,
    #[default]
    FoldyLax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSpec {
    pub location: Vec2,
    /// Falls back to the experiment-wide radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "default_contrast")]
    pub permittivity: f64,
    #[serde(default = "default_contrast")]
    pub permeability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavelengthSweep {
    pub first: f64,
    pub last: f64,
    pub count: usize,
}

impl Default for WavelengthSweep {
    fn default() -> Self {
        WavelengthSweep {
            first: 0.5,
            last: 0.3,
            count: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// `null` disables noise.
    #[serde(default = "default_snr")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            snr_db: default_snr(),
            seed: 0,
        }
    }
}

/// A complex number written either as a plain real or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        match c {
            ComplexSpec::Real(r) => Complex64::new(r, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x: [-1.0, 1.0],
            y: [-1.0, 1.0],
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_output_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Also dump every (possibly noisy) MSR matrix.
    #[serde(default)]
    pub msr: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_output_dir(),
            formats: default_formats(),
            msr: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakSpec {
    /// Defaults to the number of scatterers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
}

impl Default for PeakSpec {
    fn default() -> Self {
        PeakSpec {
            count: None,
            min_separation: default_min_separation(),
        }
    }
}

/// Radial profile of the predicted kernels around a scatterer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default = "default_profile_radius")]
    pub max_distance: f64,
    #[serde(default = "default_profile_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scatterers: Vec<ScattererSpec>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub background: Background,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default)]
    pub wavelengths: WavelengthSweep,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub model: ForwardModel,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_test_vector")]
    pub test_vector: [ComplexSpec; 3],
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default = "default_true")]
    pub theory: bool,
    #[serde(default)]
    pub peaks: PeakSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    /// Run once per listed frequency count `S`, each in its own subdirectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_sweep: Option<Vec<usize>>,
}

fn default_contrast() -> f64 {
    5.0
}
fn default_snr() -> Option<f64> {
    Some(10.0)
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("submig-out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Pgm]
}
fn default_min_separation() -> f64 {
    0.3
}
fn default_profile_radius() -> f64 {
    1.0
}
fn default_profile_samples() -> usize {
    201
}
fn default_radius() -> f64 {
    0.1
}
fn default_directions() -> usize {
    20
}
fn default_threshold() -> f64 {
    0.01
}
fn default_test_vector() -> [ComplexSpec; 3] {
    [ComplexSpec::Real(5.0), ComplexSpec::Real(1.0), ComplexSpec::Real(1.0)]
}
fn default_true() -> bool {
    true
}

/// Objects validated before a run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scene: Scene,
    pub grid: SearchGrid,
    pub test_vector: TestVector,
}

impl ExperimentConfig {
    /// Default experiment around the given scatterers.
    pub fn with_scatterers(scatterers: Vec<ScattererSpec>) -> Self {
        let json = serde_json::json!({ "scatterers": scatterers });
        serde_json::from_value(json).expect("defaults are valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Angular frequencies, ascending.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let w = &self.wavelengths;
        scene::frequencies_from_wavelengths(w.first, w.last, w.count)
            .map_err(|e| Error::config("wavelengths", root_reason(e)))
    }

    /// Validates every field and builds the scene, grid and test vector.
    pub fn resolve(&self) -> Result<Resolved> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::config("radius", format!("must be > 0, got {}", self.radius)));
        }
        let scatterers: Vec<Scatterer> = self
            .scatterers
            .iter()
            .map(|s| Scatterer::new(s.location, s.radius.unwrap_or(self.radius), s.permittivity, s.permeability))
            .collect();
        let frequencies = self.frequencies()?;
        let scene = Scene::new(scatterers, self.directions)
            .and_then(|s| s.with_background(self.background))
            .and_then(|s| s.with_frequencies(frequencies))?;
        if let Some(snr) = self.noise.snr_db {
            if !snr.is_finite() {
                return Err(Error::config("noise.snr_db", "must be finite or null"));
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config("threshold", format!("must lie in (0, 1), got {}", self.threshold)));
        }
        let test_vector = TestVector::new(self.test_vector.map(Complex64::from))?;
        let grid = scene::make_grid(self.grid.x, self.grid.y, self.grid.step)?;
        for s in scene.scatterers() {
            if !grid.contains(s.location) {
                return Err(Error::config(
                    "grid",
                    format!("scatterer at ({}, {}) lies outside the search grid", s.location.x, s.location.y),
                ));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::config("output.formats", "at least one format is required"));
        }
        if self.peaks.count == Some(0) || !(self.peaks.min_separation > 0.0) {
            return Err(Error::config("peaks", "count must be ≥ 1 and min_separation > 0"));
        }
        if let Some(p) = &self.profile {
            if !(p.max_distance > 0.0) || p.samples < 2 {
                return Err(Error::config("profile", "need max_distance > 0 and at least 2 samples"));
            }
        }
        if let Some(sweep) = &self.frequency_sweep {
            if sweep.is_empty() || sweep.contains(&0) {
                return Err(Error::config("frequency_sweep", "counts must be ≥ 1 and the list nonempty"));
            }
        }
        Ok(Resolved {
            scene,
            grid,
            test_vector,
        })
    }

    /// Copy for a single member `S` of a frequency sweep. `S = 1` uses the
    /// shortest wavelength.
    pub fn sweep_member(&self, count: usize) -> ExperimentConfig {
        let mut c = self.clone();
        c.frequency_sweep = None;
        let shortest = self.wavelengths.first.min(self.wavelengths.last);
        c.wavelengths = if count == 1 {
            WavelengthSweep {
                first: shortest,
                last: shortest,
                count: 1,
            }
        } else {
            WavelengthSweep { count, ..self.wavelengths }
        };
        c.output.directory = self.output.directory.join(format!("S{count:02}"));
        c
    }
}

fn root_reason(e: Error) -> String {
    match e {
        Error::Config { reason, .. } => reason,
        other => other.to_string(),
    }
}

/// Reads and validates a JSON config; parse errors carry line and column.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub count: usize,
    pub directory: PathBuf,
    pub off_target_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparisons {
    pub single: Vec<ComparisonReport>,
    pub multi: ComparisonReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config: ExperimentConfig,
    pub wavelengths: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub significant_counts: Vec<usize>,
    pub singular_values: Vec<Vec<f64>>,
    pub single_peaks: Vec<PeakSet>,
    pub multi_peaks: Option<PeakSet>,
    /// Largest multi-map value farther than the shortest wavelength from
    /// every scatterer.
    pub off_target_max: Option<f64>,
    pub warnings: Vec<String>,
    pub timings: Vec<StageTiming>,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepEntry>,
}

/// In-memory result of one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub scene: Scene,
    pub frequencies: Vec<f64>,
    /// MSR data as imaged, after noise.
    pub data: Vec<MsrMatrix>,
    pub bases: Vec<SvdBasis>,
    pub singles: Vec<HeatMap>,
    pub multi: HeatMap,
    pub theory_singles: Vec<HeatMap>,
    pub theory_multi: Option<HeatMap>,
    pub comparisons: Option<Comparisons>,
    pub single_peaks: Vec<PeakSet>,
    pub multi_peaks: PeakSet,
    pub off_target_max: Option<f64>,
    pub timings: Vec<StageTiming>,
}

impl Outcome {
    pub fn significant_counts(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.retained().unwrap_or(0)).collect()
    }
}

struct Clock {
    timings: Vec<StageTiming>,
}

impl Clock {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().stage(stage);
        let seconds = start.elapsed().as_secs_f64();
        info!("{stage}: {seconds:.3} s");
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds,
        });
        out
    }
}

/// Generates the (noisy) MSR matrix for frequency index `s`.
pub fn synthesize(cfg: &ExperimentConfig, scene: &Scene, s: usize) -> Result<MsrMatrix> {
    let omega = scene.frequencies()[s];
    let clean = match cfg.model {
        ForwardModel::Born => forward::msr_born(scene, omega),
        ForwardModel::FoldyLax => forward::msr_foldy_lax_with(scene, omega, cfg.coupling),
    }
    .stage(Stage::Forward)?;
    match cfg.noise.snr_db {
        Some(snr) => forward::add_awgn_stream(&clean, snr, cfg.noise.seed, s as u64).stage(Stage::Noise),
        None => Ok(clean),
    }
}

/// Runs the pipeline without touching the file system.
pub fn compute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let resolved = cfg.resolve().stage(Stage::Config)?;
    let Resolved {
        scene,
        grid,
        test_vector,
    } = resolved;
    let freqs = scene.frequencies().to_vec();
    let dirs = scene.directions();
    let mut clock = Clock { timings: Vec::new() };

    let clean: Vec<MsrMatrix> = clock.time(Stage::Forward, || {
        freqs
            .par_iter()
            .map(|&w| match cfg.model {
                ForwardModel::Born => forward::msr_born(&scene, w),
                ForwardModel::FoldyLax => forward::msr_foldy_lax_with(&scene, w, cfg.coupling),
            })
            .collect()
    })?;
    let data: Vec<MsrMatrix> = clock.time(Stage::Noise, || match cfg.noise.snr_db {
        Some(snr) => clean
            .par_iter()
            .enumerate()
            .map(|(s, m)| forward::add_awgn_stream(m, snr, cfg.noise.seed, s as u64))
            .collect(),
        None => Ok(clean),
    })?;
    let mut bases: Vec<SvdBasis> = clock.time(Stage::Svd, || data.par_iter().map(migration::svd_decompose).collect())?;
    clock.time(Stage::Threshold, || {
        bases
            .iter_mut()
            .try_for_each(|b| migration::significant_count(b, cfg.threshold).map(|_| ()))
    })?;
    let (singles, multi) = clock.time(Stage::Imaging, || {
        let singles = bases
            .iter()
            .map(|b| migration::image_single(&grid, b, &dirs, &test_vector))
            .collect::<Result<Vec<_>>>()?;
        let multi = migration::image_multi(&grid, &bases, &dirs, &test_vector)?;
        Ok((singles, multi))
    })?;

    let locations = scene.locations();
    let (theory_singles, theory_multi, comparisons) = if cfg.theory {
        clock.time(Stage::Theory, || {
            let ts = freqs
                .iter()
                .map(|&w| theory::predicted_single(&grid, &scene, w))
                .collect::<Result<Vec<_>>>()?;
            let tm = if freqs.len() > 1 {
                Some(theory::predicted_multi(&grid, &scene, freqs[0], freqs[freqs.len() - 1])?)
            } else {
                None
            };
            let single = singles
                .iter()
                .zip(&ts)
                .map(|(c, p)| theory::compare_maps(c, p, &locations))
                .collect::<Result<Vec<_>>>()?;
            let multi_cmp = theory::compare_maps(&multi, tm.as_ref().unwrap_or(&ts[0]), &locations)?;
            Ok((
                ts,
                tm,
                Some(Comparisons {
                    single,
                    multi: multi_cmp,
                }),
            ))
        })?
    } else {
        (Vec::new(), None, None)
    };

    let count = cfg.peaks.count.unwrap_or(locations.len());
    let sep = cfg.peaks.min_separation;
    let single_peaks = singles
        .iter()
        .map(|m| theory::extract_peaks(m, count, sep))
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Imaging)?;
    let multi_peaks = theory::extract_peaks(&multi, count, sep).stage(Stage::Imaging)?;
    let shortest = TAU / freqs[freqs.len() - 1];
    let off_target_max = multi.max_outside(&locations, shortest);

    Ok(Outcome {
        config: cfg.clone(),
        scene,
        frequencies: freqs,
        data,
        bases,
        singles,
        multi,
        theory_singles,
        theory_multi,
        comparisons,
        single_peaks,
        multi_peaks,
        off_target_max,
        timings: clock.timings,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_map(dir: &Path, stem: &str, map: &HeatMap, formats: &[Format], files: &mut Vec<String>) -> Result<()> {
    for &f in formats {
        let name = format!("{stem}.{}", f.extension());
        export::export_heatmap(map, f, &dir.join(&name))?;
        files.push(name);
    }
    Ok(())
}

fn profile_csv(outcome: &Outcome, spec: &ProfileSpec) -> String {
    use std::fmt::Write as _;
    let w = &outcome.frequencies;
    let (w1, ws) = (w[0], w[w.len() - 1]);
    let mut s = String::from("distance,single,multi\n");
    for i in 0..spec.samples {
        let d = spec.max_distance * i as f64 / (spec.samples - 1) as f64;
        let single = theory::single_kernel(d, ws);
        let multi = if w.len() > 1 {
            theory::multi_kernel(d, w1, ws).abs()
        } else {
            single
        };
        let _ = writeln!(s, "{d:.16e},{single:.16e},{multi:.16e}");
    }
    s
}

/// Writes all maps, reports and the manifest into `dir`.
pub fn write_bundle(outcome: &Outcome, dir: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let cfg = &outcome.config;
    let formats = &cfg.output.formats;
    let mut files = Vec::new();
    let out = (|| -> Result<()> {
        create_dir(dir)?;
        for (s, m) in outcome.singles.iter().enumerate() {
            write_map(dir, &format!("single_{:02}", s + 1), m, formats, &mut files)?;
        }
        write_map(dir, "multi", &outcome.multi, formats, &mut files)?;
        for (s, m) in outcome.theory_singles.iter().enumerate() {
            write_map(dir, &format!("theory_single_{:02}", s + 1), m, formats, &mut files)?;
        }
        if let Some(m) = &outcome.theory_multi {
            write_map(dir, "theory_multi", m, formats, &mut files)?;
        }
        if let Some(c) = &outcome.comparisons {
            write_json(&dir.join("comparison.json"), c)?;
            files.push("comparison.json".into());
        }
        if let Some(p) = &cfg.profile {
            let path = dir.join("profile.csv");
            fs::write(&path, profile_csv(outcome, p)).map_err(|e| Error::io(&path, e))?;
            files.push("profile.csv".into());
        }
        if cfg.output.msr {
            for (s, m) in outcome.data.iter().enumerate() {
                let name = format!("msr_{:02}.csv", s + 1);
                export::write_msr_csv(m, &dir.join(&name))?;
                files.push(name);
            }
        }
        Ok(())
    })();
    out.stage(Stage::Output)?;

    let mut timings = outcome.timings.clone();
    timings.push(StageTiming {
        stage: Stage::Output.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    let mut resolved = cfg.clone();
    resolved.output.directory = dir.to_path_buf();
    let manifest = Manifest {
        tool: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        config: resolved,
        wavelengths: outcome.frequencies.iter().map(|w| TAU / w).collect(),
        frequencies: outcome.frequencies.clone(),
        significant_counts: outcome.significant_counts(),
        singular_values: outcome.bases.iter().map(|b| b.singular_values.clone()).collect(),
        single_peaks: outcome.single_peaks.clone(),
        multi_peaks: Some(outcome.multi_peaks.clone()),
        off_target_max: outcome.off_target_max,
        warnings: outcome.scene.warnings().to_vec(),
        timings,
        files,
        sweep: Vec::new(),
    };
    write_json(&dir.join("manifest.json"), &manifest).stage(Stage::Output)?;
    Ok(manifest)
}

/// Runs a config (or each member of its frequency sweep) and writes the
/// bundle(s) to the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.resolve().stage(Stage::Config)?;
    let Some(sweep) = &cfg.frequency_sweep else {
        let outcome = compute(cfg)?;
        return write_bundle(&outcome, &cfg.output.directory);
    };
    let mut entries = Vec::new();
    let mut timings = Vec::new();
    for &count in sweep {
        let member = cfg.sweep_member(count);
        info!("frequency sweep: S = {count}");
        let m = run_experiment(&member)?;
        timings.extend(m.timings.iter().map(|t| StageTiming {
            stage: format!("S{count:02}/{}", t.stage),
            seconds: t.seconds,
        }));
        entries.push(SweepEntry {
            count,
            directory: PathBuf::from(format!("S{count:02}")),
            off_target_max: m.off_target_max,
        });
    }
    let manifest = Manifest {
        tool: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        wavelengths: Vec::new(),
        frequencies: Vec::new(),
        significant_counts: Vec::new(),
        singular_values: Vec::new(),
        single_peaks: Vec::new(),
        multi_peaks: None,
        off_target_max: None,
        warnings: Vec::new(),
        timings,
        files: Vec::new(),
        sweep: entries,
    };
    write_json(&cfg.output.directory.join("manifest.json"), &manifest).stage(Stage::Output)?;
    Ok(manifest)
}

/// Reads a manifest and reruns its config into `output_dir`.
pub fn rerun(manifest_path: &Path, output_dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut cfg = manifest.config;
    cfg.output.directory = output_dir.to_path_buf();
    run_experiment(&cfg)
}

/// Writes only the predicted maps (and profile) for a config.
pub fn run_theory(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let Resolved { scene, grid, .. } = cfg.resolve().stage(Stage::Config)?;
    let dir = &cfg.output.directory;
    let freqs = scene.frequencies();
    let mut files = Vec::new();
    let singles = freqs
        .iter()
        .map(|&w| theory::predicted_single(&grid, &scene, w))
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Theory)?;
    let multi = if freqs.len() > 1 {
        Some(theory::predicted_multi(&grid, &scene, freqs[0], freqs[freqs.len() - 1]).stage(Stage::Theory)?)
    } else {
        None
    };
    (|| -> Result<()> {
        create_dir(dir)?;
        for (s, m) in singles.iter().enumerate() {
            write_map(dir, &format!("theory_single_{:02}", s + 1), m, &cfg.output.formats, &mut files)?;
        }
        if let Some(m) = &multi {
            write_map(dir, "theory_multi", m, &cfg.output.formats, &mut files)?;
        }
        Ok(())
    })()
    .stage(Stage::Output)?;
    Ok(files)
}
