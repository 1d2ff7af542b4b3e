//! Experiment driver: a JSON manifest in, a run directory out.
//!
//! Every run directory holds `manifest.json` (the manifest with defaults
//! filled in), `summary.json` and `curves.csv`; some kinds add files of their
//! own. Identical manifests produce byte-identical directories regardless of
//! the worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::correlation::{aging_function, pi_hat_limit, pi_limit, pi_spectral_many, CorrelationQuery};
use crate::error::{Error, Result};
use crate::landscape::{sample_landscape, EnergyLandscape, LandscapeConfig, LandscapeDocument, MIN_RATE_GAP};
use crate::montecarlo::{window_estimates, window_samples, DeepSet, McConfig, McEstimate, WindowSample};
use crate::numeric::{fmt_f64, log_grid};
use crate::ppp::{regime_experiment, RegimeGrid, REGIME_CSV_HEADER};
use crate::quadrature::ContourSpec;
use crate::spectral::{compute_spectrum, orthogonality_residual, spectral_cdf_distance, SpectralDecomposition};
use crate::tauberian::{bromwich_invert, tauberian_limit, BromwichPath, SectorGrid, TauberianFit};

pub const MANIFEST_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const LANDSCAPE_FILE: &str = "landscape.json";

const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sample,
    Spectrum,
    Aging,
    Mc,
    Ppp,
    Tauber,
    Validate,
}

/// Manifest as read from disk. `params` is checked against the schema of
/// `kind` before anything runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Value,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_thetas() -> Vec<f64> {
    log_grid(0.1, 10.0, 9)
}

fn default_waiting_times() -> Vec<f64> {
    vec![1e3]
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeParams {
    pub alpha: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgingParams {
    pub alpha: f64,
    pub n: usize,
    #[serde(default = "default_waiting_times")]
    pub waiting_times: Vec<f64>,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    /// Monte Carlo replicas per waiting time; zero skips the simulation.
    #[serde(default)]
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    pub alpha: f64,
    pub n: usize,
    #[serde(default = "default_waiting_times")]
    pub waiting_times: Vec<f64>,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    pub replicas: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowedParams {
    pub tau0: f64,
    pub threshold: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedUnitParams {
    pub tau0: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PppParams {
    pub alpha: f64,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "default_waiting_times")]
    pub waiting_times: Vec<f64>,
    #[serde(default)]
    pub fixed_unit: Option<FixedUnitParams>,
    #[serde(default)]
    pub canonical_threshold: Option<f64>,
    #[serde(default)]
    pub windowed: Option<WindowedParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauberParams {
    pub alpha: f64,
    pub theta: f64,
    /// Singularity exponent assumed by the fit.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Times at which the transform is inverted.
    #[serde(default = "default_inversion_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
}

fn default_beta() -> f64 {
    1.0
}

fn default_inversion_times() -> Vec<f64> {
    vec![10.0]
}

fn default_r_min() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateParams {
    pub run: PathBuf,
}

/// Typed parameter block for each kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Sample(LandscapeParams),
    Spectrum(LandscapeParams),
    Aging(AgingParams),
    Mc(McParams),
    Ppp(PppParams),
    Tauber(TauberParams),
    Validate(ValidateParams),
}

fn parse_params<T: DeserializeOwned>(kind: Kind, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Validation(format!("{kind:?} parameters: {e}")))
}

fn positive_grid(name: &str, grid: &[f64], allow_zero: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Validation(format!("{name} must not be empty")));
    }
    for v in grid {
        let ok = v.is_finite() && (*v > 0.0 || (allow_zero && *v == 0.0));
        if !ok {
            return Err(Error::Validation(format!("{name} holds an invalid value {v}")));
        }
    }
    Ok(())
}

fn check_landscape_params(alpha: f64, n: usize) -> Result<()> {
    LandscapeConfig::new(alpha, n, 0).validate().map_err(|e| Error::Validation(e.to_string()))
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| Error::Validation(e.to_string()))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Validation(format!("unsupported manifest version {}", m.version)));
        }
        if !(m.tol > 0.0 && m.tol < 1.0) {
            return Err(Error::Validation("tol must lie in (0, 1)".into()));
        }
        m.experiment()?;
        Ok(m)
    }

    /// Parses and range-checks the parameter block.
    pub fn experiment(&self) -> Result<Experiment> {
        let p = &self.params;
        let e = match self.kind {
            Kind::Sample => Experiment::Sample(parse_params(self.kind, p)?),
            Kind::Spectrum => Experiment::Spectrum(parse_params(self.kind, p)?),
            Kind::Aging => Experiment::Aging(parse_params(self.kind, p)?),
            Kind::Mc => Experiment::Mc(parse_params(self.kind, p)?),
            Kind::Ppp => Experiment::Ppp(parse_params(self.kind, p)?),
            Kind::Tauber => Experiment::Tauber(parse_params(self.kind, p)?),
            Kind::Validate => Experiment::Validate(parse_params(self.kind, p)?),
        };
        match &e {
            Experiment::Sample(q) | Experiment::Spectrum(q) => check_landscape_params(q.alpha, q.n)?,
            Experiment::Aging(q) => {
                check_landscape_params(q.alpha, q.n)?;
                positive_grid("waiting_times", &q.waiting_times, true)?;
                positive_grid("thetas", &q.thetas, true)?;
            }
            Experiment::Mc(q) => {
                check_landscape_params(q.alpha, q.n)?;
                positive_grid("waiting_times", &q.waiting_times, true)?;
                positive_grid("thetas", &q.thetas, true)?;
                if q.replicas < 2 {
                    return Err(Error::Validation("mc needs at least two replicas".into()));
                }
                if !(q.delta >= 0.0 && q.delta.is_finite()) {
                    return Err(Error::Validation("delta must be non-negative".into()));
                }
            }
            Experiment::Ppp(q) => {
                check_landscape_params(q.alpha, 1)?;
                positive_grid("waiting_times", &q.waiting_times, true)?;
                positive_grid("thetas", &q.thetas, true)?;
                if q.fixed_unit.is_none() && q.canonical_threshold.is_none() && q.windowed.is_none() {
                    return Err(Error::Validation("ppp needs at least one regime".into()));
                }
            }
            Experiment::Tauber(q) => {
                check_landscape_params(q.alpha, 1)?;
                positive_grid("times", &q.times, false)?;
                if !(q.beta > 0.0 && q.beta.is_finite()) {
                    return Err(Error::Validation("beta must be positive".into()));
                }
                if !(q.theta > 0.0 && q.theta.is_finite()) {
                    return Err(Error::Validation("theta must be positive".into()));
                }
                if !(q.r_min > 0.0 && q.r_min < 1.0) {
                    return Err(Error::Validation("r_min must lie in (0, 1)".into()));
                }
            }
            Experiment::Validate(_) => {}
        }
        Ok(e)
    }

    /// The manifest with every default written out and no output path.
    pub fn resolved(&self) -> Result<Manifest> {
        let params = match self.experiment()? {
            Experiment::Sample(p) | Experiment::Spectrum(p) => serde_json::to_value(p)?,
            Experiment::Aging(p) => serde_json::to_value(p)?,
            Experiment::Mc(p) => serde_json::to_value(p)?,
            Experiment::Ppp(p) => serde_json::to_value(p)?,
            Experiment::Tauber(p) => serde_json::to_value(p)?,
            Experiment::Validate(p) => serde_json::to_value(p)?,
        };
        Ok(Manifest { out: None, params, ..self.clone() })
    }
}

/// Command-line values that take precedence over the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, m: &mut Manifest) {
        if let Some(s) = self.seed {
            m.seed = s;
        }
        if let Some(o) = &self.out {
            m.out = Some(o.clone());
        }
        if let Some(t) = self.tol {
            m.tol = t;
        }
    }
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub const SPECTRUM_HEADER: [&str; 4] = ["index", "rate", "eigenvalue", "weight"];
pub const AGING_HEADER: [&str; 7] = ["t_w", "theta", "t", "pi_spectral", "pi_mc", "pi_mc_stderr", "aging_limit"];
pub const MC_HEADER: [&str; 11] = [
    "t_w",
    "theta",
    "t",
    "pi",
    "pi_stderr",
    "pi_window_first",
    "pi_window_first_stderr",
    "pi_window_second",
    "pi_window_second_stderr",
    "pi_stderr_half",
    "replicas",
];
pub const PROBE_HEADER: [&str; 4] = ["omega_re", "omega_im", "ghat_re", "ghat_im"];

/// Runs a manifest and returns the run directory.
pub fn run_manifest(manifest: &Manifest) -> Result<PathBuf> {
    let experiment = manifest.experiment()?;
    if let Experiment::Validate(p) = &experiment {
        let report = validate_run(&p.run)?;
        return if report.passed() {
            Ok(p.run.clone())
        } else {
            Err(Error::Validation(report.violations().join("; ")))
        };
    }
    let out = manifest
        .out
        .clone()
        .ok_or_else(|| Error::Validation("no output directory: set \"out\" or pass --out".into()))?;
    std::fs::create_dir_all(&out)?;
    let seed = manifest.seed;
    let tol = manifest.tol;
    let summary = match &experiment {
        Experiment::Sample(p) => run_sample(p, seed, &out)?,
        Experiment::Spectrum(p) => run_spectrum(p, seed, tol, &out)?,
        Experiment::Aging(p) => run_aging(p, seed, tol, &out)?,
        Experiment::Mc(p) => run_mc(p, seed, &out)?,
        Experiment::Ppp(p) => run_ppp(p, seed, tol, &out)?,
        Experiment::Tauber(p) => run_tauber(p, tol, &out)?,
        Experiment::Validate(_) => unreachable!("handled above"),
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    write_json(&out.join(MANIFEST_FILE), &manifest.resolved()?)?;
    Ok(out)
}

fn landscape_for(p: &LandscapeParams, seed: u64, out: &Path) -> Result<EnergyLandscape> {
    let l = sample_landscape(&LandscapeConfig::new(p.alpha, p.n, seed))?;
    l.to_document(p.alpha, seed).write(&out.join(LANDSCAPE_FILE))?;
    Ok(l)
}

fn run_sample(p: &LandscapeParams, seed: u64, out: &Path) -> Result<Value> {
    let l = landscape_for(p, seed, out)?;
    l.write_csv(&out.join(CURVES_FILE))?;
    Ok(json!({
        "kind": "sample",
        "n": l.len(),
        "min_rate": l.rates()[0],
        "max_rate": l.max_rate(),
        "min_gap": l.min_gap(),
    }))
}

fn spectrum_rows(s: &SpectralDecomposition) -> Vec<Vec<f64>> {
    (0..s.len()).map(|k| vec![k as f64, s.rates()[k], s.eigenvalues()[k], s.weights()[k]]).collect()
}

fn max_secular_residual(s: &SpectralDecomposition) -> f64 {
    (0..s.len()).map(|k| s.secular_residual(k)).fold(0.0, f64::max)
}

fn run_spectrum(p: &LandscapeParams, seed: u64, tol: f64, out: &Path) -> Result<Value> {
    let l = landscape_for(p, seed, out)?;
    let s = compute_spectrum(&l, tol)?;
    write_table(&out.join(CURVES_FILE), &SPECTRUM_HEADER, &spectrum_rows(&s))?;
    Ok(json!({
        "kind": "spectrum",
        "n": s.len(),
        "interlacing": interlacing_violations(s.rates(), s.eigenvalues()).is_empty(),
        "max_secular_residual": max_secular_residual(&s),
        "orthogonality_residual": orthogonality_residual(&s),
        "ks_distance": spectral_cdf_distance(&s, p.alpha),
    }))
}

/// Indices `k` where `x_{k−1} < λ_k < x_k` fails (with `x_{−1} = 0`).
pub fn interlacing_violations(rates: &[f64], eigenvalues: &[f64]) -> Vec<usize> {
    (0..eigenvalues.len())
        .filter(|&k| {
            let lo = if k == 0 { 0.0 } else { rates[k - 1] };
            let l = eigenvalues[k];
            !(l >= lo && l < rates[k]) || (k > 0 && l == lo)
        })
        .collect()
}

fn simulate_windows(l: &EnergyLandscape, delta: f64, t_w: f64, thetas: &[f64], replicas: usize, seed: u64) -> Result<Vec<WindowSample>> {
    let t_max = thetas.iter().cloned().fold(0.0, f64::max) * t_w;
    // Each waiting time gets its own seed so curves at different t_w are independent.
    let cfg = McConfig::new(replicas, seed ^ t_w.to_bits());
    window_samples(l, &DeepSet::new(l, delta), t_w, t_max, &cfg)
}

fn run_aging(p: &AgingParams, seed: u64, tol: f64, out: &Path) -> Result<Value> {
    let l = landscape_for(&LandscapeParams { alpha: p.alpha, n: p.n }, seed, out)?;
    let s = compute_spectrum(&l, tol)?;
    let mut rows = Vec::new();
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut worst_mc: BTreeMap<String, f64> = BTreeMap::new();
    for &t_w in &p.waiting_times {
        let ts: Vec<f64> = p.thetas.iter().map(|th| th * t_w).collect();
        let spectral = pi_spectral_many(&s, t_w, &ts)?;
        let mc: Option<Vec<McEstimate>> = if p.replicas > 0 {
            let samples = simulate_windows(&l, 1.0, t_w, &p.thetas, p.replicas, seed)?;
            Some(ts.iter().map(|t| window_estimates(&samples, t_w, *t)[0]).collect())
        } else {
            None
        };
        for (i, &theta) in p.thetas.iter().enumerate() {
            let limit = aging_function(p.alpha, theta)?;
            let (m, e) = mc.as_ref().map_or((f64::NAN, f64::NAN), |v| (v[i].estimate, v[i].stderr));
            rows.push(vec![t_w, theta, ts[i], spectral[i], m, e, limit]);
            let key = fmt_f64(t_w);
            let w = worst.entry(key.clone()).or_insert(0.0);
            *w = w.max((spectral[i] - limit).abs());
            if m.is_finite() {
                let w = worst_mc.entry(key).or_insert(0.0);
                *w = w.max((m - limit).abs());
            }
        }
    }
    write_table(&out.join(CURVES_FILE), &AGING_HEADER, &rows)?;
    Ok(json!({
        "kind": "aging",
        "n": p.n,
        "max_deviation_spectral": worst,
        "max_deviation_mc": worst_mc,
    }))
}

fn run_mc(p: &McParams, seed: u64, out: &Path) -> Result<Value> {
    let l = landscape_for(&LandscapeParams { alpha: p.alpha, n: p.n }, seed, out)?;
    let mut rows = Vec::new();
    let mut gaps: BTreeMap<String, f64> = BTreeMap::new();
    for &t_w in &p.waiting_times {
        let samples = simulate_windows(&l, p.delta, t_w, &p.thetas, p.replicas, seed)?;
        let half = &samples[..samples.len() / 2];
        for &theta in &p.thetas {
            let t = theta * t_w;
            let [pi, first, second] = window_estimates(&samples, t_w, t);
            let [pi_half, _, _] = window_estimates(half, t_w, t);
            rows.push(vec![
                t_w,
                theta,
                t,
                pi.estimate,
                pi.stderr,
                first.estimate,
                first.stderr,
                second.estimate,
                second.stderr,
                pi_half.stderr,
                p.replicas as f64,
            ]);
            let g = gaps.entry(fmt_f64(t_w)).or_insert(0.0);
            *g = g.max((first.estimate - pi.estimate).abs());
        }
    }
    write_table(&out.join(CURVES_FILE), &MC_HEADER, &rows)?;
    Ok(json!({
        "kind": "mc",
        "n": p.n,
        "replicas": p.replicas,
        "delta": p.delta,
        "max_window_gap": gaps,
    }))
}

fn run_ppp(p: &PppParams, seed: u64, tol: f64, out: &Path) -> Result<Value> {
    let grid = RegimeGrid {
        alpha: p.alpha,
        seed,
        thetas: p.thetas.clone(),
        waiting_times: p.waiting_times.clone(),
        fixed_unit: p.fixed_unit.as_ref().map(|f| (f.tau0, f.threshold)),
        canonical_threshold: p.canonical_threshold,
        windowed: p.windowed.as_ref().map(|w| (w.tau0, w.threshold, w.delta, w.replicas)),
        tol: tol.max(1e-10),
    };
    let rows = regime_experiment(&grid)?;
    crate::ppp::write_regime_csv(&rows, &out.join(CURVES_FILE))?;
    Ok(json!({ "kind": "ppp", "rows": rows.len() }))
}

fn probe_rows(fit: &TauberianFit) -> Vec<Vec<f64>> {
    let beta = fit.probe.beta;
    let mut rows = Vec::new();
    for ray in &fit.rays {
        for &(r, re, im) in &ray.samples {
            let omega = Complex64::from_polar(r, ray.angle);
            let g = Complex64::new(re, im) / omega.powf(beta);
            rows.push(vec![omega.re, omega.im, g.re, g.im]);
        }
    }
    rows
}

fn run_tauber(p: &TauberParams, tol: f64, out: &Path) -> Result<Value> {
    let (alpha, theta) = (p.alpha, p.theta);
    let grid = SectorGrid { r_min: p.r_min, ..SectorGrid::default() };
    let fit = tauberian_limit(|w| pi_hat_limit(alpha, theta, w), p.beta, &grid)?;
    write_table(&out.join(CURVES_FILE), &PROBE_HEADER, &probe_rows(&fit))?;
    let path = BromwichPath::new(0.5).with_tol(tol.max(1e-10));
    let mut inversions = Vec::new();
    for &s in &p.times {
        let value = bromwich_invert(|w| pi_hat_limit(alpha, theta, w).unwrap_or(Complex64::new(f64::NAN, 0.0)), s, &path)?.value;
        let c = ContourSpec::rectangle_for(1.0, &[s]).with_tol(tol.max(1e-10));
        let direct = pi_limit(alpha, &c, CorrelationQuery::new(theta * s, s)?)?;
        inversions.push(json!({ "s": s, "inverted": value, "direct": direct }));
    }
    Ok(json!({
        "kind": "tauber",
        "b": fit.probe.b,
        "beta": fit.probe.beta,
        "gamma": fit.probe.gamma,
        "correction_exponent": fit.probe.correction_exponent,
        "spread": fit.spread,
        "aging_limit": aging_function(alpha, theta)?,
        "inversions": inversions,
    }))
}

/// One replayed invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: Kind,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn violations(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect()
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }
}

/// Columns of a CSV file keyed by header name; non-numeric cells become NaN.
struct Table {
    header: Vec<String>,
    columns: BTreeMap<String, Vec<f64>>,
    text: BTreeMap<String, Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut columns: BTreeMap<String, Vec<f64>> = header.iter().map(|h| (h.clone(), vec![])).collect();
        let mut text: BTreeMap<String, Vec<String>> = header.iter().map(|h| (h.clone(), vec![])).collect();
        for rec in r.records() {
            let rec = rec?;
            for (h, cell) in header.iter().zip(rec.iter()) {
                columns.get_mut(h).expect("known column").push(cell.parse().unwrap_or(f64::NAN));
                text.get_mut(h).expect("known column").push(cell.to_string());
            }
        }
        Ok(Self { header, columns, text })
    }

    fn col(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Validation(format!("missing column {name}")))
    }

    fn len(&self) -> usize {
        self.columns.values().next().map_or(0, Vec::len)
    }
}

fn require(dir: &Path, file: &str) -> Result<PathBuf> {
    let p = dir.join(file);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::Validation(format!("missing artifact {}", p.display())))
    }
}

/// Replays the invariants that apply to the run in `dir`.
pub fn validate_run(dir: &Path) -> Result<ValidationReport> {
    let manifest = Manifest::read(&require(dir, MANIFEST_FILE)?)?;
    require(dir, SUMMARY_FILE)?;
    let table = Table::read(&require(dir, CURVES_FILE)?)?;
    let mut report = ValidationReport { kind: manifest.kind, checks: vec![] };
    let expected: Vec<&str> = match manifest.kind {
        Kind::Sample => vec!["index", "energy", "rate", "tau"],
        Kind::Spectrum => SPECTRUM_HEADER.to_vec(),
        Kind::Aging => AGING_HEADER.to_vec(),
        Kind::Mc => MC_HEADER.to_vec(),
        Kind::Ppp => REGIME_CSV_HEADER.split(',').collect(),
        Kind::Tauber => PROBE_HEADER.to_vec(),
        Kind::Validate => return Err(Error::Validation("a validate manifest has no run to check".into())),
    };
    report.push("schema", table.header == expected, format!("header {:?}", table.header));
    if table.header != expected {
        return Ok(report);
    }
    match manifest.experiment()? {
        Experiment::Sample(p) => validate_sample(dir, &p, manifest.seed, &table, &mut report)?,
        Experiment::Spectrum(p) => validate_spectrum(dir, &p, manifest.seed, manifest.tol, &table, &mut report)?,
        Experiment::Aging(p) => validate_aging(dir, &p, manifest.tol, &table, &mut report)?,
        Experiment::Mc(_) => validate_mc(&table, &mut report)?,
        Experiment::Ppp(_) => validate_ppp(&table, &mut report),
        Experiment::Tauber(p) => validate_tauber(dir, &p, &table, &mut report)?,
        Experiment::Validate(_) => unreachable!("rejected above"),
    }
    Ok(report)
}

fn replay_landscape(dir: &Path, alpha: f64, n: usize, seed: u64, report: &mut ValidationReport) -> Result<EnergyLandscape> {
    let doc = LandscapeDocument::read(&require(dir, LANDSCAPE_FILE)?)?;
    let stored = doc.landscape()?;
    let fresh = sample_landscape(&LandscapeConfig::new(alpha, n, seed))?;
    report.push("landscape-replay", stored == fresh, "stored landscape equals a fresh draw from the manifest");
    Ok(stored)
}

fn validate_sample(dir: &Path, p: &LandscapeParams, seed: u64, t: &Table, report: &mut ValidationReport) -> Result<()> {
    let l = replay_landscape(dir, p.alpha, p.n, seed, report)?;
    let rates = t.col("rate")?;
    let energies = t.col("energy")?;
    report.push("row-count", t.len() == p.n, format!("{} rows", t.len()));
    let sorted = rates.windows(2).all(|w| w[1] - w[0] > MIN_RATE_GAP) && rates.iter().all(|x| *x > 0.0 && *x <= 1.0);
    report.push("rates-ordered", sorted, "rates increase by more than the minimum gap and lie in (0, 1]");
    let consistent = energies.iter().zip(rates).all(|(e, x)| ((-e).exp() - x).abs() <= 4.0 * f64::EPSILON * x);
    report.push("rate-energy", consistent, "rate = exp(-energy)");
    report.push("csv-matches-landscape", rates == l.rates(), "curves match landscape.json");
    Ok(())
}

fn validate_spectrum(dir: &Path, p: &LandscapeParams, seed: u64, tol: f64, t: &Table, report: &mut ValidationReport) -> Result<()> {
    let l = replay_landscape(dir, p.alpha, p.n, seed, report)?;
    let rates = t.col("rate")?;
    let eig = t.col("eigenvalue")?;
    report.push("row-count", t.len() == p.n, format!("{} rows", t.len()));
    let bad = interlacing_violations(rates, eig);
    report.push("interlacing", bad.is_empty(), format!("violations at {bad:?}"));
    let s = compute_spectrum(&l, tol)?;
    let worst = eig
        .iter()
        .zip(s.eigenvalues())
        .map(|(a, b)| if a.is_finite() { (a - b).abs() / b } else { f64::INFINITY })
        .fold(0.0, f64::max);
    report.push("eigenvalues-replay", worst <= 1e-12, format!("max relative difference {worst:e}"));
    let residual = max_secular_residual(&s);
    report.push("secular-residual", residual <= 1e-10 * p.n as f64, format!("{residual:e}"));
    let ortho = orthogonality_residual(&s);
    report.push("orthogonality", ortho <= 1e-8, format!("{ortho:e}"));
    let weights = t.col("weight")?;
    let positive = weights.iter().all(|w| *w > 0.0 && w.is_finite());
    report.push("weights", positive, "spectral weights are positive");
    Ok(())
}

fn validate_aging(dir: &Path, p: &AgingParams, tol: f64, t: &Table, report: &mut ValidationReport) -> Result<()> {
    let (t_w, theta, pis) = (t.col("t_w")?, t.col("theta")?, t.col("pi_spectral")?);
    let mc = t.col("pi_mc")?;
    let se = t.col("pi_mc_stderr")?;
    report.push("row-count", t.len() == p.waiting_times.len() * p.thetas.len(), format!("{} rows", t.len()));
    report.push("range", pis.iter().all(|v| (0.0..=1.0).contains(v)), "spectral values in [0, 1]");
    let mut monotone = true;
    for i in 1..t.len() {
        if t_w[i] == t_w[i - 1] && theta[i] > theta[i - 1] && pis[i] > pis[i - 1] + 1e-12 {
            monotone = false;
        }
    }
    report.push("monotone-in-t", monotone, "spectral curve non-increasing in theta at fixed t_w");
    let far = (0..t.len())
        .filter(|&i| mc[i].is_finite())
        .map(|i| (mc[i] - pis[i]).abs() / (se[i] + 1e-3))
        .fold(0.0, f64::max);
    report.push("mc-agrees", far <= 5.0, format!("largest |mc - spectral|/(stderr + 1e-3) = {far:.3}"));
    let doc = LandscapeDocument::read(&require(dir, LANDSCAPE_FILE)?)?;
    let s = compute_spectrum(&doc.landscape()?, tol)?;
    let replay = pi_spectral_many(&s, t_w[0], &[theta[0] * t_w[0]])?[0];
    report.push("spectral-replay", (replay - pis[0]).abs() <= 1e-12, format!("first row recomputed as {replay}"));
    Ok(())
}

fn validate_mc(t: &Table, report: &mut ValidationReport) -> Result<()> {
    let pi = t.col("pi")?;
    let first = t.col("pi_window_first")?;
    let second = t.col("pi_window_second")?;
    let ordered = (0..t.len()).all(|i| pi[i] <= first[i] && first[i] <= second[i]);
    report.push("ordering", ordered, "pi <= first window <= second window on every row");
    let se = t.col("pi_stderr")?;
    let half = t.col("pi_stderr_half")?;
    let ratios: Vec<f64> = (0..t.len())
        .filter(|&i| pi[i] > 0.05 && pi[i] < 0.95)
        .map(|i| half[i] / se[i] / std::f64::consts::SQRT_2)
        .collect();
    let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    report.push(
        "sqrt-law",
        worst <= 0.2,
        format!("half-sample stderr / (sqrt(2) full stderr) within {worst:.3} of 1 over {} rows", ratios.len()),
    );
    Ok(())
}

fn validate_ppp(t: &Table, report: &mut ValidationReport) {
    let quantity = &t.text["quantity"];
    let value = &t.columns["value"];
    let bad = (0..t.len()).filter(|&i| !(0.0..=1.0).contains(&value[i])).count();
    report.push("range", bad == 0, format!("{bad} values outside [0, 1]"));
    let regimes = &t.text["regime"];
    let known = regimes.iter().all(|r| ["fixed-unit", "canonical", "windowed"].contains(&r.as_str()));
    report.push("regimes", known, "regime labels are recognized");
    let paired = quantity.iter().filter(|q| *q == "pi").count() > 0;
    report.push("curves-present", paired, "at least one pi curve");
}

fn validate_tauber(dir: &Path, p: &TauberParams, t: &Table, report: &mut ValidationReport) -> Result<()> {
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(SUMMARY_FILE))?)?;
    let b = summary["b"].as_f64().unwrap_or(f64::NAN);
    let target = aging_function(p.alpha, p.theta)?;
    report.push("limit-constant", (b - target).abs() <= 0.01 * target, format!("B = {b}, expected {target}"));
    let (wr, wi, gr, gi) = (t.col("omega_re")?, t.col("omega_im")?, t.col("ghat_re")?, t.col("ghat_im")?);
    let mut worst: f64 = 0.0;
    for i in (0..t.len()).step_by((t.len() / 8).max(1)) {
        let g = pi_hat_limit(p.alpha, p.theta, Complex64::new(wr[i], wi[i]))?;
        worst = worst.max((g - Complex64::new(gr[i], gi[i])).norm() / g.norm());
    }
    report.push("probe-replay", worst <= 1e-9, format!("max relative difference {worst:e}"));
    Ok(())
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    }
}

#[derive(Debug, Parser)]
#[command(name = "trapspec", version, about = "Trap-model experiments driven by JSON manifests")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalFlags {
    /// Overrides the manifest seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the manifest output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Caps the worker count; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the manifest tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a landscape.
    Sample { manifest: PathBuf },
    /// Draw a landscape and compute its spectrum.
    Spectrum { manifest: PathBuf },
    /// Ageing curves: spectral values, optional Monte Carlo, limit law.
    Aging { manifest: PathBuf },
    /// Monte Carlo estimates of the plain and windowed correlations.
    Mc { manifest: PathBuf },
    /// Point-process regimes.
    Ppp { manifest: PathBuf },
    /// Tauberian fit and Bromwich inversion of the limiting transform.
    Tauber { manifest: PathBuf },
    /// Replay the invariants of a run directory (or of a validate manifest).
    Validate { target: PathBuf },
}

impl Command {
    fn kind(&self) -> Kind {
        match self {
            Command::Sample { .. } => Kind::Sample,
            Command::Spectrum { .. } => Kind::Spectrum,
            Command::Aging { .. } => Kind::Aging,
            Command::Mc { .. } => Kind::Mc,
            Command::Ppp { .. } => Kind::Ppp,
            Command::Tauber { .. } => Kind::Tauber,
            Command::Validate { .. } => Kind::Validate,
        }
    }
}

/// Runs the parsed command line and returns the exit code.
pub fn run_cli(cli: Cli) -> i32 {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_VALIDATION;
        }
        // Only the first call in a process takes effect, which is all we need.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Command::Validate { target } = &cli.command {
        let dir = if target.is_file() {
            let m = Manifest::read(target)?;
            match m.experiment()? {
                Experiment::Validate(p) => p.run,
                _ => return Err(Error::Validation("expected a run directory or a validate manifest".into())),
            }
        } else {
            target.clone()
        };
        let report = validate_run(&dir)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION });
    }
    let path = match &cli.command {
        Command::Sample { manifest }
        | Command::Spectrum { manifest }
        | Command::Aging { manifest }
        | Command::Mc { manifest }
        | Command::Ppp { manifest }
        | Command::Tauber { manifest } => manifest,
        Command::Validate { .. } => unreachable!("handled above"),
    };
    let mut m = Manifest::read(path)?;
    if m.kind != cli.command.kind() {
        return Err(Error::Validation(format!("manifest kind {:?} does not match the subcommand", m.kind)));
    }
    Overrides { seed: cli.global.seed, out: cli.global.out.clone(), tol: cli.global.tol }.apply(&mut m);
    let m = Manifest::parse(&serde_json::to_string(&m)?)?;
    let out = run_manifest(&m)?;
    println!("{}", out.display());
    Ok(EXIT_OK)
}
