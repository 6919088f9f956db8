//! Configuration, per-point evaluation and sweeps behind the `qfim-bounds`
//! binary. Kept in the library so the same code paths are testable.

mod oracle_check;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::moments::{InterferometerInput, SplitterSpec};
use crate::optimizer::{optimize_gamma_with, GammaSearch, LossFamily};
use crate::qfim_ideal::{
    overestimation, qcrb, qfim_matrix, two_param_bound, EstimationMode, FisherMatrix,
    PrecisionBound, Target,
};
use crate::qfim_lossy::{c_matrix_single, c_matrix_two, gamma_opt_single, optimal_bound_single, SingleArmLoss, TwoArmLoss};

pub use oracle_check::{oracle_check, OracleCheck, OracleReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Compute { context: String, source: Error },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("oracle check failed: {0}")]
    OracleFailure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Compute { .. } | CliError::Io(_) => 2,
            CliError::OracleFailure(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interferometer {
    SU2,
    SU11,
}

impl Interferometer {
    pub fn target(self) -> Target {
        match self {
            Interferometer::SU2 => Target::PhaseDifference,
            Interferometer::SU11 => Target::PhaseSum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LossKind {
    #[default]
    None,
    OneArm,
    TwoArm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptVariable {
    AlphaPhotons,
    Eta,
    SplitterRatio,
    Gain,
}

impl SweptVariable {
    pub fn key(self) -> &'static str {
        match self {
            SweptVariable::AlphaPhotons => "alpha_photons",
            SweptVariable::Eta => "eta",
            SweptVariable::SplitterRatio => "splitter_ratio",
            SweptVariable::Gain => "gain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

fn default_repeats() -> u32 {
    1
}

fn default_estimation() -> EstimationMode {
    EstimationMode::TwoParameter
}

/// Keys accepted in the `fixed` map.
pub const FIXED_KEYS: &[&str] = &[
    "alpha",
    "alpha_photons",
    "squeeze_r",
    "transmissivity",
    "splitter_ratio",
    "gain",
    "eta",
    "gamma",
    "eta_b",
    "gamma_b",
    "cutoff",
];

/// One JSON document describing a point, a sweep or an oracle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub interferometer: Interferometer,
    #[serde(default = "default_estimation")]
    pub estimation: EstimationMode,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swept_variable: Option<SweptVariable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<SweepRange>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default)]
    pub gamma_window: GammaSearch,
}

impl ScanSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: ScanSpec =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for key in self.fixed.keys() {
            if !FIXED_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown fixed parameter {key:?}; accepted: {}",
                    FIXED_KEYS.join(", ")
                )));
            }
        }
        for (key, value) in &self.fixed {
            if !value.is_finite() {
                return Err(CliError::Config(format!("fixed parameter {key} is not finite")));
            }
        }
        if self.repeats == 0 {
            return Err(CliError::Config("repeats must be at least 1".into()));
        }
        let w = &self.gamma_window;
        if !(w.lo.is_finite() && w.hi.is_finite() && w.lo < w.hi && w.abs_tol > 0.0) {
            return Err(CliError::Config("gamma_window needs finite lo < hi and abs_tol > 0".into()));
        }
        match (self.swept_variable, self.range) {
            (None, None) => {}
            (Some(var), Some(range)) => {
                if !(range.start.is_finite() && range.stop.is_finite() && range.start < range.stop) {
                    return Err(CliError::Config("range needs finite start < stop".into()));
                }
                if range.steps < 2 {
                    return Err(CliError::Config("range needs steps >= 2".into()));
                }
                let clashes: &[&str] = match var {
                    SweptVariable::AlphaPhotons => &["alpha", "alpha_photons"],
                    SweptVariable::Eta => &["eta"],
                    SweptVariable::SplitterRatio => &["splitter_ratio", "transmissivity", "gain"],
                    SweptVariable::Gain => &["gain", "transmissivity", "splitter_ratio"],
                };
                if let Some(k) = clashes.iter().find(|k| self.fixed.contains_key(**k)) {
                    return Err(CliError::Config(format!(
                        "fixed parameter {k} conflicts with swept variable {}",
                        var.key()
                    )));
                }
            }
            _ => {
                return Err(CliError::Config(
                    "swept_variable and range must be given together".into(),
                ))
            }
        }
        // resolve one point to catch missing parameters before any work
        let probe = self.swept_variable.zip(self.range).map(|(v, r)| (v, r.start));
        self.resolve(probe)?;
        Ok(())
    }

    fn is_sweep(&self) -> bool {
        self.swept_variable.is_some()
    }

    fn get(&self, key: &str, swept: Option<(SweptVariable, f64)>) -> Option<f64> {
        match swept {
            Some((var, value)) if var.key() == key => Some(value),
            _ => self.fixed.get(key).copied(),
        }
    }

    /// Physical parameters of one point, with the swept value substituted.
    pub fn resolve(&self, swept: Option<(SweptVariable, f64)>) -> Result<PointParams, CliError> {
        let get = |k: &str| self.get(k, swept);
        let alpha_mag = match (get("alpha"), get("alpha_photons")) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give only one of alpha, alpha_photons".into()))
            }
            (Some(a), None) => a,
            (None, Some(n)) if n >= 0.0 => n.sqrt(),
            (None, Some(n)) => {
                return Err(CliError::Config(format!("alpha_photons must be >= 0, got {n}")))
            }
            (None, None) => return Err(CliError::Config("missing alpha or alpha_photons".into())),
        };
        let squeeze_r = get("squeeze_r").ok_or_else(|| CliError::Config("missing squeeze_r".into()))?;
        let splitter = match self.interferometer {
            Interferometer::SU2 => {
                if get("gain").is_some() {
                    return Err(CliError::Config("gain applies to SU11 only".into()));
                }
                let t = match (get("transmissivity"), get("splitter_ratio")) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::Config(
                            "give only one of transmissivity, splitter_ratio".into(),
                        ))
                    }
                    (Some(t), None) => t,
                    (None, Some(x)) if x >= 0.0 => 1.0 / (1.0 + x),
                    (None, Some(x)) => {
                        return Err(CliError::Config(format!("splitter_ratio must be >= 0, got {x}")))
                    }
                    (None, None) => {
                        return Err(CliError::Config(
                            "SU2 needs transmissivity or splitter_ratio".into(),
                        ))
                    }
                };
                SplitterSpec::linear(t).map_err(|e| CliError::Config(e.to_string()))?
            }
            Interferometer::SU11 => {
                if get("transmissivity").is_some() || get("splitter_ratio").is_some() {
                    return Err(CliError::Config("transmissivity and splitter_ratio apply to SU2 only".into()));
                }
                let g = get("gain").ok_or_else(|| CliError::Config("SU11 needs gain".into()))?;
                SplitterSpec::nonlinear(g).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        let input = InterferometerInput::new(alpha_mag, squeeze_r, splitter)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let eta = get("eta");
        if self.loss != LossKind::None {
            match eta {
                Some(e) if (0.0..=1.0).contains(&e) => {}
                Some(e) => return Err(CliError::Config(format!("eta must lie in [0, 1], got {e}"))),
                None => return Err(CliError::Config("lossy configurations need eta".into())),
            }
        }
        Ok(PointParams {
            input,
            eta,
            swept_value: swept.map(|(_, v)| v),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointParams {
    pub input: InterferometerInput,
    pub eta: Option<f64>,
    pub swept_value: Option<f64>,
}

/// Every intermediate of one evaluation. Missing values are `None`: either
/// not applicable (e.g. the analytic γ without loss) or not reached because
/// of `error`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointRecord {
    pub swept_value: Option<f64>,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub var_a: Option<f64>,
    pub var_b: Option<f64>,
    pub cov: Option<f64>,
    pub m_pp: Option<f64>,
    pub m_mm: Option<f64>,
    pub m_pm: Option<f64>,
    pub info_single: Option<f64>,
    pub info_two: Option<f64>,
    pub delta_f: Option<f64>,
    pub gamma_opt_analytic: Option<f64>,
    pub gamma_opt_numeric: Option<f64>,
    pub info_optimal: Option<f64>,
    pub qcrb_single: Option<f64>,
    pub qcrb_two: Option<f64>,
    pub error: Option<String>,
}

/// Column names in output order. Matrix columns are `f_*` for the ideal
/// matrix and `c_*` for the lossy one.
pub fn columns(loss: LossKind) -> [&'static str; 18] {
    let (pp, mm, pm) = match loss {
        LossKind::None => ("f_pp", "f_mm", "f_pm"),
        _ => ("c_pp", "c_mm", "c_pm"),
    };
    [
        "swept_value",
        "mean_a",
        "mean_b",
        "var_a",
        "var_b",
        "cov",
        pp,
        mm,
        pm,
        "info_single",
        "info_two",
        "delta_f",
        "gamma_opt_analytic",
        "gamma_opt_numeric",
        "info_optimal",
        "qcrb_single",
        "qcrb_two",
        "error",
    ]
}

/// Shortest decimal text that parses back to the same f64.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

impl PointRecord {
    pub fn numeric_fields(&self) -> [Option<f64>; 17] {
        [
            self.swept_value,
            self.mean_a,
            self.mean_b,
            self.var_a,
            self.var_b,
            self.cov,
            self.m_pp,
            self.m_mm,
            self.m_pm,
            self.info_single,
            self.info_two,
            self.delta_f,
            self.gamma_opt_analytic,
            self.gamma_opt_numeric,
            self.info_optimal,
            self.qcrb_single,
            self.qcrb_two,
        ]
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .numeric_fields()
            .iter()
            .map(|v| v.map(format_float).unwrap_or_default())
            .collect();
        out.push(self.error.clone().unwrap_or_default());
        out
    }

    pub fn to_json(&self, loss: LossKind) -> serde_json::Value {
        let names = columns(loss);
        let mut map = serde_json::Map::new();
        for (name, value) in names.iter().zip(self.numeric_fields()) {
            map.insert(
                name.to_string(),
                value.map_or(serde_json::Value::Null, |v| serde_json::json!(v)),
            );
        }
        map.insert(
            "error".into(),
            self.error.clone().map_or(serde_json::Value::Null, serde_json::Value::String),
        );
        serde_json::Value::Object(map)
    }

    pub fn matrix(&self) -> Option<FisherMatrix> {
        Some(FisherMatrix::new(self.m_pp?, self.m_mm?, self.m_pm?))
    }
}

fn context(params: &PointParams) -> String {
    let mut s = format!(
        "alpha={} r={} splitter={:?}",
        params.input.alpha_mag, params.input.squeeze_r, params.input.splitter
    );
    if let Some(eta) = params.eta {
        s.push_str(&format!(" eta={eta}"));
    }
    s
}

fn fill_record(spec: &ScanSpec, params: &PointParams, rec: &mut PointRecord) -> Result<(), Error> {
    let target = spec.interferometer.target();
    let stats = params.input.moments()?;
    rec.mean_a = Some(stats.mean_a());
    rec.mean_b = Some(stats.mean_b());
    rec.var_a = Some(stats.var_a());
    rec.var_b = Some(stats.var_b());
    rec.cov = Some(stats.cov());

    let (matrix, info_single, info_two) = match spec.loss {
        LossKind::None => {
            let m = qfim_matrix(&stats);
            (m, m.diagonal(target), two_param_bound(&m, target)?)
        }
        LossKind::OneArm | LossKind::TwoArm => {
            let eta = params.eta.unwrap_or(1.0);
            let family = if spec.loss == LossKind::OneArm {
                LossFamily::SingleArm { eta }
            } else {
                LossFamily::TwoArmSymmetric { eta }
            };
            let w = &spec.gamma_window;
            let two = optimize_gamma_with(&stats, family, target, EstimationMode::TwoParameter, w)?;
            let single = optimize_gamma_with(&stats, family, target, EstimationMode::SingleParameter, w)?;
            rec.gamma_opt_numeric = Some(two.gamma);
            let m = if spec.loss == LossKind::OneArm {
                rec.gamma_opt_analytic = gamma_opt_single(&stats, eta, target).ok();
                rec.info_optimal = optimal_bound_single(&stats, eta, target).ok();
                c_matrix_single(&stats, &SingleArmLoss::new(eta, two.gamma)?)
            } else {
                c_matrix_two(&stats, &TwoArmLoss::symmetric(eta, two.gamma)?)
            };
            (m, single.minimum, two.minimum)
        }
    };
    rec.m_pp = Some(matrix.f_pp);
    rec.m_mm = Some(matrix.f_mm);
    rec.m_pm = Some(matrix.f_pm);
    rec.info_single = Some(info_single);
    rec.info_two = Some(info_two);
    rec.delta_f = Some(overestimation(&matrix, target)?);
    rec.qcrb_single = Some(qcrb(info_single, spec.repeats, EstimationMode::SingleParameter, target)?.delta_phi);
    rec.qcrb_two = Some(qcrb(info_two, spec.repeats, EstimationMode::TwoParameter, target)?.delta_phi);
    Ok(())
}

/// Evaluates one resolved point. Failures land in `error`.
pub fn evaluate(spec: &ScanSpec, params: &PointParams) -> PointRecord {
    let mut rec = PointRecord {
        swept_value: params.swept_value,
        ..Default::default()
    };
    if let Err(e) = fill_record(spec, params, &mut rec) {
        rec.error = Some(format!("{}: {e}", context(params)));
    }
    rec
}

/// Result of `point`: the record plus the bound selected by `estimation`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOutput {
    pub record: PointRecord,
    pub bound: PrecisionBound,
}

pub fn run_point(spec: &ScanSpec) -> Result<PointOutput, CliError> {
    spec.validate()?;
    if spec.is_sweep() {
        return Err(CliError::Config(
            "point takes no swept_variable or range; use scan".into(),
        ));
    }
    let params = spec.resolve(None)?;
    let mut record = PointRecord::default();
    let target = spec.interferometer.target();
    let bound = fill_record(spec, &params, &mut record).and_then(|_| {
        let info = match spec.estimation {
            EstimationMode::SingleParameter => record.info_single,
            EstimationMode::TwoParameter => record.info_two,
        };
        qcrb(info.unwrap_or(f64::NAN), spec.repeats, spec.estimation, target)
    });
    match bound {
        Ok(bound) => Ok(PointOutput { record, bound }),
        Err(source) => Err(CliError::Compute {
            context: context(&params),
            source,
        }),
    }
}

pub fn point_json(spec: &ScanSpec, out: &PointOutput) -> serde_json::Value {
    serde_json::json!({
        "record": out.record.to_json(spec.loss),
        "bound": out.bound,
    })
}

/// All rows of a sweep, in sweep order, evaluated on up to `jobs` threads.
pub fn scan_records(spec: &ScanSpec, jobs: usize) -> Result<Vec<PointRecord>, CliError> {
    spec.validate()?;
    let (Some(var), Some(range)) = (spec.swept_variable, spec.range) else {
        return Err(CliError::Config("scan needs swept_variable and range".into()));
    };
    let row = |x: f64| match spec.resolve(Some((var, x))) {
        Ok(params) => evaluate(spec, &params),
        Err(e) => PointRecord {
            swept_value: Some(x),
            error: Some(e.to_string()),
            ..Default::default()
        },
    };
    let values = range.values();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(pool.install(|| values.par_iter().map(|&x| row(x)).collect()))
}

pub fn write_csv<W: Write>(spec: &ScanSpec, records: &[PointRecord], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns(spec.loss))?;
    for rec in records {
        w.write_record(rec.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata path next to a CSV: `out.csv` becomes `out.meta.json`.
pub fn metadata_path(output: &Path) -> PathBuf {
    output.with_extension("meta.json")
}

pub fn metadata(spec: &ScanSpec, records: &[PointRecord]) -> serde_json::Value {
    let generated = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "library_version": env!("CARGO_PKG_VERSION"),
        "columns": columns(spec.loss),
        "rows": records.len(),
        "failed_rows": records.iter().filter(|r| r.error.is_some()).count(),
        "spec": spec,
        "tolerances": {
            "gamma_window": spec.gamma_window,
            "optimizer_grid_points": crate::optimizer::GRID_POINTS,
            "optimizer_max_evaluations": crate::optimizer::MAX_EVALUATIONS,
            "singular_tolerance": "1e-12 * max(1, f_pp, f_mm)",
        },
        "generated_unix_time": generated,
    })
}

/// Runs a sweep and writes the CSV plus its metadata file.
pub fn run_scan(spec: &ScanSpec, output: &Path, jobs: usize) -> Result<Vec<PointRecord>, CliError> {
    let records = scan_records(spec, jobs)?;
    write_csv(spec, &records, std::fs::File::create(output)?)?;
    let meta = serde_json::to_string_pretty(&metadata(spec, &records)).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(metadata_path(output), meta + "\n")?;
    Ok(records)
}
