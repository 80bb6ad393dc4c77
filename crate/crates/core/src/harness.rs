//! Monte-Carlo runner: replicates a scenario, applies each method under each
//! conditioning set and signal ratio, and aggregates screening and
//! post-selection metrics into summary rows.
//!
//! Indices in configuration files and emitted CSV are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    CoefficientSpec, CovarianceFamily, CovarianceSpec, Dataset, ErrorFamily, PredictorFamily,
    ScenarioSpec,
};
use crate::error::{Error, Result};
use crate::linalg::{ols, IndexSet, Matrix, Vector};
use crate::pathwise::{ebic_select, folp_path_with, fr_path, FolpOptions};
use crate::screeners::{default_model_size, rank_descending, ScreenMethod, Screener};

/// Fraction of failed replicates above which a cell is reported invalid.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodId {
    #[serde(rename = "sis")]
    Sis,
    #[serde(rename = "csis")]
    Csis,
    #[serde(rename = "holp")]
    Holp,
    #[serde(rename = "colp")]
    Colp,
    #[serde(rename = "folp")]
    Folp,
    #[serde(rename = "folp-ebic")]
    FolpEbic,
    #[serde(rename = "fr-ebic")]
    FrEbic,
}

impl MethodId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sis => "sis",
            Self::Csis => "csis",
            Self::Holp => "holp",
            Self::Colp => "colp",
            Self::Folp => "folp",
            Self::FolpEbic => "folp-ebic",
            Self::FrEbic => "fr-ebic",
        }
    }

    /// Methods that end in a selected model rather than a ranking.
    pub fn is_selection(self) -> bool {
        matches!(self, Self::FolpEbic | Self::FrEbic)
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::Parse(format!("unknown method {s:?}")))
    }
}

/// Covariance family as written in a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CovarianceConfig {
    Identity,
    Compound { rho: f64 },
    Ar1 { rho: f64 },
    Example32,
    Example33,
    Factor5,
    Explicit { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientConfig {
    /// `[index, value]` pairs with 1-based indices.
    Fixed(Vec<(usize, f64)>),
    /// `"random-signed-8"` or `"cancelling"`.
    Named(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorConfig {
    #[default]
    Gaussian,
    Exponential,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorConfig {
    #[default]
    Normal,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomScenario {
    #[serde(default = "custom_name")]
    pub name: String,
    pub covariance: CovarianceConfig,
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub predictors: PredictorConfig,
    #[serde(default)]
    pub errors: ErrorConfig,
}

fn custom_name() -> String {
    "custom".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioConfig {
    Example { example: String },
    Custom(CustomScenario),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DnConfig {
    Fixed(usize),
    /// Only `"auto"`, meaning `floor(n / ln n)`.
    Named(String),
}

impl Default for DnConfig {
    fn default() -> Self {
        DnConfig::Named("auto".into())
    }
}

fn default_conditioning() -> Vec<Vec<usize>> {
    vec![Vec::new()]
}

fn default_true() -> bool {
    true
}

/// A simulation run as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub scenario: ScenarioConfig,
    pub n: usize,
    pub p: usize,
    /// Number of replicates.
    pub d: usize,
    pub r2: Vec<f64>,
    pub methods: Vec<MethodId>,
    /// 1-based conditioning sets; `[]` means no prior information.
    #[serde(default = "default_conditioning")]
    pub conditioning: Vec<Vec<usize>>,
    #[serde(default)]
    pub dn: DnConfig,
    #[serde(default)]
    pub seed: u64,
    /// Record wall-clock times; when off, `time_s` is left empty.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Incremental conditional updates inside FOLP.
    #[serde(default)]
    pub incremental: bool,
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn model_size(&self) -> Result<usize> {
        match &self.dn {
            DnConfig::Fixed(0) => Err(Error::InvalidSpec("dn must be positive".into())),
            DnConfig::Fixed(d) => Ok(*d),
            DnConfig::Named(s) if s == "auto" => Ok(default_model_size(self.n)),
            DnConfig::Named(s) => Err(Error::InvalidSpec(format!(
                "dn must be \"auto\" or an integer, got {s:?}"
            ))),
        }
    }

    /// 0-based conditioning sets.
    pub fn conditioning_sets(&self) -> Result<Vec<IndexSet>> {
        self.conditioning
            .iter()
            .map(|c| {
                if c.contains(&0) {
                    return Err(Error::InvalidIndexSet(
                        "conditioning indices are 1-based".into(),
                    ));
                }
                let s = IndexSet::from_unsorted(c.iter().map(|i| i - 1).collect())?;
                s.check_bound(self.p)?;
                Ok(s)
            })
            .collect()
    }

    /// The scenario at the first signal ratio.
    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        let r2 = *self
            .r2
            .first()
            .ok_or_else(|| Error::InvalidSpec("at least one r2 level is required".into()))?;
        for &v in &self.r2 {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "signal ratio {v} outside (0, 1)"
                )));
            }
        }
        match &self.scenario {
            ScenarioConfig::Example { example } => {
                ScenarioSpec::example(example, self.n, self.p, r2, self.d, self.seed)
            }
            ScenarioConfig::Custom(c) => {
                let family = match &c.covariance {
                    CovarianceConfig::Identity => CovarianceFamily::Identity,
                    CovarianceConfig::Compound { rho } => CovarianceFamily::Compound(*rho),
                    CovarianceConfig::Ar1 { rho } => CovarianceFamily::Ar1(*rho),
                    CovarianceConfig::Example32 => CovarianceFamily::Example32,
                    CovarianceConfig::Example33 => CovarianceFamily::Example33,
                    CovarianceConfig::Factor5 => CovarianceFamily::Factor5,
                    CovarianceConfig::Explicit { matrix } => {
                        if matrix.len() != self.p || matrix.iter().any(|r| r.len() != self.p) {
                            return Err(Error::DimensionMismatch(format!(
                                "explicit covariance must be {0}x{0}",
                                self.p
                            )));
                        }
                        let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                        CovarianceFamily::Explicit(Matrix::from_row_slice(self.p, self.p, &flat))
                    }
                };
                let coefficients = match &c.coefficients {
                    CoefficientConfig::Fixed(pairs) => {
                        if pairs.iter().any(|&(i, _)| i == 0) {
                            return Err(Error::InvalidSpec(
                                "coefficient indices are 1-based".into(),
                            ));
                        }
                        CoefficientSpec::Fixed(pairs.iter().map(|&(i, v)| (i - 1, v)).collect())
                    }
                    CoefficientConfig::Named(s) if s == "random-signed-8" => {
                        CoefficientSpec::RandomSigned8
                    }
                    CoefficientConfig::Named(s) if s == "cancelling" => {
                        CoefficientSpec::Cancelling { beta1: 1.0 }
                    }
                    CoefficientConfig::Named(s) => {
                        return Err(Error::InvalidSpec(format!(
                            "unknown coefficient rule {s:?}"
                        )))
                    }
                };
                let spec = ScenarioSpec {
                    name: c.name.clone(),
                    n: self.n,
                    p: self.p,
                    covariance: CovarianceSpec::new(family, self.p)?,
                    coefficients,
                    r2,
                    error_family: match c.errors {
                        ErrorConfig::Normal => ErrorFamily::Normal,
                        ErrorConfig::Exponential => ErrorFamily::Exponential,
                    },
                    predictor_family: match c.predictors {
                        PredictorConfig::Gaussian => PredictorFamily::Gaussian,
                        PredictorConfig::Exponential => PredictorFamily::Exponential,
                    },
                    replications: self.d,
                    master_seed: self.seed,
                };
                spec.validate()?;
                Ok(spec)
            }
        }
    }
}

/// Outcome of one method on one replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub replicate: usize,
    pub r2: f64,
    pub method: MethodId,
    pub conditioning: IndexSet,
    /// Minimum prefix of the ordering covering the remaining active set.
    pub mms: Option<usize>,
    pub selected: Option<IndexSet>,
    pub fns: Option<usize>,
    pub fps: Option<usize>,
    pub err: Option<f64>,
    pub r2hat: Option<f64>,
    pub time_s: Option<f64>,
    pub fallback: bool,
    pub failure: Option<String>,
}

impl ReplicationRecord {
    fn empty(replicate: usize, r2: f64, method: MethodId, conditioning: IndexSet) -> Self {
        Self {
            replicate,
            r2,
            method,
            conditioning,
            mms: None,
            selected: None,
            fns: None,
            fps: None,
            err: None,
            r2hat: None,
            time_s: None,
            fallback: false,
            failure: None,
        }
    }
}

/// Smallest prefix length of `order` containing every index of `targets`.
pub fn mms(order: &[usize], targets: &IndexSet) -> Result<usize> {
    let mut pos = vec![usize::MAX; targets.len()];
    for (k, &j) in order.iter().enumerate() {
        if let Ok(t) = targets.as_slice().binary_search(&j) {
            if pos[t] == usize::MAX {
                pos[t] = k;
            }
        }
    }
    let mut worst = 0;
    for (t, &k) in pos.iter().enumerate() {
        if k == usize::MAX {
            return Err(Error::NotCoverable(targets.as_slice()[t]));
        }
        worst = worst.max(k + 1);
    }
    Ok(worst)
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sure-screening proportion, median MMS and robust spread `IQR / 1.34`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScreeningSummary {
    pub ps: f64,
    pub ms: f64,
    pub rsd: f64,
}

pub fn summarize_screening(mms_values: &[usize], dn: usize) -> Option<ScreeningSummary> {
    if mms_values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = mms_values.iter().map(|&m| m as f64).collect();
    v.sort_by(f64::total_cmp);
    let ps = mms_values.iter().filter(|&&m| m <= dn).count() as f64 / mms_values.len() as f64;
    Some(ScreeningSummary {
        ps,
        ms: quantile_sorted(&v, 0.5),
        rsd: (quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)) / 1.34,
    })
}

/// Post-selection outcome of one selected model.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionOutcome {
    pub fns: usize,
    pub fps: usize,
    pub err: f64,
    pub r2hat: f64,
}

/// Refits least squares on `selected` and scores it against the truth and a
/// held-out sample.
pub fn post_selection(
    selected: &IndexSet,
    train: &Dataset,
    test: &Dataset,
) -> Result<SelectionOutcome> {
    let truth = train.truth.as_ref().ok_or_else(|| {
        Error::InvalidSpec("post-selection metrics need the true coefficients".into())
    })?;
    if test.p() != train.p() {
        return Err(Error::DimensionMismatch(format!(
            "test set has {} predictors, training set {}",
            test.p(),
            train.p()
        )));
    }
    let fns = truth
        .active
        .iter()
        .filter(|&j| !selected.contains(j))
        .count();
    let fps = selected
        .iter()
        .filter(|&j| !truth.active.contains(j))
        .count();
    let coef = ols(&train.x.select_columns(selected.as_slice()), &train.y)?;
    let mut beta_hat = Vector::zeros(train.p());
    for (k, j) in selected.iter().enumerate() {
        beta_hat[j] = coef[k];
    }
    let err = (&beta_hat - &truth.beta).norm_squared();
    let resid = (&test.y - &test.x * &beta_hat).norm_squared();
    let ymean = test.y.mean();
    let tss: f64 = test.y.iter().map(|v| (v - ymean).powi(2)).sum();
    Ok(SelectionOutcome {
        fns,
        fps,
        err,
        r2hat: 100.0 * (1.0 - resid / tss),
    })
}

/// One aggregated table cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub example: String,
    pub method: MethodId,
    pub conditioning: IndexSet,
    pub r2: f64,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub ps: Option<f64>,
    pub ms: Option<f64>,
    pub rsd: Option<f64>,
    pub fns: Option<f64>,
    pub fps: Option<f64>,
    pub size: Option<f64>,
    pub pe: Option<f64>,
    pub err: Option<f64>,
    pub r2hat: Option<f64>,
    pub time_s: Option<f64>,
    pub failures: usize,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStatus {
    pub method: String,
    pub conditioning: String,
    pub r2: f64,
    pub replicates: usize,
    pub failures: usize,
    pub fallbacks: usize,
    pub valid: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub example: String,
    pub seed: u64,
    pub dn: usize,
    pub config: SimulationConfig,
    pub cells: Vec<CellStatus>,
    /// Worker count and durations; present only when timing is enabled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    pub workers: usize,
    pub wall_seconds: f64,
    pub replicate_seconds: Vec<f64>,
}

pub struct RunOutput {
    pub summary: Vec<SummaryRow>,
    pub records: Vec<ReplicationRecord>,
    pub manifest: Manifest,
}

fn elapsed(start: Instant, timing: bool) -> Option<f64> {
    timing.then(|| start.elapsed().as_secs_f64())
}

/// Runs one method on one dataset.
#[allow(clippy::too_many_arguments)]
fn run_method(
    method: MethodId,
    ds: &Dataset,
    c: &IndexSet,
    dn: usize,
    opts: FolpOptions,
    timing: bool,
    test: Option<&Dataset>,
    rec: &mut ReplicationRecord,
) -> Result<()> {
    let truth = ds.truth.as_ref().expect("simulated data carry the truth");
    let targets = truth.active.difference(c);
    let start = Instant::now();
    match method {
        MethodId::Sis | MethodId::Csis | MethodId::Holp | MethodId::Colp => {
            let sm = match method {
                MethodId::Sis => ScreenMethod::Sis,
                MethodId::Csis => ScreenMethod::Csis,
                MethodId::Holp => ScreenMethod::Holp,
                _ => ScreenMethod::Colp,
            };
            let scores = Screener::new(ds).scores(sm, c)?;
            let order = rank_descending(&scores);
            rec.time_s = elapsed(start, timing);
            rec.fallback = scores.fallback;
            rec.mms = Some(mms(&order, &targets)?);
        }
        MethodId::Folp => {
            let path = folp_path_with(&Screener::new(ds), c, dn, opts)?;
            rec.time_s = elapsed(start, timing);
            rec.mms = Some(mms(&path.ordering(), &targets)?);
        }
        MethodId::FolpEbic | MethodId::FrEbic => {
            let path = if method == MethodId::FolpEbic {
                folp_path_with(&Screener::new(ds), c, dn, opts)?
            } else {
                fr_path(ds, c, dn)?
            };
            let sel = ebic_select(&path, ds)?;
            rec.time_s = elapsed(start, timing);
            let test = test.expect("test set drawn for selection methods");
            let out = post_selection(&sel.model, ds, test)?;
            rec.fns = Some(out.fns);
            rec.fps = Some(out.fps);
            rec.err = Some(out.err);
            rec.r2hat = Some(out.r2hat);
            rec.selected = Some(sel.model);
        }
    }
    Ok(())
}

/// Runs every cell of `cfg` with `workers` threads (0 = all cores).
///
/// Records and summary rows depend only on the configuration, never on the
/// worker count or scheduling.
pub fn run_scenario(cfg: &SimulationConfig, workers: usize) -> Result<RunOutput> {
    let spec = cfg.scenario_spec()?;
    let conds = cfg.conditioning_sets()?;
    let dn = cfg.model_size()?;
    if cfg.methods.is_empty() {
        return Err(Error::InvalidSpec("no methods requested".into()));
    }
    if cfg.d == 0 {
        return Err(Error::InvalidSpec(
            "at least one replicate is required".into(),
        ));
    }
    let opts = FolpOptions {
        incremental: cfg.incremental,
    };
    let need_test = cfg.methods.iter().any(|m| m.is_selection());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;

    let wall = Instant::now();
    info!(
        "example {}: {} replicates, {} signal ratios, {} conditioning sets, {} methods",
        spec.name,
        cfg.d,
        cfg.r2.len(),
        conds.len(),
        cfg.methods.len()
    );
    let per_rep: Vec<(Vec<ReplicationRecord>, f64)> = pool.install(|| {
        (0..cfg.d)
            .into_par_iter()
            .map(|rep| {
                let t0 = Instant::now();
                let mut out = Vec::new();
                let drawn = spec.draw_replicate(rep as u64);
                for &r2 in &cfg.r2 {
                    let ds = drawn
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|d| d.dataset(&spec.covariance, r2).map_err(|e| e.to_string()));
                    let test = match (&ds, need_test) {
                        (Ok(d), true) => Some(
                            spec.draw_test(rep as u64, &d.truth.as_ref().unwrap().beta, r2)
                                .map_err(|e| e.to_string()),
                        ),
                        _ => None,
                    };
                    for c in &conds {
                        for &method in &cfg.methods {
                            let mut rec = ReplicationRecord::empty(rep, r2, method, c.clone());
                            let res = match (&ds, &test) {
                                (Err(e), _) | (_, Some(Err(e))) => Err(e.clone()),
                                (Ok(d), t) => {
                                    let t = t.as_ref().and_then(|r| r.as_ref().ok());
                                    run_method(method, d, c, dn, opts, cfg.timing, t, &mut rec)
                                        .map_err(|e| e.to_string())
                                }
                            };
                            if let Err(e) = res {
                                warn!("replicate {rep}, {}, r2 {r2}: {e}", method.as_str());
                                rec.failure = Some(e);
                            }
                            out.push(rec);
                        }
                    }
                }
                (out, t0.elapsed().as_secs_f64())
            })
            .collect()
    });

    let replicate_seconds: Vec<f64> = per_rep.iter().map(|(_, t)| *t).collect();
    let mut all: Vec<ReplicationRecord> = per_rep.into_iter().flat_map(|(r, _)| r).collect();
    let r2_pos = |r2: f64| cfg.r2.iter().position(|&v| v == r2).unwrap_or(0);
    let c_pos = |c: &IndexSet| conds.iter().position(|v| v == c).unwrap_or(0);
    let m_pos = |m: MethodId| cfg.methods.iter().position(|&v| v == m).unwrap_or(0);
    all.sort_by_key(|r| {
        (
            r2_pos(r.r2),
            c_pos(&r.conditioning),
            m_pos(r.method),
            r.replicate,
        )
    });

    let mut summary = Vec::new();
    let mut cells = Vec::new();
    for cell in all
        .chunk_by(|a, b| a.r2 == b.r2 && a.conditioning == b.conditioning && a.method == b.method)
    {
        let first = &cell[0];
        let ok: Vec<&ReplicationRecord> = cell.iter().filter(|r| r.failure.is_none()).collect();
        let failures = cell.len() - ok.len();
        let valid = (failures as f64) <= MAX_FAILURE_RATE * cell.len() as f64 && !ok.is_empty();
        let mut row = SummaryRow {
            example: spec.name.clone(),
            method: first.method,
            conditioning: first.conditioning.clone(),
            r2: first.r2,
            n: cfg.n,
            p: cfg.p,
            d: cfg.d,
            ps: None,
            ms: None,
            rsd: None,
            fns: None,
            fps: None,
            size: None,
            pe: None,
            err: None,
            r2hat: None,
            time_s: None,
            failures,
            valid,
        };
        if !ok.is_empty() {
            let k = ok.len() as f64;
            let mean =
                |f: &dyn Fn(&ReplicationRecord) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / k;
            if first.method.is_selection() {
                row.fns = Some(mean(&|r| r.fns.unwrap() as f64));
                row.fps = Some(mean(&|r| r.fps.unwrap() as f64));
                row.size = Some(mean(&|r| {
                    r.selected.as_ref().map_or(0, IndexSet::len) as f64
                }));
                row.ps = Some(mean(&|r| f64::from(u8::from(r.fns == Some(0)))));
                row.pe = Some(mean(&|r| {
                    f64::from(u8::from(r.fns == Some(0) && r.fps == Some(0)))
                }));
                row.err = Some(mean(&|r| r.err.unwrap()));
                row.r2hat = Some(mean(&|r| r.r2hat.unwrap()));
            } else {
                let m: Vec<usize> = ok.iter().map(|r| r.mms.unwrap()).collect();
                let s = summarize_screening(&m, dn).expect("nonempty");
                row.ps = Some(s.ps);
                row.ms = Some(s.ms);
                row.rsd = Some(s.rsd);
            }
            if cfg.timing {
                row.time_s = Some(mean(&|r| r.time_s.unwrap_or(0.0)));
            }
        }
        cells.push(CellStatus {
            method: first.method.as_str().into(),
            conditioning: format_set(&first.conditioning),
            r2: first.r2,
            replicates: cell.len(),
            failures,
            fallbacks: cell.iter().filter(|r| r.fallback).count(),
            valid,
        });
        if !valid {
            warn!(
                "cell {} {} r2={} invalid: {failures} of {} replicates failed",
                first.method.as_str(),
                format_set(&first.conditioning),
                first.r2,
                cell.len()
            );
        }
        summary.push(row);
    }

    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        example: spec.name.clone(),
        seed: cfg.seed,
        dn,
        config: cfg.clone(),
        cells,
        run: cfg.timing.then(|| RunInfo {
            workers: pool.current_num_threads(),
            wall_seconds: wall.elapsed().as_secs_f64(),
            replicate_seconds,
        }),
    };
    Ok(RunOutput {
        summary,
        records: all,
        manifest,
    })
}

/// `{i;j;...}` with 1-based indices.
pub fn format_set(s: &IndexSet) -> String {
    let mut out = String::from("{");
    for (k, j) in s.iter().enumerate() {
        if k > 0 {
            out.push(';');
        }
        let _ = write!(out, "{}", j + 1);
    }
    out.push('}');
    out
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_HEADER: [&str; 17] = [
    "example",
    "method",
    "conditioning",
    "r2",
    "n",
    "p",
    "d",
    "Ps",
    "Ms",
    "RSD",
    "FNs",
    "FPs",
    "size",
    "Pe",
    "err",
    "r2hat",
    "time_s",
];

pub fn write_summary<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SUMMARY_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.example.clone(),
            r.method.as_str().into(),
            format_set(&r.conditioning),
            r.r2.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.d.to_string(),
            opt(r.ps),
            opt(r.ms),
            opt(r.rsd),
            opt(r.fns),
            opt(r.fps),
            opt(r.size),
            opt(r.pe),
            opt(r.err),
            opt(r.r2hat),
            opt(r.time_s),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(example: &str, records: &[ReplicationRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "example",
        "method",
        "conditioning",
        "r2",
        "replicate",
        "mms",
        "selected",
        "FNs",
        "FPs",
        "err",
        "r2hat",
        "time_s",
        "fallback",
        "failure",
    ])?;
    for r in records {
        wtr.write_record([
            example.to_string(),
            r.method.as_str().into(),
            format_set(&r.conditioning),
            r.r2.to_string(),
            (r.replicate + 1).to_string(),
            opt(r.mms),
            r.selected.as_ref().map(format_set).unwrap_or_default(),
            opt(r.fns),
            opt(r.fps),
            opt(r.err),
            opt(r.r2hat),
            opt(r.time_s),
            r.fallback.to_string(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `summary.csv`, `records.csv` and `manifest.json` into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_summary(&out.summary, fs::File::create(dir.join("summary.csv"))?)?;
    write_records(
        &out.manifest.example,
        &out.records,
        fs::File::create(dir.join("records.csv"))?,
    )?;
    let mut f = fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &out.manifest)?;
    f.write_all(b"\n")?;
    Ok(())
}
