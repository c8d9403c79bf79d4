//! Command implementations behind the `intervalbf` binary: run
//! configuration with flag > config-file > default precedence, the analysis
//! pipeline, the published-table comparison, the tau sweep, and the t-test.
//!
//! Exit codes: 0 success, 2 input error, 3 sampler failure, 4 diagnostics
//! failure (including split R-hat above the gate), 5 internal error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::hypothesis::IntervalHypothesis;
use crate::inference::{
    bayes_factor, continuity_eta1, full_report, BfKind, InferenceError, ParamDraws,
};
use crate::models::{
    betablocker_fixture, calcium_fixture, meta_model, pooled_t_test, two_sample_model,
    BuiltModel, MetaAnalysisData, MetaConfig, ModelError, ToyModel, TTestResult,
    TwoSampleConfig, TwoSampleData,
};
use crate::report::{write_atomic, Report, ReportMeta};
use crate::sampler::{
    diagnose, run_chains_capped, Diagnostics, DiagnosticsError, DrawMatrix, Init,
    SamplerConfig, SamplerError,
};

/// Default scales for the alternative prior in the Figure-style sweep.
pub const DEFAULT_TAU_GRID: [f64; 7] = [0.15, 0.25, 0.35, 0.5, 0.75, 1.0, 1.25];

/// Published meta-analysis table: (delta, Pr(theta in Theta1 | y), BF10).
pub const PUBLISHED_TABLE3: [(f64, f64, f64); 3] =
    [(0.1, 0.97, 35.6), (0.2, 0.81, 4.37), (0.3, 0.29, 0.411)];

/// A run fails its quality gate when any parameter exceeds this split R-hat.
pub const SPLIT_RHAT_GATE: f64 = 1.05;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("sampler error: {0}")]
    Sampler(String),
    #[error("diagnostics failure: {0}")]
    Diagnostics(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Sampler(_) => 3,
            CliError::Diagnostics(_) => 4,
            CliError::Internal(_) => 5,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::InvalidConfig(_)
            | SamplerError::InitDimensionMismatch { .. }
            | SamplerError::InitOutOfSupport { .. } => CliError::Input(e.to_string()),
            _ => CliError::Sampler(e.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        CliError::Diagnostics(e.to_string())
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::InvalidAlpha(_) | InferenceError::InvalidEta1(_) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn io_write_err(e: std::io::Error) -> CliError {
    CliError::Internal(format!("writing output: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    TwoSample,
    Meta,
    Toy,
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two_sample" => Ok(ModelKind::TwoSample),
            "meta" => Ok(ModelKind::Meta),
            "toy" => Ok(ModelKind::Toy),
            other => Err(format!(
                "unknown model {other:?} (expected two_sample, meta or toy)"
            )),
        }
    }
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::TwoSample => "two_sample",
            ModelKind::Meta => "meta",
            ModelKind::Toy => "toy",
        }
    }
}

/// The alternative-prior scale: a number, or `1.5delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSpec {
    Value(f64),
    OneAndHalfDelta,
}

impl FromStr for TauSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "1.5delta" {
            return Ok(TauSpec::OneAndHalfDelta);
        }
        s.parse::<f64>()
            .map(TauSpec::Value)
            .map_err(|_| format!("tau must be a number or \"1.5delta\", got {s:?}"))
    }
}

/// The prior weight of the alternative: a number, `half`, or `continuity`
/// (the weight that makes the mixture density continuous at the boundary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSpec {
    Half,
    Continuity,
    Value(f64),
}

impl FromStr for EtaSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "half" => Ok(EtaSpec::Half),
            "continuity" => Ok(EtaSpec::Continuity),
            other => other.parse::<f64>().map(EtaSpec::Value).map_err(|_| {
                format!("eta1 must be a number, \"half\" or \"continuity\", got {other:?}")
            }),
        }
    }
}

impl EtaSpec {
    pub fn label(&self) -> String {
        match self {
            EtaSpec::Half => "half".into(),
            EtaSpec::Continuity => "continuity".into(),
            EtaSpec::Value(v) => format!("{v}"),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelKind,
    pub data_path: Option<PathBuf>,
    pub delta: f64,
    pub tau: TauSpec,
    pub eta1: EtaSpec,
    pub alpha: f64,
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub seed: u64,
    pub output_path: PathBuf,
    pub y_obs: f64,
    pub threads: usize,
    pub draws_out: Option<PathBuf>,
}

/// Partial run settings; `None` means "not given here". Used for both
/// command-line flags and config files, merged by precedence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub model: Option<ModelKind>,
    pub data_path: Option<PathBuf>,
    pub delta: Option<f64>,
    pub tau: Option<TauSpec>,
    pub eta1: Option<EtaSpec>,
    pub alpha: Option<f64>,
    pub chains: Option<usize>,
    pub warmup: Option<usize>,
    pub draws: Option<usize>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub y_obs: Option<f64>,
    pub threads: Option<usize>,
    pub draws_out: Option<PathBuf>,
}

impl RunOverrides {
    /// Combine two layers; fields set on `self` win.
    pub fn over(self, base: RunOverrides) -> RunOverrides {
        RunOverrides {
            model: self.model.or(base.model),
            data_path: self.data_path.or(base.data_path),
            delta: self.delta.or(base.delta),
            tau: self.tau.or(base.tau),
            eta1: self.eta1.or(base.eta1),
            alpha: self.alpha.or(base.alpha),
            chains: self.chains.or(base.chains),
            warmup: self.warmup.or(base.warmup),
            draws: self.draws.or(base.draws),
            seed: self.seed.or(base.seed),
            output_path: self.output_path.or(base.output_path),
            y_obs: self.y_obs.or(base.y_obs),
            threads: self.threads.or(base.threads),
            draws_out: self.draws_out.or(base.draws_out),
        }
    }

    /// Parse a flat `key=value` config file (# starts a comment).
    pub fn from_config_file(path: &Path) -> Result<RunOverrides, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("config file {}: {e}", path.display())))?;
        let mut out = RunOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!(
                    "config file {} line {}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |msg: String| {
                CliError::Input(format!(
                    "config file {} line {}: {msg}",
                    path.display(),
                    lineno + 1
                ))
            };
            match key {
                "model" => out.model = Some(value.parse().map_err(bad)?),
                "data_path" => out.data_path = Some(PathBuf::from(value)),
                "delta" => out.delta = Some(parse_num(key, value).map_err(bad)?),
                "tau" => out.tau = Some(value.parse().map_err(bad)?),
                "eta1" => out.eta1 = Some(value.parse().map_err(bad)?),
                "alpha" => out.alpha = Some(parse_num(key, value).map_err(bad)?),
                "chains" => out.chains = Some(parse_int(key, value).map_err(bad)?),
                "warmup" => out.warmup = Some(parse_int(key, value).map_err(bad)?),
                "draws" => out.draws = Some(parse_int(key, value).map_err(bad)?),
                "seed" => out.seed = Some(parse_int(key, value).map_err(bad)? as u64),
                "output_path" => out.output_path = Some(PathBuf::from(value)),
                "y_obs" => out.y_obs = Some(parse_num(key, value).map_err(bad)?),
                "threads" => out.threads = Some(parse_int(key, value).map_err(bad)?),
                "draws_out" => out.draws_out = Some(PathBuf::from(value)),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(out)
    }

    /// Fill remaining fields with defaults; `model` and `delta` are required.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let model = self
            .model
            .ok_or_else(|| CliError::Input("missing required setting: model".into()))?;
        let delta = self
            .delta
            .ok_or_else(|| CliError::Input("missing required setting: delta".into()))?;
        Ok(RunConfig {
            model,
            data_path: self.data_path,
            delta,
            tau: self.tau.unwrap_or(TauSpec::OneAndHalfDelta),
            eta1: self.eta1.unwrap_or(EtaSpec::Half),
            alpha: self.alpha.unwrap_or(0.05),
            chains: self.chains.unwrap_or(4),
            warmup: self.warmup.unwrap_or(10_000),
            draws: self.draws.unwrap_or(20_000),
            seed: self.seed.unwrap_or(1),
            output_path: self.output_path.unwrap_or_else(|| PathBuf::from("report.json")),
            y_obs: self.y_obs.unwrap_or(0.0),
            threads: self.threads.unwrap_or(0),
            draws_out: self.draws_out,
        })
    }
}

fn parse_num(key: &str, value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|e| format!("{key}: {e} (got {value:?})"))
}

fn parse_int(key: &str, value: &str) -> Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|e| format!("{key}: {e} (got {value:?})"))
}

fn validate_run(rc: &RunConfig) -> Result<(), CliError> {
    if !(rc.delta.is_finite() && rc.delta > 0.0) {
        return Err(CliError::Input(format!("delta must be positive, got {}", rc.delta)));
    }
    if !(rc.alpha > 0.0 && rc.alpha < 1.0) {
        return Err(CliError::Input(format!(
            "alpha must lie in (0, 1), got {}",
            rc.alpha
        )));
    }
    if let TauSpec::Value(t) = rc.tau {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Input(format!("tau must be positive, got {t}")));
        }
    }
    if let EtaSpec::Value(e) = rc.eta1 {
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Input(format!("eta1 must lie in (0, 1), got {e}")));
        }
    }
    Ok(())
}

/// Everything a finished analysis produces.
pub struct AnalysisOutcome {
    pub report: Report,
    pub diagnostics: Diagnostics,
    pub draws: DrawMatrix,
    pub resolved_tau: f64,
    pub resolved_eta1: f64,
    pub theta_split_rhat: f64,
    pub runtime_seconds: f64,
    /// Set when max split R-hat exceeded [`SPLIT_RHAT_GATE`].
    pub gate_failure: Option<String>,
}

fn build_for(rc: &RunConfig, tau: f64, eta1: f64) -> Result<BuiltModel, CliError> {
    match rc.model {
        ModelKind::TwoSample => {
            let data = match &rc.data_path {
                Some(p) => TwoSampleData::from_csv_path(p)?,
                None => calcium_fixture(),
            };
            Ok(two_sample_model(&data, &TwoSampleConfig::new(rc.delta, tau, eta1))?)
        }
        ModelKind::Meta => {
            let data = match &rc.data_path {
                Some(p) => MetaAnalysisData::from_csv_path(p)?,
                None => betablocker_fixture(),
            };
            Ok(meta_model(&data, &MetaConfig::new(rc.delta, tau, eta1))?)
        }
        ModelKind::Toy => {
            let h = IntervalHypothesis::new(0.0, rc.delta)
                .map_err(|e| CliError::Input(e.to_string()))?;
            Ok(ToyModel::new(rc.y_obs, h, tau, eta1).build()?)
        }
    }
}

/// Run the full pipeline: resolve tau/eta1, build the model, sample,
/// diagnose, and assemble the report. Does not write anything.
pub fn run_analysis(rc: &RunConfig) -> Result<AnalysisOutcome, CliError> {
    validate_run(rc)?;
    let start = std::time::Instant::now();
    let hypothesis =
        IntervalHypothesis::new(0.0, rc.delta).map_err(|e| CliError::Input(e.to_string()))?;
    let tau = match rc.tau {
        TauSpec::Value(t) => t,
        TauSpec::OneAndHalfDelta => 1.5 * rc.delta,
    };
    let eta1 = match rc.eta1 {
        EtaSpec::Half => 0.5,
        EtaSpec::Value(v) => v,
        EtaSpec::Continuity => continuity_eta1(&hypothesis, tau)?,
    };
    let built = build_for(rc, tau, eta1)?;
    let sampler_cfg = SamplerConfig {
        chains: rc.chains,
        warmup_iterations: rc.warmup,
        sampling_iterations: rc.draws,
        seed: rc.seed,
        ..SamplerConfig::default()
    };
    let max_parallel = if rc.threads == 0 { usize::MAX } else { rc.threads };
    let draws = run_chains_capped(&built.spec, &sampler_cfg, &Init::Point(built.init), max_parallel)?;
    let diagnostics = diagnose(&draws)?;
    let theta_idx = draws
        .parameter_index("theta")
        .ok_or_else(|| CliError::Internal("model has no theta parameter".into()))?;
    let theta_split_rhat = diagnostics.split_rhat[theta_idx];
    let theta_draws = ParamDraws::from_draw_matrix(&draws, "theta")?;
    let summary = full_report(&theta_draws, &hypothesis, eta1, rc.alpha)?;
    let report = Report::from_summary(
        &summary,
        &ReportMeta {
            theta0: 0.0,
            delta: rc.delta,
            tau,
            seed: rc.seed,
        },
    );
    let max_rhat = diagnostics.max_split_rhat();
    let gate_failure = (max_rhat > SPLIT_RHAT_GATE).then(|| {
        let worst = diagnostics
            .split_rhat
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| diagnostics.parameter_names[i].clone())
            .unwrap_or_default();
        format!(
            "split R-hat {max_rhat:.4} on parameter {worst:?} exceeds the {SPLIT_RHAT_GATE} gate; \
             draws are not trustworthy (try more warmup or draws)"
        )
    });
    Ok(AnalysisOutcome {
        report,
        diagnostics,
        draws,
        resolved_tau: tau,
        resolved_eta1: eta1,
        theta_split_rhat,
        runtime_seconds: start.elapsed().as_secs_f64(),
        gate_failure,
    })
}

pub fn format_outcome(rc: &RunConfig, out: &AnalysisOutcome) -> String {
    let r = &out.report;
    let mut s = String::new();
    let _ = writeln!(s, "model            {}", rc.model.as_str());
    let data_desc = rc
        .data_path
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| {
            match rc.model {
                ModelKind::Toy => format!("y_obs = {}", rc.y_obs),
                _ => "(embedded fixture)".into(),
            }
        });
    let _ = writeln!(s, "data             {data_desc}");
    let _ = writeln!(s, "delta            {}", r.delta);
    let _ = writeln!(s, "tau              {}", r.tau);
    let _ = writeln!(s, "eta1             {} ({})", r.eta1, rc.eta1.label());
    let _ = writeln!(s, "alpha            {}", r.alpha);
    let _ = writeln!(
        s,
        "sampling         {} chains x {} draws (warmup {}, seed {})",
        rc.chains, rc.draws, rc.warmup, r.seed
    );
    let _ = writeln!(s, "p_alt            {:.6} +- {:.6}", r.p_alt, r.p_alt_se);
    match r.bf10_kind {
        BfKind::Point => {
            let _ = writeln!(
                s,
                "BF10             {:.6} (log10 {:.4} +- {:.4})",
                r.bf10.unwrap_or(f64::NAN),
                r.log10_bf10.unwrap_or(f64::NAN),
                r.log10_bf10_se.unwrap_or(f64::NAN)
            );
        }
        BfKind::LowerBound => {
            let _ = writeln!(s, "BF10             >= {:.6} (all draws in Theta1)", r.bf10_bound.unwrap_or(f64::NAN));
        }
        BfKind::UpperBound => {
            let _ = writeln!(s, "BF10             <= {:.6} (no draws in Theta1)", r.bf10_bound.unwrap_or(f64::NAN));
        }
    }
    let _ = writeln!(
        s,
        "{:.0}% HDI          [{:.6}, {:.6}]",
        r.hdi.level * 100.0,
        r.hdi.lower,
        r.hdi.upper
    );
    let _ = writeln!(s, "verdict          {:?}", r.verdict);
    let _ = writeln!(s, "refined verdict  {:?}", r.refined_verdict);
    let _ = writeln!(s, "ess(indicator)   {:.1}", r.ess_indicator);
    let _ = writeln!(
        s,
        "split R-hat      theta {:.4}, max {:.4} over {} parameters",
        out.theta_split_rhat,
        out.diagnostics.max_split_rhat(),
        out.diagnostics.parameter_names.len()
    );
    let _ = writeln!(s, "runtime          {:.1} s", out.runtime_seconds);
    s
}

/// `run` command: analyze, write the JSON report (and optional draws CSV),
/// print the summary. Fails with the diagnostics exit code when the split
/// R-hat gate trips (the report is still written for inspection).
pub fn cmd_run(rc: &RunConfig) -> Result<AnalysisOutcome, CliError> {
    let outcome = run_analysis(rc)?;
    write_atomic(&rc.output_path, outcome.report.to_json_pretty().as_bytes())
        .map_err(io_write_err)?;
    if let Some(path) = &rc.draws_out {
        let mut buf = Vec::new();
        outcome.draws.write_csv(&mut buf).map_err(io_write_err)?;
        write_atomic(path, &buf).map_err(io_write_err)?;
    }
    print!("{}", format_outcome(rc, &outcome));
    println!("report           {}", rc.output_path.display());
    if let Some(msg) = &outcome.gate_failure {
        return Err(CliError::Diagnostics(msg.clone()));
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct Table3Row {
    pub delta: f64,
    pub tau: f64,
    pub eta1: f64,
    pub p_alt: f64,
    pub p_alt_se: f64,
    pub bf10: Option<f64>,
    pub bf10_bound: Option<f64>,
    pub bf10_kind: BfKind,
    pub log10_bf10: Option<f64>,
    pub log10_bf10_se: Option<f64>,
    pub ess_indicator: f64,
    pub split_rhat_theta: f64,
    pub published_p_alt: f64,
    pub published_bf10: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table3Output {
    pub seed: u64,
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub rows: Vec<Table3Row>,
}

/// Sampler knobs shared by the batch commands.
#[derive(Debug, Clone, Copy)]
pub struct BatchSampling {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for BatchSampling {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 10_000,
            draws: 20_000,
            seed: 1,
            threads: 0,
        }
    }
}

impl BatchSampling {
    fn run_config(&self, model: ModelKind, delta: f64, tau: TauSpec, eta1: EtaSpec) -> RunConfig {
        RunConfig {
            model,
            data_path: None,
            delta,
            tau,
            eta1,
            alpha: 0.05,
            chains: self.chains,
            warmup: self.warmup,
            draws: self.draws,
            seed: self.seed,
            output_path: PathBuf::from("report.json"),
            y_obs: 0.0,
            threads: self.threads,
            draws_out: None,
        }
    }
}

/// Rerun the meta-analysis at delta in {0.1, 0.2, 0.3} with tau = 1.5 delta
/// and even prior odds, and print published versus computed values.
pub fn cmd_reproduce_table3(
    sampling: &BatchSampling,
    output: Option<&Path>,
) -> Result<Table3Output, CliError> {
    let mut rows = Vec::new();
    for &(delta, pub_p, pub_bf) in &PUBLISHED_TABLE3 {
        let rc = sampling.run_config(
            ModelKind::Meta,
            delta,
            TauSpec::OneAndHalfDelta,
            EtaSpec::Half,
        );
        let out = run_analysis(&rc)?;
        let r = &out.report;
        rows.push(Table3Row {
            delta,
            tau: r.tau,
            eta1: r.eta1,
            p_alt: r.p_alt,
            p_alt_se: r.p_alt_se,
            bf10: r.bf10,
            bf10_bound: r.bf10_bound,
            bf10_kind: r.bf10_kind,
            log10_bf10: r.log10_bf10,
            log10_bf10_se: r.log10_bf10_se,
            ess_indicator: r.ess_indicator,
            split_rhat_theta: out.theta_split_rhat,
            published_p_alt: pub_p,
            published_bf10: pub_bf,
        });
    }
    let table = Table3Output {
        seed: sampling.seed,
        chains: sampling.chains,
        warmup: sampling.warmup,
        draws: sampling.draws,
        rows,
    };
    println!("delta   published p   computed p (se)        published BF   computed BF (se log10)   Rhat(theta)");
    for row in &table.rows {
        let bf_text = match row.bf10 {
            Some(bf) => format!("{bf:>10.3} ({:.4})", row.log10_bf10_se.unwrap_or(f64::NAN)),
            None => format!("bound {:.3}", row.bf10_bound.unwrap_or(f64::NAN)),
        };
        println!(
            "{:<7} {:<13} {:<22} {:<14} {:<24} {:.4}",
            row.delta,
            row.published_p_alt,
            format!("{:.4} ({:.4})", row.p_alt, row.p_alt_se),
            row.published_bf10,
            bf_text,
            row.split_rhat_theta,
        );
    }
    if let Some(path) = output {
        let json = serde_json::to_string_pretty(&table)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        write_atomic(path, json.as_bytes()).map_err(io_write_err)?;
        println!("written          {}", path.display());
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepEtaMode {
    Half,
    Continuity,
    Both,
}

impl FromStr for SweepEtaMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "half" => Ok(SweepEtaMode::Half),
            "continuity" => Ok(SweepEtaMode::Continuity),
            "both" => Ok(SweepEtaMode::Both),
            other => Err(format!(
                "eta1-mode must be half, continuity or both, got {other:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub eta1_mode: &'static str,
    pub eta1: f64,
    pub p_alt: f64,
    pub p_alt_se: f64,
    pub bf10: f64,
    pub bf10_se: f64,
    pub bf10_kind: BfKind,
}

/// Bayes factor sweep over the alternative-prior scale on the two-sample
/// model; one CSV row per (tau, eta1 mode). No plotting: the output is
/// plot-ready data.
pub fn cmd_sweep_tau(
    delta: f64,
    tau_grid: &[f64],
    mode: SweepEtaMode,
    data_path: Option<&Path>,
    sampling: &BatchSampling,
    output: Option<&Path>,
) -> Result<Vec<SweepRow>, CliError> {
    if tau_grid.is_empty() {
        return Err(CliError::Input("tau grid must not be empty".into()));
    }
    let modes: &[(&'static str, EtaSpec)] = match mode {
        SweepEtaMode::Half => &[("half", EtaSpec::Half)],
        SweepEtaMode::Continuity => &[("continuity", EtaSpec::Continuity)],
        SweepEtaMode::Both => &[("continuity", EtaSpec::Continuity), ("half", EtaSpec::Half)],
    };
    let mut rows = Vec::new();
    for &tau in tau_grid {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CliError::Input(format!("tau grid values must be positive, got {tau}")));
        }
        for &(label, eta) in modes {
            let mut rc = sampling.run_config(
                ModelKind::TwoSample,
                delta,
                TauSpec::Value(tau),
                eta,
            );
            rc.data_path = data_path.map(Path::to_path_buf);
            let out = run_analysis(&rc)?;
            let r = &out.report;
            // bounds land in the bf10 column, flagged by kind
            let (bf, se) = match r.bf10 {
                Some(bf) => {
                    let log_se = r.log10_bf10_se.unwrap_or(f64::NAN);
                    (bf, bf * log_se * std::f64::consts::LN_10)
                }
                None => (r.bf10_bound.unwrap_or(f64::NAN), f64::NAN),
            };
            rows.push(SweepRow {
                tau,
                eta1_mode: label,
                eta1: r.eta1,
                p_alt: r.p_alt,
                p_alt_se: r.p_alt_se,
                bf10: bf,
                bf10_se: se,
                bf10_kind: r.bf10_kind,
            });
        }
    }
    let csv_text = sweep_csv(&rows).map_err(|e| CliError::Internal(e.to_string()))?;
    match output {
        Some(path) => {
            write_atomic(path, csv_text.as_bytes()).map_err(io_write_err)?;
            println!("written          {}", path.display());
        }
        None => print!("{csv_text}"),
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tau", "eta1_mode", "eta1", "p_alt", "p_alt_se", "bf10", "bf10_se", "bf10_kind"])?;
    for r in rows {
        let kind = match r.bf10_kind {
            BfKind::Point => "point",
            BfKind::LowerBound => "lower_bound",
            BfKind::UpperBound => "upper_bound",
        };
        w.write_record([
            format!("{}", r.tau),
            r.eta1_mode.to_string(),
            format!("{}", r.eta1),
            format!("{}", r.p_alt),
            format!("{}", r.p_alt_se),
            format!("{}", r.bf10),
            format!("{}", r.bf10_se),
            kind.to_string(),
        ])?;
    }
    let bytes = w.into_inner().expect("vec writer");
    Ok(String::from_utf8(bytes).expect("csv is utf8"))
}

/// Classical pooled t-test on a `group,value` CSV.
pub fn cmd_ttest(data_path: &Path) -> Result<TTestResult, CliError> {
    let data = TwoSampleData::from_csv_path(data_path)?;
    let r = pooled_t_test(&data)?;
    println!("t  = {:.4}", r.t);
    println!("p  = {:.4}", r.p_value);
    println!("df = {}", r.df);
    Ok(r)
}

/// Consistency helper used by tests: recompute the Bayes factor from a
/// report's stored mass and check the Eq-(3) algebra.
pub fn bf_from_report_mass(report: &Report) -> Option<f64> {
    let mass = crate::inference::PosteriorMass {
        p_alt: report.p_alt,
        standard_error: report.p_alt_se,
        n_effective: report.ess_indicator,
        n_draws: report.n_draws,
    };
    bayes_factor(&mass, report.eta1).ok().map(|b| b.bf10)
}
