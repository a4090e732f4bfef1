//! Experiment specs: sweeps of policies, seeds and one config field, run in
//! parallel, written as per-run CSVs, a summary CSV and a replay manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hybrid_offload_core::scenario::{synth_timeline, Scenario, TraceTimeline};
use hybrid_offload_core::{run_simulation, MetricsSeries, MilpOptions, OptimizeOptions, P1Options, Policy, SimulationOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ConfigFile;
use crate::stats::mean_ci95;
use crate::{read_input, trace, OffloadError};

pub const MANIFEST_FORMAT: &str = "hybrid-offload-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigRef {
    Path(PathBuf),
    Inline(Box<ConfigFile>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRef {
    pub membership: PathBuf,
    /// Schema A or B link file; without it V2V links are absent and LTE
    /// rates are drawn.
    #[serde(default)]
    pub links: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Config field, dot separated for nested fields.
    pub variable: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub n_grid: usize,
    pub node_limit: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { n_grid: P1Options::default().grid_size, node_limit: MilpOptions::default().node_limit }
    }
}

impl SolverSpec {
    pub fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            p1: P1Options { grid_size: self.n_grid, ..Default::default() },
            milp: MilpOptions { node_limit: self.node_limit, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub config: ConfigRef,
    /// Without a trace the synthetic generator of the config is used.
    #[serde(default)]
    pub trace: Option<TraceRef>,
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Each seed drives both the scenario draws and the policies.
    pub seeds: Vec<u64>,
    pub duration_s: f64,
    #[serde(default)]
    pub solver: SolverSpec,
    pub output_dir: PathBuf,
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentSpec {
    /// Inlines the config and makes every path absolute against `base`.
    pub fn resolve(&self, base: &Path) -> Result<ExperimentSpec, OffloadError> {
        let config = match &self.config {
            ConfigRef::Inline(c) => c.clone(),
            ConfigRef::Path(p) => {
                let path = absolute(base, p);
                let value: Value = serde_json::from_str(&read_input(&path)?)
                    .map_err(|e| OffloadError::Validation(format!("{}: {e}", path.display())))?;
                Box::new(ConfigFile::from_value(value)?)
            }
        };
        Ok(ExperimentSpec {
            config: ConfigRef::Inline(config),
            trace: self.trace.as_ref().map(|t| TraceRef {
                membership: absolute(base, &t.membership),
                links: t.links.as_ref().map(|l| absolute(base, l)),
            }),
            output_dir: absolute(base, &self.output_dir),
            ..self.clone()
        })
    }

    fn base_config(&self) -> Result<&ConfigFile, OffloadError> {
        match &self.config {
            ConfigRef::Inline(c) => Ok(c),
            ConfigRef::Path(_) => Err(OffloadError::Validation("spec must be resolved first".into())),
        }
    }

    /// Every run of this experiment, in output order.
    pub fn plan(&self) -> Result<Vec<RunPlan>, OffloadError> {
        let invalid = |m: &str| Err(OffloadError::Validation(m.into()));
        if self.policies.is_empty() {
            return invalid("policies must not be empty");
        }
        if self.seeds.is_empty() {
            return invalid("seeds must not be empty");
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return invalid("seeds must be distinct");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return invalid("duration_s must be positive");
        }
        if self.solver.n_grid < 2 {
            return invalid("solver.n_grid must be at least 2");
        }
        let base = self.base_config()?;
        let points: Vec<(usize, Option<Value>, ConfigFile)> = match &self.sweep {
            None => vec![(0, None, base.clone())],
            Some(s) if s.values.is_empty() => return invalid("sweep values must not be empty"),
            Some(s) => s
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| Ok((i, Some(v.clone()), base.with_field(&s.variable, v)?)))
                .collect::<Result<_, OffloadError>>()?,
        };
        let mut plans = Vec::new();
        for (i, value, cfg) in points {
            cfg.to_scenario()?;
            for &policy in &self.policies {
                for &seed in &self.seeds {
                    plans.push(RunPlan {
                        id: format!("s{i:02}_{}_seed{seed}", policy.label()),
                        sweep_index: i,
                        sweep_value: value.clone(),
                        policy,
                        seed,
                        config: ConfigFile { seed, ..cfg.clone() },
                    });
                }
            }
        }
        Ok(plans)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub id: String,
    pub sweep_index: usize,
    pub sweep_value: Option<Value>,
    pub policy: Policy,
    pub seed: u64,
    /// Fully resolved config, seed included.
    pub config: ConfigFile,
}

/// Per-run means over periods; delays are per delivered frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub in_time_rate: f64,
    pub processed_rate: f64,
    pub tx_delay_s: f64,
    pub compute_delay_s: f64,
    pub bytes_lte: f64,
    pub bytes_v2v: f64,
    pub periods: usize,
    pub flagged_periods: usize,
}

impl RunMetrics {
    pub fn of(series: &MetricsSeries) -> Self {
        let (tx, cp) = series.mean_delays_s();
        let (lte, v2v) = series.mean_bytes();
        RunMetrics {
            in_time_rate: series.mean_in_time_rate(),
            processed_rate: series.mean_processed_rate(),
            tx_delay_s: tx,
            compute_delay_s: cp,
            bytes_lte: lte,
            bytes_v2v: v2v,
            periods: series.periods.len(),
            flagged_periods: series.flagged_periods(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub plan: RunPlan,
    /// Path of the per-run CSV, relative to the output directory.
    pub csv: String,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub spec: ExperimentSpec,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: Option<Value>,
    pub policy: Policy,
    pub runs: usize,
    pub failed: usize,
    /// `(mean, 95% CI half width)`; the half width is NaN below two runs.
    pub in_time_rate: (f64, f64),
    pub processed_rate: (f64, f64),
    pub tx_delay_s: (f64, f64),
    pub compute_delay_s: (f64, f64),
    pub bytes_lte: (f64, f64),
    pub bytes_v2v: (f64, f64),
    pub flagged_periods: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub manifest: Manifest,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutcome {
    pub fn failed_runs(&self) -> usize {
        self.manifest.runs.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn row(&self, sweep_index: usize, policy: Policy) -> Option<&SummaryRow> {
        let value = self.manifest.spec.sweep.as_ref().map(|s| s.values[sweep_index].clone());
        self.summary.iter().find(|r| r.policy == policy && r.sweep_value == value)
    }
}

pub const SERIES_HEADER: [&str; 9] = [
    "period_start_s",
    "tt_id",
    "generated",
    "in_time",
    "late",
    "mean_tx_delay_s",
    "mean_compute_delay_s",
    "bytes_lte",
    "bytes_v2v",
];

/// One row per (period, task type).
pub fn write_series_csv<W: Write>(series: &MetricsSeries, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for p in &series.periods {
        for t in &p.task_types {
            w.write_record([
                p.period_start_s.to_string(),
                t.tt_id.clone(),
                t.generated.to_string(),
                t.in_time.to_string(),
                t.late.to_string(),
                t.mean_tx_delay_s().to_string(),
                t.mean_compute_delay_s().to_string(),
                t.bytes_lte.to_string(),
                t.bytes_v2v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn load_trace(t: &TraceRef) -> Result<TraceTimeline, OffloadError> {
    let membership = trace::read_membership(read_input(&t.membership)?.as_bytes())?;
    let links = match &t.links {
        Some(p) => trace::read_links(read_input(p)?.as_bytes())?,
        None => Vec::new(),
    };
    trace::build_timeline(&membership, &links)
}

/// Simulates one planned run.
pub fn simulate(
    plan: &RunPlan,
    trace: Option<&TraceTimeline>,
    duration_s: f64,
    solver: &SolverSpec,
) -> Result<MetricsSeries, String> {
    let config = plan.config.to_scenario().map_err(|e| e.to_string())?;
    let timeline = match trace {
        Some(t) => t.clone(),
        None => synth_timeline(&config, duration_s).map_err(|e| e.to_string())?,
    };
    let mut scenario = Scenario::new(timeline, config).map_err(|e| e.to_string())?;
    let options = SimulationOptions { optimize: solver.options(), duration_s, seed: plan.seed };
    run_simulation(&mut scenario, plan.policy, &options).map_err(|e| e.to_string())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OffloadError + '_ {
    move |source| OffloadError::Io { path: path.to_path_buf(), source }
}

/// Runs every planned simulation, writing outputs under `output_dir`
/// (the experiment's own directory unless overridden). Failed runs are recorded
/// in the manifest; only invalid specs and output errors abort.
pub fn execute(spec: &ExperimentSpec, base: &Path, output_dir: Option<&Path>) -> Result<ExperimentOutcome, OffloadError> {
    let spec = spec.resolve(base)?;
    let plans = spec.plan()?;
    let trace = spec.trace.as_ref().map(load_trace).transpose()?;
    let out_dir = output_dir.map_or_else(|| spec.output_dir.clone(), Path::to_path_buf);
    let runs_dir = out_dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(io_err(&runs_dir))?;

    let records: Vec<RunRecord> = plans
        .into_par_iter()
        .map(|plan| {
            let csv = format!("runs/{}.csv", plan.id);
            match simulate(&plan, trace.as_ref(), spec.duration_s, &spec.solver) {
                Ok(series) => {
                    let path = out_dir.join(&csv);
                    let file = fs::File::create(&path).map_err(io_err(&path))?;
                    write_series_csv(&series, std::io::BufWriter::new(file))
                        .map_err(|e| OffloadError::Run(format!("{}: {e}", path.display())))?;
                    Ok(RunRecord { plan, csv, metrics: Some(RunMetrics::of(&series)), error: None })
                }
                Err(e) => {
                    log::warn!("run {} failed: {e}", plan.id);
                    Ok(RunRecord { plan, csv, metrics: None, error: Some(e) })
                }
            }
        })
        .collect::<Result<_, OffloadError>>()?;

    let manifest = Manifest { format: MANIFEST_FORMAT.into(), spec, runs: records };
    let summary = summarize(&manifest);
    let summary_path = out_dir.join(SUMMARY_FILE);
    let file = fs::File::create(&summary_path).map_err(io_err(&summary_path))?;
    write_summary_csv(&manifest, &summary, file).map_err(|e| OffloadError::Run(format!("{}: {e}", summary_path.display())))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))?;
    Ok(ExperimentOutcome { manifest, summary })
}

/// Aggregates the manifest's per-run metrics by (sweep value, policy).
pub fn summarize(manifest: &Manifest) -> Vec<SummaryRow> {
    let spec = &manifest.spec;
    let points = spec.sweep.as_ref().map_or(1, |s| s.values.len());
    let mut rows = Vec::new();
    for i in 0..points {
        for &policy in &spec.policies {
            let group: Vec<&RunRecord> =
                manifest.runs.iter().filter(|r| r.plan.sweep_index == i && r.plan.policy == policy).collect();
            let ok: Vec<RunMetrics> = group.iter().filter_map(|r| r.metrics).collect();
            let stat = |f: fn(&RunMetrics) -> f64| mean_ci95(&ok.iter().map(f).collect::<Vec<_>>());
            rows.push(SummaryRow {
                sweep_value: spec.sweep.as_ref().map(|s| s.values[i].clone()),
                policy,
                runs: ok.len(),
                failed: group.len() - ok.len(),
                in_time_rate: stat(|m| m.in_time_rate),
                processed_rate: stat(|m| m.processed_rate),
                tx_delay_s: stat(|m| m.tx_delay_s),
                compute_delay_s: stat(|m| m.compute_delay_s),
                bytes_lte: stat(|m| m.bytes_lte),
                bytes_v2v: stat(|m| m.bytes_v2v),
                flagged_periods: ok.iter().map(|m| m.flagged_periods).sum(),
            });
        }
    }
    rows
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

pub fn write_summary_csv<W: Write>(manifest: &Manifest, rows: &[SummaryRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep_variable",
        "sweep_value",
        "policy",
        "runs",
        "failed_runs",
        "rate_mean",
        "rate_ci95",
        "processed_rate_mean",
        "processed_rate_ci95",
        "tx_delay_mean_s",
        "tx_delay_ci95_s",
        "compute_delay_mean_s",
        "compute_delay_ci95_s",
        "bytes_lte_mean",
        "bytes_lte_ci95",
        "bytes_v2v_mean",
        "bytes_v2v_ci95",
        "flagged_periods",
    ])?;
    let variable = manifest.spec.sweep.as_ref().map_or("", |s| s.variable.as_str());
    for r in rows {
        let mut rec = vec![
            variable.to_string(),
            r.sweep_value.as_ref().map_or(String::new(), Value::to_string),
            r.policy.label().to_string(),
            r.runs.to_string(),
            r.failed.to_string(),
        ];
        for (m, h) in [r.in_time_rate, r.processed_rate, r.tx_delay_s, r.compute_delay_s, r.bytes_lte, r.bytes_v2v] {
            rec.push(num(m));
            rec.push(num(h));
        }
        rec.push(r.flagged_periods.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an experiment file, or the experiment stored in a manifest for replay.
/// Returns it with the directory its relative paths refer to.
pub fn load_spec(path: &Path) -> Result<(ExperimentSpec, PathBuf), OffloadError> {
    let invalid = |e: serde_json::Error| OffloadError::Validation(format!("{}: {e}", path.display()));
    let value: Value = serde_json::from_str(&read_input(path)?).map_err(invalid)?;
    let spec = if value.get("format").and_then(Value::as_str) == Some(MANIFEST_FORMAT) {
        serde_json::from_value::<Manifest>(value).map_err(invalid)?.spec
    } else {
        serde_json::from_value(value).map_err(invalid)?
    };
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((spec, base))
}
