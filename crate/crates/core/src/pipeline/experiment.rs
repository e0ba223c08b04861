//! Repeated runs per domain and setting, with aggregate metrics as CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domains::DomainSpec;
use crate::llm::ModelBackend;
use crate::model::{DomainId, ErrorCategory, Limits};
use crate::sandbox::{Channel, SandboxSession, SessionError};

use super::autotos::{run_autotos, RunConfig};
use super::cleanlog::clean_log;
use super::evaluate::{evaluate_checkpoints, OptimumCache};
use super::record::{Checkpoint, Phase, RunRecord, RunStatus};

fn default_settings() -> Vec<bool> {
    vec![true, false]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domains: Vec<DomainId>,
    #[serde(default)]
    pub limits: Limits,
    /// Partial soundness settings to run; both by default.
    #[serde(default = "default_settings")]
    pub partial_soundness: Vec<bool>,
    /// Measure accuracy at each checkpoint on the evaluation instances.
    #[serde(default = "yes")]
    pub evaluate: bool,
    /// Use only the first n evaluation instances.
    #[serde(default)]
    pub eval_limit: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// One finished run and where it sits in the grid.
#[derive(Debug, Clone)]
pub struct RunEntry {
    pub repetition: u32,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub domain: DomainId,
    pub partial_soundness: bool,
    pub checkpoint: String,
    /// Share of runs that reached the checkpoint, in percent.
    pub reached_pct: f64,
    /// Mean accuracy over the runs that reached it.
    pub mean_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRow {
    pub domain: DomainId,
    pub partial_soundness: bool,
    pub phase: String,
    pub mean_calls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub domain: DomainId,
    pub partial_soundness: bool,
    pub category: u8,
    pub label: String,
    pub count: u32,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallsRow {
    pub domain: DomainId,
    pub with_partial_soundness: Option<f64>,
    pub without_partial_soundness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub domain: DomainId,
    pub partial_soundness: bool,
    pub repetition: u32,
    pub status: String,
    pub checkpoint_reached: Option<String>,
    pub total_calls: u32,
    pub successor_calls: u32,
    pub goal_calls: u32,
    pub accuracy_initial: Option<f64>,
    pub accuracy_soundness: Option<f64>,
    pub accuracy_completeness: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub runs: Vec<RunRow>,
    pub checkpoints: Vec<CheckpointRow>,
    pub feedback_calls: Vec<FeedbackRow>,
    pub error_categories: Vec<CategoryRow>,
    pub calls_table: Vec<CallsRow>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn status_name(s: &RunStatus) -> String {
    match s {
        RunStatus::Completed => "completed".into(),
        RunStatus::BudgetExhausted => "budget_exhausted".into(),
        RunStatus::Error(e) => format!("error: {e}"),
    }
}

/// Aggregates finished runs. Runs that ended in a backend or sandbox error
/// appear in `runs` only.
pub fn summarize(entries: &[RunEntry]) -> Summary {
    let mut groups: BTreeMap<(DomainId, bool), Vec<&RunEntry>> = BTreeMap::new();
    for e in entries.iter().filter(|e| !matches!(e.record.status, RunStatus::Error(_))) {
        groups
            .entry((e.record.domain, e.record.partial_soundness))
            .or_default()
            .push(e);
    }
    let mut s = Summary::default();
    for e in entries {
        let r = &e.record;
        s.runs.push(RunRow {
            domain: r.domain,
            partial_soundness: r.partial_soundness,
            repetition: e.repetition,
            status: status_name(&r.status),
            checkpoint_reached: r.checkpoint_reached.map(|c| c.as_str().to_string()),
            total_calls: r.total_calls(),
            successor_calls: r.calls.successor,
            goal_calls: r.calls.goal,
            accuracy_initial: r.checkpoint_accuracies.initial,
            accuracy_soundness: r.checkpoint_accuracies.post_soundness,
            accuracy_completeness: r.checkpoint_accuracies.post_completeness,
        });
    }
    for ((domain, partial), runs) in &groups {
        let n = runs.len() as f64;
        for c in Checkpoint::ALL {
            let reached: Vec<_> = runs.iter().filter(|e| e.record.snapshot(c).is_some()).collect();
            s.checkpoints.push(CheckpointRow {
                domain: *domain,
                partial_soundness: *partial,
                checkpoint: c.as_str().into(),
                reached_pct: 100.0 * reached.len() as f64 / n,
                mean_accuracy: mean(reached.iter().filter_map(|e| e.record.checkpoint_accuracies.get(c))),
            });
        }
        for phase in [Phase::Goal, Phase::Soundness, Phase::Completeness] {
            s.feedback_calls.push(FeedbackRow {
                domain: *domain,
                partial_soundness: *partial,
                phase: phase.as_str().into(),
                mean_calls: mean(runs.iter().map(|e| f64::from(e.record.phase_calls(phase)))).unwrap_or(0.0),
            });
        }
        let mut counts: BTreeMap<u8, u32> = BTreeMap::new();
        for e in runs {
            for (cat, k) in &e.record.error_categories {
                *counts.entry(*cat).or_default() += k;
            }
        }
        let total: u32 = counts.values().sum();
        for c in ErrorCategory::ALL {
            let count = counts.get(&c.code()).copied().unwrap_or(0);
            s.error_categories.push(CategoryRow {
                domain: *domain,
                partial_soundness: *partial,
                category: c.code(),
                label: c.label().into(),
                count,
                share: if total == 0 { 0.0 } else { f64::from(count) / f64::from(total) },
            });
        }
    }
    let domains: Vec<DomainId> = groups.keys().map(|(d, _)| *d).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for d in domains {
        let avg = |partial: bool| {
            groups
                .get(&(d, partial))
                .and_then(|runs| mean(runs.iter().map(|e| f64::from(e.record.total_calls()))))
        };
        s.calls_table.push(CallsRow {
            domain: d,
            with_partial_soundness: avg(true),
            without_partial_soundness: avg(false),
        });
    }
    s
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    let csv_err = |source| ExperimentError::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ExperimentError::Io { path: path.clone(), source })?;
    Ok(())
}

impl Summary {
    /// Writes `runs.csv`, `checkpoints.csv`, `feedback_calls.csv`,
    /// `error_categories.csv` and `calls_table.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io { path: dir.to_path_buf(), source })?;
        write_csv(dir, "runs.csv", &self.runs)?;
        write_csv(dir, "checkpoints.csv", &self.checkpoints)?;
        write_csv(dir, "feedback_calls.csv", &self.feedback_calls)?;
        write_csv(dir, "error_categories.csv", &self.error_categories)?;
        write_csv(dir, "calls_table.csv", &self.calls_table)?;
        Ok(())
    }
}

/// Writes a run's JSON record and clean log under `dir/runs`.
pub fn write_run(dir: &Path, stem: &str, record: &RunRecord) -> Result<(), ExperimentError> {
    let runs = dir.join("runs");
    let io = |path: PathBuf| move |source| ExperimentError::Io { path, source };
    fs::create_dir_all(&runs).map_err(io(runs.clone()))?;
    let json = runs.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(record).expect("records serialize");
    fs::write(&json, text).map_err(io(json.clone()))?;
    let log = runs.join(format!("{stem}.log.txt"));
    fs::write(&log, clean_log(record)).map_err(io(log.clone()))?;
    Ok(())
}

/// Makes a model backend for one run: domain, partial soundness setting and
/// repetition index.
pub type BackendFactory<'a> = dyn FnMut(DomainId, bool, u32) -> Result<Box<dyn ModelBackend>, String> + 'a;
pub type SandboxFactory<'a> = dyn FnMut(DomainId) -> Result<Box<dyn SandboxSession>, SessionError> + 'a;

/// Runs every (domain, setting, repetition) cell, evaluates checkpoints when
/// asked, and writes records and CSVs into `out`. Failed cells become error
/// rows; only output errors abort.
pub fn run_experiment(
    config: &ExperimentConfig,
    backends: &mut BackendFactory<'_>,
    sandboxes: &mut SandboxFactory<'_>,
    backend_name: &str,
    out: &Path,
) -> Result<Summary, ExperimentError> {
    let mut entries = Vec::new();
    let mut optima = OptimumCache::default();
    for &domain in &config.domains {
        let spec = DomainSpec::get(domain);
        let instances = match config.eval_limit {
            Some(n) => &spec.eval_instances[..n.min(spec.eval_instances.len())],
            None => &spec.eval_instances[..],
        };
        for &partial in &config.partial_soundness {
            for rep in 0..config.limits.repetitions {
                let cfg = RunConfig {
                    domain,
                    limits: config.limits,
                    partial_soundness: partial,
                    backend: backend_name.to_string(),
                };
                let record = run_cell(&cfg, rep, config.evaluate, instances, backends, sandboxes, &mut optima);
                tracing::info!(%domain, partial, rep, calls = record.total_calls(), status = ?record.status, "run finished");
                let stem = format!("{domain}-{}-{rep}", if partial { "partial" } else { "plain" });
                write_run(out, &stem, &record)?;
                entries.push(RunEntry { repetition: rep, record });
            }
        }
    }
    let summary = summarize(&entries);
    summary.write(out)?;
    Ok(summary)
}

fn run_cell(
    cfg: &RunConfig,
    rep: u32,
    evaluate: bool,
    instances: &[crate::domains::Instance],
    backends: &mut BackendFactory<'_>,
    sandboxes: &mut SandboxFactory<'_>,
    optima: &mut OptimumCache,
) -> RunRecord {
    let failed = |msg: String| RunRecord {
        domain: cfg.domain,
        backend: cfg.backend.clone(),
        partial_soundness: cfg.partial_soundness,
        status: RunStatus::Error(msg),
        calls: Default::default(),
        calls_by_phase: BTreeMap::new(),
        error_categories: BTreeMap::new(),
        checkpoint_reached: None,
        snapshots: Vec::new(),
        checkpoint_accuracies: Default::default(),
        successor_source: None,
        goal_source: None,
        events: Vec::new(),
        transcript: Vec::new(),
    };
    let mut backend = match backends(cfg.domain, cfg.partial_soundness, rep) {
        Ok(b) => b,
        Err(e) => return failed(format!("backend: {e}")),
    };
    let mut channel = match sandboxes(cfg.domain) {
        Ok(s) => Channel::new(s),
        Err(e) => return failed(format!("sandbox: {e}")),
    };
    let mut record = run_autotos(cfg, backend.as_mut(), &mut channel);
    if evaluate {
        if let Err(e) = evaluate_checkpoints(&mut record, instances, &mut channel, &cfg.limits, optima) {
            tracing::error!(error = %e, "checkpoint evaluation aborted");
            if record.status == RunStatus::Completed {
                record.status = RunStatus::Error(format!("evaluation: {e}"));
            }
        }
    }
    channel.shutdown();
    record
}
