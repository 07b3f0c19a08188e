//! Result directory layout:
//!
//! - `results.csv`: one row per trial
//! - `traces/<group>/<trial>.csv`: per-iteration optimizer state
//! - `summary.json`: per-group means and standard deviations
//! - `config.resolved.toml`: the config after defaults and overrides
//! - `timings.csv`: wall time per trial, kept apart so results stay
//!   reproducible byte for byte

use std::fs;
use std::path::{Path, PathBuf};

use lfreadout::fit::IterationRecord;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentKind, LoadedConfig};
use crate::error::{CliError, CliResult};
use crate::run::{RunResult, TrialRecord};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const TRACES_DIR: &str = "traces";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub group: usize,
    pub label: String,
    pub x: f64,
    pub trial: u64,
    pub seed: u64,
    pub objective: f64,
    pub exact_loss: f64,
    pub direct_infidelity: Option<f64>,
    pub m_iter: usize,
    pub n_iter: u64,
    pub configurations: usize,
    pub shots_used: u64,
    pub converged: bool,
    pub centers: String,
    pub decay_rates: String,
    /// `re:im` pairs.
    pub coefficients: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub loss: f64,
    pub best_loss: f64,
    pub accepted: bool,
    pub m_iter: usize,
    pub centers: String,
    pub decay_rates: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and sample standard deviation; zero spread for a single value.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub x: f64,
    pub trials: usize,
    pub objective: Stat,
    pub exact_loss: Stat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_infidelity: Option<Stat>,
    /// Direct-estimation infidelity scale `0.15 * 2^n / shots`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub m_iter: Stat,
    pub n_iter: Stat,
    pub configurations: Stat,
    pub shots_used: Stat,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub kind: ExperimentKind,
    /// What `x` measures: `init-distance`, `n` or `none`.
    pub swept: String,
    pub loss: String,
    pub groups: Vec<GroupSummary>,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

fn csv_err<'a>(path: &'a Path, what: &'static str) -> impl Fn(csv::Error) -> CliError + 'a {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Malformed {
            path: path.to_path_buf(),
            what,
            message: format!("{other:?}"),
        },
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], what: &'static str) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path, what))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path, what))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_csv<T: for<'de> Deserialize<'de>>(text: &str, path: &Path, what: &'static str) -> CliResult<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(csv_err(path, what))
}

pub fn parse_results_csv(text: &str) -> CliResult<Vec<ResultRow>> {
    read_csv(text, Path::new(RESULTS_FILE), "results")
}

pub fn parse_trace_csv(text: &str) -> CliResult<Vec<TraceRow>> {
    read_csv(text, Path::new(TRACES_DIR), "trace")
}

pub fn trace_path(dir: &Path, group: usize, trial: u64) -> PathBuf {
    dir.join(TRACES_DIR).join(group.to_string()).join(format!("{trial}.csv"))
}

fn result_row(run: &RunResult, r: &TrialRecord, hash: &str) -> ResultRow {
    let g = &run.groups[r.group];
    ResultRow {
        group: r.group,
        label: g.label.clone(),
        x: g.x,
        trial: r.trial,
        seed: r.seed,
        objective: r.objective,
        exact_loss: r.exact_loss,
        direct_infidelity: r.direct_infidelity,
        m_iter: r.m_iter,
        n_iter: r.n_iter,
        configurations: r.configurations,
        shots_used: r.shots_used,
        converged: r.converged,
        centers: join(&r.centers),
        decay_rates: join(&r.decay_rates),
        coefficients: r
            .coefficients
            .iter()
            .map(|c| format!("{}:{}", c.re, c.im))
            .collect::<Vec<_>>()
            .join(" "),
        config_hash: hash.to_string(),
    }
}

fn trace_rows(records: &[IterationRecord]) -> Vec<TraceRow> {
    records
        .iter()
        .map(|r| TraceRow {
            iteration: r.iteration,
            loss: r.loss,
            best_loss: r.best_loss,
            accepted: r.accepted,
            m_iter: r.m_iter,
            centers: join(&r.centers),
            decay_rates: join(&r.decay_rates),
        })
        .collect()
}

pub fn summarize(cfg: &LoadedConfig, run: &RunResult, hash: &str) -> Summary {
    let c = &cfg.config;
    let swept = match (&c.sweep.inits, &c.sweep.n) {
        (Some(_), _) => "init-distance",
        (_, Some(_)) => "n",
        _ => "none",
    };
    let loss = match c.kind {
        ExperimentKind::StateReadout | ExperimentKind::ScalingBench => "infidelity",
        _ => "relative-residual",
    };
    let groups = run
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let rs: Vec<&TrialRecord> = run.records.iter().filter(|r| r.group == i).collect();
            let stat = |f: &dyn Fn(&TrialRecord) -> f64| Stat::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let direct: Vec<f64> = rs.iter().filter_map(|r| r.direct_infidelity).collect();
            GroupSummary {
                label: g.label.clone(),
                x: g.x,
                trials: rs.len(),
                objective: stat(&|r| r.objective),
                exact_loss: stat(&|r| r.exact_loss),
                direct_infidelity: (!direct.is_empty()).then(|| Stat::of(&direct)),
                reference: (c.kind == ExperimentKind::ScalingBench)
                    .then(|| 0.15 * 2f64.powi(g.n as i32) / c.budget.shots as f64),
                m_iter: stat(&|r| r.m_iter as f64),
                n_iter: stat(&|r| r.n_iter as f64),
                configurations: stat(&|r| r.configurations as f64),
                shots_used: stat(&|r| r.shots_used as f64),
                converged_fraction: rs.iter().filter(|r| r.converged).count() as f64 / rs.len() as f64,
            }
        })
        .collect();
    Summary {
        config_hash: hash.to_string(),
        kind: c.kind,
        swept: swept.into(),
        loss: loss.into(),
        groups,
    }
}

/// Writes the whole result directory.
pub fn write_run(dir: &Path, cfg: &LoadedConfig, run: &RunResult) -> CliResult<()> {
    let hash = cfg.hash();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<ResultRow> = run.records.iter().map(|r| result_row(run, r, &hash)).collect();
    write_csv(&dir.join(RESULTS_FILE), &rows, "results")?;
    for r in run.records.iter().filter(|r| !r.trace.is_empty()) {
        let path = trace_path(dir, r.group, r.trial);
        let parent = path.parent().expect("trace files live in a directory");
        fs::create_dir_all(parent).map_err(io_err(parent))?;
        write_csv(&path, &trace_rows(&r.trace), "trace")?;
    }
    let summary = summarize(cfg, run, &hash);
    let summary_path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(io_err(&summary_path))?;
    let resolved = dir.join(RESOLVED_CONFIG_FILE);
    fs::write(&resolved, cfg.resolved_toml()).map_err(io_err(&resolved))?;
    let timings = dir.join(TIMINGS_FILE);
    let mut text = String::from("group,trial,seconds\n");
    for r in &run.records {
        text += &format!("{},{},{:.6}\n", r.group, r.trial, r.seconds);
    }
    fs::write(&timings, text).map_err(io_err(&timings))
}

pub fn read_summary(dir: &Path) -> CliResult<Summary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Malformed {
        path,
        what: "summary",
        message: e.to_string(),
    })
}

pub fn read_results(dir: &Path) -> CliResult<Vec<ResultRow>> {
    let path = dir.join(RESULTS_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    read_csv(&text, &path, "results")
}

pub fn read_trace(path: &Path) -> CliResult<Vec<TraceRow>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    read_csv(&text, path, "trace")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_of_single_value_has_no_spread() {
        assert_eq!(Stat::of(&[2.5]), Stat { mean: 2.5, std: 0.0 });
        let s = Stat::of(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trace_rows_round_trip() {
        let rows = vec![TraceRow {
            iteration: 0,
            loss: 0.25,
            best_loss: 0.125,
            accepted: true,
            m_iter: 3,
            centers: "1 2 3".into(),
            decay_rates: "0.5 0.5 0.5".into(),
        }];
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&rows[0]).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(parse_trace_csv(&text).unwrap(), rows);
    }

    #[test]
    fn malformed_rows_are_reported() {
        let err = parse_trace_csv("iteration,loss\nx,1\n").unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
