//! Plot-ready tables from a result directory. Every file is whitespace
//! separated `x y yerr` with `#` header lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentKind;
use crate::error::{CliError, CliResult};
use crate::output::{read_results, read_summary, read_trace, trace_path, Stat, Summary};

pub const PLOTDATA_DIR: &str = "plotdata";

fn table(title: &str, columns: &str, rows: impl IntoIterator<Item = (f64, f64, f64)>) -> String {
    let mut out = format!("# {title}\n# {columns}\n");
    for (x, y, e) in rows {
        writeln!(out, "{x} {y:.6e} {e:.6e}").expect("writing to a string");
    }
    out
}

fn stat_rows<'a>(summary: &'a Summary, pick: impl Fn(&'a crate::output::GroupSummary) -> Option<Stat> + 'a) -> Vec<(f64, f64, f64)> {
    summary
        .groups
        .iter()
        .filter_map(|g| pick(g).map(|s| (g.x, s.mean, s.std)))
        .collect()
}

/// Mean best loss per iteration over trials; finished chains hold their last
/// value.
fn convergence(dir: &Path, group: usize, trials: &[u64]) -> CliResult<Vec<(f64, f64, f64)>> {
    let curves = trials
        .iter()
        .map(|&t| read_trace(&trace_path(dir, group, t)))
        .collect::<CliResult<Vec<_>>>()?;
    let curves: Vec<Vec<f64>> = curves
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.into_iter().map(|r| r.best_loss).collect())
        .collect();
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    Ok((0..len)
        .map(|i| {
            let at: Vec<f64> = curves.iter().map(|c| c[i.min(c.len() - 1)]).collect();
            let s = Stat::of(&at);
            (i as f64, s.mean, s.std)
        })
        .collect())
}

/// Writes `<dir>/plotdata/*.dat` and returns the written paths.
pub fn emit_plotdata(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let summary = read_summary(dir)?;
    let results = read_results(dir)?;
    if results.iter().any(|r| r.config_hash != summary.config_hash) {
        return Err(CliError::Malformed {
            path: dir.to_path_buf(),
            what: "result directory",
            message: "results.csv and summary.json come from different configs".into(),
        });
    }
    let mut files: Vec<(String, String)> = Vec::new();
    if summary.kind == ExperimentKind::ScalingBench {
        files.push((
            "fig3b.dat".into(),
            table(
                "LC-LF readout infidelity at fixed parameters",
                "n mean_infidelity std",
                stat_rows(&summary, |g| Some(g.exact_loss)),
            ),
        ));
        files.push((
            "fig3b_direct.dat".into(),
            table(
                "direct amplitude estimation infidelity",
                "n mean_infidelity std",
                stat_rows(&summary, |g| g.direct_infidelity),
            ),
        ));
        files.push((
            "fig3b_reference.dat".into(),
            table(
                "reference 0.15 * 2^n / shots",
                "n infidelity zero",
                summary.groups.iter().filter_map(|g| g.reference.map(|r| (g.x, r, 0.0))),
            ),
        ));
    } else {
        let mut trials: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for r in &results {
            trials.entry(r.group).or_default().push(r.trial);
        }
        for (group, ts) in &trials {
            let label = summary
                .groups
                .get(*group)
                .map(|g| g.label.clone())
                .unwrap_or_else(|| group.to_string());
            files.push((
                format!("convergence_{label}.dat"),
                table(
                    &format!("best {} by iteration, init {label}", summary.loss),
                    "iteration mean_best_loss std",
                    convergence(dir, *group, ts)?,
                ),
            ));
        }
        files.push((
            "m_iter.dat".into(),
            table(
                &format!("distinct overlap evaluations, x = {}", summary.swept),
                "x mean_m_iter std",
                stat_rows(&summary, |g| Some(g.m_iter)),
            ),
        ));
        files.push((
            "n_iter.dat".into(),
            table(
                &format!("optimizer iterations, x = {}", summary.swept),
                "x mean_n_iter std",
                stat_rows(&summary, |g| Some(g.n_iter)),
            ),
        ));
    }
    let out = dir.join(PLOTDATA_DIR);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    files
        .into_iter()
        .map(|(name, text)| {
            let path = out.join(name);
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
