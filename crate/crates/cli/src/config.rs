//! Experiment configuration (TOML).
//!
//! ```toml
//! kind = "state-readout"
//! seed = 7
//! trials = 10
//!
//! [target]
//! source = "psi-ideal"
//! n = 5
//!
//! [model]
//! decay_rates = [0.36, 1.672, 0.49]
//! centers = [6, 11, 17]
//!
//! [budget]
//! mode = "exact"
//!
//! [fit]
//! update_widths = false
//!
//! [sweep]
//! inits = [[8, 14, 16], [6, 11, 17]]
//! reference = [8, 14, 16]
//! ```

use std::path::{Path, PathBuf};

use lfreadout::basis::LfParam;
use lfreadout::estimator::{MeasurementBudget, MeasurementMode, ProbabilityEngine, ShotSplit};
use lfreadout::fit::{AnnealingSchedule, FitSettings};
use lfreadout::qpe::SpectralProblem;
use lfreadout::StateVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    StateReadout,
    AmplitudeReadout,
    QpeSpectrum,
    ScalingBench,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    PsiIdeal {
        n: u32,
    },
    /// Probability profile `sum_l w_l L^2_l` with equal widths.
    SquaredLf {
        n: u32,
        centers: Vec<i64>,
        weights: Vec<f64>,
        decay_rate: f64,
    },
    /// Path relative to the config file.
    AmplitudeFile {
        path: PathBuf,
    },
    SpectralFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// LF register width; defaults to the target's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<i64>>,
    /// Centers as fractions of the grid size, rounded to the nearest point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_fractions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSpec {
    pub mode: MeasurementMode,
    pub shots: u64,
    pub shot_split: ShotSplit,
    pub aa_bits: u32,
    pub aa_repetitions: u32,
    pub engine: ProbabilityEngine,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        let b = MeasurementBudget::default();
        Self {
            mode: b.mode,
            shots: b.shots,
            shot_split: b.shot_split,
            aa_bits: b.aa_bits,
            aa_repetitions: b.aa_repetitions,
            engine: b.engine,
        }
    }
}

impl BudgetSpec {
    pub fn with_seed(&self, seed: u64) -> MeasurementBudget {
        MeasurementBudget {
            mode: self.mode,
            shots: self.shots,
            shot_split: self.shot_split,
            aa_bits: self.aa_bits,
            aa_repetitions: self.aa_repetitions,
            seed,
            engine: self.engine,
        }
    }
}

/// Annealing and stopping parameters. Unset schedule entries take the
/// register-width defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    pub max_iterations: u64,
    pub threshold: f64,
    pub update_widths: bool,
    pub fd_step: f64,
}

impl Default for FitSpec {
    fn default() -> Self {
        let s = FitSettings::default();
        Self {
            beta0: None,
            alpha0: None,
            alpha1: None,
            max_iterations: s.max_iterations,
            threshold: s.threshold,
            update_widths: s.update_widths,
            fd_step: s.fd_step,
        }
    }
}

impl FitSpec {
    pub fn settings(&self, n: u32, seed: u64) -> FitSettings {
        let base = AnnealingSchedule::for_width(n);
        FitSettings {
            schedule: AnnealingSchedule {
                beta0: self.beta0.unwrap_or(base.beta0),
                alpha0: self.alpha0.unwrap_or(base.alpha0),
                alpha1: self.alpha1.unwrap_or(base.alpha1),
            },
            max_iterations: self.max_iterations,
            threshold: self.threshold,
            update_widths: self.update_widths,
            fd_step: self.fd_step,
            seed,
        }
    }

    /// Completes the schedule so the resolved config is explicit.
    fn resolve(&mut self, n: u32) {
        let base = AnnealingSchedule::for_width(n);
        self.beta0.get_or_insert(base.beta0);
        self.alpha0.get_or_insert(base.alpha0);
        self.alpha1.get_or_insert(base.alpha1);
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Initial center vectors, one group each.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inits: Option<Vec<Vec<i64>>>,
    /// Register widths, one group each.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u32>>,
    /// Centers that Hamming distances are measured from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub target: TargetSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub budget: BudgetSpec,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

fn default_trials() -> u64 {
    1
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub mode: Option<MeasurementMode>,
    pub shots: Option<u64>,
    pub out: Option<PathBuf>,
}

/// One sweep point: a register width and initial centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub label: String,
    /// Hamming distance for init sweeps, register width for width sweeps.
    pub x: f64,
    pub n: u32,
    pub centers: Vec<i64>,
}

/// A parsed config with its target inputs loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    /// Raw contents of a target file, if any.
    pub target_text: Option<String>,
}

const MAX_TRIALS: u64 = 100_000;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    toml::from_str(text).map_err(|e| invalid(e.to_string()))
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(m) = o.mode {
            self.budget.mode = m;
        }
        if let Some(s) = o.shots {
            self.budget.shots = s;
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
    }

    fn builtin_width(&self) -> Option<u32> {
        match &self.target {
            TargetSpec::PsiIdeal { n } | TargetSpec::SquaredLf { n, .. } => Some(*n),
            _ => None,
        }
    }

    /// Width of the target register, unless a width sweep overrides it.
    fn target_width(&self) -> Option<u32> {
        self.builtin_width().filter(|_| self.sweep.n.is_none())
    }

    fn decay_rates(&self, len: usize) -> CliResult<Vec<f64>> {
        let rates = self
            .model
            .decay_rates
            .clone()
            .ok_or_else(|| invalid("model.decay_rates is required for this kind"))?;
        match rates.len() {
            1 => Ok(vec![rates[0]; len]),
            l if l == len => Ok(rates),
            l => Err(invalid(format!("{l} decay rates for {len} basis functions"))),
        }
    }

    /// Initial centers at register width `n`.
    fn centers_at(&self, n: u32, base_n: u32) -> CliResult<Vec<i64>> {
        let dim = 1i64 << n;
        match (&self.model.centers, &self.model.center_fractions) {
            (Some(_), Some(_)) => Err(invalid("give model.centers or model.center_fractions, not both")),
            (Some(c), None) if n == base_n => Ok(c.clone()),
            (Some(c), None) => {
                let scale = 2f64.powi(n as i32 - base_n as i32);
                Ok(c.iter().map(|&k| (k as f64 * scale).round() as i64).collect())
            }
            (None, Some(f)) => {
                if f.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("center fractions must be finite"));
                }
                Ok(f.iter().map(|x| (x * dim as f64).round() as i64).collect())
            }
            (None, None) => match &self.sweep.inits {
                Some(inits) if !inits.is_empty() => Ok(inits[0].clone()),
                _ => Err(invalid("model needs centers, center_fractions or sweep.inits")),
            },
        }
    }

    /// Register width the model lives on for the unswept case.
    fn model_width(&self, target_n: Option<u32>) -> CliResult<u32> {
        self.model
            .n
            .or(target_n)
            .or(self.builtin_width())
            .ok_or_else(|| invalid("model.n is required when the target width is not known"))
    }

    /// Sweep points in output order.
    pub fn groups(&self, target_n: Option<u32>) -> CliResult<Vec<Group>> {
        let base_n = self.model_width(target_n)?;
        match (&self.sweep.inits, &self.sweep.n) {
            (Some(_), Some(_)) => Err(invalid("sweep over inits or n, not both")),
            (Some(inits), None) => {
                if inits.is_empty() {
                    return Err(invalid("sweep.inits is empty"));
                }
                let reference = match &self.sweep.reference {
                    Some(r) => r.clone(),
                    None => match &self.model.centers {
                        Some(c) => c.clone(),
                        None => inits[0].clone(),
                    },
                };
                inits
                    .iter()
                    .map(|init| {
                        if init.len() != reference.len() {
                            return Err(invalid("sweep.inits and reference differ in length"));
                        }
                        let distance: i64 = init.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum();
                        Ok(Group {
                            label: init.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-"),
                            x: distance as f64,
                            n: base_n,
                            centers: init.clone(),
                        })
                    })
                    .collect()
            }
            (None, Some(widths)) => {
                if widths.is_empty() {
                    return Err(invalid("sweep.n is empty"));
                }
                widths
                    .iter()
                    .map(|&n| {
                        Ok(Group {
                            label: format!("n{n}"),
                            x: n as f64,
                            n,
                            centers: self.centers_at(n, base_n)?,
                        })
                    })
                    .collect()
            }
            (None, None) => Ok(vec![Group {
                label: "base".into(),
                x: 0.0,
                n: base_n,
                centers: self.centers_at(base_n, base_n)?,
            }]),
        }
    }

    /// LF parameters for a group.
    pub fn initial_params(&self, group: &Group) -> CliResult<Vec<LfParam>> {
        let rates = self.decay_rates(group.centers.len())?;
        group
            .centers
            .iter()
            .zip(rates)
            .map(|(&c, a)| LfParam::new(group.n, a, c).map_err(CliError::from))
            .collect()
    }
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = parse_config(&text)?;
        config.apply(overrides);
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base_dir)
    }

    pub fn from_config(config: ExperimentConfig, base_dir: PathBuf) -> CliResult<Self> {
        let target_text = match &config.target {
            TargetSpec::AmplitudeFile { path } | TargetSpec::SpectralFile { path } => {
                let full = base_dir.join(path);
                Some(std::fs::read_to_string(&full).map_err(|e| CliError::io(full, e))?)
            }
            _ => None,
        };
        let mut loaded = Self {
            config,
            base_dir,
            target_text,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn target_state(&self, n: u32) -> CliResult<StateVector> {
        Ok(match &self.config.target {
            TargetSpec::PsiIdeal { .. } => lfreadout::targets::psi_ideal(n)?,
            TargetSpec::SquaredLf {
                centers,
                weights,
                decay_rate,
                ..
            } => {
                let peaks = centers
                    .iter()
                    .map(|&c| LfParam::new(n, *decay_rate, c))
                    .collect::<lfreadout::Result<Vec<_>>>()?;
                lfreadout::targets::squared_lf_target(&peaks, weights)?
            }
            TargetSpec::AmplitudeFile { .. } => {
                lfreadout::io::parse_amplitude_file(self.target_text.as_deref().unwrap_or_default())?
            }
            TargetSpec::SpectralFile { .. } => {
                return Err(invalid("spectral targets are only valid for qpe-spectrum"));
            }
        })
    }

    pub fn spectral_problem(&self) -> CliResult<SpectralProblem> {
        match &self.config.target {
            TargetSpec::SpectralFile { .. } => Ok(lfreadout::io::parse_spectral_problem(
                self.target_text.as_deref().unwrap_or_default(),
            )?),
            _ => Err(invalid("qpe-spectrum needs a spectral-file target")),
        }
    }

    /// Width of the target register, when fixed by the target itself.
    pub fn target_width(&self) -> CliResult<Option<u32>> {
        Ok(match &self.config.target {
            TargetSpec::AmplitudeFile { .. } => Some(self.target_state(0)?.num_qubits()),
            TargetSpec::SpectralFile { .. } => Some(self.spectral_problem()?.n()),
            _ => self.config.target_width(),
        })
    }

    pub fn groups(&self) -> CliResult<Vec<Group>> {
        self.config.groups(self.target_width()?)
    }

    fn validate(&mut self) -> CliResult<()> {
        let c = &self.config;
        if c.trials == 0 || c.trials > MAX_TRIALS {
            return Err(invalid(format!("trials must be in 1..={MAX_TRIALS}")));
        }
        c.budget.with_seed(0).validate()?;
        let width = self.target_width()?;
        if let Some(n) = width {
            if n > lfreadout::MAX_QUBITS {
                return Err(lfreadout::Error::Capacity {
                    qubits: n,
                    max: lfreadout::MAX_QUBITS,
                }
                .into());
            }
        }
        match (c.kind, &c.target) {
            (ExperimentKind::QpeSpectrum, TargetSpec::SpectralFile { .. }) => {}
            (ExperimentKind::QpeSpectrum, _) => return Err(invalid("qpe-spectrum needs a spectral-file target")),
            (_, TargetSpec::SpectralFile { .. }) => {
                return Err(invalid("spectral-file targets are only valid for qpe-spectrum"))
            }
            _ => {}
        }
        match c.kind {
            ExperimentKind::ScalingBench if c.sweep.n.is_none() => {
                return Err(invalid("scaling-bench needs sweep.n"))
            }
            ExperimentKind::ScalingBench if c.sweep.inits.is_some() => {
                return Err(invalid("scaling-bench sweeps n only"))
            }
            ExperimentKind::ScalingBench if c.budget.mode == MeasurementMode::Exact => {
                log::warn!("scaling-bench in exact mode has no statistical error");
            }
            _ => {}
        }
        if c.sweep.n.is_some() && !matches!(c.target, TargetSpec::PsiIdeal { .. }) {
            return Err(invalid("width sweeps need a psi-ideal target"));
        }
        let groups = self.groups()?;
        let mut max_n = 0;
        for g in &groups {
            max_n = max_n.max(g.n);
            if c.kind != ExperimentKind::QpeSpectrum || c.model.decay_rates.is_some() {
                self.config.initial_params(g)?;
            }
            if g.centers.is_empty() {
                return Err(invalid("model needs at least one center"));
            }
        }
        // Doubled target plus LF register plus ancilla for circuit estimates.
        if max_n > lfreadout::MAX_QUBITS {
            return Err(lfreadout::Error::Capacity {
                qubits: max_n,
                max: lfreadout::MAX_QUBITS,
            }
            .into());
        }
        if c.kind != ExperimentKind::QpeSpectrum {
            for g in &groups {
                let target_n = width.unwrap_or(g.n);
                if g.n != target_n {
                    return Err(invalid("model and target widths differ"));
                }
                if c.budget.engine == ProbabilityEngine::Circuit {
                    let qubits = g.n + 2 * target_n + 1;
                    if qubits > lfreadout::MAX_QUBITS {
                        return Err(lfreadout::Error::Capacity {
                            qubits,
                            max: lfreadout::MAX_QUBITS,
                        }
                        .into());
                    }
                }
            }
        }
        self.config.fit.settings(max_n.max(1), 0).validate()?;
        // Width sweeps keep the per-width schedule defaults.
        if groups.iter().all(|g| g.n == groups[0].n) {
            self.config.fit.resolve(groups[0].n);
        }
        Ok(())
    }

    /// Canonical TOML of the resolved config, without the output directory.
    pub fn resolved_toml(&self) -> String {
        let mut c = self.config.clone();
        c.out = None;
        toml::to_string(&c).expect("config serializes")
    }

    /// SHA-256 over the resolved config and any target file contents.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.resolved_toml().as_bytes());
        if let Some(t) = &self.target_text {
            h.update(b"\0");
            h.update(t.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
kind = "state-readout"
trials = 3
[target]
source = "psi-ideal"
n = 5
[model]
decay_rates = [0.36, 1.672, 0.49]
centers = [8, 14, 16]
"#;

    fn load(text: &str) -> CliResult<LoadedConfig> {
        LoadedConfig::from_config(parse_config(text)?, PathBuf::new())
    }

    #[test]
    fn defaults_fill_in() {
        let c = load(BASIC).unwrap();
        assert_eq!(c.config.budget.mode, MeasurementMode::Exact);
        assert_eq!(c.config.fit.beta0, Some(100.0));
        let g = c.groups().unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].centers, vec![8, 14, 16]);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = load(BASIC).unwrap();
        let again = load(&c.resolved_toml()).unwrap();
        assert_eq!(again.config, c.config);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn hash_tracks_content() {
        let a = load(BASIC).unwrap();
        let b = load(&BASIC.replace("trials = 3", "trials = 4")).unwrap();
        assert_ne!(a.hash(), b.hash());
        let mut with_out = a.clone();
        with_out.config.out = Some("elsewhere".into());
        assert_eq!(with_out.hash(), a.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            BASIC.replace("state-readout", "nonsense"),
            BASIC.replace("trials = 3", "trials = 0"),
            BASIC.replace("[0.36, 1.672, 0.49]", "[0.36, 1.672]"),
            BASIC.replace("[0.36, 1.672, 0.49]", "[0.0, 1.0, 1.0]"),
            BASIC.replace("centers = [8, 14, 16]", "centers = [8, 8, 16]\ndecay = 1"),
            BASIC.replace("source = \"psi-ideal\"", "source = \"spectral-file\"\npath = \"x\""),
            format!("{BASIC}\n[sweep]\nn = [4, 5]\ninits = [[1, 2, 3]]\n"),
        ] {
            let err = load(&bad).unwrap_err();
            assert!(matches!(err.exit_code(), 2 | 4), "{bad}: {err}");
        }
    }

    #[test]
    fn capacity_is_reported() {
        let err = load(&BASIC.replace("n = 5", "n = 40")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn width_sweep_scales_centers() {
        let text = format!("{}\n[sweep]\nn = [4, 6]\n", BASIC.replace("state-readout", "scaling-bench"));
        let g = load(&text).unwrap().groups().unwrap();
        assert_eq!(g[0].centers, vec![4, 7, 8]);
        assert_eq!(g[1].centers, vec![16, 28, 32]);
        assert_eq!(g[1].x, 6.0);
    }

    #[test]
    fn init_sweep_measures_distance() {
        let text = format!("{BASIC}\n[sweep]\ninits = [[8, 14, 16], [6, 11, 17]]\n");
        let g = load(&text).unwrap().groups().unwrap();
        assert_eq!(g[1].x, 6.0);
        assert_eq!(g[1].label, "6-11-17");
    }

    #[test]
    fn overrides_apply() {
        let mut c = parse_config(BASIC).unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            mode: Some(MeasurementMode::Shots),
            shots: Some(50),
            ..Default::default()
        });
        assert_eq!((c.seed, c.budget.mode, c.budget.shots), (9, MeasurementMode::Shots, 50));
    }
}
