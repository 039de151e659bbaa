//! Experiment configuration, Monte-Carlo sweeps and their CSV/SVG output.

mod plot;
mod runs;
mod sweep;

pub use plot::{emit_plot, render_svg};
pub use runs::{
    run_disentangle, run_grp, run_simulate, run_theory, DisentangleRun, GrpRun, SimulateRun,
};
pub use sweep::{
    read_csv, run_sweep, write_csv, write_sweep, SweepMeta, SweepOutput, SweepRow, CSV_HEADER,
};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SyncError};
use crate::grp::{ConfigurationSpec, PatchConfig};
use crate::sync::{Matching, SdpBmConfig, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Setup1,
    Setup2,
    Compare,
    Disentangle,
    Grp,
    Theory,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Setup1 => "setup1",
            Mode::Setup2 => "setup2",
            Mode::Compare => "compare",
            Mode::Disentangle => "disentangle",
            Mode::Grp => "grp",
            Mode::Theory => "theory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum GraphModel {
    #[default]
    ErdosRenyi,
    BarabasiAlbert {
        m: usize,
    },
}

/// Which rule turns group probabilities into per-group bad fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BadFractionRule {
    /// `(η/k) / (p_l + η/k)`.
    #[default]
    Model,
    /// `1 − p_l`.
    Literal,
}

fn default_trials() -> usize {
    1
}

fn default_solvers() -> Vec<Solver> {
    vec![Solver::EigH]
}

fn default_iterations() -> usize {
    20
}

fn default_sigmas() -> Vec<f64> {
    vec![0.0]
}

fn default_mu() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    1.0
}

/// A whole experiment as one JSON document.
///
/// Setup I sweeps `lambdas` at fixed `p` (and `eta`, which must agree with
/// `1 − Σp` when given). Setup II sweeps `etas` at fixed `lambda`, deriving
/// `p` from `gamma`. `compare` is either of the two with several solvers,
/// picked by whether `gamma` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub etas: Vec<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials_angles: usize,
    #[serde(default = "default_trials")]
    pub trials_graphs: usize,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<Solver>,
    #[serde(default)]
    pub matching: Matching,
    #[serde(default)]
    pub graph: GraphModel,
    #[serde(default)]
    pub sdp: SdpSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Disentangling: iteration count.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub bad_fraction_rule: BadFractionRule,
    /// Disentangling: explicit per-group bad fractions (overrides the rule).
    #[serde(default)]
    pub bad_fractions: Option<Vec<f64>>,
    /// Disentangling: read the measurement graph from this file instead of
    /// sampling one.
    #[serde(default)]
    pub graph_file: Option<PathBuf>,
    /// Graph realization: point configuration.
    #[serde(default)]
    pub configuration: ConfigurationSpec,
    /// Graph realization: patch construction (its `sigma` is overridden by `sigmas`).
    #[serde(default)]
    pub patches: PatchConfig,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    /// Theory: orthogonality level `δ`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdpSettings {
    pub rank: Option<usize>,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        let d = SdpBmConfig::default();
        Self {
            rank: d.rank,
            max_iters: d.max_iters,
            rel_tol: d.rel_tol,
        }
    }
}

impl SdpSettings {
    pub fn with_seed(&self, seed: u64) -> SdpBmConfig {
        SdpBmConfig {
            rank: self.rank,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            seed,
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SyncError::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SyncError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SyncError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Whether a sweep runs over `etas` (Setup II) rather than `lambdas`.
    pub fn sweeps_eta(&self) -> bool {
        match self.mode {
            Mode::Setup2 => true,
            Mode::Compare => self.gamma.is_some(),
            _ => false,
        }
    }

    /// Group probabilities of a Setup I style run, with `η = 1 − Σp`.
    pub fn fixed_p(&self) -> Result<(Vec<f64>, f64)> {
        let Some(p) = &self.p else {
            return config_err("`p` is required");
        };
        if p.len() != self.k {
            return config_err(format!("`p` has {} entries for k = {}", p.len(), self.k));
        }
        let eta = 1.0 - p.iter().sum::<f64>();
        if let Some(given) = self.eta {
            if (given - eta).abs() > 1e-9 {
                return config_err(format!("eta = {given} disagrees with 1 - sum(p) = {eta}"));
            }
        }
        Ok((p.clone(), eta.max(0.0)))
    }

    /// Lists every problem with the configuration for its mode.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let needs_mixture = !matches!(self.mode, Mode::Grp);
        if needs_mixture && self.graph_file.is_none() {
            if self.n == 0 {
                problems.push("`n` must be positive".to_string());
            }
            if self.k == 0 {
                problems.push("`k` must be positive".to_string());
            }
        }
        if matches!(self.mode, Mode::Setup1 | Mode::Setup2 | Mode::Compare) {
            if self.trials_angles == 0 || self.trials_graphs == 0 {
                problems.push("trial counts must be positive".into());
            }
            if self.solvers.is_empty() {
                problems.push("at least one solver is required".into());
            }
            if self.sweeps_eta() {
                if self.gamma.is_none_or(|g| !(g >= 0.0)) {
                    problems.push("`gamma` must be given and non-negative".into());
                }
                if self.etas.is_empty() {
                    problems.push("`etas` grid is empty".into());
                }
                if let Some(e) = self.etas.iter().find(|e| !(0.0..1.0).contains(*e)) {
                    problems.push(format!("eta {e} outside [0, 1)"));
                }
                if self.lambda.is_none_or(|l| !(0.0..=1.0).contains(&l)) {
                    problems.push("`lambda` must be given in [0, 1]".into());
                }
            } else {
                if self.lambdas.is_empty() {
                    problems.push("`lambdas` grid is empty".into());
                }
                if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                    problems.push(format!("lambda {l} outside [0, 1]"));
                }
                if let Err(e) = self.fixed_p() {
                    problems.push(e.to_string());
                }
            }
            if let GraphModel::BarabasiAlbert { m } = self.graph {
                if m == 0 || m >= self.n {
                    problems.push(format!("BA attachment m = {m} must satisfy 1 <= m < n"));
                }
            }
            if self.matching == Matching::Exhaustive && self.k > 8 {
                problems.push("exhaustive matching supports k <= 8".into());
            }
        }
        if matches!(self.mode, Mode::Disentangle | Mode::Theory) && self.graph_file.is_none() {
            if let Err(e) = self.fixed_p() {
                problems.push(e.to_string());
            }
            if self.lambda.is_none_or(|l| !(0.0..=1.0).contains(&l)) {
                problems.push("`lambda` must be given in [0, 1]".into());
            }
        }
        if self.mode == Mode::Disentangle {
            if self.iterations == 0 {
                problems.push("`iterations` must be positive".into());
            }
            if self.graph_file.is_some() && self.bad_fractions.is_none() {
                problems.push("`bad_fractions` is required with `graph_file`".into());
            }
            if let Some(f) = &self.bad_fractions {
                if f.len() != self.k {
                    problems.push(format!("{} bad fractions for k = {}", f.len(), self.k));
                }
            }
        }
        if self.mode == Mode::Theory && self.delta.is_none_or(|d| !(0.0..=1.0).contains(&d)) {
            problems.push("`delta` must be given in [0, 1]".into());
        }
        if self.mode == Mode::Grp {
            if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(*s >= 0.0)) {
                problems.push("`sigmas` must be a non-empty list of non-negative values".into());
            }
            if self.trials_angles == 0 {
                problems.push("`trials_angles` (seeds per noise level) must be positive".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            config_err(problems.join("; "))
        }
    }
}

/// Setup II probabilities: an arithmetic sequence with mean `(1−η)/k`,
/// descending in steps of `γ`.
pub fn derive_setup2_probs(k: usize, eta: f64, gamma: f64) -> Result<Vec<f64>> {
    if k == 0 {
        return config_err("k must be positive");
    }
    if !(gamma >= 0.0) || !(0.0..1.0).contains(&eta) {
        return config_err(format!("invalid (eta, gamma) = ({eta}, {gamma})"));
    }
    let mean = (1.0 - eta) / k as f64;
    let mid = (k as f64 - 1.0) / 2.0;
    let mut p: Vec<f64> = (0..k).map(|l| mean + gamma * (mid - l as f64)).collect();
    // absorb rounding in the last entry so Σp + η = 1
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = (1.0 - eta) - head;
    if p[k - 1] <= 0.0 {
        return config_err(format!(
            "eta = {eta}, gamma = {gamma} gives non-positive p_{k} = {}",
            p[k - 1]
        ));
    }
    Ok(p)
}

#[cfg(test)]
mod tests;
