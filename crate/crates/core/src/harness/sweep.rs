use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{derive_setup2_probs, ExperimentConfig, GraphModel};
use crate::angles::AngleGroups;
use crate::error::{Result, SyncError};
use crate::genmodel::{
    sample_angles_with, sample_ba_mixture_with, sample_er_mixture_with, MixtureParams,
};
use crate::graph::MeasurementGraph;
use crate::rng;
use crate::sync::{evaluate, solve, Solver};

pub const CSV_HEADER: &str = "mode,solver,n,k,lambda,eta,gamma,group,mean_corr,std_corr,trials";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mode: String,
    pub solver: Solver,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub eta: f64,
    pub gamma: Option<f64>,
    /// 1-based group index.
    pub group: usize,
    pub mean_corr: f64,
    pub std_corr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub lambda: f64,
    pub eta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub solver: Solver,
    pub lambda: f64,
    pub eta: f64,
    /// Mean Burer–Monteiro iteration count (SDP-BM only).
    pub mean_iterations: Option<f64>,
    pub unconverged: usize,
    pub degenerate_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMeta {
    pub mode: String,
    pub seed: u64,
    pub skipped: Vec<SkippedPoint>,
    pub diagnostics: Vec<SolverDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

struct GridPoint {
    lambda: f64,
    eta: f64,
    gamma: Option<f64>,
    p: Vec<f64>,
}

#[derive(Default, Clone)]
struct TrialResult {
    /// Per solver, matched correlation per group.
    corr: Vec<Vec<f64>>,
    iterations: Vec<Option<usize>>,
    unconverged: Vec<bool>,
    degenerate: Vec<usize>,
}

fn grid(cfg: &ExperimentConfig) -> Result<(Vec<GridPoint>, Vec<SkippedPoint>)> {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    if cfg.sweeps_eta() {
        let gamma = cfg.gamma.expect("validated");
        let lambda = cfg.lambda.expect("validated");
        for &eta in &cfg.etas {
            let checked = derive_setup2_probs(cfg.k, eta, gamma)
                .and_then(|p| MixtureParams::new(cfg.n, lambda, p.clone(), cfg.seed).map(|_| p));
            match checked {
                Ok(p) => points.push(GridPoint {
                    lambda,
                    eta,
                    gamma: Some(gamma),
                    p,
                }),
                Err(e) => {
                    log::warn!("skipping eta = {eta}: {e}");
                    skipped.push(SkippedPoint {
                        lambda,
                        eta,
                        reason: e.to_string(),
                    });
                }
            }
        }
    } else {
        let (p, eta) = cfg.fixed_p()?;
        MixtureParams::new(cfg.n, 0.0, p.clone(), cfg.seed)?;
        for &lambda in &cfg.lambdas {
            points.push(GridPoint {
                lambda,
                eta,
                gamma: None,
                p: p.clone(),
            });
        }
    }
    Ok((points, skipped))
}

/// Samples the measurement graph of one trial.
pub(super) fn trial_graph(
    cfg: &ExperimentConfig,
    params: &MixtureParams,
    angles: &AngleGroups,
    path: &[u64],
) -> Result<MeasurementGraph> {
    let mut r = rng::stream(cfg.seed, path);
    match cfg.graph {
        GraphModel::ErdosRenyi => sample_er_mixture_with(params, angles, &mut r),
        GraphModel::BarabasiAlbert { m } => sample_ba_mixture_with(params, m, angles, &mut r),
    }
}

/// Angle draws are shared by every grid point: they depend on the seed and
/// the outer trial index only.
pub(super) fn trial_angles(cfg: &ExperimentConfig, outer: usize) -> Result<AngleGroups> {
    sample_angles_with(
        cfg.n,
        cfg.k,
        &mut rng::stream(cfg.seed, &[rng::TAG_ANGLES, outer as u64]),
    )
}

/// Runs the Monte-Carlo sweep on `threads` workers (`None`: all cores).
/// The output does not depend on the worker count.
pub fn run_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepOutput> {
    cfg.validate()?;
    let (points, skipped) = grid(cfg)?;
    let (ta, tb) = (cfg.trials_angles, cfg.trials_graphs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| SyncError::Config(format!("thread pool: {e}")))?;

    let results: Vec<TrialResult> = pool.install(|| {
        let angles: Vec<AngleGroups> = (0..ta)
            .into_par_iter()
            .map(|a| trial_angles(cfg, a))
            .collect::<Result<_>>()?;
        let tasks: Vec<(usize, usize, usize)> = (0..points.len())
            .flat_map(|gi| (0..ta).flat_map(move |a| (0..tb).map(move |b| (gi, a, b))))
            .collect();
        tasks
            .par_iter()
            .map(|&(gi, a, b)| {
                let pt = &points[gi];
                let params = MixtureParams::new(cfg.n, pt.lambda, pt.p.clone(), cfg.seed)?;
                let key = [gi as u64, a as u64, b as u64];
                let g = trial_graph(
                    cfg,
                    &params,
                    &angles[a],
                    &[rng::TAG_GRAPH, key[0], key[1], key[2]],
                )?;
                let sdp = cfg.sdp.with_seed(rng::derive_seed(
                    cfg.seed,
                    &[rng::TAG_SOLVER, key[0], key[1], key[2]],
                ));
                let mut out = TrialResult::default();
                for &s in &cfg.solvers {
                    let est = solve(&g, cfg.k, s, &sdp)?;
                    out.corr
                        .push(evaluate(&angles[a], &est, cfg.matching)?.matched);
                    out.iterations.push(est.sdp.as_ref().map(|d| d.iterations));
                    out.unconverged
                        .push(est.sdp.as_ref().is_some_and(|d| !d.converged));
                    out.degenerate.push(est.degenerate_entries.len());
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let per_point = ta * tb;
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for (gi, pt) in points.iter().enumerate() {
        let trials = &results[gi * per_point..(gi + 1) * per_point];
        for (si, &solver) in cfg.solvers.iter().enumerate() {
            for l in 0..cfg.k {
                let xs: Vec<f64> = trials.iter().map(|t| t.corr[si][l]).collect();
                let (mean_corr, std_corr) = mean_std(&xs);
                rows.push(SweepRow {
                    mode: cfg.mode.as_str().to_string(),
                    solver,
                    n: cfg.n,
                    k: cfg.k,
                    lambda: pt.lambda,
                    eta: pt.eta,
                    gamma: pt.gamma,
                    group: l + 1,
                    mean_corr,
                    std_corr,
                    trials: per_point,
                });
            }
            let its: Vec<f64> = trials
                .iter()
                .filter_map(|t| t.iterations[si].map(|x| x as f64))
                .collect();
            diagnostics.push(SolverDiagnostics {
                solver,
                lambda: pt.lambda,
                eta: pt.eta,
                mean_iterations: (!its.is_empty()).then(|| mean_std(&its).0),
                unconverged: trials.iter().filter(|t| t.unconverged[si]).count(),
                degenerate_entries: trials.iter().map(|t| t.degenerate[si]).sum(),
            });
        }
    }
    Ok(SweepOutput {
        rows,
        meta: SweepMeta {
            mode: cfg.mode.as_str().to_string(),
            seed: cfg.seed,
            skipped,
            diagnostics,
        },
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub(super) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

pub fn write_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").expect("string write");
    for r in rows {
        let gamma = r.gamma.map(|g| g.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.mode,
            r.solver,
            r.n,
            r.k,
            r.lambda,
            r.eta,
            gamma,
            r.group,
            r.mean_corr,
            r.std_corr,
            r.trials
        )
        .expect("string write");
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        if no == 0 || line.trim().is_empty() {
            continue;
        }
        let err = |message: String| SyncError::Parse {
            line: no + 1,
            message,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(err(format!("expected 11 fields, found {}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|e| err(format!("field {}: {e}", i + 1)))
        };
        let int = |i: usize| -> Result<usize> {
            f[i].parse()
                .map_err(|e| err(format!("field {}: {e}", i + 1)))
        };
        rows.push(SweepRow {
            mode: f[0].to_string(),
            solver: f[1].parse()?,
            n: int(2)?,
            k: int(3)?,
            lambda: num(4)?,
            eta: num(5)?,
            gamma: if f[6].is_empty() { None } else { Some(num(6)?) },
            group: int(7)?,
            mean_corr: num(8)?,
            std_corr: num(9)?,
            trials: int(10)?,
        });
    }
    Ok(rows)
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes the CSV at `path` and the diagnostics next to it as `<path>.meta`.
pub fn write_sweep(out: &SweepOutput, path: &Path) -> Result<()> {
    write_csv(std::fs::File::create(path)?, &out.rows)?;
    let meta = serde_json::to_string_pretty(&out.meta).expect("meta serializes");
    std::fs::write(meta_path(path), meta + "\n")?;
    Ok(())
}
