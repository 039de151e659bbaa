use std::io::BufReader;

use serde::Serialize;

use super::sweep::{trial_angles, trial_graph};
use super::{derive_setup2_probs, BadFractionRule, ExperimentConfig};
use crate::disentangle::{
    classification_error, iterate_disentangle_tracked, literal_bad_fractions, model_bad_fractions,
    DisentangleConfig, DisentangleState,
};
use crate::error::{Result, SyncError};
use crate::genmodel::{theory_bounds, MixtureParams, TheoryReport};
use crate::graph::{EdgeLabel, MeasurementGraph};
use crate::grp::{
    asap_recover, build_patches, make_two_configurations, procrustes_error, PointCloudPair,
    ProcrustesOptions, Recovery,
};
use crate::rng;
use crate::sync::{evaluate, solve, SdpDiagnostics, Solver};

/// Mixture parameters of the first grid point.
fn first_point(cfg: &ExperimentConfig) -> Result<MixtureParams> {
    if cfg.sweeps_eta() {
        let eta = cfg.etas[0];
        let p = derive_setup2_probs(cfg.k, eta, cfg.gamma.expect("validated"))?;
        MixtureParams::new(cfg.n, cfg.lambda.expect("validated"), p, cfg.seed)
    } else {
        let (p, _) = cfg.fixed_p()?;
        let lambda = cfg
            .lambda
            .or(cfg.lambdas.first().copied())
            .ok_or_else(|| SyncError::Config("no lambda given".into()))?;
        MixtureParams::new(cfg.n, lambda, p, cfg.seed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub solver: Solver,
    pub matched_corr: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub degenerate_entries: usize,
    pub sdp: Option<SdpDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateRun {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub p: Vec<f64>,
    pub eta: f64,
    pub edges: usize,
    pub solvers: Vec<SolverSummary>,
    #[serde(skip)]
    pub graph: MeasurementGraph,
}

/// One instance at the first grid point, solved by every configured solver.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateRun> {
    let params = first_point(cfg)?;
    let angles = trial_angles(cfg, 0)?;
    let g = trial_graph(cfg, &params, &angles, &[rng::TAG_GRAPH, 0, 0, 0])?;
    let sdp = cfg
        .sdp
        .with_seed(rng::derive_seed(cfg.seed, &[rng::TAG_SOLVER, 0, 0, 0]));
    let solvers = cfg
        .solvers
        .iter()
        .map(|&s| {
            let est = solve(&g, cfg.k, s, &sdp)?;
            Ok(SolverSummary {
                solver: s,
                matched_corr: evaluate(&angles, &est, cfg.matching)?.matched,
                eigenvalues: est.eigenvalues.clone(),
                degenerate_entries: est.degenerate_entries.len(),
                sdp: est.sdp.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SimulateRun {
        n: params.n,
        k: params.k(),
        lambda: params.lambda,
        eta: params.eta(),
        p: params.p.clone(),
        edges: g.edge_count(),
        solvers,
        graph: g,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// 1-based group index.
    pub group: usize,
    pub matched_corr: Option<f64>,
    pub median_gamma: Option<f64>,
    pub good_edges: usize,
    /// Misclassified edges over the whole graph (labels known only).
    pub misclassified: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DisentangleRun {
    pub graph: MeasurementGraph,
    pub records: Vec<IterationRecord>,
    pub last: DisentangleState,
}

impl DisentangleRun {
    pub fn csv(&self) -> String {
        let opt = |x: Option<String>| x.unwrap_or_default();
        let mut s =
            String::from("iteration,group,matched_corr,median_gamma,good_edges,misclassified\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration,
                r.group,
                opt(r.matched_corr.map(|x| x.to_string())),
                opt(r.median_gamma.map(|x| x.to_string())),
                r.good_edges,
                opt(r.misclassified.map(|x| x.to_string()))
            ));
        }
        s
    }
}

/// Runs the disentangling iteration on a sampled instance or on `graph_file`.
pub fn run_disentangle(cfg: &ExperimentConfig) -> Result<DisentangleRun> {
    let (g, truth, p_eta) = match &cfg.graph_file {
        Some(path) => {
            let g = MeasurementGraph::read_from(BufReader::new(std::fs::File::open(path)?))?;
            (g, None, None)
        }
        None => {
            let params = first_point(cfg)?;
            let angles = trial_angles(cfg, 0)?;
            let g = trial_graph(cfg, &params, &angles, &[rng::TAG_GRAPH, 0, 0, 0])?;
            let eta = params.eta();
            (g, Some(angles), Some((params.p, eta)))
        }
    };
    let bad_fractions = match (&cfg.bad_fractions, &p_eta) {
        (Some(f), _) => f.clone(),
        (None, Some((p, eta))) => match cfg.bad_fraction_rule {
            BadFractionRule::Model => model_bad_fractions(p, *eta),
            BadFractionRule::Literal => literal_bad_fractions(p),
        },
        (None, None) => return Err(SyncError::Config("bad fractions unknown".into())),
    };
    let solver = cfg.solvers.first().copied().unwrap_or(Solver::EigH);
    let dcfg = DisentangleConfig {
        k: cfg.k,
        iterations: cfg.iterations,
        bad_fractions,
        solver,
        seed: cfg.seed,
    };
    dcfg.validate()
        .map_err(|e| SyncError::Config(e.to_string()))?;
    let sdp = cfg
        .sdp
        .with_seed(rng::derive_seed(cfg.seed, &[rng::TAG_SOLVER]));
    let initial = solve(&g, cfg.k, solver, &sdp)?;
    let states = iterate_disentangle_tracked(&g, &dcfg, &initial.theta_hat, truth.as_ref())?;
    let labelled = g.edges().iter().all(|e| e.label != EdgeLabel::Unknown);
    let mut records = Vec::new();
    for st in &states {
        let mis = labelled.then(|| classification_error(&g, st));
        let median = st.median_good_gamma();
        for l in 0..cfg.k {
            records.push(IterationRecord {
                iteration: st.iteration,
                group: l + 1,
                matched_corr: st.history.last().map(|h| h[l]),
                median_gamma: median,
                good_edges: st.good_subgraph(&g, l).edge_count(),
                misclassified: mis,
            });
        }
    }
    let last = states.into_iter().last().expect("at least one iteration");
    Ok(DisentangleRun {
        graph: g,
        records,
        last,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrpRecord {
    pub sigma: f64,
    pub seed: u64,
    pub x_error: f64,
    pub y_error: f64,
    pub misclassified: usize,
}

#[derive(Debug, Clone)]
pub struct GrpRun {
    pub truth: PointCloudPair,
    pub records: Vec<GrpRecord>,
    /// Recovery of the first seed at each noise level.
    pub recoveries: Vec<(f64, Recovery)>,
}

impl GrpRun {
    pub fn csv(&self) -> String {
        let mut s = String::from("sigma,seed,x_error,y_error,misclassified\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.sigma, r.seed, r.x_error, r.y_error, r.misclassified
            ));
        }
        s
    }
}

/// Graph realization over the configured noise levels, `trials_angles` seeds
/// each (seeds `seed, seed+1, …`).
pub fn run_grp(cfg: &ExperimentConfig) -> Result<GrpRun> {
    let truth = make_two_configurations(&cfg.configuration)?;
    let mut records = Vec::new();
    let mut recoveries = Vec::new();
    for &sigma in &cfg.sigmas {
        for s in 0..cfg.trials_angles {
            let seed = cfg.seed.wrapping_add(s as u64);
            let mut pcfg = cfg.patches.clone();
            pcfg.sigma = sigma;
            pcfg.seed = seed;
            let (ps, g) = build_patches(&truth, &pcfg)?;
            let mut dcfg = pcfg.disentangle_config()?;
            dcfg.iterations = cfg.iterations;
            dcfg.seed = seed;
            let rec = asap_recover(&ps, &g, &dcfg)?;
            let opts = ProcrustesOptions::default();
            records.push(GrpRecord {
                sigma,
                seed,
                x_error: procrustes_error(&truth.x, &rec.x_hat.points, opts)?,
                y_error: procrustes_error(&truth.y, &rec.y_hat.points, opts)?,
                misclassified: classification_error(&g, rec.states.last().expect("iterated")),
            });
            if s == 0 {
                recoveries.push((sigma, rec));
            }
        }
    }
    Ok(GrpRun {
        truth,
        records,
        recoveries,
    })
}

pub fn run_theory(cfg: &ExperimentConfig) -> Result<TheoryReport> {
    let (p, _) = cfg.fixed_p()?;
    let params = MixtureParams::new(cfg.n, cfg.lambda.expect("validated"), p, cfg.seed)?;
    theory_bounds(&params, cfg.delta.expect("validated"), cfg.mu, cfg.epsilon)
}
