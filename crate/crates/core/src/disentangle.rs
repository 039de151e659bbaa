//! Iterative synchronization and graph disentangling.
//!
//! Each iteration scores every edge against every recovered angle group,
//! hands the edge to the group that explains it best, re-synchronizes each
//! group on its own edges and finally discards the worst-fitting fraction of
//! each group's edges as outliers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angles::{circular_distance, AngleGroups};
use crate::error::{invalid, Result};
use crate::graph::{Edge, EdgeLabel, MeasurementGraph};
use crate::sync::{self, evaluate_angles, Matching, SdpBmConfig, Solver, SyncEstimate};

/// Per-group share of assigned edges expected to be outliers when outliers
/// spread evenly over the `k` groups: `(η/k) / (p_l + η/k)`.
pub fn model_bad_fractions(p: &[f64], eta: f64) -> Vec<f64> {
    let share = eta.max(0.0) / p.len() as f64;
    p.iter()
        .map(|&pl| {
            if pl + share > 0.0 {
                share / (pl + share)
            } else {
                0.0
            }
        })
        .collect()
}

/// The literal `1 − p_l` rule.
pub fn literal_bad_fractions(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&pl| 1.0 - pl).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisentangleConfig {
    pub k: usize,
    /// Number of iterations `M`.
    pub iterations: usize,
    pub bad_fractions: Vec<f64>,
    pub solver: Solver,
    pub seed: u64,
}

impl DisentangleConfig {
    pub fn new(k: usize, bad_fractions: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            k,
            iterations: 20,
            bad_fractions,
            solver: Solver::EigH,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config whose bad fractions follow from the generative parameters.
    pub fn from_model(p: &[f64], eta: f64) -> Result<Self> {
        Self::new(p.len(), model_bad_fractions(p, eta))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("k must be positive");
        }
        if self.iterations == 0 {
            return invalid("at least one iteration is required");
        }
        if self.bad_fractions.len() != self.k {
            return invalid(format!(
                "{} bad fractions for {} groups",
                self.bad_fractions.len(),
                self.k
            ));
        }
        if let Some(f) = self.bad_fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return invalid(format!("bad fraction {f} outside [0, 1)"));
        }
        Ok(())
    }
}

/// `psi[l][e]`: circular distance between the measurement on edge `e` and the
/// offset predicted by group `l`, in `[0, π]`.
pub fn residual_matrices(g: &MeasurementGraph, theta_hat: &AngleGroups) -> Result<Vec<Vec<f64>>> {
    if theta_hat.n() != g.n() {
        return invalid(format!("{} angles for {} nodes", theta_hat.n(), g.n()));
    }
    Ok(theta_hat
        .rows()
        .iter()
        .map(|t| g.edges().iter().map(|e| edge_residual(e, t)).collect())
        .collect())
}

fn edge_residual(e: &Edge, theta: &[f64]) -> f64 {
    circular_distance(e.theta, theta[e.i] - theta[e.j])
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAssignment {
    /// Group index per edge.
    pub group: Vec<usize>,
    /// Smallest residual per edge.
    pub gamma: Vec<f64>,
}

impl EdgeAssignment {
    /// `Ψ̃_l`: the residuals of group `l` kept on its own edges, zero elsewhere.
    pub fn masked(&self, psi: &[Vec<f64>], l: usize) -> Vec<f64> {
        self.group
            .iter()
            .enumerate()
            .map(|(e, &a)| if a == l { psi[l][e] } else { 0.0 })
            .collect()
    }
}

/// Each edge goes to the group with the smallest residual; ties go to the
/// lowest group index.
pub fn assign_edges(psi: &[Vec<f64>]) -> Result<EdgeAssignment> {
    let Some(first) = psi.first() else {
        return invalid("no residual maps");
    };
    let m = first.len();
    if psi.iter().any(|r| r.len() != m) {
        return invalid("residual maps of different lengths");
    }
    let mut group = vec![0; m];
    let mut gamma = first.clone();
    for (l, row) in psi.iter().enumerate().skip(1) {
        for e in 0..m {
            if row[e] < gamma[e] {
                gamma[e] = row[e];
                group[e] = l;
            }
        }
    }
    Ok(EdgeAssignment { group, gamma })
}

/// Marks the edges whose residual lies strictly above the nearest-rank
/// `(1 − fraction)` quantile. Residuals equal to the threshold stay good.
pub fn quantile_bad(residuals: &[f64], fraction: f64) -> Vec<bool> {
    let m = residuals.len();
    if m == 0 || fraction <= 0.0 {
        return vec![false; m];
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((1.0 - fraction) * m as f64).ceil().max(1.0) as usize;
    let threshold = sorted[rank.min(m) - 1];
    residuals.iter().map(|&r| r > threshold).collect()
}

/// Result of synchronizing one group's assigned subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSync {
    pub theta: Vec<f64>,
    /// Nodes outside the synchronized component; their angle is 0.
    pub flagged: Vec<usize>,
}

/// Synchronizes the largest connected component of `g` with a single group.
pub fn sync_largest_component(
    g: &MeasurementGraph,
    solver: Solver,
    seed: u64,
) -> Result<GroupSync> {
    let n = g.n();
    let comps = g.components();
    let main = &comps[0];
    let mut local = vec![usize::MAX; n];
    for (a, &v) in main.iter().enumerate() {
        local[v] = a;
    }
    let flagged: Vec<usize> = (0..n).filter(|&v| local[v] == usize::MAX).collect();
    let mut theta = vec![0.0; n];
    if main.len() == 1 {
        return Ok(GroupSync { theta, flagged });
    }
    let edges = g
        .edges()
        .iter()
        .filter(|e| local[e.i] != usize::MAX)
        .map(|e| Edge {
            i: local[e.i],
            j: local[e.j],
            ..*e
        })
        .collect();
    let sub = MeasurementGraph::new(main.len(), g.k().max(1), edges)?;
    let sdp = SdpBmConfig {
        seed,
        ..SdpBmConfig::default()
    };
    let est = sync::solve(&sub, 1, solver, &sdp)?;
    for (a, &v) in main.iter().enumerate() {
        theta[v] = est.theta_hat.group(0)[a];
    }
    Ok(GroupSync { theta, flagged })
}

#[derive(Debug, Clone)]
pub struct DisentangleState {
    /// 1-based iteration index.
    pub iteration: usize,
    /// Angles after this iteration's per-group synchronization.
    pub theta_hat: AngleGroups,
    /// Assignment computed from the previous iteration's angles.
    pub assignment: EdgeAssignment,
    /// `true` for edges classified as outliers within their group.
    pub bad: Vec<bool>,
    /// Residual of each edge against its group's re-synchronized angles.
    pub fit_residuals: Vec<f64>,
    /// Per group, the nodes outside the synchronized component.
    pub flagged: Vec<Vec<usize>>,
    /// Matched correlations per iteration up to this one (empty without truth).
    pub history: Vec<Vec<f64>>,
}

impl DisentangleState {
    pub fn k(&self) -> usize {
        self.theta_hat.k()
    }

    /// Predicted label per edge: its group when good, outlier when bad.
    pub fn predicted_labels(&self) -> Vec<EdgeLabel> {
        self.assignment
            .group
            .iter()
            .zip(&self.bad)
            .map(|(&l, &b)| {
                if b {
                    EdgeLabel::Outlier
                } else {
                    EdgeLabel::Group(l)
                }
            })
            .collect()
    }

    /// `Ĝ_l`: good edges of group `l`, labelled with the group.
    pub fn good_subgraph(&self, g: &MeasurementGraph, l: usize) -> MeasurementGraph {
        self.subgraph(g, EdgeLabel::Group(l))
    }

    /// `Ŵ`: all bad edges, labelled as outliers.
    pub fn bad_subgraph(&self, g: &MeasurementGraph) -> MeasurementGraph {
        self.subgraph(g, EdgeLabel::Outlier)
    }

    fn subgraph(&self, g: &MeasurementGraph, label: EdgeLabel) -> MeasurementGraph {
        let labels = self.predicted_labels();
        let idx = (0..g.edge_count()).filter(|&e| labels[e] == label);
        g.with_edges(idx).relabeled(label)
    }

    /// Median of `Γ` over edges classified good.
    pub fn median_good_gamma(&self) -> Option<f64> {
        let mut v: Vec<f64> = self
            .assignment
            .gamma
            .iter()
            .zip(&self.bad)
            .filter(|(_, &b)| !b)
            .map(|(&x, _)| x)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        Some(if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        })
    }
}

/// Runs `cfg.iterations` rounds starting from `initial`.
pub fn iterate_disentangle(
    g: &MeasurementGraph,
    cfg: &DisentangleConfig,
    initial: &SyncEstimate,
) -> Result<Vec<DisentangleState>> {
    iterate_disentangle_tracked(g, cfg, &initial.theta_hat, None)
}

/// As [`iterate_disentangle`], also recording matched correlations against
/// `truth` after every iteration.
pub fn iterate_disentangle_tracked(
    g: &MeasurementGraph,
    cfg: &DisentangleConfig,
    initial: &AngleGroups,
    truth: Option<&AngleGroups>,
) -> Result<Vec<DisentangleState>> {
    cfg.validate()?;
    if initial.k() != cfg.k {
        return invalid(format!(
            "initial estimate has {} groups, config {}",
            initial.k(),
            cfg.k
        ));
    }
    let matching = if cfg.k <= 8 {
        Matching::Exhaustive
    } else {
        Matching::Greedy
    };
    let mut states = Vec::with_capacity(cfg.iterations);
    let mut history = Vec::new();
    let mut current = initial.clone();
    for r in 1..=cfg.iterations {
        let psi = residual_matrices(g, &current)?;
        let assignment = assign_edges(&psi)?;
        let syncs: Vec<GroupSync> = (0..cfg.k)
            .into_par_iter()
            .map(|l| {
                let idx = assignment
                    .group
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a == l)
                    .map(|(e, _)| e);
                let seed = crate::rng::derive_seed(cfg.seed, &[r as u64, l as u64]);
                sync_largest_component(&g.with_edges(idx), cfg.solver, seed)
            })
            .collect::<Result<_>>()?;
        let theta_hat = AngleGroups::new(syncs.iter().map(|s| s.theta.clone()).collect())?;

        let fit_residuals: Vec<f64> = g
            .edges()
            .iter()
            .zip(&assignment.group)
            .map(|(e, &l)| edge_residual(e, theta_hat.group(l)))
            .collect();
        let mut bad = vec![false; g.edge_count()];
        for l in 0..cfg.k {
            let idx: Vec<usize> = (0..g.edge_count())
                .filter(|&e| assignment.group[e] == l)
                .collect();
            let res: Vec<f64> = idx.iter().map(|&e| fit_residuals[e]).collect();
            for (&e, b) in idx.iter().zip(quantile_bad(&res, cfg.bad_fractions[l])) {
                bad[e] = b;
            }
        }
        if let Some(t) = truth {
            history.push(evaluate_angles(t, &theta_hat, matching)?.matched);
        }
        let flagged: Vec<Vec<usize>> = syncs.into_iter().map(|s| s.flagged).collect();
        for (l, f) in flagged.iter().enumerate() {
            if !f.is_empty() {
                log::warn!(
                    "iteration {r}: group {} subgraph disconnected, {} nodes left unsynchronized",
                    l + 1,
                    f.len()
                );
            }
        }
        states.push(DisentangleState {
            iteration: r,
            theta_hat: theta_hat.clone(),
            assignment,
            bad,
            fit_residuals,
            flagged,
            history: history.clone(),
        });
        current = theta_hat;
    }
    Ok(states)
}

/// Number of edges whose predicted label differs from the label stored in
/// `g`, minimized over relabelings of the recovered groups (`k ≤ 8`; the
/// identity is used beyond that).
pub fn classification_error(g: &MeasurementGraph, state: &DisentangleState) -> usize {
    let predicted = state.predicted_labels();
    let k = state.k();
    let count = |perm: &[usize]| {
        g.edges()
            .iter()
            .zip(&predicted)
            .filter(|(e, p)| {
                let mapped = match p {
                    EdgeLabel::Group(l) => EdgeLabel::Group(perm[*l]),
                    other => **other,
                };
                mapped != e.label
            })
            .count()
    };
    let identity: Vec<usize> = (0..k).collect();
    if k > 8 {
        return count(&identity);
    }
    let mut best = usize::MAX;
    permutations(&identity, &mut |p| best = best.min(count(p)));
    best
}

fn permutations(items: &[usize], visit: &mut impl FnMut(&[usize])) {
    fn rec(v: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
        if start == v.len() {
            visit(v);
            return;
        }
        for i in start..v.len() {
            v.swap(start, i);
            rec(v, start + 1, visit);
            v.swap(start, i);
        }
    }
    rec(&mut items.to_vec(), 0, visit);
}
