//! Generative models for heterogeneous offset measurements.
//!
//! Under the mixture model every edge `{i, j}` of the measurement graph
//! independently carries `(θ_{l,i} − θ_{l,j}) mod 2π` with probability `p_l`
//! (group `l`), or a uniform draw on the circle with probability
//! `η = 1 − Σ p_l` (outlier).

mod theory;

pub use theory::{
    closed_form_eigs_k2, noise_constant_c, theory_bounds, ConditionFlags, TheoryReport,
    SIGMA_BAR_UPPER,
};

use std::f64::consts::TAU;

use rand::Rng;

use crate::angles::{wrap_angle, AngleGroups, UnitVectorRep};
use crate::error::{invalid, Result, SyncError};
use crate::graph::{Edge, EdgeLabel, MeasurementGraph};
use crate::hermitian::HermitianMatrix;
use crate::rng::{self, SyncRng};

/// Slack allowed when checking `Σ p_l ≤ 1`.
const PROB_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub n: usize,
    pub lambda: f64,
    /// Strictly decreasing group probabilities.
    pub p: Vec<f64>,
    pub seed: u64,
}

impl MixtureParams {
    pub fn new(n: usize, lambda: f64, p: Vec<f64>, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("n must be positive");
        }
        if p.is_empty() {
            return invalid("at least one group probability is required");
        }
        if !(0.0..=1.0).contains(&lambda) {
            return invalid(format!("lambda = {lambda} outside [0, 1]"));
        }
        if p.iter().any(|x| !(*x >= 0.0)) {
            return invalid("group probabilities must be non-negative");
        }
        if p.windows(2).any(|w| w[0] <= w[1]) {
            return invalid(format!(
                "group probabilities {p:?} are not strictly decreasing"
            ));
        }
        if p.iter().sum::<f64>() > 1.0 + PROB_SLACK {
            return invalid(format!("group probabilities {p:?} sum above 1"));
        }
        Ok(Self { n, lambda, p, seed })
    }

    /// Bi-synchronization parameterization: a fraction `q` of edges belongs to
    /// the first graph, whose measurements are correct with probability `q1`;
    /// the rest belong to the second, correct with probability `q2`.
    pub fn from_q(n: usize, lambda: f64, q: f64, q1: f64, q2: f64, seed: u64) -> Result<Self> {
        for (name, v) in [("q", q), ("q1", q1), ("q2", q2)] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("{name} = {v} outside [0, 1]"));
            }
        }
        Self::new(n, lambda, vec![q * q1, (1.0 - q) * q2], seed)
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    /// Outlier probability `η = 1 − Σ p_l`, clamped at zero.
    pub fn eta(&self) -> f64 {
        (1.0 - self.p.iter().sum::<f64>()).max(0.0)
    }

    fn check_groups(&self, groups: &AngleGroups) -> Result<()> {
        if groups.k() != self.k() {
            return invalid(format!(
                "{} angle groups for a {}-group model",
                groups.k(),
                self.k()
            ));
        }
        if groups.n() != self.n {
            return Err(SyncError::LengthMismatch {
                expected: self.n,
                actual: groups.n(),
            });
        }
        Ok(())
    }
}

/// `k·n` i.i.d. angles `2π·u`, `u ~ U[0, 1)`.
pub fn sample_angles(n: usize, k: usize, seed: u64) -> Result<AngleGroups> {
    sample_angles_with(n, k, &mut rng::stream(seed, &[rng::TAG_ANGLES]))
}

pub fn sample_angles_with(n: usize, k: usize, rng: &mut SyncRng) -> Result<AngleGroups> {
    if n == 0 || k == 0 {
        return invalid("n and k must be positive");
    }
    let rows = (0..k)
        .map(|_| {
            (0..n)
                .map(|_| wrap_angle(TAU * rng.random::<f64>()))
                .collect()
        })
        .collect();
    AngleGroups::new(rows)
}

fn draw_measurement(
    params: &MixtureParams,
    groups: &AngleGroups,
    i: usize,
    j: usize,
    rng: &mut SyncRng,
) -> Edge {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (l, &pl) in params.p.iter().enumerate() {
        acc += pl;
        if u < acc {
            let g = groups.group(l);
            return Edge {
                i,
                j,
                theta: wrap_angle(g[i] - g[j]),
                label: EdgeLabel::Group(l),
            };
        }
    }
    Edge {
        i,
        j,
        theta: wrap_angle(TAU * rng.random::<f64>()),
        label: EdgeLabel::Outlier,
    }
}

/// Erdős–Rényi mixture: each pair is an edge with probability `λ` and carries
/// a labelled measurement drawn from the mixture.
pub fn sample_er_mixture(params: &MixtureParams, groups: &AngleGroups) -> Result<MeasurementGraph> {
    sample_er_mixture_with(
        params,
        groups,
        &mut rng::stream(params.seed, &[rng::TAG_GRAPH]),
    )
}

pub fn sample_er_mixture_with(
    params: &MixtureParams,
    groups: &AngleGroups,
    rng: &mut SyncRng,
) -> Result<MeasurementGraph> {
    params.check_groups(groups)?;
    let n = params.n;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < params.lambda {
                edges.push(draw_measurement(params, groups, i, j, rng));
            }
        }
    }
    MeasurementGraph::new(n, params.k(), edges)
}

/// Barabási–Albert topology with attachment count `m`.
///
/// Starts from a complete graph on the first `m` nodes; each later node joins
/// `m` distinct earlier nodes chosen by degree-proportional sampling without
/// replacement (uniformly while all degrees are zero). The edge count is
/// therefore `m(m−1)/2 + m(n−m)`. Returned as sorted `(i, j)` pairs, `i < j`.
pub fn barabasi_albert_edges(n: usize, m: usize, rng: &mut SyncRng) -> Result<Vec<(usize, usize)>> {
    if m == 0 || m >= n {
        return invalid(format!(
            "BA attachment m = {m} must satisfy 1 <= m < n = {n}"
        ));
    }
    let mut edges = Vec::with_capacity(m * (m.saturating_sub(1)) / 2 + m * (n - m));
    // every endpoint occurrence, so a uniform pick is degree-proportional
    let mut endpoints: Vec<usize> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            edges.push((i, j));
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for v in m..n {
        chosen.clear();
        while chosen.len() < m {
            let t = if endpoints.is_empty() {
                rng.random_range(0..v)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

/// Barabási–Albert mixture: BA edges, each carrying a mixture measurement
/// (the Erdős–Rényi model with `λ = 1` conditioned on edge presence).
pub fn sample_ba_mixture(
    params: &MixtureParams,
    m: usize,
    groups: &AngleGroups,
) -> Result<MeasurementGraph> {
    sample_ba_mixture_with(
        params,
        m,
        groups,
        &mut rng::stream(params.seed, &[rng::TAG_GRAPH]),
    )
}

pub fn sample_ba_mixture_with(
    params: &MixtureParams,
    m: usize,
    groups: &AngleGroups,
    rng: &mut SyncRng,
) -> Result<MeasurementGraph> {
    params.check_groups(groups)?;
    let pairs = barabasi_albert_edges(params.n, m, rng)?;
    let edges = pairs
        .into_iter()
        .map(|(i, j)| draw_measurement(params, groups, i, j, rng))
        .collect();
    MeasurementGraph::new(params.n, params.k(), edges)
}

/// `E[H] = Σ_l n p_l λ z_l z_l*`; its diagonal is `λ Σ p_l`.
pub fn expected_h(params: &MixtureParams, groups: &AngleGroups) -> Result<HermitianMatrix> {
    params.check_groups(groups)?;
    Ok(expected_h_from(params, &groups.to_unit_vectors()))
}

pub fn expected_h_from(params: &MixtureParams, z: &UnitVectorRep) -> HermitianMatrix {
    let n = params.n as f64;
    let terms: Vec<(f64, _)> = params
        .p
        .iter()
        .zip(&z.z)
        .map(|(&pl, zl)| (n * pl * params.lambda, zl))
        .collect();
    HermitianMatrix::sum_of_outer(params.n, &terms)
}

/// Largest normalized pairwise overlap `max_{i≠j} |⟨z_i, z_j⟩| / (‖z_i‖‖z_j‖)`.
pub fn delta_orthogonality(z: &UnitVectorRep) -> Result<f64> {
    if z.k() < 2 {
        return invalid("delta-orthogonality needs at least two vectors");
    }
    let mut worst: f64 = 0.0;
    for a in 0..z.k() {
        for b in a + 1..z.k() {
            let d = z.z[a].dotc(&z.z[b]).norm() / (z.z[a].norm() * z.z[b].norm());
            worst = worst.max(d);
        }
    }
    Ok(worst.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn params_validation() {
        assert!(MixtureParams::new(10, 0.5, vec![0.3, 0.2], 0).is_ok());
        assert!(MixtureParams::new(10, 0.5, vec![0.2, 0.2], 0).is_err());
        assert!(MixtureParams::new(10, 1.5, vec![0.3], 0).is_err());
        assert!(MixtureParams::new(10, 0.5, vec![0.7, 0.6], 0).is_err());
        let q = MixtureParams::from_q(10, 1.0, 0.6, 0.5, 0.5, 0).unwrap();
        assert!((q.p[0] - 0.3).abs() < 1e-15 && (q.p[1] - 0.2).abs() < 1e-15);
        assert!((q.eta() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn angles_deterministic_and_in_range() {
        let a = sample_angles(50, 3, 9).unwrap();
        assert_eq!(a, sample_angles(50, 3, 9).unwrap());
        assert_ne!(a, sample_angles(50, 3, 10).unwrap());
        let one = sample_angles(1, 1, 0).unwrap();
        assert!((0.0..TAU).contains(&one.group(0)[0]));
    }

    #[test]
    fn er_empty_and_noiseless() {
        let g = sample_angles(30, 1, 1).unwrap();
        let p0 = MixtureParams::new(30, 0.0, vec![1.0], 2).unwrap();
        assert_eq!(sample_er_mixture(&p0, &g).unwrap().edge_count(), 0);
        let p1 = MixtureParams::new(30, 1.0, vec![1.0], 2).unwrap();
        let graph = sample_er_mixture(&p1, &g).unwrap();
        assert_eq!(graph.edge_count(), 30 * 29 / 2);
        for e in graph.edges() {
            assert_eq!(e.theta, wrap_angle(g.group(0)[e.i] - g.group(0)[e.j]));
            assert_eq!(e.label, EdgeLabel::Group(0));
        }
    }

    #[test]
    fn er_rejects_shape_mismatch() {
        let g = sample_angles(30, 2, 1).unwrap();
        let p = MixtureParams::new(30, 1.0, vec![1.0], 2).unwrap();
        assert!(sample_er_mixture(&p, &g).is_err());
    }

    #[test]
    fn ba_tree_and_edge_count() {
        let mut r = rng::stream(3, &[]);
        let tree = barabasi_albert_edges(40, 1, &mut r).unwrap();
        assert_eq!(tree.len(), 39);
        let g = MeasurementGraph::new(
            40,
            1,
            tree.iter()
                .map(|&(i, j)| Edge {
                    i,
                    j,
                    theta: 0.0,
                    label: EdgeLabel::Unknown,
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(g.components().len(), 1);
        assert!(barabasi_albert_edges(5, 5, &mut r).is_err());
        assert!(barabasi_albert_edges(5, 0, &mut r).is_err());
    }

    #[test]
    fn delta_orthogonality_examples() {
        let g = AngleGroups::new(vec![vec![0.3, 1.0, 2.0], vec![0.3, 1.0, 2.0]]).unwrap();
        assert!((delta_orthogonality(&g.to_unit_vectors()).unwrap() - 1.0).abs() < 1e-12);
        let g = AngleGroups::new(vec![vec![0.0; 4], vec![0.0, PI, 0.0, PI]]).unwrap();
        assert!(delta_orthogonality(&g.to_unit_vectors()).unwrap() < 1e-15);
        let g = AngleGroups::new(vec![vec![0.0, 0.0], vec![0.0, PI]]).unwrap();
        assert!(delta_orthogonality(&g.to_unit_vectors()).unwrap() < 1e-15);
        let one = AngleGroups::new(vec![vec![0.0; 4]]).unwrap();
        assert!(delta_orthogonality(&one.to_unit_vectors()).is_err());
    }

    #[test]
    fn expected_h_single_group() {
        let g = sample_angles(6, 1, 4).unwrap();
        let p = MixtureParams::new(6, 1.0, vec![1.0], 0).unwrap();
        let eh = expected_h(&p, &g).unwrap();
        let z = g.to_unit_vectors();
        for i in 0..6 {
            for j in 0..6 {
                let want = z.z[0][i] * z.z[0][j].conj() * 6.0;
                assert!((eh.get(i, j) - want).norm() < 1e-14);
            }
            assert!((eh.get(i, i).re - 1.0).abs() < 1e-14);
        }
    }
}
