//! Two-configuration graph realization in the plane.
//!
//! Every patch (a node and its disc neighbourhood) carries two local
//! embeddings, one rigid copy of configuration `X` and one of `Y`, each in its
//! own unknown rotated and translated frame. Aligning overlapping patches
//! yields relative rotations that come from `X` copies, from `Y` copies or from
//! an uninformative mix, which is exactly a bi-synchronization instance.

mod points;

pub use points::{read_points, write_points};

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::angles::{wrap_angle, AngleGroups};
use crate::disentangle::{
    iterate_disentangle, sync_largest_component, DisentangleConfig, DisentangleState,
};
use crate::error::{invalid, Result, SyncError};
use crate::graph::{Edge, EdgeLabel, MeasurementGraph};
use crate::rng;
use crate::sync::{self, SdpBmConfig};
use crate::Complex64;

/// Planar points stored as complex numbers `x + iy`.
pub type Points = Vec<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Generator {
    /// Row-major square grid with the given spacing; the first `n` points of
    /// the smallest square holding `n` are used.
    Grid { spacing: f64 },
    /// Uniform in `[0, side]²`.
    UniformSquare { side: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSpec {
    pub n: usize,
    pub generator: Generator,
    /// Row-major `[[a, b], [c, d]]`.
    pub shear: [[f64; 2]; 2],
    /// Extra rotation applied to the points right of the centroid.
    pub region_rotation: f64,
    pub seed: u64,
}

impl Default for ConfigurationSpec {
    fn default() -> Self {
        Self {
            n: 144,
            generator: Generator::Grid { spacing: 1.0 },
            shear: [[1.0, 0.4], [0.0, 1.0]],
            region_rotation: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudPair {
    pub x: Points,
    pub y: Points,
}

impl PointCloudPair {
    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Relative non-congruence required of a generated pair: the Procrustes
/// residual must exceed this fraction of the diameter of `X`.
pub const NONCONGRUENCE_FLOOR: f64 = 0.01;

pub fn make_two_configurations(spec: &ConfigurationSpec) -> Result<PointCloudPair> {
    let n = spec.n;
    if n < 4 {
        return invalid(format!("need at least 4 points, got {n}"));
    }
    let [[a, b], [c, d]] = spec.shear;
    let det = a * d - b * c;
    if !(det.abs() > 1e-9) {
        return invalid(format!("degenerate shear, determinant {det}"));
    }
    let x: Points = match spec.generator {
        Generator::Grid { spacing } => {
            if !(spacing > 0.0) {
                return invalid("grid spacing must be positive");
            }
            let side = (n as f64).sqrt().ceil() as usize;
            (0..n)
                .map(|v| Complex64::new((v % side) as f64 * spacing, (v / side) as f64 * spacing))
                .collect()
        }
        Generator::UniformSquare { side } => {
            if !(side > 0.0) {
                return invalid("square side must be positive");
            }
            let mut r = rng::stream(spec.seed, &[rng::TAG_GEOMETRY]);
            (0..n)
                .map(|_| Complex64::new(r.random::<f64>() * side, r.random::<f64>() * side))
                .collect()
        }
    };
    let sheared: Points = x
        .iter()
        .map(|p| Complex64::new(a * p.re + b * p.im, c * p.re + d * p.im))
        .collect();
    let cx = x.iter().map(|p| p.re).sum::<f64>() / n as f64;
    let region: Vec<usize> = (0..n).filter(|&v| x[v].re > cx).collect();
    let mut y = sheared;
    if !region.is_empty() {
        let pivot = region.iter().map(|&v| y[v]).sum::<Complex64>() / region.len() as f64;
        let rot = Complex64::from_polar(1.0, spec.region_rotation);
        for &v in &region {
            y[v] = pivot + rot * (y[v] - pivot);
        }
    }
    let floor = NONCONGRUENCE_FLOOR * diameter(&x);
    let res = procrustes_error(&x, &y, ProcrustesOptions::default())?;
    if res <= floor {
        return invalid(format!(
            "configurations are congruent: Procrustes residual {res:.3e} <= floor {floor:.3e}"
        ));
    }
    Ok(PointCloudPair { x, y })
}

pub fn diameter(p: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in p.iter().enumerate() {
        for b in &p[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProcrustesOptions {
    pub reflection: bool,
    pub scale: bool,
}

/// Mean displacement between `a` and `b` after optimally aligning `b` to `a`
/// by a rotation and translation (optionally also reflection and scale).
pub fn procrustes_error(a: &[Complex64], b: &[Complex64], opts: ProcrustesOptions) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SyncError::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return invalid("Procrustes alignment needs at least 2 points");
    }
    let ac = centered(a);
    let bc = centered(b);
    let fit = |b: &[Complex64]| {
        let cross: Complex64 = ac.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
        let energy: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        let rot = if cross.norm() > 0.0 {
            cross / cross.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let s = if opts.scale && energy > 0.0 {
            cross.norm() / energy
        } else {
            1.0
        };
        ac.iter()
            .zip(b)
            .map(|(x, y)| (x - rot * s * y).norm())
            .sum::<f64>()
            / b.len() as f64
    };
    let mut best = fit(&bc);
    if opts.reflection {
        let mirrored: Points = bc.iter().map(|z| z.conj()).collect();
        best = best.min(fit(&mirrored));
    }
    Ok(best)
}

fn centered(p: &[Complex64]) -> Points {
    let mean = p.iter().sum::<Complex64>() / p.len() as f64;
    p.iter().map(|z| z - mean).collect()
}

/// Angle of the rotation best taking `b` onto `a` over common points.
pub fn rotation_angle(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ac = centered(a);
    let bc = centered(b);
    let cross: Complex64 = ac.iter().zip(&bc).map(|(x, y)| x * y.conj()).sum();
    wrap_angle(cross.arg())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchConfig {
    pub radius: f64,
    pub min_overlap: usize,
    pub sigma: f64,
    pub p1: f64,
    pub p2: f64,
    pub seed: u64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            radius: 3.0,
            min_overlap: 3,
            sigma: 0.0,
            p1: 0.55,
            p2: 0.45,
            seed: 0,
        }
    }
}

impl PatchConfig {
    /// Disentangling settings implied by the type probabilities.
    pub fn disentangle_config(&self) -> Result<DisentangleConfig> {
        DisentangleConfig::from_model(&[self.p1, self.p2], 1.0 - self.p1 - self.p2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// Sorted member nodes, including the center.
    pub members: Vec<usize>,
    /// Local type-X embedding of the members.
    pub local_x: Points,
    /// Local type-Y embedding of the members.
    pub local_y: Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    /// `None` for patches dropped for having fewer than 3 members.
    pub patches: Vec<Option<Patch>>,
    /// Planted frame rotations: row 0 for type-X embeddings, row 1 for type-Y.
    pub rotations: AngleGroups,
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Builds one patch per node from `X`'s disc neighbourhoods and aligns every
/// pair sharing at least `min_overlap` nodes. The returned graph labels each
/// edge by the embedding types that were aligned: group 0 for X/X, group 1
/// for Y/Y, outlier for mixed pairs.
pub fn build_patches(
    pc: &PointCloudPair,
    cfg: &PatchConfig,
) -> Result<(PatchSet, MeasurementGraph)> {
    if cfg.min_overlap < 3 {
        return invalid(format!("minimum overlap {} below 3", cfg.min_overlap));
    }
    if !(cfg.p1 >= 0.0 && cfg.p2 >= 0.0 && cfg.p1 + cfg.p2 <= 1.0 + 1e-12) {
        return invalid(format!(
            "invalid type probabilities ({}, {})",
            cfg.p1, cfg.p2
        ));
    }
    if !(cfg.sigma >= 0.0) || !(cfg.radius > 0.0) {
        return invalid("sigma must be non-negative and radius positive");
    }
    let n = pc.n();
    let mut noise_rng = rng::stream(cfg.seed, &[rng::TAG_NOISE]);
    let normal = Normal::new(0.0, cfg.sigma.max(f64::MIN_POSITIVE)).expect("valid deviation");
    let mut jitter = |z: Complex64| {
        if cfg.sigma > 0.0 {
            z + Complex64::new(normal.sample(&mut noise_rng), normal.sample(&mut noise_rng))
        } else {
            z
        }
    };
    let mut frame_rng = rng::stream(cfg.seed, &[rng::TAG_ANGLES]);
    let alpha: Vec<f64> = (0..n).map(|_| frame_rng.random::<f64>() * TAU).collect();
    let beta: Vec<f64> = (0..n).map(|_| frame_rng.random::<f64>() * TAU).collect();

    let mut patches = Vec::with_capacity(n);
    for c in 0..n {
        let members: Vec<usize> = (0..n)
            .filter(|&v| (pc.x[v] - pc.x[c]).norm() <= cfg.radius)
            .collect();
        if members.len() < 3 {
            log::warn!("patch {c} has {} members and is dropped", members.len());
            patches.push(None);
            continue;
        }
        let shift_x = Complex64::new(
            frame_rng.random::<f64>() * 10.0,
            frame_rng.random::<f64>() * 10.0,
        );
        let shift_y = Complex64::new(
            frame_rng.random::<f64>() * 10.0,
            frame_rng.random::<f64>() * 10.0,
        );
        let ra = Complex64::from_polar(1.0, alpha[c]);
        let rb = Complex64::from_polar(1.0, beta[c]);
        let local_x = members
            .iter()
            .map(|&v| jitter(ra * pc.x[v] + shift_x))
            .collect();
        let local_y = members
            .iter()
            .map(|&v| jitter(rb * pc.y[v] + shift_y))
            .collect();
        patches.push(Some(Patch {
            members,
            local_x,
            local_y,
        }));
    }

    let mut type_rng = rng::stream(cfg.seed, &[rng::TAG_GRAPH]);
    let mut edges = Vec::new();
    for (i, pi) in patches.iter().enumerate() {
        let Some(pi) = pi else { continue };
        for (j, pj) in patches.iter().enumerate().skip(i + 1) {
            let Some(pj) = pj else { continue };
            let (ai, aj) = common_positions(&pi.members, &pj.members);
            if ai.len() < cfg.min_overlap {
                continue;
            }
            let u: f64 = type_rng.random();
            let (label, a, b) = if u < cfg.p1 {
                (EdgeLabel::Group(0), &pi.local_x, &pj.local_x)
            } else if u < cfg.p1 + cfg.p2 {
                (EdgeLabel::Group(1), &pi.local_y, &pj.local_y)
            } else if type_rng.random::<bool>() {
                (EdgeLabel::Outlier, &pi.local_x, &pj.local_y)
            } else {
                (EdgeLabel::Outlier, &pi.local_y, &pj.local_x)
            };
            let sa: Points = ai.iter().map(|&m| a[m]).collect();
            let sb: Points = aj.iter().map(|&m| b[m]).collect();
            edges.push(Edge {
                i,
                j,
                theta: rotation_angle(&sa, &sb),
                label,
            });
        }
    }
    let g = MeasurementGraph::new(n, 2, edges)?;
    let rotations = AngleGroups::new(vec![alpha, beta])?;
    Ok((PatchSet { patches, rotations }, g))
}

/// Positions within each sorted member list of the nodes they share.
fn common_positions(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let (mut i, mut j) = (0, 0);
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                pa.push(i);
                pb.push(j);
                i += 1;
                j += 1;
            }
        }
    }
    (pa, pb)
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub points: Points,
    /// Root-mean-square residual of the translation least-squares system.
    pub residual: f64,
    /// Patches excluded because they fell outside the synchronized component.
    pub excluded_patches: Vec<usize>,
}

/// Places patches with the given rotations and solves node coordinates and
/// patch translations jointly by least squares, with the first used patch
/// fixed at translation zero.
pub fn assemble(
    ps: &PatchSet,
    theta: &[f64],
    use_patch: &[bool],
    embedding_type: usize,
) -> Result<Assembly> {
    let n = ps.len();
    let used: Vec<usize> = (0..n)
        .filter(|&i| use_patch[i] && ps.patches[i].is_some())
        .collect();
    let excluded_patches = (0..n).filter(|i| !used.contains(i)).collect();
    let Some(&gauge) = used.first() else {
        return Err(SyncError::RankDeficient(
            "no patch available for assembly".into(),
        ));
    };
    let mut covered = vec![false; n];
    for &i in &used {
        for &v in &ps.patches[i].as_ref().expect("used patch").members {
            covered[v] = true;
        }
    }
    let missing: Vec<usize> = (0..n).filter(|&v| !covered[v]).collect();
    if !missing.is_empty() {
        return Err(SyncError::RankDeficient(format!(
            "nodes {missing:?} belong to no synchronized patch"
        )));
    }

    // unknowns: node coordinates 0..n, then one translation per used patch but the gauge
    let mut t_index = vec![usize::MAX; n];
    let mut next = n;
    for &i in &used {
        if i != gauge {
            t_index[i] = next;
            next += 1;
        }
    }
    let dim = next;
    let mut normal = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<Complex64>::zeros(dim);
    let mut rows: Vec<(usize, usize, Complex64)> = Vec::new();
    for &i in &used {
        let p = ps.patches[i].as_ref().expect("used patch");
        let local = if embedding_type == 0 {
            &p.local_x
        } else {
            &p.local_y
        };
        let rot = Complex64::from_polar(1.0, -theta[i]);
        for (m, &v) in p.members.iter().enumerate() {
            // node_v − t_i = rot · local_m
            let target = rot * local[m];
            rows.push((v, t_index[i], target));
            normal[(v, v)] += 1.0;
            rhs[v] += target;
            if t_index[i] != usize::MAX {
                let t = t_index[i];
                normal[(t, t)] += 1.0;
                normal[(v, t)] -= 1.0;
                normal[(t, v)] -= 1.0;
                rhs[t] -= target;
            }
        }
    }
    let Some(chol) = normal.cholesky() else {
        return Err(SyncError::RankDeficient(format!(
            "translation system is singular; membership components: {:?}",
            membership_components(ps, &used)
        )));
    };
    let re = chol.solve(&rhs.map(|z| z.re));
    let im = chol.solve(&rhs.map(|z| z.im));
    let sol: Vec<Complex64> = (0..dim).map(|u| Complex64::new(re[u], im[u])).collect();
    let sq: f64 = rows
        .iter()
        .map(|&(v, t, target)| {
            let tv = if t == usize::MAX {
                Complex64::new(0.0, 0.0)
            } else {
                sol[t]
            };
            (sol[v] - tv - target).norm_sqr()
        })
        .sum();
    Ok(Assembly {
        points: sol[..n].to_vec(),
        residual: (sq / rows.len() as f64).sqrt(),
        excluded_patches,
    })
}

/// Connected components of the patch/node membership graph, listed by patch.
fn membership_components(ps: &PatchSet, used: &[usize]) -> Vec<Vec<usize>> {
    let n = ps.len();
    let edges = used
        .iter()
        .flat_map(|&i| {
            ps.patches[i]
                .as_ref()
                .expect("used patch")
                .members
                .iter()
                .filter(move |&&v| v != i)
                .map(move |&v| Edge {
                    i: i.min(v),
                    j: i.max(v),
                    theta: 0.0,
                    label: EdgeLabel::Unknown,
                })
        })
        .collect::<Vec<_>>();
    let mut dedup = edges;
    dedup.sort_by_key(|e| (e.i, e.j));
    dedup.dedup_by_key(|e| (e.i, e.j));
    match MeasurementGraph::new(n, 1, dedup) {
        Ok(g) => g
            .components()
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .filter(|v| used.contains(v))
                    .collect::<Vec<_>>()
            })
            .filter(|c: &Vec<usize>| !c.is_empty())
            .collect(),
        Err(_) => Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub x_hat: Assembly,
    pub y_hat: Assembly,
    /// Recovered group used for configuration X and Y, respectively.
    pub group_of_type: [usize; 2],
    /// Final rotations per recovered group, synchronized on the good edges.
    pub rotations: AngleGroups,
    pub states: Vec<DisentangleState>,
}

/// Bi-synchronization, disentangling, a final synchronization of each good
/// subgraph, and least-squares assembly of both configurations.
pub fn asap_recover(
    ps: &PatchSet,
    g: &MeasurementGraph,
    cfg: &DisentangleConfig,
) -> Result<Recovery> {
    if cfg.k != 2 {
        return invalid(format!("two configurations need k = 2, got {}", cfg.k));
    }
    let initial = sync::solve(
        g,
        2,
        cfg.solver,
        &SdpBmConfig {
            seed: cfg.seed,
            ..SdpBmConfig::default()
        },
    )?;
    let states = iterate_disentangle(g, cfg, &initial)?;
    let last = states.last().expect("at least one iteration");

    let mut rows = Vec::with_capacity(2);
    let mut use_patch = Vec::with_capacity(2);
    let mut votes = [[0usize; 2]; 2];
    for (e, label) in last.predicted_labels().into_iter().enumerate() {
        if let (EdgeLabel::Group(l), EdgeLabel::Group(t)) = (label, g.edges()[e].label) {
            votes[l][t] += 1;
        }
    }
    for l in 0..2 {
        let good = last.good_subgraph(g, l);
        let s = sync_largest_component(&good, cfg.solver, cfg.seed)?;
        let mut usable = vec![true; g.n()];
        for &v in &s.flagged {
            usable[v] = false;
        }
        rows.push(s.theta);
        use_patch.push(usable);
    }
    // without type information the recovered order is kept
    let group_of_type = if votes[0][1] + votes[1][0] > votes[0][0] + votes[1][1] {
        [1, 0]
    } else {
        [0, 1]
    };
    let x_hat = assemble(ps, &rows[group_of_type[0]], &use_patch[group_of_type[0]], 0)?;
    let y_hat = assemble(ps, &rows[group_of_type[1]], &use_patch[group_of_type[1]], 1)?;
    Ok(Recovery {
        x_hat,
        y_hat,
        group_of_type,
        rotations: AngleGroups::new(rows)?,
        states,
    })
}
