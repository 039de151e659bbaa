//! Synchronization solvers and their evaluation against ground truth.
//!
//! All three solvers end the same way: take `k` leading eigenvectors and read
//! the angle estimates off their entries, `θ̂_{l,i} = arg(v_{l,i}) mod 2π`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angles::{correlation, wrap_angle, AngleGroups};
use crate::error::{invalid, Result, SyncError};
use crate::graph::MeasurementGraph;
use crate::hermitian::{build_measurement_matrix, HermitianMatrix};
use crate::linalg::{self, degree_normalized_eig, top_k_eig, EigenPairs, DEFAULT_TOL};
use crate::rng;
use crate::Complex64;

/// Entries of a source eigenvector with modulus below this carry no phase.
pub const DEGENERATE_MODULUS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Solver {
    #[serde(rename = "EIG-H")]
    EigH,
    #[serde(rename = "EIG-R")]
    EigR,
    #[serde(rename = "SDP-BM")]
    SdpBm,
}

impl Solver {
    pub const ALL: [Solver; 3] = [Solver::EigH, Solver::EigR, Solver::SdpBm];

    pub fn tag(self) -> &'static str {
        match self {
            Solver::EigH => "EIG-H",
            Solver::EigR => "EIG-R",
            Solver::SdpBm => "SDP-BM",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Solver {
    type Err = SyncError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EIG-H" | "EIGH" => Ok(Solver::EigH),
            "EIG-R" | "EIGR" => Ok(Solver::EigR),
            "SDP-BM" | "SDPBM" | "SDP" => Ok(Solver::SdpBm),
            _ => invalid(format!("unknown solver {s:?}")),
        }
    }
}

/// Diagnostics of a Burer–Monteiro run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Final `trace(H V V*)`.
    pub objective: f64,
    /// Objective at the spectral initialization.
    pub initial_objective: f64,
    /// Diagonal shift making the iterated matrix positive semidefinite.
    pub shift: f64,
    /// Largest decrease of the objective between consecutive iterates.
    pub max_decrease: f64,
}

#[derive(Debug, Clone)]
pub struct SyncEstimate {
    pub theta_hat: AngleGroups,
    /// Leading eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `n × k`, unit-norm columns.
    pub eigenvectors: DMatrix<Complex64>,
    pub solver: Solver,
    /// `(l, i)` pairs whose eigenvector entry was numerically zero; their
    /// estimate is set to 0.
    pub degenerate_entries: Vec<(usize, usize)>,
    pub sdp: Option<SdpDiagnostics>,
}

impl SyncEstimate {
    pub fn k(&self) -> usize {
        self.theta_hat.k()
    }

    pub fn n(&self) -> usize {
        self.theta_hat.n()
    }
}

/// Reads angle estimates off the columns of `vectors`.
pub fn extract_angles(vectors: &DMatrix<Complex64>) -> Result<(AngleGroups, Vec<(usize, usize)>)> {
    let mut degenerate = Vec::new();
    let rows = vectors
        .column_iter()
        .enumerate()
        .map(|(l, col)| {
            col.iter()
                .enumerate()
                .map(|(i, v)| {
                    if v.norm() < DEGENERATE_MODULUS {
                        degenerate.push((l, i));
                        0.0
                    } else {
                        wrap_angle(v.arg())
                    }
                })
                .collect()
        })
        .collect();
    Ok((AngleGroups::new(rows)?, degenerate))
}

fn estimate_from_pairs(pairs: EigenPairs, solver: Solver) -> Result<SyncEstimate> {
    let (theta_hat, degenerate_entries) = extract_angles(&pairs.vectors)?;
    Ok(SyncEstimate {
        theta_hat,
        eigenvalues: pairs.values,
        eigenvectors: pairs.vectors,
        solver,
        degenerate_entries,
        sdp: None,
    })
}

fn check_k(g: &MeasurementGraph, k: usize) -> Result<()> {
    if k == 0 || k > g.n() {
        return invalid(format!("cannot recover {k} groups on {} nodes", g.n()));
    }
    Ok(())
}

/// `EIG-H`: top-k eigenvectors of the measurement matrix with unit diagonal.
pub fn spectral_ksync(g: &MeasurementGraph, k: usize) -> Result<SyncEstimate> {
    check_k(g, k)?;
    let h = build_measurement_matrix(g, 1.0);
    estimate_from_pairs(top_k_eig(&h, k, DEFAULT_TOL)?, Solver::EigH)
}

/// `EIG-R`: top-k eigenvectors of the degree-normalized operator `D⁻¹H`.
pub fn normalized_spectral_ksync(g: &MeasurementGraph, k: usize) -> Result<SyncEstimate> {
    check_k(g, k)?;
    let h = build_measurement_matrix(g, 1.0);
    estimate_from_pairs(degree_normalized_eig(&h, k, DEFAULT_TOL)?, Solver::EigR)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpBmConfig {
    /// Factor rank `r ≥ k`; `None` means `k + 2`.
    pub rank: Option<usize>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for SdpBmConfig {
    fn default() -> Self {
        Self {
            rank: None,
            max_iters: 1000,
            rel_tol: 1e-8,
            seed: 0,
        }
    }
}

/// Normalizes each row of `w` to unit norm; a zero row is replaced by `fallback`'s.
fn normalize_rows(w: &mut DMatrix<Complex64>, fallback: &DMatrix<Complex64>) {
    for i in 0..w.nrows() {
        let nrm = w.row(i).norm();
        if nrm > 0.0 && nrm.is_finite() {
            let mut row = w.row_mut(i);
            row /= Complex64::new(nrm, 0.0);
        } else {
            w.set_row(i, &fallback.row(i));
        }
    }
}

/// `SDP-BM`: maximizes `trace(HΥ)` over `Υ = VV*` with unit-norm rows of the
/// `n × r` factor `V`, then extracts angles from the top-k eigenvectors of `Υ`.
///
/// The iteration is `V ← rownormalize((H + cI)V)` with `c ≥ max(0, −λ_min(H))`;
/// on the unit-diagonal feasible set the shift only adds the constant `c·n` to
/// the objective, and positive semidefiniteness makes every step an ascent step.
pub fn sdp_bm_ksync(g: &MeasurementGraph, k: usize, cfg: &SdpBmConfig) -> Result<SyncEstimate> {
    check_k(g, k)?;
    let r = cfg.rank.unwrap_or(k + 2);
    if r < k {
        return invalid(format!("Burer-Monteiro rank {r} below k = {k}"));
    }
    if !(cfg.rel_tol > 0.0) {
        return invalid("rel_tol must be positive");
    }
    let n = g.n();
    let r = r.min(n);
    let h = build_measurement_matrix(g, 1.0);

    let init = top_k_eig(&h, r, DEFAULT_TOL)?;
    let mut rng = rng::stream(cfg.seed, &[rng::TAG_SOLVER]);
    let fallback = {
        let mut f = DMatrix::from_fn(n, r, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let zero = DMatrix::from_element(n, r, Complex64::new(1.0, 0.0));
        normalize_rows(&mut f, &zero);
        f
    };
    let mut v = init.vectors.clone();
    normalize_rows(&mut v, &fallback);

    let shift = (-linalg::min_eigenvalue(&h, DEFAULT_TOL)?).max(0.0) * (1.0 + 1e-9);
    let mut objective = h.quadratic_trace(&v);
    let initial_objective = objective;
    let mut max_decrease: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let mut w = h.mul_mat(&v);
        w += &v * Complex64::new(shift, 0.0);
        normalize_rows(&mut w, &v);
        let next = h.quadratic_trace(&w);
        iterations += 1;
        let decrease = objective - next;
        if decrease > 0.0 {
            max_decrease = max_decrease.max(decrease);
        }
        debug_assert!(
            decrease <= 1e-9 * objective.abs().max(1.0),
            "Burer-Monteiro objective decreased by {decrease}"
        );
        v = w;
        let change = (next - objective).abs();
        objective = next;
        if change <= cfg.rel_tol * objective.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    // top-k eigenvectors of VV* through the r × r Gram matrix V*V
    let gram = HermitianMatrix::new(v.adjoint() * &v)?;
    let small = top_k_eig(&gram, k, DEFAULT_TOL)?;
    let mut vectors = DMatrix::zeros(n, k);
    for j in 0..k {
        let mu = small.values[j];
        if mu > 1e-14 * small.values[0].max(f64::MIN_POSITIVE) {
            let u = &v * small.vector(j) / Complex64::new(mu.sqrt(), 0.0);
            let nrm = u.norm();
            vectors.set_column(j, &(u / Complex64::new(nrm, 0.0)));
        }
    }
    let (theta_hat, degenerate_entries) = extract_angles(&vectors)?;
    Ok(SyncEstimate {
        theta_hat,
        eigenvalues: small.values,
        eigenvectors: vectors,
        solver: Solver::SdpBm,
        degenerate_entries,
        sdp: Some(SdpDiagnostics {
            iterations,
            converged,
            objective,
            initial_objective,
            shift,
            max_decrease,
        }),
    })
}

/// Runs the named solver.
pub fn solve(
    g: &MeasurementGraph,
    k: usize,
    solver: Solver,
    sdp: &SdpBmConfig,
) -> Result<SyncEstimate> {
    match solver {
        Solver::EigH => spectral_ksync(g, k),
        Solver::EigR => normalized_spectral_ksync(g, k),
        Solver::SdpBm => sdp_bm_ksync(g, k, sdp),
    }
}

/// Objective `Σ_ij e^{−iθ_i} H_ij e^{iθ_j}` of the rank-one feasible point
/// built from one angle vector.
pub fn rank_one_objective(h: &HermitianMatrix, theta: &[f64]) -> f64 {
    let u = DVector::from_iterator(
        theta.len(),
        theta.iter().map(|&t| Complex64::from_polar(1.0, t)),
    );
    u.dotc(&h.mul_vec(&u)).re
}

/// Best rank-one objective over the angle groups of an estimate.
pub fn feasible_objective(h: &HermitianMatrix, est: &SyncEstimate) -> f64 {
    est.theta_hat
        .rows()
        .iter()
        .map(|row| rank_one_objective(h, row))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Matching {
    /// Estimate `j` is compared with truth group `j`.
    #[default]
    ByIndex,
    /// Each truth group in turn takes its best unused estimate.
    Greedy,
    /// Permutation maximizing the total matched correlation (`k ≤ 8`).
    Exhaustive,
}

impl FromStr for Matching {
    type Err = SyncError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by-index" => Ok(Matching::ByIndex),
            "greedy" => Ok(Matching::Greedy),
            "exhaustive" => Ok(Matching::Exhaustive),
            _ => invalid(format!("unknown matching {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// `corr[l][j]` = correlation of truth group `l` with estimate `j`.
    pub corr: Vec<Vec<f64>>,
    /// Matched correlation per truth group.
    pub matched: Vec<f64>,
    /// `assignment[l]` = estimate matched to truth group `l`.
    pub assignment: Vec<usize>,
}

pub fn correlation_matrix(truth: &AngleGroups, est: &AngleGroups) -> Result<Vec<Vec<f64>>> {
    truth
        .rows()
        .iter()
        .map(|t| est.rows().iter().map(|e| correlation(t, e)).collect())
        .collect()
}

pub fn evaluate(truth: &AngleGroups, est: &SyncEstimate, matching: Matching) -> Result<EvalResult> {
    evaluate_angles(truth, &est.theta_hat, matching)
}

pub fn evaluate_angles(
    truth: &AngleGroups,
    est: &AngleGroups,
    matching: Matching,
) -> Result<EvalResult> {
    if truth.n() != est.n() {
        return Err(SyncError::LengthMismatch {
            expected: truth.n(),
            actual: est.n(),
        });
    }
    let k = truth.k();
    if est.k() != k {
        return invalid(format!("{} estimated groups for {k} true groups", est.k()));
    }
    let corr = correlation_matrix(truth, est)?;
    let assignment = match matching {
        Matching::ByIndex => (0..k).collect(),
        Matching::Greedy => {
            let mut used = vec![false; k];
            let mut a = Vec::with_capacity(k);
            for row in &corr {
                let j = (0..k)
                    .filter(|&j| !used[j])
                    .max_by(|&x, &y| row[x].total_cmp(&row[y]).then(y.cmp(&x)))
                    .expect("an unused estimate remains");
                used[j] = true;
                a.push(j);
            }
            a
        }
        Matching::Exhaustive => {
            if k > 8 {
                return invalid(format!(
                    "exhaustive matching over {k}! permutations is too costly; use greedy"
                ));
            }
            best_permutation(&corr)
        }
    };
    let matched = assignment
        .iter()
        .enumerate()
        .map(|(l, &j)| corr[l][j])
        .collect();
    Ok(EvalResult {
        corr,
        matched,
        assignment,
    })
}

fn best_permutation(corr: &[Vec<f64>]) -> Vec<usize> {
    let k = corr.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_score = f64::NEG_INFINITY;
    // Heap's algorithm
    let mut c = vec![0usize; k];
    let score = |p: &[usize]| p.iter().enumerate().map(|(l, &j)| corr[l][j]).sum::<f64>();
    best_score = best_score.max(score(&perm));
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let s = score(&perm);
            if s > best_score + 1e-15 {
                best_score = s;
                best = perm.clone();
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}
