//! Top-k eigenpairs of complex Hermitian matrices.
//!
//! Small matrices go straight to a dense Hermitian eigendecomposition. Larger
//! ones use a thick-restart Lanczos iteration with full reorthogonalization and
//! Rayleigh–Ritz extraction; if that exhausts its matrix-product budget the
//! dense route is used instead (unless disabled through [`EigOptions`]).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result, SyncError};
use crate::hermitian::{HermitianMatrix, HERMITIAN_TOL};
use crate::Complex64;

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative eigengap below which two eigenvalues are reported as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Matrices up to this size are always decomposed densely.
const DENSE_CUTOFF: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigMethod {
    /// Krylov for large inputs, dense for small ones or after a Krylov failure.
    Auto,
    Dense,
    /// Krylov only; a budget overrun is reported as an error.
    Krylov,
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub tol: f64,
    pub method: EigMethod,
    /// Matrix-vector product budget for the Krylov route; `None` means `10·n`.
    pub max_matvecs: Option<usize>,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            method: EigMethod::Auto,
            max_matvecs: None,
        }
    }
}

impl EigOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Leading eigenpairs, values descending, vectors as unit-norm columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
    /// `‖H v_j − λ_j v_j‖₂` per pair.
    pub residuals: Vec<f64>,
    /// Indices `j` with `λ_j − λ_{j+1} < 1e-12·‖H‖₂`.
    pub ties: Vec<usize>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> DVector<Complex64> {
        self.vectors.column(j).into_owned()
    }
}

/// The `k` algebraically largest eigenpairs of `h`.
pub fn top_k_eig(h: &HermitianMatrix, k: usize, tol: f64) -> Result<EigenPairs> {
    top_k_eig_with(h, k, &EigOptions::with_tol(tol))
}

pub fn top_k_eig_with(h: &HermitianMatrix, k: usize, opts: &EigOptions) -> Result<EigenPairs> {
    let n = h.dim();
    if k == 0 || k > n {
        return invalid(format!("requested {k} eigenpairs of a {n}x{n} matrix"));
    }
    if !(opts.tol > 0.0) {
        return invalid("eigen tolerance must be positive");
    }
    let scale = h.as_matrix().iter().map(|c| c.norm()).fold(1.0, f64::max);
    let asym = h.asymmetry();
    if asym > HERMITIAN_TOL * scale {
        return Err(SyncError::NotHermitian { asymmetry: asym });
    }
    let mut pairs = match opts.method {
        EigMethod::Dense => dense_top_k(h, k)?,
        EigMethod::Krylov => krylov_top_k(h, k, opts)?,
        EigMethod::Auto if n <= DENSE_CUTOFF => dense_top_k(h, k)?,
        EigMethod::Auto => match krylov_top_k(h, k, opts) {
            Ok(p) => p,
            Err(SyncError::NoConvergence {
                iterations,
                residual,
            }) => {
                log::debug!(
                    "Krylov stalled after {iterations} products (residual {residual:e}); using dense solver"
                );
                dense_top_k(h, k)?
            }
            Err(e) => return Err(e),
        },
    };
    canonicalize_phases(&mut pairs.vectors);
    Ok(pairs)
}

/// `max |λ(M)|`.
pub fn spectral_norm(m: &HermitianMatrix, tol: f64) -> Result<f64> {
    let top = top_k_eig(m, 1, tol)?.values[0];
    let bottom = top_k_eig(&m.scaled(-1.0), 1, tol)?.values[0];
    Ok(top.abs().max(bottom.abs()))
}

/// Smallest eigenvalue of `m`.
pub fn min_eigenvalue(m: &HermitianMatrix, tol: f64) -> Result<f64> {
    Ok(-top_k_eig(&m.scaled(-1.0), 1, tol)?.values[0])
}

/// Degrees `D_ii = Σ_j |H_ij|`, including the diagonal term.
pub fn abs_row_sums(h: &HermitianMatrix) -> Vec<f64> {
    let m = h.as_matrix();
    (0..h.dim())
        .map(|i| m.row(i).iter().map(|c| c.norm()).sum())
        .collect()
}

/// Top-k eigenpairs of `R = D⁻¹H` computed through the similar Hermitian
/// matrix `S = D^{-1/2} H D^{-1/2}`.
///
/// Values are those of `S`. Vectors are `D^{-1/2} u` rescaled to unit norm;
/// they are eigenvectors of `R` and in general not mutually orthogonal.
/// Residuals are `‖R v − λ v‖₂`.
pub fn degree_normalized_eig(h: &HermitianMatrix, k: usize, tol: f64) -> Result<EigenPairs> {
    let d = abs_row_sums(h);
    if let Some(node) = d.iter().position(|&x| !(x > 0.0)) {
        return Err(SyncError::IsolatedNode { node });
    }
    let d_inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let s = h.congruence_scaled(&d_inv_sqrt);
    let mut pairs = top_k_eig(&s, k, tol)?;
    let n = h.dim();
    for j in 0..pairs.len() {
        let mut col = pairs.vectors.column_mut(j);
        for i in 0..n {
            col[i] *= d_inv_sqrt[i];
        }
        let nrm = col.norm();
        col /= Complex64::new(nrm, 0.0);
    }
    canonicalize_phases(&mut pairs.vectors);
    let hv = h.mul_mat(&pairs.vectors);
    for j in 0..pairs.len() {
        let lam = pairs.values[j];
        pairs.residuals[j] = (0..n)
            .map(|i| (hv[(i, j)] / d[i] - pairs.vectors[(i, j)] * lam).norm_sqr())
            .sum::<f64>()
            .sqrt();
    }
    Ok(pairs)
}

/// `sin` of the angle between two unit vectors, `√(1 − |⟨a, b⟩|²)`.
pub fn sin_angle(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    let c = a.dotc(b).norm() / (a.norm() * b.norm());
    (1.0 - (c * c).min(1.0)).sqrt()
}

fn ties_of(values: &[f64], norm: f64) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] - w[1] < TIE_TOL * norm)
        .map(|(j, _)| j)
        .collect()
}

fn residuals_of(h: &HermitianMatrix, values: &[f64], vectors: &DMatrix<Complex64>) -> Vec<f64> {
    let hv = h.mul_mat(vectors);
    values
        .iter()
        .enumerate()
        .map(|(j, &lam)| (hv.column(j) - vectors.column(j) * Complex64::new(lam, 0.0)).norm())
        .collect()
}

/// Rotates each column so its largest-modulus entry is real and positive.
fn canonicalize_phases(vectors: &mut DMatrix<Complex64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0;
        let mut best_mod = -1.0;
        for (i, c) in col.iter().enumerate() {
            let m = c.norm();
            if m > best_mod * (1.0 + 1e-9) {
                best = i;
                best_mod = m;
            }
        }
        if best_mod > 0.0 {
            let phase = col[best].conj() / best_mod;
            col *= phase;
        }
    }
}

fn dense_top_k(h: &HermitianMatrix, k: usize) -> Result<EigenPairs> {
    let n = h.dim();
    let eig = h
        .as_matrix()
        .clone()
        .try_symmetric_eigen(1e-15, 100 * n.max(10))
        .ok_or(SyncError::NoConvergence {
            iterations: 100 * n.max(10),
            residual: f64::NAN,
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let norm = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])]);
    let residuals = residuals_of(h, &values, &vectors);
    Ok(EigenPairs {
        ties: ties_of(&values, norm),
        values,
        vectors,
        residuals,
    })
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

/// Two passes of classical Gram–Schmidt against `basis`.
fn orthogonalize(v: &mut DVector<Complex64>, basis: &[DVector<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dotc(v);
            v.axpy(-c, q, Complex64::new(1.0, 0.0));
        }
    }
}

fn krylov_top_k(h: &HermitianMatrix, k: usize, opts: &EigOptions) -> Result<EigenPairs> {
    let n = h.dim();
    let max_basis = n.min((2 * k + 24).max(48));
    let keep = (k + 8).min(max_basis / 2).max(k);
    let budget = opts.max_matvecs.unwrap_or(10 * n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b73_796e_6300_0000 ^ n as u64);

    let mut q: Vec<DVector<Complex64>> = Vec::with_capacity(max_basis);
    let mut hq: Vec<DVector<Complex64>> = Vec::with_capacity(max_basis);
    let mut candidate = random_vector(&mut rng, n);
    let mut matvecs = 0usize;
    let mut norm_est = 0.0f64;
    let mut best_residual = f64::INFINITY;

    loop {
        // expand the subspace
        while q.len() < max_basis {
            let before = candidate.norm();
            orthogonalize(&mut candidate, &q);
            let mut nrm = candidate.norm();
            if !(nrm > 1e-8 * before) || before == 0.0 {
                // invariant subspace reached; continue from a fresh direction
                candidate = random_vector(&mut rng, n);
                let before = candidate.norm();
                orthogonalize(&mut candidate, &q);
                nrm = candidate.norm();
                if !(nrm > 1e-8 * before) {
                    break;
                }
            }
            candidate /= Complex64::new(nrm, 0.0);
            let hc = h.mul_vec(&candidate);
            matvecs += 1;
            q.push(candidate);
            candidate = hc.clone();
            hq.push(hc);
        }

        // Rayleigh–Ritz on the current basis
        let m = q.len();
        let qm = DMatrix::from_columns(&q);
        let hqm = DMatrix::from_columns(&hq);
        let t = qm.adjoint() * &hqm;
        let t = (&t + t.adjoint()) * Complex64::new(0.5, 0.0);
        let small = t
            .try_symmetric_eigen(1e-15, 1000 * m)
            .ok_or(SyncError::NoConvergence {
                iterations: matvecs,
                residual: best_residual,
            })?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| small.eigenvalues[b].total_cmp(&small.eigenvalues[a]));
        norm_est = small
            .eigenvalues
            .iter()
            .fold(norm_est, |acc, x| acc.max(x.abs()));

        let want = k.min(m);
        let sel = DMatrix::from_fn(m, keep.min(m), |r, c| small.eigenvectors[(r, order[c])]);
        let ritz = &qm * &sel;
        let h_ritz = &hqm * &sel;
        let mut residuals = Vec::with_capacity(want);
        let mut first_bad = None;
        for (j, &oj) in order.iter().enumerate().take(want) {
            let lam = small.eigenvalues[oj];
            let r = h_ritz.column(j) - ritz.column(j) * Complex64::new(lam, 0.0);
            let rn = r.norm();
            if rn > opts.tol * norm_est && first_bad.is_none() {
                first_bad = Some((j, r));
            }
            residuals.push(rn);
        }
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        best_residual = best_residual.min(worst);

        let full_space = m == n;
        if (first_bad.is_none() || full_space) && want == k {
            let values: Vec<f64> = (0..k).map(|j| small.eigenvalues[order[j]]).collect();
            let vectors = ritz.columns(0, k).into_owned();
            return Ok(EigenPairs {
                ties: ties_of(&values, norm_est),
                values,
                vectors,
                residuals,
            });
        }
        if matvecs >= budget || m < k {
            return Err(SyncError::NoConvergence {
                iterations: matvecs,
                residual: best_residual,
            });
        }

        // thick restart: keep the leading Ritz vectors, continue from a residual
        let kept = keep.min(m);
        q = (0..kept).map(|c| ritz.column(c).into_owned()).collect();
        hq = (0..kept).map(|c| h_ritz.column(c).into_owned()).collect();
        candidate = match first_bad {
            Some((_, r)) => r,
            None => random_vector(&mut rng, n),
        };
    }
}
