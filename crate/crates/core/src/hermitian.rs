//! Dense complex Hermitian matrices and the measurement-matrix construction.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result, SyncError};
use crate::graph::MeasurementGraph;
use crate::Complex64;

/// Asymmetry accepted when wrapping an arbitrary matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Wraps a square matrix after checking conjugate symmetry to
    /// [`HERMITIAN_TOL`] (relative to the largest entry). The stored matrix is
    /// mirrored from its upper triangle so the invariant holds exactly.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols()));
        }
        let asym = max_asymmetry(&m);
        let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if asym > HERMITIAN_TOL * scale {
            return Err(SyncError::NotHermitian { asymmetry: asym });
        }
        Ok(Self::mirror_upper(m))
    }

    fn mirror_upper(mut m: DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in i + 1..n {
                m[(j, i)] = m[(i, j)].conj();
            }
        }
        Self { m }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        Self { m }
    }

    /// `Σ_l w_l · v_l v_l*`.
    pub fn sum_of_outer(n: usize, terms: &[(f64, &DVector<Complex64>)]) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for (w, v) in terms {
            m.ger(
                Complex64::new(*w, 0.0),
                v,
                &v.conjugate(),
                Complex64::new(1.0, 0.0),
            );
        }
        Self::mirror_upper(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn mul_vec(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.m * v
    }

    pub fn mul_mat(&self, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        &self.m * v
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            m: self.m.map(|c| c * s),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(SyncError::LengthMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            m: &self.m - &other.m,
        })
    }

    /// `D^{-1/2} H D^{-1/2}` for a positive diagonal `d`.
    pub fn congruence_scaled(&self, d_inv_sqrt: &[f64]) -> Self {
        let n = self.dim();
        let mut m = self.m.clone();
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] *= d_inv_sqrt[i] * d_inv_sqrt[j];
            }
        }
        Self { m }
    }

    /// `trace(H V V*) = Σ_ij H_ij (V V*)_ji`, real for Hermitian `H`.
    pub fn quadratic_trace(&self, v: &DMatrix<Complex64>) -> f64 {
        let hv = &self.m * v;
        v.iter()
            .zip(hv.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Largest `|H_ij − conj(H_ji)|`.
    pub fn asymmetry(&self) -> f64 {
        max_asymmetry(&self.m)
    }
}

fn max_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `H_ij = e^{iΘ_ij}` on edges, `H_ji = conj(H_ij)`, zero off the edge set and
/// `diagonal` on the diagonal.
pub fn build_measurement_matrix(g: &MeasurementGraph, diagonal: f64) -> HermitianMatrix {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(diagonal, 0.0);
    }
    for e in g.edges() {
        let h = Complex64::from_polar(1.0, e.theta);
        m[(e.i, e.j)] = h;
        m[(e.j, e.i)] = h.conj();
    }
    HermitianMatrix { m }
}
