//! Angle groups on the circle and their unit-vector representations.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;

use crate::error::{invalid, Result, SyncError};
use crate::Complex64;

/// Reduce an angle to the canonical range `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance on the circle between two angles, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(wrap_angle(b - a)).min(PI)
}

/// `k` vectors of `n` angles each, stored in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGroups {
    rows: Vec<Vec<f64>>,
}

impl AngleGroups {
    /// Builds groups from rows that must already lie in `[0, 2π)`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(&rows)?;
        for (l, row) in rows.iter().enumerate() {
            if let Some((i, &t)) = row
                .iter()
                .enumerate()
                .find(|(_, t)| !(0.0..TAU).contains(*t))
            {
                return invalid(format!("angle[{l}][{i}] = {t} outside [0, 2π)"));
            }
        }
        Ok(Self { rows })
    }

    /// Builds groups from arbitrary finite angles, reducing each mod 2π.
    pub fn from_wrapped(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(&rows)?;
        if rows.iter().flatten().any(|t| !t.is_finite()) {
            return invalid("non-finite angle");
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(wrap_angle).collect())
            .collect();
        Ok(Self { rows })
    }

    fn check_shape(rows: &[Vec<f64>]) -> Result<()> {
        if rows.is_empty() {
            return invalid("at least one angle group is required");
        }
        let n = rows[0].len();
        if n == 0 {
            return invalid("angle groups must contain at least one node");
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(SyncError::LengthMismatch {
                expected: n,
                actual: r.len(),
            });
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows[0].len()
    }

    pub fn group(&self, l: usize) -> &[f64] {
        &self.rows[l]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    /// Entry-wise map onto the unit circle, scaled so each vector has unit norm.
    pub fn to_unit_vectors(&self) -> UnitVectorRep {
        let scale = 1.0 / (self.n() as f64).sqrt();
        let z = self
            .rows
            .iter()
            .map(|row| {
                DVector::from_iterator(
                    row.len(),
                    row.iter().map(|&t| Complex64::from_polar(scale, t)),
                )
            })
            .collect();
        UnitVectorRep { z }
    }
}

/// Complex unit-norm representations `z_{l,i} = e^{iθ_{l,i}} / √n`.
#[derive(Debug, Clone)]
pub struct UnitVectorRep {
    pub z: Vec<DVector<Complex64>>,
}

impl UnitVectorRep {
    pub fn k(&self) -> usize {
        self.z.len()
    }

    /// Recovers the angles `arg(√n · z_{l,i}) mod 2π`.
    pub fn to_angles(&self) -> AngleGroups {
        let rows = self
            .z
            .iter()
            .map(|v| v.iter().map(|c| wrap_angle(c.arg())).collect())
            .collect();
        AngleGroups { rows }
    }
}

/// Hermitian inner product `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    a.dotc(b)
}

/// `|⟨z, ẑ⟩|` between the unit-circle representations of two angle vectors.
///
/// Invariant to a global additive phase on either argument; equals 1 exactly
/// when the two vectors agree up to a constant shift.
pub fn correlation(theta: &[f64], theta_hat: &[f64]) -> Result<f64> {
    if theta.len() != theta_hat.len() {
        return Err(SyncError::LengthMismatch {
            expected: theta.len(),
            actual: theta_hat.len(),
        });
    }
    if theta.is_empty() {
        return invalid("correlation of empty angle vectors");
    }
    let sum: Complex64 = theta
        .iter()
        .zip(theta_hat)
        .map(|(&a, &b)| Complex64::from_polar(1.0, b - a))
        .sum();
    Ok((sum.norm() / theta.len() as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_vectors_identity_case() {
        let g = AngleGroups::new(vec![vec![0.0]]).unwrap();
        let z = g.to_unit_vectors();
        assert_eq!(z.z[0][0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn unit_vectors_quarter_turns() {
        let g = AngleGroups::new(vec![vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0]]).unwrap();
        let z = &g.to_unit_vectors().z[0];
        let want = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, -0.5),
        ];
        for (a, b) in z.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_vectors_constant_row() {
        let g = AngleGroups::new(vec![vec![0.1, 0.2, 0.3], vec![PI, PI, PI]]).unwrap();
        let z = &g.to_unit_vectors().z[1];
        let s = 1.0 / 3f64.sqrt();
        for c in z.iter() {
            assert!((c - Complex64::new(-s, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_out_of_range_and_ragged() {
        assert!(AngleGroups::new(vec![vec![TAU]]).is_err());
        assert!(AngleGroups::new(vec![vec![-0.1]]).is_err());
        assert!(AngleGroups::new(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(AngleGroups::new(vec![]).is_err());
        let w = AngleGroups::from_wrapped(vec![vec![-0.5, TAU + 1.0]]).unwrap();
        assert!((w.group(0)[0] - (TAU - 0.5)).abs() < 1e-15);
        assert!((w.group(0)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_tiny_negative() {
        assert_eq!(wrap_angle(-1e-18), 0.0);
        assert!(wrap_angle(-1e-18) < TAU);
    }

    #[test]
    fn circular_distance_examples() {
        assert!((circular_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert_eq!(circular_distance(1.3, 1.3), 0.0);
        assert!((circular_distance(0.0, PI) - PI).abs() < 1e-15);
    }

    #[test]
    fn correlation_examples() {
        let t = [0.3, 1.2, 4.0, 5.5];
        assert!((correlation(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        let shifted: Vec<f64> = t.iter().map(|x| wrap_angle(x + 2.2)).collect();
        assert!((correlation(&t, &shifted).unwrap() - 1.0).abs() < 1e-14);
        assert!(correlation(&[0.0, 0.0], &[0.0, PI]).unwrap() < 1e-15);
        assert!(matches!(
            correlation(&[0.0], &[0.0, 1.0]),
            Err(SyncError::LengthMismatch { .. })
        ));
    }

    fn angle() -> impl Strategy<Value = f64> {
        0.0..TAU
    }

    proptest! {
        #[test]
        fn circular_distance_is_a_metric(a in angle(), b in angle(), c in angle()) {
            let ab = circular_distance(a, b);
            prop_assert!((0.0..=PI).contains(&ab));
            prop_assert!((ab - circular_distance(b, a)).abs() < 1e-15);
            prop_assert_eq!(circular_distance(a, a), 0.0);
            prop_assert!(ab <= circular_distance(a, c) + circular_distance(c, b) + 1e-12);
        }

        #[test]
        fn correlation_symmetric_and_phase_invariant(
            pairs in prop::collection::vec((angle(), angle()), 1..40),
            shift in -10.0f64..10.0,
        ) {
            let (t, u): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let c = correlation(&t, &u).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!((c - correlation(&u, &t).unwrap()).abs() < 1e-12);
            let s: Vec<f64> = u.iter().map(|x| wrap_angle(x + shift)).collect();
            prop_assert!((c - correlation(&t, &s).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn unit_vector_round_trip(rows in prop::collection::vec(prop::collection::vec(angle(), 7), 1..4)) {
            let g = AngleGroups::new(rows).unwrap();
            let z = g.to_unit_vectors();
            for v in &z.z {
                prop_assert!((v.norm() - 1.0).abs() < 1e-12);
                for c in v.iter() {
                    prop_assert!((c.norm() - 1.0 / 7f64.sqrt()).abs() < 1e-12);
                }
            }
            let back = z.to_angles();
            for (r, s) in g.rows().iter().zip(back.rows()) {
                for (a, b) in r.iter().zip(s) {
                    prop_assert!(circular_distance(*a, *b) < 1e-12);
                }
            }
        }
    }
}
