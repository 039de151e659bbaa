//! Closed-form spectral quantities and recovery guarantees of the mixture model.
//!
//! Indices follow the usual 1-based convention of the formulas: `p_1 > … > p_k`
//! with `p_{k+1} = 0`, partial sums `S_m = Σ_{j≤m} p_j` with `S_0 = 0`, and
//! `ψ_0 = 0`.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use super::MixtureParams;
use crate::error::{invalid, Result};

/// Upper bound on the entrywise magnitude of `Re(R)` and `Im(R)`:
/// `|R_ij| ≤ 1 + λ Σ p_l ≤ 2`.
pub const SIGMA_BAR_UPPER: f64 = 2.0;

/// Variance proxy `C(λ, p_1, …, p_k)` of the perturbation `R = H − E[H]`:
///
/// `Σ_l 2p_lλ[(1 − p_lλ)² + (Σ_{l'≠l} p_{l'}λ)²] + ηλ[½ + (Σ p_lλ)²] + (1 − λ)(Σ p_lλ)²`.
///
/// Only the formula is evaluated; `p` need not be ordered.
pub fn noise_constant_c(lambda: f64, p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum::<f64>() * lambda;
    let eta = 1.0 - p.iter().sum::<f64>();
    let signal: f64 = p
        .iter()
        .map(|&pl| {
            let others = total - pl * lambda;
            2.0 * pl * lambda * ((1.0 - pl * lambda).powi(2) + others.powi(2))
        })
        .sum();
    signal + eta * lambda * (0.5 + total * total) + (1.0 - lambda) * total * total
}

/// The two leading eigenvalues of `E[H] = nλ(p_1 z_1z_1* + p_2 z_2z_2*)` for
/// unit `z_1, z_2` with `|⟨z_1, z_2⟩| = inner`.
///
/// Requires `p1 > p2` and `inner ∈ [0, 1]`; then `λ̃_2 ≤ np_2λ ≤ np_1λ ≤ λ̃_1`.
pub fn closed_form_eigs_k2(n: usize, lambda: f64, p1: f64, p2: f64, inner: f64) -> (f64, f64) {
    let n = n as f64;
    let a = n * lambda * p1;
    let b = n * lambda * p2;
    let disc = ((a - b).powi(2) + 4.0 * a * b * inner * inner).sqrt();
    let l1 = (a + b + disc) / 2.0;
    let l2 = (a + b - disc) / 2.0;
    let slack = 1e-12 * (a + b).abs().max(1.0);
    debug_assert!(l2 <= b + slack && b <= a + slack && a <= l1 + slack);
    (l1, l2)
}

/// Which hypotheses of the k-group recovery guarantee hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionFlags {
    /// `δ ≤ √(2ψ_j) ≤ ½` for `1 ≤ j ≤ k−1`.
    pub sqrt_psi_window: bool,
    /// `ψ_1 ≤ ψ_2 ≤ … ≤ ψ_{k−1}`.
    pub psi_monotone: bool,
    /// `ψ_j ≤ μ²((p_j − p_{j+1}) / (2E_{j+1}))²` for `1 ≤ j ≤ k−2`.
    pub psi_gap: bool,
    /// `ψ_{k−1} ≤ μ² min{(p_k / 2Ẽ)², ((p_{k−1} − p_k) / 2E_k)²}`.
    pub psi_last: bool,
}

impl ConditionFlags {
    /// Hypotheses of the eigenvalue deflation bounds (first two flags).
    pub fn deflation(&self) -> bool {
        self.sqrt_psi_window && self.psi_monotone
    }

    pub fn all(&self) -> bool {
        self.deflation() && self.psi_gap && self.psi_last
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub p: Vec<f64>,
    pub delta: f64,
    pub mu: f64,
    pub epsilon: f64,
    /// `C(λ, p_1, …, p_k)`.
    pub c: f64,
    /// High-probability bound `(2+ε)·6·√(2Cn)` on `‖H − E[H]‖₂`.
    pub spectral_norm_bound: f64,
    /// Upper bound used for `σ̄` (see [`SIGMA_BAR_UPPER`]).
    pub sigma_bar: f64,
    /// Failure probability of the norm bound, with `c_ε` left symbolic.
    pub probability: String,
    /// For `k = 2`: closed-form `(λ̃_1, λ̃_2)` at overlap `δ`; these are the
    /// extreme values of the two leading eigenvalues over `δ`-orthogonal pairs.
    pub closed_eigs: Option<(f64, f64)>,
    /// For `k = 2`: lower bounds on `|⟨z_1, ṽ_1⟩|²` and `|⟨z_2, ṽ_2⟩|²`.
    pub expected_eigvec_bounds: Option<(f64, f64)>,
    /// For `k = 2`: two-term lower bounds on `|⟨z_1, v_1⟩|²`, `|⟨z_2, v_2⟩|²`.
    pub bisync_bounds: Option<(f64, f64)>,
    /// For `k = 2`: smallest `n` for which the two-group bounds apply.
    pub bisync_min_n: Option<f64>,
    /// `S_0, …, S_k`.
    pub s: Vec<f64>,
    /// `C_2, …, C_k` (index 0 holds `C_2`).
    pub c_j: Vec<f64>,
    /// `ψ_1, …, ψ_k`.
    pub psi: Vec<f64>,
    /// `E_2, …, E_k`.
    pub e_j: Vec<f64>,
    /// `Ẽ`.
    pub e_tilde: f64,
    /// `(l_j, u_j)` for `j = 1..k`.
    pub deflation_slack: Vec<(f64, f64)>,
    /// `[np_jλ − l_j, np_jλ + u_j]` for `j = 1..k`.
    pub deflation_bounds: Vec<(f64, f64)>,
    /// `1 − ψ_j`: lower bounds on `|⟨ṽ_j, z_j⟩|²`.
    pub expected_corr_bounds: Vec<f64>,
    /// `1 − (√ψ_j + μ/(1−μ))²`: lower bounds on `|⟨v_j, z_j⟩|²`.
    pub thm_bounds: Vec<f64>,
    /// Smallest `n` for which the k-group bounds apply.
    pub min_n: f64,
    pub n_condition: bool,
    pub flags: ConditionFlags,
}

/// Evaluates every bound of the two-group and k-group analyses.
pub fn theory_bounds(
    params: &MixtureParams,
    delta: f64,
    mu: f64,
    epsilon: f64,
) -> Result<TheoryReport> {
    if params.p.windows(2).any(|w| w[0] <= w[1]) {
        return invalid(format!("p = {:?} is not strictly decreasing", params.p));
    }
    if !(0.0..1.0).contains(&delta) {
        return invalid(format!("delta = {delta} outside [0, 1)"));
    }
    if !(0.0..=0.5).contains(&mu) {
        return invalid(format!("mu = {mu} outside [0, 1/2]"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return invalid(format!(
            "epsilon = {epsilon} must be finite and non-negative"
        ));
    }

    let k = params.k();
    let n = params.n;
    let nf = n as f64;
    let lambda = params.lambda;
    // 1-based with p(k+1) = 0
    let p = |j: usize| -> f64 {
        if j >= 1 && j <= k {
            params.p[j - 1]
        } else {
            0.0
        }
    };
    let kf = (k as f64) - 1.0; // the recurring (k−1)

    let c = noise_constant_c(lambda, &params.p);
    let spectral_norm_bound = (2.0 + epsilon) * 6.0 * (2.0 * c * nf).sqrt();
    let probability = format!(
        "1 - {}*exp(-{:e}/c_eps)",
        3 * n,
        8.0 * c * nf / (SIGMA_BAR_UPPER * SIGMA_BAR_UPPER)
    );

    let mut s = vec![0.0; k + 1];
    for m in 1..=k {
        s[m] = s[m - 1] + p(m);
    }

    let mut psi = vec![0.0; k + 1]; // psi[0] = ψ_0 = 0
    psi[1] = p(2) * kf / (p(1) - p(2)) * delta;
    let mut c_j = Vec::with_capacity(k.saturating_sub(1));
    for j in 2..=k {
        let jf = j as f64;
        let num = p(j + 1) * kf * SQRT_2
            + 4.0
                * SQRT_2
                * (2.0 * s[j - 1]
                    + SQRT_2 * (jf - 1.0) * (jf - 2.0) * (p(1) - p(j))
                    + (jf - 1.0) / 2.0 * (p(2) * kf - 2.0 * p(j + 1)));
        let cj = num / (p(j) - p(j + 1));
        c_j.push(cj);
        psi[j] = cj * psi[j - 1].sqrt();
    }

    let e = |j: usize| -> f64 {
        let jf = j as f64;
        4.0 * SQRT_2 * s[j - 2]
            + 8.0 * (jf - 2.0) * (jf - 3.0) * (p(1) - p(j - 1))
            + 4.0 * SQRT_2 * p(2) * kf * (jf - 2.0)
            + 4.0 * (jf - 1.0) * (p(1) - p(j + 1))
            + p(j + 1) * kf
    };
    let e_j: Vec<f64> = (2..=k).map(e).collect();
    let e_tilde = 4.0 * SQRT_2 * s[k - 1]
        + 8.0 * kf * (kf - 1.0) * (p(1) - p(k))
        + 4.0 * SQRT_2 * p(2) * kf * kf;

    let mut deflation_slack = Vec::with_capacity(k);
    let mut deflation_bounds = Vec::with_capacity(k);
    for j in 1..=k {
        let jf = j as f64;
        let l = 4.0
            * lambda
            * (2.0 * psi[j - 1]).sqrt()
            * (nf * s[j - 1]
                + SQRT_2 * (jf - 1.0) * (jf - 2.0) * (nf * p(1) - nf * p(j))
                + nf * p(2) * kf * (jf - 1.0));
        let u = 4.0
            * (1..j)
                .map(|i| (nf * p(i) - nf * p(j + 1)) * lambda * psi[i].sqrt())
                .sum::<f64>()
            + nf * p(j + 1) * lambda * kf * delta;
        let centre = nf * p(j) * lambda;
        deflation_slack.push((l, u));
        deflation_bounds.push((centre - l, centre + u));
    }

    let ratio = mu / (1.0 - mu);
    let expected_corr_bounds: Vec<f64> = (1..=k).map(|j| 1.0 - psi[j]).collect();
    let thm_bounds: Vec<f64> = (1..=k)
        .map(|j| 1.0 - (psi[j].sqrt() + ratio).powi(2))
        .collect();

    let min_gap = (1..=k)
        .map(|j| p(j) - p(j + 1))
        .fold(f64::INFINITY, f64::min);
    let min_n =
        288.0 * (2.0 + epsilon).powi(2) * c / (mu * mu * lambda * lambda * min_gap * min_gap);

    let flags = if k == 1 {
        ConditionFlags {
            sqrt_psi_window: true,
            psi_monotone: true,
            psi_gap: true,
            psi_last: true,
        }
    } else {
        let window = (1..k).all(|j| {
            let r = (2.0 * psi[j]).sqrt();
            delta <= r && r <= 0.5
        });
        let monotone = (1..k - 1).all(|j| psi[j] <= psi[j + 1]);
        let gap = (1..k.saturating_sub(1))
            .all(|j| psi[j] <= mu * mu * ((p(j) - p(j + 1)) / (2.0 * e(j + 1))).powi(2));
        let last_cap = mu
            * mu
            * (p(k) / (2.0 * e_tilde))
                .powi(2)
                .min(((p(k - 1) - p(k)) / (2.0 * e(k))).powi(2));
        ConditionFlags {
            sqrt_psi_window: window,
            psi_monotone: monotone,
            psi_gap: gap,
            psi_last: psi[k - 1] <= last_cap,
        }
    };

    let (closed_eigs, expected_eigvec_bounds, bisync_bounds, bisync_min_n) = if k == 2 {
        let (p1, p2) = (p(1), p(2));
        let root = ((p1 - p2).powi(2) + 4.0 * p1 * p2 * delta * delta).sqrt();
        let b1 = (p1 - p2) / root;
        let b2 = (p1 * (1.0 - delta * delta) - p2) / root;
        let noise = (2.0 * mu / (1.0 - mu)).sqrt();
        let two_term = |b: f64| 1.0 - (noise + (1.0 - b).max(0.0).sqrt()).powi(2);
        let denom = mu * mu * lambda * lambda * (p1 - p2).powi(2).min(p2 * p2);
        (
            Some(closed_form_eigs_k2(n, lambda, p1, p2, delta)),
            Some((b1, b2)),
            Some((two_term(b1), two_term(b2))),
            Some(72.0 * (2.0 + epsilon).powi(2) * c / denom),
        )
    } else {
        (None, None, None, None)
    };

    Ok(TheoryReport {
        n,
        k,
        lambda,
        p: params.p.clone(),
        delta,
        mu,
        epsilon,
        c,
        spectral_norm_bound,
        sigma_bar: SIGMA_BAR_UPPER,
        probability,
        closed_eigs,
        expected_eigvec_bounds,
        bisync_bounds,
        bisync_min_n,
        s,
        c_j,
        psi: psi[1..].to_vec(),
        e_j,
        e_tilde,
        deflation_slack,
        deflation_bounds,
        expected_corr_bounds,
        thm_bounds,
        n_condition: nf >= min_n,
        min_n,
        flags,
    })
}
