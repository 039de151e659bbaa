//! Heterogeneous angular synchronization over SO(2).
//!
//! `k` unknown groups of angles are observed through one measurement graph
//! whose every edge carries the offset of exactly one (unknown) group, or
//! pure noise. The crate provides:
//!
//! * synthetic generative models (Erdős–Rényi and Barabási–Albert mixtures)
//!   and the closed-form theoretical quantities used to check them,
//! * spectral (`EIG-H`), degree-normalized spectral (`EIG-R`) and low-rank
//!   Burer–Monteiro semidefinite (`SDP-BM`) solvers,
//! * iterative graph disentangling that splits the edge set into per-group
//!   good subgraphs and a pooled outlier subgraph,
//! * a two-configuration graph-realization pipeline built on patch alignment,
//! * a Monte-Carlo sweep harness that backs the `ksync` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angles;
pub mod disentangle;
pub mod error;
pub mod genmodel;
pub mod graph;
pub mod grp;
pub mod harness;
pub mod hermitian;
pub mod linalg;
pub mod rng;
pub mod sync;

pub use nalgebra::Complex;

pub type Complex64 = Complex<f64>;

pub use angles::{circular_distance, correlation, wrap_angle, AngleGroups, UnitVectorRep};
pub use error::{Result, SyncError};
pub use graph::{Edge, EdgeLabel, MeasurementGraph};
pub use hermitian::{build_measurement_matrix, HermitianMatrix};
pub use linalg::{degree_normalized_eig, spectral_norm, top_k_eig, EigenPairs};
pub use sync::{Solver, SyncEstimate};
