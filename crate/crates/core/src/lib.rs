//! Estimation of the jump set of a multivariate signal observed with noise on a
//! regular grid, and inference of its geometry and topology.
//!
//! The pipeline is:
//!
//! 1. [`synth`] builds piecewise signals with an analytically known jump set and
//!    samples them on the `N^d` lattice with seeded Gaussian noise.
//! 2. [`estimator`] averages observations on an `h`-grid, computes the local
//!    range of the histogram over Euclidean `r`-offsets of each cell and keeps the
//!    cells whose range reaches `l/2`.
//! 3. [`geometry`] provides exact distance transforms, offsets and Hausdorff
//!    distances on cubical masks.
//! 4. [`topology`] computes persistence diagrams of offset filtrations of a mask,
//!    Betti numbers regularized by survival up to `kappa`, and bottleneck
//!    distances.
//! 5. [`harness`] runs seeded Monte Carlo experiments and the oracle suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod model;
pub mod oracle;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};
pub use model::{
    calibrate_h, calibrate_kappa, calibrate_r, CalibrationParams, CubicalMask, ObservationGrid, PersistenceDiagram,
    ShapeSpec, SnRule,
};
