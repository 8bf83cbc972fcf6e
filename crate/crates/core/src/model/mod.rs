//! Shared domain types and the calibration rules for `h`, `r` and `kappa`.

mod calibration;
mod diagram;
mod grid;
mod mask;
mod shape;

pub use calibration::{
    calibrate_h, calibrate_kappa, calibrate_r, cells_per_axis, CalibrationParams, CalibrationRequest, SnRule,
};
pub use diagram::{DiagramPoint, PersistenceDiagram};
pub use grid::ObservationGrid;
pub use mask::CubicalMask;
pub use shape::{pyramid_faces, Geometry, Modulus, Piece, Region, ShapeSpec};

/// Row-major multi-index helpers for `side^dim` lattices. Axis 0 varies slowest.
pub mod lattice {
    /// `side^dim`, or `None` on overflow.
    pub fn volume(side: usize, dim: usize) -> Option<usize> {
        (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(side))
    }

    pub fn unravel(mut index: usize, side: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % side;
            index /= side;
        }
    }

    pub fn ravel(coords: &[usize], side: usize) -> usize {
        coords.iter().fold(0, |acc, &c| acc * side + c)
    }

    /// Iterate every multi-index of the lattice in row-major order.
    pub fn indices(side: usize, dim: usize) -> impl Iterator<Item = Vec<usize>> {
        let total = volume(side, dim).unwrap_or(0);
        (0..total).map(move |i| {
            let mut c = vec![0; dim];
            unravel(i, side, &mut c);
            c
        })
    }
}
