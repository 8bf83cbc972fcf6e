use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::distance_transform;
use crate::model::{lattice, CubicalMask};

/// Sublevel filtration of the distance to a mask on the cubical complex of
/// `[0,1]^d` cut into `m^d` cubes.
///
/// Cells are addressed in doubled coordinates `0..=2m` per axis; a coordinate
/// is odd when the cell spans an interval along that axis. Top cells take the
/// distance-transform value of their cube, lower cells the minimum over the
/// top cells containing them, so the sublevel set at `beta` is the cubical set
/// `offset(mask, beta)`.
#[derive(Clone, Debug)]
pub struct CubicalFiltration {
    dim: usize,
    resolution: usize,
    values: Vec<f64>,
    dims: Vec<u8>,
    /// Cells sorted by `(value, dimension, index)`.
    order: Vec<usize>,
}

impl CubicalFiltration {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Points per axis of the doubled grid, `2m + 1`.
    pub fn side(&self) -> usize {
        2 * self.resolution + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_dim(&self, cell: usize) -> usize {
        self.dims[cell] as usize
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn coords(&self, cell: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        lattice::unravel(cell, self.side(), &mut c);
        c
    }

    /// Codimension-one faces of `cell`.
    pub fn boundary(&self, cell: usize, out: &mut Vec<usize>) {
        out.clear();
        let side = self.side();
        let mut stride = 1;
        let mut rest = cell;
        for _ in 0..self.dim {
            let x = rest % side;
            rest /= side;
            if x % 2 == 1 {
                out.push(cell - stride);
                out.push(cell + stride);
            }
            stride *= side;
        }
    }

    /// Cubical set of cells entering at or below `beta`, as top cubes.
    pub fn sublevel_mask(&self, beta: f64) -> Result<CubicalMask> {
        let side = self.side();
        CubicalMask::from_fn(self.dim, self.resolution, |c| {
            let cell = c.iter().fold(0, |acc, &k| acc * side + 2 * k + 1);
            self.values[cell] <= beta
        })
    }
}

pub fn build_filtration(mask: &CubicalMask) -> Result<CubicalFiltration> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let d = mask.dim();
    let m = mask.resolution();
    let side = 2 * m + 1;
    let total = lattice::volume(side, d).ok_or_else(|| crate::error::invalid("cell count overflows"))?;
    let field = distance_transform(mask);

    let mut values = vec![f64::INFINITY; total];
    let dims: Vec<u8> = (0..total)
        .into_par_iter()
        .map(|cell| {
            let mut rest = cell;
            let mut odd = 0u8;
            for _ in 0..d {
                odd += (rest % side % 2) as u8;
                rest /= side;
            }
            odd
        })
        .collect();
    values.par_iter_mut().enumerate().for_each(|(cell, v)| {
        let mut rest = cell;
        let mut cube = 0;
        let mut scale = 1;
        for _ in 0..d {
            let x = rest % side;
            rest /= side;
            if x.is_multiple_of(2) {
                return;
            }
            cube += (x / 2) * scale;
            scale *= m;
        }
        *v = field.value(cube);
    });
    // sweep each axis: even positions take the smaller neighbour
    let mut stride = 1;
    for _ in 0..d {
        let snapshot = values.clone();
        values.par_iter_mut().enumerate().for_each(|(cell, v)| {
            let x = cell / stride % side;
            if x % 2 == 1 {
                return;
            }
            let mut best = f64::INFINITY;
            if x > 0 {
                best = best.min(snapshot[cell - stride]);
            }
            if x < side - 1 {
                best = best.min(snapshot[cell + stride]);
            }
            *v = best.min(*v);
        });
        stride *= side;
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.par_sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]).then(dims[a].cmp(&dims[b])).then(a.cmp(&b)));
    Ok(CubicalFiltration { dim: d, resolution: m, values, dims, order })
}
