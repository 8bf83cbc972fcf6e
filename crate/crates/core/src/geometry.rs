//! Exact Euclidean distance transforms, offsets and Hausdorff distances on
//! cubical masks.
//!
//! All distances are measured between cell centres. For a mask at resolution
//! `m` this differs from the set-to-set distance by at most one cell diagonal
//! `sqrt(d)/m`, which callers report as slack.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lattice, CubicalMask, ShapeSpec};
use crate::synth::rasterize_jumpset;

/// Distance from every cell centre to the nearest set-cell centre.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    dim: usize,
    resolution: usize,
    /// Squared distances in units of cells; integers stored as `f64`.
    squared_cells: Vec<f64>,
    empty: bool,
}

impl DistanceField {
    /// Value reported for every cell of an empty mask: the ambient diameter plus one.
    pub fn empty_sentinel(dim: usize) -> f64 {
        (dim as f64).sqrt() + 1.0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.squared_cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squared_cells.is_empty()
    }

    pub fn is_empty_mask(&self) -> bool {
        self.empty
    }

    /// Distance at cell `index`, in ambient units.
    pub fn value(&self, index: usize) -> f64 {
        if self.empty {
            Self::empty_sentinel(self.dim)
        } else {
            self.squared_cells[index].sqrt() / self.resolution as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Squared distance at `index` in cell units (exact integer).
    pub fn squared_cells(&self, index: usize) -> f64 {
        self.squared_cells[index]
    }

    /// Whether cell `index` lies within `beta` of the set.
    pub fn within(&self, index: usize, beta: f64) -> bool {
        if self.empty {
            return false;
        }
        let radius = beta * self.resolution as f64;
        self.squared_cells[index] <= radius * radius * (1.0 + 1e-12)
    }

    pub fn max_value(&self) -> f64 {
        (0..self.len()).map(|i| self.value(i)).fold(0.0, f64::max)
    }
}

/// Exact centre-to-centre Euclidean distance transform.
///
/// One pass per axis of the lower-envelope-of-parabolas transform on squared
/// distances, so the cost is linear in the number of cells per pass.
pub fn distance_transform(mask: &CubicalMask) -> DistanceField {
    let dim = mask.dim();
    let m = mask.resolution();
    let empty = mask.is_empty();
    let mut sq: Vec<f64> = mask.bits().iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    if !empty {
        for axis in 0..dim {
            transform_axis(&mut sq, dim, m, axis);
        }
    }
    DistanceField { dim, resolution: m, squared_cells: sq, empty }
}

/// Applies the 1-D transform along every line parallel to `axis`.
fn transform_axis(sq: &mut [f64], dim: usize, m: usize, axis: usize) {
    let stride = m.pow((dim - 1 - axis) as u32);
    let lines = sq.len() / m;
    let starts: Vec<usize> = (0..lines)
        .map(|line| {
            // `line` enumerates all multi-indices with the `axis` coordinate removed
            let low = line % stride;
            let high = line / stride;
            high * stride * m + low
        })
        .collect();
    let updated: Vec<(usize, Vec<f64>)> = starts
        .par_iter()
        .map(|&start| {
            let f: Vec<f64> = (0..m).map(|k| sq[start + k * stride]).collect();
            (start, lower_envelope(&f))
        })
        .collect();
    for (start, line) in updated {
        for (k, v) in line.into_iter().enumerate() {
            sq[start + k * stride] = v;
        }
    }
}

/// `d(q) = min_p (q - p)^2 + f(p)` over finite `f(p)`.
#[allow(clippy::needless_range_loop)]
fn lower_envelope(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut vertices: Vec<usize> = Vec::with_capacity(n);
    let mut bounds: Vec<f64> = Vec::with_capacity(n + 1);
    let intersect = |p: usize, q: usize| {
        let (pf, qf) = (p as f64, q as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
    };
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        while let Some(&last) = vertices.last() {
            let s = intersect(last, q);
            if s <= bounds[vertices.len() - 1] {
                vertices.pop();
                bounds.pop();
            } else {
                break;
            }
        }
        let lower = vertices.last().map_or(f64::NEG_INFINITY, |&last| intersect(last, q));
        vertices.push(q);
        bounds.push(lower);
    }
    if vertices.is_empty() {
        return vec![f64::INFINITY; n];
    }
    bounds.push(f64::INFINITY);
    let mut out = vec![0.0; n];
    let mut j = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while bounds[j + 1] < q as f64 {
            j += 1;
        }
        let p = vertices[j];
        let dq = q as f64 - p as f64;
        *slot = dq * dq + f[p];
    }
    out
}

/// `A^beta`: cells whose centre lies within `beta` of a set-cell centre.
pub fn offset(mask: &CubicalMask, beta: f64) -> Result<CubicalMask> {
    if !(beta >= 0.0) {
        return Err(crate::error::invalid(format!("offset radius must be >= 0, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(mask.clone());
    }
    let field = distance_transform(mask);
    offset_from_field(mask, &field, beta)
}

pub(crate) fn offset_from_field(mask: &CubicalMask, field: &DistanceField, beta: f64) -> Result<CubicalMask> {
    let bits = (0..field.len()).map(|i| field.within(i, beta)).collect();
    CubicalMask::from_bits(mask.dim(), mask.resolution(), bits)
}

/// Both directed terms of a Hausdorff distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffReport {
    pub distance: f64,
    /// `sup_{a in A} d(a, B)`.
    pub forward: f64,
    /// `sup_{b in B} d(b, A)`.
    pub backward: f64,
    /// Bound on the gap between centre distances and set distances.
    pub slack: f64,
}

/// Hausdorff distance between two nonempty masks, brought to a common
/// resolution by exact subdivision when one resolution divides the other.
pub fn hausdorff(a: &CubicalMask, b: &CubicalMask) -> Result<f64> {
    hausdorff_report(a, b).map(|r| r.distance)
}

pub fn hausdorff_report(a: &CubicalMask, b: &CubicalMask) -> Result<HausdorffReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (a, b) = CubicalMask::common_resolution(a, b)?;
    let forward = directed(&a, &distance_transform(&b));
    let backward = directed(&b, &distance_transform(&a));
    Ok(HausdorffReport { distance: forward.max(backward), forward, backward, slack: a.cell_diagonal() })
}

/// `max_{a in mask} field(a)`.
fn directed(mask: &CubicalMask, field: &DistanceField) -> f64 {
    mask.set_cells().map(|i| field.squared_cells(i)).fold(0.0, f64::max).sqrt() / mask.resolution() as f64
}

/// Subdivision factor used to sample the true jump set.
pub const TRUTH_OVERSAMPLING: usize = 4;

/// Hausdorff distance from a mask to the analytic jump set of `spec`.
///
/// Both terms are evaluated at 4x the mask resolution: `mask -> D_f` with the
/// exact jump distance at fine cell centres, `D_f -> mask` with the distance
/// transform of the subdivided mask sampled on the fine rasterization of `D_f`.
pub fn hausdorff_to_truth(mask: &CubicalMask, spec: &ShapeSpec) -> Result<HausdorffReport> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if mask.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, actual: mask.dim() });
    }
    let fine_res = mask.resolution() * TRUTH_OVERSAMPLING;
    let fine = mask.subdivide(TRUTH_OVERSAMPLING)?;
    let truth = rasterize_jumpset(spec, fine_res)?;
    if truth.is_empty() {
        return Err(Error::InvalidGeometry(format!("shape '{}' has no jumps", spec.name)));
    }
    let forward = fine
        .set_cells()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| spec.jump_distance(&fine.cell_center(i)))
        .reduce(|| 0.0, f64::max);
    let backward = directed(&truth, &distance_transform(&fine));
    Ok(HausdorffReport {
        distance: forward.max(backward),
        forward,
        backward,
        slack: (mask.dim() as f64).sqrt() / fine_res as f64,
    })
}

/// Box-to-box Euclidean distance between cells `a` and `b` of one grid, in
/// cell units squared.
pub fn cell_gap_squared(a: &[usize], b: &[usize]) -> usize {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let g = x.abs_diff(y).saturating_sub(1);
            g * g
        })
        .sum()
}

/// Euclidean distance from `point` to the closed union of set cells.
pub fn box_distance_to_mask(mask: &CubicalMask, point: &[f64]) -> f64 {
    let h = mask.cell_size();
    mask.set_cells()
        .map(|i| {
            let c = mask.coords(i);
            c.iter()
                .zip(point)
                .map(|(&k, &x)| {
                    let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
                    let g = (lo - x).max(x - hi).max(0.0);
                    g * g
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Multi-indices of all cells at box distance `<= radius` (cell units) from the
/// origin cell, as signed offsets.
pub(crate) fn box_stencil(dim: usize, radius_cells: f64) -> Vec<Vec<isize>> {
    let reach = radius_cells.floor() as isize + 1;
    let side = (2 * reach + 1) as usize;
    let limit = radius_cells * radius_cells * (1.0 + 1e-12) + 1e-12;
    lattice::indices(side, dim)
        .map(|c| c.into_iter().map(|k| k as isize - reach).collect::<Vec<_>>())
        .filter(|off| {
            let gap: f64 = off
                .iter()
                .map(|&o| {
                    let g = (o.unsigned_abs()).saturating_sub(1) as f64;
                    g * g
                })
                .sum();
            gap <= limit
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_distance_transform;
    use approx::assert_relative_eq;

    #[test]
    fn full_mask_is_zero() {
        let mask = CubicalMask::full(2, 5).unwrap();
        assert!(distance_transform(&mask).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn corner_cell_of_3x3() {
        let mask = CubicalMask::from_fn(2, 3, |c| c == [0, 0]).unwrap();
        let field = distance_transform(&mask);
        assert_relative_eq!(field.value(8), 2.0 * 2f64.sqrt() / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_mask_gives_sentinel() {
        let mask = CubicalMask::empty(3, 4).unwrap();
        let field = distance_transform(&mask);
        assert!(field.is_empty_mask());
        assert!(field.values().iter().all(|&v| v == DistanceField::empty_sentinel(3)));
    }

    #[test]
    fn matches_brute_force_on_patterns() {
        for dim in 1..=3 {
            let m = [17, 9, 5][dim - 1];
            let mask = CubicalMask::from_fn(dim, m, |c| c.iter().sum::<usize>() % 7 == 3).unwrap();
            let field = distance_transform(&mask);
            let brute = brute_distance_transform(&mask);
            for (i, b) in brute.iter().enumerate() {
                assert_relative_eq!(field.value(i), *b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn offset_identity_and_saturation() {
        let mask = CubicalMask::from_fn(2, 9, |c| c == [2, 7]).unwrap();
        assert_eq!(offset(&mask, 0.0).unwrap(), mask);
        assert!(offset(&mask, 2f64.sqrt()).unwrap().is_full());
        assert!(offset(&mask, -0.1).is_err());
    }

    #[test]
    fn offset_disk_matches_scan() {
        let mask = CubicalMask::from_fn(2, 9, |c| c == [4, 4]).unwrap();
        let disk = offset(&mask, 2.5 / 9.0).unwrap();
        let expected = CubicalMask::from_fn(2, 9, |c| {
            let (dx, dy) = (c[0] as f64 - 4.0, c[1] as f64 - 4.0);
            dx * dx + dy * dy <= 6.25
        })
        .unwrap();
        assert_eq!(disk, expected);
        assert_eq!(disk.count(), 21);
    }

    #[test]
    fn hausdorff_examples() {
        let a = CubicalMask::from_fn(2, 8, |c| c == [1, 1]).unwrap();
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let b = CubicalMask::from_fn(2, 8, |c| c == [4, 5]).unwrap();
        assert_relative_eq!(hausdorff(&a, &b).unwrap(), 5.0 / 8.0, max_relative = 1e-12);
        let empty = CubicalMask::empty(2, 8).unwrap();
        assert!(matches!(hausdorff(&a, &empty), Err(Error::EmptyMask)));
        let odd = CubicalMask::full(2, 6).unwrap();
        assert!(matches!(hausdorff(&a, &odd), Err(Error::ResolutionMismatch(8, 6))));
    }

    #[test]
    fn square_boundary_vs_centre_cell() {
        let m = 101;
        let ring = CubicalMask::from_fn(2, m, |c| c.iter().any(|&k| k == 0 || k == m - 1)).unwrap();
        let centre = CubicalMask::from_fn(2, m, |c| c == [50, 50]).unwrap();
        let d = hausdorff(&ring, &centre).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() <= ring.cell_diagonal(), "got {d}");
    }

    #[test]
    fn stencil_r0_is_closed_neighbourhood() {
        assert_eq!(box_stencil(2, 0.0).len(), 9);
        assert_eq!(box_stencil(3, 0.0).len(), 27);
        // gap 1 along one axis allowed, diagonal gap sqrt(2) not
        assert_eq!(box_stencil(2, 1.0).len(), 21);
    }
}
