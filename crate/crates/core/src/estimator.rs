//! Histogram estimator of the signal and thresholded local range.
//!
//! The cube is cut into `m = round(1/h)` cells per axis. Along each axis cell
//! `j` is `(j/m, (j+1)/m]` (cell 0 also takes 0), so a lattice point on a face
//! belongs to the lower-index cell. Membership is decided in integers: the
//! point `(2k+1)/(2N)` lies in cell `ceil((2k+1)m / 2N) - 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::box_stencil;
use crate::model::{cells_per_axis, lattice, CalibrationParams, CubicalMask, ObservationGrid};

/// Per-cell averages of the observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramField {
    dim: usize,
    resolution: usize,
    values: Vec<f64>,
    counts: Vec<usize>,
}

impl HistogramField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of observations averaged in each cell.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.resolution as f64
    }
}

/// Cell index along one axis of lattice point `k` out of `side`.
pub fn axis_cell(k: usize, side: usize, m: usize) -> usize {
    let num = (2 * k + 1) * m;
    let den = 2 * side;
    num.div_ceil(den) - 1
}

pub fn build_histogram(grid: &ObservationGrid, h: f64) -> Result<HistogramField> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(invalid(format!("h must lie in (0, 1/2], got {h}")));
    }
    histogram_with_resolution(grid, cells_per_axis(h))
}

/// Histogram with exactly `m` cells per axis.
pub fn histogram_with_resolution(grid: &ObservationGrid, m: usize) -> Result<HistogramField> {
    let d = grid.dim();
    let side = grid.side();
    if m == 0 {
        return Err(invalid("need at least one cell per axis"));
    }
    let cells = lattice::volume(m, d).ok_or_else(|| invalid("m^d overflows"))?;
    let axis_map: Vec<usize> = (0..side).map(|k| axis_cell(k, side, m)).collect();
    let mut sums = vec![0.0; cells];
    let mut counts = vec![0usize; cells];
    let mut k = vec![0usize; d];
    for (i, &x) in grid.values().iter().enumerate() {
        lattice::unravel(i, side, &mut k);
        let cell = k.iter().fold(0, |acc, &k| acc * m + axis_map[k]);
        sums[cell] += x;
        counts[cell] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut cell = vec![0; d];
        lattice::unravel(empty, m, &mut cell);
        return Err(Error::EmptyCell { cell });
    }
    let values = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    Ok(HistogramField { dim: d, resolution: m, values, counts })
}

/// `max - min` of the histogram over all cells whose closed boxes are within
/// Euclidean distance `r` of the given cell's box.
pub fn local_range(hist: &HistogramField, r: f64) -> Result<Vec<f64>> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid(format!("r must be finite and >= 0, got {r}")));
    }
    let m = hist.resolution;
    let d = hist.dim;
    let stencil = box_stencil(d, r * m as f64);
    Ok((0..hist.values.len())
        .into_par_iter()
        .map(|i| {
            let mut c = vec![0usize; d];
            lattice::unravel(i, m, &mut c);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut nb = vec![0usize; d];
            'offsets: for off in &stencil {
                for axis in 0..d {
                    let v = c[axis] as isize + off[axis];
                    if v < 0 || v >= m as isize {
                        continue 'offsets;
                    }
                    nb[axis] = v as usize;
                }
                let x = hist.values[lattice::ravel(&nb, m)];
                lo = lo.min(x);
                hi = hi.max(x);
            }
            hi - lo
        })
        .collect())
}

/// Result of thresholding the local range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpSetEstimate {
    pub mask: CubicalMask,
    pub histogram: HistogramField,
    pub local_range: Vec<f64>,
    pub params: CalibrationParams,
}

/// Cells whose local range is at least `params.threshold`.
pub fn estimate_jumpset(grid: &ObservationGrid, params: &CalibrationParams) -> Result<JumpSetEstimate> {
    params.validate()?;
    let histogram = build_histogram(grid, params.h)?;
    let range = local_range(&histogram, params.r)?;
    let bits = range.iter().map(|&v| v >= params.threshold).collect();
    let mask = CubicalMask::from_bits(grid.dim(), histogram.resolution, bits)?;
    log::debug!("jump-set estimate: {} of {} cells", mask.count(), mask.len());
    Ok(JumpSetEstimate { mask, histogram, local_range: range, params: params.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CalibrationRequest, SnRule};
    use crate::oracle::{block_average_histogram, brute_local_range};
    use crate::synth::{make_halfspace_step, sample_to_grid};
    use proptest::prelude::*;

    fn params(h: f64, r: f64, l: f64) -> CalibrationParams {
        CalibrationParams {
            h,
            cell_width: 1.0 / cells_per_axis(h) as f64,
            r,
            kappa: 2.0 * r,
            threshold: l / 2.0,
            sigma_known: true,
            mu_known: true,
            s_n_rule: SnRule::LogN,
        }
    }

    #[test]
    fn face_ties_go_to_lower_cell() {
        // N = 6, m = 3: point 1 sits at 1/4, point 3 at 7/12; faces at 1/3, 2/3
        assert_eq!((0..6).map(|k| axis_cell(k, 6, 3)).collect::<Vec<_>>(), vec![0, 0, 1, 1, 2, 2]);
        // N = 4, m = 2: centres 1/8, 3/8, 5/8, 7/8
        assert_eq!((0..4).map(|k| axis_cell(k, 4, 2)).collect::<Vec<_>>(), vec![0, 0, 1, 1]);
        // N = 2, m = 4: centre 1/4 lies on the face between cells 0 and 1
        assert_eq!(axis_cell(0, 2, 4), 0);
        assert_eq!(axis_cell(1, 2, 4), 2);
    }

    #[test]
    fn empty_cells_are_reported() {
        let grid = ObservationGrid::new(2, 2, vec![0.0; 4], None).unwrap();
        let err = histogram_with_resolution(&grid, 4).unwrap_err();
        assert!(matches!(err, Error::EmptyCell { ref cell } if cell == &vec![0, 1]));
    }

    #[test]
    fn matches_block_average_oracle() {
        for (d, n, m) in [(1, 37, 5), (2, 20, 7), (2, 16, 4), (3, 9, 4)] {
            let len = lattice::volume(n, d).unwrap();
            let values = (0..len).map(|i| ((i * 7919) % 101) as f64 / 13.0).collect();
            let grid = ObservationGrid::new(d, n, values, None).unwrap();
            let fast = histogram_with_resolution(&grid, m).unwrap();
            let slow = block_average_histogram(&grid, m).unwrap();
            for (a, b) in fast.values().iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn local_range_matches_scan() {
        let grid = ObservationGrid::new(2, 24, (0..576).map(|i| ((i * 31) % 17) as f64).collect(), None).unwrap();
        let hist = histogram_with_resolution(&grid, 12).unwrap();
        for r in [0.0, 0.05, 1.0 / 12.0, 0.2, 0.31] {
            assert_eq!(local_range(&hist, r).unwrap(), brute_local_range(hist.values(), 2, 12, r));
        }
    }

    #[test]
    fn calibrated_halfspace_estimate() {
        let spec = make_halfspace_step(2, 4.0).unwrap().spec;
        let grid = sample_to_grid(&spec, 64, 0.0, 1).unwrap();
        let req = CalibrationRequest {
            n: grid.len(),
            side: 64,
            dim: 2,
            l: 4.0,
            sigma: Some(0.25),
            mu: Some(1.0),
            s_n_rule: SnRule::LogN,
            h_override: None,
            r_override: None,
            kappa_override: None,
        };
        let p = CalibrationParams::calibrate(&req).unwrap();
        let est = estimate_jumpset(&grid, &p).unwrap();
        assert!(!est.mask.is_empty());
        let m = est.mask.resolution();
        // the columns straddling x = 1/2 are always detected
        for c in 0..m {
            assert!(est.mask.get_at(&[m / 2 - 1, c]) || est.mask.get_at(&[m / 2, c]));
        }
    }

    fn dyadic_grid(side: usize, seed: u64) -> ObservationGrid {
        let spec = make_halfspace_step(2, 4.0).unwrap().spec;
        let noisy = sample_to_grid(&spec, side, 0.5, seed).unwrap();
        // round to multiples of 1/64 so shifts and scalings are exact
        noisy.map_values(|v| (v * 64.0).round() / 64.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn mask_grows_with_r(seed in 0u64..1000, r1 in 0.0f64..0.3, dr in 0.0f64..0.2) {
            let grid = dyadic_grid(32, seed);
            let a = estimate_jumpset(&grid, &params(0.125, r1, 4.0)).unwrap().mask;
            let b = estimate_jumpset(&grid, &params(0.125, r1 + dr, 4.0)).unwrap().mask;
            prop_assert!(a.is_subset_of(&b));
        }

        #[test]
        fn mask_shrinks_with_l(seed in 0u64..1000, l in 0.5f64..6.0, dl in 0.0f64..3.0) {
            let grid = dyadic_grid(32, seed);
            let a = estimate_jumpset(&grid, &params(0.125, 0.2, l + dl)).unwrap().mask;
            let b = estimate_jumpset(&grid, &params(0.125, 0.2, l)).unwrap().mask;
            prop_assert!(a.is_subset_of(&b));
        }

        #[test]
        fn shift_and_scale_equivariance(seed in 0u64..1000, shift in -64i32..64, scale_pow in 0u32..3) {
            let grid = dyadic_grid(32, seed);
            let c = shift as f64 / 8.0;
            let a = 2f64.powi(scale_pow as i32);
            let base = estimate_jumpset(&grid, &params(0.125, 0.2, 4.0)).unwrap().mask;
            let shifted = estimate_jumpset(&grid.map_values(|v| v + c), &params(0.125, 0.2, 4.0)).unwrap().mask;
            let scaled = estimate_jumpset(&grid.map_values(|v| a * v), &params(0.125, 0.2, a * 4.0)).unwrap().mask;
            prop_assert_eq!(&base, &shifted);
            prop_assert_eq!(&base, &scaled);
        }

        #[test]
        fn noiseless_halfspace_sandwich(offset in 0.2f64..0.8) {
            use crate::model::{Geometry, ShapeSpec};
            let mut spec: ShapeSpec = make_halfspace_step(2, 4.0).unwrap().spec;
            spec.geometry = Geometry::HalfSpace { axis: 0, offset };
            let grid = sample_to_grid(&spec, 64, 0.0, 0).unwrap();
            let h = 1.0 / 16.0;
            let r = (1.0 + 2f64.sqrt()) * h;
            let mask = estimate_jumpset(&grid, &params(h, r, 4.0)).unwrap().mask;
            let diag = mask.cell_diagonal();
            for i in 0..mask.len() {
                let c = mask.coords(i);
                let lo = c[0] as f64 * h;
                let hi = lo + h;
                // every cell that holds lattice points on both sides is kept
                let pts: Vec<f64> = (0..64).map(|k| (k as f64 + 0.5) / 64.0).filter(|&x| x > lo && x <= hi).collect();
                if pts.iter().any(|&x| x <= offset) && pts.iter().any(|&x| x > offset) {
                    prop_assert!(mask.get(i));
                }
                if mask.get(i) {
                    prop_assert!(spec.jump_distance(&mask.cell_center(i)) <= r + diag);
                }
            }
        }
    }
}
