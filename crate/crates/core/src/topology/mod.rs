//! Offset-filtration persistence of cubical masks, Betti estimation by
//! survival past `kappa`, and bottleneck distances between diagrams.

mod bottleneck;
mod filtration;
mod persistence;

use serde::{Deserialize, Serialize};

pub use bottleneck::bottleneck;
pub use filtration::{build_filtration, CubicalFiltration};
pub use persistence::persistence;

use crate::error::{invalid, Result};
use crate::geometry::hausdorff;
use crate::model::{CubicalMask, PersistenceDiagram};

/// Diagrams of degrees `0..=d` for the offset filtration of `mask`.
pub fn diagrams(mask: &CubicalMask) -> Result<Vec<PersistenceDiagram>> {
    let filt = build_filtration(mask)?;
    Ok(persistence(&filt, mask.dim()))
}

/// Classes of degree `degree` present in the mask that are still alive at
/// offset `kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BettiEstimate {
    pub degree: usize,
    pub count: usize,
    pub kappa: f64,
    /// Counted classes that die exactly at `kappa`.
    pub ties: usize,
}

/// Counts points born at 0 with death `>= kappa` in each diagram.
pub fn betti_estimate(diagrams: &[PersistenceDiagram], kappa: f64) -> Result<Vec<BettiEstimate>> {
    if !(kappa >= 0.0) {
        return Err(invalid(format!("kappa must be >= 0, got {kappa}")));
    }
    Ok(diagrams
        .iter()
        .map(|dgm| {
            let born = dgm.points.iter().filter(|p| p.birth <= 0.0);
            let survivors: Vec<_> = born.filter(|p| p.death >= kappa).collect();
            let ties = survivors.iter().filter(|p| p.death == kappa).count();
            if ties > 0 {
                log::info!("degree {}: {ties} class(es) die exactly at kappa = {kappa}", dgm.degree);
            }
            BettiEstimate { degree: dgm.degree, count: survivors.len(), kappa, ties }
        })
        .collect())
}

pub fn betti_vector(estimates: &[BettiEstimate]) -> Vec<usize> {
    estimates.iter().map(|e| e.count).collect()
}

/// Per-degree comparison of bottleneck distance against the Hausdorff bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub cell_diagonal: f64,
    pub bottleneck: Vec<f64>,
    /// `epsilon + cell_diagonal - bottleneck` per degree; negative is a violation.
    pub margins: Vec<f64>,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.margins.iter().all(|&m| m >= -1e-12)
    }
}

/// Checks `bottleneck(dgm_s(A), dgm_s(B)) <= d_H(A, B) + cell diagonal` in
/// every degree.
pub fn stability_check(a: &CubicalMask, b: &CubicalMask) -> Result<StabilityReport> {
    let (a, b) = CubicalMask::common_resolution(a, b)?;
    let epsilon = hausdorff(&a, &b)?;
    let da = diagrams(&a)?;
    let db = diagrams(&b)?;
    let cell_diagonal = a.cell_diagonal();
    let bottleneck: Vec<f64> = da.iter().zip(&db).map(|(x, y)| bottleneck(x, y)).collect();
    let margins = bottleneck.iter().map(|&d| epsilon + cell_diagonal - d).collect();
    Ok(StabilityReport { epsilon, cell_diagonal, bottleneck, margins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::offset;
    use crate::model::DiagramPoint;
    use crate::oracle::{brute_bottleneck, brute_persistence};
    use crate::synth::{make_two_circles, rasterize_jumpset};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mask(rng: &mut ChaCha8Rng, dim: usize, m: usize, p: f64) -> CubicalMask {
        loop {
            let mask = CubicalMask::from_fn(dim, m, |_| rng.random::<f64>() < p).unwrap();
            if !mask.is_empty() {
                return mask;
            }
        }
    }

    #[test]
    fn full_mask_filtration_is_zero() {
        let filt = build_filtration(&CubicalMask::full(2, 4).unwrap()).unwrap();
        assert!(filt.values().iter().all(|&v| v == 0.0));
        let dgms = persistence(&filt, 2);
        assert_eq!(dgms[0].points, vec![DiagramPoint::essential(0.0)]);
        assert!(dgms[1].is_empty() && dgms[2].is_empty());
    }

    #[test]
    fn empty_mask_rejected() {
        assert!(build_filtration(&CubicalMask::empty(2, 4).unwrap()).is_err());
    }

    #[test]
    fn zero_level_is_the_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mask = random_mask(&mut rng, 2, 9, 0.3);
        let filt = build_filtration(&mask).unwrap();
        assert_eq!(filt.sublevel_mask(0.0).unwrap(), mask);
        assert_eq!(filt.sublevel_mask(0.25).unwrap(), offset(&mask, 0.25).unwrap());
    }

    #[test]
    fn row_of_two_cells_merges_at_half_gap() {
        // cells 0 and 4 in a 1D row of 8: gap of 4 widths, centres meet at 2
        let mask = CubicalMask::from_fn(1, 8, |c| c[0] == 0 || c[0] == 4).unwrap();
        let dgms = diagrams(&mask).unwrap();
        assert_eq!(dgms[0].points, vec![DiagramPoint::new(0.0, 2.0 / 8.0), DiagramPoint::essential(0.0)]);
    }

    #[test]
    fn checkerboard_values() {
        let mask = CubicalMask::from_fn(2, 2, |c| c[0] == c[1]).unwrap();
        let filt = build_filtration(&mask).unwrap();
        let diag = 0.5;
        for cell in 0..filt.len() {
            let c = filt.coords(cell);
            // closures of cubes (0,0) and (1,1) span [0,2]^2 and [2,4]^2
            let in_set = (c[0] <= 2 && c[1] <= 2) || (c[0] >= 2 && c[1] >= 2);
            let expected = if in_set { 0.0 } else { diag };
            assert_eq!(filt.value(cell), expected, "cell {c:?}");
        }
    }

    #[test]
    fn two_circles_diagrams() {
        let e = make_two_circles(&[[0.3, 0.5], [0.7, 0.5]], &[0.15, 0.15], 4.0).unwrap();
        let mask = rasterize_jumpset(&e.spec, 256).unwrap();
        let dgms = diagrams(&mask).unwrap();
        let born: Vec<_> = dgms[0].points.iter().filter(|p| p.birth == 0.0).collect();
        assert_eq!(born.len(), 2);
        let tol = 2.0 * mask.cell_diagonal();
        let gap_half = dgms[0].finite().map(|p| p.death).fold(0.0, f64::max);
        assert!((gap_half - 0.05).abs() <= tol, "{gap_half}");
        let holes: Vec<f64> = dgms[1].points.iter().filter(|p| p.birth == 0.0).map(|p| p.death).collect();
        assert_eq!(holes.len(), 2);
        for d in holes {
            assert!((d - 0.15).abs() <= tol, "{d}");
        }
        assert_eq!(betti_vector(&betti_estimate(&dgms, 0.0).unwrap())[..2], [2, 2]);
        assert!(bottleneck(&dgms[1], &e.analytic_diagrams.as_ref().unwrap()[1]) <= tol);
    }

    #[test]
    fn matches_naive_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..30 {
            let (dim, m) = if trial % 3 == 2 { (3, 4) } else { (2, 8) };
            let p = rng.random_range(0.05..0.6);
            let mask = random_mask(&mut rng, dim, m, p);
            let fast = diagrams(&mask).unwrap();
            let slow = brute_persistence(&mask).unwrap();
            assert_eq!(fast, slow, "mask {mask:?}");
        }
    }

    #[test]
    fn bottleneck_examples() {
        let a = PersistenceDiagram::new(1, vec![DiagramPoint::new(0.0, 2.0)]);
        let empty = PersistenceDiagram::new(1, vec![]);
        assert_eq!(bottleneck(&a, &a), 0.0);
        assert_eq!(bottleneck(&a, &empty), 1.0);
        let b = PersistenceDiagram::new(1, vec![DiagramPoint::new(0.0, 3.0)]);
        let c = PersistenceDiagram::new(1, vec![DiagramPoint::new(0.0, 4.0)]);
        assert_eq!(bottleneck(&b, &c), 1.0);
        let e = PersistenceDiagram::new(0, vec![DiagramPoint::essential(0.0)]);
        assert_eq!(bottleneck(&e, &PersistenceDiagram::new(0, vec![])), f64::INFINITY);
    }

    #[test]
    fn betti_ties_are_inclusive() {
        let dgm = PersistenceDiagram::new(1, vec![DiagramPoint::new(0.0, 0.5), DiagramPoint::new(0.0, 0.2)]);
        let est = betti_estimate(&[dgm], 0.5).unwrap();
        assert_eq!(est[0].count, 1);
        assert_eq!(est[0].ties, 1);
        assert!(betti_estimate(&[], -1.0).is_err());
    }

    #[test]
    fn stability_on_offsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_mask(&mut rng, 2, 12, 0.1);
        let same = stability_check(&a, &a).unwrap();
        assert_eq!(same.epsilon, 0.0);
        assert!(same.bottleneck.iter().all(|&b| b == 0.0));
        for beta in [0.05, 0.1, 0.2] {
            let b = offset(&a, beta).unwrap();
            let report = stability_check(&a, &b).unwrap();
            assert!(report.holds(), "{report:?}");
            assert!(report.bottleneck.iter().all(|&d| d <= beta + a.cell_diagonal()));
        }
    }

    fn diagram_strategy(degree: usize) -> impl Strategy<Value = PersistenceDiagram> {
        (prop::collection::vec((0u32..20, 1u32..20), 0..6), 0usize..2).prop_map(move |(pts, essential)| {
            let mut points: Vec<_> =
                pts.into_iter().map(|(b, l)| DiagramPoint::new(b as f64 / 8.0, (b + l) as f64 / 8.0)).collect();
            points.extend((0..essential).map(|i| DiagramPoint::essential(i as f64 / 4.0)));
            PersistenceDiagram::new(degree, points)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bottleneck_matches_exhaustive(a in diagram_strategy(1), b in diagram_strategy(1)) {
            prop_assert_eq!(bottleneck(&a, &b), brute_bottleneck(&a, &b));
        }

        #[test]
        fn bottleneck_is_pseudometric(a in diagram_strategy(0), b in diagram_strategy(0), c in diagram_strategy(0)) {
            let ab = bottleneck(&a, &b);
            prop_assert_eq!(ab, bottleneck(&b, &a));
            prop_assert_eq!(bottleneck(&a, &a), 0.0);
            let (ac, cb) = (bottleneck(&a, &c), bottleneck(&c, &b));
            if ac.is_finite() && cb.is_finite() {
                prop_assert!(ab <= ac + cb + 1e-9);
            }
        }

        #[test]
        fn betti_nonincreasing_in_kappa(seed in 0u64..500, k1 in 0.0f64..0.5, dk in 0.0f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = random_mask(&mut rng, 2, 10, 0.25);
            let dgms = diagrams(&mask).unwrap();
            let a = betti_vector(&betti_estimate(&dgms, k1).unwrap());
            let b = betti_vector(&betti_estimate(&dgms, k1 + dk).unwrap());
            prop_assert!(a.iter().zip(&b).all(|(x, y)| y <= x));
        }

        #[test]
        fn components_match_union_of_cubes(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = random_mask(&mut rng, 2, 10, 0.3);
            let dgms = diagrams(&mask).unwrap();
            let born = betti_vector(&betti_estimate(&dgms, 0.0).unwrap());
            prop_assert_eq!(born, crate::oracle::brute_betti(&mask).unwrap());
            prop_assert_eq!(dgms[0].essential().count(), 1);
        }
    }
}
