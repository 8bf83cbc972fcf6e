use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::{histogram_with_resolution, local_range};
use crate::geometry::{distance_transform, hausdorff, offset};
use crate::model::{lattice, CubicalMask, DiagramPoint, ObservationGrid, PersistenceDiagram};
use crate::oracle::{
    block_average_histogram, brute_bottleneck, brute_distance_transform, brute_hausdorff, brute_local_range,
    brute_persistence,
};
use crate::topology::{bottleneck, diagrams, stability_check};

/// Number of random cases per check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSuiteConfig {
    pub seed: u64,
    pub distance_transform: usize,
    pub offsets: usize,
    pub persistence: usize,
    pub bottleneck: usize,
    pub hausdorff: usize,
    pub histogram: usize,
    pub stability: usize,
}

impl Default for OracleSuiteConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            distance_transform: 200,
            offsets: 100,
            persistence: 100,
            bottleneck: 100,
            hausdorff: 100,
            histogram: 40,
            stability: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    fn new(name: &str, tolerance: f64) -> Self {
        Self { name: name.into(), cases: 0, failures: 0, max_error: 0.0, tolerance }
    }

    fn record(&mut self, error: f64) {
        self.cases += 1;
        self.max_error = self.max_error.max(error);
        if !(error <= self.tolerance) {
            self.failures += 1;
        }
    }

    fn record_pass(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { f64::INFINITY });
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(OracleCheck::passed)
    }
}

fn random_mask(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> CubicalMask {
    let p = rng.random_range(0.03..0.6);
    loop {
        let mask = CubicalMask::from_fn(dim, m, |_| rng.random::<f64>() < p).unwrap();
        if !mask.is_empty() {
            return mask;
        }
    }
}

fn random_diagram(rng: &mut ChaCha8Rng, max_points: usize) -> PersistenceDiagram {
    let count = rng.random_range(0..=max_points);
    let essential = rng.random_range(0..=count.min(2));
    let points = (0..count)
        .map(|i| {
            let birth = rng.random_range(0..12) as f64 / 8.0;
            if i < essential {
                DiagramPoint::essential(birth)
            } else {
                DiagramPoint::new(birth, birth + rng.random_range(1..12) as f64 / 8.0)
            }
        })
        .collect();
    PersistenceDiagram::new(0, points)
}

pub fn check_distance_transform(cases: usize, rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut check = OracleCheck::new("distance transform vs all-pairs scan", 1e-9);
    for i in 0..cases {
        let dim = 2 + i % 2;
        let m = rng.random_range(1..=if dim == 2 { 16 } else { 10 });
        let mask = if i % 17 == 0 { CubicalMask::empty(dim, m).unwrap() } else { random_mask(rng, dim, m) };
        let fast = distance_transform(&mask).values();
        let slow = brute_distance_transform(&mask);
        check.record(fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    check
}

/// Compares an offset implementation with a scan over cell centres and checks
/// that `A <= offset(A, beta)` and `d_H(A, offset(A, beta)) <= beta`.
pub fn check_offsets(
    cases: usize,
    rng: &mut ChaCha8Rng,
    offset_impl: impl Fn(&CubicalMask, f64) -> Result<CubicalMask>,
) -> OracleCheck {
    let mut check = OracleCheck::new("offsets vs centre scan, containment and radius", 0.0);
    for i in 0..cases {
        let dim = 2 + i % 2;
        let m = rng.random_range(4..=if dim == 2 { 16 } else { 8 });
        let mask = random_mask(rng, dim, m);
        let beta = rng.random_range(0.0..0.5);
        let Ok(grown) = offset_impl(&mask, beta) else {
            check.record_pass(false);
            continue;
        };
        let dt = brute_distance_transform(&mask);
        let scan = CubicalMask::from_bits(dim, m, dt.iter().map(|&v| v <= beta).collect()).unwrap();
        let radius_ok = hausdorff(&mask, &grown).map(|d| d <= beta + 1e-12).unwrap_or(false);
        check.record_pass(grown == scan && mask.is_subset_of(&grown) && radius_ok);
    }
    check
}

pub fn check_persistence(cases: usize, rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut check = OracleCheck::new("persistence vs naive reduction", 1e-9);
    for i in 0..cases {
        let (dim, max_m) = if i % 2 == 0 { (2, 8) } else { (3, 5) };
        let m = rng.random_range(2..=max_m);
        let mask = random_mask(rng, dim, m);
        let fast = diagrams(&mask).unwrap();
        let slow = brute_persistence(&mask).unwrap();
        let ok = fast.len() == slow.len() && fast.iter().zip(&slow).all(|(a, b)| a.approx_eq(b, 1e-9));
        check.record_pass(ok);
    }
    check
}

pub fn check_bottleneck(cases: usize, rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut check = OracleCheck::new("bottleneck vs exhaustive matching", 0.0);
    for _ in 0..cases {
        let a = random_diagram(rng, 6);
        let b = random_diagram(rng, 6);
        let fast = bottleneck(&a, &b);
        let slow = brute_bottleneck(&a, &b);
        check.record_pass(fast == slow);
    }
    check
}

pub fn check_hausdorff(cases: usize, rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut check = OracleCheck::new("Hausdorff vs point-set scan", 1e-9);
    for i in 0..cases {
        let dim = 2 + i % 2;
        let m = rng.random_range(2..=if dim == 2 { 12 } else { 6 });
        let a = random_mask(rng, dim, m);
        let b = random_mask(rng, dim, if i % 3 == 0 { 2 * m } else { m });
        check.record((hausdorff(&a, &b).unwrap() - brute_hausdorff(&a, &b).unwrap()).abs());
    }
    check
}

pub fn check_histogram(cases: usize, rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut check = OracleCheck::new("histogram and local range vs block scan", 1e-9);
    for i in 0..cases {
        let dim = 1 + i % 3;
        let side = rng.random_range(4..=if dim == 3 { 9 } else { 24 });
        let m = rng.random_range(1..=side);
        let len = lattice::volume(side, dim).unwrap();
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let grid = ObservationGrid::new(dim, side, values, None).unwrap();
        let fast = histogram_with_resolution(&grid, m).unwrap();
        let slow = block_average_histogram(&grid, m).unwrap();
        let mut err = fast.values().iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let r = rng.random_range(0.0..0.4);
        let lr = local_range(&fast, r).unwrap();
        let lr_slow = brute_local_range(fast.values(), dim, m, r);
        err = err.max(lr.iter().zip(&lr_slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        check.record(err);
    }
    check
}

/// Random 12x12 mask pairs: bottleneck distance never exceeds Hausdorff
/// distance plus one cell diagonal.
pub fn check_stability(cases: usize, rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut check = OracleCheck::new("interleaving bound on random mask pairs", 0.0);
    for _ in 0..cases {
        let a = random_mask(rng, 2, 12);
        let b = random_mask(rng, 2, 12);
        let report = stability_check(&a, &b).unwrap();
        check.record(report.margins.iter().map(|&m| (-m).max(0.0)).fold(0.0, f64::max));
    }
    check
}

pub fn run_oracle_suite(config: &OracleSuiteConfig) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let checks = vec![
        check_distance_transform(config.distance_transform, &mut rng),
        check_offsets(config.offsets, &mut rng, offset),
        check_persistence(config.persistence, &mut rng),
        check_bottleneck(config.bottleneck, &mut rng),
        check_hausdorff(config.hausdorff, &mut rng),
        check_histogram(config.histogram, &mut rng),
        check_stability(config.stability, &mut rng),
    ];
    for c in &checks {
        log::info!("{}: {}/{} failures, max error {:e}", c.name, c.failures, c.cases, c.max_error);
    }
    OracleReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = OracleSuiteConfig {
            distance_transform: 20,
            offsets: 20,
            persistence: 10,
            bottleneck: 20,
            hausdorff: 10,
            histogram: 10,
            stability: 10,
            ..Default::default()
        };
        let report = run_oracle_suite(&cfg);
        assert!(report.passed(), "{report:#?}");
    }

    #[test]
    fn off_by_one_offset_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mutated = |mask: &CubicalMask, beta: f64| offset(mask, beta + mask.cell_size());
        let check = check_offsets(20, &mut rng, mutated);
        assert!(!check.passed());
    }
}
