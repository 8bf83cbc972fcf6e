//! Seeded Monte Carlo experiments over the full pipeline.
//!
//! Trial `t` at the `i`-th grid size uses seed `base_seed ^ (i * trials + t)`.
//! Trials run on the rayon pool and are collected in `(N, trial)` order, so the
//! tables are identical for identical configurations.

mod oracle_suite;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use oracle_suite::{run_oracle_suite, OracleCheck, OracleReport, OracleSuiteConfig};

use crate::error::{invalid, Error, Result};
use crate::estimator::estimate_jumpset;
use crate::geometry::{box_distance_to_mask, hausdorff_to_truth};
use crate::model::{CalibrationParams, CalibrationRequest, CubicalMask, PersistenceDiagram, ShapeSpec, SnRule};
use crate::synth::{rasterize_jumpset, sample_to_grid, ShapeCatalogEntry, ShapeParams};
use crate::topology::{betti_estimate, betti_vector, bottleneck, diagrams};

/// Version of the trial CSV layout, written in every row.
pub const SCHEMA_VERSION: u32 = 1;

/// Smallest resolution at which diagrams are compared.
pub const TOPOLOGY_RESOLUTION: usize = 128;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnownMode {
    #[default]
    Known,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckToggles {
    pub hausdorff: bool,
    pub sandwich: bool,
    pub betti: bool,
    pub bottleneck: bool,
}

impl Default for CheckToggles {
    fn default() -> Self {
        Self { hausdorff: true, sandwich: true, betti: true, bottleneck: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub shape: ShapeParams,
    /// Grid side lengths, strictly increasing.
    pub n_values: Vec<usize>,
    /// Noise level used to generate data.
    pub sigma: f64,
    /// Noise level handed to the calibration when sigma is known; defaults to
    /// `sigma`. Needed for noiseless runs, which cannot calibrate on 0.
    pub calibration_sigma: Option<f64>,
    /// Jump floor for the threshold; defaults to the shape's.
    pub l: Option<f64>,
    pub sigma_mode: KnownMode,
    pub mu_mode: KnownMode,
    pub s_n_rule: SnRule,
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub checks: CheckToggles,
    pub h_override: Option<f64>,
    pub r_override: Option<f64>,
    pub kappa_override: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            shape: ShapeParams::two_circles(4.0),
            n_values: vec![64, 128, 256, 512],
            sigma: 0.25,
            calibration_sigma: None,
            l: None,
            sigma_mode: KnownMode::Known,
            mu_mode: KnownMode::Known,
            s_n_rule: SnRule::LogN,
            trials: 10,
            base_seed: 20240601,
            output_dir: None,
            checks: CheckToggles::default(),
            h_override: None,
            r_override: None,
            kappa_override: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.n_values.is_empty() {
            return Err(invalid("need at least one grid size"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid sizes must be strictly increasing"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn trial_seed(&self, n_index: usize, trial: usize) -> u64 {
        self.base_seed ^ (n_index * self.trials + trial) as u64
    }

    pub fn calibration(&self, spec: &ShapeSpec, side: usize) -> Result<CalibrationParams> {
        let n = crate::model::lattice::volume(side, spec.dim).ok_or_else(|| invalid("N^d overflows"))?;
        let sigma = match self.sigma_mode {
            KnownMode::Known => Some(self.calibration_sigma.unwrap_or(self.sigma)),
            KnownMode::Unknown => None,
        };
        let mu = match self.mu_mode {
            KnownMode::Known => Some(spec.mu),
            KnownMode::Unknown => None,
        };
        CalibrationParams::calibrate(&CalibrationRequest {
            n,
            side,
            dim: spec.dim,
            l: self.l.unwrap_or(spec.jump_floor),
            sigma,
            mu,
            s_n_rule: self.s_n_rule,
            h_override: self.h_override,
            r_override: self.r_override,
            kappa_override: self.kappa_override,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Ok,
    /// The estimator returned no cells; geometric metrics are undefined.
    EmptyMask,
}

/// Outcome of one sample at one grid size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub side: usize,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub h: f64,
    pub cells: usize,
    pub r: f64,
    pub kappa: f64,
    pub status: TrialStatus,
    pub mask_count: usize,
    pub hausdorff: Option<f64>,
    pub forward: Option<f64>,
    pub backward: Option<f64>,
    pub sandwich: Option<bool>,
    pub betti: Option<Vec<usize>>,
    pub betti_match: Option<bool>,
    pub betti_ties: Option<usize>,
    pub bottleneck: Option<Vec<f64>>,
    pub bottleneck_ok: Option<bool>,
    /// Seconds spent on the trial. Not written to CSV, which stays reproducible.
    pub wall_time_s: f64,
}

/// The two halves of `D_f <= D^ <= D_f^{2r}`, each up to one cell diagonal of
/// the estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// Every cell centre of a 4x rasterization of `D_f` lies within one cell
    /// diagonal of the estimated cubes.
    pub lower: bool,
    /// Every estimated cube lies within `2r` plus one cell diagonal of `D_f`.
    pub upper: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower && self.upper
    }
}

pub fn sandwich_check(mask: &CubicalMask, spec: &ShapeSpec, r: f64) -> Result<SandwichReport> {
    let diag = mask.cell_diagonal();
    let tol = 1e-12;
    if !spec.has_jumps() {
        return Ok(SandwichReport { lower: true, upper: mask.is_empty() });
    }
    let truth = rasterize_jumpset(spec, mask.resolution() * 4)?;
    let truth_cells: Vec<usize> = truth.set_cells().collect();
    let lower = !mask.is_empty()
        && truth_cells.par_iter().all(|&i| box_distance_to_mask(mask, &truth.cell_center(i)) <= diag + tol);
    let set: Vec<usize> = mask.set_cells().collect();
    let upper = set.par_iter().all(|&i| spec.jump_distance(&mask.cell_center(i)) + diag / 2.0 <= 2.0 * r + diag + tol);
    Ok(SandwichReport { lower, upper })
}

/// Diagrams of the rasterized jump set at the topology resolution for a given
/// estimate resolution, shared by all trials at one grid size.
struct Reference {
    factor: usize,
    diagrams: Option<Vec<PersistenceDiagram>>,
}

fn reference_for(entry: &ShapeCatalogEntry, cells: usize) -> Reference {
    let factor = TOPOLOGY_RESOLUTION.div_ceil(cells).max(1);
    let diagrams = if entry.analytic_diagrams.is_some() && entry.spec.has_jumps() {
        rasterize_jumpset(&entry.spec, cells * factor).ok().and_then(|m| diagrams(&m).ok())
    } else {
        None
    };
    Reference { factor, diagrams }
}

fn run_trial(
    config: &ExperimentConfig,
    entry: &ShapeCatalogEntry,
    params: &CalibrationParams,
    reference: &Reference,
    (n_index, side, trial): (usize, usize, usize),
) -> Result<TrialRecord> {
    let start = std::time::Instant::now();
    let spec = &entry.spec;
    let seed = config.trial_seed(n_index, trial);
    let grid = sample_to_grid(spec, side, config.sigma, seed)?;
    let est = estimate_jumpset(&grid, params)?;
    let mask = &est.mask;
    let mut record = TrialRecord {
        side,
        n: grid.len(),
        trial,
        seed,
        h: params.h,
        cells: mask.resolution(),
        r: params.r,
        kappa: params.kappa,
        status: TrialStatus::Ok,
        mask_count: mask.count(),
        hausdorff: None,
        forward: None,
        backward: None,
        sandwich: None,
        betti: None,
        betti_match: None,
        betti_ties: None,
        bottleneck: None,
        bottleneck_ok: None,
        wall_time_s: 0.0,
    };
    if config.checks.sandwich {
        record.sandwich = Some(sandwich_check(mask, spec, params.r)?.holds());
    }
    if mask.is_empty() {
        record.status = TrialStatus::EmptyMask;
        record.wall_time_s = start.elapsed().as_secs_f64();
        return Ok(record);
    }
    if config.checks.hausdorff && spec.has_jumps() {
        let h = hausdorff_to_truth(mask, spec)?;
        record.hausdorff = Some(h.distance);
        record.forward = Some(h.forward);
        record.backward = Some(h.backward);
    }
    if config.checks.betti || config.checks.bottleneck {
        let fine = mask.subdivide(reference.factor)?;
        let dgms = diagrams(&fine)?;
        if config.checks.betti {
            let est = betti_estimate(&dgms, params.kappa)?;
            let betti = betti_vector(&est);
            record.betti_match = Some(betti == entry.betti);
            record.betti_ties = Some(est.iter().map(|e| e.ties).sum());
            record.betti = Some(betti);
        }
        if config.checks.bottleneck {
            if let Some(reference) = &reference.diagrams {
                let dists: Vec<f64> = reference.iter().zip(&dgms).map(|(a, b)| bottleneck(a, b)).collect();
                let bound = 2.0 * params.r + 2.0 * mask.cell_diagonal();
                let degrees = spec.dim.min(2);
                record.bottleneck_ok = Some(dists[..degrees].iter().all(|&d| d <= bound));
                record.bottleneck = Some(dists);
            }
        }
    }
    record.wall_time_s = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Runs every trial at every grid size of the configuration.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let entry = config.shape.build()?;
    if !(config.sigma > 0.0) && config.sigma_mode == KnownMode::Known && config.calibration_sigma.is_none() {
        return Err(invalid("noiseless runs need calibration_sigma or sigma_mode = unknown"));
    }
    let mut records = Vec::new();
    for (n_index, &side) in config.n_values.iter().enumerate() {
        let params = config.calibration(&entry.spec, side)?;
        let reference = reference_for(&entry, params.cells_per_axis());
        if config.checks.bottleneck && reference.diagrams.is_none() {
            log::warn!("no reference diagram for '{}'; bottleneck check skipped", entry.spec.name);
        }
        let batch: Vec<TrialRecord> = (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, &entry, &params, &reference, (n_index, side, t)))
            .collect::<Result<_>>()?;
        log::info!("N = {side}: {} trials done", batch.len());
        records.extend(batch);
    }
    Ok(records)
}

/// Mean Hausdorff error per grid size over trials with a nonempty estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub side: usize,
    pub n: usize,
    /// `log(n^2) / n`.
    pub rate: f64,
    pub mean_hausdorff: Option<f64>,
    pub mean_r: f64,
    pub ok_trials: usize,
    pub failed_trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub records: Vec<TrialRecord>,
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `log mean d_H` against `log(log(n^2)/n)`.
    pub slope: Option<f64>,
    /// Mean of `d_H / r` over successful trials.
    pub empirical_constant: Option<f64>,
}

pub fn run_rate_sweep(config: &ExperimentConfig) -> Result<RateSweep> {
    let mut config = config.clone();
    config.checks.betti = false;
    config.checks.bottleneck = false;
    config.checks.hausdorff = true;
    let records = run_trials(&config)?;
    let points = rate_points(&records);
    let fit: Vec<(f64, f64)> = points.iter().filter_map(|p| p.mean_hausdorff.map(|e| (p.rate.ln(), e.ln()))).collect();
    let slope = least_squares_slope(&fit);
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.hausdorff.map(|d| d / r.r)).collect();
    let empirical_constant = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    Ok(RateSweep { records, points, slope, empirical_constant })
}

fn rate_points(records: &[TrialRecord]) -> Vec<RatePoint> {
    let mut by_side: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_side.entry(r.side).or_default().push(r);
    }
    by_side
        .into_iter()
        .map(|(side, rs)| {
            let n = rs[0].n;
            let errors: Vec<f64> = rs.iter().filter_map(|r| r.hausdorff).collect();
            RatePoint {
                side,
                n,
                rate: (n as f64 * n as f64).ln() / n as f64,
                mean_hausdorff: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
                mean_r: rs[0].r,
                ok_trials: errors.len(),
                failed_trials: rs.len() - errors.len(),
            }
        })
        .collect()
}

/// Slope of the least-squares line; `None` with fewer than two distinct `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub side: usize,
    pub trials: usize,
    pub empty_trials: usize,
    pub betti_match: f64,
    pub sandwich: f64,
    /// `None` when the shape has no reference diagram.
    pub bottleneck_within_bound: Option<f64>,
    /// Bottleneck violations among trials where the sandwich held.
    pub bottleneck_violations_given_sandwich: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub shape: String,
    pub expected_betti: Vec<usize>,
    pub points: Vec<ConsistencyPoint>,
    pub notices: Vec<String>,
    pub records: Vec<TrialRecord>,
}

pub fn run_topology_consistency(config: &ExperimentConfig) -> Result<ConsistencyReport> {
    let entry = config.shape.build()?;
    let records = run_trials(config)?;
    let mut notices = Vec::new();
    if config.checks.bottleneck && entry.analytic_diagrams.is_none() {
        notices.push(format!("shape '{}' has no analytic diagram; bottleneck check skipped", entry.spec.name));
    }
    let mut by_side: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
    for r in &records {
        by_side.entry(r.side).or_default().push(r);
    }
    let freq = |rs: &[&TrialRecord], f: &dyn Fn(&TrialRecord) -> Option<bool>| {
        rs.iter().filter(|r| f(r) == Some(true)).count() as f64 / rs.len() as f64
    };
    let points = by_side
        .into_iter()
        .map(|(side, rs)| {
            let has_bottleneck = rs.iter().any(|r| r.bottleneck_ok.is_some());
            ConsistencyPoint {
                side,
                trials: rs.len(),
                empty_trials: rs.iter().filter(|r| r.status == TrialStatus::EmptyMask).count(),
                betti_match: freq(&rs, &|r| r.betti_match),
                sandwich: freq(&rs, &|r| r.sandwich),
                bottleneck_within_bound: has_bottleneck.then(|| freq(&rs, &|r| r.bottleneck_ok)),
                bottleneck_violations_given_sandwich: has_bottleneck
                    .then(|| rs.iter().filter(|r| r.sandwich == Some(true) && r.bottleneck_ok == Some(false)).count()),
            }
        })
        .collect();
    Ok(ConsistencyReport {
        shape: entry.spec.name.clone(),
        expected_betti: entry.betti.clone(),
        points,
        notices,
        records,
    })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn joined<T: ToString>(v: &Option<Vec<T>>) -> String {
    v.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")).unwrap_or_default()
}

/// Trial table as CSV. Empty fields mean "not computed"; vectors are `;`-joined.
pub fn write_records_csv(records: &[TrialRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "N",
        "n",
        "trial",
        "seed",
        "h",
        "cells",
        "r",
        "kappa",
        "status",
        "mask_count",
        "hausdorff",
        "forward",
        "backward",
        "sandwich",
        "betti",
        "betti_match",
        "betti_ties",
        "bottleneck",
        "bottleneck_ok",
    ])?;
    for r in records {
        let status = match r.status {
            TrialStatus::Ok => "ok",
            TrialStatus::EmptyMask => "empty-mask",
        };
        w.write_record([
            SCHEMA_VERSION.to_string(),
            r.side.to_string(),
            r.n.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.h.to_string(),
            r.cells.to_string(),
            r.r.to_string(),
            r.kappa.to_string(),
            status.to_string(),
            r.mask_count.to_string(),
            opt(&r.hausdorff),
            opt(&r.forward),
            opt(&r.backward),
            opt(&r.sandwich),
            joined(&r.betti),
            opt(&r.betti_match),
            opt(&r.betti_ties),
            joined(&r.bottleneck),
            opt(&r.bottleneck_ok),
        ])?;
    }
    w.flush().map_err(Error::Io)?;
    Ok(())
}
