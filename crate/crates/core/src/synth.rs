//! Ground-truth signals with analytically known jump sets, seeded sampling on
//! the observation lattice, and rasterization of the jump set.
//!
//! Noise is drawn from a ChaCha8 stream seeded with `seed_from_u64(seed)`,
//! converted to standard normals by the ziggurat sampler of `rand_distr`, one
//! draw per lattice point in row-major order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{
    lattice, CubicalMask, DiagramPoint, Geometry, Modulus, ObservationGrid, PersistenceDiagram, Piece, Region,
    ShapeSpec,
};

/// Constructor parameters for every catalog shape. This is what the ground
/// truth sidecar stores, so a shape can be rebuilt from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ShapeParams {
    /// Disjoint circles in the unit square, value `l` inside, 0 outside.
    Circles { centers: Vec<[f64; 2]>, radii: Vec<f64>, l: f64 },
    /// `f = l 1{x_1 > 1/2}` plus an optional linear ramp along the last axis.
    HalfSpace {
        d: usize,
        l: f64,
        #[serde(default)]
        slope: f64,
    },
    /// Half-space with a pyramid of height `2h` attached at `x_1 = 1/2`.
    Pyramid { d: usize, h: f64, theta: f64, mu: f64, l: f64 },
    /// Constant signal without jumps.
    Flat {
        d: usize,
        value: f64,
        #[serde(default = "default_flat_floor")]
        l: f64,
    },
}

fn default_flat_floor() -> f64 {
    1.0
}

impl ShapeParams {
    /// The two-circle configuration used by the experiments.
    pub fn two_circles(l: f64) -> Self {
        ShapeParams::Circles { centers: vec![[0.3, 0.5], [0.7, 0.5]], radii: vec![0.15, 0.15], l }
    }

    /// Catalog defaults by name: `two-circles`, `circle`, `half-space`,
    /// `half-space-ramp`, `pyramid`, `flat`.
    pub fn by_name(name: &str, d: usize, l: f64) -> Result<Self> {
        Ok(match name {
            "two-circles" => Self::two_circles(l),
            "circle" => ShapeParams::Circles { centers: vec![[0.5, 0.5]], radii: vec![0.2], l },
            "half-space" | "halfspace" => ShapeParams::HalfSpace { d, l, slope: 0.0 },
            "half-space-ramp" => ShapeParams::HalfSpace { d, l, slope: 1.0 },
            "pyramid" => ShapeParams::Pyramid { d, h: 0.1, theta: std::f64::consts::FRAC_PI_3, mu: 1.0, l },
            "flat" => ShapeParams::Flat { d, value: 0.0, l },
            other => return Err(invalid(format!("unknown shape '{other}'"))),
        })
    }

    pub fn build(&self) -> Result<ShapeCatalogEntry> {
        match self {
            ShapeParams::Circles { centers, radii, l } => make_two_circles(centers, radii, *l),
            ShapeParams::HalfSpace { d, l, slope } if *slope == 0.0 => make_halfspace_step(*d, *l),
            ShapeParams::HalfSpace { d, l, slope } => make_halfspace_ramp(*d, *l, *slope),
            ShapeParams::Pyramid { d, h, theta, mu, l } => make_pyramid_perturbation(*d, *h, *theta, *mu, *l),
            ShapeParams::Flat { d, value, l } => make_flat(*d, *value, *l),
        }
    }
}

/// A shape together with its analytic topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeCatalogEntry {
    pub params: ShapeParams,
    pub spec: ShapeSpec,
    /// `beta_s(D_f)` for `s = 0..d`.
    pub betti: Vec<usize>,
    /// Diagrams of the offset filtration of `D_f` for `s = 0..d` when known in
    /// closed form; `None` means only a rasterized oracle is available.
    pub analytic_diagrams: Option<Vec<PersistenceDiagram>>,
}

impl ShapeCatalogEntry {
    /// Ground-truth metadata written next to generated observations.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.spec.name,
            "params": self.params,
            "d": self.spec.dim,
            "l": self.spec.jump_floor,
            "mu": self.spec.mu,
            "reach_mu": self.spec.reach_mu,
            "modulus": self.spec.modulus,
            "betti": self.betti,
            "analytic_diagrams": self.analytic_diagrams,
        })
    }

    pub fn from_sidecar(value: &serde_json::Value) -> Result<Self> {
        let params: ShapeParams = serde_json::from_value(
            value.get("params").cloned().ok_or_else(|| Error::Format("sidecar has no 'params'".into()))?,
        )?;
        params.build()
    }
}

fn constant(label: &str, value: f64) -> Region {
    Region { label: label.to_string(), piece: Piece::Constant { value } }
}

fn empty_diagrams(dim: usize) -> Vec<PersistenceDiagram> {
    (0..=dim).map(|s| PersistenceDiagram::new(s, vec![])).collect()
}

/// Disjoint circles in `[0,1]^2`; the signal is `l` on each open disk and 0
/// elsewhere, so each circle is a jump of exactly `l`.
pub fn make_two_circles(centers: &[[f64; 2]], radii: &[f64], l: f64) -> Result<ShapeCatalogEntry> {
    if centers.is_empty() || centers.len() != radii.len() {
        return Err(invalid("need one radius per centre and at least one circle"));
    }
    if !(l > 0.0) {
        return Err(invalid(format!("jump floor must be positive, got {l}")));
    }
    for (c, &r) in centers.iter().zip(radii) {
        if !(r > 0.0) {
            return Err(Error::InvalidGeometry(format!("radius must be positive, got {r}")));
        }
        if c.iter().any(|&x| x - r <= 0.0 || x + r >= 1.0) {
            return Err(Error::InvalidGeometry(format!("circle at {c:?} with radius {r} leaves the unit square")));
        }
    }
    let mut reach = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let mut gaps = Vec::new();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let dist = ((centers[i][0] - centers[j][0]).powi(2) + (centers[i][1] - centers[j][1]).powi(2)).sqrt();
            let gap = dist - radii[i] - radii[j];
            if gap <= 0.0 {
                return Err(Error::InvalidGeometry(format!("circles {i} and {j} overlap (gap {gap})")));
            }
            reach = reach.min(gap / 2.0);
            gaps.push(gap);
        }
    }
    let k = centers.len();
    let mut regions = vec![constant("exterior", 0.0)];
    regions.extend((0..k).map(|i| constant(&format!("disk {i}"), l)));
    let spec = ShapeSpec {
        name: if k == 2 { "two-circles".into() } else { format!("{k}-circles") },
        dim: 2,
        geometry: Geometry::Balls { centers: centers.iter().map(|c| c.to_vec()).collect(), radii: radii.to_vec() },
        regions,
        jump_floor: l,
        mu: 1.0,
        reach_mu: Some(reach),
        modulus: Modulus::Constant,
    };
    spec.validate()?;
    let analytic_diagrams = match k {
        1 => Some(vec![
            PersistenceDiagram::new(0, vec![DiagramPoint::essential(0.0)]),
            PersistenceDiagram::new(1, vec![DiagramPoint::new(0.0, radii[0])]),
            PersistenceDiagram::new(2, vec![]),
        ]),
        // Offsets of two circles meet at half the gap; each hole fills at its radius.
        2 => Some(vec![
            PersistenceDiagram::new(0, vec![DiagramPoint::essential(0.0), DiagramPoint::new(0.0, gaps[0] / 2.0)]),
            PersistenceDiagram::new(1, vec![DiagramPoint::new(0.0, radii[0]), DiagramPoint::new(0.0, radii[1])]),
            PersistenceDiagram::new(2, vec![]),
        ]),
        _ => None,
    };
    Ok(ShapeCatalogEntry {
        params: ShapeParams::Circles { centers: centers.to_vec(), radii: radii.to_vec(), l },
        spec,
        betti: vec![k, k, 0],
        analytic_diagrams,
    })
}

fn halfspace_diagrams(d: usize) -> Vec<PersistenceDiagram> {
    let mut dgms = empty_diagrams(d);
    dgms[0] = PersistenceDiagram::new(0, vec![DiagramPoint::essential(0.0)]);
    dgms
}

fn connected_betti(d: usize) -> Vec<usize> {
    let mut betti = vec![0; d + 1];
    betti[0] = 1;
    betti
}

/// `f = l 1{x_1 > 1/2}`; the jump set is the hyperplane `x_1 = 1/2`.
pub fn make_halfspace_step(d: usize, l: f64) -> Result<ShapeCatalogEntry> {
    halfspace(d, l, 0.0)
}

/// Half-space step plus the ramp `slope * x_d` on both sides. The jump is still
/// exactly `l`; the pieces are `|slope|`-Lipschitz.
pub fn make_halfspace_ramp(d: usize, l: f64, slope: f64) -> Result<ShapeCatalogEntry> {
    halfspace(d, l, slope)
}

fn halfspace(d: usize, l: f64, slope: f64) -> Result<ShapeCatalogEntry> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !slope.is_finite() {
        return Err(invalid("slope must be finite"));
    }
    let (regions, modulus) = if slope == 0.0 {
        (vec![constant("x1 <= 1/2", 0.0), constant("x1 > 1/2", l)], Modulus::Constant)
    } else {
        let mut gradient = vec![0.0; d];
        gradient[d - 1] = slope;
        let piece = |offset| Piece::Affine { offset, gradient: gradient.clone() };
        (
            vec![
                Region { label: "x1 <= 1/2".into(), piece: piece(0.0) },
                Region { label: "x1 > 1/2".into(), piece: piece(l) },
            ],
            Modulus::Lipschitz(slope.abs()),
        )
    };
    let spec = ShapeSpec {
        name: if slope == 0.0 { "half-space".into() } else { "half-space-ramp".into() },
        dim: d,
        geometry: Geometry::HalfSpace { axis: 0, offset: 0.5 },
        regions,
        jump_floor: l,
        mu: 1.0,
        reach_mu: None,
        modulus,
    };
    spec.validate()?;
    Ok(ShapeCatalogEntry {
        params: ShapeParams::HalfSpace { d, l, slope },
        spec,
        betti: connected_betti(d),
        analytic_diagrams: Some(halfspace_diagrams(d)),
    })
}

/// Half-space `{x_1 <= 1/2}` with a filled regular pyramid attached, apex at
/// `(1/2 + 2h, 1/2, ..., 1/2)` and half-angle `theta` between the axis and the
/// lateral faces. `f = 0` on the union and `l` elsewhere.
///
/// `mu` is recorded as given after checking `theta > arccos(mu) / 2`.
pub fn make_pyramid_perturbation(d: usize, h: f64, theta: f64, mu: f64, l: f64) -> Result<ShapeCatalogEntry> {
    if !(2..=5).contains(&d) {
        return Err(invalid(format!("pyramid perturbation supports 2 <= d <= 5, got {d}")));
    }
    if !(h > 0.0) || !(l > 0.0) {
        return Err(invalid("h and l must be positive"));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(invalid(format!("mu must lie in (0, 1], got {mu}")));
    }
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidGeometry(format!("principal angle must lie in (0, pi/2), got {theta}")));
    }
    if theta <= mu.acos() / 2.0 {
        return Err(Error::InvalidGeometry(format!(
            "principal angle {theta} must exceed arccos(mu)/2 = {}",
            mu.acos() / 2.0
        )));
    }
    let height = 2.0 * h;
    let half_width = height * theta.tan();
    if 0.5 + height >= 1.0 || half_width >= 0.5 {
        return Err(Error::InvalidGeometry(format!(
            "pyramid (height {height}, base half-width {half_width}) does not fit inside the unit cube"
        )));
    }
    let spec = ShapeSpec {
        name: "pyramid".into(),
        dim: d,
        geometry: Geometry::PyramidBump { height, half_width },
        regions: vec![constant("half-space with pyramid", 0.0), constant("rest", l)],
        jump_floor: l,
        mu,
        reach_mu: Some(height.min(half_width) / 2.0),
        modulus: Modulus::Constant,
    };
    spec.validate()?;
    Ok(ShapeCatalogEntry {
        params: ShapeParams::Pyramid { d, h, theta, mu, l },
        spec,
        betti: connected_betti(d),
        analytic_diagrams: None,
    })
}

/// Constant signal; the jump set is empty.
pub fn make_flat(d: usize, value: f64, l: f64) -> Result<ShapeCatalogEntry> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let spec = ShapeSpec {
        name: "flat".into(),
        dim: d,
        geometry: Geometry::Flat,
        regions: vec![constant("everything", value)],
        jump_floor: l,
        mu: 1.0,
        reach_mu: None,
        modulus: Modulus::Constant,
    };
    spec.validate()?;
    Ok(ShapeCatalogEntry {
        params: ShapeParams::Flat { d, value, l },
        spec,
        betti: vec![0; d + 1],
        analytic_diagrams: Some(empty_diagrams(d)),
    })
}

/// Samples `f` on the `N^d` lattice and adds `sigma` times standard normal noise.
pub fn sample_to_grid(spec: &ShapeSpec, side: usize, sigma: f64, seed: u64) -> Result<ObservationGrid> {
    if side < 2 {
        return Err(invalid(format!("N must be at least 2, got {side}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let n = lattice::volume(side, spec.dim).ok_or_else(|| invalid("N^d overflows"))?;
    let signal: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut k = vec![0; spec.dim];
            lattice::unravel(i, side, &mut k);
            let x: Vec<f64> = k.iter().map(|&k| (k as f64 + 0.5) / side as f64).collect();
            spec.value(&x)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = signal
        .into_iter()
        .map(|f| {
            let z: f64 = rng.sample(StandardNormal);
            f + sigma * z
        })
        .collect();
    Ok(ObservationGrid::new(spec.dim, side, values, Some(sigma))?.with_seed(Some(seed)))
}

/// Cells whose centre lies within half a cell diagonal of `D_f`. Every cell
/// meeting `D_f` is included, so the mask is within `sqrt(d)/m` of `D_f` in
/// Hausdorff distance.
pub fn rasterize_jumpset(spec: &ShapeSpec, resolution: usize) -> Result<CubicalMask> {
    if resolution < 8 {
        return Err(invalid(format!("rasterization needs m >= 8, got {resolution}")));
    }
    if let Geometry::PyramidBump { height, .. } = spec.geometry {
        let h = height / 2.0;
        if h <= 2.0 / resolution as f64 {
            return Err(invalid(format!(
                "pyramid scale h = {h} must exceed 2/m = {} to be resolved",
                2.0 / resolution as f64
            )));
        }
    }
    let cell = 1.0 / resolution as f64;
    let tol = 0.5 * (spec.dim as f64).sqrt() * cell * (1.0 + 1e-12);
    let n = lattice::volume(resolution, spec.dim).ok_or_else(|| invalid("m^d overflows"))?;
    let bits = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut k = vec![0; spec.dim];
            lattice::unravel(i, resolution, &mut k);
            let x: Vec<f64> = k.iter().map(|&k| (k as f64 + 0.5) * cell).collect();
            spec.jump_distance(&x) <= tol
        })
        .collect();
    CubicalMask::from_bits(spec.dim, resolution, bits)
}

/// Points lying on `D_f`, for boundary checks. Deterministic for a given seed.
pub fn sample_jump_set(spec: &ShapeSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim;
    let mut out = Vec::with_capacity(count);
    match &spec.geometry {
        Geometry::Flat => {}
        Geometry::Balls { centers, radii } => {
            for i in 0..count {
                let b = i % radii.len();
                let mut dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                dir.iter_mut().for_each(|v| *v /= norm);
                out.push(centers[b].iter().zip(&dir).map(|(c, u)| c + radii[b] * u).collect());
            }
        }
        Geometry::HalfSpace { axis, offset } => {
            for _ in 0..count {
                let mut x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                x[*axis] = *offset;
                out.push(x);
            }
        }
        Geometry::PyramidBump { height, half_width } => {
            let faces = crate::model::pyramid_faces(d, *height, *half_width);
            while out.len() < count {
                if out.len() % 2 == 0 {
                    let face = &faces[rng.random_range(0..faces.len())];
                    let weights: Vec<f64> = face.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                    let total: f64 = weights.iter().sum();
                    let x = (0..d).map(|c| face.iter().zip(&weights).map(|(v, w)| v[c] * w / total).sum()).collect();
                    out.push(x);
                } else {
                    let mut x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                    x[0] = 0.5;
                    if x[1..].iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max) >= *half_width {
                        out.push(x);
                    }
                }
            }
        }
    }
    out
}

/// Outcome of the generator self-test for one catalog entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub name: String,
    /// Every dense sample point fell in a region with a finite value.
    pub covers_cube: bool,
    /// Smallest `limsup - liminf` seen across sampled boundary points.
    pub min_boundary_gap: f64,
    pub gap_ok: bool,
    /// Betti numbers of a fine rasterization of `D_f`.
    pub raster_betti: Vec<usize>,
    pub betti_ok: bool,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.covers_cube && self.gap_ok && self.betti_ok
    }
}

/// Checks region coverage, the jump floor (gap `>= l` up to rounding) and the
/// declared Betti numbers against an independent homology computation of a
/// rasterization at `resolution`.
pub fn self_test(entry: &ShapeCatalogEntry, resolution: usize) -> Result<SelfTestReport> {
    let spec = &entry.spec;
    let d = spec.dim;
    let probe_side = if d <= 2 { 64 } else { 12 };
    let covers_cube = lattice::indices(probe_side, d).all(|k| {
        let x: Vec<f64> = k.iter().map(|&k| k as f64 / (probe_side - 1) as f64).collect();
        spec.region_index(&x) < spec.regions.len() && spec.value(&x).is_finite()
    });

    let eps = 1e-7;
    let mut min_gap = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for axis in 0..d {
        for sign in [-1.0, 1.0] {
            let mut u = vec![0.0; d];
            u[axis] = sign;
            directions.push(u);
        }
    }
    for _ in 0..8 {
        let mut u: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= norm);
        directions.push(u);
    }
    for p in sample_jump_set(spec, 400, 7) {
        let probes: Vec<f64> = directions
            .iter()
            .map(|u| p.iter().zip(u).map(|(x, u)| x + eps * u).collect::<Vec<f64>>())
            .filter(|y: &Vec<f64>| y.iter().all(|&v| (0.0..=1.0).contains(&v)))
            .map(|y| spec.value(&y))
            .collect();
        let hi = probes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = probes.iter().copied().fold(f64::INFINITY, f64::min);
        min_gap = min_gap.min(hi - lo);
    }
    let gap_ok = !spec.has_jumps() || min_gap >= spec.jump_floor * (1.0 - 1e-9);

    let raster = rasterize_jumpset(spec, resolution)?;
    let raster_betti = crate::oracle::brute_betti(&raster)?;
    let betti_ok = raster_betti == entry.betti;
    Ok(SelfTestReport {
        name: spec.name.clone(),
        covers_cube,
        min_boundary_gap: min_gap,
        gap_ok,
        raster_betti,
        betti_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_circles_topology() {
        let e = make_two_circles(&[[0.3, 0.5], [0.7, 0.5]], &[0.15, 0.15], 4.0).unwrap();
        assert_eq!(&e.betti[..2], &[2, 2]);
        assert_eq!(e.spec.mu, 1.0);
        assert_relative_eq!(e.spec.reach_mu.unwrap(), 0.05, max_relative = 1e-12);
        let single = make_two_circles(&[[0.5, 0.5]], &[0.2], 4.0).unwrap();
        assert_eq!(&single.betti[..2], &[1, 1]);
    }

    #[test]
    fn overlapping_circles_rejected() {
        let err = make_two_circles(&[[0.4, 0.5], [0.6, 0.5]], &[0.15, 0.15], 4.0).unwrap_err();
        assert!(matches!(err, Error::InvalidGeometry(_)));
    }

    #[test]
    fn halfspace_distances() {
        let s = make_halfspace_step(2, 4.0).unwrap().spec;
        assert_eq!(s.jump_distance(&[0.5, 0.3]), 0.0);
        assert_relative_eq!(s.jump_distance(&[0.1, 0.9]), 0.4);
        let s3 = make_halfspace_step(3, 1.0).unwrap().spec;
        assert_relative_eq!(s3.jump_distance(&[0.9, 0.5, 0.5]), 0.4);
        assert_eq!(s.value(&[0.5, 0.2]), 0.0);
        assert_eq!(s.value(&[0.51, 0.2]), 4.0);
    }

    #[test]
    fn pyramid_geometry() {
        let e = make_pyramid_perturbation(2, 0.1, std::f64::consts::FRAC_PI_3, 1.0, 4.0).unwrap();
        let s = &e.spec;
        // apex sits 2h from the plane and lies on the jump set
        assert_eq!(s.jump_distance(&[0.7, 0.5]), 0.0);
        assert_relative_eq!(s.jump_distance(&[0.8, 0.5]), 0.1, max_relative = 1e-12);
        // inside the base, the plane is not part of the jump set
        assert!(s.jump_distance(&[0.5, 0.5]) > 0.1);
        assert_eq!(s.value(&[0.6, 0.5]), 0.0);
        assert_eq!(s.value(&[0.6, 0.05]), 4.0);
        assert_eq!(e.betti[0], 1);
    }

    #[test]
    fn pyramid_rejects_angle_below_mu_bound() {
        // arccos(0.5)/2 = pi/6
        assert!(make_pyramid_perturbation(2, 0.1, 0.5, 0.5, 4.0).is_err());
        assert!(make_pyramid_perturbation(2, 0.1, 0.6, 0.5, 4.0).is_ok());
        assert!(make_pyramid_perturbation(6, 0.1, 1.0, 1.0, 4.0).is_err());
    }

    #[test]
    fn pyramid_resolution_guard() {
        let s = make_pyramid_perturbation(2, 0.1, std::f64::consts::FRAC_PI_3, 1.0, 4.0).unwrap().spec;
        assert!(rasterize_jumpset(&s, 16).is_err());
        assert!(rasterize_jumpset(&s, 32).is_ok());
    }

    #[test]
    fn noiseless_sampling_reproduces_signal() {
        let e = make_two_circles(&[[0.3, 0.5], [0.7, 0.5]], &[0.15, 0.15], 4.0).unwrap();
        let g = sample_to_grid(&e.spec, 32, 0.0, 9).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.values()[i], e.spec.value(&g.point(i)));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = make_halfspace_step(2, 4.0).unwrap().spec;
        let a = sample_to_grid(&s, 16, 0.3, 42).unwrap();
        let b = sample_to_grid(&s, 16, 0.3, 42).unwrap();
        let c = sample_to_grid(&s, 16, 0.3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn noise_mean_is_centred() {
        // 10^6 draws: the mean residual lies within 4 sigma / 10^3
        let s = make_flat(2, 1.5, 1.0).unwrap().spec;
        let sigma = 0.8;
        let g = sample_to_grid(&s, 1000, sigma, 2024).unwrap();
        let mean = g.values().iter().map(|v| v - 1.5).sum::<f64>() / g.len() as f64;
        assert!(mean.abs() <= 4.0 * sigma / 1e3, "mean residual {mean}");
    }

    #[test]
    fn halfspace_raster_is_the_straddling_column() {
        let s = make_halfspace_step(2, 4.0).unwrap().spec;
        let mask = rasterize_jumpset(&s, 64).unwrap();
        let expected = CubicalMask::from_fn(2, 64, |c| c[0] == 31 || c[0] == 32).unwrap();
        assert_eq!(mask, expected);
    }

    #[test]
    fn flat_raster_is_empty() {
        let s = make_flat(2, 1.0, 1.0).unwrap().spec;
        assert!(rasterize_jumpset(&s, 16).unwrap().is_empty());
    }

    #[test]
    fn catalog_self_tests_pass() {
        let entries = [
            ShapeParams::two_circles(4.0),
            ShapeParams::by_name("circle", 2, 4.0).unwrap(),
            ShapeParams::by_name("half-space", 2, 4.0).unwrap(),
            ShapeParams::by_name("half-space", 3, 4.0).unwrap(),
            ShapeParams::by_name("half-space-ramp", 2, 4.0).unwrap(),
            ShapeParams::by_name("pyramid", 2, 4.0).unwrap(),
            ShapeParams::by_name("pyramid", 3, 4.0).unwrap(),
            ShapeParams::by_name("flat", 2, 4.0).unwrap(),
        ];
        for p in entries {
            let e = p.build().unwrap();
            let res = if e.spec.dim == 2 { 64 } else { 24 };
            let report = self_test(&e, res).unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn sidecar_rebuilds_shape() {
        let e = make_pyramid_perturbation(3, 0.1, 1.0, 0.9, 2.0).unwrap();
        let back = ShapeCatalogEntry::from_sidecar(&e.sidecar()).unwrap();
        assert_eq!(back, e);
    }
}
