use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Regularity of the signal inside each region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "constant", rename_all = "snake_case")]
pub enum Modulus {
    /// Piecewise constant signal, `omega = 0`.
    Constant,
    /// `omega(t) = L t`.
    Lipschitz(f64),
}

impl Modulus {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Modulus::Constant => 0.0,
            Modulus::Lipschitz(l) => l * t,
        }
    }
}

/// Restriction of the signal to one region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    Constant { value: f64 },
    Affine { offset: f64, gradient: Vec<f64> },
}

impl Piece {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Piece::Constant { value } => *value,
            Piece::Affine { offset, gradient } => offset + gradient.iter().zip(x).map(|(g, x)| g * x).sum::<f64>(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub piece: Piece,
}

/// Partition of the unit cube into regions, with a closed-form distance to the
/// union of region boundaries. Region 0 is the designated region: points on a
/// boundary take the value of region 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// One region, no boundary.
    Flat,
    /// Disjoint open balls. Region `i + 1` is ball `i`; region 0 is the exterior.
    Balls { centers: Vec<Vec<f64>>, radii: Vec<f64> },
    /// Region 1 is `{x[axis] > offset}`, region 0 its closed complement.
    HalfSpace { axis: usize, offset: f64 },
    /// Region 0 is `{x_1 <= 1/2}` together with a filled regular pyramid whose
    /// base is the square `|x_k - 1/2| <= half_width` (k >= 2) in the plane
    /// `x_1 = 1/2` and whose apex is `(1/2 + height, 1/2, ..., 1/2)`.
    PyramidBump { height: f64, half_width: f64 },
}

impl Geometry {
    pub fn region_count(&self) -> usize {
        match self {
            Geometry::Flat => 1,
            Geometry::Balls { radii, .. } => radii.len() + 1,
            Geometry::HalfSpace { .. } | Geometry::PyramidBump { .. } => 2,
        }
    }

    pub fn region_index(&self, x: &[f64]) -> usize {
        match self {
            Geometry::Flat => 0,
            Geometry::Balls { centers, radii } => {
                centers.iter().zip(radii).position(|(c, &r)| norm_diff(x, c) < r).map_or(0, |i| i + 1)
            }
            Geometry::HalfSpace { axis, offset } => usize::from(x[*axis] > *offset),
            Geometry::PyramidBump { height, half_width } => {
                let in_half_space = x[0] <= 0.5;
                let apex = 0.5 + height;
                let spread = (apex - x[0]) * half_width / height;
                let in_pyramid = x[0] >= 0.5 && x[0] <= apex && lateral_linf(x) <= spread;
                usize::from(!(in_half_space || in_pyramid))
            }
        }
    }

    /// Euclidean distance from `x` to the union of region boundaries inside the
    /// unit cube. `f64::INFINITY` when there is no boundary.
    pub fn jump_distance(&self, x: &[f64]) -> f64 {
        match self {
            Geometry::Flat => f64::INFINITY,
            Geometry::Balls { centers, radii } => {
                centers.iter().zip(radii).map(|(c, &r)| (norm_diff(x, c) - r).abs()).fold(f64::INFINITY, f64::min)
            }
            Geometry::HalfSpace { axis, offset } => (x[*axis] - offset).abs(),
            Geometry::PyramidBump { height, half_width } => {
                let dim = x.len();
                let deficit = (half_width - lateral_linf(x)).max(0.0);
                let plane = ((x[0] - 0.5).powi(2) + deficit * deficit).sqrt();
                pyramid_faces(dim, *height, *half_width)
                    .iter()
                    .map(|s| point_simplex_distance(x, s))
                    .fold(plane, f64::min)
            }
        }
    }
}

/// `max_{k >= 2} |x_k - 1/2|`, zero in one dimension.
fn lateral_linf(x: &[f64]) -> f64 {
    x[1..].iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max)
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Lateral faces of the pyramid as a list of simplices (vertex lists). Each face
/// is the cone from the apex over one facet of the base cube; the facet is
/// split by the Kuhn triangulation.
pub fn pyramid_faces(dim: usize, height: f64, half_width: f64) -> Vec<Vec<Vec<f64>>> {
    let mut apex = vec![0.5; dim];
    apex[0] = 0.5 + height;
    let mut faces = Vec::new();
    for axis in 1..dim {
        for sign in [-1.0, 1.0] {
            let free: Vec<usize> = (1..dim).filter(|&k| k != axis).collect();
            for order in permutations(&free) {
                let mut v = vec![0.5 - half_width; dim];
                v[0] = 0.5;
                v[axis] = 0.5 + sign * half_width;
                let mut simplex = vec![apex.clone(), v.clone()];
                for &k in &order {
                    v[k] = 0.5 + half_width;
                    simplex.push(v.clone());
                }
                faces.push(simplex);
            }
        }
    }
    faces
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Exact Euclidean distance from `x` to the simplex spanned by `vertices`.
///
/// The nearest point lies in the relative interior of some face, where it is
/// the orthogonal projection onto that face's affine hull with positive
/// barycentric coordinates. All faces are enumerated.
pub(crate) fn point_simplex_distance(x: &[f64], vertices: &[Vec<f64>]) -> f64 {
    let k = vertices.len();
    assert!(k <= 16, "simplex too large for face enumeration");
    let mut best = f64::INFINITY;
    for subset in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| subset & (1 << i) != 0).collect();
        if let Some(p) = project_affine(x, vertices, &idx) {
            best = best.min(norm_diff(x, &p));
        }
    }
    best
}

/// Projection of `x` onto `aff(vertices[idx])` if it lies in the face's convex hull.
fn project_affine(x: &[f64], vertices: &[Vec<f64>], idx: &[usize]) -> Option<Vec<f64>> {
    let base = &vertices[idx[0]];
    let edges: Vec<Vec<f64>> =
        idx[1..].iter().map(|&i| vertices[i].iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    let q = edges.len();
    if q == 0 {
        return Some(base.clone());
    }
    let rel: Vec<f64> = x.iter().zip(base).map(|(a, b)| a - b).collect();
    let mut gram = vec![vec![0.0; q + 1]; q];
    for i in 0..q {
        for j in 0..q {
            gram[i][j] = dot(&edges[i], &edges[j]);
        }
        gram[i][q] = dot(&edges[i], &rel);
    }
    let lambda = solve_augmented(gram)?;
    const EPS: f64 = 1e-12;
    if lambda.iter().any(|&l| l < -EPS) || lambda.iter().sum::<f64>() > 1.0 + EPS {
        return None;
    }
    let mut p = base.clone();
    for (l, e) in lambda.iter().zip(&edges) {
        for (pi, ei) in p.iter_mut().zip(e) {
            *pi += l * ei;
        }
    }
    Some(p)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Gaussian elimination with partial pivoting on an `q x (q+1)` augmented matrix.
#[allow(clippy::needless_range_loop)]
fn solve_augmented(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let q = m.len();
    for col in 0..q {
        let pivot = (col..q).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..q {
            if row != col {
                let factor = m[row][col] / m[col][col];
                for c in col..=q {
                    m[row][c] -= factor * m[col][c];
                }
            }
        }
    }
    Some((0..q).map(|i| m[i][q] / m[i][i]).collect())
}

/// Ground-truth signal: region partition, per-region pieces and the geometric
/// constants of its jump set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub name: String,
    pub dim: usize,
    pub geometry: Geometry,
    pub regions: Vec<Region>,
    /// Lower bound `l` on the jump magnitude.
    pub jump_floor: f64,
    pub mu: f64,
    /// `None` when the mu-reach is unbounded (a flat boundary).
    pub reach_mu: Option<f64>,
    pub modulus: Modulus,
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("shape dimension must be positive"));
        }
        if !(self.jump_floor > 0.0 && self.jump_floor.is_finite()) {
            return Err(invalid(format!("jump floor must be positive, got {}", self.jump_floor)));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(invalid(format!("mu must lie in (0, 1], got {}", self.mu)));
        }
        if self.regions.len() != self.geometry.region_count() {
            return Err(Error::InvalidGeometry(format!(
                "geometry has {} regions but {} pieces were given",
                self.geometry.region_count(),
                self.regions.len()
            )));
        }
        for r in &self.regions {
            if let Piece::Affine { gradient, .. } = &r.piece {
                if gradient.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, actual: gradient.len() });
                }
            }
        }
        Ok(())
    }

    pub fn region_index(&self, x: &[f64]) -> usize {
        self.geometry.region_index(x)
    }

    /// Signal value `f(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.regions[self.region_index(x)].piece.eval(x)
    }

    /// `d_2(x, D_f)`.
    pub fn jump_distance(&self, x: &[f64]) -> f64 {
        self.geometry.jump_distance(x)
    }

    pub fn has_jumps(&self) -> bool {
        !matches!(self.geometry, Geometry::Flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn segment_distance() {
        let seg = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        assert_relative_eq!(point_simplex_distance(&[0.5, 0.3], &seg), 0.3);
        assert_relative_eq!(point_simplex_distance(&[-0.3, 0.4], &seg), 0.5);
        assert_relative_eq!(point_simplex_distance(&[1.3, -0.4], &seg), 0.5);
    }

    #[test]
    fn triangle_distance_matches_dense_sampling() {
        let tri = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.5]];
        let queries = [[0.2, 0.2, 0.9], [1.5, 0.5, 0.0], [-0.4, -0.3, 0.2], [0.3, 0.3, 0.15]];
        for q in queries {
            let mut brute = f64::INFINITY;
            let k = 400;
            for i in 0..=k {
                for j in 0..=(k - i) {
                    let (a, b) = (i as f64 / k as f64, j as f64 / k as f64);
                    let p: Vec<f64> =
                        (0..3).map(|c| a * tri[1][c] + b * tri[2][c] + (1.0 - a - b) * tri[0][c]).collect();
                    brute = brute.min(norm_diff(&q, &p));
                }
            }
            let exact = point_simplex_distance(&q, &tri);
            assert!(exact <= brute + 1e-12);
            assert!(brute - exact < 5e-3, "{q:?}: exact {exact} brute {brute}");
        }
    }

    #[test]
    fn pyramid_face_counts() {
        assert_eq!(pyramid_faces(2, 0.2, 0.3).len(), 2);
        assert_eq!(pyramid_faces(3, 0.2, 0.3).len(), 4);
        assert_eq!(pyramid_faces(4, 0.2, 0.3).len(), 12);
    }
}
