use serde::{Deserialize, Serialize};

use super::lattice;
use crate::error::{invalid, Error, Result};

/// A union of closed cells of the regular `m^d` partition of `[0,1]^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubicalMask {
    dim: usize,
    resolution: usize,
    bits: Vec<bool>,
}

impl CubicalMask {
    pub fn empty(dim: usize, resolution: usize) -> Result<Self> {
        Self::from_bits(dim, resolution, vec![false; Self::volume(dim, resolution)?])
    }

    pub fn full(dim: usize, resolution: usize) -> Result<Self> {
        Self::from_bits(dim, resolution, vec![true; Self::volume(dim, resolution)?])
    }

    pub fn from_bits(dim: usize, resolution: usize, bits: Vec<bool>) -> Result<Self> {
        let n = Self::volume(dim, resolution)?;
        if bits.len() != n {
            return Err(invalid(format!("mask needs {n} bits, got {}", bits.len())));
        }
        Ok(Self { dim, resolution, bits })
    }

    /// Builds a mask by evaluating `pred` on every cell multi-index.
    pub fn from_fn(dim: usize, resolution: usize, mut pred: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let n = Self::volume(dim, resolution)?;
        let mut coords = vec![0; dim];
        let bits = (0..n)
            .map(|i| {
                lattice::unravel(i, resolution, &mut coords);
                pred(&coords)
            })
            .collect();
        Ok(Self { dim, resolution, bits })
    }

    fn volume(dim: usize, resolution: usize) -> Result<usize> {
        if dim == 0 || resolution == 0 {
            return Err(invalid("mask needs d >= 1 and m >= 1"));
        }
        lattice::volume(resolution, dim).ok_or_else(|| invalid("m^d overflows"))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_size(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Euclidean diameter of one cell, `sqrt(d) / m`.
    pub fn cell_diagonal(&self) -> f64 {
        (self.dim as f64).sqrt() * self.cell_size()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn get_at(&self, coords: &[usize]) -> bool {
        self.bits[lattice::ravel(coords, self.resolution)]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Indices of set cells in increasing order.
    pub fn set_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        lattice::unravel(index, self.resolution, &mut c);
        c
    }

    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        let h = self.cell_size();
        self.coords(index).into_iter().map(|k| (k as f64 + 0.5) * h).collect()
    }

    /// Same set at `factor` times the resolution.
    pub fn subdivide(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(invalid("subdivision factor must be positive"));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let fine = self.resolution * factor;
        let mut coarse = vec![0; self.dim];
        Self::from_fn(self.dim, fine, |c| {
            for (dst, &src) in coarse.iter_mut().zip(c) {
                *dst = src / factor;
            }
            self.get_at(&coarse)
        })
    }

    /// Brings two masks to a common resolution by exact subdivision.
    pub fn common_resolution(a: &Self, b: &Self) -> Result<(Self, Self)> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch { expected: a.dim, actual: b.dim });
        }
        let (ma, mb) = (a.resolution, b.resolution);
        if ma == mb {
            Ok((a.clone(), b.clone()))
        } else if mb % ma == 0 {
            Ok((a.subdivide(mb / ma)?, b.clone()))
        } else if ma % mb == 0 {
            Ok((a.clone(), b.subdivide(ma / mb)?))
        } else {
            Err(Error::ResolutionMismatch(ma, mb))
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.resolution == other.resolution
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        if self.dim != other.dim || self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch(self.resolution, other.resolution));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| op(a, b)).collect();
        Ok(Self { bits, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_size_times_resolution_is_one() {
        for m in [1, 3, 7, 19, 64, 1000] {
            let mask = CubicalMask::empty(2, m).unwrap();
            assert!((mask.cell_size() * m as f64 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subdivision_preserves_set() {
        let mask = CubicalMask::from_fn(2, 3, |c| c[0] == 1 && c[1] == 2).unwrap();
        let fine = mask.subdivide(4).unwrap();
        assert_eq!(fine.resolution(), 12);
        assert_eq!(fine.count(), 16);
        assert!(fine.get_at(&[4, 8]) && fine.get_at(&[7, 11]));
        assert!(!fine.get_at(&[8, 8]));
    }

    #[test]
    fn common_resolution_requires_divisibility() {
        let a = CubicalMask::full(2, 4).unwrap();
        let b = CubicalMask::full(2, 8).unwrap();
        let c = CubicalMask::full(2, 6).unwrap();
        let (a2, b2) = CubicalMask::common_resolution(&a, &b).unwrap();
        assert_eq!(a2.resolution(), 8);
        assert_eq!(b2.resolution(), 8);
        assert!(matches!(CubicalMask::common_resolution(&b, &c), Err(Error::ResolutionMismatch(8, 6))));
    }
}
