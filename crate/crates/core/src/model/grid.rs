use serde::{Deserialize, Serialize};

use super::lattice;
use crate::error::{invalid, Result};

/// Observations `X_i = f(x_i) + sigma * eps_i` on the regular `N^d` lattice.
///
/// Lattice point `k = (k_1, ..., k_d)` sits at `x = ((k_j + 1/2) / N)_j`, the
/// centre of the `k`-th cell of the `N^d` partition of the unit cube. Values are
/// stored row-major with axis 0 varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationGrid {
    dim: usize,
    side: usize,
    values: Vec<f64>,
    /// `None` when the noise level is unknown to the estimator.
    noise_sigma: Option<f64>,
    seed: Option<u64>,
}

impl ObservationGrid {
    pub fn new(dim: usize, side: usize, values: Vec<f64>, noise_sigma: Option<f64>) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(invalid("observation grid needs d >= 1 and N >= 1"));
        }
        let n = lattice::volume(side, dim).ok_or_else(|| invalid("N^d overflows"))?;
        if values.len() != n {
            return Err(invalid(format!("expected {n} values for N={side}, d={dim}, got {}", values.len())));
        }
        if let Some(s) = noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(invalid(format!("noise sigma must be finite and >= 0, got {s}")));
            }
        }
        Ok(Self { dim, side, values, noise_sigma, seed: None })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Sample count `n = N^d`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn noise_sigma(&self) -> Option<f64> {
        self.noise_sigma
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn set_noise_sigma(&mut self, sigma: Option<f64>) {
        self.noise_sigma = sigma;
    }

    /// Lattice coordinate of sample `index`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut k = vec![0; self.dim];
        lattice::unravel(index, self.side, &mut k);
        k.iter().map(|&k| (k as f64 + 0.5) / self.side as f64).collect()
    }

    /// Returns a copy with every value mapped through `op`.
    pub fn map_values(&self, op: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| op(v)).collect(), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(ObservationGrid::new(2, 4, vec![0.0; 15], None).is_err());
        assert!(ObservationGrid::new(2, 4, vec![0.0; 16], Some(1.0)).is_ok());
    }

    #[test]
    fn points_lie_in_unit_cube() {
        let g = ObservationGrid::new(3, 5, vec![0.0; 125], None).unwrap();
        for i in 0..g.len() {
            assert!(g.point(i).iter().all(|&x| x > 0.0 && x < 1.0));
        }
        assert_eq!(g.point(0), vec![0.1, 0.1, 0.1]);
        // axis 0 slowest
        assert_eq!(g.point(1), vec![0.1, 0.1, 0.3]);
        assert_eq!(g.point(25), vec![0.3, 0.1, 0.1]);
    }
}
