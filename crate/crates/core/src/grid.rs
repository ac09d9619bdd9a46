use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic sampling lattice in 1 to 3 dimensions.
///
/// Storage convention for all fields living on a grid is row-major
/// (last axis fastest). Axis `a` covers `[-length/2, length/2)` with
/// `points[a]` samples, so the origin is itself a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<usize>,
    lengths: Vec<f64>,
}

impl Grid {
    pub fn new(points: &[usize], lengths: &[f64]) -> Result<Self> {
        if points.is_empty() || points.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "dims must be 1..=3, got {}",
                points.len()
            )));
        }
        if points.len() != lengths.len() {
            return Err(Error::InvalidGrid(
                "points_per_dim and length_per_dim lengths differ".into(),
            ));
        }
        for (&n, &l) in points.iter().zip(lengths) {
            if n < 32 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "points per axis must be a power of two >= 32, got {n}"
                )));
            }
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis length must be positive and finite, got {l}"
                )));
            }
        }
        Ok(Self {
            points: points.to_vec(),
            lengths: lengths.to_vec(),
        })
    }

    pub fn line(n: usize, length: f64) -> Result<Self> {
        Self::new(&[n], &[length])
    }

    pub fn square(n: usize, length: f64) -> Result<Self> {
        Self::new(&[n, n], &[length, length])
    }

    pub fn dims(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    /// Volume of one cell, the quadrature weight of every sample.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.spacing(a)).product()
    }

    /// Sample coordinates along one axis: x_j = -L/2 + j h.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        let l = self.lengths[axis];
        (0..self.points[axis]).map(|j| -0.5 * l + j as f64 * h).collect()
    }

    /// Angular wave numbers in FFT storage order:
    /// k_j = 2 pi j / L for j < N/2, then the negative branch; the
    /// Nyquist slot j = N/2 carries -pi N / L.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis] as i64;
        let base = 2.0 * std::f64::consts::PI / self.lengths[axis];
        (0..n)
            .map(|j| {
                let jj = if j < n / 2 { j } else { j - n };
                base * jj as f64
            })
            .collect()
    }

    /// Row-major strides; `strides[dims-1] == 1`.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dims();
        let mut s = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.points[a + 1];
        }
        s
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    /// Multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut idx = vec![0usize; self.dims()];
        for (a, s) in strides.iter().enumerate() {
            idx[a] = flat / s;
            flat %= s;
        }
        idx
    }

    /// Coordinates of the sample at a flat index.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &j)| -0.5 * self.lengths[a] + j as f64 * self.spacing(a))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(&[], &[]).is_err());
        assert!(Grid::new(&[31], &[1.0]).is_err());
        assert!(Grid::new(&[48], &[1.0]).is_err()); // not a power of two
        assert!(Grid::new(&[64], &[0.0]).is_err());
        assert!(Grid::new(&[64, 64, 64, 64], &[1.0; 4]).is_err());
        assert!(Grid::new(&[64, 64], &[1.0]).is_err());
    }

    #[test]
    fn spacing_and_volume() {
        let g = Grid::new(&[64, 128], &[2.0, 4.0]).unwrap();
        assert_eq!(g.spacing(0), 2.0 / 64.0);
        assert_eq!(g.spacing(1), 4.0 / 128.0);
        assert!((g.cell_volume() - g.spacing(0) * g.spacing(1)).abs() < 1e-15);
        assert_eq!(g.len(), 64 * 128);
    }

    #[test]
    fn wavenumber_lattice_covers_both_branches() {
        let g = Grid::line(64, 8.0).unwrap();
        let k = g.wavenumbers(0);
        let base = 2.0 * std::f64::consts::PI / 8.0;
        assert_eq!(k[0], 0.0);
        assert!((k[1] - base).abs() < 1e-15);
        assert!((k[63] + base).abs() < 1e-15);
        assert!((k[32] + 32.0 * base).abs() < 1e-15); // Nyquist carries -N/2
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(&[32, 64, 32], &[1.0, 2.0, 3.0]).unwrap();
        let idx = vec![5, 17, 31];
        assert_eq!(g.multi_index(g.flat_index(&idx)), idx);
        let strides = g.strides();
        assert_eq!(strides, vec![64 * 32, 32, 1]);
    }

    #[test]
    fn coords_start_at_minus_half_length() {
        let g = Grid::line(32, 16.0).unwrap();
        let x = g.coords(0);
        assert_eq!(x[0], -8.0);
        assert!((x[31] - (8.0 - 0.5)).abs() < 1e-12);
    }
}
