use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Real scalar samples on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldReal {
    grid: Grid,
    data: Vec<f64>,
}

/// Complex scalar samples on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldComplex {
    grid: Grid,
    data: Vec<Complex64>,
}

/// One real component field per grid axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldReal {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

/// Per-point boolean flags tied to a grid (reliability, definedness).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: Grid,
    bits: Vec<bool>,
}

impl ScalarFieldReal {
    pub fn new(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid point count {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, data: vec![0.0; n] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let n = grid.len();
        Self { grid, data: vec![value; n] }
    }

    /// Evaluate `f` at every sample position.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        let mut pos = vec![0.0f64; grid.dims()];
        let mut idx = vec![0usize; grid.dims()];
        for _ in 0..grid.len() {
            for a in 0..grid.dims() {
                pos[a] = -0.5 * grid.lengths()[a] + idx[a] as f64 * grid.spacing(a);
            }
            data.push(f(&pos));
            // row-major increment, last axis fastest
            for a in (0..grid.dims()).rev() {
                idx[a] += 1;
                if idx[a] < grid.points()[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }
}

impl ScalarFieldComplex {
    pub fn new(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid point count {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, data: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        let mut pos = vec![0.0f64; grid.dims()];
        let mut idx = vec![0usize; grid.dims()];
        for _ in 0..grid.len() {
            for a in 0..grid.dims() {
                pos[a] = -0.5 * grid.lengths()[a] + idx[a] as f64 * grid.spacing(a);
            }
            data.push(f(&pos));
            for a in (0..grid.dims()).rev() {
                idx[a] += 1;
                if idx[a] < grid.points()[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// |z|^2 pointwise.
    pub fn abs_squared(&self) -> ScalarFieldReal {
        ScalarFieldReal {
            grid: self.grid.clone(),
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn from_real(re: &ScalarFieldReal) -> Self {
        Self {
            grid: re.grid.clone(),
            data: re.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl VectorFieldReal {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dims() {
            return Err(Error::InvalidGrid(format!(
                "component count {} does not match grid dims {}",
                components.len(),
                grid.dims()
            )));
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidGrid("component length mismatch".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Grid) -> Self {
        let d = grid.dims();
        let n = grid.len();
        Self { grid, components: vec![vec![0.0; n]; d] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.components[axis]
    }

    pub fn dims(&self) -> usize {
        self.components.len()
    }

    /// Euclidean magnitude at every point.
    pub fn magnitude(&self) -> ScalarFieldReal {
        let n = self.grid.len();
        let mut out = vec![0.0f64; n];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        for o in out.iter_mut() {
            *o = o.sqrt();
        }
        ScalarFieldReal { grid: self.grid.clone(), data: out }
    }

    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &Self) -> Result<ScalarFieldReal> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.len();
        let mut out = vec![0.0f64; n];
        for (a, b) in self.components.iter().zip(&other.components) {
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                *o += x * y;
            }
        }
        Ok(ScalarFieldReal { grid: self.grid.clone(), data: out })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.iter().all(|v| v.is_finite()))
    }
}

impl Mask {
    pub fn new(grid: Grid, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::InvalidGrid("mask length mismatch".into()));
        }
        Ok(Self { grid, bits })
    }

    pub fn all_true(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, bits: vec![true; n] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, flat: usize) -> bool {
        self.bits[flat]
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        })
    }

    /// Shrink the true region by `steps` cells along every axis
    /// (periodic neighborhood). A point survives only if the whole
    /// axis-aligned stencil of that half-width is true.
    pub fn erode(&self, steps: usize) -> Self {
        let mut bits = self.bits.clone();
        let strides = self.grid.strides();
        let points = self.grid.points().to_vec();
        for a in 0..self.grid.dims() {
            let n = points[a] as isize;
            let stride = strides[a];
            let mut next = bits.clone();
            for flat in 0..bits.len() {
                if !bits[flat] {
                    continue;
                }
                let ia = ((flat / stride) % points[a]) as isize;
                let base = flat - (ia as usize) * stride;
                for off in 1..=(steps as isize) {
                    let up = ((ia + off).rem_euclid(n)) as usize;
                    let dn = ((ia - off).rem_euclid(n)) as usize;
                    if !bits[base + up * stride] || !bits[base + dn * stride] {
                        next[flat] = false;
                        break;
                    }
                }
            }
            bits = next;
        }
        Self { grid: self.grid.clone(), bits }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1() -> Grid {
        Grid::line(64, 8.0).unwrap()
    }

    #[test]
    fn from_fn_traverses_row_major() {
        let g = Grid::new(&[32, 64], &[2.0, 4.0]).unwrap();
        let f = ScalarFieldReal::from_fn(g.clone(), |x| x[0] + 100.0 * x[1]);
        let idx = g.flat_index(&[3, 7]);
        let x0 = -1.0 + 3.0 * g.spacing(0);
        let x1 = -2.0 + 7.0 * g.spacing(1);
        assert!((f.values()[idx] - (x0 + 100.0 * x1)).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(ScalarFieldReal::new(grid1(), vec![0.0; 3]).is_err());
        assert!(VectorFieldReal::new(grid1(), vec![vec![0.0; 64], vec![0.0; 64]]).is_err());
    }

    #[test]
    fn dot_and_magnitude() {
        let g = Grid::new(&[32, 32], &[1.0, 1.0]).unwrap();
        let mut v = VectorFieldReal::zeros(g.clone());
        v.component_mut(0).fill(3.0);
        v.component_mut(1).fill(4.0);
        assert!((v.magnitude().values()[0] - 5.0).abs() < 1e-15);
        let d = v.dot(&v).unwrap();
        assert!((d.values()[10] - 25.0).abs() < 1e-15);
    }

    #[test]
    fn erode_shrinks_periodically() {
        let g = grid1();
        let mut bits = vec![false; 64];
        for b in bits.iter_mut().take(10) {
            *b = true;
        }
        let m = Mask::new(g, bits).unwrap();
        let e = m.erode(2);
        assert!(!e.get(0)); // periodic neighbor 62/63 is false
        assert!(!e.get(1));
        assert!(e.get(2));
        assert!(e.get(7));
        assert!(!e.get(8));
        assert_eq!(e.count_true(), 6);
    }
}
