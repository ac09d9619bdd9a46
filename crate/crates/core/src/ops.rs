//! Differential operators and quadrature on periodic grids.
//!
//! Spectral differentiation is the primary scheme for smooth periodic
//! fields (densities, amplitudes, wave functions). Centered finite
//! differences are kept as an independent discretization: 4th order as
//! the cross-check mandated for smooth fields, 8th order for fields
//! that are only piecewise reliable (velocities, phase-derived data),
//! where a local stencil confines the damage of unreliable regions.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ScalarFieldComplex, ScalarFieldReal, VectorFieldReal};
use crate::grid::Grid;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((n, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    })
}

/// Visit every 1-D line of the lattice along `axis`; `f(base, stride)`.
fn for_each_line(grid: &Grid, axis: usize, mut f: impl FnMut(usize, usize)) {
    let points = grid.points();
    let strides = grid.strides();
    let stride = strides[axis];
    let other: Vec<(usize, usize)> = (0..grid.dims())
        .filter(|&a| a != axis)
        .map(|a| (points[a], strides[a]))
        .collect();
    let mut counters = vec![0usize; other.len()];
    loop {
        let base: usize = counters
            .iter()
            .zip(&other)
            .map(|(c, (_, s))| c * s)
            .sum();
        f(base, stride);
        let mut rolled_over = true;
        for i in (0..other.len()).rev() {
            counters[i] += 1;
            if counters[i] < other[i].0 {
                rolled_over = false;
                break;
            }
            counters[i] = 0;
        }
        if rolled_over {
            break;
        }
    }
}

/// DFT along one axis, multiply each mode by `filter[j]`, inverse DFT.
/// The 1/N normalization of the round trip is folded into the filter pass.
fn spectral_axis_filter(grid: &Grid, data: &mut [Complex64], axis: usize, filter: &[f64], imaginary: bool) {
    let n = grid.points()[axis];
    let fwd = plan(n, true);
    let inv = plan(n, false);
    let scale = 1.0 / n as f64;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for_each_line(grid, axis, |base, stride| {
        for (j, v) in line.iter_mut().enumerate() {
            *v = data[base + j * stride];
        }
        fwd.process(&mut line);
        if imaginary {
            for (v, &m) in line.iter_mut().zip(filter) {
                *v *= Complex64::new(0.0, m * scale);
            }
        } else {
            for (v, &m) in line.iter_mut().zip(filter) {
                *v *= m * scale;
            }
        }
        inv.process(&mut line);
        for (j, v) in line.iter().enumerate() {
            data[base + j * stride] = *v;
        }
    });
}

fn to_complex(f: &ScalarFieldReal) -> Vec<Complex64> {
    f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn ensure_finite_real(f: &ScalarFieldReal, op: &'static str) -> Result<()> {
    if f.all_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

fn ensure_finite_complex(f: &ScalarFieldComplex, op: &'static str) -> Result<()> {
    if f.all_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

/// Spectral gradient. Exact for band-limited fields; the Nyquist mode is
/// dropped since its odd derivative is not representable.
pub fn gradient(f: &ScalarFieldReal) -> Result<VectorFieldReal> {
    ensure_finite_real(f, "gradient")?;
    let grid = f.grid().clone();
    let mut components = Vec::with_capacity(grid.dims());
    for axis in 0..grid.dims() {
        let mut buf = to_complex(f);
        let mut k = grid.wavenumbers(axis);
        k[grid.points()[axis] / 2] = 0.0;
        spectral_axis_filter(&grid, &mut buf, axis, &k, true);
        components.push(buf.iter().map(|z| z.re).collect());
    }
    VectorFieldReal::new(grid, components)
}

/// Spectral gradient of a complex field, one complex field per axis.
pub fn gradient_complex(f: &ScalarFieldComplex) -> Result<Vec<ScalarFieldComplex>> {
    ensure_finite_complex(f, "gradient")?;
    let grid = f.grid().clone();
    let mut out = Vec::with_capacity(grid.dims());
    for axis in 0..grid.dims() {
        let mut buf = f.values().to_vec();
        let mut k = grid.wavenumbers(axis);
        k[grid.points()[axis] / 2] = 0.0;
        spectral_axis_filter(&grid, &mut buf, axis, &k, true);
        out.push(ScalarFieldComplex::new(grid.clone(), buf)?);
    }
    Ok(out)
}

/// Spectral divergence: sum of axis derivatives of the components.
pub fn divergence(field: &VectorFieldReal) -> Result<ScalarFieldReal> {
    if !field.all_finite() {
        return Err(Error::NonFinite("divergence"));
    }
    let grid = field.grid().clone();
    let mut acc = vec![0.0f64; grid.len()];
    for axis in 0..grid.dims() {
        let mut buf: Vec<Complex64> = field
            .component(axis)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let mut k = grid.wavenumbers(axis);
        k[grid.points()[axis] / 2] = 0.0;
        spectral_axis_filter(&grid, &mut buf, axis, &k, true);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += z.re;
        }
    }
    ScalarFieldReal::new(grid, acc)
}

/// Spectral Laplacian (the Nyquist mode is kept: -k^2 is even).
pub fn laplacian(f: &ScalarFieldReal) -> Result<ScalarFieldReal> {
    ensure_finite_real(f, "laplacian")?;
    let grid = f.grid().clone();
    let mut acc = vec![0.0f64; grid.len()];
    for axis in 0..grid.dims() {
        let mut buf = to_complex(f);
        let k2: Vec<f64> = grid.wavenumbers(axis).iter().map(|k| -k * k).collect();
        spectral_axis_filter(&grid, &mut buf, axis, &k2, false);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += z.re;
        }
    }
    ScalarFieldReal::new(grid, acc)
}

pub fn laplacian_complex(f: &ScalarFieldComplex) -> Result<ScalarFieldComplex> {
    ensure_finite_complex(f, "laplacian")?;
    let grid = f.grid().clone();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for axis in 0..grid.dims() {
        let mut buf = f.values().to_vec();
        let k2: Vec<f64> = grid.wavenumbers(axis).iter().map(|k| -k * k).collect();
        spectral_axis_filter(&grid, &mut buf, axis, &k2, false);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += *z;
        }
    }
    ScalarFieldComplex::new(grid, acc)
}

/// Riemann quadrature with compensated summation. Spectrally accurate
/// for smooth periodic integrands.
pub fn integrate(f: &ScalarFieldReal) -> f64 {
    kahan_sum(f.values()) * f.grid().cell_volume()
}

/// Compensated sum of a slice.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Quadrature of `f` restricted to points where `mask` is true.
pub fn integrate_where(f: &ScalarFieldReal, mask: &[bool]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (&v, &keep) in f.values().iter().zip(mask) {
        if !keep {
            continue;
        }
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum * f.grid().cell_volume()
}

/// Unnormalized forward DFT over all axes.
pub fn fourier_forward(f: &ScalarFieldComplex) -> ScalarFieldComplex {
    let grid = f.grid().clone();
    let mut buf = f.values().to_vec();
    fft_all_axes(&grid, &mut buf, true);
    ScalarFieldComplex::new(grid, buf).expect("shape preserved")
}

/// Inverse DFT over all axes, scaled by 1/N so the round trip is the identity.
pub fn fourier_inverse(f: &ScalarFieldComplex) -> ScalarFieldComplex {
    let grid = f.grid().clone();
    let mut buf = f.values().to_vec();
    fft_all_axes(&grid, &mut buf, false);
    let scale = 1.0 / grid.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    ScalarFieldComplex::new(grid, buf).expect("shape preserved")
}

/// In-place DFT along every axis: unnormalized in both directions.
pub fn fft_all_axes(grid: &Grid, data: &mut [Complex64], forward: bool) {
    for axis in 0..grid.dims() {
        let n = grid.points()[axis];
        let fft = plan(n, forward);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for_each_line(grid, axis, |base, stride| {
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[base + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[base + j * stride] = *v;
            }
        });
    }
}

// ---------------------------------------------------------------------------
// Centered finite differences (periodic wrap).
// ---------------------------------------------------------------------------

const FD4_FIRST: [f64; 2] = [8.0 / 12.0, -1.0 / 12.0];
const FD8_FIRST: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

fn fd_axis_first(grid: &Grid, values: &[f64], axis: usize, coeffs: &[f64], out: &mut [f64]) {
    let n = grid.points()[axis];
    let h = grid.spacing(axis);
    let mut line = vec![0.0f64; n];
    for_each_line(grid, axis, |base, stride| {
        for (j, v) in line.iter_mut().enumerate() {
            *v = values[base + j * stride];
        }
        for j in 0..n {
            let mut d = 0.0;
            for (m, &c) in coeffs.iter().enumerate() {
                let off = m + 1;
                let up = (j + off) % n;
                let dn = (j + n - off) % n;
                d += c * (line[up] - line[dn]);
            }
            out[base + j * stride] = d / h;
        }
    });
}

fn fd_first_gradient(f: &ScalarFieldReal, coeffs: &[f64]) -> Result<VectorFieldReal> {
    ensure_finite_real(f, "finite-difference gradient")?;
    let grid = f.grid().clone();
    let mut components = Vec::with_capacity(grid.dims());
    for axis in 0..grid.dims() {
        let mut out = vec![0.0f64; grid.len()];
        fd_axis_first(&grid, f.values(), axis, coeffs, &mut out);
        components.push(out);
    }
    VectorFieldReal::new(grid, components)
}

fn fd_first_divergence(field: &VectorFieldReal, coeffs: &[f64]) -> Result<ScalarFieldReal> {
    if !field.all_finite() {
        return Err(Error::NonFinite("finite-difference divergence"));
    }
    let grid = field.grid().clone();
    let mut acc = vec![0.0f64; grid.len()];
    let mut tmp = vec![0.0f64; grid.len()];
    for axis in 0..grid.dims() {
        fd_axis_first(&grid, field.component(axis), axis, coeffs, &mut tmp);
        for (a, t) in acc.iter_mut().zip(&tmp) {
            *a += *t;
        }
    }
    ScalarFieldReal::new(grid, acc)
}

/// 4th-order centered first derivative per axis; the cross-check twin
/// of the spectral `gradient`.
pub fn fd4_gradient(f: &ScalarFieldReal) -> Result<VectorFieldReal> {
    fd_first_gradient(f, &FD4_FIRST)
}

pub fn fd4_divergence(field: &VectorFieldReal) -> Result<ScalarFieldReal> {
    fd_first_divergence(field, &FD4_FIRST)
}

/// 4th-order centered Laplacian.
pub fn fd4_laplacian(f: &ScalarFieldReal) -> Result<ScalarFieldReal> {
    ensure_finite_real(f, "finite-difference laplacian")?;
    let grid = f.grid().clone();
    let mut acc = vec![0.0f64; grid.len()];
    for axis in 0..grid.dims() {
        let n = grid.points()[axis];
        let h2 = grid.spacing(axis) * grid.spacing(axis);
        let mut line = vec![0.0f64; n];
        for_each_line(&grid, axis, |base, stride| {
            for (j, v) in line.iter_mut().enumerate() {
                *v = f.values()[base + j * stride];
            }
            for j in 0..n {
                let u1 = line[(j + 1) % n] + line[(j + n - 1) % n];
                let u2 = line[(j + 2) % n] + line[(j + n - 2) % n];
                acc[base + j * stride] += (-u2 + 16.0 * u1 - 30.0 * line[j]) / (12.0 * h2);
            }
        });
    }
    ScalarFieldReal::new(grid, acc)
}

/// 8th-order centered first derivative per axis, for piecewise-reliable
/// fields where local stencils must confine masked-region damage.
pub fn fd8_gradient(f: &ScalarFieldReal) -> Result<VectorFieldReal> {
    fd_first_gradient(f, &FD8_FIRST)
}

pub fn fd8_divergence(field: &VectorFieldReal) -> Result<ScalarFieldReal> {
    fd_first_divergence(field, &FD8_FIRST)
}

/// Gradient of a field defined modulo `period` (an unwrapped phase or
/// action). Neighbor increments are re-wrapped into half a period before
/// the 8th-order stencil is assembled, so branch cuts and integer
/// windings are invisible. Exact wherever the underlying field is a
/// polynomial of degree <= 8 between samples; requires the local
/// increment |f(x+h) - f(x)| < period/2 to be resolvable.
pub fn wrapped_phase_gradient(f: &ScalarFieldReal, period: f64) -> Result<VectorFieldReal> {
    ensure_finite_real(f, "wrapped_phase_gradient")?;
    if !(period > 0.0) {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let grid = f.grid().clone();
    let mut components = Vec::with_capacity(grid.dims());
    for axis in 0..grid.dims() {
        let n = grid.points()[axis];
        let h = grid.spacing(axis);
        let mut out = vec![0.0f64; grid.len()];
        let mut line = vec![0.0f64; n];
        let mut inc = vec![0.0f64; n];
        for_each_line(&grid, axis, |base, stride| {
            for (j, v) in line.iter_mut().enumerate() {
                *v = f.values()[base + j * stride];
            }
            for j in 0..n {
                let d = line[(j + 1) % n] - line[j];
                inc[j] = d - period * (d / period).round();
            }
            for j in 0..n {
                // f_{j+m} - f_{j-m} rebuilt from wrapped increments
                let mut d = 0.0;
                let mut partial_up = 0.0;
                let mut partial_dn = 0.0;
                for (m, &c) in FD8_FIRST.iter().enumerate() {
                    partial_up += inc[(j + m) % n];
                    partial_dn += inc[(j + n - 1 - m) % n];
                    d += c * (partial_up + partial_dn);
                }
                out[base + j * stride] = d / h;
            }
        });
        components.push(out);
    }
    VectorFieldReal::new(grid, components)
}

// ---------------------------------------------------------------------------
// Distances.
// ---------------------------------------------------------------------------

/// L2 norm of the difference, sqrt(integral of (a-b)^2).
pub fn l2_distance(a: &ScalarFieldReal, b: &ScalarFieldReal) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let sq: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    Ok((kahan_sum(&sq) * a.grid().cell_volume()).sqrt())
}

/// Max-norm of the difference.
pub fn max_distance(a: &ScalarFieldReal, b: &ScalarFieldReal) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapped_increments_match_plain_fd8_on_smooth_field() {
        let grid = Grid::line(64, 2.0 * std::f64::consts::PI).unwrap();
        let f = ScalarFieldReal::from_fn(grid.clone(), |x| (2.0 * x[0]).sin() * 0.3);
        let a = fd8_gradient(&f).unwrap();
        let b = wrapped_phase_gradient(&f, 1.0e6).unwrap();
        for (x, y) in a.component(0).iter().zip(b.component(0)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let grid = Grid::line(32, 1.0).unwrap();
        let mut f = ScalarFieldReal::zeros(grid);
        f.values_mut()[3] = f64::NAN;
        assert!(matches!(gradient(&f), Err(Error::NonFinite(_))));
        assert!(matches!(fd4_laplacian(&f), Err(Error::NonFinite(_))));
    }

    #[test]
    fn divergence_requires_matching_grids() {
        let g1 = Grid::square(32, 1.0).unwrap();
        let f1 = ScalarFieldReal::zeros(g1.clone());
        let f2 = ScalarFieldReal::zeros(Grid::square(64, 1.0).unwrap());
        // VectorFieldReal::new already rejects inconsistent component lengths
        assert!(VectorFieldReal::new(
            g1,
            vec![f1.values().to_vec(), f2.values().to_vec()]
        )
        .is_err());
    }

    #[test]
    fn integrate_constant_is_volume() {
        let g = Grid::new(&[32, 64], &[2.0, 3.0]).unwrap();
        let f = ScalarFieldReal::constant(g, 1.0);
        assert!((integrate(&f) - 6.0).abs() < 1e-12);
    }
}
