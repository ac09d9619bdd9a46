//! The dynamical variables: density P, action S, their wave-function
//! equivalent, and the kinematics derived from the action.
//!
//! Conventions: psi = sqrt(P) exp(+iS/hbar) and v = +grad(S)/m, the
//! consistent pairing under which the hydrodynamic equations condense
//! into the usual linear evolution equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::{Mask, ScalarFieldComplex, ScalarFieldReal, VectorFieldReal};
use crate::grid::Grid;
use crate::ops;

/// Relative regularization threshold below which point values of P are
/// treated as unreliable for ratios and phase extraction.
pub const DEFAULT_FLOOR_REL: f64 = 1e-12;

/// Normalization tolerance on integral of P (and of |psi|^2).
pub const NORM_TOL: f64 = 1e-8;

/// Probability density with its regularization floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    field: ScalarFieldReal,
    floor_rel: f64,
}

/// Action (phase) field; defined modulo 2 pi hbar when extracted from a
/// wave function.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionField {
    field: ScalarFieldReal,
}

/// Normalized complex state.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    field: ScalarFieldComplex,
}

/// The (P, S) pair at a given time, both on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungPair {
    pub p: DensityField,
    pub s: ActionField,
    pub time: f64,
}

impl DensityField {
    pub fn new(field: ScalarFieldReal) -> Result<Self> {
        Self::with_floor(field, DEFAULT_FLOOR_REL)
    }

    pub fn with_floor(field: ScalarFieldReal, floor_rel: f64) -> Result<Self> {
        if !field.all_finite() {
            return Err(Error::NonFinite("DensityField"));
        }
        if !(floor_rel >= 0.0) {
            return Err(Error::InvalidArgument("floor must be >= 0".into()));
        }
        let negatives: Vec<f64> = field
            .values()
            .iter()
            .copied()
            .filter(|&v| v < 0.0)
            .collect();
        if !negatives.is_empty() {
            return Err(Error::NegativeDensity {
                count: negatives.len(),
                min: negatives.iter().fold(f64::INFINITY, |m, &v| m.min(v)),
            });
        }
        Ok(Self { field, floor_rel })
    }

    /// Normalized density built from arbitrary non-negative samples.
    pub fn normalized(field: ScalarFieldReal) -> Result<Self> {
        Self::new(field)?.normalize()
    }

    pub fn field(&self) -> &ScalarFieldReal {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn floor_rel(&self) -> f64 {
        self.floor_rel
    }

    /// Absolute floor: floor_rel x max(P).
    pub fn floor_abs(&self) -> f64 {
        self.floor_rel * self.field.max()
    }

    /// Points safely above the floor.
    pub fn reliable_mask(&self) -> Mask {
        let floor = self.floor_abs();
        let bits = self.field.values().iter().map(|&p| p > floor).collect();
        Mask::new(self.grid().clone(), bits).expect("same grid")
    }

    pub fn integral(&self) -> f64 {
        ops::integrate(&self.field)
    }

    pub fn is_normalized(&self) -> bool {
        (self.integral() - 1.0).abs() <= NORM_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let integral = self.integral();
        if (integral - 1.0).abs() <= NORM_TOL {
            Ok(())
        } else {
            Err(Error::NotNormalized { integral })
        }
    }

    /// Rescale to unit mass. Errors on an identically zero field.
    pub fn normalize(self) -> Result<Self> {
        let mass = self.integral();
        if mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Self {
            field: self.field.map(|v| v / mass),
            floor_rel: self.floor_rel,
        })
    }

    /// Amplitude R = sqrt(P).
    pub fn amplitude(&self) -> ScalarFieldReal {
        self.field.map(f64::sqrt)
    }
}

impl ActionField {
    pub fn new(field: ScalarFieldReal) -> Result<Self> {
        if !field.all_finite() {
            return Err(Error::NonFinite("ActionField"));
        }
        Ok(Self { field })
    }

    pub fn field(&self) -> &ScalarFieldReal {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }
}

impl WaveFunction {
    /// Validates finiteness and unit norm (within [`NORM_TOL`]).
    pub fn new(field: ScalarFieldComplex) -> Result<Self> {
        if !field.all_finite() {
            return Err(Error::NonFinite("WaveFunction"));
        }
        let norm = ops::integrate(&field.abs_squared());
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { integral: norm });
        }
        Ok(Self { field })
    }

    /// Rescale arbitrary samples to unit norm.
    pub fn normalized(field: ScalarFieldComplex) -> Result<Self> {
        if !field.all_finite() {
            return Err(Error::NonFinite("WaveFunction"));
        }
        let norm = ops::integrate(&field.abs_squared());
        if norm <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let scale = 1.0 / norm.sqrt();
        let grid = field.grid().clone();
        let data = field.values().iter().map(|z| z * scale).collect();
        Ok(Self {
            field: ScalarFieldComplex::new(grid, data)?,
        })
    }

    pub fn field(&self) -> &ScalarFieldComplex {
        &self.field
    }

    pub fn values(&self) -> &[Complex64] {
        self.field.values()
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn norm(&self) -> f64 {
        ops::integrate(&self.field.abs_squared())
    }

    /// |psi|^2 as a density with the default floor.
    pub fn density(&self) -> DensityField {
        DensityField::new(self.field.abs_squared()).expect("|psi|^2 is non-negative")
    }
}

impl MadelungPair {
    pub fn new(p: DensityField, s: ActionField, time: f64) -> Result<Self> {
        if p.grid() != s.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { p, s, time })
    }

    pub fn grid(&self) -> &Grid {
        self.p.grid()
    }

    /// Points where ratios against P and phases extracted from psi are
    /// trustworthy.
    pub fn reliable_mask(&self) -> Mask {
        self.p.reliable_mask()
    }
}

/// psi = sqrt(P) exp(+iS/hbar).
pub fn to_wavefunction(pair: &MadelungPair, constants: &PhysicalConstants) -> Result<WaveFunction> {
    pair.p.ensure_normalized()?;
    let grid = pair.grid().clone();
    let inv_hbar = 1.0 / constants.hbar;
    let data: Vec<Complex64> = pair
        .p
        .values()
        .iter()
        .zip(pair.s.values())
        .map(|(&p, &s)| Complex64::from_polar(p.sqrt(), s * inv_hbar))
        .collect();
    WaveFunction::new(ScalarFieldComplex::new(grid, data)?)
}

/// Extract (P, S) from psi. P = |psi|^2. S is hbar times the phase,
/// unwrapped branch-continuously along axis sweeps that start at the
/// global maximum of P; points at or below the density floor inherit
/// the last reliable action value (nearest-neighbor continuation) and
/// are flagged by the pair's reliability mask.
pub fn from_wavefunction(
    psi: &WaveFunction,
    constants: &PhysicalConstants,
    time: f64,
) -> Result<MadelungPair> {
    let grid = psi.grid().clone();
    let p_field = psi.field().abs_squared();
    let p_max = p_field.max();
    if p_max <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let p = DensityField::new(p_field)?;
    let floor = p.floor_abs();
    let hbar = constants.hbar;
    let raw: Vec<f64> = psi.values().iter().map(|z| z.arg() * hbar).collect();
    let p_vals = p.values();

    let mut s = vec![f64::NAN; grid.len()];
    let i_max = p_vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        .map(|(i, _)| i)
        .expect("non-empty");
    s[i_max] = raw[i_max];

    let period = 2.0 * std::f64::consts::PI * hbar;
    let continue_point = |s: &mut Vec<f64>, cur: usize, prev: usize| {
        if p_vals[cur] > floor {
            let branch = ((s[prev] - raw[cur]) / period).round();
            s[cur] = raw[cur] + period * branch;
        } else {
            s[cur] = s[prev];
        }
    };

    let strides = grid.strides();
    let points = grid.points().to_vec();
    let idx_max = grid.multi_index(i_max);

    // Sweep stage per axis: stage 0 runs the single axis-0 line through the
    // maximum; stage a fans out along axis a from every point already
    // unwrapped by stages < a. Deterministic order throughout.
    for axis in 0..grid.dims() {
        // enumerate base points: indices fixed to idx_max for axes > axis,
        // free for axes < axis, and the start index along `axis` is idx_max.
        let free_axes: Vec<usize> = (0..axis).collect();
        let mut counters = vec![0usize; free_axes.len()];
        loop {
            let mut start_idx = idx_max.clone();
            for (c, &a) in counters.iter().zip(&free_axes) {
                start_idx[a] = *c;
            }
            let start_flat = grid.flat_index(&start_idx);
            let stride = strides[axis];
            let n = points[axis];
            let j0 = idx_max[axis];
            let base = start_flat - j0 * stride;
            for j in (j0 + 1)..n {
                continue_point(&mut s, base + j * stride, base + (j - 1) * stride);
            }
            for j in (0..j0).rev() {
                continue_point(&mut s, base + j * stride, base + (j + 1) * stride);
            }
            let mut rolled = true;
            for i in (0..counters.len()).rev() {
                counters[i] += 1;
                if counters[i] < points[free_axes[i]] {
                    rolled = false;
                    break;
                }
                counters[i] = 0;
            }
            if rolled {
                break;
            }
        }
    }

    let s_field = ScalarFieldReal::new(grid, s)?;
    MadelungPair::new(p, ActionField::new(s_field)?, time)
}

/// v = grad(S)/m via the wrap-aware 8th-order stencil, which tolerates
/// branch cuts and integer windings in S.
pub fn velocity(s: &ActionField, constants: &PhysicalConstants) -> Result<VectorFieldReal> {
    let period = 2.0 * std::f64::consts::PI * constants.hbar;
    let grad = ops::wrapped_phase_gradient(s.field(), period)?;
    Ok(grad.scale(1.0 / constants.mass))
}

/// Wave-front speed u = -(dS/dt)/|grad S|, with points of vanishing
/// |grad S| marked undefined in the returned mask rather than given
/// numeric values.
pub fn wavefront_speed(
    s_t: &ScalarFieldReal,
    s: &ActionField,
    constants: &PhysicalConstants,
) -> Result<(ScalarFieldReal, Mask)> {
    if s_t.grid() != s.grid() {
        return Err(Error::GridMismatch);
    }
    let grad_mag = velocity(s, constants)?
        .scale(constants.mass)
        .magnitude();
    let max_mag = grad_mag.max();
    let threshold = 1e-12 * max_mag;
    let defined: Vec<bool> = grad_mag.values().iter().map(|&g| g > threshold).collect();
    if !defined.iter().any(|&d| d) {
        return Err(Error::WavefrontUndefined);
    }
    let values: Vec<f64> = s_t
        .values()
        .iter()
        .zip(grad_mag.values())
        .zip(&defined)
        .map(|((&st, &g), &ok)| if ok { -st / g } else { 0.0 })
        .collect();
    let grid = s.grid().clone();
    Ok((
        ScalarFieldReal::new(grid.clone(), values)?,
        Mask::new(grid, defined)?,
    ))
}

/// Rescale a density to unit mass; see [`DensityField::normalize`].
pub fn normalize(p: DensityField) -> Result<DensityField> {
    p.normalize()
}

/// Count axis-adjacent links between reliable points whose action jump
/// exceeds half a winding quantum. Non-zero counts flag branch cuts or
/// vortex cores threading the reliable region.
pub fn phase_defect_count(pair: &MadelungPair, constants: &PhysicalConstants) -> usize {
    let grid = pair.grid();
    let mask = pair.reliable_mask();
    let s = pair.s.values();
    let half_period = std::f64::consts::PI * constants.hbar;
    let strides = grid.strides();
    let points = grid.points();
    let mut defects = 0usize;
    for axis in 0..grid.dims() {
        let n = points[axis];
        let stride = strides[axis];
        for flat in 0..grid.len() {
            if !mask.get(flat) {
                continue;
            }
            let j = (flat / stride) % n;
            let next = flat - j * stride + ((j + 1) % n) * stride;
            if mask.get(next) && (s[next] - s[flat]).abs() > half_period {
                defects += 1;
            }
        }
    }
    defects
}

/// Serializable summary of a pair for manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairInfo {
    pub time: f64,
    pub mass: f64,
    pub floor_rel: f64,
}

impl From<&MadelungPair> for PairInfo {
    fn from(pair: &MadelungPair) -> Self {
        Self {
            time: pair.time,
            mass: pair.p.integral(),
            floor_rel: pair.p.floor_rel(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::nonrelativistic(1.0, 1.0).unwrap()
    }

    #[test]
    fn density_rejects_negative_and_nan() {
        let g = Grid::line(64, 8.0).unwrap();
        let mut f = ScalarFieldReal::constant(g.clone(), 1.0);
        f.values_mut()[5] = -0.25;
        assert!(matches!(
            DensityField::new(f),
            Err(Error::NegativeDensity { count: 1, .. })
        ));
        let mut f = ScalarFieldReal::constant(g, 1.0);
        f.values_mut()[5] = f64::NAN;
        assert!(DensityField::new(f).is_err());
    }

    #[test]
    fn normalize_is_idempotent_and_rejects_zero() {
        let g = Grid::line(64, 8.0).unwrap();
        let f = ScalarFieldReal::from_fn(g.clone(), |x| (-x[0] * x[0]).exp());
        let p = DensityField::new(f).unwrap().normalize().unwrap();
        assert!((p.integral() - 1.0).abs() < 1e-13);
        let again = p.clone().normalize().unwrap();
        for (a, b) in p.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let zero = ScalarFieldReal::zeros(g);
        assert!(matches!(
            DensityField::new(zero).unwrap().normalize(),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn uniform_pair_round_trip() {
        let g = Grid::line(64, 8.0).unwrap();
        let p = DensityField::new(ScalarFieldReal::constant(g.clone(), 1.0 / 8.0)).unwrap();
        let s = ActionField::new(ScalarFieldReal::zeros(g)).unwrap();
        let pair = MadelungPair::new(p, s, 0.0).unwrap();
        let psi = to_wavefunction(&pair, &consts()).unwrap();
        let expected = (1.0f64 / 8.0).sqrt();
        for z in psi.values() {
            assert!((z.re - expected).abs() < 1e-14);
            assert!(z.im.abs() < 1e-14);
        }
        let back = from_wavefunction(&psi, &consts(), 0.0).unwrap();
        for (&p0, &p1) in pair.p.values().iter().zip(back.p.values()) {
            assert!((p0 - p1).abs() < 1e-14);
        }
        for &s1 in back.s.values() {
            assert!(s1.abs() < 1e-12);
        }
    }

    #[test]
    fn wavefront_speed_undefined_for_constant_action() {
        let g = Grid::line(64, 8.0).unwrap();
        let s = ActionField::new(ScalarFieldReal::constant(g.clone(), 3.0)).unwrap();
        let st = ScalarFieldReal::constant(g, -1.0);
        assert!(matches!(
            wavefront_speed(&st, &s, &consts()),
            Err(Error::WavefrontUndefined)
        ));
    }

    #[test]
    fn velocity_is_gauge_invariant_under_constant_shift() {
        let g = Grid::line(64, 8.0).unwrap();
        let k = 2.0 * std::f64::consts::PI / 8.0;
        let s0 = ActionField::new(ScalarFieldReal::from_fn(g.clone(), |x| {
            0.2 * (k * x[0]).sin()
        }))
        .unwrap();
        let s1 = ActionField::new(ScalarFieldReal::from_fn(g, |x| {
            0.2 * (k * x[0]).sin() + 17.5
        }))
        .unwrap();
        let v0 = velocity(&s0, &consts()).unwrap();
        let v1 = velocity(&s1, &consts()).unwrap();
        for (a, b) in v0.component(0).iter().zip(v1.component(0)) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_wavefunction_rejected() {
        let g = Grid::line(64, 8.0).unwrap();
        let zero = ScalarFieldComplex::zeros(g);
        assert!(WaveFunction::normalized(zero).is_err());
    }
}
