//! Fluctuation fields attached to a density: osmotic velocity,
//! momentum/energy fluctuations, quantum potential, and the diagnostics
//! separating divergence-free Hamiltonian transport from quantum flow.
//!
//! All ratios against P are evaluated only above the density floor and
//! zeroed (plus masked) below it. Derivatives of P and sqrt(P) are
//! spectral; derivatives of velocity-derived fields use the local
//! 8th-order stencils so masked-region garbage cannot leak globally.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::{Mask, ScalarFieldReal, VectorFieldReal};
use crate::fields::{velocity, DensityField, MadelungPair};
use crate::ops;

/// Bundle of the per-point fluctuation fields of one state.
#[derive(Debug, Clone)]
pub struct FluctuationDiagnostics {
    /// Osmotic velocity u = -(hbar/2m) grad(P)/P.
    pub u: VectorFieldReal,
    /// Momentum fluctuation delta_p = -(hbar/2) grad(P)/P.
    pub delta_p: VectorFieldReal,
    /// Emitted wave number k_u = delta_p / hbar.
    pub k_u: VectorFieldReal,
    /// Energy fluctuation delta_E = (hbar/2) div(v).
    pub delta_e: ScalarFieldReal,
    /// Quantum potential Q = -(hbar^2/2m) lap(sqrt P)/sqrt(P).
    pub q: ScalarFieldReal,
    /// Points where the ratios above are trustworthy.
    pub reliability_mask: Mask,
}

/// Flow classification of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowClass {
    Hamiltonian,
    Quantum,
}

/// Orthogonality/unbiasedness diagnostics of one (P, S) pair.
#[derive(Debug, Clone)]
pub struct FlowReport {
    /// (grad P / P) . v pointwise, zero where masked.
    pub orth_residual: ScalarFieldReal,
    /// div(v) pointwise (velocity zeroed on unreliable points first).
    pub div_v: ScalarFieldReal,
    /// integral of dP/dt dx.
    pub i_dp_dt: f64,
    /// integral of P (grad ln P . v) dx.
    pub i_cross: f64,
    /// integral of P div v dx.
    pub i_div: f64,
    /// integral of P (grad S . delta_p) dx = -(hbar m / 2) i_cross.
    pub i_corr: f64,
    /// max |orth_residual| over the eroded reliable region.
    pub max_orth_residual: f64,
    /// max |div_v| over the eroded reliable region.
    pub max_div_v: f64,
    /// Natural scale against which orth residuals are judged.
    pub orth_scale: f64,
    /// Natural scale against which div v is judged.
    pub div_scale: f64,
    pub classification: FlowClass,
}

/// The six scalars plus classification, for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSummary {
    pub i_dp_dt: f64,
    pub i_cross: f64,
    pub i_div: f64,
    pub i_corr: f64,
    pub max_orth_residual: f64,
    pub max_div_v: f64,
    pub orth_scale: f64,
    pub div_scale: f64,
    pub classification: FlowClass,
}

impl FlowReport {
    pub fn summary(&self) -> FlowSummary {
        FlowSummary {
            i_dp_dt: self.i_dp_dt,
            i_cross: self.i_cross,
            i_div: self.i_div,
            i_corr: self.i_corr,
            max_orth_residual: self.max_orth_residual,
            max_div_v: self.max_div_v,
            orth_scale: self.orth_scale,
            div_scale: self.div_scale,
            classification: self.classification,
        }
    }
}

/// grad(P)/P with masked points zeroed; the shared core of the
/// fluctuation fields.
fn relative_gradient(p: &DensityField) -> Result<(VectorFieldReal, Mask)> {
    p.ensure_normalized()?;
    let grad = ops::gradient(p.field())?;
    let mask = p.reliable_mask();
    let mut components = Vec::with_capacity(grad.dims());
    for axis in 0..grad.dims() {
        let comp: Vec<f64> = grad
            .component(axis)
            .iter()
            .zip(p.values())
            .zip(mask.bits())
            .map(|((&g, &pv), &ok)| if ok { g / pv } else { 0.0 })
            .collect();
        components.push(comp);
    }
    Ok((VectorFieldReal::new(p.grid().clone(), components)?, mask))
}

/// u = -(hbar/2m) grad(P)/P, zeroed below the floor.
pub fn osmotic_velocity(
    p: &DensityField,
    constants: &PhysicalConstants,
) -> Result<VectorFieldReal> {
    let (rel, _) = relative_gradient(p)?;
    Ok(rel.scale(-constants.hbar / (2.0 * constants.mass)))
}

/// delta_p = -(hbar/2) grad(P)/P.
pub fn momentum_fluctuation(
    p: &DensityField,
    constants: &PhysicalConstants,
) -> Result<VectorFieldReal> {
    let (rel, _) = relative_gradient(p)?;
    Ok(rel.scale(-constants.hbar / 2.0))
}

/// k_u = delta_p / hbar = -(1/2) grad(P)/P.
pub fn wave_number_u(p: &DensityField, _constants: &PhysicalConstants) -> Result<VectorFieldReal> {
    let (rel, _) = relative_gradient(p)?;
    Ok(rel.scale(-0.5))
}

/// The amplitude form -grad(R)/R, R = sqrt(P), for cross-checking
/// against `wave_number_u`. Spectral in R; meaningful for node-free
/// densities where R is smooth.
pub fn amplitude_wave_number(p: &DensityField) -> Result<VectorFieldReal> {
    let r = p.amplitude();
    let grad = ops::gradient(&r)?;
    let mask = p.reliable_mask();
    let mut components = Vec::with_capacity(grad.dims());
    for axis in 0..grad.dims() {
        let comp: Vec<f64> = grad
            .component(axis)
            .iter()
            .zip(r.values())
            .zip(mask.bits())
            .map(|((&g, &rv), &ok)| if ok { -g / rv } else { 0.0 })
            .collect();
        components.push(comp);
    }
    VectorFieldReal::new(p.grid().clone(), components)
}

/// delta_E = (hbar/2) div(v). The divergence uses the local 8th-order
/// stencil since velocity fields are only piecewise reliable.
pub fn energy_fluctuation(
    v: &VectorFieldReal,
    constants: &PhysicalConstants,
) -> Result<ScalarFieldReal> {
    Ok(ops::fd8_divergence(v)?.map(|d| 0.5 * constants.hbar * d))
}

/// Q = -(hbar^2/2m) lap(sqrt P)/sqrt(P), computed on the amplitude and
/// zeroed below the floor. Errors if no point is above the floor.
pub fn quantum_potential(
    p: &DensityField,
    constants: &PhysicalConstants,
) -> Result<ScalarFieldReal> {
    p.ensure_normalized()?;
    let r = p.amplitude();
    let lap = ops::laplacian(&r)?;
    let mask = p.reliable_mask();
    if !mask.any() {
        return Err(Error::AllBelowFloor);
    }
    let factor = -constants.hbar * constants.hbar / (2.0 * constants.mass);
    let values: Vec<f64> = lap
        .values()
        .iter()
        .zip(r.values())
        .zip(mask.bits())
        .map(|((&l, &rv), &ok)| if ok { factor * l / rv } else { 0.0 })
        .collect();
    ScalarFieldReal::new(p.grid().clone(), values)
}

/// The bracket form (hbar^2/4m) [ (1/2)(grad P / P)^2 - lap(P)/P ],
/// algebraically equal to [`quantum_potential`]; kept as an independent
/// evaluation route.
pub fn quantum_potential_bracket(
    p: &DensityField,
    constants: &PhysicalConstants,
) -> Result<ScalarFieldReal> {
    p.ensure_normalized()?;
    let (rel, mask) = relative_gradient(p)?;
    if !mask.any() {
        return Err(Error::AllBelowFloor);
    }
    let rel_sq = rel.dot(&rel)?;
    let lap = ops::laplacian(p.field())?;
    let factor = constants.hbar * constants.hbar / (4.0 * constants.mass);
    let values: Vec<f64> = rel_sq
        .values()
        .iter()
        .zip(lap.values())
        .zip(p.values())
        .zip(mask.bits())
        .map(|(((&g2, &l), &pv), &ok)| {
            if ok {
                factor * (0.5 * g2 - l / pv)
            } else {
                0.0
            }
        })
        .collect();
    ScalarFieldReal::new(p.grid().clone(), values)
}

/// sqrt( integral P |delta_p|^2 ) over reliable points.
pub fn rms_momentum_fluctuation(p: &DensityField, constants: &PhysicalConstants) -> Result<f64> {
    let delta_p = momentum_fluctuation(p, constants)?;
    let mag_sq = delta_p.dot(&delta_p)?;
    let weighted: Vec<f64> = mag_sq
        .values()
        .iter()
        .zip(p.values())
        .map(|(&m, &pv)| m * pv)
        .collect();
    let integrand = ScalarFieldReal::new(p.grid().clone(), weighted)?;
    Ok(ops::integrate(&integrand).max(0.0).sqrt())
}

/// All fluctuation fields of a pair in one pass.
pub fn diagnostics(
    pair: &MadelungPair,
    constants: &PhysicalConstants,
) -> Result<FluctuationDiagnostics> {
    let (rel, mask) = relative_gradient(&pair.p)?;
    let u = rel.scale(-constants.hbar / (2.0 * constants.mass));
    let delta_p = rel.scale(-constants.hbar / 2.0);
    let k_u = rel.scale(-0.5);
    let v = velocity(&pair.s, constants)?;
    let v_masked = zero_where_unreliable(&v, &mask);
    let delta_e = energy_fluctuation(&v_masked, constants)?;
    let q = quantum_potential(&pair.p, constants)?;
    Ok(FluctuationDiagnostics {
        u,
        delta_p,
        k_u,
        delta_e,
        q,
        reliability_mask: mask,
    })
}

fn zero_where_unreliable(v: &VectorFieldReal, mask: &Mask) -> VectorFieldReal {
    let mut out = v.clone();
    for axis in 0..v.dims() {
        for (val, &ok) in out.component_mut(axis).iter_mut().zip(mask.bits()) {
            if !ok {
                *val = 0.0;
            }
        }
    }
    out
}

/// P-weighted rms of a vector field's magnitude over reliable points.
fn weighted_rms(v: &VectorFieldReal, p: &DensityField, mask: &Mask) -> f64 {
    let mag_sq = v.dot(v).expect("same grid");
    let weighted: Vec<f64> = mag_sq
        .values()
        .iter()
        .zip(p.values())
        .zip(mask.bits())
        .map(|((&m, &pv), &ok)| if ok { m * pv } else { 0.0 })
        .collect();
    let f = ScalarFieldReal::new(p.grid().clone(), weighted).expect("same grid");
    ops::integrate(&f).max(0.0).sqrt()
}

/// Classification thresholds: a state is Hamiltonian flow when both
/// residuals stay below 1e-6 of their natural scales.
pub const FLOW_THRESHOLD_REL: f64 = 1e-6;

/// Orthogonality and unbiasedness report for one pair.
///
/// The cross and divergence integrals are evaluated with the same
/// centered-stencil pair (an exactly skew-adjoint discretization), so
/// `i_cross + i_div = 0` holds to rounding for any fields whatsoever;
/// that is the discrete integration-by-parts identity. The caller
/// supplies dP/dt from a solver or from snapshot differencing.
pub fn flow_report(
    pair: &MadelungPair,
    dp_dt: &ScalarFieldReal,
    constants: &PhysicalConstants,
) -> Result<FlowReport> {
    if dp_dt.grid() != pair.grid() {
        return Err(Error::GridMismatch);
    }
    pair.p.ensure_normalized()?;
    let grid = pair.grid().clone();
    let p = &pair.p;
    let mask = p.reliable_mask();

    let v = velocity(&pair.s, constants)?;
    let v_masked = zero_where_unreliable(&v, &mask);

    // Pointwise fields: spectral grad(P)/P dotted with the masked velocity.
    let (rel_grad, _) = relative_gradient(p)?;
    let orth_residual = rel_grad.dot(&v_masked)?;
    let div_v = ops::fd8_divergence(&v_masked)?;

    // Integrals: FD8 gradient against FD8 divergence of the same vector
    // field; skew-adjointness makes the IBP identity exact.
    let grad_p_fd = ops::fd8_gradient(p.field())?;
    let cross_integrand = grad_p_fd.dot(&v_masked)?;
    let i_cross = ops::integrate(&cross_integrand);
    let div_weighted: Vec<f64> = div_v
        .values()
        .iter()
        .zip(p.values())
        .map(|(&d, &pv)| d * pv)
        .collect();
    let i_div = ops::integrate(&ScalarFieldReal::new(grid.clone(), div_weighted)?);
    let i_dp_dt = ops::integrate(dp_dt);
    // Substituting delta_p = -(hbar/2) grad P / P into P (grad S . delta_p)
    // cancels P and leaves -(hbar m / 2) times the cross integrand.
    let i_corr = -0.5 * constants.hbar * constants.mass * i_cross;

    // Classification looks only at points whose full stencil is reliable.
    let eroded = mask.erode(4);
    let max_orth_residual = max_abs_where(&orth_residual, &eroded);
    let max_div_v = max_abs_where(&div_v, &eroded);

    let rms_rel_grad = weighted_rms(&rel_grad, p, &mask);
    let rms_v = weighted_rms(&v_masked, p, &mask);
    let box_scale = grid
        .lengths()
        .iter()
        .product::<f64>()
        .powf(1.0 / grid.dims() as f64);
    let orth_scale = rms_rel_grad * rms_v;
    let div_scale = rms_v / box_scale;

    let hamiltonian = max_orth_residual <= FLOW_THRESHOLD_REL * orth_scale
        && max_div_v <= FLOW_THRESHOLD_REL * div_scale;
    Ok(FlowReport {
        orth_residual,
        div_v,
        i_dp_dt,
        i_cross,
        i_div,
        i_corr,
        max_orth_residual,
        max_div_v,
        orth_scale,
        div_scale,
        classification: if hamiltonian {
            FlowClass::Hamiltonian
        } else {
            FlowClass::Quantum
        },
    })
}

fn max_abs_where(f: &ScalarFieldReal, mask: &Mask) -> f64 {
    f.values()
        .iter()
        .zip(mask.bits())
        .filter(|(_, &ok)| ok)
        .fold(0.0f64, |m, (&v, _)| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ActionField;
    use crate::grid::Grid;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::nonrelativistic(1.0, 1.0).unwrap()
    }

    fn uniform_pair(n: usize, l: f64) -> MadelungPair {
        let g = Grid::line(n, l).unwrap();
        let p = DensityField::new(ScalarFieldReal::constant(g.clone(), 1.0 / l)).unwrap();
        let s = ActionField::new(ScalarFieldReal::zeros(g)).unwrap();
        MadelungPair::new(p, s, 0.0).unwrap()
    }

    #[test]
    fn uniform_density_has_zero_fluctuations() {
        let pair = uniform_pair(64, 8.0);
        let d = diagnostics(&pair, &consts()).unwrap();
        assert!(d.u.magnitude().max_abs() < 1e-13);
        assert!(d.delta_p.magnitude().max_abs() < 1e-13);
        assert!(d.k_u.magnitude().max_abs() < 1e-13);
        assert!(d.delta_e.max_abs() < 1e-13);
        assert!(d.q.max_abs() < 1e-10);
        assert!(
            rms_momentum_fluctuation(&pair.p, &consts()).unwrap() < 1e-13,
            "uniform density must carry no rms fluctuation"
        );
    }

    #[test]
    fn uniform_plus_linear_action_is_hamiltonian() {
        let g = Grid::line(64, 8.0).unwrap();
        let k0 = 2.0 * std::f64::consts::PI / 8.0; // one winding
        let p = DensityField::new(ScalarFieldReal::constant(g.clone(), 1.0 / 8.0)).unwrap();
        let s = ActionField::new(ScalarFieldReal::from_fn(g.clone(), |x| k0 * x[0])).unwrap();
        let pair = MadelungPair::new(p, s, 0.0).unwrap();
        let dp_dt = ScalarFieldReal::zeros(g);
        let report = flow_report(&pair, &dp_dt, &consts()).unwrap();
        assert_eq!(report.classification, FlowClass::Hamiltonian);
        assert!(report.i_cross.abs() < 1e-12);
        assert!(report.i_div.abs() < 1e-12);
        assert!(report.i_corr.abs() < 1e-12);
        assert!(report.max_orth_residual < 1e-12);
        assert!(report.max_div_v < 1e-12);
    }

    #[test]
    fn quantum_potential_needs_points_above_floor() {
        let g = Grid::line(64, 8.0).unwrap();
        // Not normalizable to anything above its own floor: all equal zero
        // fails earlier, so use a normalized field and a floor of one.
        let p = DensityField::with_floor(ScalarFieldReal::constant(g, 1.0 / 8.0), 2.0).unwrap();
        assert!(matches!(
            quantum_potential(&p, &consts()),
            Err(Error::AllBelowFloor)
        ));
    }

    #[test]
    fn flow_report_rejects_grid_mismatch() {
        let pair = uniform_pair(64, 8.0);
        let other = ScalarFieldReal::zeros(Grid::line(128, 8.0).unwrap());
        assert!(matches!(
            flow_report(&pair, &other, &consts()),
            Err(Error::GridMismatch)
        ));
    }
}
