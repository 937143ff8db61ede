//! Hamiltonian characteristics `dX/ds = V`, `dV/ds = −∇Φ(X)`, backward exit
//! times, the variational (Jacobian) flow, diffuse re-emission and back-time
//! cycles.

mod cycles;

pub(crate) use cycles::tangent_frame;
pub use cycles::{
    build_back_cycle, c_mu_quadrature, cycle_reach_probability, sample_diffuse_velocity,
    stream_rng, BackTimeCycle, CycleRecord, CycleTerminal, ReachEstimate,
};

use nalgebra::Matrix3;
use thiserror::Error;

use crate::fields::PotentialField;
use crate::geometry::{GeometryError, LevelSetDomain, Vec3};

/// Default integrator step in units of the unit-speed crossing time.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Backward-exit horizon in domain crossing times.
pub const HORIZON_CROSSINGS: f64 = 1e4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharError {
    #[error("characteristic left the domain at {position:?} (s = {time})")]
    LeftDomain { position: [f64; 3], time: f64 },
    #[error("no backward exit within horizon {horizon} from x = {position:?}; trapped orbit")]
    ExitNotFound { position: [f64; 3], horizon: f64 },
    #[error("invalid flow request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec3,
    pub v: Vec3,
}

impl PhasePoint {
    pub fn new(x: Vec3, v: Vec3) -> Self {
        Self { x, v }
    }
}

/// Sensitivities of `(X, V)(s)` with respect to the velocity at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianState {
    pub dxdv: Matrix3<f64>,
    pub dvdv: Matrix3<f64>,
}

impl JacobianState {
    pub fn identity() -> Self {
        Self {
            dxdv: Matrix3::zeros(),
            dvdv: Matrix3::identity(),
        }
    }

    pub fn det_dxdv(&self) -> f64 {
        self.dxdv.determinant()
    }
}

/// One position-Verlet step of signed size `h`.
#[inline]
pub fn verlet_step(pot: &PotentialField, p: &PhasePoint, h: f64) -> PhasePoint {
    let xm = p.x + p.v * (0.5 * h);
    let v = p.v - pot.grad(&xm) * h;
    PhasePoint::new(xm + v * (0.5 * h), v)
}

#[inline]
fn verlet_step_tangent(
    pot: &PotentialField,
    p: &PhasePoint,
    j: &JacobianState,
    h: f64,
) -> (PhasePoint, JacobianState) {
    let xm = p.x + p.v * (0.5 * h);
    let jxm = j.dxdv + j.dvdv * (0.5 * h);
    let v = p.v - pot.grad(&xm) * h;
    let jv = j.dvdv - pot.hessian(&xm) * jxm * h;
    (
        PhasePoint::new(xm + v * (0.5 * h), v),
        JacobianState {
            dxdv: jxm + jv * (0.5 * h),
            dvdv: jv,
        },
    )
}

fn substeps(t: f64, s: f64, step: f64) -> Result<(usize, f64), CharError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(CharError::InvalidRequest(format!(
            "step must be positive, got {step}"
        )));
    }
    if !(s <= t) {
        return Err(CharError::InvalidRequest(format!(
            "need s ≤ t, got s={s}, t={t}"
        )));
    }
    let span = t - s;
    if span == 0.0 {
        return Ok((0, 0.0));
    }
    let n = (span / step).ceil().max(1.0) as usize;
    Ok((n, -span / n as f64))
}

/// Integrates backward from `(t, start)` to time `s`, calling `visit` after
/// every substep with the substep's end time and state.
pub fn flow_with<F>(
    pot: &PotentialField,
    start: PhasePoint,
    t: f64,
    s: f64,
    step: f64,
    mut visit: F,
) -> Result<PhasePoint, CharError>
where
    F: FnMut(f64, &PhasePoint) -> Result<(), CharError>,
{
    let (n, h) = substeps(t, s, step)?;
    let mut p = start;
    for i in 0..n {
        p = verlet_step(pot, &p, h);
        visit(t + (i + 1) as f64 * h, &p)?;
    }
    Ok(p)
}

/// `(X, V)(s; t, x, v)` for `s ≤ t`. The caller keeps the path inside `Ω`.
pub fn flow(
    pot: &PotentialField,
    start: PhasePoint,
    t: f64,
    s: f64,
    step: f64,
) -> Result<PhasePoint, CharError> {
    flow_with(pot, start, t, s, step, |_, _| Ok(()))
}

/// As [`flow`], failing with `LeftDomain` when a substep leaves `Ω̄`.
pub fn flow_in_domain(
    domain: &LevelSetDomain,
    pot: &PotentialField,
    start: PhasePoint,
    t: f64,
    s: f64,
    step: f64,
) -> Result<PhasePoint, CharError> {
    let band = domain.tolerances().band;
    flow_with(pot, start, t, s, step, |time, p| {
        if domain.level(&p.x) > band {
            Err(CharError::LeftDomain {
                position: [p.x[0], p.x[1], p.x[2]],
                time,
            })
        } else {
            Ok(())
        }
    })
}

/// Integrates the variational equations alongside the flow. Uses the exact
/// tangent map of the Verlet step, so it differentiates [`flow`] itself.
pub fn jacobian_flow(
    pot: &PotentialField,
    start: PhasePoint,
    t: f64,
    s: f64,
    step: f64,
) -> Result<(PhasePoint, JacobianState, f64), CharError> {
    let (n, h) = substeps(t, s, step)?;
    let mut p = start;
    let mut j = JacobianState::identity();
    for _ in 0..n {
        (p, j) = verlet_step_tangent(pot, &p, &j, h);
    }
    let det = j.det_dxdv();
    Ok((p, j, det))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitOptions {
    pub step: f64,
    pub horizon: Option<f64>,
}

impl Default for ExitOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            horizon: None,
        }
    }
}

/// Backward exit data `(t_b, x_b, v_b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackwardExit {
    pub t_b: f64,
    pub x_b: Vec3,
    pub v_b: Vec3,
}

/// Starting points on the boundary band are pulled inside by the band
/// tolerance along `−n`, which resolves grazing and tangential starts.
fn nudged_start(domain: &LevelSetDomain, x: &Vec3) -> Result<Vec3, CharError> {
    let band = domain.tolerances().band;
    if domain.level(x) >= -band {
        let n = domain.outward_normal(x)?;
        let mut y = x - n * band;
        let mut k = 0;
        while domain.level(&y) >= 0.0 && k < 60 {
            y -= n * band * f64::from(1u32 << (k.min(30)));
            k += 1;
        }
        Ok(y)
    } else {
        Ok(*x)
    }
}

/// First backward time at which the characteristic through `start` hits `∂Ω`.
pub fn backward_exit(
    domain: &LevelSetDomain,
    pot: &PotentialField,
    start: PhasePoint,
    opts: &ExitOptions,
) -> Result<BackwardExit, CharError> {
    let x0 = nudged_start(domain, &start.x)?;
    let horizon = opts
        .horizon
        .unwrap_or(HORIZON_CROSSINGS * domain.crossing_time());
    if pot.is_zero() {
        if let Some(tb) = domain.quadric_exit(&x0, &(-start.v)) {
            if tb > horizon {
                return Err(CharError::ExitNotFound {
                    position: [start.x[0], start.x[1], start.x[2]],
                    horizon,
                });
            }
            return Ok(BackwardExit {
                t_b: tb,
                x_b: x0 - start.v * tb,
                v_b: start.v,
            });
        }
        if start.v.norm_squared() == 0.0 {
            return Err(CharError::ExitNotFound {
                position: [start.x[0], start.x[1], start.x[2]],
                horizon,
            });
        }
    }
    let h = -opts.step;
    let mut p = PhasePoint::new(x0, start.v);
    let mut elapsed = 0.0;
    while elapsed < horizon {
        let next = verlet_step(pot, &p, h);
        if domain.level(&next.x) >= 0.0 {
            let from = p;
            let theta = domain
                .crossing_along(|th| verlet_step(pot, &from, h * th).x)?
                .unwrap_or(1.0);
            let hit = verlet_step(pot, &from, h * theta);
            return Ok(BackwardExit {
                t_b: elapsed + theta * opts.step,
                x_b: hit.x,
                v_b: hit.v,
            });
        }
        p = next;
        elapsed += opts.step;
    }
    Err(CharError::ExitNotFound {
        position: [start.x[0], start.x[1], start.x[2]],
        horizon,
    })
}
