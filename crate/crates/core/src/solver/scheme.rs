use nalgebra::Vector5;
use rayon::prelude::*;

use super::space::SpatialGrid;
use super::transport::{Damping, InterpOrder, Representation, StepReport, Transport};
use super::SolverError;
use crate::collision::{invariants, solve_tilt, CollisionOperator, KernelSpec, VelocityGrid};
use crate::diagnostics::{self, DiagnosticsSeries};
use crate::fields::{PotentialField, WeightSpec};
use crate::geometry::LevelSetDomain;

/// Entries of `F` below `−POSITIVITY_TOL·max|F|` are rejected.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// Damping used by the linear semigroup.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DampingMode {
    None,
    /// `e^{−Φ} ν`.
    #[default]
    Nu,
    /// Frozen `R(f)` of a supplied state.
    Rf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub order: InterpOrder,
    pub damping: DampingMode,
    pub picard_max_iter: usize,
    pub picard_tol: f64,
    /// Moment-matching correction of the collision gain.
    pub conservative: bool,
    pub seed: u64,
    /// Steps between diagnostic records.
    pub output_every: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            order: InterpOrder::Trilinear,
            damping: DampingMode::Nu,
            picard_max_iter: 30,
            picard_tol: 1e-12,
            conservative: true,
            seed: 0,
            output_every: 1,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.output_every == 0 {
            return Err(SolverError::InvalidConfig(
                "output_every must be at least 1".into(),
            ));
        }
        if self.picard_max_iter == 0 || !(self.picard_tol > 0.0) {
            return Err(SolverError::InvalidConfig(
                "Picard iteration needs max_iter ≥ 1 and a positive tolerance".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Advisory `dt·max|v|/dx`.
    pub fn cfl(&self, max_speed: f64, dx: f64) -> f64 {
        self.dt * max_speed / dx
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityReport {
    pub transport: StepReport,
    /// Largest `|λ|` of the moment correction over spatial nodes.
    pub tilt_max: f64,
    pub min_value: f64,
}

/// One recorded state of a run.
#[derive(Clone, Copy, Debug)]
pub struct Snapshot<'a> {
    pub step: usize,
    pub t: f64,
    pub values: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub series: DiagnosticsSeries,
    pub final_state: Vec<f64>,
}

/// Transport, collision operator and the fields they share.
#[derive(Clone, Debug)]
pub struct KineticSystem {
    transport: Transport,
    collision: CollisionOperator,
    mu_e: Vec<f64>,
    sqrt_mu_e: Vec<f64>,
    w: Vec<f64>,
    exp_phi: Vec<f64>,
}

impl KineticSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: LevelSetDomain,
        pot: PotentialField,
        spatial_points: usize,
        vgrid: VelocityGrid,
        kernel: KernelSpec,
        weight: WeightSpec,
        order: InterpOrder,
    ) -> Result<Self, SolverError> {
        let space = SpatialGrid::new(&domain, spatial_points)?;
        let collision = CollisionOperator::new(vgrid.clone(), kernel);
        let transport = Transport::new(
            domain,
            pot,
            space,
            vgrid,
            weight,
            collision.nu().to_vec(),
            order,
        )?;
        let mu_e = transport.local_maxwellian();
        let sqrt_mu_e = mu_e.iter().map(|m| m.sqrt()).collect();
        let w = transport.weights_w();
        let exp_phi = transport.phi_nodes().iter().map(|p| (-p).exp()).collect();
        Ok(Self {
            transport,
            collision,
            mu_e,
            sqrt_mu_e,
            w,
            exp_phi,
        })
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    pub fn collision(&self) -> &CollisionOperator {
        &self.collision
    }

    pub fn nx(&self) -> usize {
        self.transport.nx()
    }

    pub fn nv(&self) -> usize {
        self.transport.nv()
    }

    /// `μ_E` at the nodes, velocity-major.
    pub fn equilibrium(&self) -> &[f64] {
        &self.mu_e
    }

    pub fn sqrt_equilibrium(&self) -> &[f64] {
        &self.sqrt_mu_e
    }

    /// `w(x, v)` at the nodes, velocity-major.
    pub fn weight(&self) -> &[f64] {
        &self.w
    }

    /// `e^{−Φ(x_i)}`.
    pub fn exp_minus_phi(&self) -> &[f64] {
        &self.exp_phi
    }

    /// `f = (F − μ_E)/√μ_E`.
    pub fn perturbation(&self, full: &[f64]) -> Vec<f64> {
        full.iter()
            .zip(&self.mu_e)
            .zip(&self.sqrt_mu_e)
            .map(|((f, m), s)| (f - m) / s)
            .collect()
    }

    /// `F = μ_E + √μ_E f`.
    pub fn full(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(&self.mu_e)
            .zip(&self.sqrt_mu_e)
            .map(|((x, m), s)| m + s * x)
            .collect()
    }

    /// `h = w f`.
    pub fn weighted(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.w).map(|(a, b)| a * b).collect()
    }

    /// `f = h / w`.
    pub fn unweighted(&self, h: &[f64]) -> Vec<f64> {
        h.iter().zip(&self.w).map(|(a, b)| a / b).collect()
    }

    fn check_nonnegative(&self, f: &[f64]) -> Result<(), SolverError> {
        let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let min = f.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -POSITIVITY_TOL * max || !min.is_finite() {
            return Err(SolverError::NegativeInput { min });
        }
        Ok(())
    }

    /// `F_new = (F_tr + dt Q₊(F_tr, F_tr)) / (1 + dt ν(F_tr))` with `F_tr` the
    /// transported state. With `conservative`, the gain is tilted by
    /// `exp(λ·φ)` per spatial node so that `F_new` has the moments of `F_tr`.
    pub fn positivity_step(
        &self,
        f: &[f64],
        dt: f64,
        conservative: bool,
    ) -> Result<(Vec<f64>, PositivityReport), SolverError> {
        self.check_nonnegative(f)?;
        let (mut ftr, rep) =
            self.transport
                .step(f, Representation::Full, dt, &Damping::None, true)?;
        for x in ftr.iter_mut() {
            // transported values are convex combinations; clear round-off
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let nx = self.nx();
        let nv = self.nv();
        let gain = self.collision.q_gain(&ftr, &ftr, nx);
        let nu = self.collision.nu_of(&ftr, nx);
        let mut out = vec![0.0; nx * nv];
        let mut tilt_max: f64 = 0.0;
        if conservative {
            let scale = self.collision.grid().cutoff();
            let phi: Vec<Vector5<f64>> = self
                .collision
                .grid()
                .nodes()
                .iter()
                .map(|v| invariants(v, scale))
                .collect();
            let cols: Vec<Result<(Vec<f64>, f64), SolverError>> = (0..nx)
                .into_par_iter()
                .map(|x| {
                    let mut a = vec![0.0; nv];
                    let mut base = vec![0.0; nv];
                    let mut target = Vector5::zeros();
                    for v in 0..nv {
                        let k = v * nx + x;
                        let d = 1.0 + dt * nu[k];
                        a[v] = dt * gain[k] / d;
                        base[v] = ftr[k] / d;
                        target += phi[v] * (ftr[k] - base[v]);
                    }
                    let t = solve_tilt(&a, &phi, &target)?;
                    let col = (0..nv)
                        .map(|v| base[v] + a[v] * t.lambda.dot(&phi[v]).exp())
                        .collect();
                    Ok((col, t.lambda.abs().max()))
                })
                .collect();
            for (x, c) in cols.into_iter().enumerate() {
                let (col, lam) = c?;
                tilt_max = tilt_max.max(lam);
                for v in 0..nv {
                    out[v * nx + x] = col[v];
                }
            }
        } else {
            for k in 0..nx * nv {
                out[k] = (ftr[k] + dt * gain[k]) / (1.0 + dt * nu[k]);
            }
        }
        let min_value = out.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_value >= 0.0) {
            return Err(SolverError::Numerical(format!(
                "positivity step produced minimum {min_value:e}"
            )));
        }
        Ok((
            out,
            PositivityReport {
                transport: rep,
                tilt_max,
                min_value,
            },
        ))
    }

    /// Damping rate field for a mode; `Rf` needs the full state `F`.
    pub fn damping_rate(
        &self,
        mode: DampingMode,
        frozen: Option<&[f64]>,
    ) -> Result<Option<Vec<f64>>, SolverError> {
        match mode {
            DampingMode::Rf => {
                let f = frozen.ok_or_else(|| {
                    SolverError::InvalidConfig("R(f) damping needs a frozen state".into())
                })?;
                Ok(Some(self.collision.nu_of(f, self.nx())))
            }
            _ => Ok(None),
        }
    }

    /// One step of `∂_t h + v·∇_x h − ∇Φ·∇_v h + λ h = 0` with the weighted
    /// diffuse closure.
    pub fn semigroup_step(
        &self,
        h: &[f64],
        dt: f64,
        mode: DampingMode,
        rate: Option<&[f64]>,
    ) -> Result<Vec<f64>, SolverError> {
        let damping = match (mode, rate) {
            (DampingMode::None, _) => Damping::None,
            (DampingMode::Nu, _) => Damping::Nu,
            (DampingMode::Rf, Some(r)) => Damping::Frozen(r),
            (DampingMode::Rf, None) => {
                return Err(SolverError::InvalidConfig(
                    "R(f) damping needs a rate field".into(),
                ))
            }
        };
        Ok(self
            .transport
            .step(h, Representation::Weighted, dt, &damping, false)?
            .0)
    }

    /// `h(t)` from `h0` by `⌈t/dt⌉` semigroup steps; `observe` sees every
    /// state including the initial one.
    pub fn damped_semigroup<O>(
        &self,
        h0: &[f64],
        mode: DampingMode,
        frozen: Option<&[f64]>,
        t: f64,
        dt: f64,
        mut observe: O,
    ) -> Result<Vec<f64>, SolverError>
    where
        O: FnMut(Snapshot<'_>),
    {
        let rate = self.damping_rate(mode, frozen)?;
        let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
        let mut h = h0.to_vec();
        observe(Snapshot {
            step: 0,
            t: 0.0,
            values: &h,
        });
        for n in 0..steps {
            h = self.semigroup_step(&h, dt, mode, rate.as_deref())?;
            observe(Snapshot {
                step: n + 1,
                t: (n + 1) as f64 * dt,
                values: &h,
            });
        }
        Ok(h)
    }

    /// Nonlinear run with the positivity scheme, recording diagnostics every
    /// `output_every` steps and passing each recorded state to `observe`.
    pub fn run_simulation<O>(
        &self,
        f0: &[f64],
        cfg: &SchemeConfig,
        config_hash: &str,
        mut observe: O,
    ) -> Result<SimulationOutput, SolverError>
    where
        O: FnMut(Snapshot<'_>),
    {
        cfg.validate()?;
        self.check_nonnegative(f0)?;
        let mut series = DiagnosticsSeries::new(diagnostics::FULL_COLUMNS, config_hash, cfg.seed);
        let e0 = diagnostics::relative_entropy(self, f0)?;
        let mut f = f0.to_vec();
        let record =
            |series: &mut DiagnosticsSeries, t: f64, f: &[f64]| -> Result<(), SolverError> {
                let row = diagnostics::full_row(self, f, e0)?;
                Ok(series.push(t, &row)?)
            };
        record(&mut series, 0.0, &f)?;
        observe(Snapshot {
            step: 0,
            t: 0.0,
            values: &f,
        });
        let steps = cfg.steps();
        for n in 0..steps {
            f = self.positivity_step(&f, cfg.dt, cfg.conservative)?.0;
            if (n + 1) % cfg.output_every == 0 || n + 1 == steps {
                let t = (n + 1) as f64 * cfg.dt;
                record(&mut series, t, &f)?;
                observe(Snapshot {
                    step: n + 1,
                    t,
                    values: &f,
                });
            }
        }
        Ok(SimulationOutput {
            series,
            final_state: f,
        })
    }

    /// Linear run of the damped semigroup on `h`, recording the weighted sup
    /// norm and `L²` norm.
    pub fn run_linear(
        &self,
        h0: &[f64],
        cfg: &SchemeConfig,
        frozen: Option<&[f64]>,
        config_hash: &str,
    ) -> Result<SimulationOutput, SolverError> {
        cfg.validate()?;
        let mut series = DiagnosticsSeries::new(diagnostics::LINEAR_COLUMNS, config_hash, cfg.seed);
        let mut err = None;
        let every = cfg.output_every;
        let h = self.damped_semigroup(h0, cfg.damping, frozen, cfg.t_end, cfg.dt, |s| {
            if s.step % every == 0 && err.is_none() {
                let row = diagnostics::linear_row(self, s.values);
                if let Err(e) = series.push(s.t, &row) {
                    err = Some(e);
                }
            }
        })?;
        if let Some(e) = err {
            return Err(e.into());
        }
        Ok(SimulationOutput {
            series,
            final_state: h,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn small_system(pot: PotentialField) -> KineticSystem {
        KineticSystem::new(
            LevelSetDomain::unit_ball(),
            pot,
            4,
            VelocityGrid::new(4.0, 8).unwrap(),
            KernelSpec::hard_sphere().with_sphere_rule(1, 4).unwrap(),
            WeightSpec::new(6.0).unwrap(),
            InterpOrder::Trilinear,
        )
        .unwrap()
    }

    #[test]
    fn zero_and_equilibrium_steps() {
        let s = small_system(PotentialField::zero());
        let zero = vec![0.0; s.nx() * s.nv()];
        let (z, _) = s.positivity_step(&zero, 0.01, false).unwrap();
        assert!(z.iter().all(|x| *x == 0.0));
        let mu = s.equilibrium().to_vec();
        for conservative in [false, true] {
            let (out, rep) = s.positivity_step(&mu, 0.01, conservative).unwrap();
            for (a, b) in out.iter().zip(&mu) {
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
            assert!(rep.tilt_max < 1e-8);
        }
    }

    #[test]
    fn rejects_negative_input() {
        let s = small_system(PotentialField::zero());
        let mut f = s.equilibrium().to_vec();
        f[3] = -1.0;
        assert!(matches!(
            s.positivity_step(&f, 0.01, true),
            Err(SolverError::NegativeInput { .. })
        ));
    }

    #[test]
    fn conservative_step_keeps_mass_and_sign() {
        let s = small_system(PotentialField::zero());
        let mut f = s.equilibrium().to_vec();
        for (k, x) in f.iter_mut().enumerate() {
            *x *= 1.0 + 0.8 * ((k as f64) * 1.37).sin();
        }
        let m0 = s.transport().mass(&f);
        let (out, rep) = s.positivity_step(&f, 0.02, true).unwrap();
        assert!(rep.min_value >= 0.0);
        assert_relative_eq!(s.transport().mass(&out), m0, max_relative = 1e-11);
    }

    #[test]
    fn semigroup_property() {
        let s = small_system(PotentialField::zero());
        let h0: Vec<f64> = (0..s.nx() * s.nv())
            .map(|k| ((k as f64) * 0.3).cos())
            .collect();
        let ab = s
            .damped_semigroup(&h0, DampingMode::Nu, None, 0.04, 0.02, |_| {})
            .unwrap();
        let a = s
            .damped_semigroup(&h0, DampingMode::Nu, None, 0.02, 0.02, |_| {})
            .unwrap();
        let b = s
            .damped_semigroup(&a, DampingMode::Nu, None, 0.02, 0.02, |_| {})
            .unwrap();
        assert_eq!(ab, b);
        let none = s
            .damped_semigroup(&h0, DampingMode::None, None, 0.02, 0.02, |_| {})
            .unwrap();
        let direct = s
            .transport()
            .step(&h0, Representation::Weighted, 0.02, &Damping::None, false)
            .unwrap()
            .0;
        assert_eq!(none, direct);
    }

    #[test]
    fn frozen_rate_of_equilibrium_matches_nu() {
        let s = small_system(PotentialField::zero());
        let h0: Vec<f64> = (0..s.nx() * s.nv())
            .map(|k| ((k as f64) * 0.3).cos())
            .collect();
        let mu = s.equilibrium().to_vec();
        let a = s
            .damped_semigroup(&h0, DampingMode::Rf, Some(&mu), 0.02, 0.02, |_| {})
            .unwrap();
        let b = s
            .damped_semigroup(&h0, DampingMode::Nu, None, 0.02, 0.02, |_| {})
            .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-10, epsilon = 1e-14);
        }
    }
}
