use rayon::prelude::*;

use super::space::{SpatialGrid, WallSamples};
use super::SolverError;
use crate::characteristics::{verlet_step, PhasePoint, DEFAULT_STEP};
use crate::collision::{Extension, Stencil, VelocityGrid};
use crate::fields::{weight_w, PotentialField, WeightSpec};
use crate::geometry::{LevelSetDomain, Vec3};

/// What the stored values mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// The full distribution `F`.
    Full,
    /// The weighted perturbation `h = w f`, `F = μ_E + μ_E^{1/2} h/w`.
    Weighted,
}

/// Spatial interpolation order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InterpOrder {
    #[default]
    Trilinear,
    /// Tricubic where the full stencil is interior, trilinear elsewhere.
    Tricubic,
}

/// Damping rate `λ(x, v)` applied along characteristics.
#[derive(Clone, Copy, Debug)]
pub enum Damping<'a> {
    None,
    /// `λ = e^{−Φ(x)} ν(v)`.
    Nu,
    /// A frozen rate given at the nodes (velocity-major), e.g. `R(f)`.
    Frozen(&'a [f64]),
}

/// Per-step bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Factor applied to wall-emitted values to restore the mass, or to the
    /// whole field when no characteristic reached the wall.
    pub kappa: f64,
    /// Fraction of `(x, v)` nodes whose characteristic hit the wall.
    pub wall_fraction: f64,
}

#[derive(Clone, Copy, Debug)]
enum Foot {
    Interior { x: Vec3, v: Vec3 },
    Wall { tau: f64, x: Vec3, v: Vec3 },
}

/// Semi-Lagrangian transport with diffuse reflection on a masked grid.
///
/// Wall values use the ratio form
/// `value(v) = A(v) Σ_{n·v′>0} B(v′) val(v′)(n·v′) w / Σ_{n·v′>0} μ_E(v′)(n·v′) w`
/// at the nearest wall sample, with `(A, B) = (μ_E, 1)` for `F` and
/// `(w√μ_E, √μ_E/w)` for `h`, so `μ_E` and `h = 0` are exact fixed points.
/// The outgoing trace is taken at the remaining time `dt − τ` by linear
/// interpolation between the present values and values traced back by `dt`.
#[derive(Clone, Debug)]
pub struct Transport {
    domain: LevelSetDomain,
    pot: PotentialField,
    space: SpatialGrid,
    vgrid: VelocityGrid,
    walls: WallSamples,
    weight: WeightSpec,
    order: InterpOrder,
    step: f64,
    nu: Vec<f64>,
    mu: Vec<f64>,
    phi_x: Vec<f64>,
    phi_wall: Vec<f64>,
    wall_stencils: Vec<Stencil<8>>,
    outgoing: Vec<Vec<(u32, f64)>>,
    absorb_weighted: Vec<Vec<f64>>,
    zeta: Vec<f64>,
}

impl Transport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: LevelSetDomain,
        pot: PotentialField,
        space: SpatialGrid,
        vgrid: VelocityGrid,
        weight: WeightSpec,
        nu: Vec<f64>,
        order: InterpOrder,
    ) -> Result<Self, SolverError> {
        if nu.len() != vgrid.len() {
            return Err(SolverError::Dimension(format!(
                "ν has {} entries for {} velocity nodes",
                nu.len(),
                vgrid.len()
            )));
        }
        let walls = WallSamples::new(&domain, WallSamples::count_for(&domain, space.spacing()))?;
        let phi_x = space.nodes().iter().map(|x| pot.phi(x)).collect();
        let phi_wall: Vec<f64> = walls.points().iter().map(|x| pot.phi(x)).collect();
        let wall_stencils = walls.points().iter().map(|x| space.trilinear(x)).collect();
        let mu = vgrid.maxwellian();
        let wv = vgrid.weight();
        let mut outgoing = Vec::with_capacity(walls.len());
        let mut zeta = Vec::with_capacity(walls.len());
        let mut absorb_weighted = Vec::with_capacity(walls.len());
        for ((n, phi), xs) in walls.normals().iter().zip(&phi_wall).zip(walls.points()) {
            let mut list = Vec::new();
            let mut absorb = Vec::new();
            let mut z = 0.0;
            for (j, v) in vgrid.nodes().iter().enumerate() {
                let vn = n.dot(v);
                if vn > 0.0 {
                    list.push((j as u32, vn * wv));
                    absorb.push(((-phi).exp() * mu[j]).sqrt() / weight_w(&weight, &pot, xs, v));
                    z += (-phi).exp() * mu[j] * vn * wv;
                }
            }
            outgoing.push(list);
            absorb_weighted.push(absorb);
            zeta.push(z);
        }
        Ok(Self {
            domain,
            pot,
            space,
            vgrid,
            walls,
            weight,
            order,
            step: DEFAULT_STEP,
            nu,
            mu,
            phi_x,
            phi_wall,
            wall_stencils,
            outgoing,
            absorb_weighted,
            zeta,
        })
    }

    pub fn domain(&self) -> &LevelSetDomain {
        &self.domain
    }

    pub fn potential(&self) -> &PotentialField {
        &self.pot
    }

    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    pub fn velocity_grid(&self) -> &VelocityGrid {
        &self.vgrid
    }

    pub fn walls(&self) -> &WallSamples {
        &self.walls
    }

    pub fn weight_spec(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `Φ` at the spatial nodes.
    pub fn phi_nodes(&self) -> &[f64] {
        &self.phi_x
    }

    pub fn nx(&self) -> usize {
        self.space.len()
    }

    pub fn nv(&self) -> usize {
        self.vgrid.len()
    }

    /// `μ_E(x_i, v_j)`, velocity-major.
    pub fn local_maxwellian(&self) -> Vec<f64> {
        let nx = self.nx();
        let mut out = vec![0.0; nx * self.nv()];
        for (j, row) in out.chunks_exact_mut(nx).enumerate() {
            for (i, o) in row.iter_mut().enumerate() {
                *o = (-self.phi_x[i]).exp() * self.mu[j];
            }
        }
        out
    }

    /// `w(x_i, v_j)`, velocity-major.
    pub fn weights_w(&self) -> Vec<f64> {
        let nx = self.nx();
        let mut out = vec![0.0; nx * self.nv()];
        let nodes = self.vgrid.nodes();
        for (j, row) in out.chunks_exact_mut(nx).enumerate() {
            for (i, o) in row.iter_mut().enumerate() {
                *o = weight_w(&self.weight, &self.pot, &self.space.nodes()[i], &nodes[j]);
            }
        }
        out
    }

    /// Backward trace of duration `dt` from an interior point. Returns the
    /// foot and `∫ λ ds` along the traced part.
    fn trace<L>(&self, x: Vec3, v: Vec3, dt: f64, lam: &L) -> Result<(Foot, f64), SolverError>
    where
        L: Fn(&Vec3, &Vec3) -> f64,
    {
        if self.pot.is_zero() {
            let tb = match self.domain.quadric_exit(&x, &(-v)) {
                Some(t) => t,
                None => {
                    if v.norm_squared() == 0.0 {
                        f64::INFINITY
                    } else {
                        match self.domain.ray_boundary_crossing(&x, &(x - v * dt))? {
                            Some(s) => s * dt,
                            None => f64::INFINITY,
                        }
                    }
                }
            };
            let l0 = lam(&x, &v);
            if tb >= dt {
                let xf = x - v * dt;
                let l1 = if l0 == 0.0 { 0.0 } else { lam(&xf, &v) };
                return Ok((Foot::Interior { x: xf, v }, 0.5 * (l0 + l1) * dt));
            }
            let xb = x - v * tb;
            let l1 = if l0 == 0.0 { 0.0 } else { lam(&xb, &v) };
            return Ok((Foot::Wall { tau: tb, x: xb, v }, 0.5 * (l0 + l1) * tb));
        }
        let n = (dt / self.step).ceil().max(1.0) as usize;
        let h = -dt / n as f64;
        let mut p = PhasePoint::new(x, v);
        let mut lp = lam(&p.x, &p.v);
        let mut integral = 0.0;
        for i in 0..n {
            let next = verlet_step(&self.pot, &p, h);
            if self.domain.level(&next.x) >= 0.0 {
                let from = p;
                let theta = self
                    .domain
                    .crossing_along(|th| verlet_step(&self.pot, &from, h * th).x)?
                    .unwrap_or(1.0);
                let hit = verlet_step(&self.pot, &from, h * theta);
                let dtau = theta * -h;
                integral += 0.5 * (lp + lam(&hit.x, &hit.v)) * dtau;
                return Ok((
                    Foot::Wall {
                        tau: i as f64 * -h + dtau,
                        x: hit.x,
                        v: hit.v,
                    },
                    integral,
                ));
            }
            let ln = lam(&next.x, &next.v);
            integral += 0.5 * (lp + ln) * -h;
            lp = ln;
            p = next;
        }
        Ok((Foot::Interior { x: p.x, v: p.v }, integral))
    }

    /// Value of the field at `(x, v)`. `F` is interpolated as a ratio to
    /// `μ_E`; `h` directly (zero beyond the velocity cutoff).
    fn evaluate(
        &self,
        values: &[f64],
        repr: Representation,
        x: &Vec3,
        v: &Vec3,
        node: Option<usize>,
    ) -> f64 {
        let nx = self.nx();
        let full = repr == Representation::Full;
        let spatial = |row: &[f64]| -> f64 {
            if full && !self.pot.is_zero() {
                let st = self.space.trilinear(x);
                let s: f64 = st
                    .entries()
                    .map(|(k, w)| w * row[k] * self.phi_x[k].exp())
                    .sum();
                return s * (-self.pot.phi(x)).exp();
            }
            if self.order == InterpOrder::Tricubic && !full {
                if let Some(st) = self.space.tricubic(x) {
                    return st.apply(row);
                }
            }
            self.space.trilinear(x).apply(row)
        };
        if let Some(j) = node {
            return spatial(&values[j * nx..(j + 1) * nx]);
        }
        if full {
            let st = self.vgrid.trilinear(v, Extension::Clamp);
            let r: f64 = st
                .entries()
                .map(|(j, w)| w * spatial(&values[j * nx..(j + 1) * nx]) / self.mu[j])
                .sum();
            r * (-0.5 * v.norm_squared()).exp()
        } else {
            let st = self.vgrid.trilinear(v, Extension::Zero);
            st.entries()
                .map(|(j, w)| w * spatial(&values[j * nx..(j + 1) * nx]))
                .sum()
        }
    }

    fn damping_fn<'a>(&'a self, damping: &'a Damping<'a>) -> impl Fn(&Vec3, &Vec3) -> f64 + 'a {
        move |x: &Vec3, v: &Vec3| -> f64 {
            match damping {
                Damping::None => 0.0,
                Damping::Nu => {
                    let nu = self.vgrid.trilinear(v, Extension::Clamp).apply(&self.nu);
                    (-self.pot.phi(x)).exp() * nu
                }
                Damping::Frozen(rate) => self.evaluate(rate, Representation::Weighted, x, v, None),
            }
        }
    }

    /// Value at wall sample `s`; full distributions are interpolated relative
    /// to `e^{−Φ}` as in the interior.
    fn wall_value(&self, s: usize, st: &Stencil<8>, row: &[f64], repr: Representation) -> f64 {
        if repr == Representation::Full && !self.pot.is_zero() {
            let r: f64 = st
                .entries()
                .map(|(k, w)| w * row[k] * self.phi_x[k].exp())
                .sum();
            r * (-self.phi_wall[s]).exp()
        } else {
            st.apply(row)
        }
    }

    /// `A(x_s, v)` of the closure.
    fn emit_factor(&self, s: usize, v: &Vec3, repr: Representation) -> f64 {
        let phi = self.phi_wall[s];
        let mu_e = (-phi - 0.5 * v.norm_squared()).exp();
        match repr {
            Representation::Full => mu_e,
            Representation::Weighted => {
                let w = weight_w(&self.weight, &self.pot, &self.walls.points()[s], v);
                w * mu_e.sqrt()
            }
        }
    }

    /// Closure fluxes at every wall sample: present values and values traced
    /// back by `dt`, each divided by the normalizer.
    fn wall_fluxes(
        &self,
        values: &[f64],
        repr: Representation,
        dt: f64,
        damping: &Damping,
    ) -> Result<Vec<(f64, f64)>, SolverError> {
        let nx = self.nx();
        let lam = self.damping_fn(damping);
        let band = 1e3 * self.domain.tolerances().band;
        (0..self.walls.len())
            .into_par_iter()
            .map(|s| {
                let xs = self.walls.points()[s];
                let n = self.walls.normals()[s];
                let start = xs - n * band;
                let st = &self.wall_stencils[s];
                let mut f0 = 0.0;
                let mut f1 = 0.0;
                for (q, &(j, c)) in self.outgoing[s].iter().enumerate() {
                    let j = j as usize;
                    let v = self.vgrid.node(j);
                    let b = match repr {
                        Representation::Full => c,
                        Representation::Weighted => self.absorb_weighted[s][q] * c,
                    };
                    let node_lam = |xq: &Vec3, vq: &Vec3| -> f64 {
                        match damping {
                            Damping::Nu if *vq == v => (-self.pot.phi(xq)).exp() * self.nu[j],
                            _ => lam(xq, vq),
                        }
                    };
                    let now = self.wall_value(s, st, &values[j * nx..(j + 1) * nx], repr);
                    f0 += b * now;
                    let (foot, decay) = self.trace(start, v, dt, &node_lam)?;
                    let back = match foot {
                        Foot::Interior { x, v: vf } => {
                            let node = self.pot.is_zero().then_some(j);
                            self.evaluate(values, repr, &x, &vf, node)
                        }
                        Foot::Wall { x, v: vf, .. } => {
                            let node = self.pot.is_zero().then_some(j);
                            self.evaluate(values, repr, &x, &vf, node)
                        }
                    };
                    f1 += b * back * (-decay).exp();
                }
                let z = self.zeta[s];
                Ok((f0 / z, f1 / z))
            })
            .collect()
    }

    /// One transport step of size `dt`. In `Full` representation with
    /// `conserve_mass`, wall-emitted values are scaled so the mass is exact.
    pub fn step(
        &self,
        values: &[f64],
        repr: Representation,
        dt: f64,
        damping: &Damping,
        conserve_mass: bool,
    ) -> Result<(Vec<f64>, StepReport), SolverError> {
        let nx = self.nx();
        let nv = self.nv();
        if values.len() != nx * nv {
            return Err(SolverError::Dimension(format!(
                "field has {} values, grids need {}",
                values.len(),
                nx * nv
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let fluxes = self.wall_fluxes(values, repr, dt, damping)?;
        let lam = self.damping_fn(damping);
        let mut interior = vec![0.0; nx * nv];
        let mut wall = vec![0.0; nx * nv];
        let rows: Vec<Result<usize, SolverError>> = interior
            .par_chunks_mut(nx)
            .zip(wall.par_chunks_mut(nx))
            .enumerate()
            .map(|(j, (irow, wrow))| {
                let v = self.vgrid.node(j);
                let mut hits = 0;
                for i in 0..nx {
                    let x = self.space.nodes()[i];
                    let node_lam = |xq: &Vec3, vq: &Vec3| -> f64 {
                        match damping {
                            Damping::Frozen(rate) if *xq == x && *vq == v => rate[j * nx + i],
                            Damping::Nu if *vq == v => (-self.pot.phi(xq)).exp() * self.nu[j],
                            _ => lam(xq, vq),
                        }
                    };
                    let (foot, decay) = self.trace(x, v, dt, &node_lam)?;
                    let att = (-decay).exp();
                    match foot {
                        Foot::Interior { x: xf, v: vf } => {
                            let node = self.pot.is_zero().then_some(j);
                            irow[i] = att * self.evaluate(values, repr, &xf, &vf, node);
                        }
                        Foot::Wall { tau, x: xb, v: vb } => {
                            let s = self.walls.nearest(&xb);
                            let rho = ((dt - tau) / dt).clamp(0.0, 1.0);
                            let (f0, f1) = fluxes[s];
                            wrow[i] = att
                                * self.emit_factor(s, &vb, repr)
                                * ((1.0 - rho) * f0 + rho * f1);
                            hits += 1;
                        }
                    }
                }
                Ok(hits)
            })
            .collect();
        let mut hits = 0usize;
        for r in rows {
            hits += r?;
        }
        let mut kappa = 1.0;
        if conserve_mass && repr == Representation::Full {
            let m_old = self.mass(values);
            let m_int = self.mass(&interior);
            let m_wall = self.mass(&wall);
            if m_wall > 0.0 {
                kappa = (m_old - m_int) / m_wall;
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(SolverError::Numerical(format!(
                        "wall mass correction factor {kappa} is not positive"
                    )));
                }
            } else if m_int > 0.0 {
                kappa = m_old / m_int;
                interior.iter_mut().for_each(|a| *a *= kappa);
            }
        }
        for (a, b) in interior.iter_mut().zip(&wall) {
            *a += kappa * b;
        }
        Ok((
            interior,
            StepReport {
                kappa,
                wall_fraction: hits as f64 / (nx * nv) as f64,
            },
        ))
    }

    /// `Σ_{i,j} w_x w_v values`, in fixed order.
    pub fn mass(&self, values: &[f64]) -> f64 {
        let nx = self.nx();
        let wx = self.space.weights();
        let mut total = 0.0;
        for row in values.chunks_exact(nx) {
            let mut s = 0.0;
            for (a, b) in row.iter().zip(wx) {
                s += a * b;
            }
            total += s;
        }
        total * self.vgrid.weight()
    }

    /// Outgoing trace of `values` at every wall sample, `(sample, v, value)`
    /// for `n·v > 0`, with the `(n·v) w_v` weight.
    pub fn outgoing_trace(&self, values: &[f64]) -> Vec<(usize, usize, f64, f64)> {
        let nx = self.nx();
        let mut out = Vec::new();
        for s in 0..self.walls.len() {
            let st = &self.wall_stencils[s];
            for &(j, c) in &self.outgoing[s] {
                let j = j as usize;
                out.push((s, j, st.apply(&values[j * nx..(j + 1) * nx]), c));
            }
        }
        out
    }
}
