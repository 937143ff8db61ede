use nalgebra::Vector5;
use rayon::prelude::*;

use super::conserve::{invariants, solve_tilt};
use super::grid::VelocityGrid;
use super::interp::{Extension, Stencil};
use super::kernel::KernelSpec;
use super::CollisionError;
use crate::geometry::Vec3;

/// Gain, loss, collision frequency, `Γ±` and `R(f)` on one velocity grid.
///
/// Batched inputs are velocity-major: entry `v·nx + x` holds node `v` at
/// spatial point `x`, so one velocity stencil serves every spatial point.
#[derive(Clone, Debug)]
pub struct CollisionOperator {
    grid: VelocityGrid,
    kernel: KernelSpec,
    mu: Vec<f64>,
    sqrt_mu: Vec<f64>,
    nu: Vec<f64>,
    phi: Vec<Vector5<f64>>,
}

impl CollisionOperator {
    pub fn new(grid: VelocityGrid, kernel: KernelSpec) -> Self {
        let mu = grid.maxwellian();
        let sqrt_mu = grid.sqrt_maxwellian();
        let scale = grid.cutoff();
        let phi = grid.nodes().iter().map(|v| invariants(v, scale)).collect();
        let mut op = Self {
            grid,
            kernel,
            mu,
            sqrt_mu,
            nu: Vec::new(),
            phi,
        };
        op.nu = op.nu_of(&op.mu, 1);
        op
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sqrt_mu(&self) -> &[f64] {
        &self.sqrt_mu
    }

    /// `ν(v_i)` at the nodes, from the same quadrature as the loss term.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `ν₀ = min_i ν(v_i)`.
    pub fn nu0(&self) -> f64 {
        self.nu.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn invariants(&self) -> &[Vector5<f64>] {
        &self.phi
    }

    #[inline]
    fn pair_weight(&self, v: &Vec3, u: &Vec3) -> f64 {
        self.grid.weight() * self.kernel.b_norm() * self.kernel.speed_factor((v - u).norm())
    }

    /// `ν(v) = ∫∫ B(v − u, ω) μ(u) dω du` for an arbitrary `v`.
    pub fn collision_frequency(&self, v: &Vec3) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.mu)
            .map(|(u, m)| self.pair_weight(v, u) * m)
            .sum()
    }

    /// `ν(F)(v) = ∫∫ B(v − u, ω) F(u) dω du`, batched.
    pub fn nu_of(&self, f: &[f64], nx: usize) -> Vec<f64> {
        let nv = self.grid.len();
        assert_eq!(f.len(), nv * nx);
        let nodes = self.grid.nodes();
        let mut out = vec![0.0; nv * nx];
        out.par_chunks_mut(nx).enumerate().for_each(|(v, row)| {
            for (u, fu) in f.chunks_exact(nx).enumerate() {
                let a = self.pair_weight(&nodes[v], &nodes[u]);
                if a == 0.0 {
                    continue;
                }
                for (r, x) in row.iter_mut().zip(fu) {
                    *r += a * x;
                }
            }
        });
        out
    }

    /// `Q₋(F1, F2)(v) = F2(v) ν(F1)(v)`.
    pub fn q_loss(&self, f1: &[f64], f2: &[f64], nx: usize) -> Vec<f64> {
        let mut out = self.nu_of(f1, nx);
        for (o, b) in out.iter_mut().zip(f2) {
            *o *= b;
        }
        out
    }

    /// `Q₊(F1, F2)(v) = ∫∫ B F1(u′) F2(v′) dω du`. Post-collision values are
    /// interpolated as `μ·I[F/μ]`, so `Q₊(μ, μ) = Q₋(μ, μ)` node-wise.
    pub fn q_gain(&self, f1: &[f64], f2: &[f64], nx: usize) -> Vec<f64> {
        let r1 = self.ratio(f1, nx);
        let same = std::ptr::eq(f1, f2);
        let r2 = if same { None } else { Some(self.ratio(f2, nx)) };
        let mu = &self.mu;
        self.gain_sweep(&r1, r2.as_deref(), nx, Extension::Clamp, |v, u| {
            let m = mu[v] * mu[u];
            (m, m)
        })
    }

    pub fn q_collision(&self, f1: &[f64], f2: &[f64], nx: usize) -> Vec<f64> {
        let mut g = self.q_gain(f1, f2, nx);
        let l = self.q_loss(f1, f2, nx);
        for (a, b) in g.iter_mut().zip(&l) {
            *a -= b;
        }
        g
    }

    /// `Γ₊(f1, f2) = μ^{−1/2} Q₊(√μ f1, √μ f2)`; perturbations vanish beyond
    /// the cutoff.
    pub fn gamma_plus(&self, f1: &[f64], f2: &[f64], nx: usize) -> Vec<f64> {
        let same = std::ptr::eq(f1, f2);
        let sm = &self.sqrt_mu;
        self.gain_sweep(
            f1,
            if same { None } else { Some(f2) },
            nx,
            Extension::Zero,
            |v, u| (sm[u], sm[v]),
        )
    }

    /// `Γ₋(f1, f2)(v) = f2(v) ∫∫ B √μ(u) f1(u) dω du`.
    pub fn gamma_minus(&self, f1: &[f64], f2: &[f64], nx: usize) -> Vec<f64> {
        let weighted: Vec<f64> = f1
            .chunks_exact(nx)
            .zip(&self.sqrt_mu)
            .flat_map(|(row, s)| row.iter().map(move |x| x * s))
            .collect();
        let mut out = self.nu_of(&weighted, nx);
        for (o, b) in out.iter_mut().zip(f2) {
            *o *= b;
        }
        out
    }

    pub fn gamma(&self, f1: &[f64], f2: &[f64], nx: usize) -> Vec<f64> {
        let mut g = self.gamma_plus(f1, f2, nx);
        let l = self.gamma_minus(f1, f2, nx);
        for (a, b) in g.iter_mut().zip(&l) {
            *a -= b;
        }
        g
    }

    /// `R(f)(x, v) = ∫∫ B [μ_E + μ_E^{1/2} f](x, u) dω du`, with `phi[x] = Φ(x)`.
    pub fn r_of_f(&self, phi: &[f64], f: &[f64]) -> Vec<f64> {
        let nx = phi.len();
        let full = self.full_from_perturbation(phi, f);
        self.nu_of(&full, nx)
    }

    /// `F = μ_E + μ_E^{1/2} f`.
    pub fn full_from_perturbation(&self, phi: &[f64], f: &[f64]) -> Vec<f64> {
        let nx = phi.len();
        let mut out = vec![0.0; f.len()];
        for (v, (o, fr)) in out.chunks_exact_mut(nx).zip(f.chunks_exact(nx)).enumerate() {
            for x in 0..nx {
                let e = (-phi[x]).exp();
                o[x] = e * self.mu[v] + (e.sqrt() * self.sqrt_mu[v]) * fr[x];
            }
        }
        out
    }

    /// Tilts the gain by `exp(λ_x·φ)` at every spatial point so that its five
    /// moments equal those of `loss`. Returns the tilted gain.
    pub fn conservative_gain(
        &self,
        gain: &[f64],
        loss: &[f64],
        nx: usize,
    ) -> Result<Vec<f64>, CollisionError> {
        let nv = self.grid.len();
        let cols: Vec<Vec<f64>> = (0..nx)
            .into_par_iter()
            .map(|x| {
                let a: Vec<f64> = (0..nv).map(|v| gain[v * nx + x]).collect();
                let mut target = Vector5::zeros();
                for v in 0..nv {
                    target += self.phi[v] * loss[v * nx + x];
                }
                let t = solve_tilt(&a, &self.phi, &target)?;
                Ok(a.iter()
                    .zip(&self.phi)
                    .map(|(ai, p)| ai * t.lambda.dot(p).exp())
                    .collect())
            })
            .collect::<Result<_, CollisionError>>()?;
        let mut out = vec![0.0; nv * nx];
        for (x, col) in cols.iter().enumerate() {
            for v in 0..nv {
                out[v * nx + x] = col[v];
            }
        }
        Ok(out)
    }

    /// `Q(F, F)` with the conservative tilt applied to the gain.
    pub fn q_collision_conservative(
        &self,
        f: &[f64],
        nx: usize,
    ) -> Result<Vec<f64>, CollisionError> {
        let gain = self.q_gain(f, f, nx);
        let loss = self.q_loss(f, f, nx);
        let mut g = self.conservative_gain(&gain, &loss, nx)?;
        for (a, b) in g.iter_mut().zip(&loss) {
            *a -= b;
        }
        Ok(g)
    }

    /// `Σ_i w_i q(v_i) φ(v_i)` for `φ = 1, v₁, v₂, v₃, |v|²` at each point.
    pub fn invariant_moments(&self, q: &[f64], nx: usize) -> Vec<[f64; 5]> {
        let w = self.grid.weight();
        let nodes = self.grid.nodes();
        (0..nx)
            .map(|x| {
                let mut m = [0.0; 5];
                for (v, node) in nodes.iter().enumerate() {
                    let val = q[v * nx + x] * w;
                    m[0] += val;
                    m[1] += val * node.x;
                    m[2] += val * node.y;
                    m[3] += val * node.z;
                    m[4] += val * node.norm_squared();
                }
                m
            })
            .collect()
    }

    fn ratio(&self, f: &[f64], nx: usize) -> Vec<f64> {
        f.chunks_exact(nx)
            .zip(&self.mu)
            .flat_map(|(row, m)| row.iter().map(move |x| x / m))
            .collect()
    }

    /// Shared double loop over unordered velocity pairs. For each folded
    /// direction the pair `(v, u)` receives
    /// `W·s_v·A(u′)B(v′)` at `v` and `W·s_u·A(v′)B(u′)` at `u`, where `A`, `B`
    /// are interpolated from `a`, `b` (`b = a` when `None`).
    fn gain_sweep<S>(
        &self,
        a: &[f64],
        b: Option<&[f64]>,
        nx: usize,
        ext: Extension,
        scale: S,
    ) -> Vec<f64>
    where
        S: Fn(usize, usize) -> (f64, f64) + Sync,
    {
        let nv = self.grid.len();
        assert_eq!(a.len(), nv * nx);
        let chunks = pair_chunks(nv, sweep_parts(nv * nx));
        let h3 = self.grid.weight();
        let gamma0 = self.kernel.gamma() == 0.0;
        let partials: Vec<Vec<f64>> = chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut out = vec![0.0; nv * nx];
                let mut t1 = vec![0.0; nx];
                let mut t2 = vec![0.0; nx];
                let mut t3 = vec![0.0; nx];
                let mut t4 = vec![0.0; nx];
                let nodes = self.grid.nodes();
                for v in lo..hi {
                    if gamma0 {
                        let (sv, _) = scale(v, v);
                        let w = h3 * self.kernel.b_norm() * sv;
                        let bb = b.unwrap_or(a);
                        for x in 0..nx {
                            out[v * nx + x] += w * a[v * nx + x] * bb[v * nx + x];
                        }
                    }
                    for u in (v + 1)..nv {
                        let (sv, su) = scale(v, u);
                        if sv == 0.0 && su == 0.0 {
                            continue;
                        }
                        self.kernel
                            .for_each_collision(&nodes[v], &nodes[u], |vp, up, w| {
                                let w = w * h3;
                                let st_u = self.grid.trilinear(&up, ext);
                                let st_v = self.grid.trilinear(&vp, ext);
                                gather(&st_u, a, nx, &mut t1);
                                match b {
                                    None => {
                                        gather(&st_v, a, nx, &mut t2);
                                        let (cv, cu) = (w * sv, w * su);
                                        let (ov, ou) = split_rows(&mut out, v, u, nx);
                                        for x in 0..nx {
                                            let p = t1[x] * t2[x];
                                            ov[x] += cv * p;
                                            ou[x] += cu * p;
                                        }
                                    }
                                    Some(bv) => {
                                        gather(&st_v, bv, nx, &mut t2);
                                        gather(&st_v, a, nx, &mut t3);
                                        gather(&st_u, bv, nx, &mut t4);
                                        let (cv, cu) = (w * sv, w * su);
                                        let (ov, ou) = split_rows(&mut out, v, u, nx);
                                        for x in 0..nx {
                                            ov[x] += cv * t1[x] * t2[x];
                                            ou[x] += cu * t3[x] * t4[x];
                                        }
                                    }
                                }
                            });
                    }
                }
                out
            })
            .collect();
        let mut iter = partials.into_iter();
        let mut total = iter.next().unwrap_or_else(|| vec![0.0; nv * nx]);
        for p in iter {
            for (t, x) in total.iter_mut().zip(&p) {
                *t += x;
            }
        }
        total
    }
}

#[inline]
fn gather<const K: usize>(st: &Stencil<K>, values: &[f64], nx: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (idx, w) in st.entries() {
        let row = &values[idx * nx..(idx + 1) * nx];
        for (o, r) in out.iter_mut().zip(row) {
            *o += w * r;
        }
    }
}

#[inline]
fn split_rows(out: &mut [f64], v: usize, u: usize, nx: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(v < u);
    let (head, tail) = out.split_at_mut(u * nx);
    (&mut head[v * nx..(v + 1) * nx], &mut tail[..nx])
}

/// Splits `0..nv` into contiguous ranges with similar numbers of pairs
/// `(v, u > v)`. Depends only on `nv` and `parts`.
/// Partition count of the pair sweep. It depends on the problem size only,
/// so the summation order and the result do not depend on the worker count.
fn sweep_parts(len: usize) -> usize {
    const BUDGET: usize = 1 << 25;
    (BUDGET / len.max(1)).clamp(1, 8)
}

fn pair_chunks(nv: usize, parts: usize) -> Vec<(usize, usize)> {
    let total = nv * (nv.saturating_sub(1)) / 2;
    let target = total.div_ceil(parts).max(1);
    let mut chunks = Vec::with_capacity(parts);
    let mut lo = 0;
    let mut acc = 0;
    for v in 0..nv {
        acc += nv - v - 1;
        if acc >= target && chunks.len() + 1 < parts {
            chunks.push((lo, v + 1));
            lo = v + 1;
            acc = 0;
        }
    }
    if lo < nv {
        chunks.push((lo, nv));
    }
    chunks
}
