use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::grid::VelocityGrid;
use super::interp::Extension;
use super::kernel::KernelSpec;
use super::operators::CollisionOperator;

/// Dense `L = ν − K` on the velocity grid, acting on node values.
///
/// The strong form
/// `Lf(v) = ν f − Σ_u Σ_ω W √μ(u)[√μ(u′) I f(v′) + √μ(v′) I f(u′)] + √μ(v) Σ_u A √μ(u) f(u)`
/// interpolates `f` trilinearly (zero beyond the cutoff), so every coefficient
/// is bounded. The stored matrix is its symmetric, reflection-averaged part,
/// compressed by the orthogonal projector onto the discrete invariants.
#[derive(Clone, Debug)]
pub struct LinearOperatorMatrix {
    grid: VelocityGrid,
    nu: Vec<f64>,
    nu0: f64,
    l: DMatrix<f64>,
    basis: DMatrix<f64>,
    raw_kernel_residual: f64,
    raw_asymmetry: f64,
}

/// Least-squares fit `log y = log C − p log(1 + |v|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
}

pub fn assemble_linearized(grid: &VelocityGrid, kernel: &KernelSpec) -> LinearOperatorMatrix {
    LinearOperatorMatrix::assemble(&CollisionOperator::new(grid.clone(), kernel.clone()))
}

impl LinearOperatorMatrix {
    pub fn assemble(op: &CollisionOperator) -> Self {
        let grid = op.grid().clone();
        let nv = grid.len();
        let raw = raw_matrix(op);
        let basis = invariant_basis(&grid);

        let mut raw_kernel_residual: f64 = 0.0;
        for e in basis.column_iter() {
            let le = &raw * e;
            raw_kernel_residual = raw_kernel_residual.max(le.amax() / e.amax());
        }
        let scale = raw.amax();
        let mut asym: f64 = 0.0;
        for i in 0..nv {
            for j in (i + 1)..nv {
                asym = asym.max((raw[(i, j)] - raw[(j, i)]).abs());
            }
        }

        let mut l = DMatrix::zeros(nv, nv);
        let refl: Vec<Vec<usize>> = (0..8u8)
            .map(|m| (0..nv).map(|i| grid.reflect(i, m)).collect())
            .collect();
        l.par_column_slice_mut_compat(|b, col| {
            for (a, out) in col.iter_mut().enumerate() {
                let mut s = 0.0;
                for r in &refl {
                    let (ra, rb) = (r[a], r[b]);
                    s += raw[(ra, rb)] + raw[(rb, ra)];
                }
                *out = s / 16.0;
            }
        });
        drop(raw);

        // (I − Π) L (I − Π) with Π = E Eᵀ
        let le = &l * &basis;
        let ete = basis.transpose() * &le;
        let corr = &le * basis.transpose();
        l -= &corr;
        l -= corr.transpose();
        l += &basis * ete * basis.transpose();
        symmetrize(&mut l);

        let nu = op.nu().to_vec();
        Self {
            grid,
            nu0: op.nu0(),
            nu,
            l,
            basis,
            raw_kernel_residual,
            raw_asymmetry: asym / scale,
        }
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Orthonormal (plain dot) basis of the discrete collision invariants.
    pub fn invariant_basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `K = diag(ν) − L`.
    pub fn k_matrix(&self) -> DMatrix<f64> {
        let mut k = -self.l.clone();
        for (i, n) in self.nu.iter().enumerate() {
            k[(i, i)] += n;
        }
        k
    }

    /// `max_j ‖L_raw e_j‖∞ / ‖e_j‖∞` over the invariant basis, before
    /// symmetrization.
    pub fn raw_kernel_residual(&self) -> f64 {
        self.raw_kernel_residual
    }

    /// `max |L_raw − L_rawᵀ| / max |L_raw|`.
    pub fn raw_asymmetry(&self) -> f64 {
        self.raw_asymmetry
    }

    /// `‖L f‖∞ / ‖f‖∞` for `f = √μ, v₁√μ, v₂√μ, v₃√μ, |v|²√μ`.
    pub fn kernel_residuals(&self) -> [f64; 5] {
        let sm = self.grid.sqrt_maxwellian();
        let nodes = self.grid.nodes();
        let mut out = [0.0; 5];
        for (j, o) in out.iter_mut().enumerate() {
            let f: Vec<f64> = nodes
                .iter()
                .zip(&sm)
                .map(|(v, s)| {
                    s * match j {
                        0 => 1.0,
                        1..=3 => v[j - 1],
                        _ => v.norm_squared(),
                    }
                })
                .collect();
            let lf = self.apply(&f);
            let fmax = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            *o = lf.iter().fold(0.0f64, |m, x| m.max(x.abs())) / fmax;
        }
        out
    }

    /// `max |L − Lᵀ|`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.l.nrows();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                r = r.max((self.l[(i, j)] - self.l[(j, i)]).abs());
            }
        }
        r
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVectorView::from_slice(f, f.len());
        (&self.l * v).as_slice().to_vec()
    }

    /// Grid inner product `⟨Lf, f⟩`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        self.grid.dot(&self.apply(f), f)
    }

    /// `K h`, batched over `nx` spatial points (velocity-major layout).
    pub fn apply_k(&self, h: &[f64], nx: usize) -> Vec<f64> {
        let nv = self.nu.len();
        // velocity-major storage is the column-major layout of an nx × nv matrix
        let hm = nalgebra::DMatrixView::from_slice(h, nx, nv);
        let lh = hm * &self.l;
        let mut out = vec![0.0; nv * nx];
        for v in 0..nv {
            for x in 0..nx {
                out[v * nx + x] = self.nu[v] * h[v * nx + x] - lh[(x, v)];
            }
        }
        out
    }

    /// `K_w h = w K(h/w)`, where `w[v·nx + x] = w(x, v)`.
    pub fn apply_kw(&self, h: &[f64], w: &[f64], nx: usize) -> Vec<f64> {
        let scaled: Vec<f64> = h.iter().zip(w).map(|(a, b)| a / b).collect();
        let mut out = self.apply_k(&scaled, nx);
        for (o, b) in out.iter_mut().zip(w) {
            *o *= b;
        }
        out
    }

    /// `k_w(v, u) = K(v, u) w(v)/w(u)` for one spatial point.
    pub fn kw_matrix(&self, w: &[f64]) -> DMatrix<f64> {
        let mut k = self.k_matrix();
        let n = k.nrows();
        for u in 0..n {
            for v in 0..n {
                k[(v, u)] *= w[v] / w[u];
            }
        }
        k
    }

    /// All eigenvalues in ascending order, from the eight reflection-parity
    /// blocks of `L`.
    pub fn spectrum(&self) -> Vec<f64> {
        let n = self.grid.points_per_axis();
        let half = n / 2;
        let octant: Vec<usize> = (0..half * half * half)
            .map(|i| {
                let (a, b, c) = (i / (half * half), (i / half) % half, i % half);
                self.grid.index(a + half, b + half, c + half)
            })
            .collect();
        let m = octant.len();
        let mut eig: Vec<f64> = (0..8u8)
            .into_par_iter()
            .flat_map_iter(|sigma| {
                let block = DMatrix::from_fn(m, m, |a, b| {
                    let mut s = 0.0;
                    for mask in 0..8u8 {
                        let chi = if (sigma & mask).count_ones() % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        s += chi * self.l[(octant[a], self.grid.reflect(octant[b], mask))];
                    }
                    s
                });
                let mut block = block;
                symmetrize(&mut block);
                SymmetricEigen::new(block).eigenvalues.as_slice().to_vec()
            })
            .collect();
        eig.sort_by(|a, b| a.total_cmp(b));
        eig
    }

    /// Sixth-smallest eigenvalue (the first above the five invariants).
    pub fn spectral_gap(&self) -> f64 {
        self.spectrum()[5]
    }

    /// Fits the row sums `Σ_u |k_w(v,u)| (1+|u|)^{−α}` against `(1+|v|)` over
    /// nodes with `|v| ≤ radius`.
    pub fn kernel_decay_fit(&self, w: &[f64], alpha: f64, radius: f64) -> DecayFit {
        let k = self.kw_matrix(w);
        let nodes = self.grid.nodes();
        let mut pts = Vec::new();
        for (v, node) in nodes.iter().enumerate() {
            if node.norm() > radius {
                continue;
            }
            let s: f64 = (0..nodes.len())
                .map(|u| k[(v, u)].abs() * (1.0 + nodes[u].norm()).powf(-alpha))
                .sum();
            pts.push(((1.0 + node.norm()).ln(), s.ln()));
        }
        let (slope, intercept, r2) = linear_fit(&pts);
        DecayFit {
            exponent: -slope,
            constant: intercept.exp(),
            r_squared: r2,
        }
    }
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, r²)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (a, b, r2)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

/// Gram–Schmidt (twice) on `√μ·{1, v₁, v₂, v₃, |v|²}` under the plain dot.
fn invariant_basis(grid: &VelocityGrid) -> DMatrix<f64> {
    let sm = grid.sqrt_maxwellian();
    let nodes = grid.nodes();
    let nv = grid.len();
    let mut e = DMatrix::from_fn(nv, 5, |i, j| {
        sm[i]
            * match j {
                0 => 1.0,
                1..=3 => nodes[i][j - 1],
                _ => nodes[i].norm_squared(),
            }
    });
    for _ in 0..2 {
        for j in 0..5 {
            for k in 0..j {
                let d = e.column(j).dot(&e.column(k));
                let ck = e.column(k).clone_owned();
                e.column_mut(j).axpy(-d, &ck, 1.0);
            }
            let n = e.column(j).norm();
            e.column_mut(j).scale_mut(1.0 / n);
        }
    }
    e
}

/// Unsymmetrized strong-form matrix, assembled row by row.
fn raw_matrix(op: &CollisionOperator) -> DMatrix<f64> {
    let grid = op.grid();
    let kernel = op.kernel();
    let nv = grid.len();
    let nodes = grid.nodes();
    let mu = op.mu();
    let sm = op.sqrt_mu();
    let nu = op.nu();
    let h3 = grid.weight();
    let bn = kernel.b_norm();
    let gamma0 = kernel.gamma() == 0.0;
    let rows: Vec<Vec<f64>> = (0..nv)
        .into_par_iter()
        .map(|v| {
            let mut row = vec![0.0; nv];
            row[v] += nu[v];
            for u in 0..nv {
                let a = h3 * bn * kernel.speed_factor((nodes[v] - nodes[u]).norm());
                row[u] += sm[v] * sm[u] * a;
                if u == v {
                    if gamma0 {
                        row[v] -= 2.0 * mu[v] * a;
                    }
                    continue;
                }
                let pre = sm[u] * h3;
                kernel.for_each_collision(&nodes[v], &nodes[u], |vp, up, w| {
                    let c = pre * w;
                    for (p, q) in [(vp, up), (up, vp)] {
                        let cq = c * (-0.25 * q.norm_squared()).exp();
                        let st = grid.trilinear(&p, Extension::Zero);
                        for (j, lj) in st.entries() {
                            row[j] -= cq * lj;
                        }
                    }
                });
            }
            row
        })
        .collect();
    DMatrix::from_fn(nv, nv, |i, j| rows[i][j])
}

trait ParColumns {
    fn par_column_slice_mut_compat<F: Fn(usize, &mut [f64]) + Sync>(&mut self, f: F);
}

impl ParColumns for DMatrix<f64> {
    fn par_column_slice_mut_compat<F: Fn(usize, &mut [f64]) + Sync>(&mut self, f: F) {
        let n = self.nrows();
        self.as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, col)| f(j, col));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> LinearOperatorMatrix {
        assemble_linearized(
            &VelocityGrid::new(4.0, 8).unwrap(),
            &KernelSpec::hard_sphere().with_sphere_rule(2, 4).unwrap(),
        )
    }

    #[test]
    fn kernel_and_symmetry() {
        let l = small();
        assert!(l.raw_kernel_residual().is_finite());
        assert!(l.raw_asymmetry() < 0.05, "{}", l.raw_asymmetry());
        for r in l.kernel_residuals() {
            assert!(r < 1e-10, "{r}");
        }
        assert!(l.symmetry_residual() == 0.0);
        assert!(l.nu0() > 0.0);
    }

    #[test]
    fn parity_blocks_match_dense_eigensolve() {
        let l = small();
        let blocks = l.spectrum();
        let mut dense = SymmetricEigen::new(l.matrix().clone())
            .eigenvalues
            .as_slice()
            .to_vec();
        dense.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(blocks.len(), dense.len());
        for (a, b) in blocks.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10 * dense.last().unwrap());
        }
        for e in &dense[..5] {
            assert!(e.abs() < 1e-10);
        }
        assert!(dense[5] > 1e-3, "{}", dense[5]);
    }

    #[test]
    fn k_with_unit_weight_is_k() {
        let l = small();
        let nv = l.grid().len();
        let h: Vec<f64> = (0..nv).map(|i| (i as f64 * 0.37).sin()).collect();
        let ones = vec![1.0; nv];
        assert_eq!(l.apply_kw(&h, &ones, 1), l.apply_k(&h, 1));
        let lh = l.apply(&h);
        let kh = l.apply_k(&h, 1);
        for i in 0..nv {
            assert_relative_eq!(kh[i], l.nu()[i] * h[i] - lh[i], epsilon = 1e-12);
        }
    }
}
