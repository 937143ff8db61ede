use super::grid::VelocityGrid;
use crate::geometry::Vec3;

/// Hydrodynamic coefficients `(a, b, c)` of `P_L f` at a fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentTriple {
    pub a: f64,
    pub b: Vec3,
    pub c: f64,
}

/// Which basis `P_L` uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProjectionConvention {
    /// `√μ̄·{1, v, (|v|²−3)/√6}` with `μ̄ = (2π)^{−3/2}μ`, orthonormalized on
    /// the grid.
    #[default]
    Orthonormal,
    /// The unnormalized `√μ` formulas; not idempotent.
    Literal,
}

/// Five basis functions of `P_L` on a grid.
#[derive(Clone, Debug)]
pub struct HydroBasis {
    convention: ProjectionConvention,
    weight: f64,
    e: [Vec<f64>; 5],
}

impl HydroBasis {
    pub fn new(grid: &VelocityGrid, convention: ProjectionConvention) -> Self {
        let norm = match convention {
            ProjectionConvention::Orthonormal => (2.0 * std::f64::consts::PI).powf(-0.75),
            ProjectionConvention::Literal => 1.0,
        };
        let sm = grid.sqrt_maxwellian();
        let nodes = grid.nodes();
        let make = |j: usize| -> Vec<f64> {
            nodes
                .iter()
                .zip(&sm)
                .map(|(v, s)| {
                    norm * s
                        * match j {
                            0 => 1.0,
                            1..=3 => v[j - 1],
                            _ => (v.norm_squared() - 3.0) / 6f64.sqrt(),
                        }
                })
                .collect()
        };
        let mut e = [make(0), make(1), make(2), make(3), make(4)];
        if convention == ProjectionConvention::Orthonormal {
            for _ in 0..2 {
                for j in 0..5 {
                    for k in 0..j {
                        let d = grid.dot(&e[j], &e[k]);
                        let (head, tail) = e.split_at_mut(j);
                        for (x, y) in tail[0].iter_mut().zip(&head[k]) {
                            *x -= d * y;
                        }
                    }
                    let n = grid.dot(&e[j], &e[j]).sqrt();
                    e[j].iter_mut().for_each(|x| *x /= n);
                }
            }
        }
        Self {
            convention,
            weight: grid.weight(),
            e,
        }
    }

    pub fn convention(&self) -> ProjectionConvention {
        self.convention
    }

    pub fn element(&self, j: usize) -> &[f64] {
        &self.e[j]
    }

    fn coeff(&self, j: usize, f: &[f64]) -> f64 {
        self.e[j].iter().zip(f).map(|(a, b)| a * b).sum::<f64>() * self.weight
    }

    pub fn moments(&self, f: &[f64]) -> MomentTriple {
        MomentTriple {
            a: self.coeff(0, f),
            b: Vec3::new(self.coeff(1, f), self.coeff(2, f), self.coeff(3, f)),
            c: self.coeff(4, f),
        }
    }

    pub fn reconstruct(&self, m: &MomentTriple) -> Vec<f64> {
        let c = [m.a, m.b.x, m.b.y, m.b.z, m.c];
        (0..self.e[0].len())
            .map(|i| (0..5).map(|j| c[j] * self.e[j][i]).sum())
            .collect()
    }

    pub fn project(&self, f: &[f64]) -> (MomentTriple, Vec<f64>) {
        let m = self.moments(f);
        let p = self.reconstruct(&m);
        (m, p)
    }
}

/// `P_L f` with the default orthonormal basis.
pub fn project_pl(grid: &VelocityGrid, f: &[f64]) -> (MomentTriple, Vec<f64>) {
    HydroBasis::new(grid, ProjectionConvention::Orthonormal).project(f)
}

/// `P_γ f(v) = c μ^{1/2}(v) Σ_{n·v′>0} f(v′) μ^{1/2}(v′)(n·v′) w` with `c`
/// the discrete normalizer `1/Σ_{n·v′>0} μ(v′)(n·v′) w`, evaluated at all
/// nodes.
pub fn project_pgamma(grid: &VelocityGrid, f: &[f64], n: &Vec3) -> Vec<f64> {
    let sm = grid.sqrt_maxwellian();
    let mut flux = 0.0;
    let mut norm = 0.0;
    for ((v, s), fv) in grid.nodes().iter().zip(&sm).zip(f) {
        let vn = n.dot(v);
        if vn > 0.0 {
            flux += fv * s * vn;
            norm += s * s * vn;
        }
    }
    let c = flux / norm;
    sm.iter().map(|s| c * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::moments::gaussian_moment;
    use approx::assert_relative_eq;

    fn grid() -> VelocityGrid {
        VelocityGrid::new(8.0, 24).unwrap()
    }

    fn norm2(g: &VelocityGrid, f: &[f64]) -> f64 {
        g.dot(f, f)
    }

    #[test]
    fn basis_element_projects_to_itself() {
        let g = grid();
        let b = HydroBasis::new(&g, ProjectionConvention::Orthonormal);
        let (m, p) = b.project(b.element(0));
        assert_relative_eq!(m.a, 1.0, epsilon = 1e-12);
        assert!(m.b.norm() < 1e-12 && m.c.abs() < 1e-12);
        for (x, y) in p.iter().zip(b.element(0)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn idempotent_and_pythagorean() {
        let g = grid();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|v| {
                (0.3 * v.x).sin() * (-0.2 * v.norm_squared()).exp()
                    + 0.1 * (-0.5 * (v - Vec3::new(1.0, 0.0, -1.0)).norm_squared()).exp()
            })
            .collect();
        let (_, p) = project_pl(&g, &f);
        let (_, pp) = project_pl(&g, &p);
        let d: f64 = p
            .iter()
            .zip(&pp)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(d <= 1e-10);
        let r: Vec<f64> = f.iter().zip(&p).map(|(a, b)| a - b).collect();
        assert_relative_eq!(
            norm2(&g, &f),
            norm2(&g, &p) + norm2(&g, &r),
            max_relative = 1e-10
        );
    }

    #[test]
    fn orthogonal_function_vanishes() {
        let g = grid();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|v| v.x * v.y * (-0.25 * v.norm_squared()).exp())
            .collect();
        // odd in v₁: every coefficient integrates an odd Gaussian moment
        assert_eq!(gaussian_moment([1, 1, 0], 0), 0.0);
        let (m, p) = project_pl(&g, &f);
        assert!(m.a.abs() < 1e-12 && m.b.norm() < 1e-12 && m.c.abs() < 1e-12);
        assert!(p.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn literal_convention_is_off_by_gaussian_mass() {
        let g = grid();
        let lit = HydroBasis::new(&g, ProjectionConvention::Literal);
        let sm = g.sqrt_maxwellian();
        let (m, _) = lit.project(&sm);
        assert_relative_eq!(
            m.a,
            (2.0 * std::f64::consts::PI).powf(1.5),
            max_relative = 1e-8
        );
    }

    #[test]
    fn pgamma_properties() {
        let g = grid();
        let n = Vec3::new(0.0, 0.6, 0.8);
        let sm = g.sqrt_maxwellian();
        let p = project_pgamma(&g, &sm, &n);
        for (a, b) in p.iter().zip(&sm) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        // odd in the tangential direction t = (1, 0, 0)
        let odd: Vec<f64> = g.nodes().iter().zip(&sm).map(|(v, s)| v.x * s).collect();
        assert!(project_pgamma(&g, &odd, &n).iter().all(|x| x.abs() < 1e-12));
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .zip(&sm)
            .map(|(v, s)| s * (1.0 + 0.3 * v.y + 0.1 * v.norm_squared()))
            .collect();
        let pf = project_pgamma(&g, &f, &n);
        let ppf = project_pgamma(&g, &pf, &n);
        let mut inner = 0.0;
        let mut scale = 0.0;
        for (i, v) in g.nodes().iter().enumerate() {
            let vn = n.dot(v);
            if vn > 0.0 {
                inner += (f[i] - pf[i]) * pf[i] * vn;
                scale += f[i].abs() * pf[i].abs() * vn;
            }
            assert_relative_eq!(ppf[i], pf[i], max_relative = 1e-12, epsilon = 1e-300);
        }
        assert!(inner.abs() <= 1e-12 * scale);
    }
}
