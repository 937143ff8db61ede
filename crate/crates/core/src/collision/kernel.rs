use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;

use super::CollisionError;
use crate::characteristics::tangent_frame;
use crate::geometry::Vec3;

/// Angular factor `b(cos θ)` of the collision kernel.
#[derive(Clone)]
pub enum AngularKernel {
    /// `b(c) = scale·|c|`.
    AbsCos { scale: f64 },
    Custom {
        name: String,
        b: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        c_b: f64,
    },
}

impl fmt::Debug for AngularKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AbsCos { scale } => f.debug_struct("AbsCos").field("scale", scale).finish(),
            Self::Custom { name, c_b, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("c_b", c_b)
                .finish(),
        }
    }
}

impl AngularKernel {
    #[inline]
    pub fn eval(&self, c: f64) -> f64 {
        match self {
            Self::AbsCos { scale } => scale * c.abs(),
            Self::Custom { b, .. } => b(c),
        }
    }

    pub fn bound_constant(&self) -> f64 {
        match self {
            Self::AbsCos { scale } => *scale,
            Self::Custom { c_b, .. } => *c_b,
        }
    }
}

/// `B(v − u, ω) = |v − u|^γ b(cos θ)` with a product rule on the sphere.
///
/// The sphere rule is aligned with `ĝ = (v − u)/|v − u|`: Gauss–Legendre in
/// `cos θ ∈ (0, 1)` times a uniform midpoint rule in azimuth. Since the
/// post-collision pair is even in `ω`, `ω` and `−ω` share one node with weight
/// `b(c) + b(−c)`.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    gamma: f64,
    angular: AngularKernel,
    polar: Vec<(f64, f64)>,
    azimuth: Vec<(f64, f64)>,
    folded: Vec<f64>,
    b_norm: f64,
}

pub const DEFAULT_POLAR_NODES: usize = 2;
pub const DEFAULT_AZIMUTH_NODES: usize = 6;

impl KernelSpec {
    pub fn new(
        gamma: f64,
        angular: AngularKernel,
        polar_nodes: usize,
        azimuth_nodes: usize,
    ) -> Result<Self, CollisionError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(CollisionError::InvalidKernel(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        if polar_nodes == 0 || azimuth_nodes < 2 || !azimuth_nodes.is_multiple_of(2) {
            return Err(CollisionError::InvalidKernel(format!(
                "sphere rule needs ≥1 polar and an even number ≥2 of azimuth nodes, got {polar_nodes}×{azimuth_nodes}"
            )));
        }
        let c_b = angular.bound_constant();
        for i in 0..=200 {
            let c = -1.0 + i as f64 / 100.0;
            let b = angular.eval(c);
            if !(b >= 0.0 && b <= c_b * c.abs() * (1.0 + 1e-12) + 1e-300) {
                return Err(CollisionError::InvalidKernel(format!(
                    "b({c}) = {b} violates 0 ≤ b ≤ C_b|c| with C_b = {c_b}"
                )));
            }
        }
        let gl = GaussLegendre::new(NonZeroUsize::new(polar_nodes).unwrap());
        let polar: Vec<(f64, f64)> = gl.iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        let dphi = 2.0 * PI / azimuth_nodes as f64;
        let azimuth: Vec<(f64, f64)> = (0..azimuth_nodes)
            .map(|l| {
                let phi = (l as f64 + 0.5) * dphi;
                (phi.cos(), phi.sin())
            })
            .collect();
        let folded: Vec<f64> = polar
            .iter()
            .map(|&(c, w)| (angular.eval(c) + angular.eval(-c)) * w * dphi)
            .collect();
        let b_norm = folded.iter().sum::<f64>() * azimuth_nodes as f64;
        Ok(Self {
            gamma,
            angular,
            polar,
            azimuth,
            folded,
            b_norm,
        })
    }

    /// Hard spheres: `γ = 1`, `b = |cos θ|/(4π)`.
    pub fn hard_sphere() -> Self {
        Self::new(
            1.0,
            AngularKernel::AbsCos {
                scale: 1.0 / (4.0 * PI),
            },
            DEFAULT_POLAR_NODES,
            DEFAULT_AZIMUTH_NODES,
        )
        .expect("default kernel is valid")
    }

    pub fn with_sphere_rule(&self, polar: usize, azimuth: usize) -> Result<Self, CollisionError> {
        Self::new(self.gamma, self.angular.clone(), polar, azimuth)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn angular(&self) -> &AngularKernel {
        &self.angular
    }

    pub fn sphere_rule(&self) -> (usize, usize) {
        (self.polar.len(), self.azimuth.len())
    }

    /// `∫_{S²} b(ω·ĝ) dω` as integrated by the sphere rule.
    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    #[inline]
    pub fn speed_factor(&self, g: f64) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else if self.gamma == 1.0 {
            g
        } else {
            g.powf(self.gamma)
        }
    }

    /// Number of folded directions per pair.
    pub fn directions(&self) -> usize {
        self.polar.len() * self.azimuth.len()
    }

    /// Calls `f(v′, u′, weight)` for each folded direction of the pair
    /// `(v, u)`, where `weight` includes `|v − u|^γ` and the angular weight.
    /// The pair `(u, v)` produces the same set of post-collision pairs.
    #[inline]
    pub fn for_each_collision<F: FnMut(Vec3, Vec3, f64)>(&self, v: &Vec3, u: &Vec3, mut f: F) {
        let g = v - u;
        let gn = g.norm();
        if gn == 0.0 {
            return;
        }
        let gh = g / gn;
        let (e1, e2) = tangent_frame(&gh);
        let bg = self.speed_factor(gn);
        for (&(c, _), &fw) in self.polar.iter().zip(&self.folded) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let w = bg * fw;
            for &(cp, sp) in &self.azimuth {
                let omega = gh * c + (e1 * cp + e2 * sp) * s;
                let gw = gn * c;
                f(v - omega * gw, u + omega * gw, w);
            }
        }
    }
}
