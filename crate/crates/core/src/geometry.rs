//! Bounded level-set domains `Ω = {ξ < 0}`, outward normals, boundary
//! classification and segment/boundary crossing detection.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Below this gradient magnitude the normal is considered undefined.
pub const GRADIENT_FLOOR: f64 = 1e-14;
/// Default half-width of the band around `ξ = 0` treated as boundary.
pub const DEFAULT_BAND_TOL: f64 = 1e-9;
/// Default threshold on `n·v` below which a velocity is grazing.
pub const DEFAULT_GRAZING_TOL: f64 = 1e-8;
/// Target `|ξ|` for refined crossings.
pub const CROSSING_TOL: f64 = 1e-12;
pub const CROSSING_MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate level-set gradient |∇ξ| = {magnitude:e} at {position:?}")]
    DegenerateGradient { position: [f64; 3], magnitude: f64 },
    #[error(
        "boundary crossing not refined after {iterations} bisection steps (|ξ| = {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}

type LevelFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    Ball { radius: f64 },
    Ellipsoid { radii: [f64; 3] },
    Custom { name: String },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub band: f64,
    pub grazing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            band: DEFAULT_BAND_TOL,
            grazing: DEFAULT_GRAZING_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryClass {
    Outgoing,
    Grazing,
    Incoming,
}

/// A bounded domain given by a smooth level function. Immutable once built.
#[derive(Clone)]
pub struct LevelSetDomain {
    kind: DomainKind,
    level: LevelFn,
    gradient: GradFn,
    bounding_radius: f64,
    tol: Tolerances,
}

impl fmt::Debug for LevelSetDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSetDomain")
            .field("kind", &self.kind)
            .field("bounding_radius", &self.bounding_radius)
            .field("tol", &self.tol)
            .finish()
    }
}

impl LevelSetDomain {
    /// Unit ball, `ξ(x) = |x|² − 1`.
    pub fn unit_ball() -> Self {
        Self::ball(1.0).expect("unit radius is valid")
    }

    /// Ball of the given radius, `ξ(x) = |x|²/r² − 1`.
    pub fn ball(radius: f64) -> Result<Self, GeometryError> {
        Self::ellipsoid([radius; 3]).map(|mut d| {
            d.kind = DomainKind::Ball { radius };
            d
        })
    }

    /// Axis-aligned ellipsoid `ξ(x) = Σ x_i²/a_i² − 1`.
    pub fn ellipsoid(radii: [f64; 3]) -> Result<Self, GeometryError> {
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(GeometryError::InvalidDomain(format!(
                "radii must be positive and finite, got {radii:?}"
            )));
        }
        let inv2 = Vec3::new(
            1.0 / (radii[0] * radii[0]),
            1.0 / (radii[1] * radii[1]),
            1.0 / (radii[2] * radii[2]),
        );
        let level: LevelFn = Arc::new(move |x: &Vec3| x.component_mul(x).dot(&inv2) - 1.0);
        let gradient: GradFn = Arc::new(move |x: &Vec3| 2.0 * x.component_mul(&inv2));
        let bounding_radius = radii.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            kind: DomainKind::Ellipsoid { radii },
            level,
            gradient,
            bounding_radius,
            tol: Tolerances::default(),
        })
    }

    /// User-supplied smooth level set. The caller guarantees `{ξ < 0}` is
    /// nonempty and contained in the ball of `bounding_radius`.
    pub fn custom<L, G>(
        name: impl Into<String>,
        level: L,
        gradient: G,
        bounding_radius: f64,
    ) -> Result<Self, GeometryError>
    where
        L: Fn(&Vec3) -> f64 + Send + Sync + 'static,
        G: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
    {
        if !(bounding_radius.is_finite() && bounding_radius > 0.0) {
            return Err(GeometryError::InvalidDomain(
                "bounding radius must be positive".into(),
            ));
        }
        Ok(Self {
            kind: DomainKind::Custom { name: name.into() },
            level: Arc::new(level),
            gradient: Arc::new(gradient),
            bounding_radius,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    #[inline]
    pub fn level(&self, x: &Vec3) -> f64 {
        (self.level)(x)
    }

    #[inline]
    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        (self.gradient)(x)
    }

    #[inline]
    pub fn contains(&self, x: &Vec3) -> bool {
        self.level(x) < 0.0
    }

    /// `Ω̄` membership up to the band tolerance.
    #[inline]
    pub fn contains_closure(&self, x: &Vec3) -> bool {
        self.level(x) <= self.tol.band
    }

    /// Semi-axes for the built-in quadric domains.
    pub fn quadric_radii(&self) -> Option<[f64; 3]> {
        match self.kind {
            DomainKind::Ball { radius } => Some([radius; 3]),
            DomainKind::Ellipsoid { radii } => Some(radii),
            DomainKind::Custom { .. } => None,
        }
    }

    /// Smallest `s > 0` with `x + s·d` on the boundary of a quadric domain,
    /// for `x` in the closure. `None` for custom domains or `d = 0`.
    pub fn quadric_exit(&self, x: &Vec3, d: &Vec3) -> Option<f64> {
        let r = self.quadric_radii()?;
        let inv = Vec3::new(1.0 / r[0], 1.0 / r[1], 1.0 / r[2]);
        let xs = x.component_mul(&inv);
        let ds = d.component_mul(&inv);
        let a = ds.norm_squared();
        if a == 0.0 {
            return None;
        }
        let b = xs.dot(&ds);
        let c = xs.norm_squared() - 1.0;
        let disc = (b * b - a * c).max(0.0);
        // stable root of a s² + 2b s + c = 0
        let s = if b >= 0.0 {
            -c / (b + disc.sqrt())
        } else {
            (-b + disc.sqrt()) / a
        };
        Some(s.max(0.0))
    }

    pub fn on_boundary(&self, x: &Vec3) -> bool {
        self.level(x).abs() <= self.tol.band
    }

    /// Time for a unit-speed particle to cross the bounding ball.
    pub fn crossing_time(&self) -> f64 {
        2.0 * self.bounding_radius
    }

    pub fn outward_normal(&self, x: &Vec3) -> Result<Vec3, GeometryError> {
        let g = self.gradient(x);
        let m = g.norm();
        if !(m > GRADIENT_FLOOR) {
            return Err(GeometryError::DegenerateGradient {
                position: [x[0], x[1], x[2]],
                magnitude: m,
            });
        }
        Ok(g / m)
    }

    pub fn classify_boundary(
        &self,
        x: &Vec3,
        v: &Vec3,
        tol: f64,
    ) -> Result<BoundaryClass, GeometryError> {
        let nv = self.outward_normal(x)?.dot(v);
        Ok(if nv > tol {
            BoundaryClass::Outgoing
        } else if nv < -tol {
            BoundaryClass::Incoming
        } else {
            BoundaryClass::Grazing
        })
    }

    /// Locate where `ξ` changes sign on the straight segment `a → b`.
    ///
    /// Returns the segment parameter of the crossing (refined by bisection
    /// until `|ξ| ≤ 1e-12`), or `None` when both endpoints lie on the same
    /// side of the boundary.
    pub fn ray_boundary_crossing(&self, a: &Vec3, b: &Vec3) -> Result<Option<f64>, GeometryError> {
        self.crossing_along(|s| a + (b - a) * s)
    }

    /// Same as [`ray_boundary_crossing`](Self::ray_boundary_crossing) for an
    /// arbitrary continuous path `s ∈ [0,1] → x(s)`.
    pub fn crossing_along<P>(&self, path: P) -> Result<Option<f64>, GeometryError>
    where
        P: Fn(f64) -> Vec3,
    {
        let fa = self.level(&path(0.0));
        let fb = self.level(&path(1.0));
        if fa == 0.0 {
            return Ok(Some(0.0));
        }
        if fb == 0.0 {
            return Ok(Some(1.0));
        }
        if fa.signum() == fb.signum() {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let lo_sign = fa.signum();
        let mut residual = f64::INFINITY;
        for _ in 0..CROSSING_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            let fm = self.level(&path(mid));
            residual = fm.abs();
            if residual <= CROSSING_TOL {
                return Ok(Some(mid));
            }
            if fm.signum() == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * 0.5 {
                break;
            }
        }
        Err(GeometryError::NoConvergence {
            iterations: CROSSING_MAX_ITER,
            residual,
        })
    }

    /// Newton projection of a nearby point onto `ξ = 0` along `∇ξ`.
    pub fn project_to_boundary(&self, x: &Vec3) -> Result<Vec3, GeometryError> {
        let mut p = *x;
        for _ in 0..100 {
            let f = self.level(&p);
            if f.abs() <= CROSSING_TOL {
                return Ok(p);
            }
            let g = self.gradient(&p);
            let g2 = g.norm_squared();
            if g2 <= GRADIENT_FLOOR * GRADIENT_FLOOR {
                return Err(GeometryError::DegenerateGradient {
                    position: [p[0], p[1], p[2]],
                    magnitude: g2.sqrt(),
                });
            }
            p -= g * (f / g2);
        }
        Err(GeometryError::NoConvergence {
            iterations: 100,
            residual: self.level(&p).abs(),
        })
    }
}
