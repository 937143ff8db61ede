//! External potential, Maxwellians, polynomial weights and the Hamiltonian.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;
use thiserror::Error;

use crate::geometry::{LevelSetDomain, Vec3};

/// Samples per axis used to estimate `‖Φ‖∞` and `min Φ` over `Ω̄`.
pub const SUP_SAMPLES_PER_AXIS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("beta must exceed 5 (got {0})")]
    BetaTooSmall(f64),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
}

type ScalarFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&Vec3) -> Matrix3<f64> + Send + Sync>;

#[derive(Clone)]
pub enum PotentialKind {
    Zero,
    /// `κ|x − c|²/2`.
    Harmonic {
        kappa: f64,
        center: Vec3,
    },
    /// `A·exp(−|x − x₀|²/σ²)`.
    Gaussian {
        amplitude: f64,
        center: Vec3,
        width: f64,
    },
    Custom {
        name: String,
        phi: ScalarFn,
        grad: VectorFn,
        hessian: MatrixFn,
    },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Harmonic { kappa, center } => f
                .debug_struct("Harmonic")
                .field("kappa", kappa)
                .field("center", center)
                .finish(),
            Self::Gaussian {
                amplitude,
                center,
                width,
            } => f
                .debug_struct("Gaussian")
                .field("amplitude", amplitude)
                .field("center", center)
                .field("width", width)
                .finish(),
            Self::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

/// Time-independent potential `Φ`, shifted so that `Φ ≥ 0` on `Ω̄`.
#[derive(Clone, Debug)]
pub struct PotentialField {
    kind: PotentialKind,
    shift: f64,
    sup_norm: f64,
}

impl PotentialField {
    pub fn zero() -> Self {
        Self {
            kind: PotentialKind::Zero,
            shift: 0.0,
            sup_norm: 0.0,
        }
    }

    /// Builds the potential and caches `‖Φ‖∞` by dense sampling of `Ω̄`.
    pub fn new(kind: PotentialKind, domain: &LevelSetDomain) -> Result<Self, FieldError> {
        match &kind {
            PotentialKind::Harmonic { kappa, .. } if !(kappa.is_finite() && *kappa >= 0.0) => {
                return Err(FieldError::InvalidPotential(format!(
                    "kappa must be nonnegative, got {kappa}"
                )))
            }
            PotentialKind::Gaussian {
                width, amplitude, ..
            } if !(width.is_finite() && *width > 0.0 && amplitude.is_finite()) => {
                return Err(FieldError::InvalidPotential(
                    "gaussian width must be positive".into(),
                ))
            }
            _ => {}
        }
        let mut field = Self {
            kind,
            shift: 0.0,
            sup_norm: 0.0,
        };
        if matches!(field.kind, PotentialKind::Zero) {
            return Ok(field);
        }
        let (min, max) = field.sample_range(domain);
        field.shift = if min < 0.0 { -min } else { 0.0 };
        field.sup_norm = max + field.shift;
        Ok(field)
    }

    pub fn harmonic(kappa: f64, domain: &LevelSetDomain) -> Result<Self, FieldError> {
        Self::new(
            PotentialKind::Harmonic {
                kappa,
                center: Vec3::zeros(),
            },
            domain,
        )
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Cached `‖Φ‖∞` over `Ω̄`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    fn raw_phi(&self, x: &Vec3) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Harmonic { kappa, center } => 0.5 * kappa * (x - center).norm_squared(),
            PotentialKind::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude * (-(x - center).norm_squared() / (width * width)).exp(),
            PotentialKind::Custom { phi, .. } => phi(x),
        }
    }

    #[inline]
    pub fn phi(&self, x: &Vec3) -> f64 {
        self.raw_phi(x) + self.shift
    }

    pub fn grad(&self, x: &Vec3) -> Vec3 {
        match &self.kind {
            PotentialKind::Zero => Vec3::zeros(),
            PotentialKind::Harmonic { kappa, center } => (x - center) * *kappa,
            PotentialKind::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let d = x - center;
                let s2 = width * width;
                d * (-2.0 * amplitude / s2 * (-d.norm_squared() / s2).exp())
            }
            PotentialKind::Custom { grad, .. } => grad(x),
        }
    }

    pub fn hessian(&self, x: &Vec3) -> Matrix3<f64> {
        match &self.kind {
            PotentialKind::Zero => Matrix3::zeros(),
            PotentialKind::Harmonic { kappa, .. } => Matrix3::identity() * *kappa,
            PotentialKind::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let d = x - center;
                let s2 = width * width;
                let e = amplitude * (-d.norm_squared() / s2).exp();
                (d * d.transpose() * (4.0 / (s2 * s2)) - Matrix3::identity() * (2.0 / s2)) * e
            }
            PotentialKind::Custom { hessian, .. } => hessian(x),
        }
    }

    fn sample_range(&self, domain: &LevelSetDomain) -> (f64, f64) {
        let r = domain.bounding_radius();
        let n = SUP_SAMPLES_PER_AXIS;
        let h = 2.0 * r / (n - 1) as f64;
        let (mut lo, mut hi) = (
            (f64::INFINITY, Vec3::zeros()),
            (f64::NEG_INFINITY, Vec3::zeros()),
        );
        let mut probe = |x: Vec3| {
            let p = self.raw_phi(&x);
            if p < lo.0 {
                lo = (p, x);
            }
            if p > hi.0 {
                hi = (p, x);
            }
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = Vec3::new(-r + i as f64 * h, -r + j as f64 * h, -r + k as f64 * h);
                    let xi = domain.level(&x);
                    if xi <= 0.0 {
                        probe(x);
                    } else if xi < 4.0 * h {
                        // near-wall samples projected onto ∂Ω so the closure is covered
                        if let Ok(p) = domain.project_to_boundary(&x) {
                            probe(p);
                        }
                    }
                }
            }
        }
        if !lo.0.is_finite() {
            return (0.0, 0.0);
        }
        let min = -self.polish(domain, lo.1, lo.0, -1.0, h);
        let max = self.polish(domain, hi.1, hi.0, 1.0, h);
        (min, max)
    }

    /// Step-halving gradient ascent of `sign·Φ` from a sample, kept in `Ω̄`.
    fn polish(&self, domain: &LevelSetDomain, mut x: Vec3, value: f64, sign: f64, h: f64) -> f64 {
        let mut best = sign * value;
        let mut step = h;
        for _ in 0..400 {
            let g = self.grad(&x) * sign;
            let gn = g.norm();
            if gn < 1e-14 {
                break;
            }
            let mut cand = x + g * (step / gn);
            if !domain.contains_closure(&cand) {
                cand = match domain.project_to_boundary(&cand) {
                    Ok(p) => p,
                    Err(_) => break,
                };
            }
            let p = sign * self.raw_phi(&cand);
            if p > best {
                best = p;
                x = cand;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best
    }
}

/// Exponent of the polynomial weight `w = {1 + |v|²/2 + Φ}^{β/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSpec {
    beta: f64,
}

impl WeightSpec {
    pub fn new(beta: f64) -> Result<Self, FieldError> {
        if beta.is_finite() && beta > 5.0 {
            Ok(Self { beta })
        } else {
            Err(FieldError::BetaTooSmall(beta))
        }
    }

    /// `w ≡ 1`; only for operator checks where the weight must cancel.
    pub fn unit() -> Self {
        Self { beta: 0.0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `μ(v) = e^{−|v|²/2}` (unnormalized).
#[inline]
pub fn global_maxwellian(v: &Vec3) -> f64 {
    (-0.5 * v.norm_squared()).exp()
}

#[inline]
pub fn local_maxwellian(pot: &PotentialField, x: &Vec3, v: &Vec3) -> f64 {
    (-pot.phi(x)).exp() * global_maxwellian(v)
}

#[inline]
pub fn weight_from_energy(spec: &WeightSpec, energy: f64) -> f64 {
    if spec.beta == 0.0 {
        1.0
    } else {
        (1.0 + energy).powf(0.5 * spec.beta)
    }
}

pub fn weight_w(spec: &WeightSpec, pot: &PotentialField, x: &Vec3, v: &Vec3) -> f64 {
    weight_from_energy(spec, hamiltonian(pot, x, v))
}

/// `w̃ = 1/(w μ_E^{1/2})`.
pub fn weight_tilde(spec: &WeightSpec, pot: &PotentialField, x: &Vec3, v: &Vec3) -> f64 {
    1.0 / (weight_w(spec, pot, x, v) * local_maxwellian(pot, x, v).sqrt())
}

#[inline]
pub fn hamiltonian(pot: &PotentialField, x: &Vec3, v: &Vec3) -> f64 {
    0.5 * v.norm_squared() + pot.phi(x)
}
