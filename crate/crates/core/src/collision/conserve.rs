//! Moment matching by exponential tilting: find `λ ∈ ℝ⁵` with
//! `Σ_i a_i e^{λ·φ_i} φ_i = m`, `φ = (1, v, |v|²)`. The tilt keeps `a ≥ 0`
//! nonnegative and is the identity when the moments already match.

use nalgebra::{Matrix5, Vector5};

use super::CollisionError;
use crate::geometry::Vec3;

/// Invariants scaled by the velocity cutoff for conditioning.
#[inline]
pub fn invariants(v: &Vec3, scale: f64) -> Vector5<f64> {
    let s = 1.0 / scale;
    Vector5::new(1.0, v.x * s, v.y * s, v.z * s, v.norm_squared() * s * s)
}

#[derive(Clone, Copy, Debug)]
pub struct TiltResult {
    pub lambda: Vector5<f64>,
    pub iterations: usize,
    pub residual: f64,
}

const MAX_NEWTON: usize = 100;

/// Solves for the tilt by damped Newton on the convex dual
/// `G(λ) = Σ a_i e^{λ·φ_i} − λ·m`.
pub fn solve_tilt(
    a: &[f64],
    phi: &[Vector5<f64>],
    target: &Vector5<f64>,
) -> Result<TiltResult, CollisionError> {
    let scale: f64 = a
        .iter()
        .zip(phi)
        .map(|(ai, p)| ai.abs() * p.abs().max())
        .sum::<f64>()
        .max(target.abs().max());
    if scale == 0.0 {
        return Ok(TiltResult {
            lambda: Vector5::zeros(),
            iterations: 0,
            residual: 0.0,
        });
    }
    let tol = 1e-15 * scale;
    let eval = |lam: &Vector5<f64>| -> (f64, Vector5<f64>, Matrix5<f64>) {
        let mut g = -lam.dot(target);
        let mut grad = -target;
        let mut hess = Matrix5::zeros();
        for (ai, p) in a.iter().zip(phi) {
            if *ai == 0.0 {
                continue;
            }
            let e = ai * lam.dot(p).exp();
            g += e;
            grad += p * e;
            hess += p * p.transpose() * e;
        }
        (g, grad, hess)
    };
    let mut lam = Vector5::zeros();
    let (mut g, mut grad, mut hess) = eval(&lam);
    for it in 0..MAX_NEWTON {
        let res = grad.abs().max();
        if res <= tol {
            return Ok(TiltResult {
                lambda: lam,
                iterations: it,
                residual: res,
            });
        }
        let step = hess
            .cholesky()
            .map(|c| c.solve(&(-grad)))
            .ok_or_else(|| CollisionError::Tilt("singular moment matrix".into()))?;
        let mut t = 1.0;
        loop {
            let cand = lam + step * t;
            let (gc, gradc, hessc) = eval(&cand);
            // near the optimum G is flat to round-off, so a decrease of the
            // gradient norm is accepted as well
            let armijo = gc <= g + 1e-4 * t * grad.dot(&step);
            let flat = gradc.norm() <= (1.0 - 1e-4 * t) * grad.norm();
            if gc.is_finite() && (armijo || flat) {
                lam = cand;
                g = gc;
                grad = gradc;
                hess = hessc;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                let res = grad.abs().max();
                // accept round-off stagnation once the residual is tiny
                if res <= 1e-12 * scale {
                    return Ok(TiltResult {
                        lambda: lam,
                        iterations: it,
                        residual: res,
                    });
                }
                return Err(CollisionError::Tilt(format!(
                    "line search stalled with residual {res:e}"
                )));
            }
        }
    }
    let res = grad.abs().max();
    if res <= 1e-12 * scale {
        Ok(TiltResult {
            lambda: lam,
            iterations: MAX_NEWTON,
            residual: res,
        })
    } else {
        Err(CollisionError::Tilt(format!(
            "no convergence after {MAX_NEWTON} Newton steps (residual {res:e})"
        )))
    }
}
