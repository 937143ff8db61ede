use rand::Rng;

use super::scheme::KineticSystem;
use super::SolverError;
use crate::characteristics::stream_rng;
use crate::geometry::Vec3;

/// `F₀ = μ_E`.
pub fn equilibrium_initial(sys: &KineticSystem) -> Vec<f64> {
    sys.equilibrium().to_vec()
}

/// `F₀ = μ_E (1 + ε U)` with `U` uniform on `[−1, 1]` per node, rescaled to
/// the mass of `μ_E`.
pub fn random_initial(
    sys: &KineticSystem,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<f64>, SolverError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(SolverError::InvalidConfig(format!(
            "random amplitude must lie in [0, 1] to keep F₀ ≥ 0, got {epsilon}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let mut f: Vec<f64> = sys
        .equilibrium()
        .iter()
        .map(|m| m * (1.0 + epsilon * rng.random_range(-1.0..=1.0)))
        .collect();
    let scale = sys.transport().mass(sys.equilibrium()) / sys.transport().mass(&f);
    f.iter_mut().for_each(|x| *x *= scale);
    Ok(f)
}

/// Weighted perturbation `h₀` with `‖h₀‖∞ = amplitude`: seeded uniform noise
/// (`mode = "random"`) or the smooth mode `cos(πx₁)·v₁ e^{−|v|²/4}`
/// (`mode = "cosine"`), normalized in sup norm.
pub fn small_perturbation_initial(
    sys: &KineticSystem,
    amplitude: f64,
    mode: &str,
    seed: u64,
) -> Result<Vec<f64>, SolverError> {
    let nx = sys.nx();
    let nv = sys.nv();
    let mut h = vec![0.0; nx * nv];
    match mode {
        "random" => {
            let mut rng = stream_rng(seed, 1);
            h.iter_mut().for_each(|x| *x = rng.random_range(-1.0..=1.0));
        }
        "cosine" => {
            let xs = sys.transport().space().nodes();
            let vs = sys.collision().grid().nodes();
            for j in 0..nv {
                for i in 0..nx {
                    h[j * nx + i] = (std::f64::consts::PI * xs[i].x).cos()
                        * vs[j].x
                        * (-0.25 * vs[j].norm_squared()).exp();
                }
            }
        }
        other => {
            return Err(SolverError::InvalidConfig(format!(
                "unknown perturbation mode {other:?} (expected \"random\" or \"cosine\")"
            )))
        }
    }
    let max = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max > 0.0 {
        h.iter_mut().for_each(|x| *x *= amplitude / max);
    }
    Ok(h)
}

/// Localized bump on top of a scaled equilibrium.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpSpec {
    /// Target `‖w f₀‖∞`.
    pub amplitude: f64,
    pub center: Vec3,
    pub velocity: Vec3,
    /// Support radius in `x`; bumps narrower than the grid occupy one node.
    pub radius: f64,
}

/// `F₀ = (1 − δ) μ_E + B` with `B ≥ 0` supported on the spatial nodes within
/// `radius` of `center` (at least the nearest one) and at the velocity node
/// nearest `velocity`. `δ` makes the mass equal that of `μ_E` and `B` is
/// sized so that `max |w f₀| = amplitude`.
pub fn bump_initial(sys: &KineticSystem, spec: &BumpSpec) -> Result<Vec<f64>, SolverError> {
    if !(spec.amplitude > 0.0 && spec.radius > 0.0) {
        return Err(SolverError::InvalidConfig(
            "bump amplitude and radius must be positive".into(),
        ));
    }
    let nx = sys.nx();
    let space = sys.transport().space();
    let mut support: Vec<usize> = space
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, x)| (*x - spec.center).norm() <= spec.radius)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        support.push(space.nearest(&spec.center));
    }
    let vg = sys.collision().grid();
    let j = (0..vg.len())
        .min_by(|a, b| {
            (vg.node(*a) - spec.velocity)
                .norm()
                .total_cmp(&(vg.node(*b) - spec.velocity).norm())
        })
        .unwrap_or(0);
    let mu = sys.equilibrium();
    let sm = sys.sqrt_equilibrium();
    let w = sys.weight();
    let mass_eq = sys.transport().mass(mu);
    let wx = space.weights();
    let wv = vg.weight();
    // shape profile 1 − |x − c|/r (or 1 on a single node)
    let profile: Vec<f64> = support
        .iter()
        .map(|&i| {
            if support.len() == 1 {
                1.0
            } else {
                (1.0 - (space.nodes()[i] - spec.center).norm() / spec.radius).max(0.05)
            }
        })
        .collect();
    // with B = s·p_i·√μ_E/w at the bump nodes, w f₀ = s p_i − δ w √μ_E there;
    // fix-point in δ for max |w f₀| = amplitude
    let mut delta = 0.0;
    let mut s = spec.amplitude;
    for _ in 0..100 {
        let bump_mass: f64 = support
            .iter()
            .zip(&profile)
            .map(|(&i, p)| s * p * sm[j * nx + i] / w[j * nx + i] * wx[i] * wv)
            .sum();
        let new_delta = bump_mass / mass_eq;
        let peak = support
            .iter()
            .zip(&profile)
            .map(|(&i, p)| (i, p))
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        s = spec.amplitude + new_delta * w[j * nx + peak] * sm[j * nx + peak];
        if (new_delta - delta).abs() <= 1e-15 * new_delta.max(1e-300) {
            delta = new_delta;
            break;
        }
        delta = new_delta;
    }
    if delta >= 1.0 {
        return Err(SolverError::InvalidConfig(format!(
            "bump carries more mass than the equilibrium (δ = {delta})"
        )));
    }
    let mut f: Vec<f64> = mu.iter().map(|m| (1.0 - delta) * m).collect();
    for (&i, p) in support.iter().zip(&profile) {
        let k = j * nx + i;
        f[k] += s * p * sm[k] / w[k];
    }
    Ok(f)
}
