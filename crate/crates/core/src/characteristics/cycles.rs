use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLaguerre};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{backward_exit, CharError, ExitOptions, PhasePoint};
use crate::fields::PotentialField;
use crate::geometry::{LevelSetDomain, Vec3};

/// Independent stream `task` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}

/// Orthonormal `(t1, t2)` completing the unit vector `n`.
pub(crate) fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let a = n.abs();
    let axis = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = (axis - n * n.dot(&axis)).normalize();
    (t1, n.cross(&t1))
}

/// Draws `v` with density `c_μ μ(v)(n·v)` on `{n·v > 0}`.
pub fn sample_diffuse_velocity<R: Rng + ?Sized>(rng: &mut R, n: &Vec3) -> Vec3 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.random();
    let normal = (-2.0 * (1.0 - u).ln()).sqrt();
    let (t1, t2) = tangent_frame(n);
    // u = 0 is drawn with probability 2^-53; keep n·v > 0 strictly
    let normal = if normal > 0.0 {
        normal
    } else {
        f64::MIN_POSITIVE.sqrt()
    };
    n * normal + t1 * a + t2 * b
}

/// `c_μ = (∫_{n·v>0} μ(v)(n·v) dv)^{-1}` by Gauss–Laguerre in `|v_n|²/2` and
/// Gauss–Hermite in the tangential components.
pub fn c_mu_quadrature(order: usize) -> f64 {
    let order = NonZeroUsize::new(order.max(1)).unwrap();
    let lag = GaussLaguerre::new(order, 0.0.try_into().unwrap());
    // ∫_0^∞ u e^{-u²/2} du = ∫_0^∞ e^{-r} dr
    let normal = lag.integrate(|_| 1.0);
    let herm = GaussHermite::new(order);
    // ∫ e^{-t²/2} dt = √2 ∫ e^{-s²} ds
    let tangential = 2f64.sqrt() * herm.integrate(|_| 1.0);
    1.0 / (normal * tangential * tangential)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleRecord {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleTerminal {
    ReachedInitialTime,
    Truncated,
}

/// Boundary interactions of one backward history, newest first.
#[derive(Clone, Debug, PartialEq)]
pub struct BackTimeCycle {
    pub records: Vec<CycleRecord>,
    pub terminal: CycleTerminal,
}

impl BackTimeCycle {
    /// `t_k` for 1-based `k`, if the chain got that far.
    pub fn time(&self, k: usize) -> Option<f64> {
        k.checked_sub(1)
            .and_then(|i| self.records.get(i))
            .map(|r| r.t)
    }
}

pub fn build_back_cycle<R: Rng + ?Sized>(
    domain: &LevelSetDomain,
    pot: &PotentialField,
    rng: &mut R,
    t: f64,
    x: Vec3,
    v: Vec3,
    k_max: usize,
    opts: &ExitOptions,
) -> Result<BackTimeCycle, CharError> {
    if k_max == 0 {
        return Err(CharError::InvalidRequest("k_max must be at least 1".into()));
    }
    let mut records = Vec::with_capacity(k_max.min(64));
    let mut p = PhasePoint::new(x, v);
    let mut tk = t;
    loop {
        let exit = backward_exit(domain, pot, p, opts)?;
        tk -= exit.t_b;
        let n = domain.outward_normal(&exit.x_b)?;
        let vk = sample_diffuse_velocity(rng, &n);
        records.push(CycleRecord {
            t: tk,
            x: exit.x_b,
            v: vk,
        });
        if tk <= 0.0 {
            return Ok(BackTimeCycle {
                records,
                terminal: CycleTerminal::ReachedInitialTime,
            });
        }
        if records.len() >= k_max {
            return Ok(BackTimeCycle {
                records,
                terminal: CycleTerminal::Truncated,
            });
        }
        p = PhasePoint::new(exit.x_b, vk);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachEstimate {
    pub k: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Monte-Carlo estimate of `P(t_k > 0)` for each requested `k`.
///
/// Every sample `i` uses its own stream and one chain serves all `k`, so the
/// estimates are paired and nonincreasing in `k` by construction.
pub fn cycle_reach_probability(
    domain: &LevelSetDomain,
    pot: &PotentialField,
    t: f64,
    x: Vec3,
    v: Vec3,
    ks: &[usize],
    n_samples: usize,
    seed: u64,
    opts: &ExitOptions,
) -> Result<Vec<ReachEstimate>, CharError> {
    if ks.iter().any(|&k| k < 2) {
        return Err(CharError::InvalidRequest("k must be at least 2".into()));
    }
    if n_samples < 100 {
        return Err(CharError::InvalidRequest(
            "need at least 100 samples".into(),
        ));
    }
    let k_max = ks.iter().copied().max().unwrap_or(2);
    let reached: Vec<usize> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let cycle = build_back_cycle(domain, pot, &mut rng, t, x, v, k_max, opts)?;
            // deepest k with t_k > 0
            Ok(cycle.records.iter().take_while(|r| r.t > 0.0).count())
        })
        .collect::<Result<_, CharError>>()?;
    Ok(ks
        .iter()
        .map(|&k| {
            let hits = reached.iter().filter(|&&d| d >= k).count() as f64;
            let n = n_samples as f64;
            let p = hits / n;
            ReachEstimate {
                k,
                estimate: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                n_samples,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn frame_is_orthonormal() {
        for n in [
            Vec3::x(),
            Vec3::new(0.3, -0.4, 0.866).normalize(),
            -Vec3::z(),
        ] {
            let (a, b) = tangent_frame(&n);
            assert_abs_diff_eq!(a.dot(&n), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.dot(&n), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(a.dot(&b), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn c_mu_is_one_over_two_pi() {
        assert_abs_diff_eq!(c_mu_quadrature(8), 1.0 / (2.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn sampler_moments() {
        let n = Vec3::new(1.0, 2.0, -2.0).normalize();
        let (t1, _) = tangent_frame(&n);
        let mut rng = stream_rng(7, 0);
        let m = 200_000;
        let (mut s1, mut s2, mut q) = (0.0, 0.0, 0.0);
        for _ in 0..m {
            let v = sample_diffuse_velocity(&mut rng, &n);
            let vn = v.dot(&n);
            assert!(vn > 0.0);
            s1 += vn;
            s2 += vn * vn;
            q += v.dot(&t1).powi(2);
        }
        let mean = s1 / m as f64;
        let var = s2 / m as f64 - mean * mean;
        let se = (var / m as f64).sqrt();
        assert!((mean - (PI / 2.0).sqrt()).abs() < 4.0 * se);
        // E[t²] = 1 with Var[t²] = 2
        assert!((q / m as f64 - 1.0).abs() < 4.0 * (2.0 / m as f64).sqrt());
    }

    #[test]
    fn short_time_gives_single_record() {
        let d = LevelSetDomain::unit_ball();
        let mut rng = stream_rng(1, 0);
        let c = build_back_cycle(
            &d,
            &PotentialField::zero(),
            &mut rng,
            0.5,
            Vec3::zeros(),
            Vec3::x(),
            10,
            &ExitOptions::default(),
        )
        .unwrap();
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.terminal, CycleTerminal::ReachedInitialTime);
        assert_abs_diff_eq!(c.records[0].t, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn cycle_invariants() {
        let d = LevelSetDomain::unit_ball();
        let mut rng = stream_rng(3, 11);
        let c = build_back_cycle(
            &d,
            &PotentialField::zero(),
            &mut rng,
            10.0,
            Vec3::new(0.2, 0.1, 0.0),
            Vec3::new(0.5, 0.5, 0.1),
            1000,
            &ExitOptions::default(),
        )
        .unwrap();
        for w in c.records.windows(2) {
            assert!(w[1].t < w[0].t);
        }
        for r in &c.records {
            assert!(d.level(&r.x).abs() <= 1e-9);
            assert!(d.outward_normal(&r.x).unwrap().dot(&r.v) > 0.0);
        }
    }

    #[test]
    fn reach_probability_is_reproducible_and_monotone() {
        let d = LevelSetDomain::unit_ball();
        let z = PotentialField::zero();
        let run = || {
            cycle_reach_probability(
                &d,
                &z,
                5.0,
                Vec3::zeros(),
                Vec3::x(),
                &[2, 5, 10, 20],
                500,
                42,
                &ExitOptions::default(),
            )
            .unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        for w in a.windows(2) {
            assert!(w[1].estimate <= w[0].estimate);
        }
        let tiny = cycle_reach_probability(
            &d,
            &z,
            0.01,
            Vec3::zeros(),
            Vec3::x(),
            &[2],
            200,
            1,
            &ExitOptions::default(),
        )
        .unwrap();
        assert_eq!(tiny[0].estimate, 0.0);
        assert_eq!(tiny[0].std_error, 0.0);
    }
}
