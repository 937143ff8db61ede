//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion NN ... PASS|FAIL` line with the measured values and runtime.
//! Tests share a lock so every runtime is measured on an otherwise idle
//! process.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use clap::Parser;
use gauss_quad::GaussHermite;
use kinetic_bte::characteristics::{
    backward_exit, c_mu_quadrature, cycle_reach_probability, flow, flow_with, jacobian_flow,
    sample_diffuse_velocity, stream_rng, CharError, ExitOptions, PhasePoint,
};
use kinetic_bte::cli::{
    self, full_run_summary, initial_full, initial_weighted, parse_scenario, Cli, Scenario,
    CONTRACTION_ITERATES, CONTRACTION_RATIO, ENTROPY_STEP_TOL, L1L2_TOL, MASS_DRIFT_TOL,
    RF_RATIO_FLOOR,
};
use kinetic_bte::collision::{
    beta_b, beta_c, constant_a, gaussian_moment, CollisionOperator, LinearOperatorMatrix,
};
use kinetic_bte::diagnostics::{coercivity_report, fit_decay_rate, warm_up_time};
use kinetic_bte::fields::{hamiltonian, PotentialField};
use kinetic_bte::geometry::LevelSetDomain;
use kinetic_bte::solver::{picard_mild_iteration, small_perturbation_initial, SimulationOutput};
use kinetic_bte::Vec3;
use rand::Rng;
use rand_distr::StandardNormal;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn scenario(text: &str) -> Scenario {
    let s = parse_scenario(text).expect("shipped scenario parses");
    s.validate().expect("shipped scenario validates");
    s
}

const POSITIVITY: &str = include_str!("../scenarios/positivity.toml");
const BUMP: &str = include_str!("../scenarios/bump.toml");
const PICARD: &str = include_str!("../scenarios/picard.toml");
const SEMIGROUP: &str = include_str!("../scenarios/semigroup.toml");
const CYCLES: &str = include_str!("../scenarios/cycles.toml");
const KERNEL_CHECK: &str = include_str!("../scenarios/kernel_check.toml");
const SMALL: &str = include_str!("../scenarios/small.toml");

fn verdict(
    id: u32,
    name: &str,
    checks: &[(&str, bool)],
    detail: String,
    elapsed: Duration,
    limit: Duration,
) -> bool {
    let in_time = elapsed <= limit;
    let pass = in_time && checks.iter().all(|(_, ok)| *ok);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    println!(
        "criterion {id:02} {name}: {} | {detail} | runtime {:.2}s (limit {}s){}{}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { " over time" },
        if failed.is_empty() {
            String::new()
        } else {
            format!(" | failed: {}", failed.join(", "))
        },
    );
    pass
}

/// Samples shared by the Hamiltonian and velocity-bound criteria:
/// `(max |ΔH|, max (||v| − |V|| − √(2‖Φ‖∞)), runtime)`.
fn characteristic_samples() -> &'static (f64, f64, Duration) {
    static CELL: OnceLock<(f64, f64, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let domain = LevelSetDomain::unit_ball();
        let pot = PotentialField::harmonic(1.0, &domain).unwrap();
        let bound = (2.0 * pot.sup_norm()).sqrt();
        let crossing = domain.crossing_time();
        let mut rng = stream_rng(101, 0);
        let mut dh_max: f64 = 0.0;
        let mut excess = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let x = loop {
                let p = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if p.norm() < 0.98 {
                    break p;
                }
            };
            let v = Vec3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            let opts = ExitOptions {
                horizon: Some(crossing),
                ..ExitOptions::default()
            };
            // bound orbits of the trap stay inside for the whole crossing time
            let span = match backward_exit(&domain, &pot, PhasePoint::new(x, v), &opts) {
                Ok(exit) => exit.t_b.min(crossing),
                Err(CharError::ExitNotFound { .. }) => crossing,
                Err(e) => panic!("{e}"),
            };
            let h0 = hamiltonian(&pot, &x, &v);
            let speed = v.norm();
            flow_with(&pot, PhasePoint::new(x, v), 0.0, -span, 1e-3, |_, p| {
                dh_max = dh_max.max((hamiltonian(&pot, &p.x, &p.v) - h0).abs());
                excess = excess.max((speed - p.v.norm()).abs() - bound);
                Ok(())
            })
            .unwrap();
        }
        (dh_max, excess, start.elapsed())
    })
}

#[test]
fn criterion_01_hamiltonian_conservation() {
    let _g = serial();
    let (dh, _, elapsed) = *characteristic_samples();
    let ok = verdict(
        1,
        "Hamiltonian conservation",
        &[("max |dH| <= 1e-6", dh <= 1e-6)],
        format!("max |dH| = {dh:.3e} over 1000 characteristics"),
        elapsed,
        Duration::from_secs(10),
    );
    assert!(ok);
}

#[test]
fn criterion_02_velocity_bound() {
    let _g = serial();
    let (_, excess, elapsed) = *characteristic_samples();
    let ok = verdict(
        2,
        "velocity bound",
        &[("||v|-|V|| <= sqrt(2 sup Phi) + 1e-6", excess <= 1e-6)],
        format!("max excess over sqrt(2 sup Phi) = {excess:.3e}"),
        elapsed,
        Duration::from_secs(10),
    );
    assert!(ok);
}

#[test]
fn criterion_03_jacobian_flow() {
    let _g = serial();
    let start = Instant::now();
    let domain = LevelSetDomain::unit_ball();
    let harmonic = PotentialField::harmonic(1.0, &domain).unwrap();
    let zero = PotentialField::zero();
    let mut rng = stream_rng(103, 0);
    let mut free_err: f64 = 0.0;
    let mut harm_err: f64 = 0.0;
    let mut fd_err: f64 = 0.0;
    for _ in 0..50 {
        let x = Vec3::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        );
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let s: f64 = rng.random_range(-2.0..0.0);
        let p = PhasePoint::new(x, v);
        let (_, _, det) = jacobian_flow(&zero, p, 0.0, s, 1e-3).unwrap();
        free_err = free_err.max((det - s.powi(3)).abs());
        let (_, j, det) = jacobian_flow(&harmonic, p, 0.0, s, 1e-3).unwrap();
        harm_err = harm_err.max((det - s.sin().powi(3)).abs());
        let d = 1e-5;
        for c in 0..3 {
            let mut e = Vec3::zeros();
            e[c] = d;
            let plus = flow(&harmonic, PhasePoint::new(x, v + e), 0.0, s, 1e-3).unwrap();
            let minus = flow(&harmonic, PhasePoint::new(x, v - e), 0.0, s, 1e-3).unwrap();
            let col = (plus.x - minus.x) / (2.0 * d);
            for r in 0..3 {
                fd_err = fd_err.max((col[r] - j.dxdv[(r, c)]).abs());
            }
        }
    }
    let ok = verdict(
        3,
        "Jacobian flow oracle",
        &[
            ("free det = (s-t)^3 to 1e-8", free_err <= 1e-8),
            ("harmonic det = sin^3(s-t) to 1e-6", harm_err <= 1e-6),
            ("finite differences to 1e-4", fd_err <= 1e-4),
        ],
        format!("free {free_err:.2e}, harmonic {harm_err:.2e}, finite difference {fd_err:.2e}"),
        start.elapsed(),
        Duration::from_secs(10),
    );
    assert!(ok);
}

#[test]
fn criterion_04_diffuse_sampler() {
    let _g = serial();
    let start = Instant::now();
    let n = Vec3::new(1.0, 2.0, 2.0) / 3.0;
    let t1 = Vec3::new(2.0, -1.0, 0.0).normalize();
    let t2 = n.cross(&t1);
    let count = 1_000_000usize;
    let mut rng = stream_rng(104, 0);
    let (mut s_n, mut s_nn) = (0.0, 0.0);
    let (mut s1, mut s11, mut s2, mut s22) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..count {
        let v = sample_diffuse_velocity(&mut rng, &n);
        let (a, b, c) = (n.dot(&v), t1.dot(&v), t2.dot(&v));
        s_n += a;
        s_nn += a * a;
        s1 += b;
        s11 += b * b;
        s2 += c;
        s22 += c * c;
    }
    let m = count as f64;
    let mean_n = s_n / m;
    let se_n = ((s_nn / m - mean_n * mean_n) / m).sqrt();
    let var1 = s11 / m - (s1 / m).powi(2);
    let var2 = s22 / m - (s2 / m).powi(2);
    let se_var = (2.0 / m).sqrt();
    let c_mu = c_mu_quadrature(16);
    let z_n = (mean_n - (PI / 2.0).sqrt()) / se_n;
    let z1 = (var1 - 1.0) / se_var;
    let z2 = (var2 - 1.0) / se_var;
    let ok = verdict(
        4,
        "diffuse sampler",
        &[
            ("mean normal component within 3 SE", z_n.abs() <= 3.0),
            ("tangential variances within 3 SE", z1.abs() <= 3.0 && z2.abs() <= 3.0),
            ("c_mu within 1e-6 of 1/(2 pi)", (c_mu - 0.5 / PI).abs() <= 1e-6),
        ],
        format!(
            "mean n.v {mean_n:.5} (z {z_n:.2}), tangential variances {var1:.5} (z {z1:.2}) {var2:.5} (z {z2:.2}), |c_mu - 1/(2pi)| {:.1e}",
            (c_mu - 0.5 / PI).abs()
        ),
        start.elapsed(),
        Duration::from_secs(30),
    );
    assert!(ok);
}

#[test]
fn criterion_05_cycle_measure() {
    let _g = serial();
    let start = Instant::now();
    let s = scenario(CYCLES);
    let domain = s.build_domain().unwrap();
    let pot = s.build_potential(&domain).unwrap();
    let c = &s.cycles;
    let est = cycle_reach_probability(
        &domain,
        &pot,
        c.t,
        Vec3::from(c.x),
        Vec3::from(c.v),
        &c.k,
        c.samples,
        s.seed,
        &ExitOptions::default(),
    )
    .unwrap();
    let monotone = est
        .windows(2)
        .all(|w| w[1].estimate <= w[0].estimate + 2.0 * (w[0].std_error + w[1].std_error));
    let first = est.first().unwrap();
    let last = est.last().unwrap();
    let ok = verdict(
        5,
        "cycle measure",
        &[
            ("nonincreasing within 2 SE", monotone),
            ("k=40 <= 0.1 x k=5", last.estimate <= 0.1 * first.estimate),
            ("10^4 samples", first.n_samples == 10_000),
        ],
        est.iter()
            .map(|e| format!("k={} {:.4}+-{:.4}", e.k, e.estimate, e.std_error))
            .collect::<Vec<_>>()
            .join(", "),
        start.elapsed(),
        Duration::from_secs(120),
    );
    assert!(ok);
}

#[test]
fn criterion_06_collision_structure() {
    let _g = serial();
    let start = Instant::now();
    let s = scenario(KERNEL_CHECK);
    let kernel = s.build_kernel().unwrap();
    let grid = s
        .build_velocity_grid(s.grid.velocity_cutoff, s.grid.velocity_points)
        .unwrap();
    let op = CollisionOperator::new(grid, kernel.clone());
    let mu = op.mu().to_vec();
    let q = op.q_collision(&mu, &mu, 1);
    let q_rel = q
        .iter()
        .zip(&mu)
        .map(|(a, m)| (a / m).abs())
        .fold(0.0, f64::max);
    let mut rng = stream_rng(s.seed, 2);
    let f: Vec<f64> = mu
        .iter()
        .map(|m| m * (1.0 + 0.5 * rng.random_range(-1.0..=1.0)))
        .collect();
    let qc = op.q_collision_conservative(&f, 1).unwrap();
    let inv = op.invariant_moments(&qc, 1)[0]
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let mut reports = Vec::new();
    for &cutoff in &s.kernel_check.cutoffs {
        let g = s
            .build_velocity_grid(cutoff, s.kernel_check.velocity_points)
            .unwrap();
        let lin = LinearOperatorMatrix::assemble(&CollisionOperator::new(g, kernel.clone()));
        reports.push(coercivity_report(&lin));
    }
    let kernel_res = reports
        .iter()
        .flat_map(|r| r.kernel_residuals)
        .fold(0.0, f64::max);
    let near_zero = reports.iter().all(|r| {
        r.kernel_eigenvalues
            .iter()
            .all(|l| l.abs() <= 1e-8 * r.largest_eigenvalue)
    });
    let gap_positive = reports.iter().all(|r| r.spectral_gap > 0.0);
    let (g8, g10) = (
        reports[0].spectral_gap,
        reports[reports.len() - 1].spectral_gap,
    );
    let spread = (g10 - g8).abs() / g8;
    let ok = verdict(
        6,
        "collision structure",
        &[
            ("Q(mu,mu) <= 1e-3 mu", q_rel <= 1e-3),
            ("conservative invariants <= 1e-10", inv <= 1e-10),
            ("Ker(L) residuals <= 1e-6", kernel_res <= 1e-6),
            ("five near-zero eigenvalues", near_zero),
            ("positive sixth eigenvalue", gap_positive),
            ("gap stable within 20%", spread <= 0.2),
        ],
        format!(
            "Q(mu,mu) rel {q_rel:.2e}, invariants {inv:.2e}, kernel residual {kernel_res:.2e}, gaps {g8:.4} / {g10:.4} (spread {:.1}%)",
            100.0 * spread
        ),
        start.elapsed(),
        Duration::from_secs(600),
    );
    assert!(ok);
}

#[test]
fn criterion_07_appendix_constants() {
    let _g = serial();
    let start = Instant::now();
    let gh = GaussHermite::new(NonZeroUsize::new(12).unwrap());
    let r2 = 2f64.sqrt();
    let quad = |p: &dyn Fn(f64, f64, f64) -> f64| -> f64 {
        let mut total = 0.0;
        for (x, wx) in gh.iter() {
            for (y, wy) in gh.iter() {
                for (z, wz) in gh.iter() {
                    total += wx * wy * wz * p(r2 * x, r2 * y, r2 * z);
                }
            }
        }
        total * r2.powi(3)
    };
    let bc = beta_c();
    let residual_c =
        quad(&|a, b, c| (a * a + b * b + c * c - bc) * a * a).abs() / gaussian_moment([2, 0, 0], 0);
    let bb = beta_b();
    let residual_b = quad(&|a, _, _| a * a - bb).abs() / gaussian_moment([0, 0, 0], 0);
    let a = constant_a();
    let expected = 30.0 * (2.0 * PI).powf(1.5) / (3.0 * 6f64.sqrt());
    let rel = (a - expected).abs() / expected;
    let ok = verdict(
        7,
        "appendix constants",
        &[
            ("beta_c = 5", bc == 5.0 && residual_c <= 1e-8),
            ("beta_b = 1", bb == 1.0 && residual_b <= 1e-8),
            ("A to 1e-6 relative", rel <= 1e-6),
        ],
        format!("beta_c {bc} (residual {residual_c:.1e}), beta_b {bb} (residual {residual_b:.1e}), A {a:.10} rel err {rel:.1e}"),
        start.elapsed(),
        Duration::from_secs(1),
    );
    assert!(ok);
}

#[test]
fn criterion_08_semigroup_decay() {
    let _g = serial();
    let start = Instant::now();
    let s = scenario(SEMIGROUP);
    let sys = s.build_system().unwrap();
    let h0 = initial_weighted(&sys, &s).unwrap();
    let out = sys
        .run_linear(&h0, &s.scheme_config(), None, &s.hash())
        .unwrap();
    let nu0 = sys.collision().nu0();
    let fit = fit_decay_rate(
        "winf_norm",
        out.series.times(),
        out.series.channel("winf_norm").unwrap(),
        (0.5, 5.0),
    )
    .unwrap();
    let ratio = fit.rate / nu0;
    let ok = verdict(
        8,
        "semigroup decay",
        &[
            ("rate in [0.9, 1.5] nu0", (0.9..=1.5).contains(&ratio)),
            ("r^2 >= 0.98", fit.r_squared >= 0.98),
        ],
        format!(
            "grid {}x{} nodes, rate {:.4} = {ratio:.4} nu0 (nu0 {nu0:.4}), r^2 {:.6}",
            sys.nx(),
            sys.nv(),
            fit.rate,
            fit.r_squared
        ),
        start.elapsed(),
        Duration::from_secs(300),
    );
    assert!(ok);
}

#[test]
fn criterion_09_positivity_and_mass() {
    let _g = serial();
    let start = Instant::now();
    let s = scenario(POSITIVITY);
    let sys = s.build_system().unwrap();
    let f0 = initial_full(&sys, &s).unwrap();
    let cfg = s.scheme_config();
    let mut min_f = f0.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut observed = 0usize;
    let out = sys
        .run_simulation(&f0, &cfg, &s.hash(), |snap| {
            observed += 1;
            min_f = snap.values.iter().cloned().fold(min_f, f64::min);
        })
        .unwrap();
    let summary = full_run_summary(&out.series);
    let drift = summary["mass_drift"].as_f64().unwrap();
    let increase = summary["entropy_max_relative_increase"].as_f64().unwrap();
    let steps = cfg.steps();
    let ok = verdict(
        9,
        "positivity and mass",
        &[
            ("200 steps", steps == 200 && out.series.len() == steps + 1),
            ("min F >= 0", min_f >= 0.0),
            ("mass drift <= 1e-3", drift <= MASS_DRIFT_TOL),
            ("entropy nonincreasing within 1e-6 per step", increase <= ENTROPY_STEP_TOL),
        ],
        format!("{steps} steps, min F {min_f:.3e}, mass drift {drift:.2e}, worst relative entropy change per step {increase:.2e}"),
        start.elapsed(),
        Duration::from_secs(600),
    );
    assert!(ok);
}

/// Bump run shared by the entropy-control and `R(f)` criteria.
fn bump_run() -> &'static (Scenario, SimulationOutput, Duration) {
    static CELL: OnceLock<(Scenario, SimulationOutput, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let s = scenario(BUMP);
        let sys = s.build_system().unwrap();
        let f0 = initial_full(&sys, &s).unwrap();
        let out = sys
            .run_simulation(&f0, &s.scheme_config(), &s.hash(), |_| {})
            .unwrap();
        (s, out, start.elapsed())
    })
}

#[test]
fn criterion_10_entropy_control() {
    let _g = serial();
    let (_, out, elapsed) = bump_run();
    let l1l2 = out.series.channel("l1l2").unwrap();
    let e0 = out.series.channel("entropy").unwrap()[0];
    let worst = l1l2
        .iter()
        .map(|x| x - e0)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = verdict(
        10,
        "entropy control",
        &[("L1/L2 functional <= E(F0) + 1e-8", worst <= L1L2_TOL)],
        format!(
            "E(F0) {e0:.6e}, max functional - E(F0) {worst:.3e} over {} output times",
            l1l2.len()
        ),
        *elapsed,
        Duration::from_secs(600),
    );
    assert!(ok);
}

#[test]
fn criterion_11_picard_contraction() {
    let _g = serial();
    let start = Instant::now();
    let s = scenario(PICARD);
    let sys = s.build_system().unwrap();
    let lin = LinearOperatorMatrix::assemble(sys.collision());
    let cfg = s.picard_config();
    let h0 = initial_weighted(&sys, &s).unwrap();
    let main = picard_mild_iteration(&sys, &lin, &h0, &cfg).unwrap();
    let small = main.contracts(CONTRACTION_RATIO, CONTRACTION_ITERATES);
    let sweep_cfg = kinetic_bte::solver::PicardConfig {
        max_iter: CONTRACTION_ITERATES + 1,
        ..cfg
    };
    let mut last_ok = None;
    let mut threshold = None;
    for &a in &s.picard.sweep {
        let h = small_perturbation_initial(&sys, a, "random", s.seed).unwrap();
        let r = picard_mild_iteration(&sys, &lin, &h, &sweep_cfg).unwrap();
        if r.contracts(CONTRACTION_RATIO, CONTRACTION_ITERATES) {
            last_ok = Some(a);
        } else {
            threshold = Some(a);
            break;
        }
    }
    let ok = verdict(
        11,
        "Picard contraction",
        &[
            ("amplitude 1e-3 ratios < 0.9 for >= 5 iterates", small),
            ("finite non-contraction threshold", threshold.is_some()),
        ],
        format!(
            "ratios {:?}, threshold in ({:?}, {:?}]",
            main.ratios
                .iter()
                .map(|q| (q * 1e3).round() / 1e3)
                .collect::<Vec<_>>(),
            last_ok,
            threshold
        ),
        start.elapsed(),
        Duration::from_secs(600),
    );
    assert!(ok);
}

#[test]
fn criterion_12_rf_estimate() {
    let _g = serial();
    let (s, out, run_time) = bump_run();
    let start = Instant::now();
    let times = out.series.times();
    let rf = out.series.channel("rf_min_ratio").unwrap();
    let winf = out.series.channel("winf_norm").unwrap();
    let warm = warm_up_time(times, rf, RF_RATIO_FLOOR);
    let t_end = *times.last().unwrap();
    let final_norm = *winf.last().unwrap();
    // the contraction threshold is probed directly at the final amplitude
    let p = scenario(PICARD);
    assert_eq!(
        (&p.grid, &p.potential, &p.kernel),
        (&s.grid, &s.potential, &s.kernel)
    );
    let sys = p.build_system().unwrap();
    let lin = LinearOperatorMatrix::assemble(sys.collision());
    let cfg = kinetic_bte::solver::PicardConfig {
        max_iter: CONTRACTION_ITERATES + 1,
        ..p.picard_config()
    };
    let h = small_perturbation_initial(&sys, final_norm, "random", p.seed).unwrap();
    let below = picard_mild_iteration(&sys, &lin, &h, &cfg)
        .unwrap()
        .contracts(CONTRACTION_RATIO, CONTRACTION_ITERATES);
    let min_after = warm
        .map(|tw| {
            times
                .iter()
                .zip(rf)
                .filter(|(t, _)| **t >= tw)
                .map(|(_, r)| *r)
                .fold(f64::INFINITY, f64::min)
        })
        .unwrap_or(f64::NAN);
    let ok = verdict(
        12,
        "R(f) estimate",
        &[
            ("ratio >= 0.5 beyond a warm-up", warm.is_some_and(|tw| tw < t_end)),
            ("|wf(t_end)| below contraction threshold", below),
        ],
        format!(
            "warm-up {warm:?}, min ratio after {min_after:.4}, |wf| {:.3} -> {final_norm:.3} at t={t_end}",
            winf[0]
        ),
        *run_time + start.elapsed(),
        Duration::from_secs(900),
    );
    assert!(ok);
}

#[test]
fn criterion_13_determinism() {
    let _g = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let args = [
            "kinetic-bte",
            "simulate",
            "--scenario",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            "1",
        ];
        cli::dispatch(&Cli::parse_from(args)).unwrap();
        files.push(std::fs::read(out.join("diagnostics.csv")).unwrap());
    }
    let ok = verdict(
        13,
        "determinism",
        &[(
            "byte-identical diagnostics",
            files[0] == files[1] && !files[0].is_empty(),
        )],
        format!("{} bytes per run", files[0].len()),
        start.elapsed(),
        Duration::from_secs(60),
    );
    assert!(ok);
}
