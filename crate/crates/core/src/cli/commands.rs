//! Subcommand pipelines. Each writes its outputs under the run directory and
//! embeds the scenario hash and seed in every file.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::{json, Value};

use super::plot::plot_channel;
use super::scenario::{InitialSpec, Scenario};
use crate::characteristics::{cycle_reach_probability, stream_rng, ExitOptions};
use crate::collision::{
    beta_a, beta_b, beta_c, constant_a, CollisionOperator, LinearOperatorMatrix,
};
use crate::diagnostics::{self, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solver::{
    bump_initial, equilibrium_initial, random_initial, small_perturbation_initial, BumpSpec,
    DampingMode, KineticSystem, PicardConfig, PicardOutcome, SimulationOutput,
};

/// Per-step relative entropy increase still counted as nonincreasing.
pub const ENTROPY_STEP_TOL: f64 = 1e-6;
/// Slack of the `L¹/L²` functional against `E(F₀)`.
pub const L1L2_TOL: f64 = 1e-8;
/// Admissible relative mass drift of a full run.
pub const MASS_DRIFT_TOL: f64 = 1e-3;
/// Lower bound monitored for `R(f)/(e^{−Φ}ν)`.
pub const RF_RATIO_FLOOR: f64 = 0.5;
/// Picard ratio bound and the number of iterates it must hold for.
pub const CONTRACTION_RATIO: f64 = 0.9;
pub const CONTRACTION_ITERATES: usize = 5;

pub struct RunContext {
    pub scenario: Scenario,
    pub hash: String,
    pub out: PathBuf,
}

impl RunContext {
    pub fn new(scenario: Scenario, out: PathBuf) -> Result<Self> {
        fs::create_dir_all(&out)?;
        Ok(Self {
            hash: scenario.hash(),
            scenario,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn seed(&self) -> u64 {
        self.scenario.seed
    }

    fn write_json(&self, name: &str, mut body: Value) -> Result<()> {
        if let Value::Object(m) = &mut body {
            m.insert("config_hash".into(), json!(self.hash));
            m.insert("seed".into(), json!(self.seed()));
        }
        write_json_file(&self.path(name), &body)
    }

    fn write_series(&self, name: &str, series: &DiagnosticsSeries) -> Result<()> {
        let file = BufWriter::new(File::create(self.path(name))?);
        series.write_csv(file)?;
        Ok(())
    }
}

fn write_json_file(path: &Path, body: &Value) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, body).map_err(|e| Error::Io(e.into()))?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Full distribution `F₀` of the scenario.
pub fn initial_full(sys: &KineticSystem, s: &Scenario) -> Result<Vec<f64>> {
    Ok(match &s.initial {
        InitialSpec::Equilibrium {} => equilibrium_initial(sys),
        InitialSpec::Random { epsilon } => random_initial(sys, *epsilon, s.seed)?,
        InitialSpec::SmallPerturbation { amplitude, mode } => {
            let h = small_perturbation_initial(sys, *amplitude, mode, s.seed)?;
            let f = sys.full(&sys.unweighted(&h));
            if let Some(min) = f.iter().cloned().reduce(f64::min).filter(|m| *m < 0.0) {
                return Err(Error::Validation(format!(
                    "perturbation amplitude {amplitude} makes F₀ negative (min {min:e})"
                )));
            }
            f
        }
        InitialSpec::Bump {
            amplitude,
            center,
            velocity,
            radius,
        } => bump_initial(
            sys,
            &BumpSpec {
                amplitude: *amplitude,
                center: vec3(*center),
                velocity: vec3(*velocity),
                radius: *radius,
            },
        )?,
    })
}

/// Weighted perturbation `h₀ = w(F₀ − μ_E)/√μ_E` of the scenario.
pub fn initial_weighted(sys: &KineticSystem, s: &Scenario) -> Result<Vec<f64>> {
    Ok(match &s.initial {
        InitialSpec::SmallPerturbation { amplitude, mode } => {
            small_perturbation_initial(sys, *amplitude, mode, s.seed)?
        }
        _ => {
            let f = initial_full(sys, s)?;
            sys.weighted(&sys.perturbation(&f))
        }
    })
}

fn snapshot_writer<'a>(
    ctx: &'a RunContext,
    every: usize,
    nx: usize,
    err: &'a mut Option<Error>,
) -> impl FnMut(crate::solver::Snapshot<'_>) + 'a {
    move |snap| {
        if every == 0 || snap.step % every != 0 || err.is_some() {
            return;
        }
        let name = format!("snapshot_{:06}.csv", snap.step);
        let res = (|| -> Result<()> {
            let mut w = BufWriter::new(File::create(ctx.path(&name))?);
            writeln!(w, "# config_hash={}", ctx.hash)?;
            writeln!(w, "# seed={}", ctx.seed())?;
            writeln!(w, "# t={}", snap.t)?;
            writeln!(w, "v_index,x_index,value")?;
            for (k, val) in snap.values.iter().enumerate() {
                writeln!(w, "{},{},{}", k / nx, k % nx, val)?;
            }
            w.flush()?;
            Ok(())
        })();
        if let Err(e) = res {
            *err = Some(e);
        }
    }
}

/// Summary of a nonlinear run: mass drift, entropy monotonicity and the
/// entropy-controlled functional.
pub fn full_run_summary(series: &DiagnosticsSeries) -> Value {
    let mass = series.channel("mass").unwrap_or(&[]);
    let entropy = series.channel("entropy").unwrap_or(&[]);
    let l1l2 = series.channel("l1l2").unwrap_or(&[]);
    let rf = series.channel("rf_min_ratio").unwrap_or(&[]);
    let m0 = mass.first().copied().unwrap_or(0.0);
    let drift = mass
        .iter()
        .map(|m| ((m - m0) / m0).abs())
        .fold(0.0, f64::max);
    let max_increase = entropy
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1e-300))
        .fold(f64::NEG_INFINITY, f64::max);
    let e0 = entropy.first().copied().unwrap_or(0.0);
    let l1l2_max = l1l2.iter().cloned().fold(0.0, f64::max);
    let warm = diagnostics::warm_up_time(series.times(), rf, RF_RATIO_FLOOR);
    json!({
        "mass_drift": drift,
        "mass_drift_ok": drift <= MASS_DRIFT_TOL,
        "entropy_initial": e0,
        "entropy_max_relative_increase": if max_increase.is_finite() { max_increase } else { 0.0 },
        "entropy_nonincreasing": !(max_increase > ENTROPY_STEP_TOL),
        "l1l2_max": l1l2_max,
        "l1l2_bounded": l1l2.iter().all(|x| *x <= e0 + L1L2_TOL),
        "rf_min_ratio": rf.iter().cloned().fold(f64::INFINITY, f64::min),
        "rf_warm_up_time": warm,
    })
}

fn run_full(ctx: &RunContext, snapshot_every: usize) -> Result<(KineticSystem, SimulationOutput)> {
    let sys = ctx.scenario.build_system()?;
    let f0 = initial_full(&sys, &ctx.scenario)?;
    let cfg = ctx.scenario.scheme_config();
    let mut snap_err = None;
    let nx = sys.nx();
    let out = {
        let observe = snapshot_writer(ctx, snapshot_every, nx, &mut snap_err);
        sys.run_simulation(&f0, &cfg, &ctx.hash, observe)?
    };
    if let Some(e) = snap_err {
        return Err(e);
    }
    Ok((sys, out))
}

pub fn simulate(ctx: &RunContext, snapshot_every: usize) -> Result<()> {
    let (sys, out) = run_full(ctx, snapshot_every)?;
    ctx.write_series("diagnostics.csv", &out.series)?;
    let mut summary = full_run_summary(&out.series);
    summary["spatial_nodes"] = json!(sys.nx());
    summary["velocity_nodes"] = json!(sys.nv());
    summary["steps"] = json!(ctx.scenario.scheme_config().steps());
    ctx.write_json("simulate.json", summary)
}

pub fn entropy(ctx: &RunContext, snapshot_every: usize) -> Result<()> {
    let (_, out) = run_full(ctx, snapshot_every)?;
    ctx.write_series("entropy.csv", &out.series)?;
    let summary = full_run_summary(&out.series);
    let ok =
        summary["entropy_nonincreasing"] == json!(true) && summary["l1l2_bounded"] == json!(true);
    ctx.write_json("entropy.json", json!({ "summary": summary, "pass": ok }))
}

pub fn semigroup(ctx: &RunContext, snapshot_every: usize) -> Result<()> {
    let s = &ctx.scenario;
    let sys = s.build_system()?;
    let h0 = initial_weighted(&sys, s)?;
    let cfg = s.scheme_config();
    let frozen = match cfg.damping {
        DampingMode::Rf => Some(initial_full(&sys, s)?),
        _ => None,
    };
    let out = sys.run_linear(&h0, &cfg, frozen.as_deref(), &ctx.hash)?;
    if snapshot_every > 0 {
        let mut err = None;
        {
            let mut w = snapshot_writer(ctx, snapshot_every, sys.nx(), &mut err);
            w(crate::solver::Snapshot {
                step: cfg.steps(),
                t: cfg.steps() as f64 * cfg.dt,
                values: &out.final_state,
            });
        }
        if let Some(e) = err {
            return Err(e);
        }
    }
    ctx.write_series("semigroup.csv", &out.series)?;
    let nu0 = sys.collision().nu0();
    let t_end = out.series.times().last().copied().unwrap_or(0.0);
    let window = (0.1 * t_end, t_end);
    let fit = diagnostics::fit_decay_rate(
        "winf_norm",
        out.series.times(),
        out.series.channel("winf_norm").unwrap_or(&[]),
        window,
    );
    let body = match fit {
        Ok(f) => json!({
            "nu0": nu0,
            "window": [window.0, window.1],
            "rate": f.rate,
            "rate_over_nu0": f.rate / nu0,
            "r_squared": f.r_squared,
        }),
        Err(e) => json!({ "nu0": nu0, "fit_error": e.to_string() }),
    };
    ctx.write_json("semigroup.json", body)
}

pub fn cycles(ctx: &RunContext) -> Result<()> {
    let s = &ctx.scenario;
    let domain = s.build_domain()?;
    let pot = s.build_potential(&domain)?;
    let c = &s.cycles;
    let est = cycle_reach_probability(
        &domain,
        &pot,
        c.t,
        vec3(c.x),
        vec3(c.v),
        &c.k,
        c.samples,
        s.seed,
        &ExitOptions::default(),
    )?;
    let mut w = BufWriter::new(File::create(ctx.path("cycles.csv"))?);
    writeln!(w, "# config_hash={}", ctx.hash)?;
    writeln!(w, "# seed={}", ctx.seed())?;
    let mut csv = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.into());
    csv.write_record(["k", "estimate", "std_error", "n_samples"])
        .map_err(io)?;
    for e in &est {
        csv.write_record([
            e.k.to_string(),
            e.estimate.to_string(),
            e.std_error.to_string(),
            e.n_samples.to_string(),
        ])
        .map_err(io)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn kernel_check(ctx: &RunContext) -> Result<()> {
    let s = &ctx.scenario;
    let kernel = s.build_kernel()?;
    let grid = s.build_velocity_grid(s.grid.velocity_cutoff, s.grid.velocity_points)?;
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
    let qc = op.q_collision_conservative(&f, 1)?;
    let scale: f64 = op
        .grid()
        .nodes()
        .iter()
        .zip(&qc)
        .map(|(v, x)| x.abs() * (1.0 + v.norm_squared()))
        .sum::<f64>()
        * op.grid().weight();
    let inv = op.invariant_moments(&qc, 1)[0];
    let inv_max = inv.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut spectra = Vec::new();
    let mut gaps = Vec::new();
    for &cutoff in &s.kernel_check.cutoffs {
        let g = s.build_velocity_grid(cutoff, s.kernel_check.velocity_points)?;
        let lin = LinearOperatorMatrix::assemble(&CollisionOperator::new(g, kernel.clone()));
        let rep = diagnostics::coercivity_report(&lin);
        gaps.push(rep.spectral_gap);
        spectra.push(json!({
            "cutoff": cutoff,
            "velocity_points": s.kernel_check.velocity_points,
            "kernel_eigenvalues": rep.kernel_eigenvalues,
            "spectral_gap": rep.spectral_gap,
            "largest_eigenvalue": rep.largest_eigenvalue,
            "kernel_residuals": rep.kernel_residuals,
            "raw_kernel_residual": rep.raw_kernel_residual,
            "raw_asymmetry": rep.raw_asymmetry,
            "symmetry_residual": rep.symmetry_residual,
            "nu0": rep.nu0,
        }));
    }
    let gap_spread = match (gaps.first(), gaps.last()) {
        (Some(a), Some(b)) if gaps.len() > 1 => Some((b - a).abs() / a.abs()),
        _ => None,
    };
    ctx.write_json(
        "kernel_check.json",
        json!({
            "q_mu_mu_max_relative": q_rel,
            "conservative_invariants_max": inv_max,
            "conservative_invariants_relative": inv_max / scale.max(1e-300),
            "nu0": op.nu0(),
            "spectra": spectra,
            "gap_relative_spread": gap_spread,
            "constants": {
                "beta_a": beta_a(),
                "beta_b": beta_b(),
                "beta_c": beta_c(),
                "a": constant_a(),
            },
        }),
    )
}

/// Result of the Picard command: the main run and the optional sweep.
pub fn picard(ctx: &RunContext) -> Result<()> {
    let s = &ctx.scenario;
    let (amplitude, mode) = match &s.initial {
        InitialSpec::SmallPerturbation { amplitude, mode } => (*amplitude, mode.clone()),
        _ => {
            return Err(Error::Validation(
                "picard needs a small_perturbation initial condition".into(),
            ))
        }
    };
    let sys = s.build_system()?;
    let lin = LinearOperatorMatrix::assemble(sys.collision());
    let cfg = s.picard_config();
    let mut sweep = Vec::new();
    let mut threshold = None;
    let mut amps = s.picard.sweep.clone();
    amps.sort_by(f64::total_cmp);
    let sweep_cfg = PicardConfig {
        max_iter: cfg.max_iter.min(CONTRACTION_ITERATES + 1),
        ..cfg
    };
    for a in amps {
        let h0 = small_perturbation_initial(&sys, a, &mode, s.seed)?;
        let r = crate::solver::picard_mild_iteration(&sys, &lin, &h0, &sweep_cfg)?;
        let contracted = r.contracts(CONTRACTION_RATIO, CONTRACTION_ITERATES);
        sweep.push(json!({
            "amplitude": a,
            "contracted": contracted,
            "iterations": r.residuals.len(),
            "max_ratio": r.ratios.iter().cloned().fold(0.0, f64::max),
        }));
        if !contracted && threshold.is_none() {
            threshold = Some(a);
        }
    }
    let h0 = small_perturbation_initial(&sys, amplitude, &mode, s.seed)?;
    let r = crate::solver::picard_mild_iteration(&sys, &lin, &h0, &cfg)?;
    let mut w = BufWriter::new(File::create(ctx.path("picard.csv"))?);
    writeln!(w, "# config_hash={}", ctx.hash)?;
    writeln!(w, "# seed={}", ctx.seed())?;
    writeln!(w, "iteration,residual,ratio")?;
    for (m, res) in r.residuals.iter().enumerate() {
        let ratio = if m == 0 {
            String::new()
        } else {
            r.ratios[m - 1].to_string()
        };
        writeln!(w, "{m},{res},{ratio}")?;
    }
    w.flush()?;
    let converged = r.outcome == PicardOutcome::Converged;
    let contracted = r.contracts(CONTRACTION_RATIO, CONTRACTION_ITERATES);
    ctx.write_json(
        "picard.json",
        json!({
            "amplitude": amplitude,
            "converged": converged,
            "contracted": contracted,
            "residuals": r.residuals,
            "ratios": r.ratios,
            "first_nonlinear": r.first_nonlinear,
            "sweep": sweep,
            "threshold": threshold,
        }),
    )?;
    r.into_result()?;
    Ok(())
}

/// Renders a diagnostics CSV into `report.json` and per-channel SVG plots.
pub fn report(input: &Path, out: &Path, plots: bool) -> Result<()> {
    fs::create_dir_all(out)?;
    let series = DiagnosticsSeries::read_csv(BufReader::new(File::open(input)?))?;
    let t = series.times();
    let t_end = t.last().copied().unwrap_or(0.0);
    let mut channels = serde_json::Map::new();
    for name in series.columns() {
        let y = series.channel(name).unwrap_or(&[]);
        let fit = diagnostics::fit_decay_rate(name, t, y, (0.5 * t_end, t_end))
            .ok()
            .map(|f| json!({ "rate": f.rate, "r_squared": f.r_squared }));
        channels.insert(
            name.clone(),
            json!({
                "first": y.first(),
                "last": y.last(),
                "min": y.iter().cloned().fold(f64::INFINITY, f64::min),
                "max": y.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                "decay_fit": fit,
            }),
        );
        if plots {
            plot_channel(&series, name, &out.join(format!("{name}.svg")))?;
        }
    }
    let mut inequalities = Vec::new();
    if series.channel("mass").is_some() && series.channel("entropy").is_some() {
        let s = full_run_summary(&series);
        inequalities.push(json!({"check": "mass drift ≤ 1e-3", "value": s["mass_drift"], "pass": s["mass_drift_ok"]}));
        inequalities.push(json!({"check": "entropy nonincreasing", "value": s["entropy_max_relative_increase"], "pass": s["entropy_nonincreasing"]}));
        inequalities.push(json!({"check": "L1/L2 functional ≤ E(F0)", "value": s["l1l2_max"], "pass": s["l1l2_bounded"]}));
        inequalities.push(json!({"check": "R(f) ratio ≥ 0.5 after warm-up", "value": s["rf_warm_up_time"], "pass": !s["rf_warm_up_time"].is_null()}));
    }
    let body = json!({
        "input": input.display().to_string(),
        "config_hash": series.config_hash(),
        "seed": series.seed(),
        "samples": series.len(),
        "channels": channels,
        "inequalities": inequalities,
    });
    write_json_file(&out.join("report.json"), &body)
}
