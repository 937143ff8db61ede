//! Conserved and monotone quantities, norms, inequality monitors and decay
//! fits. All reductions run in a fixed order.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::collision::LinearOperatorMatrix;
use crate::solver::KineticSystem;

/// Channels of a nonlinear run, after `t`.
pub const FULL_COLUMNS: &[&str] = &[
    "mass",
    "entropy",
    "l2_norm",
    "winf_norm",
    "gamma_plus_norm",
    "rf_min_ratio",
    "l1l2",
];

/// Channels of a linear semigroup run, after `t`.
pub const LINEAR_COLUMNS: &[&str] = &["l2_norm", "winf_norm", "gamma_plus_norm"];

/// Below this ratio `F/μ_E` the entropy integrand takes its limit value.
pub const ENTROPY_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("negative distribution value {min:e}")]
    NegativeDistribution { min: f64 },
    #[error("channel {name} is not positive at t = {t}")]
    NonPositiveChannel { name: String, t: f64 },
    #[error("invalid series: {0}")]
    Series(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Time series with named channels and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsSeries {
    times: Vec<f64>,
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
    config_hash: String,
    seed: u64,
}

impl DiagnosticsSeries {
    pub fn new(columns: &[&str], config_hash: &str, seed: u64) -> Self {
        Self {
            times: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            data: vec![Vec::new(); columns.len()],
            config_hash: config_hash.to_string(),
            seed,
        }
    }

    pub fn push(&mut self, t: f64, row: &[f64]) -> Result<(), DiagnosticsError> {
        if row.len() != self.columns.len() {
            return Err(DiagnosticsError::Series(format!(
                "row has {} values for {} channels",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(DiagnosticsError::Series(format!(
                    "times must increase strictly ({t} after {last})"
                )));
            }
        }
        self.times.push(t);
        for (c, v) in self.data.iter_mut().zip(row) {
            c.push(*v);
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// CSV with `# config_hash=…` and `# seed=…` header lines. Numbers use
    /// the shortest round-trip form, so equal series give equal bytes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), DiagnosticsError> {
        writeln!(out, "# config_hash={}", self.config_hash)?;
        writeln!(out, "# seed={}", self.seed)?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(self.data.iter().map(|c| c[k].to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, DiagnosticsError> {
        let mut hash = String::new();
        let mut seed = 0;
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# config_hash=") {
                hash = rest.to_string();
            } else if let Some(rest) = line.strip_prefix("# seed=") {
                seed = rest
                    .parse()
                    .map_err(|_| DiagnosticsError::Series(format!("bad seed line {line:?}")))?;
            } else if !line.starts_with('#') {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        if header.get(0) != Some("t") {
            return Err(DiagnosticsError::Series("first column must be t".into()));
        }
        let cols: Vec<&str> = header.iter().skip(1).collect();
        let mut series = Self::new(&cols, &hash, seed);
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let vals: Result<Vec<f64>, _> = rec.iter().map(|s| s.parse::<f64>()).collect();
            let vals = vals.map_err(|e| DiagnosticsError::Series(e.to_string()))?;
            series.push(vals[0], &vals[1..])?;
        }
        Ok(series)
    }
}

fn csv_err(e: csv::Error) -> DiagnosticsError {
    DiagnosticsError::Series(e.to_string())
}

/// `Σ F w_x w_v`.
pub fn total_mass(sys: &KineticSystem, full: &[f64]) -> f64 {
    sys.transport().mass(full)
}

/// `∫ (F/μ_E log(F/μ_E) − F/μ_E + 1) μ_E`; where `F/μ_E` underflows the
/// integrand is `μ_E` (the limit `s log s → 0`).
pub fn relative_entropy(sys: &KineticSystem, full: &[f64]) -> Result<f64, DiagnosticsError> {
    let mu = sys.equilibrium();
    let max = full.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut density = Vec::with_capacity(full.len());
    for (f, m) in full.iter().zip(mu) {
        if *f < -1e-12 * max {
            return Err(DiagnosticsError::NegativeDistribution { min: *f });
        }
        let r = f.max(0.0) / m;
        density.push(if r < ENTROPY_FLOOR {
            *m
        } else {
            m * (r * r.ln() - r + 1.0)
        });
    }
    Ok(sys.transport().mass(&density))
}

/// `¼∫|f|² 1_{|f|≤√μ_E} + ¼∫√μ_E|f| 1_{|f|>√μ_E}` with `f = (F − μ_E)/√μ_E`.
pub fn l1l2_functional(sys: &KineticSystem, full: &[f64]) -> f64 {
    let f = sys.perturbation(full);
    let density: Vec<f64> = f
        .iter()
        .zip(sys.sqrt_equilibrium())
        .map(|(x, s)| {
            let a = x.abs();
            if a <= *s {
                0.25 * a * a
            } else {
                0.25 * s * a
            }
        })
        .collect();
    sys.transport().mass(&density)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1L2Report {
    pub lhs: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks the `L¹/L²` functional against `E(F₀) + tol`.
pub fn entropy_l1l2_check(sys: &KineticSystem, full: &[f64], e0: f64, tol: f64) -> L1L2Report {
    let lhs = l1l2_functional(sys, full);
    L1L2Report {
        lhs,
        bound: e0,
        holds: lhs <= e0 + tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub weighted_sup: f64,
    pub boundary_gamma_plus: f64,
}

/// Norms of a perturbation `f`: `‖f‖_{L²_{x,v}}`, `‖w f‖∞` and the outgoing
/// boundary norm `(∫_{γ₊} |f|² (n·v) dS dv)^{1/2}`.
pub fn norms(sys: &KineticSystem, f: &[f64]) -> Norms {
    let sq: Vec<f64> = f.iter().map(|x| x * x).collect();
    let l2 = sys.transport().mass(&sq).sqrt();
    let weighted_sup = f
        .iter()
        .zip(sys.weight())
        .fold(0.0f64, |m, (x, w)| m.max((x * w).abs()));
    Norms {
        l2,
        weighted_sup,
        boundary_gamma_plus: boundary_norm(sys, f),
    }
}

/// `(∫_{γ₊} |f|² (n·v) dS dv)^{1/2}` over the wall samples.
pub fn boundary_norm(sys: &KineticSystem, f: &[f64]) -> f64 {
    let areas = sys.transport().walls().areas();
    let mut per_sample = vec![0.0; areas.len()];
    for (s, _, val, c) in sys.transport().outgoing_trace(f) {
        per_sample[s] += val * val * c;
    }
    per_sample
        .iter()
        .zip(areas)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .sqrt()
}

/// `min_{x,v} R(f)/(e^{−Φ}ν)` with `R(f) = ν(F)`.
pub fn rf_lower_bound_monitor(sys: &KineticSystem, full: &[f64]) -> f64 {
    let nx = sys.nx();
    let r = sys.collision().nu_of(full, nx);
    let nu = sys.collision().nu();
    let ephi = sys.exp_minus_phi();
    let mut min = f64::INFINITY;
    for (j, row) in r.chunks_exact(nx).enumerate() {
        for (i, val) in row.iter().enumerate() {
            min = min.min(val / (ephi[i] * nu[j]));
        }
    }
    min
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRate {
    pub rate: f64,
    pub r_squared: f64,
    /// `log` of the fitted prefactor.
    pub intercept: f64,
}

/// Least-squares slope of `log y` against `t` over `t ∈ [t0, t1]`;
/// the rate is minus the slope.
pub fn fit_decay_rate(
    name: &str,
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<DecayRate, DiagnosticsError> {
    let mut pts = Vec::new();
    for (t, y) in times.iter().zip(values) {
        if *t < window.0 || *t > window.1 {
            continue;
        }
        if !(*y > 0.0) {
            return Err(DiagnosticsError::NonPositiveChannel {
                name: name.to_string(),
                t: *t,
            });
        }
        pts.push((*t, y.ln()));
    }
    if pts.len() < 2 {
        return Err(DiagnosticsError::Series(format!(
            "window [{}, {}] holds fewer than two samples",
            window.0, window.1
        )));
    }
    let (slope, intercept, r2) = crate::collision::linear_fit(&pts);
    Ok(DecayRate {
        rate: -slope,
        r_squared: r2,
        intercept,
    })
}

/// First output time after which `values` never drops below `threshold`.
pub fn warm_up_time(times: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    let last_bad = values.iter().rposition(|v| *v < threshold);
    match last_bad {
        None => times.first().copied(),
        Some(k) if k + 1 < times.len() => Some(times[k + 1]),
        Some(_) => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoercivityReport {
    pub kernel_eigenvalues: [f64; 5],
    pub spectral_gap: f64,
    /// Fitted `C_L` of `⟨Lf, f⟩ ≥ C_L ‖(I − P_L) f‖²`, the sixth eigenvalue.
    pub c_l: f64,
    pub largest_eigenvalue: f64,
    pub kernel_residuals: [f64; 5],
    pub raw_kernel_residual: f64,
    pub raw_asymmetry: f64,
    pub symmetry_residual: f64,
    pub nu0: f64,
}

pub fn coercivity_report(lin: &LinearOperatorMatrix) -> CoercivityReport {
    let spec = lin.spectrum();
    let mut ker = [0.0; 5];
    ker.copy_from_slice(&spec[..5]);
    CoercivityReport {
        kernel_eigenvalues: ker,
        spectral_gap: spec[5],
        c_l: spec[5],
        largest_eigenvalue: *spec.last().unwrap_or(&0.0),
        kernel_residuals: lin.kernel_residuals(),
        raw_kernel_residual: lin.raw_kernel_residual(),
        raw_asymmetry: lin.raw_asymmetry(),
        symmetry_residual: lin.symmetry_residual(),
        nu0: lin.nu0(),
    }
}

/// One row of [`FULL_COLUMNS`] for the state `F`.
pub(crate) fn full_row(
    sys: &KineticSystem,
    full: &[f64],
    e0: f64,
) -> Result<Vec<f64>, DiagnosticsError> {
    let _ = e0;
    let f = sys.perturbation(full);
    let n = norms(sys, &f);
    Ok(vec![
        total_mass(sys, full),
        relative_entropy(sys, full)?,
        n.l2,
        n.weighted_sup,
        n.boundary_gamma_plus,
        rf_lower_bound_monitor(sys, full),
        l1l2_functional(sys, full),
    ])
}

/// One row of [`LINEAR_COLUMNS`] for the weighted state `h`.
pub(crate) fn linear_row(sys: &KineticSystem, h: &[f64]) -> Vec<f64> {
    let f = sys.unweighted(h);
    let n = norms(sys, &f);
    vec![n.l2, n.weighted_sup, n.boundary_gamma_plus]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{KernelSpec, VelocityGrid};
    use crate::fields::{PotentialField, WeightSpec};
    use crate::geometry::LevelSetDomain;
    use crate::solver::InterpOrder;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sys(n: usize, vn: usize) -> KineticSystem {
        KineticSystem::new(
            LevelSetDomain::unit_ball(),
            PotentialField::zero(),
            n,
            VelocityGrid::new(8.0, vn).unwrap(),
            KernelSpec::hard_sphere().with_sphere_rule(1, 4).unwrap(),
            WeightSpec::new(6.0).unwrap(),
            InterpOrder::Trilinear,
        )
        .unwrap()
    }

    #[test]
    fn mass_of_equilibrium_and_zero() {
        let s = sys(16, 16);
        let m = total_mass(&s, s.equilibrium());
        // product oracle: ball volume times the Gaussian integral
        assert_relative_eq!(
            m,
            4.0 * PI / 3.0 * (2.0 * PI).powf(1.5),
            max_relative = 2e-3
        );
        assert_eq!(total_mass(&s, &vec![0.0; s.nx() * s.nv()]), 0.0);
    }

    #[test]
    fn entropy_values() {
        let s = sys(6, 12);
        let mu = s.equilibrium().to_vec();
        assert_eq!(relative_entropy(&s, &mu).unwrap(), 0.0);
        let two: Vec<f64> = mu.iter().map(|m| 2.0 * m).collect();
        let e = relative_entropy(&s, &two).unwrap();
        assert_relative_eq!(
            e,
            (2.0 * 2f64.ln() - 1.0) * total_mass(&s, &mu),
            max_relative = 1e-13
        );
        let zero = vec![0.0; mu.len()];
        assert_relative_eq!(
            relative_entropy(&s, &zero).unwrap(),
            total_mass(&s, &mu),
            max_relative = 1e-13
        );
        let mut neg = mu.clone();
        neg[0] = -1.0;
        assert!(relative_entropy(&s, &neg).is_err());
        // F = 2μ_E: f = √μ_E, so only the |f| ≤ √μ_E branch is active
        let rep = entropy_l1l2_check(&s, &two, e, 1e-8);
        assert_relative_eq!(rep.lhs, 0.25 * total_mass(&s, &mu), max_relative = 1e-13);
        assert!(rep.holds);
        assert_eq!(entropy_l1l2_check(&s, &mu, 0.0, 0.0).lhs, 0.0);
    }

    #[test]
    fn single_node_norms() {
        let s = sys(6, 12);
        let mut f = vec![0.0; s.nx() * s.nv()];
        let (j, i) = (5, 3);
        f[j * s.nx() + i] = 1.0;
        let n = norms(&s, &f);
        let w = s.transport().space().weights()[i] * s.collision().grid().weight();
        assert_relative_eq!(n.l2, w.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(
            n.weighted_sup,
            s.weight()[j * s.nx() + i],
            max_relative = 1e-14
        );
        let z = norms(&s, &vec![0.0; f.len()]);
        assert_eq!(
            (z.l2, z.weighted_sup, z.boundary_gamma_plus),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn decay_fit_on_synthetic_data() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.0 * (-2.0 * x).exp()).collect();
        let d = fit_decay_rate("y", &t, &y, (0.0, 10.0)).unwrap();
        assert!((d.rate - 2.0).abs() < 1e-10);
        assert!((d.r_squared - 1.0).abs() < 1e-12);
        let c = fit_decay_rate("c", &t, &vec![1.5; t.len()], (0.0, 10.0)).unwrap();
        assert!(c.rate.abs() < 1e-14);
        let mut bad = y.clone();
        bad[3] = 0.0;
        assert!(matches!(
            fit_decay_rate("y", &t, &bad, (0.0, 10.0)),
            Err(DiagnosticsError::NonPositiveChannel { .. })
        ));
    }

    #[test]
    fn rf_ratio_of_equilibrium_is_one() {
        let s = sys(4, 8);
        let r = rf_lower_bound_monitor(&s, s.equilibrium());
        assert_relative_eq!(r, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn series_round_trip() {
        let mut s = DiagnosticsSeries::new(&["a", "b"], "abc", 9);
        s.push(0.0, &[1.0, 2.5e-300]).unwrap();
        s.push(0.1, &[0.1 + 0.2, -3.0]).unwrap();
        assert!(s.push(0.1, &[0.0, 0.0]).is_err());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = DiagnosticsSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert_eq!(
            warm_up_time(&[0.0, 1.0, 2.0], &[0.2, 0.7, 0.8], 0.5),
            Some(1.0)
        );
        assert_eq!(warm_up_time(&[0.0, 1.0], &[0.2, 0.3], 0.5), None);
    }
}
