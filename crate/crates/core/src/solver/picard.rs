use super::scheme::KineticSystem;
use super::{DampingMode, SolverError};
use crate::collision::LinearOperatorMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardConfig {
    pub dt: f64,
    /// Time horizon of the mild form.
    pub horizon: f64,
    pub max_iter: usize,
    /// Stop once the sup distance of successive iterates falls below
    /// `tol·max(‖h₀‖∞, 1e-300)`.
    pub tol: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 0.05,
            max_iter: 30,
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PicardOutcome {
    Converged,
    /// Residuals decreased throughout but the tolerance was not reached.
    IterationLimit,
    /// A residual failed to decrease or became non-finite.
    NonContractive,
}

#[derive(Clone, Debug)]
pub struct PicardResult {
    pub outcome: PicardOutcome,
    /// `h(t_n)` of the last iterate at `t_n = n·dt`.
    pub trajectory: Vec<Vec<f64>>,
    /// `max_n ‖h^{m+1}(t_n) − h^m(t_n)‖∞` for `m = 0, 1, …`.
    pub residuals: Vec<f64>,
    /// `residuals[m] / residuals[m − 1]`.
    pub ratios: Vec<f64>,
    /// `max_n ‖e^{−Φ/2} w Γ(h¹/w, h¹/w)(t_n)‖∞`, the first nonlinear term.
    pub first_nonlinear: f64,
}

impl PicardResult {
    /// Whether the first `iterates` ratios all stay below `bound`; a run that
    /// converged sooner counts when its ratios do.
    pub fn contracts(&self, bound: f64, iterates: usize) -> bool {
        let enough = self.outcome == PicardOutcome::Converged || self.ratios.len() >= iterates;
        let n = self.ratios.len().min(iterates);
        enough
            && self.outcome != PicardOutcome::NonContractive
            && self.ratios[..n].iter().all(|q| *q < bound)
    }

    pub fn into_result(self) -> Result<Self, SolverError> {
        match self.outcome {
            PicardOutcome::Converged | PicardOutcome::IterationLimit => Ok(self),
            PicardOutcome::NonContractive => Err(SolverError::NonContractive(format!(
                "residuals {:?}",
                self.residuals
            ))),
        }
    }
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Nonlinear and linear source of the mild form,
/// `(e^{−Φ} K_w h, e^{−Φ/2} w Γ(h/w, h/w))`.
fn sources(sys: &KineticSystem, lin: &LinearOperatorMatrix, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nx = sys.nx();
    let w = sys.weight();
    let ephi = sys.exp_minus_phi();
    let mut k = lin.apply_kw(h, w, nx);
    for row in k.chunks_exact_mut(nx) {
        for (x, val) in row.iter_mut().enumerate() {
            *val *= ephi[x];
        }
    }
    let f = sys.unweighted(h);
    let mut g = sys.collision().gamma(&f, &f, nx);
    for (row, wrow) in g.chunks_exact_mut(nx).zip(w.chunks_exact(nx)) {
        for (x, val) in row.iter_mut().enumerate() {
            *val *= ephi[x].sqrt() * wrow[x];
        }
    }
    (k, g)
}

/// Picard iteration of the mild form
/// `h = S(t) h₀ + ∫₀ᵗ S(t−s)[e^{−Φ} K_w h + e^{−Φ/2} w Γ(h/w, h/w)](s) ds`
/// starting from `h⁰ ≡ 0`, with `S` the `e^{−Φ}ν`-damped semigroup and the
/// time integral by the trapezoid recursion
/// `h(t_{n+1}) = S(dt)[h(t_n) + dt/2 g(t_n)] + dt/2 g(t_{n+1})`.
pub fn picard_mild_iteration(
    sys: &KineticSystem,
    lin: &LinearOperatorMatrix,
    h0: &[f64],
    cfg: &PicardConfig,
) -> Result<PicardResult, SolverError> {
    if !(cfg.dt > 0.0 && cfg.horizon > 0.0 && cfg.tol > 0.0 && cfg.max_iter > 0) {
        return Err(SolverError::InvalidConfig(
            "Picard iteration needs positive dt, horizon, tolerance and max_iter".into(),
        ));
    }
    if lin.grid() != sys.collision().grid() {
        return Err(SolverError::Dimension(
            "linear operator was assembled on a different velocity grid".into(),
        ));
    }
    let nt = (cfg.horizon / cfg.dt).round().max(1.0) as usize;
    let size = sys.nx() * sys.nv();
    if h0.len() != size {
        return Err(SolverError::Dimension(format!(
            "h₀ has {} values, grids need {size}",
            h0.len()
        )));
    }
    let scale = sup(h0).max(1e-300);
    let mut current: Vec<Vec<f64>> = vec![vec![0.0; size]; nt + 1];
    let mut source: Vec<Vec<f64>> = vec![vec![0.0; size]; nt + 1];
    let mut residuals = Vec::new();
    let mut ratios = Vec::new();
    let mut first_nonlinear = 0.0;
    let half = 0.5 * cfg.dt;
    for m in 0..cfg.max_iter {
        let mut next = Vec::with_capacity(nt + 1);
        next.push(h0.to_vec());
        for n in 0..nt {
            let mut pre = next[n].clone();
            for (a, g) in pre.iter_mut().zip(&source[n]) {
                *a += half * g;
            }
            let mut h = sys.semigroup_step(&pre, cfg.dt, DampingMode::Nu, None)?;
            for (a, g) in h.iter_mut().zip(&source[n + 1]) {
                *a += half * g;
            }
            next.push(h);
        }
        let r = next
            .iter()
            .zip(&current)
            .map(|(a, b)| sup_diff(a, b))
            .fold(0.0, f64::max);
        residuals.push(r);
        if m > 0 {
            ratios.push(r / residuals[m - 1]);
        }
        current = next;
        let bad = !r.is_finite() || (m > 0 && r >= residuals[m - 1]);
        if bad {
            return Ok(PicardResult {
                outcome: PicardOutcome::NonContractive,
                trajectory: current,
                residuals,
                ratios,
                first_nonlinear,
            });
        }
        if r <= cfg.tol * scale {
            return Ok(PicardResult {
                outcome: PicardOutcome::Converged,
                trajectory: current,
                residuals,
                ratios,
                first_nonlinear,
            });
        }
        let mut nl_max: f64 = 0.0;
        for (n, h) in current.iter().enumerate() {
            let (mut k, g) = sources(sys, lin, h);
            nl_max = nl_max.max(sup(&g));
            for (a, b) in k.iter_mut().zip(&g) {
                *a += b;
            }
            source[n] = k;
        }
        if m == 0 {
            first_nonlinear = nl_max;
        }
    }
    Ok(PicardResult {
        outcome: PicardOutcome::IterationLimit,
        trajectory: current,
        residuals,
        ratios,
        first_nonlinear,
    })
}
