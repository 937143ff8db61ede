//! Scenario files: strict TOML with documented defaults.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collision::{AngularKernel, KernelSpec, VelocityGrid};
use crate::error::{Error, Result};
use crate::fields::{PotentialField, PotentialKind, WeightSpec};
use crate::geometry::{LevelSetDomain, Vec3};
use crate::solver::{DampingMode, InterpOrder, KineticSystem, PicardConfig, SchemeConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipsoid {
        radii: [f64; 3],
    },
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Ball { radius: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero {},
    Harmonic {
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Gaussian {
        amplitude: f64,
        #[serde(default)]
        center: [f64; 3],
        width: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub gamma: f64,
    /// `b(c) = b_scale·|c|`.
    pub b_scale: f64,
    pub polar_nodes: usize,
    pub azimuth_nodes: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            b_scale: 1.0 / (4.0 * PI),
            polar_nodes: 2,
            azimuth_nodes: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub beta: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self { beta: 6.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub spatial_points: usize,
    pub velocity_cutoff: f64,
    pub velocity_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            spatial_points: 16,
            velocity_cutoff: 8.0,
            velocity_points: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Equilibrium {},
    /// `F₀ = μ_E(1 + εU)`.
    Random {
        #[serde(default = "half")]
        epsilon: f64,
    },
    /// `h₀` with `‖h₀‖∞ = amplitude`.
    SmallPerturbation {
        amplitude: f64,
        #[serde(default = "random_mode")]
        mode: String,
    },
    Bump {
        amplitude: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        velocity: [f64; 3],
        radius: f64,
    },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Zero {}
    }
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Equilibrium {}
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingName {
    None,
    Nu,
    Rf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSpec {
    pub dt: f64,
    pub t_end: f64,
    /// 1 (trilinear) or 3 (tricubic).
    pub order: u8,
    pub damping: DampingName,
    pub picard_max_iter: usize,
    pub picard_tol: f64,
    pub conservative: bool,
    pub output_every: usize,
}

impl Default for SchemeSpec {
    fn default() -> Self {
        let d = SchemeConfig::default();
        Self {
            dt: d.dt,
            t_end: d.t_end,
            order: 1,
            damping: DampingName::Nu,
            picard_max_iter: d.picard_max_iter,
            picard_tol: d.picard_tol,
            conservative: d.conservative,
            output_every: d.output_every,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSpec {
    pub horizon: f64,
    /// Amplitudes of the contraction sweep; empty runs the initial data only.
    pub sweep: Vec<f64>,
}

impl Default for PicardSpec {
    fn default() -> Self {
        Self {
            horizon: PicardConfig::default().horizon,
            sweep: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleSpec {
    pub t: f64,
    pub k: Vec<usize>,
    pub samples: usize,
    pub x: [f64; 3],
    pub v: [f64; 3],
}

impl Default for CycleSpec {
    fn default() -> Self {
        Self {
            t: 5.0,
            k: vec![5, 10, 20, 40],
            samples: 10_000,
            x: [0.0; 3],
            v: [1.0, 0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelCheckSpec {
    /// Velocity cutoffs of the spectral-gap stability check.
    pub cutoffs: Vec<f64>,
    pub velocity_points: usize,
}

impl Default for KernelCheckSpec {
    fn default() -> Self {
        Self {
            cutoffs: vec![8.0, 10.0],
            velocity_points: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    /// Write the state every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    pub plots: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            snapshot_every: 0,
            plots: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub domain: DomainSpec,
    pub potential: PotentialSpec,
    pub kernel: KernelConfig,
    pub weight: WeightConfig,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub scheme: SchemeSpec,
    pub picard: PicardSpec,
    pub cycles: CycleSpec,
    pub kernel_check: KernelCheckSpec,
    pub output: OutputSpec,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn random_mode() -> String {
    "random".into()
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

impl Scenario {
    /// Checks every invariant that does not need a built grid.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.weight.beta > 5.0) {
            return bad(format!("beta must exceed 5 (got {})", self.weight.beta));
        }
        if !(0.0..=1.0).contains(&self.kernel.gamma) {
            return bad(format!(
                "gamma must lie in [0, 1] (got {})",
                self.kernel.gamma
            ));
        }
        if !(self.kernel.b_scale > 0.0 && self.kernel.b_scale.is_finite()) {
            return bad(format!(
                "b_scale must be positive (got {})",
                self.kernel.b_scale
            ));
        }
        if !(self.scheme.dt > 0.0 && self.scheme.dt.is_finite()) {
            return bad(format!("dt must be positive (got {})", self.scheme.dt));
        }
        if !(self.scheme.t_end >= 0.0 && self.scheme.t_end.is_finite()) {
            return bad(format!(
                "t_end must be nonnegative (got {})",
                self.scheme.t_end
            ));
        }
        if self.scheme.order != 1 && self.scheme.order != 3 {
            return bad(format!("order must be 1 or 3 (got {})", self.scheme.order));
        }
        if self.scheme.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if !(self.picard.horizon > 0.0) {
            return bad(format!(
                "picard horizon must be positive (got {})",
                self.picard.horizon
            ));
        }
        if self.grid.spatial_points < 2 || self.grid.velocity_points < 2 {
            return bad("grids need at least 2 points per axis".into());
        }
        if !(self.grid.velocity_cutoff > 0.0) {
            return bad("velocity_cutoff must be positive".into());
        }
        if self.kernel_check.cutoffs.iter().any(|c| !(*c > 0.0)) {
            return bad("kernel_check cutoffs must be positive".into());
        }
        match &self.domain {
            DomainSpec::Ball { radius } if !(*radius > 0.0) => {
                return bad(format!("ball radius must be positive (got {radius})"))
            }
            DomainSpec::Ellipsoid { radii } if radii.iter().any(|r| !(*r > 0.0)) => {
                return bad(format!("ellipsoid radii must be positive (got {radii:?})"))
            }
            _ => {}
        }
        match &self.initial {
            InitialSpec::Random { epsilon } if !(0.0..=1.0).contains(epsilon) => {
                return bad(format!("random epsilon must lie in [0, 1] (got {epsilon})"))
            }
            InitialSpec::SmallPerturbation { amplitude, mode } => {
                if !(*amplitude >= 0.0) {
                    return bad(format!(
                        "perturbation amplitude must be nonnegative (got {amplitude})"
                    ));
                }
                if mode != "random" && mode != "cosine" {
                    return bad(format!(
                        "perturbation mode must be random or cosine (got {mode:?})"
                    ));
                }
            }
            InitialSpec::Bump {
                amplitude, radius, ..
            } if !(*amplitude > 0.0 && *radius > 0.0) => {
                return bad("bump amplitude and radius must be positive".into())
            }
            _ => {}
        }
        if self.picard.sweep.iter().any(|a| !(*a > 0.0)) {
            return bad("picard sweep amplitudes must be positive".into());
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form, output
    /// settings excluded.
    pub fn hash(&self) -> String {
        let mut s = self.clone();
        s.output = OutputSpec::default();
        let canonical = serde_json::to_string(&s).expect("scenario serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_domain(&self) -> Result<LevelSetDomain> {
        Ok(match &self.domain {
            DomainSpec::Ball { radius } => LevelSetDomain::ball(*radius)?,
            DomainSpec::Ellipsoid { radii } => LevelSetDomain::ellipsoid(*radii)?,
        })
    }

    pub fn build_potential(&self, domain: &LevelSetDomain) -> Result<PotentialField> {
        let kind = match &self.potential {
            PotentialSpec::Zero {} => return Ok(PotentialField::zero()),
            PotentialSpec::Harmonic { kappa, center } => PotentialKind::Harmonic {
                kappa: *kappa,
                center: vec3(*center),
            },
            PotentialSpec::Gaussian {
                amplitude,
                center,
                width,
            } => PotentialKind::Gaussian {
                amplitude: *amplitude,
                center: vec3(*center),
                width: *width,
            },
        };
        Ok(PotentialField::new(kind, domain)?)
    }

    pub fn build_kernel(&self) -> Result<KernelSpec> {
        Ok(KernelSpec::new(
            self.kernel.gamma,
            AngularKernel::AbsCos {
                scale: self.kernel.b_scale,
            },
            self.kernel.polar_nodes,
            self.kernel.azimuth_nodes,
        )?)
    }

    pub fn build_velocity_grid(&self, cutoff: f64, n: usize) -> Result<VelocityGrid> {
        Ok(VelocityGrid::new(cutoff, n)?)
    }

    pub fn order(&self) -> InterpOrder {
        if self.scheme.order == 3 {
            InterpOrder::Tricubic
        } else {
            InterpOrder::Trilinear
        }
    }

    pub fn build_system(&self) -> Result<KineticSystem> {
        let domain = self.build_domain()?;
        let pot = self.build_potential(&domain)?;
        Ok(KineticSystem::new(
            domain,
            pot,
            self.grid.spatial_points,
            self.build_velocity_grid(self.grid.velocity_cutoff, self.grid.velocity_points)?,
            self.build_kernel()?,
            WeightSpec::new(self.weight.beta)?,
            self.order(),
        )?)
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            dt: self.scheme.dt,
            t_end: self.scheme.t_end,
            order: self.order(),
            damping: match self.scheme.damping {
                DampingName::None => DampingMode::None,
                DampingName::Nu => DampingMode::Nu,
                DampingName::Rf => DampingMode::Rf,
            },
            picard_max_iter: self.scheme.picard_max_iter,
            picard_tol: self.scheme.picard_tol,
            conservative: self.scheme.conservative,
            seed: self.seed,
            output_every: self.scheme.output_every,
        }
    }

    pub fn picard_config(&self) -> PicardConfig {
        PicardConfig {
            dt: self.scheme.dt,
            horizon: self.picard.horizon,
            max_iter: self.scheme.picard_max_iter,
            tol: self.scheme.picard_tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario("seed = 3\n[initial]\nkind = \"equilibrium\"\n").unwrap();
        assert_eq!(s.seed, 3);
        assert_eq!(s.potential, PotentialSpec::Zero {});
        assert_eq!(s.grid, GridSpec::default());
        assert_eq!(s.domain, DomainSpec::Ball { radius: 1.0 });
        assert_eq!(parse_scenario("").unwrap(), Scenario::default());
    }

    #[test]
    fn invariants_are_enforced() {
        let e = parse_scenario("[weight]\nbeta = 4.0\n").unwrap_err();
        assert!(e.to_string().contains("beta must exceed 5"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let e = parse_scenario("[kernel]\ngamma = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("gamma"), "{e}");
        let e = parse_scenario("[scheme]\ndt = 0.0\n").unwrap_err();
        assert!(e.to_string().contains("dt must be positive"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_scenario("[scheme]\nd_t = 0.1\n").unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
        assert!(e.to_string().contains("d_t"), "{e}");
        let e = parse_scenario("[potential]\nkind = \"zero\"\nkappa = 2.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse(_)), "{e}");
        let e = parse_scenario("sed = 1\n").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }

    #[test]
    fn tagged_blocks_parse() {
        let s = parse_scenario(
            "[potential]\nkind = \"harmonic\"\nkappa = 2.0\n[initial]\nkind = \"bump\"\namplitude = 5.0\nradius = 0.05\n",
        )
        .unwrap();
        assert_eq!(
            s.potential,
            PotentialSpec::Harmonic {
                kappa: 2.0,
                center: [0.0; 3]
            }
        );
        assert!(matches!(s.initial, InitialSpec::Bump { amplitude, .. } if amplitude == 5.0));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Scenario::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.scheme.dt = 0.02;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
