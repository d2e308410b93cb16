//! Run configuration: one JSON document, one experiment per invocation.

use cw_core::genconv::TestFunction;
use cw_core::hamiltonian::{make_hamiltonian, HamiltonianSpec};
use cw_core::model::{self, ModelParams, PotentialKind};
use cw_core::simulator::{RegimeKind, ScalingRegime};
use serde::{Deserialize, Serialize};

/// A Hamiltonian/diffusion spec named by potential, regime kind and centering.
/// `center: null` resolves to the positive fixed point when one exists,
/// otherwise to 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecSource {
    pub potential: PotentialKind,
    pub regime: RegimeKind,
    #[serde(default)]
    pub center: Option<f64>,
}

impl SpecSource {
    pub fn params(&self) -> cw_core::Result<ModelParams> {
        let p = ModelParams { potential: self.potential.clone() };
        p.validate()?;
        Ok(p)
    }

    pub fn resolve_center(&self, params: &ModelParams) -> cw_core::Result<f64> {
        if let Some(c) = self.center {
            return Ok(c);
        }
        match self.regime {
            RegimeKind::Mdp { .. } | RegimeKind::Clt { .. } => {
                let report = model::find_fixed_points(params)?;
                Ok(report.positive_root().map_or(0.0, |r| r.m))
            }
            _ => Ok(0.0),
        }
    }

    pub fn hamiltonian(&self) -> cw_core::Result<(ModelParams, f64, HamiltonianSpec)> {
        let params = self.params()?;
        let center = self.resolve_center(&params)?;
        let spec = make_hamiltonian(&self.regime, &params, center)?;
        Ok((params, center, spec))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpCfg {
    pub center: f64,
    pub width: f64,
    #[serde(default = "one")]
    pub height: f64,
}

impl BumpCfg {
    pub fn to_test_function(&self) -> TestFunction {
        TestFunction::bump(self.center, self.width, self.height)
    }
}

fn one() -> f64 {
    1.0
}

fn default_n_paths() -> usize {
    1
}

fn default_window() -> f64 {
    3.0
}

fn default_reps() -> u32 {
    20
}

fn default_dt() -> f64 {
    1e-3
}

fn default_mesh() -> usize {
    4096
}

fn default_halfwidth() -> f64 {
    6.0
}

fn default_points() -> usize {
    601
}

fn default_max_abs() -> f64 {
    1e6
}

fn default_grid_points() -> usize {
    4000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateCfg {
    pub potential: PotentialKind,
    /// Absent: simulate the unrescaled chain from the grid point `x0`.
    #[serde(default)]
    pub regime: Option<ScalingRegime>,
    pub n: u64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
    pub horizon: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub gzip: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenconvCfg {
    pub potential: PotentialKind,
    pub regime: RegimeKind,
    #[serde(default)]
    pub center: Option<f64>,
    pub ns: Vec<u64>,
    /// Per-rung `b_n`; defaults to the tuned per-regime ladder rule.
    #[serde(default)]
    pub bn: Option<Vec<f64>>,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub bumps: Option<Vec<BumpCfg>>,
    /// Emit per-rung pointwise CSV profiles.
    #[serde(default)]
    pub profiles: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChainRoute {
    /// Event-driven replicas of the jump chain.
    #[default]
    Events,
    /// Exact marginal law by uniformization, sampled i.i.d.
    Law,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltCompareCfg {
    pub potential: PotentialKind,
    pub regime: RegimeKind,
    #[serde(default)]
    pub center: Option<f64>,
    pub n: u64,
    pub horizon: f64,
    pub replicas: usize,
    #[serde(default = "default_reps")]
    pub repetitions: u32,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub route: ChainRoute,
    #[serde(default = "default_halfwidth")]
    pub law_halfwidth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathCfg {
    /// Time-reversed relaxation ending at `target`.
    ReversedRelaxation { target: f64 },
    /// Constant path at `at`.
    Constant { at: f64 },
    /// Straight line between two points.
    Linear { from: f64, to: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionCfg {
    pub spec: SpecSource,
    pub path: PathCfg,
    pub horizon: f64,
    #[serde(default)]
    pub i0: f64,
    #[serde(default = "default_mesh")]
    pub mesh: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalPathCfg {
    pub spec: SpecSource,
    pub x_start: f64,
    pub x_end: f64,
    pub horizon: f64,
    #[serde(default = "default_mesh")]
    pub mesh: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasipotentialCfg {
    pub spec: SpecSource,
    #[serde(default = "lo_default")]
    pub lo: f64,
    #[serde(default = "hi_default")]
    pub hi: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn lo_default() -> f64 {
    -3.0
}

fn hi_default() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdeCfg {
    pub spec: SpecSource,
    #[serde(default)]
    pub y0: f64,
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub n_paths: usize,
    /// Number of full paths to dump alongside the terminal ensemble.
    #[serde(default)]
    pub full_paths: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryCfg {
    pub spec: SpecSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContainmentCfg {
    /// Absent: the four standard quadratic Hamiltonians (subcritical β=0.5,
    /// critical, supercritical β=1.5, temperature-rescaled κ=1).
    #[serde(default)]
    pub specs: Option<Vec<SpecSource>>,
    #[serde(default = "default_max_abs")]
    pub max_abs: f64,
    #[serde(default = "default_grid_points")]
    pub points_per_side: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Table1Cfg {}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Simulate(SimulateCfg),
    Genconv(GenconvCfg),
    CltCompare(CltCompareCfg),
    Action(ActionCfg),
    OptimalPath(OptimalPathCfg),
    Quasipotential(QuasipotentialCfg),
    Sde(SdeCfg),
    Stationary(StationaryCfg),
    Containment(ContainmentCfg),
    Table1(Table1Cfg),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Simulate(_) => "simulate",
            ExperimentConfig::Genconv(_) => "genconv",
            ExperimentConfig::CltCompare(_) => "clt-compare",
            ExperimentConfig::Action(_) => "action",
            ExperimentConfig::OptimalPath(_) => "optimal-path",
            ExperimentConfig::Quasipotential(_) => "quasipotential",
            ExperimentConfig::Sde(_) => "sde",
            ExperimentConfig::Stationary(_) => "stationary",
            ExperimentConfig::Containment(_) => "containment",
            ExperimentConfig::Table1(_) => "table1",
        }
    }

    /// Collect configuration violations without running anything.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let check_potential = |p: &PotentialKind| -> Option<String> {
            let params = ModelParams { potential: p.clone() };
            params.validate().err().map(|e| e.to_string())
        };
        match self {
            ExperimentConfig::Simulate(c) => {
                v.extend(check_potential(&c.potential));
                if let Some(r) = &c.regime {
                    if let Err(e) = check_regime_kind(&r.kind) {
                        v.push(e);
                    }
                    if let Err(e) = r.admissible(c.n) {
                        v.push(e.to_string());
                    }
                }
                if c.horizon < 0.0 {
                    v.push(format!("horizon must be >= 0, got {}", c.horizon));
                }
            }
            ExperimentConfig::Genconv(c) => {
                v.extend(check_potential(&c.potential));
                if let Err(e) = check_regime_kind(&c.regime) {
                    v.push(e);
                }
                if c.ns.windows(2).any(|w| w[1] <= w[0]) {
                    v.push("ladder volumes must be strictly increasing".to_string());
                }
                if let Some(bn) = &c.bn {
                    if bn.len() != c.ns.len() {
                        v.push("bn list must match ns in length".to_string());
                    }
                    for (&n, &b) in c.ns.iter().zip(bn) {
                        if let Ok(r) = build_regime(&c.regime, b, c.center.unwrap_or(0.0)) {
                            if let Err(e) = r.admissible(n) {
                                v.push(format!("rung n={n}: {e}"));
                            }
                        }
                    }
                }
            }
            ExperimentConfig::CltCompare(c) => {
                v.extend(check_potential(&c.potential));
                if let Err(e) = check_regime_kind(&c.regime) {
                    v.push(e);
                }
                if !matches!(c.regime, RegimeKind::Clt { .. } | RegimeKind::TempRescaledClt { .. })
                {
                    v.push("clt-compare requires a CLT-type regime".to_string());
                }
                if c.replicas == 0 || c.repetitions == 0 {
                    v.push("replicas and repetitions must be positive".to_string());
                }
            }
            ExperimentConfig::Action(c) => {
                v.extend(check_potential(&c.spec.potential));
                if let Err(e) = check_regime_kind(&c.spec.regime) {
                    v.push(e);
                }
                if c.mesh < 2 {
                    v.push("mesh must be >= 2".to_string());
                }
            }
            ExperimentConfig::OptimalPath(c) => {
                v.extend(check_potential(&c.spec.potential));
                if let Err(e) = check_regime_kind(&c.spec.regime) {
                    v.push(e);
                }
                if c.mesh < 64 {
                    v.push("optimal-path mesh must be >= 64".to_string());
                }
                if c.horizon <= 0.0 {
                    v.push("horizon must be positive".to_string());
                }
            }
            ExperimentConfig::Quasipotential(c) => {
                v.extend(check_potential(&c.spec.potential));
                if let Err(e) = check_regime_kind(&c.spec.regime) {
                    v.push(e);
                }
                if c.points < 2 || !(c.hi > c.lo) {
                    v.push("need points >= 2 and hi > lo".to_string());
                }
            }
            ExperimentConfig::Sde(c) => {
                v.extend(check_potential(&c.spec.potential));
                if let Err(e) = check_regime_kind(&c.spec.regime) {
                    v.push(e);
                }
                if !(c.dt > 0.0) || c.n_paths == 0 {
                    v.push("need dt > 0 and n_paths >= 1".to_string());
                }
            }
            ExperimentConfig::Stationary(c) => {
                v.extend(check_potential(&c.spec.potential));
                if let Err(e) = check_regime_kind(&c.spec.regime) {
                    v.push(e);
                }
            }
            ExperimentConfig::Containment(c) => {
                if let Some(specs) = &c.specs {
                    for s in specs {
                        v.extend(check_potential(&s.potential));
                        if let Err(e) = check_regime_kind(&s.regime) {
                            v.push(e);
                        }
                    }
                }
            }
            ExperimentConfig::Table1(_) => {}
        }
        v
    }
}

fn check_regime_kind(kind: &RegimeKind) -> Result<(), String> {
    match kind {
        RegimeKind::TempRescaledMdp { kappa } | RegimeKind::TempRescaledClt { kappa } => {
            if *kappa >= 0.0 {
                Ok(())
            } else {
                Err(format!("kappa must be >= 0, got {kappa}"))
            }
        }
        _ => Ok(()),
    }
}

pub fn build_regime(kind: &RegimeKind, bn: f64, center: f64) -> cw_core::Result<ScalingRegime> {
    match kind {
        RegimeKind::Mdp { k } => ScalingRegime::mdp(*k, bn, center),
        RegimeKind::TempRescaledMdp { kappa } => ScalingRegime::temp_mdp(*kappa, bn),
        RegimeKind::Clt { k } => Ok(ScalingRegime::clt(*k, center)),
        RegimeKind::TempRescaledClt { kappa } => ScalingRegime::temp_clt(*kappa),
        RegimeKind::Ldp => Ok(ScalingRegime::ldp()),
    }
}

