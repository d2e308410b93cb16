//! Space-time rescaling regimes for the magnetization chain.

use crate::error::Error;
use crate::model::ModelParams;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Which scaling limit a run targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeKind {
    /// Unrescaled chain `m_n(t)`; path-space LDP at speed `n`.
    Ldp,
    /// Moderate deviations: `b_n (m_n(b_n^{2k} t) - m)` at speed `n b_n^{-2(k+1)}`.
    Mdp { k: u32 },
    /// Central limit scaling: `n^{1/(2k+2)} (m_n(n^{k/(k+1)} t) - m)`.
    Clt { k: u32 },
    /// Critical MDP with `β = 1 + κ b_n^{-2}`, clock `b_n² t`, scale `b_n`.
    TempRescaledMdp { kappa: f64 },
    /// Critical CLT with `β = 1 + κ n^{-1/2}`, clock `n^{1/2} t`, scale `n^{1/4}`.
    TempRescaledClt { kappa: f64 },
}

/// A fully specified rescaling: kind, `b_n` where applicable, centering point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    #[serde(flatten)]
    pub kind: RegimeKind,
    /// `b_n` for the MDP kinds; unused otherwise.
    pub bn: Option<f64>,
    /// Centering point `m` (a fixed point of the mean-field flow).
    pub center: f64,
    /// When false, [`ScalingRegime::admissible`] always passes. Reserved for
    /// diagnostics (small-`n` exactness checks, degenerate identities) that
    /// deliberately run outside the admissible range.
    #[serde(default = "default_true")]
    pub enforce_admissibility: bool,
}

fn default_true() -> bool {
    true
}

/// Largest allowed `b_n^{2(k+1)}/n`, the finite-`n` proxy for the vanishing
/// ratio required of an admissible MDP sequence.
pub const ADMISSIBLE_RATIO: f64 = 0.1;
/// Smallest allowed `b_n`, the finite-`n` proxy for `b_n → ∞`.
pub const MIN_BN: f64 = 2.0;

impl ScalingRegime {
    pub fn ldp() -> Self {
        Self { kind: RegimeKind::Ldp, bn: None, center: 0.0, enforce_admissibility: true }
    }

    pub fn mdp(k: u32, bn: f64, center: f64) -> Result<Self> {
        if !(bn > 0.0) || !bn.is_finite() {
            return Err(Error::config(format!("b_n must be positive, got {bn}")));
        }
        Ok(Self { kind: RegimeKind::Mdp { k }, bn: Some(bn), center, enforce_admissibility: true })
    }

    pub fn clt(k: u32, center: f64) -> Self {
        Self { kind: RegimeKind::Clt { k }, bn: None, center, enforce_admissibility: true }
    }

    pub fn temp_mdp(kappa: f64, bn: f64) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::config(format!("kappa must be >= 0, got {kappa}")));
        }
        if !(bn > 0.0) || !bn.is_finite() {
            return Err(Error::config(format!("b_n must be positive, got {bn}")));
        }
        Ok(Self {
            kind: RegimeKind::TempRescaledMdp { kappa },
            bn: Some(bn),
            center: 0.0,
            enforce_admissibility: true,
        })
    }

    pub fn temp_clt(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::config(format!("kappa must be >= 0, got {kappa}")));
        }
        Ok(Self {
            kind: RegimeKind::TempRescaledClt { kappa },
            bn: None,
            center: 0.0,
            enforce_admissibility: true,
        })
    }

    /// Same as the checked constructors but with admissibility enforcement
    /// switched off; for diagnostics only.
    pub fn diagnostic(mut self) -> Self {
        self.enforce_admissibility = false;
        self
    }

    /// Check the admissibility proxies `b_n >= 2`, `b_n^{2(k+1)}/n <= 0.1`.
    pub fn admissible(&self, n: u64) -> Result<()> {
        if !self.enforce_admissibility {
            return Ok(());
        }
        let check = |bn: f64, k: u32| -> Result<()> {
            if bn < MIN_BN {
                return Err(Error::config(format!("b_n = {bn} below the proxy bound {MIN_BN}")));
            }
            let ratio = bn.powi(2 * (k as i32 + 1)) / n as f64;
            if ratio > ADMISSIBLE_RATIO {
                return Err(Error::config(format!(
                    "inadmissible sequence: b_n^{}/n = {ratio:.4} > {ADMISSIBLE_RATIO}",
                    2 * (k + 1)
                )));
            }
            Ok(())
        };
        match self.kind {
            RegimeKind::Mdp { k } => check(self.bn.unwrap_or(0.0), k),
            RegimeKind::TempRescaledMdp { .. } => check(self.bn.unwrap_or(0.0), 1),
            _ => Ok(()),
        }
    }

    /// Spatial magnification: fluctuations are reported as `scale · (x - m)`.
    pub fn space_scale(&self, n: u64) -> f64 {
        match self.kind {
            RegimeKind::Ldp => 1.0,
            RegimeKind::Mdp { .. } | RegimeKind::TempRescaledMdp { .. } => self.bn.unwrap(),
            RegimeKind::Clt { k } => (n as f64).powf(1.0 / (2.0 * k as f64 + 2.0)),
            RegimeKind::TempRescaledClt { .. } => (n as f64).powf(0.25),
        }
    }

    /// Clock speed-up: one unit of rescaled time is `dilation` chain time.
    pub fn time_dilation(&self, n: u64) -> f64 {
        match self.kind {
            RegimeKind::Ldp => 1.0,
            RegimeKind::Mdp { k } => self.bn.unwrap().powi(2 * k as i32),
            RegimeKind::TempRescaledMdp { .. } => self.bn.unwrap().powi(2),
            RegimeKind::Clt { k } => (n as f64).powf(k as f64 / (k as f64 + 1.0)),
            RegimeKind::TempRescaledClt { .. } => (n as f64).sqrt(),
        }
    }

    /// Large-deviation speed `r(n)`; `None` for the weak-convergence regimes.
    pub fn speed(&self, n: u64) -> Option<f64> {
        match self.kind {
            RegimeKind::Ldp => Some(n as f64),
            RegimeKind::Mdp { k } => {
                Some(n as f64 * self.bn.unwrap().powi(-2 * (k as i32 + 1)))
            }
            RegimeKind::TempRescaledMdp { .. } => Some(n as f64 * self.bn.unwrap().powi(-4)),
            RegimeKind::Clt { .. } | RegimeKind::TempRescaledClt { .. } => None,
        }
    }

    /// Parameters actually driving the chain at volume `n`: the temperature
    /// rescaled kinds run at `β = 1 + κ b_n^{-2}` (MDP) or `β = 1 + κ n^{-1/2}`
    /// (CLT); all other kinds use the supplied base potential.
    pub fn effective_params(&self, base: &ModelParams, n: u64) -> Result<ModelParams> {
        match self.kind {
            RegimeKind::TempRescaledMdp { kappa } => {
                ModelParams::temp_rescaled(kappa, self.bn.unwrap())
            }
            RegimeKind::TempRescaledClt { kappa } => {
                ModelParams::temp_rescaled(kappa, (n as f64).powf(0.25))
            }
            _ => Ok(base.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mdp_admissibility_proxy() {
        let r = ScalingRegime::mdp(0, 10.0, 0.0).unwrap();
        assert!(r.admissible(1000).is_ok()); // 100/1000 = 0.1 inclusive
        assert!(r.admissible(999).is_err());
        let r = ScalingRegime::mdp(0, 1.5, 0.0).unwrap();
        assert!(r.admissible(1_000_000).is_err()); // below MIN_BN
        assert!(r.diagnostic().admissible(10).is_ok());
    }

    #[test]
    fn negative_kappa_rejected() {
        assert!(ScalingRegime::temp_mdp(-1.0, 4.0).is_err());
        assert!(ScalingRegime::temp_clt(-0.1).is_err());
    }

    #[test]
    fn clt_scales() {
        let r = ScalingRegime::clt(0, 0.0);
        assert_eq!(r.space_scale(10_000), 100.0);
        assert_eq!(r.time_dilation(10_000), 1.0);
        let r = ScalingRegime::clt(1, 0.0);
        assert_eq!(r.space_scale(10_000), 10.0);
        assert_eq!(r.time_dilation(10_000), 100.0);
        assert!(r.speed(10_000).is_none());
    }

    #[test]
    fn mdp_speed() {
        let r = ScalingRegime::mdp(0, 10.0, 0.0).unwrap();
        assert_eq!(r.speed(100_000), Some(1000.0));
        assert_eq!(r.time_dilation(100_000), 1.0);
        let r = ScalingRegime::mdp(1, 3.0, 0.0).unwrap();
        assert_eq!(r.time_dilation(100_000), 9.0);
        assert!((r.speed(100_000).unwrap() - 100_000.0 / 81.0).abs() < 1e-9);
    }

    #[test]
    fn temp_rescaled_effective_beta() {
        let base = ModelParams::curie_weiss(1.0).unwrap();
        let r = ScalingRegime::temp_mdp(2.0, 4.0).unwrap();
        let eff = r.effective_params(&base, 10_000).unwrap();
        assert!((eff.effective_beta().unwrap() - 1.125).abs() < 1e-15);
        let r = ScalingRegime::temp_clt(1.0).unwrap();
        let eff = r.effective_params(&base, 10_000).unwrap();
        assert!((eff.effective_beta().unwrap() - 1.01).abs() < 1e-15);
    }
}
