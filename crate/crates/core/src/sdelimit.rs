//! Limiting diffusions of the rescaled chain and their stationary laws.
//!
//! The CLT-scale fluctuations converge to
//!
//! ```text
//! dY = (2/(2k+1)!) Y^{2k+1} G2^{(2k+1)}(m) dt + 2 sqrt(G1(m)) dW,
//! ```
//!
//! and the temperature-rescaled critical fluctuations to
//! `dY = 2[κY - Y³/3] dt + 2 dW`. Stationary densities are computed from
//! first principles via the 1-D Fokker-Planck formula
//! `ρ(y) ∝ exp(∫ 2 b(u)/σ² du)`, not from any quoted constant; the one
//! published constant that disagrees with this computation is surfaced in
//! [`StationaryDensity::remark_constant`] rather than silently resolved.

use crate::error::Error;
use crate::hamiltonian::{make_hamiltonian, HamiltonianSpec, Poly};
use crate::model::ModelParams;
use crate::rng::rng_for;
use crate::simulator::{RegimeKind, ScalingRegime};
use crate::stats::Histogram;
use crate::Result;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Drift polynomial and constant diffusion coefficient of a limiting SDE.
#[derive(Debug, Clone, Serialize)]
pub struct DiffusionSpec {
    pub drift: Poly,
    /// Noise amplitude σ in `dY = b dt + σ dW`.
    pub sigma: f64,
    /// Flatness order of the generating regime, where applicable.
    pub k: Option<u32>,
    /// Centering point echo.
    pub m: f64,
}

impl DiffusionSpec {
    pub fn new(drift: Poly, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::config(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { drift, sigma, k: None, m: 0.0 })
    }

    pub fn drift_at(&self, y: f64) -> f64 {
        self.drift.eval(y)
    }

    /// Confining check: odd leading power with negative coefficient, or a
    /// strictly stable linear drift.
    pub fn is_confining(&self) -> bool {
        let c = &self.drift.coeffs;
        let deg = c.iter().rposition(|v| *v != 0.0);
        match deg {
            Some(d) if d % 2 == 1 => c[d] < 0.0,
            _ => false,
        }
    }
}

/// Limiting diffusion of a CLT-type regime: drift and noise from the
/// Hamiltonian coefficients (`σ = sqrt(2D)`).
pub fn diffusion_from_regime(
    params: &ModelParams,
    kind: &RegimeKind,
    m: f64,
) -> Result<DiffusionSpec> {
    let spec = make_hamiltonian(kind, params, m)?;
    let HamiltonianSpec::QuadraticMdp { drift, diffusion } = spec else {
        return Err(Error::config("no diffusion limit for the LDP regime".to_string()));
    };
    let k = match kind {
        RegimeKind::Mdp { k } | RegimeKind::Clt { k } => Some(*k),
        RegimeKind::TempRescaledMdp { .. } | RegimeKind::TempRescaledClt { .. } => Some(1),
        RegimeKind::Ldp => None,
    };
    Ok(DiffusionSpec { drift, sigma: (2.0 * diffusion).sqrt(), k, m })
}

/// Terminal-time ensemble of an Euler-Maruyama integration.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub terminal: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Paths flagged by the blow-up guard `|Y| > 1e6`.
    pub diverged: usize,
    /// 50-bin histogram of the terminal sample.
    pub histogram: Histogram,
}

/// Euler-Maruyama integration of `n_paths` independent paths to time `t`.
///
/// Per-path generators are derived from `(seed, path index)`; output order is
/// by path index regardless of scheduling.
pub fn integrate_sde(
    spec: &DiffusionSpec,
    y0: f64,
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<EnsembleSummary> {
    if !(dt > 0.0) || !(t >= 0.0) || n_paths == 0 {
        return Err(Error::config("need dt > 0, t >= 0, n_paths >= 1".to_string()));
    }
    let steps = (t / dt).ceil() as u64;
    let h = if steps == 0 { dt } else { t / steps as f64 };
    let sdt = h.sqrt() * spec.sigma;
    let results: Vec<(f64, bool)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let mut y = y0;
            let mut diverged = false;
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                y += spec.drift_at(y) * h + sdt * z;
                if y.abs() > 1e6 {
                    diverged = true;
                    break;
                }
            }
            (y, diverged)
        })
        .collect();
    let diverged = results.iter().filter(|r| r.1).count();
    let terminal: Vec<f64> = results.into_iter().map(|r| r.0).collect();
    let n = terminal.len() as f64;
    let mean = terminal.iter().sum::<f64>() / n;
    let variance = terminal.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let lo = terminal.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = terminal.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
    let histogram = Histogram::build(&terminal, lo - pad, hi + pad, 50)?;
    Ok(EnsembleSummary { terminal, mean, variance, n_paths, seed, diverged, histogram })
}

/// Sample one full path on the Euler-Maruyama grid.
pub fn sample_path(spec: &DiffusionSpec, y0: f64, t: f64, dt: f64, seed: u64) -> Vec<(f64, f64)> {
    let steps = (t / dt).ceil().max(1.0) as u64;
    let h = t / steps as f64;
    let sdt = h.sqrt() * spec.sigma;
    let mut rng = rng_for(seed, 0);
    let mut y = y0;
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push((0.0, y));
    for s in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        y += spec.drift_at(y) * h + sdt * z;
        out.push((s as f64 * h, y));
    }
    out
}

/// Stationary density on a symmetric grid, with the exponent kept explicit.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryDensity {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Exponent polynomial `Φ(y) = ∫ 2 b/σ²`: density ∝ exp(Φ).
    pub exponent: Poly,
    /// Half-width of the support window.
    pub half_width: f64,
    /// First-principles constant `c` in `ρ ∝ exp{-c y^{2k+2}/(2k+2)!}` when
    /// the drift is the pure monomial of a flatness-`k` regime; equals
    /// `|G2^{(2k+1)}(m)|/G1(m)`.
    pub computed_constant: Option<f64>,
    /// The published remark's constant `4 |G2^{(2k+1)}(m)|` for the same
    /// exponent; disagrees with the direct Fokker-Planck computation by a
    /// factor of `4 G1(m)` and is reported, not used.
    pub remark_constant: Option<f64>,
}

impl StationaryDensity {
    /// Interpolated density value.
    pub fn at(&self, y: f64) -> f64 {
        if y <= self.grid[0] || y >= *self.grid.last().unwrap() {
            return 0.0;
        }
        let h = self.grid[1] - self.grid[0];
        let idx = ((y - self.grid[0]) / h) as usize;
        let idx = idx.min(self.grid.len() - 2);
        let w = (y - self.grid[idx]) / h;
        self.density[idx] * (1.0 - w) + self.density[idx + 1] * w
    }

    /// Max relative residual of the stationary flux `σ²/2 ρ' - b ρ` on the
    /// interior grid, using a fourth-order derivative stencil.
    pub fn flux_residual(&self, spec: &DiffusionSpec) -> f64 {
        let h = self.grid[1] - self.grid[0];
        let scale = self
            .density
            .iter()
            .zip(&self.grid)
            .map(|(r, y)| (spec.sigma.powi(2) / 2.0) * r.abs() + spec.drift_at(*y).abs() * r)
            .fold(0.0_f64, f64::max);
        let mut worst = 0.0_f64;
        for i in 2..self.grid.len() - 2 {
            let d = (-self.density[i + 2] + 8.0 * self.density[i + 1] - 8.0 * self.density[i - 1]
                + self.density[i - 2])
                / (12.0 * h);
            let flux = spec.sigma.powi(2) / 2.0 * d - spec.drift_at(self.grid[i]) * self.density[i];
            worst = worst.max(flux.abs());
        }
        worst / scale.max(1e-300)
    }
}

/// Stationary density `ρ ∝ exp(∫ 2 b/σ²)` of a confining diffusion,
/// normalized by quadrature.
pub fn stationary_density(spec: &DiffusionSpec) -> Result<StationaryDensity> {
    if !spec.is_confining() {
        return Err(Error::domain(
            "stationary density requires confining drift (odd leading power, negative coefficient)"
                .to_string(),
        ));
    }
    let sigma2 = spec.sigma * spec.sigma;
    let exponent = spec.drift.primitive().scale(2.0 / sigma2);
    // Support half-width from the tail heuristic |b(L)| L > 40 σ².
    let mut half_width = 4.0;
    while spec.drift_at(half_width).abs() * half_width <= 40.0 * sigma2 && half_width < 1e6 {
        half_width *= 2.0;
    }
    const POINTS: usize = 8193;
    let grid: Vec<f64> = (0..POINTS)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (POINTS - 1) as f64)
        .collect();
    let phi_max = grid.iter().map(|y| exponent.eval(*y)).fold(f64::NEG_INFINITY, f64::max);
    let mut density: Vec<f64> = grid.iter().map(|y| (exponent.eval(*y) - phi_max).exp()).collect();
    // Composite Simpson normalization (POINTS is odd).
    let h = grid[1] - grid[0];
    let mut z = density[0] + density[POINTS - 1];
    for (i, d) in density.iter().enumerate().take(POINTS - 1).skip(1) {
        z += if i % 2 == 1 { 4.0 * d } else { 2.0 * d };
    }
    z *= h / 3.0;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::numeric("density normalization failed".to_string()));
    }
    density.iter_mut().for_each(|d| *d /= z);

    // Constants for the pure-monomial case, both in the normalization
    // ρ ∝ exp{-c y^{2k+2}/(2k+2)!}: the Fokker-Planck computation gives
    // c = |G2^{(2k+1)}(m)|/G1(m); the published remark states
    // c = 4 |G2^{(2k+1)}(m)|, off by the factor 4 G1(m).
    let (computed_constant, remark_constant) = match spec.k {
        Some(k) if monomial_degree(&spec.drift) == Some(2 * k as usize + 1) => {
            let deg = 2 * k as usize + 2;
            let computed = -exponent.coeffs[deg] * factorial_of(deg);
            // drift lead = (2/(2k+1)!) G2^{(2k+1)}  =>  |G2^{(2k+1)}| = |lead| (2k+1)!/2.
            let g2_deriv_abs = spec.drift.coeffs[deg - 1].abs() * factorial_of(deg - 1) / 2.0;
            (Some(computed), Some(4.0 * g2_deriv_abs))
        }
        _ => (None, None),
    };

    Ok(StationaryDensity {
        grid,
        density,
        exponent,
        half_width,
        computed_constant,
        remark_constant,
    })
}

fn factorial_of(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn monomial_degree(p: &Poly) -> Option<usize> {
    let nonzero: Vec<usize> =
        p.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, _)| i).collect();
    if nonzero.len() == 1 {
        Some(nonzero[0])
    } else {
        None
    }
}

/// Result of comparing a long-run Euler-Maruyama ensemble against the
/// Fokker-Planck stationary density.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramCheck {
    pub l1_distance: f64,
    pub n_samples: usize,
    pub bins: usize,
}

/// Simulate to `t_long`, harvest states at spaced times after `burn_in`, and
/// report the L¹ distance between the histogram and the stationary density.
pub fn long_run_histogram_check(
    spec: &DiffusionSpec,
    t_long: f64,
    burn_in: f64,
    n_paths: usize,
    bins: usize,
    seed: u64,
) -> Result<HistogramCheck> {
    if !(t_long > burn_in) {
        return Err(Error::config("need t_long > burn_in".to_string()));
    }
    let density = stationary_density(spec)?;
    let dt = 1e-3;
    let spacing = 5.0_f64.min(t_long - burn_in);
    let sample_times: Vec<f64> = {
        let mut v = Vec::new();
        let mut t = burn_in;
        while t <= t_long + 1e-9 {
            v.push(t);
            t += spacing;
        }
        v
    };
    let steps = (t_long / dt).ceil() as u64;
    let h = t_long / steps as f64;
    let sdt = h.sqrt() * spec.sigma;
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = rng_for(seed, i as u64);
            let mut y = 0.0_f64;
            let mut out = Vec::with_capacity(sample_times.len());
            let mut next = 0usize;
            for s in 0..steps {
                let t = s as f64 * h;
                while next < sample_times.len() && sample_times[next] <= t {
                    out.push(y);
                    next += 1;
                }
                let z: f64 = rng.sample(StandardNormal);
                y += spec.drift_at(y) * h + sdt * z;
            }
            while next < sample_times.len() {
                out.push(y);
                next += 1;
            }
            out
        })
        .collect();
    let hw = density.half_width.min(
        samples.iter().fold(0.0_f64, |a, s| a.max(s.abs())) + 1.0,
    );
    let hist = Histogram::build(&samples, -hw, hw, bins)?;
    let l1 = hist.l1_distance_to_density(|y| density.at(y));
    Ok(HistogramCheck { l1_distance: l1, n_samples: samples.len(), bins })
}

/// Build the regime-independent temperature-rescaled limiting SDE
/// `dY = 2[κY - Y³/3]dt + 2 dW`.
pub fn temp_rescaled_diffusion(kappa: f64) -> Result<DiffusionSpec> {
    if !(kappa >= 0.0) {
        return Err(Error::config(format!("kappa must be >= 0, got {kappa}")));
    }
    let mut spec =
        DiffusionSpec::new(Poly::new(vec![0.0, 2.0 * kappa, 0.0, -2.0 / 3.0]), 2.0)?;
    spec.k = Some(1);
    Ok(spec)
}

/// Convenience: the supercritical CLT diffusion at `β`, centered at `+m_β`.
pub fn supercritical_diffusion(beta: f64) -> Result<(DiffusionSpec, f64)> {
    let params = ModelParams::curie_weiss(beta)?;
    let report = crate::model::find_fixed_points(&params)?;
    let m = report
        .positive_root()
        .ok_or_else(|| Error::config(format!("beta = {beta} has no positive fixed point")))?
        .m;
    Ok((diffusion_from_regime(&params, &RegimeKind::Clt { k: 0 }, m)?, m))
}

/// Convenience: regime echo for a ScalingRegime value.
pub fn diffusion_for_scaling(params: &ModelParams, regime: &ScalingRegime) -> Result<DiffusionSpec> {
    diffusion_from_regime(params, &regime.kind, regime.center)
}
