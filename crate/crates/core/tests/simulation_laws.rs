//! Law-level behavior of the simulated chain: law of large numbers against
//! the mean-field flow, Ornstein-Uhlenbeck-like relaxation of the rescaled
//! fluctuations, and a coarse decay-rate smoke test for stationary
//! exceedances.

use cw_core::model::{meanfield_flow, ModelParams};
use cw_core::simulator::{ensemble_mean_path, ensemble_terminal, ScalingRegime};
use cw_core::stats::decay_rate_fit;

#[test]
fn lln_mean_path_tracks_meanfield_flow() {
    // sup_{t<=1} |ensemble mean - ODE| decreases from n = 10³ to n = 10⁴.
    let params = ModelParams::curie_weiss(0.5).unwrap();
    let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    let ode = meanfield_flow(&params, 0.5, 1.0, 1e-3).unwrap();
    let ode_at = |t: f64| {
        let idx = (t / 1e-3).round() as usize;
        ode.values()[idx.min(ode.len() - 1)]
    };
    let mut sups = Vec::new();
    for n in [1_000u64, 10_000] {
        let mean = ensemble_mean_path(&params, n, 0.5, &times, 1500, 0x11).unwrap();
        let sup = times
            .iter()
            .zip(&mean)
            .map(|(t, m)| (m - ode_at(*t)).abs())
            .fold(0.0_f64, f64::max);
        sups.push(sup);
    }
    assert!(
        sups[1] < sups[0],
        "sup error should decrease with n: {sups:?}"
    );
    // Magnitudes consistent with O(1/n) bias plus Monte Carlo noise.
    assert!(sups[0] < 0.01 && sups[1] < 0.003, "{sups:?}");
}

#[test]
fn mdp_fluctuations_relax_at_linearized_rate() {
    // Subcritical MDP k=0: zero-cost drift is -2(1-β)y, so the ensemble mean
    // from y0 = 2 decays like 2 e^{-2(1-β)t}.
    let beta = 0.5;
    let params = ModelParams::curie_weiss(beta).unwrap();
    let regime = ScalingRegime::mdp(0, 10.0, 0.0).unwrap();
    let t = 1.0;
    let terminals =
        ensemble_terminal(&params, &regime, 10_000, 2.0, t, 2000, 0x22).unwrap();
    let mean = terminals.iter().sum::<f64>() / terminals.len() as f64;
    let expect = 2.0 * (-2.0 * (1.0 - beta) * t).exp();
    assert!(
        (mean - expect).abs() < 0.06,
        "mean {mean} vs OU prediction {expect}"
    );
}

#[test]
fn supercritical_fluctuation_variance_reaches_ou_value() {
    // CLT k=0 at β=1.5 around +m_β: the long-run variance of the rescaled
    // chain approaches the stationary value -G1(m)/G2'(m) of its limit.
    let beta = 1.5;
    let params = ModelParams::curie_weiss(beta).unwrap();
    let m = cw_core::model::find_fixed_points(&params).unwrap().positive_root().unwrap().m;
    let regime = ScalingRegime::clt(0, m);
    let terminals = ensemble_terminal(&params, &regime, 2000, 0.0, 3.0, 4000, 0x44).unwrap();
    let mean = terminals.iter().sum::<f64>() / terminals.len() as f64;
    let var =
        terminals.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / terminals.len() as f64;
    let g1 = cw_core::model::eval_g(&params, cw_core::model::GKind::G1, m).unwrap();
    let g2p = cw_core::model::g_derivative(&params, cw_core::model::GKind::G2, 1, m).unwrap();
    let target = -g1 / g2p;
    // 3σ Monte Carlo band plus room for the O(n^{-1/2}) prelimit bias.
    let band = 3.0 * target * (2.0_f64 / 4000.0).sqrt() + 0.05 * target;
    assert!((var - target).abs() < band, "var {var} vs stationary {target}");
}

#[test]
fn stationary_exceedance_decay_rate_smoke() {
    // P(|Y| > a) ≈ e^{-r(n) S(a)} with S(a) = (1-β)a²/2. Desk-scale speeds
    // r ∈ [2,8] sit outside the admissibility proxy (b_n²/n = 1/r > 0.1), so
    // the regimes run in diagnostic mode; the fitted slope is a coarse check,
    // within 50% of S(a).
    let beta = 0.5;
    let a = 1.0;
    let params = ModelParams::curie_weiss(beta).unwrap();
    let n = 2000u64;
    let mut points = Vec::new();
    for r in [2.0f64, 4.0, 6.0, 8.0] {
        let bn = (n as f64 / r).sqrt();
        let regime = ScalingRegime::mdp(0, bn, 0.0).unwrap().diagnostic();
        let terminals =
            ensemble_terminal(&params, &regime, n, 0.0, 8.0, 4000, 0x33 + r as u64).unwrap();
        let p = terminals.iter().filter(|y| y.abs() > a).count() as f64 / terminals.len() as f64;
        points.push((r, p));
    }
    let fit = decay_rate_fit(&points).unwrap();
    let s_a = (1.0 - beta) * a * a / 2.0;
    assert!(
        (fit.slope - s_a).abs() / s_a < 0.5,
        "slope {} vs quasi-potential {s_a}",
        fit.slope
    );
}
