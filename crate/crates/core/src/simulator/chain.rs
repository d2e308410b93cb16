//! Exact event-driven simulation of the magnetization jump chain.
//!
//! The chain lives on `E_n = {-1, -1+2/n, …, 1}`; a state with `j` up-spins
//! has magnetization `x = (2j - n)/n` and jump rates
//!
//! ```text
//! up:   n (1-x)/2 · e^{ U'(x)} = (n - j) e^{ U'(x)}   (x -> x + 2/n)
//! down: n (1+x)/2 · e^{-U'(x)} =      j  e^{-U'(x)}   (x -> x - 2/n)
//! ```
//!
//! so both boundary rates vanish identically and no jump can leave `[-1,1]`.
//! Simulation is the direct method: exponential holding time at the total
//! rate, then a direction chosen proportionally.

use super::regime::ScalingRegime;
use crate::error::Error;
use crate::model::ModelParams;
use crate::rng::rng_for;
use crate::Result;
use rand::Rng;
use rand_distr::Exp1;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

/// State of the magnetization chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainState {
    pub n: u64,
    /// Number of up-spins, in `[0, n]`.
    pub j: u64,
}

impl ChainState {
    /// Magnetization `x = (2j - n)/n`.
    pub fn x(&self) -> f64 {
        (2.0 * self.j as f64 - self.n as f64) / self.n as f64
    }

    /// Interpret `x` as an exact grid point of `E_n`.
    pub fn from_x(n: u64, x: f64) -> Result<Self> {
        let j_real = (1.0 + x) * n as f64 / 2.0;
        let j = j_real.round();
        if (j_real - j).abs() > 1e-9 * n as f64 || !(0.0..=n as f64).contains(&j) {
            return Err(Error::domain(format!("x = {x} is not a grid point of E_{n}")));
        }
        Ok(Self { n, j: j as u64 })
    }

    /// Nearest grid point to `x`, ties resolved toward `toward`.
    pub fn nearest(n: u64, x: f64, toward: f64) -> Self {
        let j_real = ((1.0 + x) * n as f64 / 2.0).clamp(0.0, n as f64);
        let lo = j_real.floor();
        let hi = j_real.ceil();
        let j = if lo == hi {
            lo
        } else {
            let (dl, dh) = (j_real - lo, hi - j_real);
            if (dl - dh).abs() < 1e-12 {
                // Exact tie: round toward the centering point.
                let j_toward = (1.0 + toward) * n as f64 / 2.0;
                if j_toward < j_real {
                    lo
                } else {
                    hi
                }
            } else if dl < dh {
                lo
            } else {
                hi
            }
        };
        Self { n, j: j as u64 }
    }
}

/// Jump rates of the generator at a state.
pub fn jump_rates(state: &ChainState, params: &ModelParams) -> (f64, f64) {
    let x = state.x();
    let u = params.u_prime(x);
    let up = (state.n - state.j) as f64 * u.exp();
    let down = state.j as f64 * (-u).exp();
    (up, down)
}

/// Precomputed per-state rates; the hot loops index these tables.
pub(crate) struct RateTable {
    pub n: u64,
    pub total: Vec<f64>,
    pub p_up: Vec<f64>,
}

impl RateTable {
    pub fn build(params: &ModelParams, n: u64) -> Self {
        let mut total = Vec::with_capacity(n as usize + 1);
        let mut p_up = Vec::with_capacity(n as usize + 1);
        for j in 0..=n {
            let (up, down) = jump_rates(&ChainState { n, j }, params);
            let tot = up + down;
            total.push(tot);
            p_up.push(if tot > 0.0 { up / tot } else { 0.0 });
        }
        Self { n, total, p_up }
    }

    /// Raw rates at `j` (recomputed; the tables store the reduced form).
    pub fn rates(&self, j: u64) -> (f64, f64) {
        let tot = self.total[j as usize];
        let up = tot * self.p_up[j as usize];
        (up, tot - up)
    }
}

/// Aggregates from one driven path.
#[derive(Debug, Clone, Copy)]
pub struct PathStats {
    pub j_final: u64,
    pub j_min: u64,
    pub j_max: u64,
    pub events: u64,
}

/// Drive the chain to `horizon` collecting extremes only. This is the hot
/// kernel: one exponential and one uniform draw per event.
fn drive_stats(
    table: &RateTable,
    j0: u64,
    horizon: f64,
    rng: &mut Xoshiro256PlusPlus,
) -> PathStats {
    let mut j = j0 as usize;
    let (mut j_min, mut j_max) = (j, j);
    let mut t = 0.0_f64;
    let mut events = 0u64;
    loop {
        let tot = table.total[j];
        if tot <= 0.0 {
            break;
        }
        let e: f64 = rng.sample(Exp1);
        t += e / tot;
        if t > horizon {
            break;
        }
        let u: f64 = rng.random();
        if u < table.p_up[j] {
            j += 1;
            if j > j_max {
                j_max = j;
            }
        } else {
            j -= 1;
            if j < j_min {
                j_min = j;
            }
        }
        events += 1;
    }
    PathStats { j_final: j as u64, j_min: j_min as u64, j_max: j_max as u64, events }
}

/// Drive the chain invoking `on_event(t, j)` after every accepted jump.
fn drive_events(
    table: &RateTable,
    j0: u64,
    horizon: f64,
    rng: &mut Xoshiro256PlusPlus,
    mut on_event: impl FnMut(f64, u64),
) -> u64 {
    let mut j = j0 as usize;
    let mut t = 0.0_f64;
    loop {
        let tot = table.total[j];
        if tot <= 0.0 {
            break;
        }
        let e: f64 = rng.sample(Exp1);
        t += e / tot;
        if t > horizon {
            break;
        }
        let u: f64 = rng.random();
        if u < table.p_up[j] {
            j += 1;
        } else {
            j -= 1;
        }
        on_event(t, j as u64);
    }
    j as u64
}

/// One realized path of the (rescaled) chain: jump times and post-jump values.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub regime: ScalingRegime,
    pub n: u64,
    pub seed: u64,
    /// Initial rescaled value (after grid rounding).
    pub y0: f64,
    /// Rescaled horizon.
    pub horizon: f64,
    /// Rescaled jump magnitude `2 · scale / n`.
    pub step: f64,
    /// `(rescaled jump time, post-jump rescaled value)`, strictly increasing.
    pub events: Vec<(f64, f64)>,
}

impl TrajectorySample {
    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn terminal_value(&self) -> f64 {
        self.events.last().map_or(self.y0, |e| e.1)
    }

    /// Value of the càdlàg path at time `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.events.partition_point(|e| e.0 <= t) {
            0 => self.y0,
            k => self.events[k - 1].1,
        }
    }

    /// `sup_{t <= horizon} |Y(t)|`, including the initial value.
    pub fn sup_abs(&self) -> f64 {
        self.events.iter().map(|e| e.1.abs()).fold(self.y0.abs(), f64::max)
    }
}

/// Exact simulation of the unrescaled chain from a grid point `x0`.
pub fn simulate_chain(
    params: &ModelParams,
    n: u64,
    x0: f64,
    horizon: f64,
    seed: u64,
) -> Result<TrajectorySample> {
    if !(horizon >= 0.0) {
        return Err(Error::config(format!("horizon must be >= 0, got {horizon}")));
    }
    let state = ChainState::from_x(n, x0)?;
    let table = RateTable::build(params, n);
    let mut rng = rng_for(seed, 0);
    let mut events = Vec::new();
    drive_events(&table, state.j, horizon, &mut rng, |t, j| {
        events.push((t, ChainState { n, j }.x()));
    });
    Ok(TrajectorySample {
        regime: ScalingRegime::ldp(),
        n,
        seed,
        y0: state.x(),
        horizon,
        step: 2.0 / n as f64,
        events,
    })
}

/// Resolved rescaling at a given volume: initial grid state, spatial scale,
/// clock dilation and effective parameters.
pub(crate) struct ResolvedRegime {
    pub table: RateTable,
    pub j0: u64,
    pub scale: f64,
    pub dilation: f64,
    pub center: f64,
}

pub(crate) fn resolve(
    params: &ModelParams,
    regime: &ScalingRegime,
    n: u64,
    y0: f64,
) -> Result<ResolvedRegime> {
    regime.admissible(n)?;
    let eff = regime.effective_params(params, n)?;
    let scale = regime.space_scale(n);
    let dilation = regime.time_dilation(n);
    let x_target = regime.center + y0 / scale;
    if x_target.abs() > 1.0 {
        return Err(Error::config(format!(
            "initial point y0 = {y0} maps to x = {x_target} outside [-1,1]"
        )));
    }
    let state = ChainState::nearest(n, x_target, regime.center);
    Ok(ResolvedRegime {
        table: RateTable::build(&eff, n),
        j0: state.j,
        scale,
        dilation,
        center: regime.center,
    })
}

impl ResolvedRegime {
    #[inline]
    pub fn y_of_j(&self, j: u64) -> f64 {
        let x = (2.0 * j as f64 - self.table.n as f64) / self.table.n as f64;
        (x - self.center) * self.scale
    }
}

/// Exact simulation of the rescaled fluctuation process
/// `Y(t) = scale · (m_n(dilation · t) - m)` started from (the grid rounding
/// of) `y0`.
pub fn simulate_rescaled(
    params: &ModelParams,
    regime: &ScalingRegime,
    n: u64,
    y0: f64,
    horizon: f64,
    seed: u64,
) -> Result<TrajectorySample> {
    if !(horizon >= 0.0) {
        return Err(Error::config(format!("horizon must be >= 0, got {horizon}")));
    }
    let r = resolve(params, regime, n, y0)?;
    let mut rng = rng_for(seed, 0);
    let mut events = Vec::new();
    drive_events(&r.table, r.j0, r.dilation * horizon, &mut rng, |t, j| {
        events.push((t / r.dilation, r.y_of_j(j)));
    });
    Ok(TrajectorySample {
        regime: regime.clone(),
        n,
        seed,
        y0: r.y_of_j(r.j0),
        horizon,
        step: 2.0 * r.scale / n as f64,
        events,
    })
}

/// Per-replica aggregates of an ensemble, ordered by replica index.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReplicaStats {
    pub terminal: f64,
    pub sup_abs: f64,
    pub events: u64,
}

/// Run `n_paths` independent replicas of the rescaled chain, returning
/// terminal value, running sup and event count per replica.
///
/// Replica `i` draws from a generator seeded by `hash(master_seed, i)`, so
/// the output is reproducible under any parallel schedule.
pub fn ensemble_stats(
    params: &ModelParams,
    regime: &ScalingRegime,
    n: u64,
    y0: f64,
    horizon: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<ReplicaStats>> {
    let r = resolve(params, regime, n, y0)?;
    let chain_horizon = r.dilation * horizon;
    let y0_abs = r.y_of_j(r.j0).abs();
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(master_seed, i as u64);
            let s = drive_stats(&r.table, r.j0, chain_horizon, &mut rng);
            let sup = r.y_of_j(s.j_min).abs().max(r.y_of_j(s.j_max).abs()).max(y0_abs);
            ReplicaStats { terminal: r.y_of_j(s.j_final), sup_abs: sup, events: s.events }
        })
        .collect())
}

/// Terminal rescaled values of an ensemble.
pub fn ensemble_terminal(
    params: &ModelParams,
    regime: &ScalingRegime,
    n: u64,
    y0: f64,
    horizon: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    Ok(ensemble_stats(params, regime, n, y0, horizon, n_paths, master_seed)?
        .into_iter()
        .map(|s| s.terminal)
        .collect())
}

/// Ensemble mean of the unrescaled chain at the given sample times.
pub fn ensemble_mean_path(
    params: &ModelParams,
    n: u64,
    x0: f64,
    sample_times: &[f64],
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("sample times must be strictly increasing".to_string()));
    }
    let state = ChainState::from_x(n, x0)?;
    let table = RateTable::build(params, n);
    let horizon = *sample_times.last().unwrap_or(&0.0);
    let sums = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(master_seed, i as u64);
            let mut samples = vec![0.0; sample_times.len()];
            let mut ptr = 0usize;
            let mut j_prev = state.j;
            drive_events(&table, state.j, horizon, &mut rng, |t, j| {
                while ptr < sample_times.len() && sample_times[ptr] < t {
                    samples[ptr] = ChainState { n, j: j_prev }.x();
                    ptr += 1;
                }
                j_prev = j;
            });
            while ptr < sample_times.len() {
                samples[ptr] = ChainState { n, j: j_prev }.x();
                ptr += 1;
            }
            samples
        })
        .reduce(
            || vec![0.0; sample_times.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(sums.into_iter().map(|s| s / n_paths as f64).collect())
}

/// Empirical exit probability `P(sup_{t <= T} |Y| >= c)` over an ensemble of
/// realized trajectories. Requires at least 100 replicas.
pub fn exit_time_diagnostic(samples: &[TrajectorySample], c: f64) -> Result<f64> {
    if samples.len() < 100 {
        return Err(Error::config(format!(
            "exit diagnostic needs an ensemble of >= 100 paths, got {}",
            samples.len()
        )));
    }
    let hits = samples.iter().filter(|s| s.sup_abs() >= c).count();
    Ok(hits as f64 / samples.len() as f64)
}

/// Exit probabilities at several levels from per-replica sups.
pub fn exit_probabilities(sups: &[f64], levels: &[f64]) -> Vec<f64> {
    levels
        .iter()
        .map(|c| sups.iter().filter(|s| **s >= *c).count() as f64 / sups.len().max(1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cw(beta: f64) -> ModelParams {
        ModelParams::curie_weiss(beta).unwrap()
    }

    #[test]
    fn boundary_rates_vanish() {
        let p = cw(1.3);
        let (up, _) = jump_rates(&ChainState { n: 10, j: 10 }, &p);
        assert_eq!(up, 0.0);
        let (_, down) = jump_rates(&ChainState { n: 10, j: 0 }, &p);
        assert_eq!(down, 0.0);
    }

    #[test]
    fn rates_closed_form() {
        // n=4, x=0.5 (j=3), β=1: up = 4·0.25·e^{0.5} = e^{0.5}, down = 4·0.75·e^{-0.5}.
        let p = cw(1.0);
        let (up, down) = jump_rates(&ChainState { n: 4, j: 3 }, &p);
        assert!((up - 0.5_f64.exp()).abs() < 1e-14);
        assert!((down - 3.0 * (-0.5_f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn single_spin_flip_rate() {
        // n=1, x0=1: only a down flip at rate e^{-U'(1)}.
        let p = cw(0.8);
        let (up, down) = jump_rates(&ChainState { n: 1, j: 1 }, &p);
        assert_eq!(up, 0.0);
        assert!((down - (-0.8_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_no_events() {
        let s = simulate_chain(&cw(1.0), 16, 0.0, 0.0, 7).unwrap();
        assert_eq!(s.n_events(), 0);
        assert_eq!(s.terminal_value(), 0.0);
    }

    #[test]
    fn off_grid_initial_point_rejected() {
        assert!(simulate_chain(&cw(1.0), 10, 0.05, 1.0, 7).is_err());
    }

    #[test]
    fn determinism_bit_identical() {
        let a = simulate_chain(&cw(1.2), 200, 0.0, 2.0, 42).unwrap();
        let b = simulate_chain(&cw(1.2), 200, 0.0, 2.0, 42).unwrap();
        assert_eq!(a.events, b.events);
        let c = simulate_chain(&cw(1.2), 200, 0.0, 2.0, 43).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn ensemble_determinism_and_order() {
        let p = cw(0.9);
        let r = ScalingRegime::clt(0, 0.0);
        let a = ensemble_terminal(&p, &r, 500, 0.0, 1.0, 64, 9).unwrap();
        let b = ensemble_terminal(&p, &r, 500, 0.0, 1.0, 64, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_rescaling_is_identity() {
        // b_n = 1, k = 0, m = 0: Y(t) = m_n(t) exactly.
        let p = cw(0.7);
        let regime = ScalingRegime::mdp(0, 1.0, 0.0).unwrap().diagnostic();
        let raw = simulate_chain(&p, 64, 0.0, 3.0, 11).unwrap();
        let scaled = simulate_rescaled(&p, &regime, 64, 0.0, 3.0, 11).unwrap();
        assert_eq!(raw.n_events(), scaled.n_events());
        for (a, b) in raw.events.iter().zip(scaled.events.iter()) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn inadmissible_regime_rejected_at_simulation() {
        let p = cw(0.7);
        let regime = ScalingRegime::mdp(0, 50.0, 0.0).unwrap();
        assert!(simulate_rescaled(&p, &regime, 1000, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn rounding_ties_toward_center() {
        // n=10, x=0.1 exactly between j=5 (x=0) and j=6 (x=0.2)? No: x=0.1 is
        // j_real = 5.5, a tie; toward m=0 picks j=5.
        let s = ChainState::nearest(10, 0.1, 0.0);
        assert_eq!(s.j, 5);
        let s = ChainState::nearest(10, 0.1, 1.0);
        assert_eq!(s.j, 6);
    }

    #[test]
    fn exit_diagnostic_trivial_levels() {
        let p = cw(1.0);
        let regime = ScalingRegime::clt(1, 0.0);
        let stats = ensemble_stats(&p, &regime, 400, 0.5, 0.5, 128, 3).unwrap();
        let sups: Vec<f64> = stats.iter().map(|s| s.sup_abs).collect();
        // c = 0 with y0 != 0 exits immediately.
        let probs = exit_probabilities(&sups, &[0.0, 1e9]);
        assert_eq!(probs[0], 1.0);
        // c beyond the attainable range is never exceeded.
        assert_eq!(probs[1], 0.0);
    }

    #[test]
    fn clock_consistency_band() {
        // Events per unit chain time per spin stays O(1) for β <= 2.
        for beta in [0.5, 1.0, 2.0] {
            let p = cw(beta);
            let n = 400u64;
            let stats =
                ensemble_stats(&p, &ScalingRegime::ldp(), n, 0.0, 2.0, 32, 17).unwrap();
            let mean_events: f64 =
                stats.iter().map(|s| s.events as f64).sum::<f64>() / stats.len() as f64;
            let per_spin_time = mean_events / (2.0 * n as f64);
            assert!(
                (0.1..10.0).contains(&per_spin_time),
                "beta={beta}: events per spin-time {per_spin_time}"
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Grid closure: every visited value lies on E_n.
        #[test]
        fn visited_states_stay_on_grid(n in 2u64..60, seed in 0u64..1000) {
            let p = cw(1.1);
            let s = simulate_chain(&p, n, ChainState { n, j: n / 2 }.x(), 4.0, seed).unwrap();
            for (_, x) in &s.events {
                let j = (1.0 + x) * n as f64 / 2.0;
                prop_assert!((j - j.round()).abs() < 1e-9);
                prop_assert!(*x >= -1.0 - 1e-12 && *x <= 1.0 + 1e-12);
            }
            // Jump times strictly increasing, steps of exactly one grid cell.
            for w in s.events.windows(2) {
                prop_assert!(w[1].0 > w[0].0);
                prop_assert!(((w[1].1 - w[0].1).abs() - s.step).abs() < 1e-12);
            }
        }
    }
}
