//! Paths, action functionals and optimal (minimum-action) paths.

use super::HamiltonianSpec;
use crate::error::Error;
use crate::Result;
use serde::Serialize;

/// A curve sampled on a uniform time mesh.
#[derive(Debug, Clone, Serialize)]
pub struct PathGrid {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl PathGrid {
    /// Build from samples on the uniform mesh over `[t0, t1]`.
    pub fn from_values(t0: f64, t1: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::config("path mesh needs at least 2 points".to_string()));
        }
        if !(t1 > t0) {
            return Err(Error::config(format!("need t1 > t0, got [{t0}, {t1}]")));
        }
        let dt = (t1 - t0) / (values.len() - 1) as f64;
        Ok(Self { t0, dt, values })
    }

    /// Sample a function on `[0, horizon]` with `mesh` intervals.
    pub fn from_fn(f: impl Fn(f64) -> f64, horizon: f64, mesh: usize) -> Result<Self> {
        let dt = horizon / mesh as f64;
        let values = (0..=mesh).map(|i| f(i as f64 * dt)).collect();
        Self::from_values(0.0, horizon, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn end(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Second-order derivative stencil: central in the interior, one-sided at
    /// the endpoints; plain difference on a two-point mesh.
    pub fn derivative(&self, i: usize) -> f64 {
        let v = &self.values;
        let n = v.len();
        if n == 2 {
            (v[1] - v[0]) / self.dt
        } else if i == 0 {
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * self.dt)
        } else if i == n - 1 {
            (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * self.dt)
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * self.dt)
        }
    }
}

/// Value of an action integral; `finite == false` encodes `+∞`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ActionResult {
    pub value: f64,
    pub finite: bool,
}

impl ActionResult {
    fn infinite() -> Self {
        Self { value: f64::INFINITY, finite: false }
    }
}

/// Composite-trapezoid action `I0 + ∫ 𝓛(γ, γ̇) dt` on a fixed mesh, with the
/// stencil derivative of [`PathGrid`].
pub fn action(spec: &HamiltonianSpec, path: &PathGrid, i0: f64) -> ActionResult {
    let n = path.len();
    let mut acc = 0.0;
    for i in 0..n {
        let l = spec.lagrangian(path.values()[i], path.derivative(i));
        if !l.is_finite() {
            return ActionResult::infinite();
        }
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * l;
    }
    ActionResult { value: i0 + acc * path.dt(), finite: true }
}

/// Action of an analytically supplied curve, refining the mesh by doubling
/// until the relative change drops below `rel_tol`.
pub fn action_refined(
    spec: &HamiltonianSpec,
    curve: impl Fn(f64) -> f64,
    horizon: f64,
    i0: f64,
    rel_tol: f64,
) -> Result<ActionResult> {
    let mut mesh = 256;
    let mut prev = action(spec, &PathGrid::from_fn(&curve, horizon, mesh)?, i0);
    loop {
        mesh *= 2;
        let next = action(spec, &PathGrid::from_fn(&curve, horizon, mesh)?, i0);
        if !next.finite {
            return Ok(next);
        }
        if (next.value - prev.value).abs() <= rel_tol * next.value.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
        if mesh > (1 << 22) {
            return Err(Error::numeric("action refinement did not settle".to_string()));
        }
    }
}

/// Time reversal of the relaxation flow: integrate `ṙ = b(r)` from `x_end`
/// for `horizon`, then return `γ(t) = r(horizon - t)`.
///
/// Along this path `γ̇ = -b(γ)`, the classical Freidlin-Wentzell uphill
/// trajectory whose action converges to the quasi-potential difference.
pub fn reversed_relaxation_path(
    spec: &HamiltonianSpec,
    x_end: f64,
    horizon: f64,
    mesh: usize,
) -> Result<PathGrid> {
    if mesh < 2 {
        return Err(Error::config("mesh must be >= 2".to_string()));
    }
    let h = horizon / mesh as f64;
    let b = |x: f64| spec.zero_cost_drift(x);
    let mut r = x_end;
    let mut fwd = Vec::with_capacity(mesh + 1);
    fwd.push(r);
    for _ in 0..mesh {
        let k1 = b(r);
        let k2 = b(r + 0.5 * h * k1);
        let k3 = b(r + 0.5 * h * k2);
        let k4 = b(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        fwd.push(r);
    }
    fwd.reverse();
    PathGrid::from_values(0.0, horizon, fwd)
}

/// Outcome classification of one shooting integration.
enum Endpoint {
    Finite(f64),
    Blowup(f64),
}

/// Integrate Hamilton's equations `ẋ = ∂H/∂p`, `ṗ = -∂H/∂x` with RK4.
fn hamilton_flow(
    spec: &HamiltonianSpec,
    x0: f64,
    p0: f64,
    horizon: f64,
    mesh: usize,
) -> (Vec<(f64, f64)>, Endpoint) {
    let h = horizon / mesh as f64;
    let rhs = |x: f64, p: f64| (spec.dh_dp(x, p), -spec.dh_dx(x, p));
    let mut traj = Vec::with_capacity(mesh + 1);
    let (mut x, mut p) = (x0, p0);
    traj.push((x, p));
    for _ in 0..mesh {
        let (kx1, kp1) = rhs(x, p);
        let (kx2, kp2) = rhs(x + 0.5 * h * kx1, p + 0.5 * h * kp1);
        let (kx3, kp3) = rhs(x + 0.5 * h * kx2, p + 0.5 * h * kp2);
        let (kx4, kp4) = rhs(x + h * kx3, p + h * kp3);
        x += h / 6.0 * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
        p += h / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
        if !x.is_finite() || !p.is_finite() || x.abs() > 1e8 {
            return (traj, Endpoint::Blowup(if p0 >= 0.0 { 1.0 } else { -1.0 }));
        }
        traj.push((x, p));
    }
    (traj, Endpoint::Finite(x))
}

/// Action along a Hamiltonian trajectory: `∫ (p ẋ - H) dt` by trapezoid.
fn action_along(spec: &HamiltonianSpec, traj: &[(f64, f64)], dt: f64) -> f64 {
    let n = traj.len();
    let mut acc = 0.0;
    for (i, &(x, p)) in traj.iter().enumerate() {
        let l = p * spec.dh_dp(x, p) - spec.h(x, p);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * l;
    }
    acc * dt
}

/// Minimum-action path from `x_start` to `x_end` in time `horizon`.
///
/// Primary method: shooting on the initial momentum of Hamilton's equations
/// (the terminal point is monotone in `p0`, so bracketing plus bisection is
/// robust). Fallback: direct gradient descent on the discretized action.
pub fn optimal_path(
    spec: &HamiltonianSpec,
    x_start: f64,
    x_end: f64,
    horizon: f64,
    mesh: usize,
) -> Result<(PathGrid, f64)> {
    if mesh < 64 {
        return Err(Error::config("optimal_path mesh must be >= 64".to_string()));
    }
    if !(horizon > 0.0) {
        return Err(Error::config("optimal_path horizon must be positive".to_string()));
    }
    let hit_tol = 1e-7 * (1.0 + x_end.abs());
    if let Some((traj, value)) = shoot(spec, x_start, x_end, horizon, mesh, hit_tol) {
        let values = traj.iter().map(|&(x, _)| x).collect();
        return Ok((PathGrid::from_values(0.0, horizon, values)?, value));
    }
    // Shooting failed to bracket or converge; fall back to direct descent.
    let (path, value, converged) = direct_minimized_path(spec, x_start, x_end, horizon, mesh)?;
    if converged {
        Ok((path, value))
    } else {
        Err(Error::OptimizationFailed {
            reason: "shooting failed and descent did not converge".to_string(),
            best_action: value,
            best_path: path.values().to_vec(),
        })
    }
}

fn shoot(
    spec: &HamiltonianSpec,
    x_start: f64,
    x_end: f64,
    horizon: f64,
    mesh: usize,
    hit_tol: f64,
) -> Option<(Vec<(f64, f64)>, f64)> {
    let overshoot = |ep: &Endpoint| -> f64 {
        match ep {
            Endpoint::Finite(x) => x - x_end,
            Endpoint::Blowup(sign) => sign * 1e30,
        }
    };
    let probe = |p0: f64| {
        let (_, ep) = hamilton_flow(spec, x_start, p0, horizon, mesh);
        overshoot(&ep)
    };
    let f0 = probe(0.0);
    let (mut lo, mut hi) = if f0 == 0.0 {
        (0.0, 0.0)
    } else if f0 < 0.0 {
        // Need larger terminal point: increase p0.
        let mut p = 1e-9;
        loop {
            if probe(p) > 0.0 {
                break (p / 2.0, p);
            }
            p *= 2.0;
            if p > 1e9 {
                return None;
            }
        }
    } else {
        let mut p = -1e-9;
        loop {
            if probe(p) < 0.0 {
                break (p, p / 2.0);
            }
            p *= 2.0;
            if p < -1e9 {
                return None;
            }
        }
    };
    if lo != hi {
        // lo gives undershoot (or negative), hi overshoot; bisect.
        let mut f_lo = probe(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let fm = probe(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if f_lo * fm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                f_lo = fm;
            }
        }
    }
    let p0 = 0.5 * (lo + hi);
    let (traj, ep) = hamilton_flow(spec, x_start, p0, horizon, mesh);
    match ep {
        Endpoint::Finite(x) if (x - x_end).abs() <= hit_tol => {
            let dt = horizon / mesh as f64;
            let value = action_along(spec, &traj, dt);
            Some((traj, value))
        }
        _ => None,
    }
}

/// Direct minimization of the discretized action over interior nodes.
///
/// The action uses the midpoint rule per segment; gradients come from the
/// envelope identities `∂𝓛/∂v = p*`, `∂𝓛/∂x = -∂H/∂x(·, p*)`. Steps are
/// Barzilai-Borwein with a backtracking safeguard. Returns the path, its
/// action and whether the gradient tolerance was met.
pub fn direct_minimized_path(
    spec: &HamiltonianSpec,
    x_start: f64,
    x_end: f64,
    horizon: f64,
    mesh: usize,
) -> Result<(PathGrid, f64, bool)> {
    let n = mesh + 1;
    let dt = horizon / mesh as f64;
    // Linear interpolation as the initial guess.
    let mut gamma: Vec<f64> =
        (0..n).map(|i| x_start + (x_end - x_start) * i as f64 / mesh as f64).collect();

    let segment_data = |g: &[f64], i: usize| {
        let xm = 0.5 * (g[i] + g[i + 1]);
        let v = (g[i + 1] - g[i]) / dt;
        (xm, v)
    };
    let total_action = |g: &[f64]| -> f64 {
        (0..mesh)
            .map(|i| {
                let (xm, v) = segment_data(g, i);
                spec.lagrangian(xm, v)
            })
            .sum::<f64>()
            * dt
    };
    let gradient = |g: &[f64], grad: &mut [f64]| {
        grad.iter_mut().for_each(|d| *d = 0.0);
        for i in 0..mesh {
            let (xm, v) = segment_data(g, i);
            // p* solves v = ∂H/∂p; for the quadratic family this is exact.
            let p_star = match spec {
                HamiltonianSpec::QuadraticMdp { drift, diffusion } => {
                    (v - drift.eval(xm)) / (2.0 * diffusion)
                }
                HamiltonianSpec::FullLdp { .. } => {
                    // One safeguarded Newton solve via the dual.
                    let mut p = 0.0;
                    for _ in 0..60 {
                        let r = v - spec.dh_dp(xm, p);
                        if r.abs() < 1e-13 * (1.0 + v.abs()) {
                            break;
                        }
                        p += r / spec.d2h_dp2(xm, p);
                    }
                    p
                }
            };
            let l_x = -spec.dh_dx(xm, p_star);
            let l_v = p_star;
            // d/dγᵢ of dt·𝓛(xm, v): xm couples 1/2 to both nodes, v couples ∓1/dt.
            grad[i] += dt * (0.5 * l_x - l_v / dt);
            grad[i + 1] += dt * (0.5 * l_x + l_v / dt);
        }
        grad[0] = 0.0;
        grad[n - 1] = 0.0;
    };

    let mut grad = vec![0.0; n];
    let mut prev_gamma = gamma.clone();
    let mut prev_grad = vec![0.0; n];
    let mut value = total_action(&gamma);
    let mut step = 1e-2;
    let mut converged = false;
    for iter in 0..10_000 {
        gradient(&gamma, &mut grad);
        let gnorm = grad.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
        if gnorm < 3e-8 * (1.0 + value.abs()) {
            converged = true;
            break;
        }
        if iter > 0 {
            // Barzilai-Borwein step length.
            let mut sy = 0.0;
            let mut yy = 0.0;
            for i in 0..n {
                let s = gamma[i] - prev_gamma[i];
                let y = grad[i] - prev_grad[i];
                sy += s * y;
                yy += y * y;
            }
            if sy > 0.0 && yy > 0.0 {
                step = (sy / yy).clamp(1e-8, 1e3);
            }
        }
        prev_gamma.copy_from_slice(&gamma);
        prev_grad.copy_from_slice(&grad);
        // Backtracking safeguard.
        let mut s = step;
        let mut accepted = false;
        for _ in 0..40 {
            for i in 1..n - 1 {
                gamma[i] = prev_gamma[i] - s * grad[i];
            }
            let new_value = total_action(&gamma);
            if new_value <= value {
                value = new_value;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            gamma.copy_from_slice(&prev_gamma);
            converged = true; // no descent direction left at fp resolution
            break;
        }
    }
    let path = PathGrid::from_values(0.0, horizon, gamma)?;
    Ok((path, value, converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{make_hamiltonian, quasi_potential};
    use crate::model::ModelParams;
    use crate::simulator::RegimeKind;

    fn subcritical() -> HamiltonianSpec {
        let params = ModelParams::curie_weiss(0.5).unwrap();
        make_hamiltonian(&RegimeKind::Mdp { k: 0 }, &params, 0.0).unwrap()
    }

    fn critical() -> HamiltonianSpec {
        let params = ModelParams::curie_weiss(1.0).unwrap();
        make_hamiltonian(&RegimeKind::Mdp { k: 1 }, &params, 0.0).unwrap()
    }

    #[test]
    fn relaxation_path_has_zero_action() {
        // ẋ = b(x) downhill from 1: the integrand vanishes identically.
        // b(x) = -x for β=0.5, so the relaxation from 1 is e^{-t}.
        let spec = subcritical();
        let a = action_refined(&spec, |t: f64| (-t).exp(), 10.0, 0.0, 1e-6).unwrap();
        assert!(a.finite);
        assert!(a.value.abs() < 1e-8, "action {}", a.value);
    }

    #[test]
    fn constant_path_action_matches_lagrangian() {
        // Constant path at x₀: I = T · 𝓛(x₀, 0) = T · x₀²(1-β)²/2.
        let spec = subcritical();
        let x0 = 0.7;
        let horizon = 3.0;
        let path = PathGrid::from_fn(|_| x0, horizon, 512).unwrap();
        let a = action(&spec, &path, 0.0);
        let expect = horizon * x0 * x0 * 0.5 * 0.5 * 0.5; // (1-β)² = 1/4, /2
        assert!(a.finite);
        assert!((a.value - expect).abs() < 1e-10, "{} vs {expect}", a.value);
    }

    #[test]
    fn reversed_relaxation_action_approaches_quasi_potential() {
        // Subcritical: S(1) = (1-β)/2 = 0.25 at β=0.5, horizon 20/|b'(0)| = 20.
        let spec = subcritical();
        let path = reversed_relaxation_path(&spec, 1.0, 20.0, 8192).unwrap();
        let a = action(&spec, &path, 0.0);
        assert!(a.finite);
        assert!((a.value - 0.25).abs() / 0.25 < 0.02, "action {}", a.value);
        // Critical: S(1) = 1/12.
        let spec = critical();
        let path = reversed_relaxation_path(&spec, 1.0, 20.0, 8192).unwrap();
        let a = action(&spec, &path, 0.0);
        let s1 = 1.0 / 12.0;
        assert!((a.value - s1).abs() / s1 < 0.02, "action {}", a.value);
    }

    #[test]
    fn optimal_path_between_fixed_points_is_constant() {
        let spec = subcritical();
        let (path, value) = optimal_path(&spec, 0.0, 0.0, 2.0, 128).unwrap();
        assert!(value.abs() < 1e-12);
        assert!(path.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn optimal_path_ou_matches_quasi_potential() {
        // Infimum over horizons of the 0 -> 1 action is S(1); at T = 20 the
        // finite-horizon minimum is within 2%.
        let spec = subcritical();
        let (path, value) = optimal_path(&spec, 0.0, 1.0, 20.0, 4096).unwrap();
        let qp = quasi_potential(&spec).unwrap();
        let target = qp.s(1.0);
        assert!((value - target).abs() / target < 0.02, "{value} vs {target}");
        assert!((path.end() - 1.0).abs() < 1e-6);
        assert!((path.start()).abs() < 1e-12);
    }

    #[test]
    fn optimal_path_critical_matches_quartic() {
        let spec = critical();
        let (_, value) = optimal_path(&spec, 0.0, 1.0, 20.0, 4096).unwrap();
        let target = 1.0 / 12.0;
        assert!((value - target).abs() / target < 0.02, "{value} vs {target}");
    }

    #[test]
    fn shooting_agrees_with_direct_descent() {
        // OU benchmark at a moderate horizon where both methods are sharp.
        let spec = subcritical();
        let (_, shoot_value) = optimal_path(&spec, 0.0, 1.0, 4.0, 1024).unwrap();
        let (_, direct_value, converged) =
            direct_minimized_path(&spec, 0.0, 1.0, 4.0, 1024).unwrap();
        assert!(converged);
        assert!(
            (shoot_value - direct_value).abs() / shoot_value.abs() < 1e-3,
            "shooting {shoot_value} vs direct {direct_value}"
        );
    }

    #[test]
    fn action_on_coarse_mesh_rejects_short_paths() {
        assert!(PathGrid::from_values(0.0, 1.0, vec![0.0]).is_err());
        let err = optimal_path(&subcritical(), 0.0, 1.0, 1.0, 32);
        assert!(err.is_err());
    }
}
