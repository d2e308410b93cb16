//! Limiting Hamiltonians, Lagrangians and quasi-potentials.
//!
//! Every moderate-deviation regime of the magnetization chain has a limiting
//! Hamiltonian of quadratic type,
//!
//! ```text
//! H(x,p) = b(x) p + D p²,    b(x) = 2 x^{2k+1} G2^{(2k+1)}(m) / (2k+1)!,   D = 2 G1(m),
//! ```
//!
//! while the full large-deviation regime has
//!
//! ```text
//! H(x,p) = [cosh(2p) - 1] G1(x) + sinh(2p) G2(x).
//! ```
//!
//! The Lagrangian is the Legendre transform `𝓛(x,v) = sup_p [pv - H(x,p)]`,
//! the path-space rate function integrates `𝓛` along trajectories, and the
//! quasi-potential `S` solves the stationarity identity `H(x, S'(x)) = 0`.

mod path;

pub use path::{
    action, action_refined, direct_minimized_path, optimal_path, reversed_relaxation_path,
    ActionResult, PathGrid,
};

use crate::error::Error;
use crate::model::{self, GKind, ModelParams};
use crate::simulator::RegimeKind;
use crate::Result;
use serde::Serialize;

/// Real polynomial with ascending coefficients; used for drift fields and
/// quasi-potentials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Single monomial `c x^deg`.
    pub fn monomial(c: f64, deg: usize) -> Self {
        let mut coeffs = vec![0.0; deg + 1];
        coeffs[deg] = c;
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| (i as f64 + 1.0) * c)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn primitive(&self) -> Poly {
        let mut coeffs = vec![0.0; self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i + 1] = c / (i as f64 + 1.0);
        }
        Poly::new(coeffs)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Sign-change roots on `[-range, range]`, refined by bisection.
    pub fn roots_in(&self, range: f64) -> Vec<f64> {
        const SCAN: usize = 40_000;
        let mut roots = Vec::new();
        let mut px = -range;
        let mut pv = self.eval(px);
        for i in 1..=SCAN {
            let x = -range + 2.0 * range * (i as f64) / (SCAN as f64);
            let v = self.eval(x);
            if pv == 0.0 {
                roots.push(px);
            } else if pv * v < 0.0 {
                let (mut lo, mut hi, mut flo) = (px, x, pv);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    let fm = self.eval(mid);
                    if flo * fm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            px = x;
            pv = v;
        }
        if pv == 0.0 {
            roots.push(px);
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * range);
        roots
    }
}

/// Closed-form limiting Hamiltonian.
#[derive(Debug, Clone, Serialize)]
pub enum HamiltonianSpec {
    /// `H(x,p) = b(x) p + D p²` with polynomial drift `b` and constant `D > 0`.
    QuadraticMdp { drift: Poly, diffusion: f64 },
    /// `H(x,p) = [cosh(2p)-1] G1(x) + sinh(2p) G2(x)` for the given potential.
    FullLdp { params: ModelParams },
}

impl HamiltonianSpec {
    /// Convenience constructor for a quadratic spec.
    pub fn quadratic(drift: Poly, diffusion: f64) -> Result<Self> {
        if !(diffusion > 0.0) {
            return Err(Error::config(format!("diffusion must be positive, got {diffusion}")));
        }
        Ok(HamiltonianSpec::QuadraticMdp { drift, diffusion })
    }

    pub fn h(&self, x: f64, p: f64) -> f64 {
        match self {
            HamiltonianSpec::QuadraticMdp { drift, diffusion } => {
                drift.eval(x) * p + diffusion * p * p
            }
            HamiltonianSpec::FullLdp { params } => {
                let u = params.u_prime(x);
                let g1 = u.cosh() - x * u.sinh();
                let g2 = u.sinh() - x * u.cosh();
                ((2.0 * p).cosh() - 1.0) * g1 + (2.0 * p).sinh() * g2
            }
        }
    }

    /// `∂H/∂p`.
    pub fn dh_dp(&self, x: f64, p: f64) -> f64 {
        match self {
            HamiltonianSpec::QuadraticMdp { drift, diffusion } => {
                drift.eval(x) + 2.0 * diffusion * p
            }
            HamiltonianSpec::FullLdp { params } => {
                let u = params.u_prime(x);
                let g1 = u.cosh() - x * u.sinh();
                let g2 = u.sinh() - x * u.cosh();
                2.0 * (2.0 * p).sinh() * g1 + 2.0 * (2.0 * p).cosh() * g2
            }
        }
    }

    /// `∂²H/∂p²`.
    pub fn d2h_dp2(&self, x: f64, p: f64) -> f64 {
        match self {
            HamiltonianSpec::QuadraticMdp { diffusion, .. } => 2.0 * diffusion,
            HamiltonianSpec::FullLdp { params } => {
                let u = params.u_prime(x);
                let a = (1.0 - x) * u.exp();
                let b = (1.0 + x) * (-u).exp();
                2.0 * a * (2.0 * p).exp() + 2.0 * b * (-2.0 * p).exp()
            }
        }
    }

    /// `∂H/∂x`.
    pub fn dh_dx(&self, x: f64, p: f64) -> f64 {
        match self {
            HamiltonianSpec::QuadraticMdp { drift, .. } => drift.derivative().eval(x) * p,
            HamiltonianSpec::FullLdp { params } => {
                let u = params.u_prime(x);
                let du = params_u_second(params, x);
                // G1' = (U''-1) sinh(U') - x U'' cosh(U'); G2' analogous.
                let g1p = du * u.sinh() - u.sinh() - x * du * u.cosh();
                let g2p = du * u.cosh() - u.cosh() - x * du * u.sinh();
                ((2.0 * p).cosh() - 1.0) * g1p + (2.0 * p).sinh() * g2p
            }
        }
    }

    /// Zero-cost drift `b(x) = ∂H/∂p(x, 0)`.
    pub fn zero_cost_drift(&self, x: f64) -> f64 {
        self.dh_dp(x, 0.0)
    }

    /// Lagrangian `𝓛(x,v) = sup_p [pv - H(x,p)]`.
    ///
    /// Quadratic family in closed form, `(v - b(x))² / (4D)`; the full LDP
    /// Hamiltonian by safeguarded Newton on the strictly concave objective.
    /// Returns `+∞` when the supremum is not attained (possible only at the
    /// state-space boundary `|x| = 1` of the LDP family).
    pub fn lagrangian(&self, x: f64, v: f64) -> f64 {
        match self {
            HamiltonianSpec::QuadraticMdp { drift, diffusion } => {
                let dv = v - drift.eval(x);
                dv * dv / (4.0 * diffusion)
            }
            HamiltonianSpec::FullLdp { .. } => self.lagrangian_via_dual(x, v),
        }
    }

    /// Numeric Legendre transform `sup_p [pv - H(x,p)]` for any family.
    ///
    /// Independent route used to cross-check the closed forms. Safeguarded
    /// Newton on `ψ'(p) = v - ∂H/∂p` over the bracket `[-20, 20]`.
    pub fn lagrangian_via_dual(&self, x: f64, v: f64) -> f64 {
        const BRACKET: f64 = 20.0;
        let dpsi = |p: f64| v - self.dh_dp(x, p);
        let (mut lo, mut hi) = (-BRACKET, BRACKET);
        let (dlo, dhi) = (dpsi(lo), dpsi(hi));
        // ψ' is strictly decreasing; no sign change means the sup sits at the
        // bracket edge or at infinity.
        if dlo <= 0.0 {
            let edge = lo * v - self.h(x, lo);
            return if dlo < -1e-8 { f64::INFINITY } else { edge };
        }
        if dhi >= 0.0 {
            let edge = hi * v - self.h(x, hi);
            return if dhi > 1e-8 { f64::INFINITY } else { edge };
        }
        let mut p = 0.0_f64.clamp(lo, hi);
        for _ in 0..200 {
            let d1 = dpsi(p);
            if d1 > 0.0 {
                lo = p;
            } else {
                hi = p;
            }
            if d1.abs() <= 1e-14 * (1.0 + v.abs()) || hi - lo < 1e-16 {
                break;
            }
            let d2 = -self.d2h_dp2(x, p);
            let newton = p - d1 / d2;
            p = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        p * v - self.h(x, p)
    }

    /// Numeric round trip `sup_v [pv - 𝓛(x,v)]`; equals `H(x,p)` to 1e-9.
    pub fn legendre_roundtrip(&self, x: f64, p: f64) -> Result<f64> {
        let g = |v: f64| p * v - self.lagrangian(x, v);
        // Expand a bracket around the stationary velocity.
        let v0 = self.dh_dp(x, p);
        let mut w = 10.0 * (1.0 + v0.abs());
        for _ in 0..60 {
            let (a, b) = (v0 - w, v0 + w);
            if g(a) <= g(v0) && g(b) <= g(v0) {
                return Ok(golden_max(g, a, b));
            }
            w *= 2.0;
        }
        Err(Error::numeric("legendre_roundtrip: no bracket found".to_string()))
    }
}

fn params_u_second(params: &ModelParams, x: f64) -> f64 {
    use crate::model::PotentialKind::*;
    match &params.potential {
        CurieWeiss { beta } => *beta,
        CurieWeissField { beta, .. } => *beta,
        TempRescaled { kappa, bn } => 1.0 + kappa / (bn * bn),
        GeneralPolynomial { coeffs } => {
            let mut acc = 0.0;
            for i in (2..coeffs.len()).rev() {
                acc = acc * x + (i as f64) * ((i - 1) as f64) * coeffs[i];
            }
            acc
        }
    }
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..120 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
        if (b - a).abs() < 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
    }
    gc.max(gd)
}

/// Flatness tolerance when validating a centering point against a regime.
const FLATNESS_TOL: f64 = 1e-7;

/// Build the limiting Hamiltonian for a regime centered at `m`.
///
/// For `Mdp(k)` / `Clt(k)` the centering must be a fixed point with exactly
/// the right flatness: `G2^{(l)}(m) = 0` for `l <= 2k` and
/// `G2^{(2k+1)}(m) != 0` (nonpositive when `k > 0`).
pub fn make_hamiltonian(
    kind: &RegimeKind,
    params: &ModelParams,
    m: f64,
) -> Result<HamiltonianSpec> {
    match kind {
        RegimeKind::Ldp => Ok(HamiltonianSpec::FullLdp { params: params.clone() }),
        RegimeKind::TempRescaledMdp { kappa } | RegimeKind::TempRescaledClt { kappa } => {
            // Limit drift 2(κx - x³/3), diffusion constant 2.
            let drift = Poly::new(vec![0.0, 2.0 * kappa, 0.0, -2.0 / 3.0]);
            HamiltonianSpec::quadratic(drift, 2.0)
        }
        RegimeKind::Mdp { k } | RegimeKind::Clt { k } => {
            let k = *k as usize;
            let g2_at_m = model::eval_g(params, GKind::G2, m)?;
            if g2_at_m.abs() > 1e-9 {
                return Err(Error::config(format!(
                    "m = {m} is not a fixed point: G2(m) = {g2_at_m:.3e}"
                )));
            }
            let leading = model::g_derivative(params, GKind::G2, 2 * k + 1, m)?;
            let scale = 1.0 + leading.abs();
            for l in 1..=(2 * k) {
                let d = model::g_derivative(params, GKind::G2, l, m)?;
                if d.abs() > FLATNESS_TOL * scale {
                    return Err(Error::config(format!(
                        "flatness mismatch for k = {k}: G2^({l})(m) = {d:.3e} != 0"
                    )));
                }
            }
            if leading.abs() <= FLATNESS_TOL * scale {
                return Err(Error::config(format!(
                    "flatness mismatch for k = {k}: G2^({})(m) vanishes",
                    2 * k + 1
                )));
            }
            if k > 0 && leading > 0.0 {
                return Err(Error::config(format!(
                    "k = {k} requires G2^({})(m) <= 0, got {leading:.3e}",
                    2 * k + 1
                )));
            }
            let g1 = model::eval_g(params, GKind::G1, m)?;
            let coeff = 2.0 * leading / factorial(2 * k + 1);
            HamiltonianSpec::quadratic(Poly::monomial(coeff, 2 * k + 1), 2.0 * g1)
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Quasi-potential `S` of a quadratic Hamiltonian: `S'(x) = -b(x)/D`,
/// integrated in closed form and shifted so that `S = 0` at the minimizing
/// fixed point of the drift.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiPotential {
    /// Polynomial `S` including the normalizing constant.
    pub s: Poly,
    /// Closed-form derivative `S' = -b/D`.
    pub s_prime: Poly,
}

impl QuasiPotential {
    pub fn s(&self, x: f64) -> f64 {
        self.s.eval(x)
    }

    pub fn s_prime(&self, x: f64) -> f64 {
        self.s_prime.eval(x)
    }

    /// `max_x |H(x, S'(x))|` over a uniform grid.
    pub fn max_stationarity_residual(&self, spec: &HamiltonianSpec, lo: f64, hi: f64, points: usize) -> f64 {
        (0..points)
            .map(|i| lo + (hi - lo) * (i as f64) / ((points - 1) as f64))
            .map(|x| spec.h(x, self.s_prime(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Quasi-potential of a quadratic-family Hamiltonian.
pub fn quasi_potential(spec: &HamiltonianSpec) -> Result<QuasiPotential> {
    let HamiltonianSpec::QuadraticMdp { drift, diffusion } = spec else {
        return Err(Error::unsupported(
            "quasi_potential requires the quadratic family".to_string(),
        ));
    };
    let s_prime = drift.scale(-1.0 / diffusion);
    let raw = s_prime.primitive();
    // S has critical points exactly at the drift's zeros; normalize the
    // global minimum (attained at a stable zero) to 0.
    let roots = drift.roots_in(50.0);
    let offset = roots
        .iter()
        .map(|r| raw.eval(*r))
        .fold(f64::INFINITY, f64::min);
    let offset = if offset.is_finite() { offset } else { raw.eval(0.0) };
    let mut s = raw;
    s.coeffs[0] -= offset;
    Ok(QuasiPotential { s, s_prime })
}

/// Both routes to the supercritical stationary-rate constant
/// `c = (φ''(βm))⁻¹ - β = -G2'(m)/G1(m)`, with `φ(x) = log cosh x`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EllisConstantCheck {
    pub beta: f64,
    pub m: f64,
    /// `(φ''(βm))⁻¹ - β`.
    pub lhs: f64,
    /// `-G2'(m)/G1(m)`.
    pub rhs: f64,
}

impl EllisConstantCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Evaluate both sides of the constant identity at the positive fixed point.
pub fn ellis_constant_check(beta: f64) -> Result<EllisConstantCheck> {
    if !(beta > 1.0) {
        return Err(Error::config(format!("supercritical check requires beta > 1, got {beta}")));
    }
    let params = ModelParams::curie_weiss(beta)?;
    let report = model::find_fixed_points(&params)?;
    let m = report
        .positive_root()
        .ok_or_else(|| Error::numeric(format!("no positive fixed point found for beta = {beta}")))?
        .m;
    // φ''(z) = 1 - tanh²(z).
    let phi2 = 1.0 - (beta * m).tanh().powi(2);
    let lhs = 1.0 / phi2 - beta;
    let g1 = model::eval_g(&params, GKind::G1, m)?;
    let g2p = model::g_derivative(&params, GKind::G2, 1, m)?;
    let rhs = -g2p / g1;
    Ok(EllisConstantCheck { beta, m, lhs, rhs })
}
