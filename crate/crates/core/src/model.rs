//! Interaction potentials, the G-functions and the mean-field flow.
//!
//! For a potential `U` on `[-1,1]` the magnetization chain has jump rates
//! proportional to `e^{±U'(x)}` and the infinite-volume dynamics is
//! `ṁ = 2 G2(m)` where
//!
//! ```text
//! G1(x) = cosh(U'(x)) - x sinh(U'(x)),
//! G2(x) = sinh(U'(x)) - x cosh(U'(x)).
//! ```
//!
//! Zeros of `G2` are the fixed points of the flow; derivatives of `G2` at a
//! fixed point set the drift coefficients of every scaling limit, and `G1` at
//! the fixed point sets the diffusion coefficient.

use crate::error::Error;
use crate::hamiltonian::PathGrid;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Which of the two G-functions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GKind {
    G1,
    G2,
}

/// Interaction potential, through its derivative `U'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `U(x) = β x²/2`, so `U'(x) = β x`.
    CurieWeiss { beta: f64 },
    /// `U(x) = β x²/2 + B x`, so `U'(x) = β x + B`.
    CurieWeissField { beta: f64, field: f64 },
    /// Size-coupled temperature `β = 1 + κ b⁻²`: `U'(x) = (1 + κ/b²) x`.
    TempRescaled { kappa: f64, bn: f64 },
    /// `U(x) = Σ cᵢ xⁱ` with the given coefficients (c₀ irrelevant).
    GeneralPolynomial { coeffs: Vec<f64> },
}

/// Model parameters: a validated potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub potential: PotentialKind,
}

impl ModelParams {
    pub fn curie_weiss(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::config(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { potential: PotentialKind::CurieWeiss { beta } })
    }

    pub fn curie_weiss_field(beta: f64, field: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() || !field.is_finite() {
            return Err(Error::config(format!(
                "need beta > 0 and finite field, got beta={beta}, field={field}"
            )));
        }
        Ok(Self { potential: PotentialKind::CurieWeissField { beta, field } })
    }

    /// Temperature `β = 1 + κ/bn²` approaching criticality from above.
    pub fn temp_rescaled(kappa: f64, bn: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::config(format!("kappa must be >= 0, got {kappa}")));
        }
        if !(bn > 0.0) || !bn.is_finite() {
            return Err(Error::config(format!("bn must be positive, got {bn}")));
        }
        Ok(Self { potential: PotentialKind::TempRescaled { kappa, bn } })
    }

    pub fn general_polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("polynomial coefficients must be finite"));
        }
        if coeffs.len() < 2 {
            return Err(Error::config("potential needs degree >= 1"));
        }
        Ok(Self { potential: PotentialKind::GeneralPolynomial { coeffs } })
    }

    /// Re-check the constructor invariants; used on deserialized values.
    pub fn validate(&self) -> Result<()> {
        match &self.potential {
            PotentialKind::CurieWeiss { beta } => Self::curie_weiss(*beta).map(|_| ()),
            PotentialKind::CurieWeissField { beta, field } => {
                Self::curie_weiss_field(*beta, *field).map(|_| ())
            }
            PotentialKind::TempRescaled { kappa, bn } => {
                Self::temp_rescaled(*kappa, *bn).map(|_| ())
            }
            PotentialKind::GeneralPolynomial { coeffs } => {
                Self::general_polynomial(coeffs.clone()).map(|_| ())
            }
        }
    }

    /// `U'(x)`.
    pub fn u_prime(&self, x: f64) -> f64 {
        match &self.potential {
            PotentialKind::CurieWeiss { beta } => beta * x,
            PotentialKind::CurieWeissField { beta, field } => beta * x + field,
            PotentialKind::TempRescaled { kappa, bn } => (1.0 + kappa / (bn * bn)) * x,
            PotentialKind::GeneralPolynomial { coeffs } => {
                // U' = Σ i c_i x^{i-1}, Horner from the top.
                let mut acc = 0.0;
                for i in (1..coeffs.len()).rev() {
                    acc = acc * x + (i as f64) * coeffs[i];
                }
                acc
            }
        }
    }

    /// Slope/intercept of `U'` when it is linear (all Curie-Weiss variants).
    pub fn linear_u_prime(&self) -> Option<(f64, f64)> {
        match &self.potential {
            PotentialKind::CurieWeiss { beta } => Some((*beta, 0.0)),
            PotentialKind::CurieWeissField { beta, field } => Some((*beta, *field)),
            PotentialKind::TempRescaled { kappa, bn } => Some((1.0 + kappa / (bn * bn), 0.0)),
            PotentialKind::GeneralPolynomial { .. } => None,
        }
    }

    /// The inverse temperature actually driving the rates, where defined.
    pub fn effective_beta(&self) -> Option<f64> {
        self.linear_u_prime().map(|(b, _)| b)
    }
}

/// Evaluate `G1` or `G2` at `x`.
///
/// A small analytic extension beyond `[-1,1]` is allowed; the functions are
/// entire, the domain guard only rejects plainly out-of-range arguments.
pub fn eval_g(params: &ModelParams, which: GKind, x: f64) -> Result<f64> {
    const EXT: f64 = 0.5;
    if !x.is_finite() || x.abs() > 1.0 + EXT {
        return Err(Error::domain(format!("x = {x} outside [-1.5, 1.5]")));
    }
    let u = params.u_prime(x);
    let v = match which {
        GKind::G1 => u.cosh() - x * u.sinh(),
        GKind::G2 => u.sinh() - x * u.cosh(),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numeric(format!("G eval non-finite at x = {x}")))
    }
}

/// Highest derivative order served by [`g_derivative`].
pub const MAX_G_DERIVATIVE: usize = 9;

/// `order`-th derivative of `G1` or `G2` at `x`.
///
/// For linear `U' = βx + B` the derivative is closed-form: every `G` is of the
/// shape `P s + Q c + R x s + S x c` with `s = sinh(U')`, `c = cosh(U')`, and
/// differentiation acts linearly on the coefficient vector:
///
/// ```text
/// (P, Q, R, S) ↦ (Qβ + R, Pβ + S, Sβ, Rβ).
/// ```
///
/// For polynomial potentials the derivative is a central finite difference
/// with two Richardson extrapolation levels, step `h = 1e-3 · max(1, |x|)`.
pub fn g_derivative(params: &ModelParams, which: GKind, order: usize, x: f64) -> Result<f64> {
    if order == 0 {
        return eval_g(params, which, x);
    }
    if order > MAX_G_DERIVATIVE {
        return Err(Error::unsupported(format!(
            "derivative order {order} exceeds supported maximum {MAX_G_DERIVATIVE}"
        )));
    }
    if let Some((beta, field)) = params.linear_u_prime() {
        let (mut p, mut q, mut r, mut s) = match which {
            GKind::G1 => (0.0, 1.0, -1.0, 0.0),
            GKind::G2 => (1.0, 0.0, 0.0, -1.0),
        };
        for _ in 0..order {
            let (np, nq, nr, ns) = (q * beta + r, p * beta + s, s * beta, r * beta);
            p = np;
            q = nq;
            r = nr;
            s = ns;
        }
        let u = beta * x + field;
        let (sh, ch) = (u.sinh(), u.cosh());
        Ok(p * sh + q * ch + r * x * sh + s * x * ch)
    } else {
        finite_difference_derivative(|t| eval_g(params, which, t), order, x)
    }
}

/// Central finite difference of given order with two Richardson levels.
fn finite_difference_derivative<F>(f: F, order: usize, x: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    // The f64 noise floor scales like ε/h^order; higher orders need a wider
    // base step to stay above it.
    let base = match order {
        0..=2 => 1e-3,
        3..=4 => 2e-2,
        _ => 1e-1,
    };
    let h0 = base * x.abs().max(1.0);
    let d = |h: f64| -> Result<f64> {
        // Central difference Δ_c^l: Σ (-1)^i C(l,i) f(x + (l/2 - i) h), O(h²).
        let l = order as i64;
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=l {
            let offset = (l as f64 / 2.0 - i as f64) * h;
            acc += binom * f(x + offset)?;
            binom *= -((l - i) as f64) / ((i + 1) as f64);
        }
        Ok(acc / h.powi(order as i32))
    };
    let d0 = d(h0)?;
    let d1 = d(h0 / 2.0)?;
    let d2 = d(h0 / 4.0)?;
    let r0 = (4.0 * d1 - d0) / 3.0;
    let r1 = (4.0 * d2 - d1) / 3.0;
    Ok((16.0 * r1 - r0) / 15.0)
}

/// A single fixed point of the mean-field flow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPoint {
    /// Root of `G2` in `[-1,1]`.
    pub m: f64,
    /// `true` when `G2'(m) < 0`, or when the first non-vanishing derivative
    /// is of odd order with negative value.
    pub stable: bool,
    /// Largest `l` with `G2^{(j)}(m) = 0` for all `j <= l`.
    pub flatness_order: usize,
    /// First non-vanishing derivative `G2^{(flatness_order+1)}(m)`.
    pub leading_derivative: f64,
}

/// Roots of `G2` in `[-1,1]` with stability and flatness classification.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub roots: Vec<FixedPoint>,
}

impl FixedPointReport {
    /// The positive stable root, when the flow is in the symmetry-broken phase.
    pub fn positive_root(&self) -> Option<&FixedPoint> {
        self.roots.iter().find(|r| r.m > 1e-9)
    }
}

const ROOT_SCAN_POINTS: usize = 10_000;
const ROOT_VALUE_TOL: f64 = 1e-12;

/// All roots of `G2` in `[-1,1]`: sign-scan on a uniform grid, then bisection.
///
/// Only sign-change roots are detected; a tangency without crossing would be
/// missed, which does not occur for the potentials used here.
pub fn find_fixed_points(params: &ModelParams) -> Result<FixedPointReport> {
    let g2 = |x: f64| eval_g(params, GKind::G2, x);
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_x = -1.0;
    let mut prev_v = g2(prev_x)?;
    for i in 1..=ROOT_SCAN_POINTS {
        let x = -1.0 + 2.0 * (i as f64) / (ROOT_SCAN_POINTS as f64);
        let v = g2(x)?;
        if prev_v == 0.0 {
            roots.push(prev_x);
        } else if prev_v * v < 0.0 {
            roots.push(bisect_root(&g2, prev_x, x, prev_v)?);
        }
        prev_x = x;
        prev_v = v;
    }
    if prev_v == 0.0 {
        roots.push(prev_x);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut report = Vec::with_capacity(roots.len());
    for m in roots {
        let v = g2(m)?;
        if v.abs() > ROOT_VALUE_TOL {
            return Err(Error::numeric(format!(
                "root refinement stalled at m = {m}, |G2| = {:.3e}",
                v.abs()
            )));
        }
        let (flatness_order, leading) = flatness_at(params, m)?;
        report.push(FixedPoint {
            m,
            stable: leading < 0.0 && flatness_order % 2 == 0,
            flatness_order,
            leading_derivative: leading,
        });
    }
    Ok(FixedPointReport { roots: report })
}

fn bisect_root<F>(f: &F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if f_lo * v < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = v;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Flatness order of `G2` at `m`: derivatives up to order 7 are compared
/// against a noise floor of `1e-7 · (1 + max_l |G2^(l)(m)|)`.
fn flatness_at(params: &ModelParams, m: f64) -> Result<(usize, f64)> {
    const MAX_ORDER: usize = 7;
    let derivs: Vec<f64> = (1..=MAX_ORDER)
        .map(|l| g_derivative(params, GKind::G2, l, m))
        .collect::<Result<_>>()?;
    let scale = derivs.iter().fold(1.0_f64, |a, d| a.max(d.abs()));
    let tol = 1e-7 * (1.0 + scale);
    let mut flat = 0;
    for (i, d) in derivs.iter().enumerate() {
        if d.abs() < tol {
            flat = i + 1;
        } else {
            return Ok((flat, *d));
        }
    }
    Ok((flat, *derivs.last().unwrap()))
}

/// Default step for [`meanfield_flow`].
pub const MEANFIELD_DT: f64 = 1e-3;

/// Integrate the mean-field flow `ṁ = 2 G2(m)` with classical RK4.
///
/// The flow is inward-pointing at `±1`; a step that overshoots `|m| > 1+1e-6`
/// is rejected as a numeric error.
pub fn meanfield_flow(params: &ModelParams, m0: f64, horizon: f64, dt: f64) -> Result<PathGrid> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::config(format!("need dt > 0, horizon >= 0; got dt={dt}, T={horizon}")));
    }
    if m0.abs() > 1.0 {
        return Err(Error::domain(format!("m0 = {m0} outside [-1,1]")));
    }
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let rhs = |m: f64| eval_g(params, GKind::G2, m).map(|g| 2.0 * g);
    let mut values = Vec::with_capacity(steps + 1);
    let mut m = m0;
    values.push(m);
    for _ in 0..steps {
        let k1 = rhs(m)?;
        let k2 = rhs(m + 0.5 * h * k1)?;
        let k3 = rhs(m + 0.5 * h * k2)?;
        let k4 = rhs(m + h * k3)?;
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if m.abs() > 1.0 + 1e-6 {
            return Err(Error::numeric(format!("mean-field step left [-1,1]: m = {m}")));
        }
        values.push(m);
    }
    PathGrid::from_values(0.0, horizon, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cw(beta: f64) -> ModelParams {
        ModelParams::curie_weiss(beta).unwrap()
    }

    /// Curie-Weiss expressed as a polynomial potential: exercises the finite
    /// difference route against the hyperbolic closed forms.
    fn cw_poly(beta: f64) -> ModelParams {
        ModelParams::general_polynomial(vec![0.0, 0.0, beta / 2.0]).unwrap()
    }

    #[test]
    fn g1_at_zero_is_one() {
        assert_eq!(eval_g(&cw(0.7), GKind::G1, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn g2_at_zero_is_zero() {
        assert_eq!(eval_g(&cw(2.3), GKind::G2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn g2_closed_form_value() {
        // β=2, x=0.5: G2 = sinh(1) - 0.5 cosh(1).
        let expect = 1.0_f64.sinh() - 0.5 * 1.0_f64.cosh();
        let got = eval_g(&cw(2.0), GKind::G2, 0.5).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn g2_prime_at_zero_is_beta_minus_one() {
        for beta in [0.5, 1.0, 1.7] {
            let d = g_derivative(&cw(beta), GKind::G2, 1, 0.0).unwrap();
            assert!((d - (beta - 1.0)).abs() < 1e-14, "beta={beta}: {d}");
        }
    }

    #[test]
    fn g2_third_derivative_critical() {
        let d = g_derivative(&cw(1.0), GKind::G2, 3, 0.0).unwrap();
        assert!((d + 2.0).abs() < 1e-14, "{d}");
        let d5 = g_derivative(&cw(1.0), GKind::G2, 5, 0.0).unwrap();
        assert!((d5 + 4.0).abs() < 1e-14, "{d5}");
    }

    #[test]
    fn derivative_order_cap() {
        let err = g_derivative(&cw(1.0), GKind::G2, MAX_G_DERIVATIVE + 1, 0.0);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn finite_difference_matches_closed_form() {
        // Same potential through both evaluation routes.
        for beta in [0.5, 1.0, 1.5] {
            for order in 1..=3 {
                for x in [-0.6, 0.0, 0.3, 0.9] {
                    let exact = g_derivative(&cw(beta), GKind::G2, order, x).unwrap();
                    let fd = g_derivative(&cw_poly(beta), GKind::G2, order, x).unwrap();
                    let tol = if order <= 2 { 1e-8 } else { 1e-6 };
                    assert!(
                        (exact - fd).abs() < tol * (1.0 + exact.abs()),
                        "beta={beta} order={order} x={x}: exact={exact}, fd={fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn subcritical_single_stable_root() {
        let report = find_fixed_points(&cw(0.5)).unwrap();
        assert_eq!(report.roots.len(), 1);
        let r = &report.roots[0];
        assert!(r.m.abs() < 1e-12);
        assert!(r.stable);
        assert_eq!(r.flatness_order, 0);
    }

    #[test]
    fn critical_root_flatness_two() {
        let report = find_fixed_points(&cw(1.0)).unwrap();
        assert_eq!(report.roots.len(), 1);
        let r = &report.roots[0];
        assert!(r.m.abs() < 1e-9, "m = {}", r.m);
        assert_eq!(r.flatness_order, 2);
        assert!(r.leading_derivative < 0.0);
        assert!(r.stable);
    }

    #[test]
    fn supercritical_three_roots() {
        let report = find_fixed_points(&cw(1.5)).unwrap();
        assert_eq!(report.roots.len(), 3);
        // Independent oracle for m_β: bisection on m - tanh(1.5 m).
        let f = |m: f64| m - (1.5 * m).tanh();
        let (mut lo, mut hi) = (0.5, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let m_beta = 0.5 * (lo + hi);
        assert!((report.roots[2].m - m_beta).abs() < 1e-9);
        assert!((report.roots[0].m + m_beta).abs() < 1e-9);
        assert!(report.roots[0].stable && report.roots[2].stable);
        assert!(!report.roots[1].stable);
    }

    #[test]
    fn meanfield_fixed_point_is_constant() {
        let path = meanfield_flow(&cw(0.5), 0.0, 2.0, 1e-3).unwrap();
        assert!(path.values().iter().all(|&m| m.abs() < 1e-15));
    }

    #[test]
    fn meanfield_subcritical_decays_to_zero() {
        let path = meanfield_flow(&cw(0.5), 0.3, 20.0, 1e-3).unwrap();
        assert!(path.values().last().unwrap().abs() < 1e-6);
    }

    #[test]
    fn meanfield_supercritical_converges_to_m_beta() {
        let report = find_fixed_points(&cw(1.5)).unwrap();
        let m_beta = report.positive_root().unwrap().m;
        let path = meanfield_flow(&cw(1.5), 0.3, 30.0, 1e-3).unwrap();
        assert!((path.values().last().unwrap() - m_beta).abs() < 1e-8);
    }

    proptest! {
        /// For B=0 the potential is odd: G2 odd, G1 even.
        #[test]
        fn g_symmetry(beta in 0.1f64..3.0, x in -1.0f64..1.0) {
            let p = cw(beta);
            let g2p = eval_g(&p, GKind::G2, x).unwrap();
            let g2m = eval_g(&p, GKind::G2, -x).unwrap();
            let g1p = eval_g(&p, GKind::G1, x).unwrap();
            let g1m = eval_g(&p, GKind::G1, -x).unwrap();
            prop_assert!((g2p + g2m).abs() <= 1e-14 * (1.0 + g2p.abs()));
            prop_assert!((g1p - g1m).abs() <= 1e-14 * (1.0 + g1p.abs()));
        }

        /// ODE consistency: -2x cosh(βx) + 2 sinh(βx) = 2 G2(x).
        #[test]
        fn ode_form_matches_g2(beta in 0.1f64..3.0, x in -1.0f64..1.0) {
            let p = cw(beta);
            let lhs = -2.0 * x * (beta * x).cosh() + 2.0 * (beta * x).sinh();
            let rhs = 2.0 * eval_g(&p, GKind::G2, x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()));
        }

        /// G1 > 0 on (-1,1) for the bare Curie-Weiss potential.
        #[test]
        fn g1_positive(beta in 0.1f64..3.0, x in -0.999f64..0.999) {
            prop_assert!(eval_g(&cw(beta), GKind::G1, x).unwrap() > 0.0);
        }
    }
}
