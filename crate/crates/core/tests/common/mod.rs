//! Shared helpers for integration tests: independent oracles kept separate
//! from the library implementation paths they check.

use cw_core::genconv::TestFunction;
use cw_core::model::ModelParams;

/// Brute-force nonlinear generator on the full finite grid `E_n`:
/// builds `g = e^{r f}` as a vector, applies the magnetization generator's
/// rate matrix row at `j`, rescales the clock and divides. Independent of the
/// closed two-term evaluator in `genconv`.
pub fn brute_force_hn(
    params_eff: &ModelParams,
    k: i32,
    bn: f64,
    center: f64,
    n: u64,
    f: &TestFunction,
    j: u64,
) -> f64 {
    let nf = n as f64;
    let speed = nf * bn.powi(-2 * (k + 1));
    let dilation = bn.powi(2 * k);
    let y_of = |jj: u64| ((2.0 * jj as f64 - nf) / nf - center) * bn;
    let g = |jj: u64| (speed * f.eval(y_of(jj))).exp();
    let x = (2.0 * j as f64 - nf) / nf;
    let u = params_eff.u_prime(x);
    let rate_up = (n - j) as f64 * u.exp();
    let rate_down = j as f64 * (-u).exp();
    let mut a_g = 0.0;
    if j < n {
        a_g += rate_up * (g(j + 1) - g(j));
    }
    if j > 0 {
        a_g += rate_down * (g(j - 1) - g(j));
    }
    dilation / speed * (-speed * f.eval(y_of(j))).exp() * a_g
}

/// Excess kurtosis of the density ∝ exp(-y⁴/12) by Simpson quadrature.
pub fn quartic_well_excess_kurtosis() -> f64 {
    let l = 8.0;
    let m = 200_001;
    let h = 2.0 * l / (m - 1) as f64;
    let (mut z, mut m2, mut m4) = (0.0, 0.0, 0.0);
    for i in 0..m {
        let y = -l + h * i as f64;
        let w = if i == 0 || i == m - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let d = w * (-y.powi(4) / 12.0).exp();
        z += d;
        m2 += d * y * y;
        m4 += d * y.powi(4);
    }
    let m2 = m2 / z;
    let m4 = m4 / z;
    m4 / (m2 * m2) - 3.0
}

/// One pass/fail line per acceptance criterion.
pub fn report(criterion: &str, pass: bool, details: &str) {
    println!("[{}] {criterion}: {details}", if pass { "PASS" } else { "FAIL" });
}
