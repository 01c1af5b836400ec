//! Modified Bessel function of the second kind with complex order, via the
//! cosh integral representation. Supports the purely imaginary orders used
//! by the Whittaker-measure layer.

use super::{composite_gl, log_gamma, Complex};
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.5772156649015328606065120900824024310421;

/// Below this argument the integrand's support outruns fixed-rule
/// quadrature and the two-sided power-series form takes over.
const SMALL_ARG: f64 = 1e-4;

/// K_order(arg) = integral over u in (0, inf) of exp(-arg cosh u) cosh(order u),
/// truncated where `arg * cosh u` exceeds `arg + 45`.
pub fn bessel_k(order: Complex, arg: f64) -> Result<Complex> {
    if arg <= 0.0 {
        return Err(Error::NonPositiveArg(arg));
    }
    if arg < SMALL_ARG && (order.re.abs() < 0.45 || order.norm() < 1e-6) {
        return Ok(small_arg_series(order, arg));
    }
    let u_max = (1.0 + 45.0 / arg).acosh();
    // Base point count resolves both oscillation (imaginary order) and
    // exponential growth (real order) of cosh(order u).
    let mut points = (u_max * (6.0 + 2.0 * order.im.abs() + order.re.abs()))
        .ceil()
        .max(64.0) as usize;
    let mut prev: Option<Complex> = None;
    for _ in 0..4 {
        let val = cosh_integral(order, arg, u_max, points);
        if let Some(p) = prev {
            if (val - p).norm() <= 1e-12 * val.norm().max(1e-300) {
                return Ok(val);
            }
        }
        prev = Some(val);
        points *= 2;
    }
    Ok(prev.unwrap())
}

fn cosh_integral(order: Complex, arg: f64, u_max: f64, points: usize) -> Complex {
    let (nodes, weights) = composite_gl(0.0, u_max, points);
    let mut acc = Complex::new(0.0, 0.0);
    for (&u, &w) in nodes.iter().zip(&weights) {
        let e = -arg * u.cosh();
        // cosh(order u) exp(-arg cosh u), with the exponents combined so
        // neither factor overflows on its own.
        let plus = (order * u + e).exp();
        let minus = (-order * u + e).exp();
        acc += w * 0.5 * (plus + minus);
    }
    acc
}

/// Two-sided power series
/// K_v(z) ~ [Gamma(v)(z/2)^-v (1 + z^2/(4(1-v))) + Gamma(-v)(z/2)^v (1 + z^2/(4(1+v)))] / 2,
/// valid for |Re v| < 1 away from v = 0; the v -> 0 limit is taken
/// explicitly.
fn small_arg_series(order: Complex, arg: f64) -> Complex {
    let l = (arg / 2.0).ln();
    let z24 = arg * arg / 4.0;
    if order.norm() < 1e-6 {
        let k0 = -(l + EULER_GAMMA);
        return Complex::new(k0 * (1.0 + z24) + z24, 0.0);
    }
    let one = Complex::new(1.0, 0.0);
    let gp = log_gamma(order).expect("not a pole: |Re| < 0.45, |v| >= 1e-6");
    let gm = log_gamma(-order).expect("not a pole");
    let term_minus = (gp - order * l).exp() * (one + z24 / (one - order));
    let term_plus = (gm + order * l).exp() * (one + z24 / (one + order));
    0.5 * (term_minus + term_plus)
}

/// Batch evaluation of K_{i mu}(arg) for many purely imaginary orders at a
/// shared argument. The exp(-arg cosh u) factor is computed once per node.
pub fn bessel_k_imag_batch(mus: &[f64], arg: f64) -> Result<Vec<f64>> {
    if arg <= 0.0 {
        return Err(Error::NonPositiveArg(arg));
    }
    if arg < SMALL_ARG {
        return mus
            .iter()
            .map(|&mu| Ok(bessel_k(Complex::new(0.0, mu), arg)?.re))
            .collect();
    }
    let u_max = (1.0 + 45.0 / arg).acosh();
    let mu_max = mus.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let points = (u_max * (6.0 + 2.0 * mu_max)).ceil().max(64.0) as usize * 2;
    let (nodes, weights) = composite_gl(0.0, u_max, points);
    let damped: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| w * (-arg * u.cosh()).exp())
        .collect();
    Ok(mus
        .iter()
        .map(|&mu| {
            nodes
                .iter()
                .zip(&damped)
                .map(|(&u, &g)| g * (mu * u).cos())
                .sum()
        })
        .collect())
}
