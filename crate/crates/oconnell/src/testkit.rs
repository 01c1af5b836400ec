//! Oracle-grade reference integrators used by this crate's test suites.
//! Nothing here is on any production evaluation path.
#![doc(hidden)]

use crate::numkit::Complex;

/// Adaptive Simpson quadrature for complex-valued integrands.
pub fn adaptive_simpson_complex(
    f: &dyn Fn(f64) -> Complex,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> Complex,
    a: f64,
    b: f64,
    fa: Complex,
    fm: Complex,
    fb: Complex,
    whole: Complex,
    tol: f64,
    depth: usize,
) -> Complex {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature for real integrands.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_complex(&|x| Complex::new(f(x), 0.0), a, b, tol).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn integrates_complex_oscillator() {
        // integral of exp(i x) over [0, pi] = 2i
        let v = adaptive_simpson_complex(
            &|x| (Complex::i() * x).exp(),
            0.0,
            std::f64::consts::PI,
            1e-13,
        );
        assert!((v - Complex::new(0.0, 2.0)).norm() < 1e-11);
    }
}
