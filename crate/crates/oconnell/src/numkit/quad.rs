//! Quadrature rule constructors: Gauss-Hermite, Gauss-Legendre, the
//! trapezoid rule on circle contours, and a composite Gauss-Legendre helper.
//! Rules are cached by order; constructors return immutable value objects.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::Complex;
use crate::{Error, Result};

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cache(which: usize) -> &'static Mutex<HashMap<usize, Rule>> {
    static CACHES: OnceLock<[Mutex<HashMap<usize, Rule>>; 2]> = OnceLock::new();
    &CACHES.get_or_init(|| [Mutex::new(HashMap::new()), Mutex::new(HashMap::new())])[which]
}

/// Gauss-Hermite nodes and weights for the weight exp(-u^2) on the line.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 2 {
        return Err(Error::BadOrder(format!(
            "gauss_hermite order must be >= 2, got {order}"
        )));
    }
    let rule = {
        let mut guard = cache(0).lock().unwrap();
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(hermite_rule(order)))
            .clone()
    };
    Ok((rule.0.clone(), rule.1.clone()))
}

/// Gauss-Legendre nodes and weights on [lo, hi].
pub fn gauss_legendre(order: usize, lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 2 {
        return Err(Error::BadOrder(format!(
            "gauss_legendre order must be >= 2, got {order}"
        )));
    }
    let rule = {
        let mut guard = cache(1).lock().unwrap();
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(legendre_rule(order)))
            .clone()
    };
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let nodes = rule.0.iter().map(|&z| mid + half * z).collect();
    let weights = rule.1.iter().map(|&w| w * half).collect();
    Ok((nodes, weights))
}

/// Equispaced points on a circle with uniform weights (trapezoid rule,
/// spectrally accurate for analytic periodic integrands). Weights are for
/// the full contour integral: sum_k w_k f(z_k) ~ closed integral of f dz.
/// Angles are offset by half a step so no node lands on the real axis and
/// nodes come in conjugate pairs when `center` is real.
pub fn circle_rule(center: Complex, radius: f64, points: usize) -> Result<(Vec<Complex>, Vec<Complex>)> {
    if radius <= 0.0 {
        return Err(Error::BadOrder(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    if points < 4 {
        return Err(Error::BadOrder(format!(
            "circle rule needs >= 4 points, got {points}"
        )));
    }
    let mut nodes = Vec::with_capacity(points);
    let mut weights = Vec::with_capacity(points);
    let step = 2.0 * std::f64::consts::PI / points as f64;
    for k in 0..points {
        let theta = step * (k as f64 + 0.5);
        let dir = Complex::new(theta.cos(), theta.sin()) * radius;
        nodes.push(center + dir);
        // d z = i r e^{i theta} d theta
        weights.push(Complex::i() * dir * step);
    }
    Ok((nodes, weights))
}

/// Composite Gauss-Legendre over [lo, hi] with at least `min_points` nodes,
/// split into 16-point panels.
pub fn composite_gl(lo: f64, hi: f64, min_points: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = min_points.div_ceil(16);
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 16);
    let mut weights = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let a = lo + width * p as f64;
        let (n, w) = gauss_legendre(16, a, a + width).expect("order 16 is valid");
        nodes.extend(n);
        weights.extend(w);
    }
    (nodes, weights)
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let j = j as f64;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Golub-Welsch: Hermite nodes are the eigenvalues of the Jacobi matrix
/// with off-diagonal sqrt(k/2); weights are sqrt(pi) times the squared
/// first eigenvector components. Stable at every order used here, unlike
/// Newton iteration on the raw recurrence, whose magnitudes span ~1e80
/// near the edge roots at orders in the hundreds.
fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut diag = vec![0.0; n];
    let mut off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    off.push(0.0);
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tridiag_ql(&mut diag, &mut off, &mut first);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let nodes: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mu0 = std::f64::consts::PI.sqrt();
    let weights: Vec<f64> = order.iter().map(|&i| mu0 * first[i] * first[i]).collect();
    (nodes, weights)
}

/// Implicit-shift QL for a symmetric tridiagonal matrix, accumulating the
/// rotations only on the tracked `first` row (the first components of the
/// eigenvectors). `off` holds the subdiagonal in 0..n-1 plus a workspace
/// slot.
fn tridiag_ql(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) {
    let n = diag.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                f = first[i + 1];
                first[i + 1] = s * first[i] + c * f;
                first[i] = c * first[i] - s * f;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_integrates_known_moment() {
        // integral of u^2 exp(-u^2) = sqrt(pi)/2
        let (x, w) = gauss_hermite(64).unwrap();
        let got: f64 = x.iter().zip(&w).map(|(&u, &w)| w * u * u).sum();
        assert!((got - 0.886_226_925_452_758).abs() < 1e-13);
    }

    #[test]
    fn hermite_even_orders_have_no_origin_node() {
        for order in [4usize, 16, 64, 128] {
            let (x, _) = gauss_hermite(order).unwrap();
            assert!(x.iter().all(|&u| u.abs() > 1e-10));
        }
    }

    #[test]
    fn legendre_integrates_cubic() {
        let (x, w) = gauss_legendre(200, 0.0, 1.0).unwrap();
        let got: f64 = x.iter().zip(&w).map(|(&u, &w)| w * u * u * u).sum();
        assert!((got - 0.25).abs() < 1e-14);
    }

    #[test]
    fn circle_rule_winding_number() {
        let (z, w) = circle_rule(Complex::new(0.0, 0.0), 1.0, 64).unwrap();
        let got: Complex = z.iter().zip(&w).map(|(&z, &w)| w / z).sum();
        let want = Complex::new(0.0, 2.0 * std::f64::consts::PI);
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn circle_rule_conjugate_pairs() {
        let (z, _) = circle_rule(Complex::new(0.3, 0.0), 0.7, 32).unwrap();
        for zk in &z {
            assert!(z.iter().any(|&o| (o - zk.conj()).norm() < 1e-12));
            assert!(zk.im.abs() > 1e-6);
        }
    }

    #[test]
    fn doubling_changes_analytic_integrals_below_tolerance() {
        // Doubling any rule's order moves test integrals of analytic
        // integrands by < 1e-10 relative.
        let f = |u: f64| (0.7 * u).cos() * (-u * u / 3.0).exp();
        let (x1, w1) = gauss_legendre(64, -8.0, 8.0).unwrap();
        let (x2, w2) = gauss_legendre(128, -8.0, 8.0).unwrap();
        let a: f64 = x1.iter().zip(&w1).map(|(&u, &w)| w * f(u)).sum();
        let b: f64 = x2.iter().zip(&w2).map(|(&u, &w)| w * f(u)).sum();
        assert!((a - b).abs() < 1e-10 * b.abs());

        let g = |u: f64| (1.0 + 0.3 * (u * 1.3).sin()).ln();
        let (x1, w1) = gauss_hermite(64).unwrap();
        let (x2, w2) = gauss_hermite(128).unwrap();
        let a: f64 = x1.iter().zip(&w1).map(|(&u, &w)| w * g(u)).sum();
        let b: f64 = x2.iter().zip(&w2).map(|(&u, &w)| w * g(u)).sum();
        assert!((a - b).abs() < 1e-10 * b.abs());
    }

    #[test]
    fn rejects_tiny_orders() {
        assert!(gauss_hermite(1).is_err());
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(circle_rule(Complex::new(0.0, 0.0), -1.0, 64).is_err());
    }

    #[test]
    fn composite_covers_interval() {
        let (x, w) = composite_gl(0.0, 2.0, 100);
        let got: f64 = x.iter().zip(&w).map(|(&u, &w)| w * u).sum();
        assert!((got - 2.0).abs() < 1e-12);
    }
}
