//! Noncolliding-BM oracle layer: Karlin-McGregor densities, the drifted and
//! driftless noncolliding transition densities, the gap probability the
//! lifted observable converges to, and the GUE eigenvalue density that
//! appears at coincident starts.

use rayon::prelude::*;

use crate::numkit::{gauss_legendre, gaussian_density, pairwise_sum, vandermonde, QuadConfig};
use crate::{Error, Result};

/// Strictly ordered configuration in the Weyl chamber.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylPoint {
    coords: Vec<f64>,
}

impl WeylPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DegenerateStart);
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateStart);
        }
        for w in coords.windows(2) {
            if w[1] - w[0] < 1e-12 {
                return Err(Error::DegenerateStart);
            }
        }
        Ok(WeylPoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }
}

/// Karlin-McGregor determinant det[p(t, y_j | x_k)]: the transition density
/// of BM absorbed at the Weyl chamber walls.
pub fn km_density(t: f64, y: &WeylPoint, x: &WeylPoint) -> Result<f64> {
    if y.n() != x.n() {
        return Err(Error::SizeMismatch(format!(
            "y has {} coordinates, x has {}",
            y.n(),
            x.n()
        )));
    }
    if y.n() > 3 {
        return Err(Error::UnsupportedN(y.n()));
    }
    km_det(t, y.coords(), x.coords())
}

fn km_det(t: f64, y: &[f64], x: &[f64]) -> Result<f64> {
    let n = y.len();
    let mut p = [[0.0; 3]; 3];
    for j in 0..n {
        for k in 0..n {
            p[j][k] = gaussian_density(t, y[j], x[k])?;
        }
    }
    Ok(match n {
        1 => p[0][0],
        2 => p[0][0] * p[1][1] - p[0][1] * p[1][0],
        3 => {
            p[0][0] * (p[1][1] * p[2][2] - p[1][2] * p[2][1])
                - p[0][1] * (p[1][0] * p[2][2] - p[1][2] * p[2][0])
                + p[0][2] * (p[1][0] * p[2][1] - p[1][1] * p[2][0])
        }
        _ => unreachable!("N <= 3 checked above"),
    })
}

/// Noncolliding BM transition density (h_N(y) / h_N(x)) q_N(t, y | x).
pub fn ncbm_density(t: f64, y: &WeylPoint, x: &WeylPoint) -> Result<f64> {
    let hx = vandermonde(x.coords());
    if hx == 0.0 {
        return Err(Error::DegenerateStart);
    }
    Ok(vandermonde(y.coords()) / hx * km_density(t, y, x)?)
}

/// Noncolliding BM with drift:
/// exp(-t |nu|^2 / 2) (det[e^{nu_j y_k}] / det[e^{nu_j x_k}]) q_N(t, y|x).
/// The drift vector must be nondecreasing with distinct entries; the
/// coincident-drift limit is the h-ratio form of `ncbm_density`.
pub fn ncbm_drift_density(t: f64, y: &WeylPoint, x: &WeylPoint, nu: &[f64]) -> Result<f64> {
    let n = y.n();
    if nu.len() != n {
        return Err(Error::SizeMismatch(format!(
            "drift has {} entries for N = {n}",
            nu.len()
        )));
    }
    for w in nu.windows(2) {
        if w[1] < w[0] {
            return Err(Error::DegenerateDrift("drift must be nondecreasing".into()));
        }
        if w[1] - w[0] < 1e-12 {
            return Err(Error::DegenerateDrift(
                "coincident drift entries; use the h-ratio form".into(),
            ));
        }
    }
    let dy = exp_det(nu, y.coords());
    let dx = exp_det(nu, x.coords());
    if dx == 0.0 {
        return Err(Error::DegenerateStart);
    }
    let nu2: f64 = nu.iter().map(|v| v * v).sum();
    Ok((-t * nu2 / 2.0).exp() * dy / dx * km_density(t, y, x)?)
}

/// det[e^{nu_j x_k}] for N <= 3.
fn exp_det(nu: &[f64], x: &[f64]) -> f64 {
    let n = nu.len();
    let mut e = [[0.0; 3]; 3];
    for j in 0..n {
        for k in 0..n {
            e[j][k] = (nu[j] * x[k]).exp();
        }
    }
    match n {
        1 => e[0][0],
        2 => e[0][0] * e[1][1] - e[0][1] * e[1][0],
        3 => {
            e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
                - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
                + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
        }
        _ => unreachable!(),
    }
}

/// Tensor quadrature of a symmetric-in-arguments density over the ordered
/// region { lo < y_1 < ... < y_N < hi }, with an explicit order indicator
/// on the node tuples.
fn ordered_box_integral<F>(n: usize, lo: f64, hi: f64, order: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let (nodes, weights) = gauss_legendre(order, lo, hi)?;
    match n {
        1 => {
            let vals: Vec<f64> = nodes
                .iter()
                .zip(&weights)
                .map(|(&y, &w)| Ok(w * f(&[y])?))
                .collect::<Result<_>>()?;
            Ok(pairwise_sum(&vals))
        }
        2 => {
            let rows: Vec<Result<f64>> = (0..nodes.len())
                .into_par_iter()
                .map(|i| {
                    let mut vals = Vec::with_capacity(nodes.len());
                    for j in 0..nodes.len() {
                        if nodes[i] < nodes[j] {
                            vals.push(weights[i] * weights[j] * f(&[nodes[i], nodes[j]])?);
                        }
                    }
                    Ok(pairwise_sum(&vals))
                })
                .collect();
            let rows: Vec<f64> = rows.into_iter().collect::<Result<_>>()?;
            Ok(pairwise_sum(&rows))
        }
        3 => {
            let rows: Vec<Result<f64>> = (0..nodes.len())
                .into_par_iter()
                .map(|i| {
                    let mut vals = Vec::new();
                    for j in 0..nodes.len() {
                        if nodes[i] >= nodes[j] {
                            continue;
                        }
                        for k in 0..nodes.len() {
                            if nodes[j] < nodes[k] {
                                vals.push(
                                    weights[i]
                                        * weights[j]
                                        * weights[k]
                                        * f(&[nodes[i], nodes[j], nodes[k]])?,
                                );
                            }
                        }
                    }
                    Ok(pairwise_sum(&vals))
                })
                .collect();
            let rows: Vec<f64> = rows.into_iter().collect::<Result<_>>()?;
            Ok(pairwise_sum(&rows))
        }
        _ => Err(Error::UnsupportedN(n)),
    }
}

/// P[t X_1(1/t) > h] for noncolliding BM started from `start`: the target
/// of the lifted observable in the combinatorial limit. Time inversion
/// carries the spatial scale along with the clock (t B(1/t) is a Brownian
/// motion at time t), so the threshold for the reciprocal-time
/// configuration is h / t, and the same number is the probability that
/// every particle of the nu-drifted process from the origin exceeds h at
/// time t.
pub fn gap_probability(start: &WeylPoint, t: f64, h: f64, quad: &QuadConfig) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    quad.validate()?;
    let n = start.n();
    if n > 3 {
        return Err(Error::UnsupportedN(n));
    }
    let tau = 1.0 / t;
    let sd = tau.sqrt();
    let c = start.coords();
    let hi = c[n - 1] + quad.tail_sigmas * sd;
    let lo = (h / t).max(c[0] - quad.tail_sigmas * sd);
    if lo >= hi {
        return Ok(0.0);
    }
    let hx = vandermonde(c);
    let run = |order: usize| {
        ordered_box_integral(n, lo, hi, order, |y| {
            Ok(vandermonde(y) / hx * km_det(tau, y, c)?)
        })
    };
    let coarse = run(quad.gl_order)?;
    let fine = run(quad.gl_order * quad.refine_factor)?;
    if (fine - coarse).abs() > 1e-6 * (1.0 + fine.abs()) {
        return Err(Error::NonConvergent {
            what: "gap probability quadrature".into(),
            discrepancy: (fine - coarse).abs(),
            tol: 1e-6,
        });
    }
    Ok(fine)
}

/// GUE eigenvalue density with variance t:
/// t^{-N^2/2} (2 pi)^{-N/2} (prod_j Gamma(j))^{-1} e^{-|x|^2/2t} h_N(x)^2.
pub fn gue_density(t: f64, x: &WeylPoint) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let n = x.n();
    if n > 3 {
        return Err(Error::UnsupportedN(n));
    }
    let gamma_prod = match n {
        1 => 1.0,
        2 => 1.0,
        _ => 2.0,
    };
    let norm = t.powf(-((n * n) as f64) / 2.0)
        / (2.0 * std::f64::consts::PI).powf(n as f64 / 2.0)
        / gamma_prod;
    let x2: f64 = x.coords().iter().map(|v| v * v).sum();
    let h = vandermonde(x.coords());
    Ok(norm * (-x2 / (2.0 * t)).exp() * h * h)
}
