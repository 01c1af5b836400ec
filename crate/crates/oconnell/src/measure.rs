//! Independent oracles at the lifted level: the entrance-law density of
//! the process (spectral integral against the Sklyanin measure), direct
//! quadrature of the softened gap observable, and the contour/residue
//! moment formulas with their combinatorial identities.

use rayon::prelude::*;

use crate::fredholm::ContourSpec;
use crate::kernel::{theta_soft, DriftSpec, ObservablePoint};
use crate::numkit::{
    circle_rule, complex_det, composite_gl, gauss_legendre, gaussian_density, pairwise_sum,
    pairwise_sum_complex, Complex, QuadConfig,
};
use crate::whittaker::whittaker_n2;
use crate::{Error, Result};

/// Integer partition with nonincreasing parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) || parts.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::SizeMismatch(
                "partition parts must be positive and nonincreasing".into(),
            ));
        }
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Multiplicity of the part value `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.parts.iter().filter(|&&p| p == i).count()
    }

    /// prod_i m_i! over the distinct part values.
    pub fn multiplicity_factorial(&self) -> f64 {
        let mut prod = 1.0;
        let mut i = 1;
        while i <= self.weight() {
            let m = self.multiplicity(i);
            for k in 2..=m {
                prod *= k as f64;
            }
            i += 1;
        }
        prod
    }
}

/// All partitions of `kappa`, largest part first.
pub fn partitions(kappa: usize) -> Vec<Partition> {
    fn rec(remaining: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition {
                parts: prefix.clone(),
            });
            return;
        }
        for p in (1..=remaining.min(max_part)).rev() {
            prefix.push(p);
            rec(remaining - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(kappa, kappa, &mut Vec::new(), &mut out);
    out
}

/// Spectral weight of the entrance law at time t: the N-fold integral of
/// exp(-t|k|^2/2) psi_{-iak}(x/a) s_N(ak) over k.
///
/// N = 1 collapses to the heat kernel. For N = 2 the integral is evaluated
/// in rotated coordinates (sum and difference of k), where the sum
/// direction is an exact Gaussian Fourier transform and the difference
/// direction, after swapping with the Bessel integral's own variable,
/// carries a closed-form Gaussian-sinh-cosine factor. Both reductions are
/// checked against the literal tensor quadrature in this module's tests.
pub fn theta_entrance(drift: &DriftSpec, t: f64, x: &[f64], quad: &QuadConfig) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    quad.validate()?;
    match x.len() {
        1 => gaussian_density(t, x[0], 0.0),
        2 => {
            let coarse = theta_n2(drift.a(), t, x[0], x[1], 1.0)?;
            let fine = theta_n2(drift.a(), t, x[0], x[1], quad.refine_factor as f64)?;
            if (coarse - fine).abs() > 1e-8 * (1.0 + fine.abs()) {
                return Err(Error::NonConvergent {
                    what: "entrance-law spectral integral".into(),
                    discrepancy: (coarse - fine).abs(),
                    tol: 1e-8,
                });
            }
            Ok(fine)
        }
        n => Err(Error::UnsupportedN(n)),
    }
}

/// theta_2(t, x) = (a^2 / (pi^2 t^2)) e^{-X^2/4t} *
/// integral over u >= 0 of e^{-c cosh u + a^2 (pi^2 - u^2)/t}
/// [pi cos(2 pi a^2 u / t) - u sin(2 pi a^2 u / t)] du,
/// with X = x1 + x2 and c = 2 exp(-(x2 - x1)/(2a)).
fn theta_n2(a: f64, t: f64, x1: f64, x2: f64, resolution: f64) -> Result<f64> {
    let big_x = x1 + x2;
    let d_half = (x2 - x1) / (2.0 * a);
    if d_half < -700.0 {
        // The Bessel argument overflows; the density has already
        // underflowed to zero this deep into the swapped region.
        return Ok(0.0);
    }
    let c = 2.0 * (-d_half).exp();
    let a2t = a * a / t;
    let beta = 2.0 * std::f64::consts::PI * a2t;
    let bound = 46.0 + a2t * std::f64::consts::PI.powi(2);
    let u_gauss = (bound / a2t).sqrt();
    let u_cosh = if bound / c > 1e12 {
        (2.0 * bound / c).ln()
    } else {
        (bound / c + 1.0).acosh()
    };
    let u_max = u_gauss.min(u_cosh);
    if !u_max.is_finite() || u_max <= 0.0 {
        return Ok(0.0);
    }
    // Resolution beyond the oscillation scale: downstream oracles tilt the
    // density by exp(|x|/a)-sized weights, so the absolute noise floor
    // here has to sit near 1e-13.
    let points = ((u_max * (beta + 4.0) * 4.0 * resolution).ceil() as usize).max(128);
    let (nodes, weights) = composite_gl(0.0, u_max, points);
    let vals: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| {
            let expo = -c * u.cosh() + a2t * (std::f64::consts::PI.powi(2) - u * u);
            let (s, co) = (beta * u).sin_cos();
            w * expo.exp() * (std::f64::consts::PI * co - u * s)
        })
        .collect();
    let integral = pairwise_sum(&vals);
    Ok(a * a / (std::f64::consts::PI.powi(2) * t * t) * (-big_x * big_x / (4.0 * t)).exp()
        * integral)
}

/// Entrance-law density exp(-t |nu|^2 / 2a^2) psi_nu(x/a) theta(t, x) with
/// nu = a nu_hat.
pub fn wm_density(drift: &DriftSpec, t: f64, x: &[f64], quad: &QuadConfig) -> Result<f64> {
    let a = drift.a();
    match x.len() {
        1 => {
            // psi is a plain exponential; the density is the Gaussian with
            // mean t nu_hat and variance t.
            gaussian_density(t, t * drift.nu_hat()[0], x[0])
        }
        2 => {
            let nu2: f64 = drift.nu_hat().iter().map(|v| v * v).sum();
            let psi = whittaker_n2(
                Complex::new(a * drift.nu_hat()[0], 0.0),
                Complex::new(a * drift.nu_hat()[1], 0.0),
                x[0] / a,
                x[1] / a,
            )?;
            let theta = theta_entrance(drift, t, x, quad)?;
            Ok((-t * nu2 / 2.0).exp() * psi.re * theta)
        }
        n => Err(Error::UnsupportedN(n)),
    }
}

/// Per-coordinate integration window for the plane integrals: the
/// entrance-law mass sits under Gaussian envelopes centered at t nu_hat_j.
fn plane_box(drift: &DriftSpec, t: f64, quad: &QuadConfig) -> Vec<(f64, f64)> {
    let pad = quad.tail_sigmas * t.sqrt();
    drift
        .nu_hat()
        .iter()
        .map(|&nu| (t * nu - pad, t * nu + pad))
        .collect()
}

fn observable_quadrature(
    drift: &DriftSpec,
    obs: &ObservablePoint,
    quad: &QuadConfig,
    order: usize,
) -> Result<f64> {
    let a = drift.a();
    let boxes = plane_box(drift, obs.t, quad);
    match drift.n() {
        1 => {
            let (xs, ws) = gauss_legendre(order, boxes[0].0, boxes[0].1)?;
            let vals: Vec<f64> = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| {
                    Ok(w * theta_soft(x - obs.h, a) * wm_density(drift, obs.t, &[x], quad)?)
                })
                .collect::<Result<_>>()?;
            Ok(pairwise_sum(&vals))
        }
        2 => {
            let (x1s, w1s) = gauss_legendre(order, boxes[0].0, boxes[0].1)?;
            let (x2s, w2s) = gauss_legendre(order, boxes[1].0, boxes[1].1)?;
            let rows: Vec<Result<f64>> = x1s
                .par_iter()
                .zip(&w1s)
                .map(|(&x1, &w1)| {
                    let soft = theta_soft(x1 - obs.h, a);
                    if soft == 0.0 {
                        return Ok(0.0);
                    }
                    let vals: Vec<f64> = x2s
                        .iter()
                        .zip(&w2s)
                        .map(|(&x2, &w2)| {
                            Ok(w2 * wm_density(drift, obs.t, &[x1, x2], quad)?)
                        })
                        .collect::<Result<_>>()?;
                    Ok(w1 * soft * pairwise_sum(&vals))
                })
                .collect();
            let rows: Vec<f64> = rows.into_iter().collect::<Result<_>>()?;
            Ok(pairwise_sum(&rows))
        }
        n => Err(Error::UnsupportedN(n)),
    }
}

/// Ground-truth oracle for the observable at N <= 2: the softened
/// indicator integrated directly against the entrance-law density.
pub fn direct_observable(drift: &DriftSpec, obs: &ObservablePoint, quad: &QuadConfig) -> Result<f64> {
    quad.validate()?;
    let coarse = observable_quadrature(drift, obs, quad, quad.gl_order)?;
    let fine = observable_quadrature(drift, obs, quad, quad.gl_order * quad.refine_factor)?;
    if (coarse - fine).abs() > 1e-6 * (1.0 + fine.abs()) {
        return Err(Error::NonConvergent {
            what: "direct observable quadrature".into(),
            discrepancy: (coarse - fine).abs(),
            tol: 1e-6,
        });
    }
    Ok(fine)
}

/// f(v) = exp(t v / a^2) prod_l (v + nu_l)^{-1}, nu = a nu_hat: the
/// residue factor of the moment formulas, with poles at -nu_l.
pub fn f_factor(drift: &DriftSpec, t: f64, v: Complex) -> Result<Complex> {
    let a = drift.a();
    let mut denom = Complex::new(1.0, 0.0);
    for (l, &nu) in drift.nu_hat().iter().enumerate() {
        let factor = v + a * nu;
        if factor.norm() < 1e-8 {
            return Err(Error::NearPole {
                dist: factor.norm(),
                pole: -a * nu,
                index: l,
            });
        }
        denom *= factor;
    }
    Ok((v * (t / (a * a))).exp() / denom)
}

/// First moment of exp(-X_1/a), both routes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPair {
    /// Residue sum e^{t/2a^2} sum_j e^{-t nu_j/a^2} prod_{l != j} (nu_l - nu_j)^{-1}.
    pub residues: f64,
    /// Circle quadrature of e^{t/2a^2} f(v) around the poles.
    pub contour: f64,
    pub rel_gap: f64,
}

fn moment_circle(drift: &DriftSpec, t: f64, quad: &QuadConfig) -> Result<(Vec<Complex>, Vec<Complex>)> {
    let spec = ContourSpec::defaults(drift, t.max(1e-6), quad)?;
    let a = drift.a();
    let (nodes, weights) = circle_rule(
        Complex::new(-a * spec.circle_center, 0.0),
        a * spec.circle_radius,
        spec.circle_points,
    )?;
    let two_pi_i = 2.0 * std::f64::consts::PI * Complex::i();
    Ok((nodes, weights.into_iter().map(|w| w / two_pi_i).collect()))
}

pub fn moment_first(drift: &DriftSpec, t: f64, quad: &QuadConfig) -> Result<MomentPair> {
    let a = drift.a();
    let nu: Vec<f64> = drift.nu_hat().iter().map(|&v| a * v).collect();
    let scale = (t / (2.0 * a * a)).exp();
    let mut residues = 0.0;
    for j in 0..nu.len() {
        let mut prod = 1.0;
        for (l, &nul) in nu.iter().enumerate() {
            if l != j {
                prod *= nul - nu[j];
            }
        }
        residues += (-t * nu[j] / (a * a)).exp() / prod;
    }
    residues *= scale;
    let (nodes, weights) = moment_circle(drift, t, quad)?;
    let vals: Vec<Complex> = nodes
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| Ok(w * f_factor(drift, t, v)?))
        .collect::<Result<_>>()?;
    let contour = scale * pairwise_sum_complex(&vals).re;
    let rel_gap = (residues - contour).abs() / residues.abs().max(contour.abs()).max(1e-300);
    Ok(MomentPair {
        residues,
        contour,
        rel_gap,
    })
}

/// kappa-th moment of exp(-X_1/a) via the partition-indexed multiple
/// circle-contour form, kappa <= 3.
pub fn moment_kappa(drift: &DriftSpec, t: f64, kappa: usize, quad: &QuadConfig) -> Result<f64> {
    if kappa == 0 {
        return Ok(1.0);
    }
    if kappa > 3 {
        return Err(Error::SizeMismatch(format!(
            "moments implemented for kappa <= 3, got {kappa}"
        )));
    }
    let a = drift.a();
    let (nodes, weights) = moment_circle(drift, t, quad)?;
    let m = nodes.len();
    // f(v + s) for every node and shift.
    let mut shifted = vec![vec![Complex::new(0.0, 0.0); kappa]; m];
    for (row, &v) in shifted.iter_mut().zip(&nodes) {
        for (s, slot) in row.iter_mut().enumerate() {
            *slot = f_factor(drift, t, v + s as f64)?;
        }
    }
    let f_run = |i: usize, lambda: usize| -> Complex {
        (0..lambda).map(|s| shifted[i][s]).product()
    };
    let mut total = Complex::new(0.0, 0.0);
    for lambda in partitions(kappa) {
        let parts = lambda.parts();
        let term = match parts.len() {
            1 => {
                let l1 = parts[0] as f64;
                let vals: Vec<Complex> = (0..m)
                    .map(|i| weights[i] * f_run(i, parts[0]) / l1)
                    .collect();
                pairwise_sum_complex(&vals)
            }
            2 => {
                let vals: Vec<Complex> = (0..m)
                    .into_par_iter()
                    .map(|i| {
                        let mut acc = Complex::new(0.0, 0.0);
                        for j in 0..m {
                            let d11 = 1.0 / parts[0] as f64;
                            let d22 = 1.0 / parts[1] as f64;
                            let d12 = 1.0 / (nodes[i] + parts[0] as f64 - nodes[j]);
                            let d21 = 1.0 / (nodes[j] + parts[1] as f64 - nodes[i]);
                            let det = d11 * d22 - d12 * d21;
                            acc += weights[i] * weights[j] * det * f_run(i, parts[0]) * f_run(j, parts[1]);
                        }
                        acc
                    })
                    .collect();
                pairwise_sum_complex(&vals)
            }
            3 => {
                let vals: Vec<Complex> = (0..m)
                    .into_par_iter()
                    .map(|i| {
                        let mut acc = Complex::new(0.0, 0.0);
                        let e = |p: usize, q: usize| {
                            1.0 / (nodes[p] + 1.0 - nodes[q])
                        };
                        for j in 0..m {
                            for k in 0..m {
                                let det = e(i, i) * (e(j, j) * e(k, k) - e(j, k) * e(k, j))
                                    - e(i, j) * (e(j, i) * e(k, k) - e(j, k) * e(k, i))
                                    + e(i, k) * (e(j, i) * e(k, j) - e(j, j) * e(k, i));
                                acc += weights[i]
                                    * weights[j]
                                    * weights[k]
                                    * det
                                    * f_run(i, 1)
                                    * f_run(j, 1)
                                    * f_run(k, 1);
                            }
                        }
                        acc
                    })
                    .collect();
                pairwise_sum_complex(&vals)
            }
            _ => unreachable!("kappa <= 3"),
        };
        total += term / lambda.multiplicity_factorial();
    }
    let mut kfact = 1.0;
    for k in 2..=kappa {
        kfact *= k as f64;
    }
    let value = kfact * (kappa as f64 * t / (2.0 * a * a)).exp() * total;
    if value.im.abs() > 1e-10 * (1.0 + value.re.abs()) {
        return Err(Error::NonConvergent {
            what: "moment contour sum: imaginary residual".into(),
            discrepancy: value.im.abs(),
            tol: 1e-10,
        });
    }
    Ok(value.re)
}

/// The two-term expression for the second moment: a size-2 determinant
/// double contour plus a single shifted-product contour. Kept as its own
/// literal evaluation so the partition machinery has an independent check.
pub fn moment_two_term(drift: &DriftSpec, t: f64, quad: &QuadConfig) -> Result<f64> {
    let a = drift.a();
    let (nodes, weights) = moment_circle(drift, t, quad)?;
    let m = nodes.len();
    let f0: Vec<Complex> = nodes
        .iter()
        .map(|&v| f_factor(drift, t, v))
        .collect::<Result<_>>()?;
    let f1: Vec<Complex> = nodes
        .iter()
        .map(|&v| f_factor(drift, t, v + 1.0))
        .collect::<Result<_>>()?;
    let mut double = Complex::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let det = Complex::new(1.0, 0.0)
                - 1.0 / ((nodes[i] + 1.0 - nodes[j]) * (nodes[j] + 1.0 - nodes[i]));
            double += weights[i] * weights[j] * det * f0[i] * f0[j];
        }
    }
    let mut single = Complex::new(0.0, 0.0);
    for i in 0..m {
        single += weights[i] * f0[i] * f1[i] / 2.0;
    }
    let value = 2.0 * (t / (a * a)).exp() * (0.5 * double + single);
    Ok(value.re)
}

/// Size-2 determinant identity: returns the determinant form
/// det[[1, 1/(v1+1-v2)], [1/(v2+1-v1), 1]] next to its closed form
/// -(v1-v2)^2 / (1 - (v1-v2)^2).
pub fn identity_det_size2(v1: Complex, v2: Complex) -> Result<(Complex, Complex)> {
    let d = v1 - v2;
    if (d - 1.0).norm() < 1e-10 || (d + 1.0).norm() < 1e-10 {
        return Err(Error::SingularShift(format!("|v1 - v2| = {} within 1e-10 of 1", d.norm())));
    }
    let one = Complex::new(1.0, 0.0);
    let m = vec![
        vec![one, 1.0 / (v1 + 1.0 - v2)],
        vec![1.0 / (v2 + 1.0 - v1), one],
    ];
    let det = complex_det(&m)?;
    let closed = -(d * d) / (one - d * d);
    Ok((det, closed))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(current: &mut Vec<usize>, remaining: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(current.clone());
            return;
        }
        for i in 0..remaining.len() {
            let v = remaining.remove(i);
            current.push(v);
            rec(current, remaining, out);
            current.pop();
            remaining.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Symmetrization identity, kappa = len(v) <= 4: returns
/// ((1/kappa!) sum over permutations of prod_{p<q} (v_q - v_p)/(v_q - v_p + 1),
///  det[(v_j + 1 - v_l)^{-1}]).
pub fn identity_symmetrization(v: &[Complex]) -> Result<(Complex, Complex)> {
    let kappa = v.len();
    if kappa == 0 || kappa > 4 {
        return Err(Error::SizeMismatch(format!(
            "symmetrization implemented for 1 <= kappa <= 4, got {kappa}"
        )));
    }
    for j in 0..kappa {
        for l in 0..kappa {
            if j != l && (v[j] - v[l] + 1.0).norm() < 1e-10 {
                return Err(Error::SingularShift(format!(
                    "v[{j}] - v[{l}] within 1e-10 of -1"
                )));
            }
        }
    }
    let mut lhs = Complex::new(0.0, 0.0);
    let perms = permutations(kappa);
    for sigma in &perms {
        let mut prod = Complex::new(1.0, 0.0);
        for q in 0..kappa {
            for p in 0..q {
                let d = v[sigma[q]] - v[sigma[p]];
                prod *= d / (d + 1.0);
            }
        }
        lhs += prod;
    }
    lhs /= perms.len() as f64;
    let m: Vec<Vec<Complex>> = (0..kappa)
        .map(|j| (0..kappa).map(|l| 1.0 / (v[j] + 1.0 - v[l])).collect())
        .collect();
    let rhs = complex_det(&m)?;
    Ok((lhs, rhs))
}
