//! Exact evaluation of the softened gap observable through the rank-N Gram
//! reduction of its Fredholm determinant, the direct (N+1)-term Fredholm
//! series as a cross-check, and the double-contour kernel form as an
//! independent second route.

use rayon::prelude::*;

use crate::kernel::{phi_gauss_avg, DriftSpec, ObservablePoint};
use crate::numkit::{
    circle_rule, complex_det, gauss_legendre, gaussian_density, log_gamma, pairwise_sum,
    pairwise_sum_complex, Complex, QuadConfig,
};
use crate::{Error, Result};

/// Reduced form of the Fredholm operator: the observable equals
/// det(I - G) with G_{jk} = integral over (-inf, h] of B_j(x) A_k(x) dx.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub entries: Vec<Vec<f64>>,
    pub h: f64,
    /// Set when the integration window reaches below the rightmost pole
    /// cap t (nu_max - 1/a) + 0.5, where the kernel's Gaussian average is
    /// evaluated by analytic continuation rather than by the plain
    /// real-axis integral.
    pub truncation_warning: bool,
    /// Largest entrywise shift seen in the order-refinement pass.
    pub refine_discrepancy: f64,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// det(I - G).
    pub fn determinant(&self) -> Result<f64> {
        let n = self.n();
        let m: Vec<Vec<Complex>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let id = if j == k { 1.0 } else { 0.0 };
                        Complex::new(id - self.entries[j][k], 0.0)
                    })
                    .collect()
            })
            .collect();
        Ok(complex_det(&m)?.re)
    }
}

fn b_value(drift: &DriftSpec, tau: f64, xi: f64, gh: usize) -> Result<Vec<f64>> {
    (0..drift.n())
        .map(|j| {
            let v = phi_gauss_avg(drift, j, tau, xi, gh)?;
            if v.im.abs() >= 1e-10 * (1.0 + v.re.abs()) {
                return Err(Error::NonConvergent {
                    what: "Gaussian average of the lifted factor: imaginary residual".into(),
                    discrepancy: v.im.abs(),
                    tol: 1e-10 * (1.0 + v.re.abs()),
                });
            }
            Ok(v.re)
        })
        .collect()
}

/// Factor tables A[j][p], B[j][p] with calK(x_p, x_q) = sum_j A[j][p] B[j][q].
type BasisTables = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Rank-N factor tables on a grid.
fn basis_tables(drift: &DriftSpec, t: f64, xs: &[f64], gh: usize) -> Result<BasisTables> {
    let n = drift.n();
    let per_node: Vec<Result<(Vec<f64>, Vec<f64>)>> = xs
        .par_iter()
        .map(|&x| {
            let a_col: Vec<f64> = drift
                .nu_hat()
                .iter()
                .map(|&nu| gaussian_density(t, t * nu, x))
                .collect::<Result<_>>()?;
            let b_col = b_value(drift, 1.0 / t, x / t, gh)?;
            Ok((a_col, b_col))
        })
        .collect();
    let mut a = vec![vec![0.0; xs.len()]; n];
    let mut b = vec![vec![0.0; xs.len()]; n];
    for (p, r) in per_node.into_iter().enumerate() {
        let (a_col, b_col) = r?;
        for j in 0..n {
            a[j][p] = a_col[j];
            b[j][p] = b_col[j];
        }
    }
    Ok((a, b))
}

fn gram_window(drift: &DriftSpec, obs: &ObservablePoint, quad: &QuadConfig) -> (f64, f64, bool) {
    let t = obs.t;
    let lo = t * drift.nu_min() - quad.tail_sigmas * t.sqrt();
    let cap = t * (drift.nu_max() - 1.0 / drift.a()) + 0.5;
    let warning = cap > lo && obs.h > lo;
    (lo, cap, warning)
}

fn gram_entries(
    drift: &DriftSpec,
    obs: &ObservablePoint,
    quad: &QuadConfig,
    gl: usize,
    gh: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = drift.n();
    let (lo, _, _) = gram_window(drift, obs, quad);
    if obs.h <= lo {
        return Ok(vec![vec![0.0; n]; n]);
    }
    let (xs, ws) = gauss_legendre(gl, lo, obs.h)?;
    let (a, b) = basis_tables(drift, obs.t, &xs, gh)?;
    let mut g = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            let vals: Vec<f64> = (0..xs.len()).map(|p| ws[p] * b[j][p] * a[k][p]).collect();
            g[j][k] = pairwise_sum(&vals);
        }
    }
    Ok(g)
}

/// G_{jk} = integral over [lo, h] of B_j(x) A_k(x) dx, where
/// A_k(x) = (1/t) p(1/t, x/t | nu_k) is a Gaussian density with mean
/// t nu_k and variance t, B_j is the (continued) Gaussian average of the
/// lifted factor at reciprocal time, and lo is the tail_sigmas cutoff of
/// the Gaussian factors. Checked by an order-refinement pass.
pub fn gram_matrix(drift: &DriftSpec, obs: &ObservablePoint, quad: &QuadConfig) -> Result<GramMatrix> {
    quad.validate()?;
    let (_, _, warning) = gram_window(drift, obs, quad);
    let coarse = gram_entries(drift, obs, quad, quad.gl_order, quad.gh_order)?;
    let fine = gram_entries(
        drift,
        obs,
        quad,
        quad.gl_order * quad.refine_factor,
        quad.gh_order * quad.refine_factor,
    )?;
    let mut disc: f64 = 0.0;
    for j in 0..drift.n() {
        for k in 0..drift.n() {
            disc = disc.max((coarse[j][k] - fine[j][k]).abs() / (1.0 + fine[j][k].abs()));
        }
    }
    if disc > 1e-8 {
        return Err(Error::NonConvergent {
            what: "Gram matrix refinement".into(),
            discrepancy: disc,
            tol: 1e-8,
        });
    }
    Ok(GramMatrix {
        entries: fine,
        h: obs.h,
        truncation_warning: warning,
        refine_discrepancy: disc,
    })
}

/// det_{N x N}(I - G): the observable's expectation. Algebraically equal
/// to the (N+1)-term Fredholm series because the kernel has rank N.
pub fn fredholm_rank_det(drift: &DriftSpec, obs: &ObservablePoint, quad: &QuadConfig) -> Result<f64> {
    gram_matrix(drift, obs, quad)?.determinant()
}

/// The direct Fredholm series
/// sum_{N'=0}^{max_terms} ((-1)^{N'} / N'!) integral over (-inf, h)^{N'}
/// of det[calK(x_j, x_k)] — a consistency check of the Gram reduction,
/// not a production evaluator.
pub fn fredholm_series_direct(
    drift: &DriftSpec,
    obs: &ObservablePoint,
    quad: &QuadConfig,
    max_terms: usize,
) -> Result<f64> {
    quad.validate()?;
    let n = drift.n();
    if n > 3 {
        return Err(Error::UnsupportedN(n));
    }
    if max_terms > n {
        return Err(Error::SizeMismatch(format!(
            "series truncation {max_terms} exceeds rank {n}; higher terms vanish"
        )));
    }
    let (lo, _, _) = gram_window(drift, obs, quad);
    if obs.h <= lo {
        return Ok(1.0);
    }
    let (xs, ws) = gauss_legendre(quad.gl_order, lo, obs.h)?;
    let (a, b) = basis_tables(drift, obs.t, &xs, quad.gh_order)?;
    let m = xs.len();
    let kernel = |p: usize, q: usize| -> f64 { (0..n).map(|j| a[j][p] * b[j][q]).sum() };

    let mut total = 1.0;
    if max_terms >= 1 {
        let diag: Vec<f64> = (0..m).map(|p| ws[p] * kernel(p, p)).collect();
        total -= pairwise_sum(&diag);
    }
    if max_terms >= 2 {
        let rows: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|p| {
                let mut acc = 0.0;
                let kpp = kernel(p, p);
                for q in 0..m {
                    let det2 = kpp * kernel(q, q) - kernel(p, q) * kernel(q, p);
                    acc += ws[p] * ws[q] * det2;
                }
                acc
            })
            .collect();
        total += pairwise_sum(&rows) / 2.0;
    }
    if max_terms >= 3 {
        let rows: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|p| {
                let mut acc = 0.0;
                for q in 0..m {
                    for r in 0..m {
                        let det3 = kernel(p, p)
                            * (kernel(q, q) * kernel(r, r) - kernel(q, r) * kernel(r, q))
                            - kernel(p, q)
                                * (kernel(q, p) * kernel(r, r) - kernel(q, r) * kernel(r, p))
                            + kernel(p, r)
                                * (kernel(q, p) * kernel(r, q) - kernel(q, q) * kernel(r, p));
                        acc += ws[p] * ws[q] * ws[r] * det3;
                    }
                }
                acc
            })
            .collect();
        total -= pairwise_sum(&rows) / 6.0;
    }
    Ok(total)
}

/// Circle and truncated-line contours for the double-contour route, in the
/// scaled (nu-hat / s-hat) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    /// Circle center and radius in the nu-hat plane; the corresponding
    /// circle for the unscaled variables is its image under v = -a w.
    pub circle_center: f64,
    pub circle_radius: f64,
    /// Line abscissa delta-hat = delta / a.
    pub sline_re: f64,
    /// Truncation half-width of the line, in s-hat units.
    pub sline_halfwidth: f64,
    pub circle_points: usize,
    pub sline_points: usize,
}

impl ContourSpec {
    /// Contours satisfying every constraint with margin: the circle
    /// encloses all nu_hat_j and no shifted pole, any contour pair has
    /// |v - v'| < 1, and the line abscissa delta = a sline_re sits in
    /// (2 a max|nu_hat|, 1) while clearing the circle diameter so the
    /// 1/(v + s - v') pole stays off the line.
    pub fn defaults(drift: &DriftSpec, t: f64, quad: &QuadConfig) -> Result<ContourSpec> {
        let a = drift.a();
        let hs = 0.5 * (drift.nu_max() - drift.nu_min());
        let center = 0.5 * (drift.nu_max() + drift.nu_min());
        let mut radius = quad
            .circle_radius
            .unwrap_or_else(|| (1.15 * hs + 0.05 / a).min(0.4 / a));
        let maxabs = drift.nu_hat().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let mut delta = (2.0 * a * radius + 0.15).max(2.0 * a * maxabs + 0.1);
        if delta > 0.96 {
            delta = 0.5 * (2.0 * a * maxabs + 1.0);
            let shrunk = (delta - 0.04) / (2.0 * a);
            if shrunk < hs {
                return Err(Error::ContourViolation(format!(
                    "cannot place the line abscissa: need delta in ({}, 1) clear of a circle of radius {radius}",
                    2.0 * a * maxabs
                )));
            }
            radius = radius.min(shrunk);
        }
        let halfwidth = quad.sline_halfwidth_sigmas / t.sqrt();
        // The reciprocal-Gamma factors modulate the line integrand faster
        // than its Gaussian envelope; ~40 points per unit keeps the line
        // quadrature at ~1e-8.
        let spec = ContourSpec {
            circle_center: center,
            circle_radius: radius,
            sline_re: delta / a,
            sline_halfwidth: halfwidth,
            circle_points: quad.circle_points,
            sline_points: quad.gl_order.max((40.0 * halfwidth).ceil() as usize),
        };
        spec.validate(drift)?;
        Ok(spec)
    }

    pub fn validate(&self, drift: &DriftSpec) -> Result<()> {
        let a = drift.a();
        if self.circle_radius <= 0.0 || self.sline_halfwidth <= 0.0 {
            return Err(Error::ContourViolation("contour sizes must be positive".into()));
        }
        if self.circle_points < 4 || self.sline_points < 4 {
            return Err(Error::ContourViolation("contour rules need >= 4 points".into()));
        }
        for (j, &nu) in drift.nu_hat().iter().enumerate() {
            if (nu - self.circle_center).abs() >= self.circle_radius {
                return Err(Error::ContourViolation(format!(
                    "circle must enclose nu_hat[{j}] = {nu}"
                )));
            }
            for m in 1..=3 {
                let shifted = nu + m as f64 / a;
                if (shifted - self.circle_center).abs() <= self.circle_radius {
                    return Err(Error::ContourViolation(format!(
                        "circle must exclude the shifted pole nu_hat[{j}] + {m}/a = {shifted}"
                    )));
                }
            }
        }
        if 2.0 * a * self.circle_radius >= 1.0 {
            return Err(Error::ContourViolation(
                "circle too large: contour pairs must satisfy |v - v'| < 1".into(),
            ));
        }
        let delta = a * self.sline_re;
        let maxabs = drift.nu_hat().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if delta <= 0.0 || delta >= 1.0 {
            return Err(Error::ContourViolation(format!(
                "line abscissa delta = {delta} must lie in (0, 1)"
            )));
        }
        if delta <= 2.0 * a * maxabs {
            return Err(Error::ContourViolation(format!(
                "line abscissa delta = {delta} must exceed 2 sup|nu_j| = {}",
                2.0 * a * maxabs
            )));
        }
        if delta <= 2.0 * a * self.circle_radius + 0.01 {
            return Err(Error::ContourViolation(format!(
                "line abscissa delta = {delta} too close to the circle diameter {}; the 1/(v+s-v') pole would sit near the line",
                2.0 * a * self.circle_radius
            )));
        }
        Ok(())
    }

    /// Circle nodes and d v / (2 pi i) weights in the unscaled v-plane
    /// (the contour around the negated drift points).
    fn v_circle(&self, a: f64) -> (Vec<Complex>, Vec<Complex>) {
        let (nodes, weights) = circle_rule(
            Complex::new(-a * self.circle_center, 0.0),
            a * self.circle_radius,
            self.circle_points,
        )
        .expect("validated");
        let two_pi_i = 2.0 * std::f64::consts::PI * Complex::i();
        (nodes, weights.into_iter().map(|w| w / two_pi_i).collect())
    }

    /// Line nodes s = delta + i w and d s / (2 pi i) weights in the
    /// unscaled s-plane.
    fn s_line(&self, a: f64) -> (Vec<Complex>, Vec<f64>) {
        let h = a * self.sline_halfwidth;
        let (ws, wts) = gauss_legendre(self.sline_points, -h, h).expect("validated");
        let delta = a * self.sline_re;
        let nodes = ws.iter().map(|&w| Complex::new(delta, w)).collect();
        let weights = wts.iter().map(|&w| w / (2.0 * std::f64::consts::PI)).collect();
        (nodes, weights)
    }
}

/// Gamma(-s) Gamma(1+s) = -pi / sin(pi s).
fn gamma_pair(s: Complex) -> Complex {
    -std::f64::consts::PI / (s * std::f64::consts::PI).sin()
}

/// The double-contour kernel K_u(v, v') at u = exp(h/a): a truncated-line
/// integral of Gamma(-s) Gamma(1+s) prod_l Gamma(v+nu_l)/Gamma(s+v+nu_l)
/// u^s exp(t v s / a^2 + t s^2 / 2 a^2) / (v + s - v').
pub fn bc_kernel(
    drift: &DriftSpec,
    obs: &ObservablePoint,
    v: Complex,
    vprime: Complex,
    contour: &ContourSpec,
) -> Result<Complex> {
    contour.validate(drift)?;
    let a = drift.a();
    let (s_nodes, s_weights) = contour.s_line(a);
    let mut num = Complex::new(0.0, 0.0);
    for (l, &nu) in drift.nu_hat().iter().enumerate() {
        let arg = v + a * nu;
        num += log_gamma(arg).map_err(|_| Error::ContourViolation(format!(
            "Gamma(v + nu_{l}) at a pole; move the circle"
        )))?;
    }
    let t_over_a2 = obs.t / (a * a);
    let vals: Vec<Complex> = s_nodes
        .iter()
        .zip(&s_weights)
        .map(|(&s, &w)| {
            let mut logf = num + s * (obs.h / a) + t_over_a2 * (v * s + s * s / 2.0);
            for &nu in drift.nu_hat() {
                logf -= log_gamma(s + v + a * nu).expect("line clear of poles");
            }
            w * gamma_pair(s) * logf.exp() / (v + s - vprime)
        })
        .collect();
    Ok(pairwise_sum_complex(&vals))
}

/// Partial sums of the double-contour Fredholm series.
#[derive(Debug, Clone)]
pub struct ContourSeries {
    /// Signed value of each series term, L = 0 first.
    pub terms: Vec<f64>,
    /// |term_L|, so convergence is observable.
    pub term_magnitudes: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// The final partial sum.
    pub value: f64,
}

/// Fredholm series over the circle contour, truncated at l_max <= 3:
/// sum_L (1/L!) contour-integrals of det[K_u(v_j, v_k)].
pub fn bc_fredholm_det(
    drift: &DriftSpec,
    obs: &ObservablePoint,
    contour: &ContourSpec,
    l_max: usize,
) -> Result<ContourSeries> {
    contour.validate(drift)?;
    if l_max > 3 {
        return Err(Error::SizeMismatch(format!(
            "term L costs circle_points^L kernel sums; l_max = {l_max} > 3"
        )));
    }
    let a = drift.a();
    let (v_nodes, v_weights) = contour.v_circle(a);
    let m = v_nodes.len();
    // K_u on every node pair; the s-line factors that do not involve v'
    // are shared across the row.
    let (s_nodes, s_weights) = contour.s_line(a);
    let t_over_a2 = obs.t / (a * a);
    let rows: Vec<Vec<Complex>> = v_nodes
        .par_iter()
        .map(|&v| {
            let mut num = Complex::new(0.0, 0.0);
            for &nu in drift.nu_hat() {
                num += log_gamma(v + a * nu).expect("circle clear of poles");
            }
            let factors: Vec<Complex> = s_nodes
                .iter()
                .zip(&s_weights)
                .map(|(&s, &w)| {
                    let mut logf = num + s * (obs.h / a) + t_over_a2 * (v * s + s * s / 2.0);
                    for &nu in drift.nu_hat() {
                        logf -= log_gamma(s + v + a * nu).expect("line clear of poles");
                    }
                    w * gamma_pair(s) * logf.exp()
                })
                .collect();
            v_nodes
                .iter()
                .map(|&vp| {
                    let vals: Vec<Complex> = factors
                        .iter()
                        .zip(&s_nodes)
                        .map(|(&f, &s)| f / (v + s - vp))
                        .collect();
                    pairwise_sum_complex(&vals)
                })
                .collect()
        })
        .collect();
    let k = |p: usize, q: usize| rows[p][q];

    let mut terms = vec![Complex::new(1.0, 0.0)];
    if l_max >= 1 {
        let vals: Vec<Complex> = (0..m).map(|p| v_weights[p] * k(p, p)).collect();
        terms.push(pairwise_sum_complex(&vals));
    }
    if l_max >= 2 {
        let vals: Vec<Complex> = (0..m)
            .into_par_iter()
            .map(|p| {
                let mut acc = Complex::new(0.0, 0.0);
                for q in 0..m {
                    let det2 = k(p, p) * k(q, q) - k(p, q) * k(q, p);
                    acc += v_weights[p] * v_weights[q] * det2;
                }
                acc
            })
            .collect();
        terms.push(pairwise_sum_complex(&vals) / 2.0);
    }
    if l_max >= 3 {
        let vals: Vec<Complex> = (0..m)
            .into_par_iter()
            .map(|p| {
                let mut acc = Complex::new(0.0, 0.0);
                for q in 0..m {
                    for r in 0..m {
                        let det3 = k(p, p) * (k(q, q) * k(r, r) - k(q, r) * k(r, q))
                            - k(p, q) * (k(q, p) * k(r, r) - k(q, r) * k(r, p))
                            + k(p, r) * (k(q, p) * k(r, q) - k(q, q) * k(r, p));
                        acc += v_weights[p] * v_weights[q] * v_weights[r] * det3;
                    }
                }
                acc
            })
            .collect();
        terms.push(pairwise_sum_complex(&vals) / 6.0);
    }

    let mut partial = Complex::new(0.0, 0.0);
    let mut partial_sums = Vec::with_capacity(terms.len());
    for &term in &terms {
        partial += term;
        if partial.im.abs() >= 1e-10 * (1.0 + partial.re.abs()) {
            return Err(Error::NonConvergent {
                what: "contour Fredholm series: imaginary residual".into(),
                discrepancy: partial.im.abs(),
                tol: 1e-10,
            });
        }
        partial_sums.push(partial.re);
    }
    Ok(ContourSeries {
        terms: terms.iter().map(|t| t.re).collect(),
        term_magnitudes: terms.iter().map(|t| t.norm()).collect(),
        value: *partial_sums.last().expect("L = 0 term always present"),
        partial_sums,
    })
}

/// Residual of the double-contour kernel identity: the circle-and-line
/// form of the kernel must equal the gauge-transformed reciprocal-time
/// kernel, independently of h. Verifies the residue computation and the
/// contour shift behind the rank-N representation.
pub fn check_kernel_chain(
    drift: &DriftSpec,
    obs: &ObservablePoint,
    x: f64,
    xprime: f64,
    contour: &ContourSpec,
    quad: &QuadConfig,
) -> Result<f64> {
    contour.validate(drift)?;
    let a = drift.a();
    let t = obs.t;
    let (w_nodes, w_weights) = circle_rule(
        Complex::new(contour.circle_center, 0.0),
        contour.circle_radius,
        contour.circle_points,
    )?;
    let two_pi_i = 2.0 * std::f64::consts::PI * Complex::i();
    let hw = contour.sline_halfwidth;
    let (line, line_w) = gauss_legendre(contour.sline_points, -hw, hw)?;
    let khat: Complex = {
        let per_w: Vec<Complex> = w_nodes
            .par_iter()
            .zip(&w_weights)
            .map(|(&w, &cw)| {
                let mut num = Complex::new(0.0, 0.0);
                for &nu in drift.nu_hat() {
                    num += log_gamma(a * (nu - w)).expect("circle avoids nu_hat poles");
                }
                let vals: Vec<Complex> = line
                    .iter()
                    .zip(&line_w)
                    .map(|(&im, &lw)| {
                        let s_hat = Complex::new(contour.sline_re, im);
                        let mut logf =
                            num + (xprime - t * w) * s_hat + t * s_hat * s_hat / 2.0 + w * (x - xprime);
                        for &nu in drift.nu_hat() {
                            logf -= log_gamma(a * (s_hat + nu - w)).expect("line clear of poles");
                        }
                        lw * gamma_pair(a * s_hat) * logf.exp()
                    })
                    .collect();
                // d s-hat / 2 pi i = d(Im s-hat) / 2 pi
                cw / two_pi_i * pairwise_sum_complex(&vals) / (2.0 * std::f64::consts::PI)
            })
            .collect();
        -a * pairwise_sum_complex(&per_w)
    };
    let gauge = ((x * x - xprime * xprime) / (2.0 * t)).exp();
    let rhs = -(1.0 / t)
        * gauge
        * crate::kernel::lifted_kernel(drift, 1.0 / t, x / t, xprime / t, quad)?;
    let scale = khat.norm().max(rhs.abs()).max(1e-300);
    Ok((khat - Complex::new(rhs, 0.0)).norm() / scale)
}
