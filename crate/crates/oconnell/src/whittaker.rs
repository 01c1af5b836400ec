//! Class-one GL(N) Whittaker functions for N <= 3 via the Givental integral
//! over triangular arrays, the N = 2 Bessel-K closed form, the Sklyanin
//! spectral density, and checks of the recurrence and small-scale
//! asymptotics the rest of the crate leans on.

use crate::numkit::{bessel_k, gauss_legendre, log_gamma, pairwise_sum_complex, Complex, QuadConfig};
use crate::{Error, Result};

/// Index vector of a Whittaker function, possibly imaginary.
#[derive(Debug, Clone, PartialEq)]
pub struct WhittakerIndex {
    nu: Vec<Complex>,
}

impl WhittakerIndex {
    /// The Givental integral dimension grows as N(N-1)/2; only N <= 3 is
    /// within desk-scale quadrature.
    pub fn new(nu: Vec<Complex>) -> Result<Self> {
        if nu.is_empty() || nu.len() > 3 {
            return Err(Error::UnsupportedN(nu.len()));
        }
        if nu.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::SizeMismatch("index entries must be finite".into()));
        }
        Ok(WhittakerIndex { nu })
    }

    pub fn from_reals(nu: &[f64]) -> Result<Self> {
        Self::new(nu.iter().map(|&v| Complex::new(v, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[Complex] {
        &self.nu
    }
}

/// Real lower-triangular array with fixed bottom row: interior rows
/// 1..N-1 flattened row-major, boundary row N equal to the evaluation
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct GiventalArray {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl GiventalArray {
    pub fn new(interior: Vec<f64>, boundary: Vec<f64>) -> Result<Self> {
        let n = boundary.len();
        if n == 0 || n > 3 {
            return Err(Error::UnsupportedN(n));
        }
        if interior.len() != n * (n - 1) / 2 {
            return Err(Error::SizeMismatch(format!(
                "interior must hold N(N-1)/2 = {} values, got {}",
                n * (n - 1) / 2,
                interior.len()
            )));
        }
        if interior.iter().chain(boundary.iter()).any(|v| !v.is_finite()) {
            return Err(Error::SizeMismatch("array entries must be finite".into()));
        }
        Ok(GiventalArray { interior, boundary })
    }

    /// Entry T_{j,k}, 1-based, row j in 1..=N, column k in 1..=j.
    fn entry(&self, j: usize, k: usize) -> f64 {
        let n = self.boundary.len();
        if j == n {
            self.boundary[k - 1]
        } else {
            self.interior[j * (j - 1) / 2 + k - 1]
        }
    }
}

/// Exponent of the Givental integrand:
/// sum_j nu_j (row_j - row_{j-1}) - sum of nearest-neighbor exponentials.
pub fn givental_exponent(index: &WhittakerIndex, arr: &GiventalArray) -> Result<Complex> {
    let n = index.n();
    if arr.boundary.len() != n {
        return Err(Error::SizeMismatch(format!(
            "index has N = {}, array has N = {}",
            n,
            arr.boundary.len()
        )));
    }
    let row_sum = |j: usize| -> f64 { (1..=j).map(|k| arr.entry(j, k)).sum() };
    let mut f = Complex::new(0.0, 0.0);
    let mut prev = 0.0;
    for j in 1..=n {
        let s = row_sum(j);
        f += index.nu[j - 1] * (s - prev);
        prev = s;
    }
    let mut pot = 0.0;
    for j in 1..n {
        for k in 1..=j {
            pot += (-(arr.entry(j, k) - arr.entry(j + 1, k))).exp();
            pot += (-(arr.entry(j + 1, k + 1) - arr.entry(j, k))).exp();
        }
    }
    Ok(f - pot)
}

/// Nodes clustered around `center` by a sinh stretch, matching the
/// double-exponential decay of the Givental integrand in each interior
/// variable. Covers [center - halfwidth, center + halfwidth].
fn sinh_clustered_nodes(center: f64, halfwidth: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let alpha = 2.0;
    let beta = (halfwidth / alpha).asinh();
    let (v, wv) = gauss_legendre(order, -1.0, 1.0).expect("order >= 2");
    let nodes = v.iter().map(|&u| center + alpha * (beta * u).sinh()).collect();
    let weights = v
        .iter()
        .zip(&wv)
        .map(|(&u, &w)| w * alpha * beta * (beta * u).cosh())
        .collect();
    (nodes, weights)
}

/// psi_nu(x) as the Givental integral over interior variables. N = 1 is
/// exact, N = 2 a single integral, N = 3 a tensor quadrature. Returns the
/// value and a relative error estimate from an order-doubling pass.
pub fn whittaker_givental(
    index: &WhittakerIndex,
    x: &[f64],
    quad: &QuadConfig,
) -> Result<(Complex, f64)> {
    let n = index.n();
    if x.len() != n {
        return Err(Error::SizeMismatch(format!(
            "index has N = {}, point has {} coordinates",
            n,
            x.len()
        )));
    }
    if n == 1 {
        return Ok(((index.nu[0] * x[0]).exp(), 0.0));
    }
    let coarse = givental_quadrature(index, x, quad.gl_order)?;
    let fine = givental_quadrature(index, x, quad.gl_order * quad.refine_factor)?;
    let err = (fine - coarse).norm() / fine.norm().max(1e-300);
    if err > 1e-6 {
        return Err(Error::NonConvergent {
            what: format!("Givental integral at N = {n}"),
            discrepancy: err,
            tol: 1e-6,
        });
    }
    Ok((fine, err))
}

fn givental_quadrature(index: &WhittakerIndex, x: &[f64], order: usize) -> Result<Complex> {
    match index.n() {
        2 => {
            let center = 0.5 * (x[0] + x[1]);
            let halfwidth = 30.0 + (x[1] - x[0]).abs();
            let (nodes, weights) = sinh_clustered_nodes(center, halfwidth, order);
            let vals: Vec<Complex> = nodes
                .iter()
                .zip(&weights)
                .map(|(&t, &w)| {
                    let arr = GiventalArray {
                        interior: vec![t],
                        boundary: x.to_vec(),
                    };
                    let f = givental_exponent(index, &arr).expect("sizes match");
                    f.exp() * w
                })
                .collect();
            Ok(pairwise_sum_complex(&vals))
        }
        3 => {
            let (n21, w21) =
                sinh_clustered_nodes(0.5 * (x[0] + x[1]), 30.0 + (x[1] - x[0]).abs(), order);
            let (n22, w22) =
                sinh_clustered_nodes(0.5 * (x[1] + x[2]), 30.0 + (x[2] - x[1]).abs(), order);
            let (n11, w11) = sinh_clustered_nodes(
                0.25 * (x[0] + 2.0 * x[1] + x[2]),
                30.0 + (x[2] - x[0]).abs(),
                order,
            );
            let mut slices = Vec::with_capacity(n21.len());
            for (&t21, &a) in n21.iter().zip(&w21) {
                let mut inner = Vec::with_capacity(n22.len());
                for (&t22, &b) in n22.iter().zip(&w22) {
                    let mut innermost = Vec::with_capacity(n11.len());
                    for (&t11, &c) in n11.iter().zip(&w11) {
                        let arr = GiventalArray {
                            interior: vec![t11, t21, t22],
                            boundary: x.to_vec(),
                        };
                        let f = givental_exponent(index, &arr).expect("sizes match");
                        innermost.push(f.exp() * c);
                    }
                    inner.push(pairwise_sum_complex(&innermost) * b);
                }
                slices.push(pairwise_sum_complex(&inner) * a);
            }
            Ok(pairwise_sum_complex(&slices))
        }
        n => Err(Error::UnsupportedN(n)),
    }
}

/// N = 2 closed form: substituting T = (x1+x2)/2 + s in the Givental
/// integral leaves 2 exp((nu1+nu2)(x1+x2)/2) K_{nu1-nu2}(2 exp(-(x2-x1)/2)).
/// Verified against `whittaker_givental` in this module's tests before
/// anything else relies on it.
pub fn whittaker_n2(nu1: Complex, nu2: Complex, x1: f64, x2: f64) -> Result<Complex> {
    let half_gap = 0.5 * (x2 - x1);
    if half_gap < -700.0 {
        // The Bessel argument would overflow f64; K decays like exp(-arg),
        // so the value underflows to an exact zero first.
        return Ok(Complex::new(0.0, 0.0));
    }
    let arg = 2.0 * (-half_gap).exp();
    let k = bessel_k(nu1 - nu2, arg)?;
    if k == Complex::new(0.0, 0.0) {
        return Ok(k);
    }
    Ok(2.0 * ((nu1 + nu2) * (0.5 * (x1 + x2))).exp() * k)
}

/// Sklyanin density in its sinh-product form:
/// (2 pi)^-N (N!)^-1 prod_{j<l} (mu_l - mu_j) sinh(pi (mu_l - mu_j)) / pi.
pub fn sklyanin_density(mu: &[f64]) -> f64 {
    let n = mu.len();
    let mut prod = 1.0;
    for l in 1..n {
        for j in 0..l {
            let d = mu[l] - mu[j];
            prod *= d * (std::f64::consts::PI * d).sinh() / std::f64::consts::PI;
        }
    }
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    prod / ((2.0 * std::f64::consts::PI).powi(n as i32) * fact)
}

/// The |Gamma(i(mu_l - mu_j))|^-2 form of the same density; kept separate
/// so the two displayed forms can be checked against each other.
pub fn sklyanin_density_gamma_form(mu: &[f64]) -> Result<f64> {
    let n = mu.len();
    let mut log_prod = 0.0;
    for l in 1..n {
        for j in 0..l {
            let d = mu[l] - mu[j];
            if d == 0.0 {
                return Ok(0.0);
            }
            log_prod -= 2.0 * log_gamma(Complex::new(0.0, d))?.re;
        }
    }
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    Ok(log_prod.exp() / ((2.0 * std::f64::consts::PI).powi(n as i32) * fact))
}

/// Relative residual of the first recurrence relation at N = 2:
/// sum_j prod_{k != j} (i(nu_k - nu_j))^-1 psi_{i(nu + i e_j)}(x)
/// against exp(-x1) psi_{i nu}(x).
pub fn check_recurrence(nu: &[f64], x: &[f64]) -> Result<f64> {
    if nu.len() != 2 || x.len() != 2 {
        return Err(Error::UnsupportedN(nu.len().max(x.len())));
    }
    let gap = nu[1] - nu[0];
    if gap.abs() < 1e-10 {
        return Err(Error::DegenerateIndex(gap.abs()));
    }
    let i = Complex::i();
    let mut lhs = Complex::new(0.0, 0.0);
    for j in 0..2 {
        let k = 1 - j;
        let coef = 1.0 / (i * (nu[k] - nu[j]));
        // index i(nu + i e_j): component l is i nu_l - delta_{jl}
        let idx0 = i * nu[0] - if j == 0 { 1.0 } else { 0.0 };
        let idx1 = i * nu[1] - if j == 1 { 1.0 } else { 0.0 };
        lhs += coef * whittaker_n2(idx0, idx1, x[0], x[1])?;
    }
    let rhs = (-x[0]).exp() * whittaker_n2(i * nu[0], i * nu[1], x[0], x[1])?;
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// Gaps |a^{N(N-1)/2} psi_{a nu}(x/a) - det[e^{x_j nu_l}] / h_N(nu)|
/// (relative) along a decreasing list of scales a. N = 2 only.
pub fn check_asymptotic(nu: &[f64], x: &[f64], a_values: &[f64]) -> Result<Vec<f64>> {
    if nu.len() != 2 || x.len() != 2 {
        return Err(Error::UnsupportedN(nu.len().max(x.len())));
    }
    if (nu[1] - nu[0]).abs() < 1e-10 {
        return Err(Error::DegenerateIndex((nu[1] - nu[0]).abs()));
    }
    let det = (x[0] * nu[0] + x[1] * nu[1]).exp() - (x[0] * nu[1] + x[1] * nu[0]).exp();
    let target = det / (nu[1] - nu[0]);
    a_values
        .iter()
        .map(|&a| {
            let psi = whittaker_n2(
                Complex::new(a * nu[0], 0.0),
                Complex::new(a * nu[1], 0.0),
                x[0] / a,
                x[1] / a,
            )?;
            Ok((a * psi.re - target).abs() / target.abs())
        })
        .collect()
}
