//! The lifted kernel factor Phi, its entire combinatorial-limit form, the
//! rank-N equal-time kernel built from both, and the reciprocal-time
//! transform that turns it into the operator behind the observable.

use crate::numkit::{
    erfcx, gauss_hermite, gaussian_density, log_gamma, pairwise_sum_complex, Complex, QuadConfig,
};
use crate::{Error, Result};

/// Lifted drift configuration: particle positions nu_hat, softening scale a.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    nu_hat: Vec<f64>,
    a: f64,
}

impl DriftSpec {
    /// Validates distinctness (pairwise gaps >= 1e-3) and the sup bound
    /// max |nu_hat_j| < 1/(2a) required for the kernel representation.
    pub fn new(nu_hat: Vec<f64>, a: f64) -> Result<Self> {
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::DegenerateDrift(format!("a must be positive, got {a}")));
        }
        if nu_hat.is_empty() {
            return Err(Error::DegenerateDrift("need at least one particle".into()));
        }
        if nu_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateDrift("drift entries must be finite".into()));
        }
        for j in 0..nu_hat.len() {
            for k in 0..j {
                if (nu_hat[j] - nu_hat[k]).abs() < 1e-3 {
                    return Err(Error::DegenerateDrift(format!(
                        "nu_hat[{k}] = {} and nu_hat[{j}] = {} closer than 1e-3",
                        nu_hat[k], nu_hat[j]
                    )));
                }
            }
        }
        let sup = nu_hat.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if sup >= 0.5 / a {
            return Err(Error::DegenerateDrift(format!(
                "sup |nu_hat| = {sup} must be < 1/(2a) = {}",
                0.5 / a
            )));
        }
        Ok(DriftSpec { nu_hat, a })
    }

    pub fn nu_hat(&self) -> &[f64] {
        &self.nu_hat
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> usize {
        self.nu_hat.len()
    }

    pub fn nu_min(&self) -> f64 {
        self.nu_hat.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_hat.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy with the particle order permuted; the observable must not care.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::SizeMismatch("permutation length".into()));
        }
        DriftSpec::new(perm.iter().map(|&p| self.nu_hat[p]).collect(), self.a)
    }
}

/// Evaluation point (t, h) of the softened gap observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservablePoint {
    pub t: f64,
    pub h: f64,
}

impl ObservablePoint {
    pub fn new(t: f64, h: f64) -> Result<Self> {
        if t <= 0.0 || !t.is_finite() || !h.is_finite() {
            return Err(Error::NonPositiveTime(t));
        }
        Ok(ObservablePoint { t, h })
    }
}

/// Softened indicator exp(-exp(-x/a)); increases from 0 to 1, crossing
/// exp(-1) at x = 0, and sharpens to the step function as a -> 0.
pub fn theta_soft(x: f64, a: f64) -> f64 {
    debug_assert!(a > 0.0);
    (-(-x / a).exp()).exp()
}

/// Entire kernel factor of the noncolliding limit:
/// prod_{r != r'} (r - z) / (r - r').
pub fn phi_entire(config: &[f64], rprime: f64, z: Complex) -> Result<Complex> {
    let hit = config.iter().any(|&r| (r - rprime).abs() < 1e-12);
    if !hit {
        return Err(Error::RPrimeNotInConfig(rprime));
    }
    let mut prod = Complex::new(1.0, 0.0);
    for &r in config {
        if (r - rprime).abs() < 1e-12 {
            continue;
        }
        prod *= (r - z) / (r - rprime);
    }
    Ok(prod)
}

/// Simple poles of the lifted factor for particle `j`:
/// z_n = nu_hat_j - n/a, n = 1..=n_max. They run off to -infinity as
/// a -> 0, which is how the factor becomes entire in the limit.
pub fn pole_locations(drift: &DriftSpec, j: usize, n_max: usize) -> Vec<f64> {
    (1..=n_max)
        .map(|n| drift.nu_hat[j] - n as f64 / drift.a)
        .collect()
}

/// Lifted kernel factor
/// Phi_j(z) = Gamma(1 - a(nu_j - z)) prod_{l != j} Gamma(a(nu_l - nu_j)) / Gamma(a(nu_l - z)).
/// All Gammas go through log-gamma and a single exponentiation; products of
/// bare Gamma values overflow at moderate a * gaps.
pub fn phi_lifted(drift: &DriftSpec, j: usize, z: Complex) -> Result<Complex> {
    let a = drift.a;
    let nu = &drift.nu_hat;
    // Pole proximity: poles sit at nu_j - n/a on the real axis.
    let n_guess = (a * (nu[j] - z.re)).round();
    for n in [n_guess - 1.0, n_guess, n_guess + 1.0] {
        if n >= 1.0 {
            let pole = nu[j] - n / a;
            let dist = (z - pole).norm();
            if dist < 1e-8 {
                return Err(Error::NearPole {
                    dist,
                    pole,
                    index: n as usize,
                });
            }
        }
    }
    let mut log_sum = log_gamma(Complex::new(1.0, 0.0) - a * (nu[j] - z))?;
    for (l, &nul) in nu.iter().enumerate() {
        if l == j {
            continue;
        }
        let den = a * (nul - z);
        // A Gamma pole in the denominator is a zero of Phi.
        let nearest = den.re.round();
        if nearest <= 0.0 && (den.re - nearest).abs() < 1e-13 && den.im.abs() < 1e-13 {
            return Ok(Complex::new(0.0, 0.0));
        }
        log_sum += log_gamma(Complex::new(a * (nul - nu[j]), 0.0))? - log_gamma(den)?;
    }
    Ok(log_sum.exp())
}

/// Residue of Phi_j at z_n = nu_j - n/a:
/// (-1)^{n-1} / ((n-1)! a) prod_{l != j} Gamma(a(nu_l - nu_j)) / Gamma(a(nu_l - nu_j) + n).
pub(crate) fn phi_residue(drift: &DriftSpec, j: usize, n: usize) -> Result<f64> {
    let a = drift.a;
    let nu = &drift.nu_hat;
    let mut lg = -Complex::new(a.ln(), 0.0) - log_gamma(Complex::new(n as f64, 0.0))?;
    for (l, &nul) in nu.iter().enumerate() {
        if l == j {
            continue;
        }
        let g = a * (nul - nu[j]);
        lg += log_gamma(Complex::new(g, 0.0))? - log_gamma(Complex::new(g + n as f64, 0.0))?;
    }
    let v = lg.exp();
    let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    Ok(sign * v.re)
}

/// Gaussian-average pole integral continued across d = 0:
/// the d > 0 branch is integral of p(tau,y|0) / (d + iy) dy, and the
/// continuation to d < 0 adds the full residue sqrt(2 pi / tau) e^{d^2/2tau}.
fn pole_average(d: f64, tau: f64) -> f64 {
    (std::f64::consts::PI / (2.0 * tau)).sqrt() * erfcx(d / (2.0 * tau).sqrt())
}

/// B_j(tau, xi) = integral of p(tau, y | 0) Phi_j(xi + iy) dy along the
/// line the kernel representation is derived on. For xi right of every
/// pole this is the plain real-axis Gauss-Hermite average; poles at or
/// left of xi contribute their residues through the continued pole
/// average, and near-contour poles are subtracted from the quadrature so
/// the remaining integrand stays smooth.
pub(crate) fn phi_gauss_avg(
    drift: &DriftSpec,
    j: usize,
    tau: f64,
    xi: f64,
    gh_order: usize,
) -> Result<Complex> {
    let a = drift.a;
    let nu = &drift.nu_hat;
    let scale = (2.0 * tau).sqrt();
    let n_hi = (a * (nu[j] - xi + 6.0 * scale + 1.0)).floor();
    let mut poles: Vec<(f64, f64)> = Vec::new();
    if n_hi >= 1.0 {
        for n in 1..=(n_hi as usize) {
            let d = xi - (nu[j] - n as f64 / a);
            let u = d / scale;
            if u * u > 700.0 {
                return Err(Error::NonConvergent {
                    what: format!("pole continuation overflow at d = {d}"),
                    discrepancy: u * u,
                    tol: 700.0,
                });
            }
            poles.push((d, phi_residue(drift, j, n)?));
        }
    }
    let (un, uw) = gauss_hermite(gh_order)?;
    let mut vals = Vec::with_capacity(un.len());
    for (&u, &w) in un.iter().zip(&uw) {
        let y = scale * u;
        let mut f = phi_lifted(drift, j, Complex::new(xi, y))?;
        for &(d, r) in &poles {
            f -= r / Complex::new(d, y);
        }
        vals.push(w * f);
    }
    let mut b = pairwise_sum_complex(&vals) / std::f64::consts::PI.sqrt();
    for &(d, r) in &poles {
        b += r * pole_average(d, tau);
    }
    Ok(b)
}

/// Test-suite hook for the continued Gaussian average.
#[doc(hidden)]
pub fn test_phi_gauss_avg(drift: &DriftSpec, j: usize, tau: f64, xi: f64, gh: usize) -> f64 {
    phi_gauss_avg(drift, j, tau, xi, gh).unwrap().re
}

fn imag_checked(v: Complex, what: &str) -> Result<f64> {
    let tol = 1e-10 * (1.0 + v.re.abs());
    if v.im.abs() >= tol {
        return Err(Error::NonConvergent {
            what: format!("{what}: imaginary residual"),
            discrepancy: v.im.abs(),
            tol,
        });
    }
    Ok(v.re)
}

fn refine_checked(coarse: f64, fine: f64, what: &str) -> Result<f64> {
    let disc = (fine - coarse).abs() / (1.0 + fine.abs());
    if disc > 1e-8 {
        return Err(Error::NonConvergent {
            what: what.into(),
            discrepancy: disc,
            tol: 1e-8,
        });
    }
    Ok(fine)
}

/// Equal-time lifted kernel
/// bK(t; x, x') = sum_j p(t, x | nu_j) B_j(t, x'). Real by conjugate
/// symmetry of Phi; the imaginary residual is checked, as is stability
/// under order refinement.
pub fn lifted_kernel(drift: &DriftSpec, t: f64, x: f64, xprime: f64, quad: &QuadConfig) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    quad.validate()?;
    let eval = |gh: usize| -> Result<Complex> {
        let mut total = Complex::new(0.0, 0.0);
        for j in 0..drift.n() {
            let p = gaussian_density(t, drift.nu_hat[j], x)?;
            total += p * phi_gauss_avg(drift, j, t, xprime, gh)?;
        }
        Ok(total)
    };
    let coarse = eval(quad.gh_order)?;
    let fine = eval(quad.gh_order * quad.refine_factor)?;
    let v = imag_checked(fine, "lifted kernel")?;
    refine_checked(coarse.re, v, "lifted kernel refinement")
}

/// Reciprocal-time transform (1/t) bK(1/t; x/t, x'/t): the kernel of the
/// Fredholm representation of the observable at time t.
pub fn reciprocal_kernel(
    drift: &DriftSpec,
    t: f64,
    x: f64,
    xprime: f64,
    quad: &QuadConfig,
) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(lifted_kernel(drift, 1.0 / t, x / t, xprime / t, quad)? / t)
}

/// Equal-time kernel of noncolliding BM started from `config`, the a -> 0
/// limit of `lifted_kernel`: sum_j p(t, x|r_j) avg_y Phi^{r_j}(x' + iy).
pub fn limit_kernel(config: &[f64], t: f64, x: f64, xprime: f64, quad: &QuadConfig) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    quad.validate()?;
    for j in 0..config.len() {
        for k in 0..j {
            if (config[j] - config[k]).abs() < 1e-9 {
                return Err(Error::DegenerateDrift("limit kernel config must be distinct".into()));
            }
        }
    }
    let scale = (2.0 * t).sqrt();
    let eval = |gh: usize| -> Result<Complex> {
        let (un, uw) = gauss_hermite(gh)?;
        let mut total = Complex::new(0.0, 0.0);
        for &r in config {
            let p = gaussian_density(t, r, x)?;
            let mut vals = Vec::with_capacity(un.len());
            for (&u, &w) in un.iter().zip(&uw) {
                vals.push(w * phi_entire(config, r, Complex::new(xprime, scale * u))?);
            }
            total += p * pairwise_sum_complex(&vals) / std::f64::consts::PI.sqrt();
        }
        Ok(total)
    };
    let coarse = eval(quad.gh_order)?;
    let fine = eval(quad.gh_order * quad.refine_factor)?;
    let v = imag_checked(fine, "limit kernel")?;
    refine_checked(coarse.re, v, "limit kernel refinement")
}
