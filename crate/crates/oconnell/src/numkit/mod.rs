//! Foundation layer: complex special functions, quadrature rule
//! constructors, the Gaussian transition density, complex determinants and
//! reproducible RNG streams.

mod bessel;
mod gamma;
mod linalg;
mod quad;
pub(crate) mod rng;

pub use bessel::{bessel_k, bessel_k_imag_batch};
pub use gamma::{erfc, erfcx, gaussian_density, log_gamma};
pub use linalg::{complex_det, vandermonde};
pub use quad::{circle_rule, composite_gl, gauss_hermite, gauss_legendre};
pub use rng::{uniform, RngStream};

/// Concrete generator type behind [`RngStream`], re-exported for callers
/// that drive streams directly.
pub use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex<f64>;

/// Every quadrature / truncation / contour choice, defaulted and overridable.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    /// Gauss-Hermite order for integrals against a Gaussian over the whole
    /// line. Must be even: odd orders place a node at the origin, which lies
    /// on the real-axis pole locus of the lifted kernel factor.
    pub gh_order: usize,
    /// Gauss-Legendre order for integrals over finite windows.
    pub gl_order: usize,
    /// Half-width of Gaussian truncation windows, in standard deviations.
    pub tail_sigmas: f64,
    /// Point count of the trapezoid rule on circle contours.
    pub circle_points: usize,
    /// Circle contour radius override; `None` derives it from the drift.
    pub circle_radius: Option<f64>,
    /// Half-width of truncated vertical-line contours, in standard
    /// deviations of the Gaussian factor that dominates their decay.
    pub sline_halfwidth_sigmas: f64,
    /// Order multiplier used when re-evaluating for an error estimate.
    pub refine_factor: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            gh_order: 64,
            gl_order: 200,
            tail_sigmas: 12.0,
            circle_points: 128,
            circle_radius: None,
            sline_halfwidth_sigmas: 10.0,
            refine_factor: 2,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gh_order.is_multiple_of(2) {
            return Err(Error::BadOrder(format!(
                "gh_order must be even, got {}",
                self.gh_order
            )));
        }
        for (name, n) in [
            ("gh_order", self.gh_order),
            ("gl_order", self.gl_order),
            ("circle_points", self.circle_points),
        ] {
            if n < 4 {
                return Err(Error::BadOrder(format!("{name} must be >= 4, got {n}")));
            }
        }
        if self.tail_sigmas <= 0.0 || self.sline_halfwidth_sigmas <= 0.0 {
            return Err(Error::BadOrder(
                "tail_sigmas and sline_halfwidth_sigmas must be positive".into(),
            ));
        }
        if let Some(r) = self.circle_radius {
            if r <= 0.0 {
                return Err(Error::BadOrder(format!(
                    "circle_radius must be positive, got {r}"
                )));
            }
        }
        if self.refine_factor < 2 {
            return Err(Error::BadOrder(format!(
                "refine_factor must be >= 2, got {}",
                self.refine_factor
            )));
        }
        Ok(())
    }

    /// Copy with every order multiplied by `refine_factor`.
    pub fn refined(&self) -> Self {
        QuadConfig {
            gh_order: self.gh_order * self.refine_factor,
            gl_order: self.gl_order * self.refine_factor,
            circle_points: self.circle_points * self.refine_factor,
            ..self.clone()
        }
    }
}

/// Pairwise (tree) summation. Order-independent to ~1e-14 for the reduction
/// sizes used here, which keeps parallel merges deterministic.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise summation for complex values.
pub fn pairwise_sum_complex(values: &[Complex]) -> Complex {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_config_defaults_validate() {
        QuadConfig::default().validate().unwrap();
    }

    #[test]
    fn quad_config_rejects_odd_gh_order() {
        let q = QuadConfig {
            gh_order: 63,
            ..QuadConfig::default()
        };
        assert!(matches!(q.validate(), Err(Error::BadOrder(_))));
    }

    #[test]
    fn pairwise_sum_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin() / 7.0).collect();
        let seq: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - seq).abs() < 1e-10);
    }
}
