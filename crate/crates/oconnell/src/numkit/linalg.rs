//! Small dense complex determinants (pivoted LU) and the Vandermonde
//! product. Matrix sizes here never exceed the particle count or the
//! truncation order of a Fredholm series, so no factorization is reused.

use super::Complex;
use crate::{Error, Result};

/// Determinant via LU with partial pivoting. A pivot below 1e-300 in
/// magnitude reports an exact zero.
pub fn complex_det(matrix: &[Vec<Complex>]) -> Result<Complex> {
    let n = matrix.len();
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NonSquare {
                rows: n,
                row: i,
                cols: row.len(),
            });
        }
    }
    if n == 0 {
        return Ok(Complex::new(1.0, 0.0));
    }
    let mut a: Vec<Vec<Complex>> = matrix.to_vec();
    let mut det = Complex::new(1.0, 0.0);
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_mag < 1e-300 {
            return Ok(Complex::new(0.0, 0.0));
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            det = -det;
        }
        let pivot = a[col][col];
        det *= pivot;
        for r in col + 1..n {
            let (above, below) = a.split_at_mut(r);
            let pivot_row = &above[col];
            let row = &mut below[0];
            let factor = row[col] / pivot;
            for (entry, &p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *entry -= factor * p;
            }
        }
    }
    Ok(det)
}

/// prod_{j < l} (x_l - x_j); empty and singleton inputs give 1.
pub fn vandermonde(points: &[f64]) -> f64 {
    let mut prod = 1.0;
    for l in 1..points.len() {
        for j in 0..l {
            prod *= points[l] - points[j];
        }
    }
    prod
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    /// Cofactor expansion along the first row; independent of the LU path.
    pub(crate) fn det_cofactor(m: &[Vec<Complex>]) -> Complex {
        let n = m.len();
        if n == 0 {
            return c(1.0, 0.0);
        }
        if n == 1 {
            return m[0][0];
        }
        let mut total = c(0.0, 0.0);
        for col in 0..n {
            let minor: Vec<Vec<Complex>> = (1..n)
                .map(|r| {
                    (0..n)
                        .filter(|&cc| cc != col)
                        .map(|cc| m[r][cc])
                        .collect()
                })
                .collect();
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            total += m[0][col] * det_cofactor(&minor) * sign;
        }
        total
    }

    #[test]
    fn identity_determinant() {
        let m: Vec<Vec<Complex>> = (0..5)
            .map(|i| {
                (0..5)
                    .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                    .collect()
            })
            .collect();
        assert_eq!(complex_det(&m).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn swap_matrix_determinant() {
        let m = vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
        assert_eq!(complex_det(&m).unwrap(), c(-1.0, 0.0));
    }

    #[test]
    fn random_4x4_matches_cofactor_oracle() {
        let mut rng = crate::numkit::RngStream::new(11, 0).into_rng();
        for _ in 0..20 {
            let m: Vec<Vec<Complex>> = (0..4)
                .map(|_| {
                    (0..4)
                        .map(|_| {
                            c(
                                crate::numkit::rng::uniform(&mut rng) * 2.0 - 1.0,
                                crate::numkit::rng::uniform(&mut rng) * 2.0 - 1.0,
                            )
                        })
                        .collect()
                })
                .collect();
            let lu = complex_det(&m).unwrap();
            let co = det_cofactor(&m);
            assert!((lu - co).norm() < 1e-12 * co.norm().max(1e-12));
        }
    }

    #[test]
    fn singular_matrix_gives_exact_zero() {
        let row = vec![c(1.0, 2.0), c(-0.5, 0.3), c(2.0, 0.0)];
        let m = vec![row.clone(), row.clone(), vec![c(0.1, 0.0), c(0.2, 0.0), c(0.3, 0.0)]];
        assert_eq!(complex_det(&m).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn non_square_is_an_error() {
        let m = vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(2.0, 0.0)]];
        assert!(matches!(complex_det(&m), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn vandermonde_values() {
        assert_eq!(vandermonde(&[]), 1.0);
        assert_eq!(vandermonde(&[5.0]), 1.0);
        assert_eq!(vandermonde(&[1.0, 3.0]), 2.0);
        assert_eq!(vandermonde(&[0.0, 1.0, 3.0]), 6.0);
        assert_eq!(vandermonde(&[2.0, 2.0, 5.0]), 0.0);
    }
}
