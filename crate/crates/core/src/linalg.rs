//! Small dense linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// Induced Euclidean (spectral) norm of a row-major `rows × cols` matrix.
pub fn induced_norm(m: &[f64], rows: usize, cols: usize) -> f64 {
    if rows == 1 || cols == 1 {
        return m.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let a = DMatrix::from_row_slice(rows, cols, m);
    a.singular_values().max()
}

/// LU factorization with partial pivoting and a 1-norm condition estimate.
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl DenseLu {
    pub fn new(a: DMatrix<f64>) -> Self {
        let norm1 = (0..a.ncols())
            .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu_t = a.transpose().lu();
        let lu = a.lu();
        let condition = if lu.is_invertible() {
            norm1 * inverse_norm1_estimate(&lu, &lu_t)
        } else {
            f64::INFINITY
        };
        Self { lu, condition }
    }

    /// Estimate of `‖A‖₁‖A⁻¹‖₁`; infinite when `A` is singular.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        self.lu
            .solve(&DVector::from_column_slice(b))
            .map(|x| x.as_slice().to_vec())
            .filter(|x| x.iter().all(|v| v.is_finite()))
    }
}

/// Hager's estimator of `‖A⁻¹‖₁`.
fn inverse_norm1_estimate(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
) -> f64 {
    let n = lu.l().nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0;
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else {
            return f64::INFINITY;
        };
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = lu_t.solve(&xi) else {
            return f64::INFINITY;
        };
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[j] = 1.0;
    }
    if estimate.is_finite() {
        estimate
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        assert!((induced_norm(&[3.0, 0.0, 0.0, -4.0], 2, 2) - 4.0).abs() < 1e-14);
        assert_eq!(induced_norm(&[3.0, 4.0], 1, 2), 5.0);
        assert_eq!(induced_norm(&[-2.0], 1, 1), 2.0);
    }

    #[test]
    fn solve_and_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 2.0, 3.0]);
        let lu = DenseLu::new(a);
        let x = lu.solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-15);
        assert!((2.0 * x[0] + 3.0 * x[1] - 2.0).abs() < 1e-15);
        // A⁻¹ = [[3, -1], [-2, 4]] / 10, so κ₁ = 6 · 0.5
        assert!((lu.condition() - 3.0).abs() < 1e-12, "{}", lu.condition());
    }

    #[test]
    fn singular_is_infinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let lu = DenseLu::new(a);
        assert!(lu.condition().is_infinite() || lu.condition() > 1e15);
    }
}
