use std::sync::Arc;

use rayon::prelude::*;

use super::{check_argument, check_order, DerivativeOperator, DifferentiableOperator, Tensor};
use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::{FredholmKernel, ZSet};
use crate::quadrature::QuadratureMeasure;
use crate::sum::{compensated_sum, CompensatedSum};

/// `𝒦u(x) = ∫_Ω k(x, y) u(y) dμ(y)`.
#[derive(Debug, Clone)]
pub struct FredholmOperator {
    kernel: FredholmKernel,
    mu: QuadratureMeasure,
    target: Arc<DiscreteDomain>,
    matrix: Arc<Vec<f64>>,
    target_exponent: Option<f64>,
}

impl FredholmOperator {
    pub fn new(kernel: FredholmKernel, mu: QuadratureMeasure, target: Arc<DiscreteDomain>) -> Result<Self> {
        let matrix = assemble(&kernel, &mu, &target)?;
        Ok(Self {
            kernel,
            mu,
            target,
            matrix: Arc::new(matrix),
            target_exponent: None,
        })
    }

    pub fn on_rule(kernel: FredholmKernel, mu: QuadratureMeasure) -> Result<Self> {
        let target = mu.domain().clone();
        Self::new(kernel, mu, target)
    }

    pub fn with_target_exponent(mut self, beta: f64) -> Self {
        self.target_exponent = Some(beta);
        self
    }

    pub fn kernel(&self) -> &FredholmKernel {
        &self.kernel
    }

    pub fn measure(&self) -> &QuadratureMeasure {
        &self.mu
    }

    /// Row-major `(|Ω₁|·d) × (|Ω|·p)` matrix with entries `w_y·k(x,y)_{il}`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.target.len() * self.kernel.rows()
    }

    pub fn cols(&self) -> usize {
        self.mu.domain().len() * self.kernel.cols()
    }

    /// `max{1, (diam Ω)^α}·max_x Σ_y w_y |k(x, y)|` with the induced
    /// Euclidean matrix norm.
    pub fn norm_bound(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidExponent(alpha));
        }
        let factor = if alpha == 0.0 {
            1.0
        } else {
            self.mu.domain().diameter().powf(alpha).max(1.0)
        };
        Ok(factor * self.row_mass_sup())
    }

    /// `max_x Σ_y w_y |k(x, y)|`.
    pub fn row_mass_sup(&self) -> f64 {
        let source = self.mu.domain();
        (0..self.target.len())
            .into_par_iter()
            .map(|xi| {
                let x = self.target.point(xi);
                compensated_sum(
                    self.mu
                        .weights()
                        .iter()
                        .enumerate()
                        .map(|(yi, w)| w * self.kernel.norm_at(x, source.point(yi))),
                )
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn assemble(kernel: &FredholmKernel, mu: &QuadratureMeasure, target: &DiscreteDomain) -> Result<Vec<f64>> {
    let (d, p) = (kernel.rows(), kernel.cols());
    let source = mu.domain();
    let ns = source.len();
    let cols = ns * p;
    let mut m = vec![0.0; target.len() * d * cols];
    m.par_chunks_mut(d * cols).enumerate().for_each(|(xi, rows)| {
        let x = target.point(xi);
        let mut k = vec![0.0; d * p];
        for (yi, &w) in mu.weights().iter().enumerate() {
            kernel.eval(x, source.point(yi), &mut k);
            for i in 0..d {
                for l in 0..p {
                    rows[i * cols + yi * p + l] = w * k[i * p + l];
                }
            }
        }
    });
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let (row, col) = (pos / cols, pos % cols);
        return Err(Error::NonFiniteKernel {
            x: row / d,
            y: col / p,
        });
    }
    Ok(m)
}

impl DifferentiableOperator for FredholmOperator {
    fn name(&self) -> String {
        format!("fredholm[{}]", self.kernel.name())
    }

    fn source(&self) -> &Arc<DiscreteDomain> {
        self.mu.domain()
    }

    fn target(&self) -> &Arc<DiscreteDomain> {
        &self.target
    }

    fn input_dim(&self) -> usize {
        self.kernel.cols()
    }

    fn output_dim(&self) -> usize {
        self.kernel.rows()
    }

    fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        check_argument(u, self.mu.domain(), self.kernel.cols())?;
        let cols = self.cols();
        let v = u.values();
        let out: Vec<f64> = (0..self.rows())
            .into_par_iter()
            .map(|row| {
                let mut acc = CompensatedSum::new();
                for (a, b) in self.matrix[row * cols..(row + 1) * cols].iter().zip(v) {
                    acc.add(a * b);
                }
                acc.value()
            })
            .collect();
        GridFunction::new(self.target.clone(), self.kernel.rows(), out)
    }

    fn derivative(&self, u: &GridFunction, order: usize) -> Result<DerivativeOperator> {
        check_order(order)?;
        check_argument(u, self.mu.domain(), self.kernel.cols())?;
        let (d, n) = (self.kernel.rows(), self.kernel.cols());
        let tensor = if order == 1 {
            Tensor::Dense(self.matrix.to_vec())
        } else {
            Tensor::Zero
        };
        Ok(DerivativeOperator {
            order,
            base_point: u.clone(),
            target: self.target.clone(),
            d,
            n,
            tensor,
            fallback: false,
        })
    }

    fn analytic_order(&self) -> usize {
        2
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn target_exponent(&self) -> Option<f64> {
        self.target_exponent
    }

    fn z_set(&self) -> &ZSet {
        &ZSet::All
    }
}
