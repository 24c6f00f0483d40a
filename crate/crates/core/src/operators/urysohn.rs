use std::sync::Arc;

use rayon::prelude::*;

use super::{check_argument, check_order, ClampAudit, DerivativeOperator, DifferentiableOperator, Tensor};
use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, ZSet};
use crate::quadrature::QuadratureMeasure;
use crate::sum::VecSum;

/// `𝒰(u)(x) = ∫_Ω f(x, y, u(y)) dμ(y)` for `x ∈ Ω₁`.
#[derive(Debug, Clone)]
pub struct UrysohnOperator {
    kernel: KernelSpec,
    mu: QuadratureMeasure,
    target: Arc<DiscreteDomain>,
    audit: ClampAudit,
    allow_fallback: bool,
    target_exponent: Option<f64>,
}

impl UrysohnOperator {
    pub fn new(kernel: KernelSpec, mu: QuadratureMeasure, target: Arc<DiscreteDomain>) -> Self {
        Self {
            kernel,
            mu,
            target,
            audit: ClampAudit::default(),
            allow_fallback: true,
            target_exponent: None,
        }
    }

    /// Operator on `Ω₁ = Ω`.
    pub fn on_rule(kernel: KernelSpec, mu: QuadratureMeasure) -> Self {
        let target = mu.domain().clone();
        Self::new(kernel, mu, target)
    }

    /// Refuses derivatives that would need difference fallbacks.
    pub fn without_fallback(mut self) -> Self {
        self.allow_fallback = false;
        self
    }

    pub fn with_clamp_tolerance(mut self, tolerance: f64) -> Self {
        self.audit = ClampAudit::with_tolerance(tolerance);
        self
    }

    pub fn with_target_exponent(mut self, beta: f64) -> Self {
        self.target_exponent = Some(beta);
        self
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn measure(&self) -> &QuadratureMeasure {
        &self.mu
    }

    pub fn clamp_count(&self) -> usize {
        self.audit.count()
    }

    /// `𝒰(u)` together with the number of values projected onto `Z`.
    pub fn apply_audited(&self, u: &GridFunction) -> Result<(GridFunction, usize)> {
        check_argument(u, self.mu.domain(), self.kernel.n())?;
        let (z, clamped) = self.audit.admit(self.kernel.z_set(), u)?;
        let (n, d) = (self.kernel.n(), self.kernel.d());
        let source = self.mu.domain();
        let weights = self.mu.weights();
        let rows: Vec<Result<Vec<f64>>> = (0..self.target.len())
            .into_par_iter()
            .map(|xi| {
                let x = self.target.point(xi);
                let mut acc = VecSum::new(d);
                let mut buf = vec![0.0; d];
                for (yi, &w) in weights.iter().enumerate() {
                    self.kernel.eval(x, source.point(yi), &z[yi * n..(yi + 1) * n], &mut buf);
                    if buf.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFiniteKernel { x: xi, y: yi });
                    }
                    acc.add_scaled(w, &buf);
                }
                Ok(acc.into_vec())
            })
            .collect();
        let mut values = Vec::with_capacity(self.target.len() * d);
        for row in rows {
            values.extend(row?);
        }
        Ok((GridFunction::new(self.target.clone(), d, values)?, clamped))
    }

    fn assemble(&self, u: &GridFunction, order: usize) -> Result<DerivativeOperator> {
        check_order(order)?;
        check_argument(u, self.mu.domain(), self.kernel.n())?;
        let analytic = match order {
            1 => self.kernel.has_d3(),
            _ => self.kernel.has_d33(),
        };
        if !analytic && !self.allow_fallback {
            return Err(Error::MissingDerivative(order));
        }
        let (z, _) = self.audit.admit(self.kernel.z_set(), u)?;
        let (n, d) = (self.kernel.n(), self.kernel.d());
        let (nt, ns) = (self.target.len(), u.len());
        let source = self.mu.domain();
        let weights = self.mu.weights();
        let block = d * n.pow(order as u32);
        // per x: ns blocks of `block` entries, weight folded in
        let mut raw = vec![0.0; nt * ns * block];
        raw.par_chunks_mut(ns * block).enumerate().for_each(|(xi, row)| {
            let x = self.target.point(xi);
            for (yi, chunk) in row.chunks_mut(block).enumerate() {
                self.kernel
                    .derivative(order, x, source.point(yi), &z[yi * n..(yi + 1) * n], chunk);
                for c in chunk.iter_mut() {
                    *c *= weights[yi];
                }
            }
        });
        if let Some(pos) = raw.iter().position(|v| !v.is_finite()) {
            let xy = pos / block;
            return Err(Error::NonFiniteKernel {
                x: xy / ns,
                y: xy % ns,
            });
        }
        let tensor = if order == 1 {
            // reorder (x, y, i, j) into rows (x, i), columns (y, j)
            let cols = ns * n;
            let mut m = vec![0.0; nt * d * cols];
            m.par_chunks_mut(d * cols).enumerate().for_each(|(xi, rows)| {
                for yi in 0..ns {
                    let b = &raw[(xi * ns + yi) * block..];
                    for i in 0..d {
                        for j in 0..n {
                            rows[i * cols + yi * n + j] = b[i * n + j];
                        }
                    }
                }
            });
            Tensor::Dense(m)
        } else {
            Tensor::Coincident(raw)
        };
        Ok(DerivativeOperator {
            order,
            base_point: u.clone(),
            target: self.target.clone(),
            d,
            n,
            tensor,
            fallback: !analytic,
        })
    }
}

impl DifferentiableOperator for UrysohnOperator {
    fn name(&self) -> String {
        format!("urysohn[{}]", self.kernel.name())
    }

    fn source(&self) -> &Arc<DiscreteDomain> {
        self.mu.domain()
    }

    fn target(&self) -> &Arc<DiscreteDomain> {
        &self.target
    }

    fn input_dim(&self) -> usize {
        self.kernel.n()
    }

    fn output_dim(&self) -> usize {
        self.kernel.d()
    }

    fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_audited(u).map(|(v, _)| v)
    }

    fn derivative(&self, u: &GridFunction, order: usize) -> Result<DerivativeOperator> {
        self.assemble(u, order)
    }

    fn analytic_order(&self) -> usize {
        match (self.kernel.has_d3(), self.kernel.has_d33()) {
            (true, true) => 2,
            (true, false) => 1,
            _ => 0,
        }
    }

    fn target_exponent(&self) -> Option<f64> {
        self.target_exponent
    }

    fn z_set(&self) -> &ZSet {
        self.kernel.z_set()
    }
}
