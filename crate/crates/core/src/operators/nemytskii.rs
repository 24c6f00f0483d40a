use std::sync::Arc;

use super::{check_argument, check_order, ClampAudit, DerivativeOperator, DifferentiableOperator, Tensor};
use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::{GrowthSpec, ZSet};

/// `𝒢(u)(x) = g(x, u(x))`.
#[derive(Debug, Clone)]
pub struct NemytskiiOperator {
    growth: GrowthSpec,
    domain: Arc<DiscreteDomain>,
    audit: ClampAudit,
    target_exponent: Option<f64>,
}

impl NemytskiiOperator {
    pub fn new(growth: GrowthSpec, domain: Arc<DiscreteDomain>) -> Self {
        Self {
            growth,
            domain,
            audit: ClampAudit::default(),
            target_exponent: None,
        }
    }

    /// Values farther than `tolerance` from `Z` are rejected instead of
    /// clamped.
    pub fn with_clamp_tolerance(mut self, tolerance: f64) -> Self {
        self.audit = ClampAudit::with_tolerance(tolerance);
        self
    }

    pub fn with_target_exponent(mut self, beta: f64) -> Self {
        self.target_exponent = Some(beta);
        self
    }

    pub fn growth(&self) -> &GrowthSpec {
        &self.growth
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    pub fn clamp_count(&self) -> usize {
        self.audit.count()
    }

    pub fn apply_audited(&self, u: &GridFunction) -> Result<(GridFunction, usize)> {
        check_argument(u, &self.domain, self.growth.n())?;
        let (z, clamped) = self.audit.admit(self.growth.z_set(), u)?;
        let (n, p) = (self.growth.n(), self.growth.p());
        let mut out = vec![0.0; self.domain.len() * p];
        for (i, o) in out.chunks_mut(p).enumerate() {
            self.growth.eval(self.domain.point(i), &z[i * n..(i + 1) * n], o);
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteKernel { x: i, y: i });
            }
        }
        Ok((GridFunction::new(self.domain.clone(), p, out)?, clamped))
    }

    /// Values of `u` after projection onto `Z`.
    pub(crate) fn admitted(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.audit.admit(self.growth.z_set(), u).map(|(z, _)| z)
    }

    /// Per-point `p × n^order` derivative blocks; the flag reports fallbacks.
    pub(crate) fn derivative_blocks(&self, u: &GridFunction, order: usize) -> Result<(Vec<f64>, bool)> {
        check_order(order)?;
        check_argument(u, &self.domain, self.growth.n())?;
        let z = self.admitted(u)?;
        let (n, p) = (self.growth.n(), self.growth.p());
        let size = p * n.pow(order as u32);
        let mut blocks = vec![0.0; self.domain.len() * size];
        let mut fallback = false;
        for (i, b) in blocks.chunks_mut(size).enumerate() {
            let (x, zi) = (self.domain.point(i), &z[i * n..(i + 1) * n]);
            fallback |= if order == 1 {
                self.growth.d2(x, zi, b)
            } else {
                self.growth.d22(x, zi, b)
            };
        }
        Ok((blocks, fallback))
    }
}

impl DifferentiableOperator for NemytskiiOperator {
    fn name(&self) -> String {
        format!("nemytskii[{}]", self.growth.name())
    }

    fn source(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    fn target(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    fn input_dim(&self) -> usize {
        self.growth.n()
    }

    fn output_dim(&self) -> usize {
        self.growth.p()
    }

    fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_audited(u).map(|(v, _)| v)
    }

    fn derivative(&self, u: &GridFunction, order: usize) -> Result<DerivativeOperator> {
        let (blocks, fallback) = self.derivative_blocks(u, order)?;
        Ok(DerivativeOperator {
            order,
            base_point: u.clone(),
            target: self.domain.clone(),
            d: self.growth.p(),
            n: self.growth.n(),
            tensor: if order == 1 {
                Tensor::Blocks(blocks)
            } else {
                Tensor::Blocks2(blocks)
            },
            fallback,
        })
    }

    fn analytic_order(&self) -> usize {
        match (self.growth.has_d2(), self.growth.has_d22()) {
            (true, true) => 2,
            (true, false) => 1,
            _ => 0,
        }
    }

    fn target_exponent(&self) -> Option<f64> {
        self.target_exponent
    }

    fn z_set(&self) -> &ZSet {
        self.growth.z_set()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::builtin_kernel;

    fn growth(name: &str, p: &[f64]) -> GrowthSpec {
        builtin_kernel(name, p).unwrap().into_growth().unwrap()
    }

    #[test]
    fn identity_operator() {
        let d = DiscreteDomain::uniform_interval(0.0, 1.0, 9).unwrap();
        let op = NemytskiiOperator::new(growth("identity", &[]), d.clone());
        let u = GridFunction::from_scalar_fn(d, |x| x * x - 0.3).unwrap();
        assert_eq!(op.apply(&u).unwrap(), u);
        let der = op.derivative(&u, 1).unwrap();
        assert!(der.blocks().unwrap().iter().all(|&b| b == 1.0));
        assert_eq!(der.apply(&[&u]).unwrap(), u);
    }

    #[test]
    fn beverton_holt_fixed_point() {
        let d = DiscreteDomain::uniform_interval(-1.0, 1.0, 5).unwrap();
        let op = NemytskiiOperator::new(growth("beverton_holt", &[2.0, 1.0]), d.clone());
        let one = GridFunction::constant(d, &[1.0]).unwrap();
        assert_eq!(op.apply(&one).unwrap(), one);
    }

    #[test]
    fn dense_form_is_block_diagonal() {
        let d = DiscreteDomain::uniform_interval(0.0, 1.0, 4).unwrap();
        let op = NemytskiiOperator::new(growth("ricker", &[1.2]), d.clone());
        let u = GridFunction::from_scalar_fn(d, |x| 0.5 + x).unwrap();
        let m = op.derivative(&u, 1).unwrap().to_dense().unwrap();
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert_eq!(m[r * 4 + c], 0.0);
                }
            }
        }
    }

    #[test]
    fn clamps_negative_states() {
        let d = DiscreteDomain::uniform_interval(0.0, 1.0, 3).unwrap();
        let op = NemytskiiOperator::new(growth("beverton_holt", &[2.0, 1.0]), d.clone());
        let u = GridFunction::new(d.clone(), 1, vec![-0.1, 0.5, 1.0]).unwrap();
        let (v, clamped) = op.apply_audited(&u).unwrap();
        assert_eq!(clamped, 1);
        assert_eq!(v.scalar(0), 0.0);
        let strict = NemytskiiOperator::new(growth("beverton_holt", &[2.0, 1.0]), d).with_clamp_tolerance(0.01);
        assert!(matches!(
            strict.apply(&u),
            Err(Error::OutsideAdmissibleSet { index: 0, .. })
        ));
    }
}
