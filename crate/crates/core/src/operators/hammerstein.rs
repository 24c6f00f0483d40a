use std::sync::Arc;

use rayon::prelude::*;

use super::{DerivativeOperator, DifferentiableOperator, FredholmOperator, NemytskiiOperator, Tensor, UrysohnOperator};
use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, ZSet};

/// `ℋ = 𝒦 ∘ 𝒢`.
#[derive(Debug, Clone)]
pub struct HammersteinOperator {
    fredholm: FredholmOperator,
    nemytskii: NemytskiiOperator,
    target_exponent: Option<f64>,
}

impl HammersteinOperator {
    pub fn new(fredholm: FredholmOperator, nemytskii: NemytskiiOperator) -> Result<Self> {
        if fredholm.kernel().cols() != nemytskii.growth().p() {
            return Err(Error::DimensionMismatch(format!(
                "Fredholm kernel takes {} components, growth map yields {}",
                fredholm.kernel().cols(),
                nemytskii.growth().p()
            )));
        }
        if !fredholm.measure().domain().same_as(nemytskii.domain()) {
            return Err(Error::DomainMismatch(
                "Nemytskii operator must live on the quadrature nodes".into(),
            ));
        }
        Ok(Self {
            fredholm,
            nemytskii,
            target_exponent: None,
        })
    }

    pub fn with_target_exponent(mut self, beta: f64) -> Self {
        self.target_exponent = Some(beta);
        self
    }

    pub fn fredholm(&self) -> &FredholmOperator {
        &self.fredholm
    }

    pub fn nemytskii(&self) -> &NemytskiiOperator {
        &self.nemytskii
    }

    pub fn clamp_count(&self) -> usize {
        self.nemytskii.clamp_count()
    }

    /// `ℋ(u)` and the number of clamped values.
    pub fn apply_audited(&self, u: &GridFunction) -> Result<(GridFunction, usize)> {
        let (g, clamped) = self.nemytskii.apply_audited(u)?;
        Ok((self.fredholm.apply(&g)?, clamped))
    }

    /// The same operator in Urysohn form with `f(x,y,z) = k(x,y)·g(y,z)`.
    pub fn urysohn_form(&self) -> Result<UrysohnOperator> {
        let kernel = KernelSpec::hammerstein(self.fredholm.kernel(), self.nemytskii.growth())?;
        Ok(UrysohnOperator::new(
            kernel,
            self.fredholm.measure().clone(),
            self.fredholm.target().clone(),
        ))
    }
}

impl DifferentiableOperator for HammersteinOperator {
    fn name(&self) -> String {
        format!(
            "hammerstein[{}*{}]",
            self.fredholm.kernel().name(),
            self.nemytskii.growth().name()
        )
    }

    fn source(&self) -> &Arc<DiscreteDomain> {
        self.nemytskii.domain()
    }

    fn target(&self) -> &Arc<DiscreteDomain> {
        self.fredholm.target()
    }

    fn input_dim(&self) -> usize {
        self.nemytskii.growth().n()
    }

    fn output_dim(&self) -> usize {
        self.fredholm.kernel().rows()
    }

    fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_audited(u).map(|(v, _)| v)
    }

    /// `Dᵏℋ(u) = 𝒦𝒢ᵏ(u)`.
    fn derivative(&self, u: &GridFunction, order: usize) -> Result<DerivativeOperator> {
        let (blocks, fallback) = self.nemytskii.derivative_blocks(u, order)?;
        let (d, p, n) = (
            self.fredholm.kernel().rows(),
            self.nemytskii.growth().p(),
            self.nemytskii.growth().n(),
        );
        let k = self.fredholm.matrix();
        let (rows, ns) = (self.fredholm.rows(), u.len());
        let tensor = if order == 1 {
            let kcols = ns * p;
            let cols = ns * n;
            let mut m = vec![0.0; rows * cols];
            m.par_chunks_mut(cols).enumerate().for_each(|(row, out)| {
                let krow = &k[row * kcols..(row + 1) * kcols];
                for y in 0..ns {
                    for j in 0..n {
                        let mut s = 0.0;
                        for l in 0..p {
                            s += krow[y * p + l] * blocks[(y * p + l) * n + j];
                        }
                        out[y * n + j] = s;
                    }
                }
            });
            Tensor::Dense(m)
        } else {
            Tensor::Composed2 {
                matrix: k.to_vec(),
                p,
                blocks,
            }
        };
        Ok(DerivativeOperator {
            order,
            base_point: u.clone(),
            target: self.fredholm.target().clone(),
            d,
            n,
            tensor,
            fallback,
        })
    }

    fn analytic_order(&self) -> usize {
        self.nemytskii.analytic_order()
    }

    fn target_exponent(&self) -> Option<f64> {
        self.target_exponent
    }

    fn z_set(&self) -> &ZSet {
        self.nemytskii.growth().z_set()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{builtin_kernel, FredholmKernel};
    use crate::quadrature::{QuadratureMeasure, Scheme};
    use crate::verification::generators::random_piecewise_linear;

    fn laplace_bh(a: f64, b: f64, n: usize) -> HammersteinOperator {
        let mu = QuadratureMeasure::lebesgue_rule(a, b, n, Scheme::Trapezoid).unwrap();
        let k = builtin_kernel("laplace_dispersal", &[1.0]).unwrap().into_dispersal().unwrap();
        let g = builtin_kernel("beverton_holt", &[2.0, 1.0]).unwrap().into_growth().unwrap();
        let f = FredholmOperator::on_rule(k.fredholm(), mu.clone()).unwrap();
        HammersteinOperator::new(f, NemytskiiOperator::new(g, mu.domain().clone())).unwrap()
    }

    #[test]
    fn unit_kernel_identity_growth_is_mean() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 2.0, 21, Scheme::Trapezoid).unwrap();
        let f = FredholmOperator::on_rule(FredholmKernel::scalar("one", |_, _| 1.0), mu.clone()).unwrap();
        let g = builtin_kernel("identity", &[]).unwrap().into_growth().unwrap();
        let h = HammersteinOperator::new(f, NemytskiiOperator::new(g, mu.domain().clone())).unwrap();
        let u = GridFunction::from_scalar_fn(mu.domain().clone(), f64::sin).unwrap();
        let mean = mu.integrate(&u).unwrap()[0];
        assert!(h.apply(&u).unwrap().values().iter().all(|v| (v - mean).abs() < 1e-15));
    }

    #[test]
    fn laplace_mass_at_origin() {
        let h = laplace_bh(-5.0, 5.0, 401);
        let one = GridFunction::constant(h.source().clone(), &[1.0]).unwrap();
        let out = h.apply(&one).unwrap();
        let mid = h.source().find_point(&[0.0]).unwrap();
        // analytic 1 - e^{-5}; trapezoid error O(h²)
        assert!((out.scalar(mid) - (1.0 - (-5f64).exp())).abs() < 1e-3);
        assert!((out.scalar(mid) - 0.9933).abs() < 5e-4);
    }

    #[test]
    fn agrees_with_urysohn_form() {
        let h = laplace_bh(-2.0, 3.0, 101);
        let u_op = h.urysohn_form().unwrap();
        for seed in 0..20 {
            let u = random_piecewise_linear(h.source().clone(), seed, 7, 1.0);
            let a = h.apply(&u).unwrap();
            let b = u_op.apply(&u).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-14);
            }
            let da = h.derivative(&u, 1).unwrap().to_dense().unwrap();
            let db = u_op.derivative(&u, 1).unwrap().to_dense().unwrap();
            let scale = db.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in da.iter().zip(&db) {
                assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn chain_mismatch() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 5, Scheme::Trapezoid).unwrap();
        let k = FredholmKernel::new("wide", 1, 2, Arc::new(|_, _, o| o.fill(1.0)));
        let f = FredholmOperator::on_rule(k, mu.clone()).unwrap();
        let g = builtin_kernel("identity", &[]).unwrap().into_growth().unwrap();
        assert!(matches!(
            HammersteinOperator::new(f, NemytskiiOperator::new(g, mu.domain().clone())),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
