use std::sync::Arc;

use super::{check_argument, DerivativeOperator, DifferentiableOperator, UrysohnOperator};
use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::{ConvolutionKernel, ZSet};
use crate::quadrature::{QuadratureMeasure, Scheme};
use crate::sum::VecSum;

/// Sign in front of the integral term of the derivative formula.
///
/// `Plus` is the correct one. `Minus` is kept to show numerically that it
/// disagrees with finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `𝒰̃(u)(x) = ∫ₐᵇ f̃(x − y, u(y)) dy` on `[a, b]`.
#[derive(Debug, Clone)]
pub struct ConvolutiveOperator {
    kernel: ConvolutionKernel,
    mu: QuadratureMeasure,
    interval: (f64, f64),
    urysohn: UrysohnOperator,
}

impl ConvolutiveOperator {
    pub fn new(kernel: ConvolutionKernel, a: f64, b: f64, n: usize, scheme: Scheme) -> Result<Self> {
        let mu = QuadratureMeasure::lebesgue_rule(a, b, n, scheme)?;
        Self::with_measure(kernel, mu, a, b)
    }

    /// Uses a given rule for Lebesgue measure on `[a, b]`.
    pub fn with_measure(kernel: ConvolutionKernel, mu: QuadratureMeasure, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        let domain = mu.domain();
        if domain.dim() != 1 {
            return Err(Error::DimensionMismatch(
                "convolutive operators live on intervals".into(),
            ));
        }
        let (lo, hi) = domain.bounds();
        if lo < a || hi > b {
            return Err(Error::DomainMismatch(format!(
                "rule nodes [{lo}, {hi}] leave [{a}, {b}]"
            )));
        }
        let urysohn = UrysohnOperator::on_rule(kernel.as_kernel_spec(), mu.clone());
        Ok(Self {
            kernel,
            mu,
            interval: (a, b),
            urysohn,
        })
    }

    pub fn kernel(&self) -> &ConvolutionKernel {
        &self.kernel
    }

    pub fn measure(&self) -> &QuadratureMeasure {
        &self.mu
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// The operator as a Urysohn operator with `f(x, y, z) = f̃(x − y, z)`.
    pub fn as_urysohn(&self) -> &UrysohnOperator {
        &self.urysohn
    }

    /// `𝒰̃(u)(x)` at an arbitrary `x`, not necessarily a node.
    pub fn eval_at(&self, x: f64, u: &GridFunction) -> Result<Vec<f64>> {
        check_argument(u, self.mu.domain(), self.kernel.n())?;
        let (z, _) = super::ClampAudit::default().admit(self.kernel.z_set(), u)?;
        let (n, d) = (self.kernel.n(), self.kernel.d());
        let domain = self.mu.domain();
        let mut acc = VecSum::new(d);
        let mut buf = vec![0.0; d];
        for (yi, &w) in self.mu.weights().iter().enumerate() {
            self.kernel.eval(x - domain.x(yi), &z[yi * n..(yi + 1) * n], &mut buf);
            if buf.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteKernel { x: 0, y: yi });
            }
            acc.add_scaled(w, &buf);
        }
        Ok(acc.into_vec())
    }

    /// `f̃(x−a, u(a)) − f̃(x−b, u(b)) ± ∫ₐᵇ D₂f̃(x−y, u(y))·u′(y) dy` at the
    /// nodes. The rule must contain both endpoints.
    pub fn derivative_formula(&self, u: &GridFunction, u_prime: &GridFunction, sign: Sign) -> Result<GridFunction> {
        let (n, d) = (self.kernel.n(), self.kernel.d());
        check_argument(u, self.mu.domain(), n)?;
        check_argument(u_prime, self.mu.domain(), n)?;
        if !self.kernel.has_d2() {
            return Err(Error::MissingDerivative(1));
        }
        let domain = self.mu.domain();
        let (a, b) = self.interval;
        let ia = domain.find_point(&[a]).ok_or_else(|| {
            Error::DomainMismatch(format!("rule has no node at the endpoint {a}"))
        })?;
        let ib = domain.find_point(&[b]).ok_or_else(|| {
            Error::DomainMismatch(format!("rule has no node at the endpoint {b}"))
        })?;
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let mut out = Vec::with_capacity(domain.len() * d);
        let mut fa = vec![0.0; d];
        let mut fb = vec![0.0; d];
        let mut jac = vec![0.0; d * n];
        for xi in 0..domain.len() {
            let x = domain.x(xi);
            self.kernel.eval(x - a, u.value(ia), &mut fa);
            self.kernel.eval(x - b, u.value(ib), &mut fb);
            let mut acc = VecSum::new(d);
            let mut term = vec![0.0; d];
            for (yi, &w) in self.mu.weights().iter().enumerate() {
                self.kernel.d2(x - domain.x(yi), u.value(yi), &mut jac);
                let up = u_prime.value(yi);
                for i in 0..d {
                    term[i] = (0..n).map(|j| jac[i * n + j] * up[j]).sum();
                }
                acc.add_scaled(w, &term);
            }
            let integral = acc.into_vec();
            for i in 0..d {
                out.push(fa[i] - fb[i] + s * integral[i]);
            }
        }
        GridFunction::new(domain.clone(), d, out)
    }
}

impl DifferentiableOperator for ConvolutiveOperator {
    fn name(&self) -> String {
        format!("convolutive[{}]", self.kernel.name())
    }

    fn source(&self) -> &Arc<DiscreteDomain> {
        self.mu.domain()
    }

    fn target(&self) -> &Arc<DiscreteDomain> {
        self.mu.domain()
    }

    fn input_dim(&self) -> usize {
        self.kernel.n()
    }

    fn output_dim(&self) -> usize {
        self.kernel.d()
    }

    fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.urysohn.apply(u)
    }

    fn derivative(&self, u: &GridFunction, order: usize) -> Result<DerivativeOperator> {
        self.urysohn.derivative(u, order)
    }

    fn analytic_order(&self) -> usize {
        self.urysohn.analytic_order()
    }

    fn target_exponent(&self) -> Option<f64> {
        self.urysohn.target_exponent()
    }

    fn z_set(&self) -> &ZSet {
        self.kernel.z_set()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_kernel() -> ConvolutionKernel {
        ConvolutionKernel::scalar("z", |_, z| z).with_scalar_d2(|_, _| 1.0)
    }

    #[test]
    fn identity_in_z_gives_constant_image() {
        let op = ConvolutiveOperator::new(z_kernel(), 0.0, 1.0, 201, Scheme::Trapezoid).unwrap();
        let dom = op.source().clone();
        let u = GridFunction::from_scalar_fn(dom.clone(), |x| (3.0 * x).sin()).unwrap();
        let up = GridFunction::from_scalar_fn(dom.clone(), |x| 3.0 * (3.0 * x).cos()).unwrap();
        let image = op.apply(&u).unwrap();
        let first = image.scalar(0);
        assert!(image.values().iter().all(|v| (v - first).abs() < 1e-15));
        let plus = op.derivative_formula(&u, &up, Sign::Plus).unwrap();
        // trapezoid error of ∫u′ only
        assert!(plus.sup_norm() < 1e-4);
        let minus = op.derivative_formula(&u, &up, Sign::Minus).unwrap();
        let expect = 2.0 * (u.scalar(0) - u.scalar(200));
        assert!(minus.values().iter().all(|v| (v - expect).abs() < 1e-4));
    }

    #[test]
    fn linear_in_w_has_slope_length() {
        let k = ConvolutionKernel::scalar("w", |w, _| w).with_scalar_d2(|_, _| 0.0);
        let (a, b) = (-0.5, 1.5);
        let op = ConvolutiveOperator::new(k, a, b, 41, Scheme::Trapezoid).unwrap();
        let dom = op.source().clone();
        let u = GridFunction::from_scalar_fn(dom.clone(), f64::exp).unwrap();
        let image = op.apply(&u).unwrap();
        for i in 0..dom.len() {
            let x = dom.x(i);
            let expect = (b - a) * x - (b * b - a * a) / 2.0;
            assert!((image.scalar(i) - expect).abs() < 1e-13);
        }
        let der = op.derivative_formula(&u, &u, Sign::Plus).unwrap();
        assert!(der.values().iter().all(|v| (v - (b - a)).abs() < 1e-14));
    }

    #[test]
    fn eval_at_matches_nodes() {
        let k = ConvolutionKernel::scalar("g", |w, z| (-w * w).exp() * z);
        let op = ConvolutiveOperator::new(k, 0.0, 2.0, 33, Scheme::GaussLegendre).unwrap();
        let u = GridFunction::from_scalar_fn(op.source().clone(), f64::cos).unwrap();
        let image = op.apply(&u).unwrap();
        for i in [0, 7, 32] {
            let v = op.eval_at(op.source().x(i), &u).unwrap();
            assert!((v[0] - image.scalar(i)).abs() < 1e-15);
        }
    }

    #[test]
    fn formula_needs_endpoint_nodes_and_derivative() {
        let op = ConvolutiveOperator::new(z_kernel(), 0.0, 1.0, 8, Scheme::GaussLegendre).unwrap();
        let u = GridFunction::constant(op.source().clone(), &[1.0]).unwrap();
        assert!(matches!(
            op.derivative_formula(&u, &u, Sign::Plus),
            Err(Error::DomainMismatch(_))
        ));
        let bare = ConvolutionKernel::scalar("z", |_, z| z);
        let op = ConvolutiveOperator::new(bare, 0.0, 1.0, 8, Scheme::Trapezoid).unwrap();
        let u = GridFunction::constant(op.source().clone(), &[1.0]).unwrap();
        assert!(matches!(
            op.derivative_formula(&u, &u, Sign::Plus),
            Err(Error::MissingDerivative(_))
        ));
    }
}
