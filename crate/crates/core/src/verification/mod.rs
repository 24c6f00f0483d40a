//! Numerical certification of derivatives, bounds, convergence and smoothing.

pub mod bounds;
pub mod generators;
mod nystrom;
mod smoothing;
mod taylor;

use crate::domain::GridFunction;
use crate::error::Result;
use crate::kernels::{builtin_kernel, separable_poly, KernelSpec, BUILTIN_NAMES};
use crate::operators::{FredholmOperator, NemytskiiOperator, UrysohnOperator};
use crate::quadrature::{QuadratureMeasure, Scheme};

pub use bounds::{fredholm_bounds, nemytskii_bounds, urysohn_bounds, BoundCheck, BoundReport};
pub use nystrom::{nystrom_convergence, ConvergenceRow, ConvergenceTable, Sampler};
pub use smoothing::{derivative_sign_check, smoothing_suite, SignCheck, SmoothingReport, LTILDE_NODES};
pub use taylor::{loglog_slope, taylor_check, TaylorCheckResult, EXACT_TOLERANCE, SLOPE_MARGIN};

/// Default parameters for each builtin when run through [`builtin_bound_suite`].
pub fn default_params(name: &str) -> &'static [f64] {
    match name {
        "gaussian_dispersal" | "laplace_dispersal" => &[1.0],
        "separable_poly" => &[0.5, -1.0, 0.25],
        "beverton_holt" => &[2.0, 1.0],
        "ricker" => &[1.5],
        "logistic" => &[3.0],
        "identity" => &[],
        "affine" => &[0.5, 0.25],
        _ => &[],
    }
}

/// Settings of the builtin bound suite.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSuiteConfig {
    pub interval: (f64, f64),
    pub n: usize,
    pub tests: usize,
    pub pieces: usize,
    pub radius: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BoundSuiteConfig {
    fn default() -> Self {
        Self {
            interval: (-2.0, 2.0),
            n: 81,
            tests: 16,
            pieces: 6,
            radius: 1.0,
            alpha: 0.5,
            seed: 0,
        }
    }
}

/// Every builtin kernel under its default parameters: dispersal kernels as
/// Fredholm operators and in Hammerstein form with Beverton–Holt growth,
/// growth maps as Nemytskii operators, `separable_poly` as a Urysohn
/// operator. Check names are prefixed with the kernel name.
pub fn builtin_bound_suite(cfg: &BoundSuiteConfig) -> Result<BoundReport> {
    let (a, b) = cfg.interval;
    let mu = QuadratureMeasure::lebesgue_rule(a, b, cfg.n, Scheme::Trapezoid)?;
    let domain = mu.domain().clone();
    let tests: Vec<GridFunction> = (0..cfg.tests as u64)
        .map(|i| generators::random_piecewise_linear(domain.clone(), cfg.seed.wrapping_add(i), cfg.pieces, cfg.radius))
        .collect();
    let mut report = BoundReport::default();
    let mut push = |prefix: &str, r: BoundReport| {
        for mut c in r.checks {
            c.name = format!("{prefix}/{}", c.name);
            report.checks.push(c);
        }
    };
    let bh = builtin_kernel("beverton_holt", default_params("beverton_holt"))?.into_growth()?;
    for name in BUILTIN_NAMES {
        let kernel = builtin_kernel(name, default_params(name))?;
        match name {
            "gaussian_dispersal" | "laplace_dispersal" => {
                let k = kernel.into_dispersal()?.fredholm();
                let op = FredholmOperator::on_rule(k.clone(), mu.clone())?;
                push(name, fredholm_bounds(&op, &tests, cfg.alpha)?);
                let h = UrysohnOperator::on_rule(KernelSpec::hammerstein(&k, &bh)?, mu.clone());
                push(&format!("{name}*beverton_holt"), urysohn_bounds(&h, &tests, cfg.radius)?);
            }
            "separable_poly" => {
                let op = UrysohnOperator::on_rule(separable_poly(default_params(name).to_vec()), mu.clone());
                push(name, urysohn_bounds(&op, &tests, cfg.radius)?);
            }
            _ => {
                let op = NemytskiiOperator::new(kernel.into_growth()?, domain.clone());
                push(name, nemytskii_bounds(&op, &tests, cfg.radius, cfg.alpha)?);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_suite_has_no_hard_failures() {
        let report = builtin_bound_suite(&BoundSuiteConfig::default()).unwrap();
        let failures = report.hard_failures(false);
        assert!(failures.is_empty(), "{failures:?}");
        for name in BUILTIN_NAMES {
            assert!(report.checks.iter().any(|c| c.name.starts_with(name)), "{name}");
        }
    }
}
