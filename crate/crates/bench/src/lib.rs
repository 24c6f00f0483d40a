//! Fixtures shared by the benchmarks.

use urysohn_core::kernels::{beverton_holt, Dispersal};
use urysohn_core::{FredholmOperator, GridFunction, HammersteinOperator, NemytskiiOperator, QuadratureMeasure, Scheme};

/// Laplace(1) dispersal with Beverton–Holt(2, 1) growth on `[-10, 10]`.
pub fn laplace_beverton_holt(n: usize) -> HammersteinOperator {
    let mu = QuadratureMeasure::lebesgue_rule(-10.0, 10.0, n, Scheme::Trapezoid).expect("valid rule");
    let k = Dispersal::laplace(1.0).expect("positive scale").fredholm();
    HammersteinOperator::new(
        FredholmOperator::on_rule(k, mu.clone()).expect("matching domains"),
        NemytskiiOperator::new(beverton_holt(2.0, 1.0), mu.domain().clone()),
    )
    .expect("compatible factors")
}

pub fn half(op: &HammersteinOperator) -> GridFunction {
    GridFunction::constant(op.nemytskii().domain().clone(), &[0.5]).expect("finite")
}
