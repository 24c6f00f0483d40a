//! Urysohn, Fredholm, Nemytskii, Hammerstein and convolutive integral
//! operators on discretized Hölder spaces.
//!
//! Compact metric spaces are represented by finite point sets
//! ([`DiscreteDomain`]), functions by their samples ([`GridFunction`]) and
//! integrals by finite measures with nonnegative weights
//! ([`QuadratureMeasure`]). On top of these the crate assembles the
//! operators and their Fréchet derivatives, and provides a harness that
//! checks the quantitative Hölder-space estimates numerically.

pub mod domain;
pub mod error;
pub mod holder;
pub mod ide;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod sum;
pub mod verification;

pub use domain::{restrict, DiscreteDomain, GridFunction};
pub use error::{Error, Result};
pub use holder::{
    calculus_rules_check, embedding_check, equivalent_norm, holder_norm, holder_seminorm,
    noncompactness_chi, pathology_suite, HolderReport,
};
pub use ide::{iterate, newton_fixed_point, NewtonOptions, NewtonReport, OrbitRecord};
pub use kernels::{
    builtin_kernel, estimate_caratheodory_bounds, BuiltinKernel, ConvolutionKernel,
    FredholmKernel, GrowthSpec, KernelSpec, ZSet,
};
pub use operators::{
    ConvolutiveOperator, DerivativeOperator, DifferentiableOperator, FredholmOperator,
    HammersteinOperator, NemytskiiOperator, Sign, UrysohnOperator,
};
pub use quadrature::{QuadratureMeasure, Scheme};
pub use verification::{
    builtin_bound_suite, nystrom_convergence, smoothing_suite, taylor_check, BoundReport,
    ConvergenceTable, SmoothingReport, TaylorCheckResult,
};

/// Relative slack granted to exact pairwise inequalities for rounding in
/// the last bits of both sides.
pub const ROUNDING_SLACK: f64 = 1e-12;
