use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use super::bounds::{BoundCheck, BoundReport};
use crate::domain::{fmt_f64, restrict, DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::holder::holder_seminorm;
use crate::operators::{ConvolutiveOperator, DifferentiableOperator, Sign};
use crate::quadrature::gauss_legendre;
use crate::sum::compensated_sum;

/// Gauss–Legendre nodes on each half of `[a − b, b − a]`.
pub const LTILDE_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport {
    pub alpha: f64,
    /// `∫ l̃_r` over `[a − b, b − a]`, when `l̃` is registered.
    pub integral_ltilde: Option<f64>,
    /// `C(α, r, 2(b − a))`, when registered.
    pub constant: Option<f64>,
    /// `[𝒰̃u]_α ≤ [u]_α ∫l̃ + 2C` per test function.
    pub checks: BoundReport,
    /// `[𝒰̃u]_α` on `[a + δ, b − δ]` per test function.
    pub interior: Vec<f64>,
    pub delta: f64,
}

impl SmoothingReport {
    pub fn report_only(&self) -> bool {
        self.integral_ltilde.is_none() || self.constant.is_none()
    }

    pub fn passed(&self, strict: bool) -> bool {
        self.checks.passed(strict) && !(strict && self.report_only())
    }

    /// Columns `case,image_seminorm,bound,interior_seminorm`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["case", "image_seminorm", "bound", "interior_seminorm"])?;
        for (i, interior) in self.interior.iter().enumerate() {
            let check = self.checks.checks.get(i);
            w.write_record([
                i.to_string(),
                check.map(|c| fmt_f64(c.lhs)).unwrap_or_default(),
                check.map(|c| fmt_f64(c.rhs)).unwrap_or_default(),
                fmt_f64(*interior),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `∫_{-h}^{h} f` by Gauss–Legendre on both halves.
fn symmetric_integral(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(LTILDE_NODES);
    let half = |lo: f64| {
        compensated_sum(
            nodes
                .iter()
                .zip(&weights)
                .map(|(t, w)| 0.5 * h * w * f(lo + 0.5 * h * (t + 1.0))),
        )
    };
    half(-h) + half(0.0)
}

fn interior_domain(op: &ConvolutiveOperator, delta: f64) -> Result<Arc<DiscreteDomain>> {
    let (a, b) = op.interval();
    let domain = op.source();
    let coords: Vec<f64> = (0..domain.len())
        .map(|i| domain.x(i))
        .filter(|x| *x >= a + delta && *x <= b - delta)
        .collect();
    if coords.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fewer than two nodes in [{}, {}]",
            a + delta,
            b - delta
        )));
    }
    DiscreteDomain::from_points(coords, 1)
}

/// Checks the smoothing estimate on each test function, with `r` the sup
/// norm of that function.
pub fn smoothing_suite(op: &ConvolutiveOperator, family: &[GridFunction], alpha: f64, delta: f64) -> Result<SmoothingReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    let (a, b) = op.interval();
    let kernel = op.kernel();
    let interior = interior_domain(op, delta)?;
    let r_max = family.iter().map(GridFunction::sup_norm).fold(0.0, f64::max);
    let ltilde = kernel.ltilde().map(|l| symmetric_integral(|w| l(w, r_max), b - a));
    let constant = kernel.smoothing_constant().map(|c| c(alpha, r_max, 2.0 * (b - a)));
    let rows: Vec<Result<(Option<BoundCheck>, f64)>> = family
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let image = op.apply(u)?;
            let lhs = holder_seminorm(&image, alpha)?.seminorm;
            let inner = holder_seminorm(&restrict(&image, &interior)?, alpha)?.seminorm;
            let check = match (kernel.ltilde(), kernel.smoothing_constant()) {
                (Some(l), Some(c)) => {
                    let r = u.sup_norm();
                    let int_l = symmetric_integral(|w| l(w, r), b - a);
                    Some(BoundCheck {
                        name: "convolution_smoothing".into(),
                        case: i.to_string(),
                        lhs,
                        rhs: holder_seminorm(u, alpha)?.seminorm * int_l + 2.0 * c(alpha, r, 2.0 * (b - a)),
                        analytic: true,
                    })
                }
                _ => None,
            };
            Ok((check, inner))
        })
        .collect();
    let mut checks = BoundReport::default();
    let mut interior_seminorms = Vec::with_capacity(family.len());
    for row in rows {
        let (check, inner) = row?;
        checks.checks.extend(check);
        interior_seminorms.push(inner);
    }
    Ok(SmoothingReport {
        alpha,
        integral_ltilde: ltilde,
        constant,
        checks,
        interior: interior_seminorms,
        delta,
    })
}

/// Largest deviation of the derivative formula from centred differences of
/// `𝒰̃u` at every `stride`-th interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct SignCheck {
    pub step: f64,
    pub points: usize,
    pub plus_mismatch: f64,
    pub minus_mismatch: f64,
}

pub fn derivative_sign_check(
    op: &ConvolutiveOperator,
    u: &GridFunction,
    u_prime: &GridFunction,
    step: f64,
    stride: usize,
) -> Result<SignCheck> {
    let plus = op.derivative_formula(u, u_prime, Sign::Plus)?;
    let minus = op.derivative_formula(u, u_prime, Sign::Minus)?;
    let domain = op.source();
    let idx: Vec<usize> = (1..domain.len() - 1).step_by(stride.max(1)).collect();
    let diffs: Vec<Result<(f64, f64)>> = idx
        .par_iter()
        .map(|&i| {
            let x = domain.x(i);
            let hi = op.eval_at(x + step, u)?;
            let lo = op.eval_at(x - step, u)?;
            let mut dp = 0.0f64;
            let mut dm = 0.0f64;
            for c in 0..hi.len() {
                let fd = (hi[c] - lo[c]) / (2.0 * step);
                dp = dp.max((fd - plus.value(i)[c]).abs());
                dm = dm.max((fd - minus.value(i)[c]).abs());
            }
            Ok((dp, dm))
        })
        .collect();
    let (mut plus_mismatch, mut minus_mismatch) = (0.0f64, 0.0f64);
    for d in diffs {
        let (p, m) = d?;
        plus_mismatch = plus_mismatch.max(p);
        minus_mismatch = minus_mismatch.max(m);
    }
    Ok(SignCheck {
        step,
        points: idx.len(),
        plus_mismatch,
        minus_mismatch,
    })
}
