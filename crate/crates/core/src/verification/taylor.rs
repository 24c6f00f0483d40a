use std::io::Write;

use crate::domain::{fmt_f64, GridFunction};
use crate::error::{Error, Result};
use crate::holder::holder_norm;
use crate::operators::DifferentiableOperator;

/// Remainders below this multiple of the output scale count as rounding.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Slope margin over the order required for a pass.
pub const SLOPE_MARGIN: f64 = 0.8;

/// Finite-difference certification of a Fréchet derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCheckResult {
    pub order: usize,
    pub epsilons: Vec<f64>,
    /// `‖·‖₀` of the Taylor remainders.
    pub residual_norms: Vec<f64>,
    /// Target exponent `β` and the `‖·‖_β` remainders, when declared.
    pub beta: Option<f64>,
    pub residual_holder_norms: Option<Vec<f64>>,
    /// Log-log least-squares slope of `residual_norms`.
    pub fitted_slope: f64,
    pub holder_slope: Option<f64>,
    /// All remainders at rounding level; the slope is meaningless.
    pub exact: bool,
    pub used_fallback: bool,
    pub pass: bool,
}

impl TaylorCheckResult {
    /// Columns `epsilon,residual_sup[,residual_holder]`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        match &self.residual_holder_norms {
            Some(_) => w.write_record(["epsilon", "residual_sup", "residual_holder"])?,
            None => w.write_record(["epsilon", "residual_sup"])?,
        }
        for (i, (e, r)) in self.epsilons.iter().zip(&self.residual_norms).enumerate() {
            let mut row = vec![fmt_f64(*e), fmt_f64(*r)];
            if let Some(h) = &self.residual_holder_norms {
                row.push(fmt_f64(h[i]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x` over the positive pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Compares `op(u + εv)` with its Taylor polynomial of the given order.
pub fn taylor_check(
    op: &dyn DifferentiableOperator,
    u: &GridFunction,
    v: &GridFunction,
    epsilons: &[f64],
    order: usize,
) -> Result<TaylorCheckResult> {
    if epsilons.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 step sizes, got {}",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidArgument("step sizes must be positive".into()));
    }
    if !(1..=2).contains(&order) {
        return Err(Error::MissingDerivative(order));
    }
    u.check_compatible(v)?;
    let z_set = op.z_set();
    for &eps in epsilons {
        let probe = u.combine(1.0, eps, v)?;
        for (index, z) in probe.values().chunks(probe.dim()).enumerate() {
            let distance = z_set.distance(z);
            if distance > 0.0 {
                return Err(Error::OutsideAdmissibleSet { index, distance });
            }
        }
    }
    let base = op.apply(u)?;
    let d1 = op.derivative(u, 1)?;
    let lin = d1.apply(&[v])?;
    let (quad, fallback2) = if order == 2 {
        let d2 = op.derivative(u, 2)?;
        (Some(d2.apply(&[v, v])?), d2.used_fallback())
    } else {
        (None, false)
    };
    let beta = op.target_exponent();
    let mut residual_norms = Vec::with_capacity(epsilons.len());
    let mut holder = beta.map(|_| Vec::with_capacity(epsilons.len()));
    let mut exact = true;
    for &eps in epsilons {
        let probe = op.apply(&u.combine(1.0, eps, v)?)?;
        let mut model = base.combine(1.0, eps, &lin)?;
        if let Some(q) = &quad {
            model = model.combine(1.0, 0.5 * eps * eps, q)?;
        }
        let rem = probe.sub(&model)?;
        let r = rem.sup_norm();
        let scale = probe.sup_norm().max(base.sup_norm()).max(1.0);
        exact &= r <= EXACT_TOLERANCE * scale;
        residual_norms.push(r);
        if let (Some(b), Some(h)) = (beta, holder.as_mut()) {
            h.push(holder_norm(&rem, b)?.norm);
        }
    }
    let fitted_slope = loglog_slope(epsilons, &residual_norms);
    let holder_slope = holder.as_ref().map(|h| loglog_slope(epsilons, h));
    let threshold = order as f64 + SLOPE_MARGIN;
    let pass = exact
        || (fitted_slope >= threshold && holder_slope.is_none_or(|s| s >= threshold));
    Ok(TaylorCheckResult {
        order,
        epsilons: epsilons.to_vec(),
        residual_norms,
        beta,
        residual_holder_norms: holder,
        fitted_slope,
        holder_slope,
        exact,
        used_fallback: d1.used_fallback() || fallback2,
        pass,
    })
}
