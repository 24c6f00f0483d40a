use std::io::Write;
use std::sync::Arc;

use crate::domain::{fmt_f64, DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::holder::holder_seminorm;
use crate::kernels::KernelSpec;
use crate::operators::{DifferentiableOperator, UrysohnOperator};
use crate::quadrature::{QuadratureMeasure, Scheme};

/// Samples a function on a given node set.
pub type Sampler<'a> = &'a (dyn Fn(&Arc<DiscreteDomain>) -> Result<GridFunction> + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_error: f64,
    pub holder_error: f64,
    /// `log₂(e_{k-1}/e_k)` of the sup errors; none on the first row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub scheme: Scheme,
    pub beta: f64,
    pub reference_n: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Indices of rows whose sup error did not decrease.
    pub fn non_monotone_steps(&self) -> Vec<usize> {
        (1..self.rows.len())
            .filter(|&k| self.rows[k].sup_error >= self.rows[k - 1].sup_error)
            .collect()
    }

    /// Columns `N,sup_error,holder_error,rate`; the first rate is empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["N", "sup_error", "holder_error", "rate"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_f64(r.sup_error),
                fmt_f64(r.holder_error),
                r.rate.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Errors of `𝒰_N(E_N u)` against a Gauss–Legendre reference with
/// `reference_n` nodes, all evaluated on `target`. `E_N` samples `u` at the
/// rule nodes.
#[allow(clippy::too_many_arguments)]
pub fn nystrom_convergence(
    kernel: &KernelSpec,
    u: Sampler<'_>,
    (a, b): (f64, f64),
    target: &Arc<DiscreteDomain>,
    scheme: Scheme,
    ns: &[usize],
    reference_n: usize,
    beta: f64,
) -> Result<ConvergenceTable> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("no rule sizes given".into()));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("rule sizes must increase strictly".into()));
    }
    let largest = *ns.last().expect("non-empty");
    if reference_n < 4 * largest {
        return Err(Error::InvalidArgument(format!(
            "reference rule with {reference_n} nodes is not 4x finer than {largest}"
        )));
    }
    let run = |n: usize, scheme: Scheme| -> Result<GridFunction> {
        let mu = QuadratureMeasure::lebesgue_rule(a, b, n, scheme)?;
        let samples = u(mu.domain())?;
        UrysohnOperator::new(kernel.clone(), mu, target.clone()).apply(&samples)
    };
    let reference = run(reference_n, Scheme::GaussLegendre)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let err = run(n, scheme)?.sub(&reference)?;
        let sup_error = err.sup_norm();
        let holder_error = holder_seminorm(&err, beta)?.seminorm;
        let rate = rows.last().map(|p| (p.sup_error / sup_error).log2());
        rows.push(ConvergenceRow {
            n,
            sup_error,
            holder_error,
            rate,
        });
    }
    Ok(ConvergenceTable {
        scheme,
        beta,
        reference_n,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(f: fn(f64) -> f64) -> impl Fn(&Arc<DiscreteDomain>) -> Result<GridFunction> + Sync {
        move |d| GridFunction::from_scalar_fn(d.clone(), f)
    }

    #[test]
    fn z_independent_kernel_error_is_mass_error() {
        let target = DiscreteDomain::uniform_interval(0.0, 1.0, 5).unwrap();
        let k = KernelSpec::scalar("f1", |x, _, _| 1.0 + x);
        let u = sampler(f64::sin);
        let t = nystrom_convergence(&k, &u, (0.0, 1.0), &target, Scheme::Trapezoid, &[5, 9], 40, 1.0).unwrap();
        // trapezoid integrates constants exactly
        assert!(t.rows.iter().all(|r| r.sup_error < 1e-14));
    }

    #[test]
    fn trapezoid_rate_two() {
        let target = DiscreteDomain::uniform_interval(-1.0, 1.0, 21).unwrap();
        let k = KernelSpec::scalar("g", |x, y, z| (-(x - y) * (x - y)).exp() * z * z);
        let u = sampler(|y| 0.5 + 0.25 * (std::f64::consts::PI * y).sin());
        let t = nystrom_convergence(&k, &u, (-1.0, 1.0), &target, Scheme::Trapezoid, &[25, 49, 97], 400, 0.5)
            .unwrap();
        for r in &t.rows[1..] {
            let rate = r.rate.unwrap();
            assert!((1.8..=2.2).contains(&rate), "{t:?}");
        }
        assert!(t.non_monotone_steps().is_empty());
    }

    #[test]
    fn reference_must_be_finer() {
        let target = DiscreteDomain::uniform_interval(0.0, 1.0, 3).unwrap();
        let k = KernelSpec::scalar("z", |_, _, z| z);
        let u = sampler(f64::exp);
        assert!(nystrom_convergence(&k, &u, (0.0, 1.0), &target, Scheme::Trapezoid, &[10, 20], 79, 1.0).is_err());
        assert!(nystrom_convergence(&k, &u, (0.0, 1.0), &target, Scheme::Trapezoid, &[20, 10], 400, 1.0).is_err());
    }
}
