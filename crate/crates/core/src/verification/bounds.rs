use std::io::Write;

use rayon::prelude::*;

use crate::domain::{fmt_f64, GridFunction};
use crate::error::{Error, Result};
use crate::holder::{holder_norm, holder_seminorm, leq};
use crate::kernels::estimate_caratheodory_bounds;
use crate::operators::{DifferentiableOperator, FredholmOperator, NemytskiiOperator, UrysohnOperator};
use crate::sum::compensated_sum;

/// Halton probes per sampled sup.
pub const SAMPLED_Z: usize = 64;

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    /// Test function index or pair, e.g. `3` or `3:7`.
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    /// The right-hand side comes from registered analytic bound data.
    pub analytic: bool,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        leq(self.lhs, self.rhs)
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn label(&self) -> &'static str {
        if self.analytic {
            "analytic"
        } else {
            "sampled lower estimate of the sup"
        }
    }

    /// Sampled bounds only fail hard in strict mode.
    pub fn is_hard_failure(&self, strict: bool) -> bool {
        !self.holds() && (self.analytic || strict)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn extend(&mut self, other: BoundReport) {
        self.checks.extend(other.checks);
    }

    pub fn hard_failures(&self, strict: bool) -> Vec<&BoundCheck> {
        self.checks.iter().filter(|c| c.is_hard_failure(strict)).collect()
    }

    pub fn passed(&self, strict: bool) -> bool {
        self.hard_failures(strict).is_empty()
    }

    /// Smallest margin per inequality name, in first-seen order.
    pub fn worst_margins(&self) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = Vec::new();
        for c in &self.checks {
            match out.iter_mut().find(|(n, _)| *n == c.name) {
                Some(entry) => entry.1 = entry.1.min(c.margin()),
                None => out.push((&c.name, c.margin())),
            }
        }
        out
    }

    /// Columns `name,case,lhs,rhs,margin,kind,holds`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["name", "case", "lhs", "rhs", "margin", "kind", "holds"])?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                c.case.clone(),
                fmt_f64(c.lhs),
                fmt_f64(c.rhs),
                fmt_f64(c.margin()),
                c.label().to_string(),
                c.holds().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_radius(tests: &[GridFunction], r: f64) -> Result<()> {
    for (i, u) in tests.iter().enumerate() {
        if u.sup_norm() > r {
            return Err(Error::InvalidArgument(format!(
                "test function {i} has sup norm {} above the radius {r}",
                u.sup_norm()
            )));
        }
    }
    Ok(())
}

fn pairs(len: usize) -> Vec<(usize, usize)> {
    (0..len).flat_map(|i| (i + 1..len).map(move |j| (i, j))).collect()
}

/// `‖𝒦u‖₀ ≤ max{1, diam^α}·max_x Σ w|k|·‖u‖_α` and, with a registered
/// Lipschitz constant `L` of `k` in `x`, `[𝒦u]₁ ≤ L·μ(Ω)·‖u‖₀`.
pub fn fredholm_bounds(op: &FredholmOperator, tests: &[GridFunction], alpha: f64) -> Result<BoundReport> {
    let factor = op.norm_bound(alpha)?;
    let lip = op.kernel().lipschitz_x();
    let mass = compensated_sum(op.measure().weights().iter().copied());
    let checks: Vec<Result<Vec<BoundCheck>>> = tests
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let image = op.apply(u)?;
            let mut out = vec![BoundCheck {
                name: "fredholm_norm".into(),
                case: i.to_string(),
                lhs: image.sup_norm(),
                rhs: factor * holder_norm(u, alpha)?.norm,
                analytic: true,
            }];
            if let Some(l) = lip {
                out.push(BoundCheck {
                    name: "fredholm_kbar1".into(),
                    case: i.to_string(),
                    lhs: holder_seminorm(&image, 1.0)?.seminorm,
                    rhs: l * mass * u.sup_norm(),
                    analytic: true,
                });
            }
            Ok(out)
        })
        .collect();
    let mut report = BoundReport::default();
    for c in checks {
        report.checks.extend(c?);
    }
    Ok(report)
}

/// `max_x Σ_y w_y·b(x, y)` over the operator's target and rule.
fn weighted_row_sup(op: &UrysohnOperator, b: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let w = op.measure().weights();
    (0..op.target().len())
        .into_par_iter()
        .map(|xi| compensated_sum(w.iter().enumerate().map(|(yi, wy)| wy * b(xi, yi))))
        .reduce(|| 0.0, f64::max)
}

/// Sup, Lipschitz-on-bounded-sets and image-seminorm inequalities of a
/// Urysohn operator on test functions with `‖u‖₀ ≤ r`.
///
/// Registered analytic bounds give hard checks. Without them the sup and
/// Lipschitz constants are replaced by sampled estimates of `b_r^0` and
/// `b_r^1`; the latter presumes a convex `Z`.
pub fn urysohn_bounds(op: &UrysohnOperator, tests: &[GridFunction], r: f64) -> Result<BoundReport> {
    check_radius(tests, r)?;
    let kernel = op.kernel();
    let bounds = kernel.bounds();
    let target = op.target();
    let source = op.source();
    let images: Vec<GridFunction> = tests.iter().map(|u| op.apply(u)).collect::<Result<_>>()?;
    let mut report = BoundReport::default();

    let (sup_rhs, sup_analytic) = match &bounds.sup {
        Some(b) => (weighted_row_sup(op, |xi, yi| b(r, target.point(xi), source.point(yi))), true),
        None => {
            let s = estimate_caratheodory_bounds(kernel, target, source, r, 0, SAMPLED_Z)?;
            (weighted_row_sup(op, |xi, yi| s.b_at(xi, yi)), false)
        }
    };
    for (i, v) in images.iter().enumerate() {
        report.checks.push(BoundCheck {
            name: "urysohn_sup".into(),
            case: i.to_string(),
            lhs: v.sup_norm(),
            rhs: sup_rhs,
            analytic: sup_analytic,
        });
    }

    let lipschitz = match &bounds.lipschitz {
        Some(l) => Some((
            weighted_row_sup(op, |xi, yi| (l.l)(r, target.point(xi), source.point(yi))),
            l.theta,
            true,
        )),
        None if kernel.z_set().is_convex() => {
            let s = estimate_caratheodory_bounds(kernel, target, source, r, 1, SAMPLED_Z)?;
            Some((weighted_row_sup(op, |xi, yi| s.b_at(xi, yi)), 1.0, false))
        }
        None => None,
    };
    if let Some((constant, theta, analytic)) = lipschitz {
        for (i, j) in pairs(tests.len()) {
            report.checks.push(BoundCheck {
                name: "urysohn_lipschitz".into(),
                case: format!("{i}:{j}"),
                lhs: images[i].sub(&images[j])?.sup_norm(),
                rhs: constant * tests[i].sub(&tests[j])?.sup_norm().powf(theta),
                analytic,
            });
        }
    }

    if let Some(h) = &bounds.image_holder {
        let rhs = compensated_sum(
            op.measure()
                .weights()
                .iter()
                .enumerate()
                .map(|(yi, w)| w * (h.hbar)(r, source.point(yi))),
        );
        for (i, v) in images.iter().enumerate() {
            report.checks.push(BoundCheck {
                name: "urysohn_image_holder".into(),
                case: i.to_string(),
                lhs: holder_seminorm(v, h.beta)?.seminorm,
                rhs,
                analytic: true,
            });
        }
    }
    Ok(report)
}

/// `‖𝒢u − 𝒢ū‖₀ ≤ l'_r‖u − ū‖₀` and, for autonomous `g`,
/// `[𝒢u]_α ≤ l'_r[u]_α`. Needs a registered `l'_r`.
pub fn nemytskii_bounds(op: &NemytskiiOperator, tests: &[GridFunction], r: f64, alpha: f64) -> Result<BoundReport> {
    check_radius(tests, r)?;
    let mut report = BoundReport::default();
    let Some(l) = op.growth().lipschitz_bound() else {
        return Ok(report);
    };
    let l = l(r);
    let images: Vec<GridFunction> = tests.iter().map(|u| op.apply(u)).collect::<Result<_>>()?;
    for (i, j) in pairs(tests.len()) {
        report.checks.push(BoundCheck {
            name: "nemytskii_lipschitz".into(),
            case: format!("{i}:{j}"),
            lhs: images[i].sub(&images[j])?.sup_norm(),
            rhs: l * tests[i].sub(&tests[j])?.sup_norm(),
            analytic: true,
        });
    }
    if op.growth().is_autonomous() {
        for (i, (u, v)) in tests.iter().zip(&images).enumerate() {
            report.checks.push(BoundCheck {
                name: "nemytskii_holder".into(),
                case: i.to_string(),
                lhs: holder_seminorm(v, alpha)?.seminorm,
                rhs: l * holder_seminorm(u, alpha)?.seminorm,
                analytic: true,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{builtin_kernel, FredholmKernel, KernelSpec, LipschitzBound, UrysohnBounds};
    use crate::quadrature::{QuadratureMeasure, Scheme};
    use crate::verification::generators::random_piecewise_linear;
    use std::sync::Arc;

    fn tests_on(mu: &QuadratureMeasure, count: u64, amp: f64) -> Vec<GridFunction> {
        (0..count)
            .map(|s| random_piecewise_linear(mu.domain().clone(), s, 6, amp))
            .collect()
    }

    #[test]
    fn unit_fredholm_kernel() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 51, Scheme::Trapezoid).unwrap();
        let op = FredholmOperator::on_rule(FredholmKernel::scalar("one", |_, _| 1.0), mu.clone()).unwrap();
        let report = fredholm_bounds(&op, &tests_on(&mu, 30, 1.0), 1.0).unwrap();
        assert_eq!(report.checks.len(), 30);
        assert!(report.passed(true));
    }

    #[test]
    fn sin_kernel_lipschitz() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 3.0, 61, Scheme::Trapezoid).unwrap();
        let k = KernelSpec::scalar("sinz", |x, _, z| x.sin() * z).with_bounds(UrysohnBounds {
            lipschitz: Some(LipschitzBound {
                theta: 1.0,
                l: Arc::new(|_, x, _| x[0].sin().abs()),
            }),
            ..Default::default()
        });
        let op = UrysohnOperator::on_rule(k, mu.clone());
        let report = urysohn_bounds(&op, &tests_on(&mu, 12, 2.0), 2.0).unwrap();
        assert!(report.checks.iter().any(|c| c.name == "urysohn_lipschitz" && c.analytic));
        assert!(report.checks.iter().any(|c| c.name == "urysohn_sup" && !c.analytic));
        assert!(report.passed(false));
    }

    #[test]
    fn identity_nemytskii_constant_one() {
        let mu = QuadratureMeasure::lebesgue_rule(-1.0, 1.0, 41, Scheme::Trapezoid).unwrap();
        let g = builtin_kernel("identity", &[]).unwrap().into_growth().unwrap();
        let op = NemytskiiOperator::new(g, mu.domain().clone());
        let report = nemytskii_bounds(&op, &tests_on(&mu, 10, 1.0), 1.0, 0.5).unwrap();
        assert!(report.checks.iter().all(|c| c.lhs == c.rhs));
        assert!(report.passed(true));
    }

    #[test]
    fn violated_bound_is_hard_failure() {
        let c = BoundCheck {
            name: "x".into(),
            case: "0".into(),
            lhs: 2.0,
            rhs: 1.0,
            analytic: false,
        };
        assert!(!c.is_hard_failure(false));
        assert!(c.is_hard_failure(true));
    }

    #[test]
    fn radius_enforced() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 11, Scheme::Trapezoid).unwrap();
        let op = UrysohnOperator::on_rule(KernelSpec::scalar("z", |_, _, z| z), mu.clone());
        assert!(urysohn_bounds(&op, &tests_on(&mu, 3, 2.0), 0.5).is_err());
    }
}
