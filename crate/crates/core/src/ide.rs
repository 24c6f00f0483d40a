//! Integrodifference dynamics `u_{t+1} = ℋ(u_t)` and Newton fixed points.

use std::io::Write;

use nalgebra::DMatrix;

use crate::domain::{fmt_f64, GridFunction};
use crate::error::{Error, Result};
use crate::holder::holder_seminorm;
use crate::linalg::DenseLu;
use crate::operators::{DifferentiableOperator, HammersteinOperator};

/// Iteration stops once the sup norm exceeds this value.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// Orbit with per-step diagnostics. Index 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub alpha: f64,
    pub states: Vec<GridFunction>,
    pub sup_norms: Vec<f64>,
    pub holder_seminorms: Vec<f64>,
    /// Values clamped into `Z` while computing each state; 0 for the
    /// initial state.
    pub clamp_counts: Vec<usize>,
    /// Step at which the overflow guard tripped.
    pub overflow_at: Option<usize>,
}

impl OrbitRecord {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> &GridFunction {
        self.states.last().expect("orbit holds the initial state")
    }

    /// Columns `step,sup_norm,holder_seminorm,clamped`.
    pub fn write_diagnostics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step", "sup_norm", "holder_seminorm", "clamped"])?;
        for t in 0..self.states.len() {
            w.write_record([
                t.to_string(),
                fmt_f64(self.sup_norms[t]),
                fmt_f64(self.holder_seminorms[t]),
                self.clamp_counts[t].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format: `step`, the point coordinates, then the components.
    pub fn write_states_csv<W: Write>(&self, writer: W) -> Result<()> {
        let first = &self.states[0];
        let domain = first.domain();
        let mut header = vec!["step".to_string()];
        if domain.dim() == 1 {
            header.push("x".into());
        } else {
            header.extend((0..domain.dim()).map(|j| format!("x{j}")));
        }
        if first.dim() == 1 {
            header.push("u".into());
        } else {
            header.extend((0..first.dim()).map(|j| format!("u{j}")));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&header)?;
        for (t, s) in self.states.iter().enumerate() {
            for i in 0..s.len() {
                let mut row = vec![t.to_string()];
                row.extend(domain.point(i).iter().map(|v| fmt_f64(*v)));
                row.extend(s.value(i).iter().map(|v| fmt_f64(*v)));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Applies `op` up to `steps` times, recording diagnostics at exponent
/// `alpha`. A tripped overflow guard ends the orbit early.
pub fn iterate(op: &HammersteinOperator, u0: &GridFunction, steps: usize, alpha: f64) -> Result<OrbitRecord> {
    let seminorm = |u: &GridFunction| holder_seminorm(u, alpha).map(|r| r.seminorm);
    let mut record = OrbitRecord {
        alpha,
        states: vec![u0.clone()],
        sup_norms: vec![u0.sup_norm()],
        holder_seminorms: vec![seminorm(u0)?],
        clamp_counts: vec![0],
        overflow_at: None,
    };
    let mut u = u0.clone();
    for t in 1..=steps {
        let (next, clamped) = op.apply_audited(&u)?;
        let sup = next.sup_norm();
        record.holder_seminorms.push(seminorm(&next)?);
        record.sup_norms.push(sup);
        record.clamp_counts.push(clamped);
        record.states.push(next.clone());
        if !(sup <= OVERFLOW_GUARD) {
            record.overflow_at = Some(t);
            break;
        }
        u = next;
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    /// Target for `‖u − ℋ(u)‖₀`.
    pub tol: f64,
    /// Newton steps after pre-iteration.
    pub max_iter: usize,
    /// Plain iterations `u ← ℋ(u)` before Newton starts.
    pub pre_iterations: usize,
    pub armijo_c: f64,
    pub max_halvings: usize,
    /// Condition estimates above this count as singular.
    pub condition_limit: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10,
            pre_iterations: 50,
            armijo_c: 1e-4,
            max_halvings: 30,
            condition_limit: 1e14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub u_star: GridFunction,
    /// `‖F(u_k)‖₀` for every Newton iterate, the start included.
    pub residual_history: Vec<f64>,
    /// Accepted damping factors.
    pub step_sizes: Vec<f64>,
    pub condition_estimates: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖ℋ(u_star) − u_star‖₀` from a separate evaluation.
    pub verified_residual: f64,
    /// No damping factor gave sufficient decrease; the last iterate is kept.
    pub line_search_failed: bool,
}

/// Residuals below this are treated as rounding noise by
/// [`NewtonReport::quadratic_pairs`].
pub const RESIDUAL_NOISE_FLOOR: f64 = 1e-14;

impl NewtonReport {
    /// Consecutive residual pairs `(r_k, r_{k+1}, r_{k+1} ≤ r_k^{1.5})` for
    /// which the prediction `r_k^{1.5}` lies above the noise floor.
    pub fn quadratic_pairs(&self) -> Vec<(f64, f64, bool)> {
        self.residual_history
            .windows(2)
            .filter(|w| w[0].powf(1.5) > RESIDUAL_NOISE_FLOOR)
            .map(|w| (w[0], w[1], w[1] <= w[0].powf(1.5)))
            .collect()
    }

    /// Columns `iteration,residual,step,condition`; the last row has no
    /// step.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iteration", "residual", "step", "condition"])?;
        for (k, r) in self.residual_history.iter().enumerate() {
            w.write_record([
                k.to_string(),
                fmt_f64(*r),
                self.step_sizes.get(k).map(|v| fmt_f64(*v)).unwrap_or_default(),
                self.condition_estimates.get(k).map(|v| fmt_f64(*v)).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn residual(op: &dyn DifferentiableOperator, u: &GridFunction) -> Result<(GridFunction, f64)> {
    let f = u.sub(&op.apply(u)?)?;
    let r = f.sup_norm();
    Ok((f, r))
}

/// Damped Newton for `u = ℋ(u)` with Armijo backtracking on `‖F‖₀`,
/// `F(u) = u − ℋ(u)`. Trial iterates are projected onto the admissible set.
pub fn newton_fixed_point(
    op: &dyn DifferentiableOperator,
    u0: &GridFunction,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if !op.source().same_as(op.target()) || op.input_dim() != op.output_dim() {
        return Err(Error::DomainMismatch(
            "fixed points need an operator from a space into itself".into(),
        ));
    }
    let mut u = u0.clone();
    for _ in 0..opts.pre_iterations {
        u = op.apply(&u)?;
    }
    let size = u.values().len();
    let (mut f, mut r) = residual(op, &u)?;
    let mut report = NewtonReport {
        u_star: u.clone(),
        residual_history: vec![r],
        step_sizes: Vec::new(),
        condition_estimates: Vec::new(),
        iterations: 0,
        converged: false,
        verified_residual: f64::NAN,
        line_search_failed: false,
    };
    while r > opts.tol && report.iterations < opts.max_iter {
        let k = report.iterations;
        let dh = op.derivative(&u, 1)?.to_dense()?;
        let mut j = DMatrix::from_row_slice(size, size, &dh);
        j.neg_mut();
        for i in 0..size {
            j[(i, i)] += 1.0;
        }
        let lu = DenseLu::new(j);
        let condition = lu.condition();
        if !(condition <= opts.condition_limit) {
            return Err(Error::SingularLinearization { iterate: k, condition });
        }
        let rhs: Vec<f64> = f.values().iter().map(|v| -v).collect();
        let delta = lu
            .solve(&rhs)
            .ok_or(Error::SingularLinearization { iterate: k, condition })?;
        let delta = GridFunction::new(u.domain().clone(), u.dim(), delta)?;
        let step = |t: f64| -> Result<GridFunction> {
            let trial = u.combine(1.0, t, &delta)?;
            let mut values = trial.into_values();
            for z in values.chunks_mut(u.dim()) {
                op.z_set().clamp(z);
            }
            GridFunction::new(u.domain().clone(), u.dim(), values)
        };
        let mut t = 1.0;
        let mut trial = step(t)?;
        let (mut f_trial, mut r_trial) = residual(op, &trial)?;
        let mut halvings = 0;
        while r_trial > (1.0 - opts.armijo_c * t) * r {
            if halvings == opts.max_halvings {
                report.line_search_failed = true;
                break;
            }
            t *= 0.5;
            halvings += 1;
            trial = step(t)?;
            (f_trial, r_trial) = residual(op, &trial)?;
        }
        if report.line_search_failed {
            break;
        }
        u = trial;
        f = f_trial;
        r = r_trial;
        report.iterations += 1;
        report.step_sizes.push(t);
        report.condition_estimates.push(condition);
        report.residual_history.push(r);
    }
    report.converged = r <= opts.tol;
    report.verified_residual = op.apply(&u)?.sub(&u)?.sup_norm();
    report.u_star = u;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{builtin_kernel, FredholmKernel};
    use crate::operators::{FredholmOperator, NemytskiiOperator};
    use crate::quadrature::{QuadratureMeasure, Scheme};

    fn hammerstein(mu: &QuadratureMeasure, k: FredholmKernel, growth: &str, p: &[f64]) -> HammersteinOperator {
        let g = builtin_kernel(growth, p).unwrap().into_growth().unwrap();
        let f = FredholmOperator::on_rule(k, mu.clone()).unwrap();
        HammersteinOperator::new(f, NemytskiiOperator::new(g, mu.domain().clone())).unwrap()
    }

    #[test]
    fn null_kernel_collapses() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 11, Scheme::Trapezoid).unwrap();
        let op = hammerstein(&mu, FredholmKernel::scalar("zero", |_, _| 0.0), "identity", &[]);
        let u0 = GridFunction::from_scalar_fn(mu.domain().clone(), |x| 1.0 + x).unwrap();
        let orbit = iterate(&op, &u0, 3, 0.5).unwrap();
        assert_eq!(orbit.steps(), 3);
        assert!(orbit.sup_norms[1..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn unit_mass_kernel_conserves_integral() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 41, Scheme::Trapezoid).unwrap();
        // symmetric, rows and columns integrate to one under the rule
        let op = hammerstein(&mu, FredholmKernel::scalar("one", |_, _| 1.0), "identity", &[]);
        let u0 = GridFunction::from_scalar_fn(mu.domain().clone(), |x| (5.0 * x).sin()).unwrap();
        let orbit = iterate(&op, &u0, 5, 1.0).unwrap();
        let m0 = mu.integrate(&u0).unwrap()[0];
        for s in &orbit.states {
            assert!((mu.integrate(s).unwrap()[0] - m0).abs() < 1e-10);
        }
    }

    #[test]
    fn overflow_guard_trips() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 5, Scheme::Trapezoid).unwrap();
        let op = hammerstein(&mu, FredholmKernel::scalar("big", |_, _| 1e5), "identity", &[]);
        let u0 = GridFunction::constant(mu.domain().clone(), &[1.0]).unwrap();
        let orbit = iterate(&op, &u0, 100, 1.0).unwrap();
        assert_eq!(orbit.overflow_at, Some(3));
        assert_eq!(orbit.steps(), 3);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let mu = QuadratureMeasure::lebesgue_rule(-1.0, 1.0, 21, Scheme::Trapezoid).unwrap();
        let k = builtin_kernel("laplace_dispersal", &[1.0]).unwrap().into_dispersal().unwrap();
        let op = hammerstein(&mu, k.fredholm(), "beverton_holt", &[2.0, 1.0]);
        let zero = GridFunction::zeros(mu.domain().clone(), 1);
        let opts = NewtonOptions {
            pre_iterations: 0,
            ..Default::default()
        };
        let report = newton_fixed_point(&op, &zero, &opts).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.residual_history, vec![0.0]);
    }

    #[test]
    fn linear_growth_converges_in_one_step() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 31, Scheme::Trapezoid).unwrap();
        let k = FredholmKernel::scalar("k", |x, y| 0.5 * (x * y).cos());
        let op = hammerstein(&mu, k, "affine", &[0.8, 0.3]);
        let u0 = GridFunction::from_scalar_fn(mu.domain().clone(), f64::exp).unwrap();
        let opts = NewtonOptions {
            pre_iterations: 0,
            tol: 1e-12,
            ..Default::default()
        };
        let report = newton_fixed_point(&op, &u0, &opts).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert!(report.verified_residual <= 1e-12);
    }

    #[test]
    fn singular_linearization_is_reported() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 11, Scheme::Trapezoid).unwrap();
        // Dℋ = 𝒦 with 𝒦1 = 1, so I − Dℋ annihilates constants
        let op = hammerstein(&mu, FredholmKernel::scalar("one", |_, _| 1.0), "affine", &[1.0, 1.0]);
        let u0 = GridFunction::constant(mu.domain().clone(), &[0.0]).unwrap();
        let opts = NewtonOptions {
            pre_iterations: 0,
            ..Default::default()
        };
        assert!(matches!(
            newton_fixed_point(&op, &u0, &opts),
            Err(Error::SingularLinearization { iterate: 0, .. })
        ));
    }

    fn laplace_bh(n: usize) -> HammersteinOperator {
        let mu = QuadratureMeasure::lebesgue_rule(-10.0, 10.0, n, Scheme::Trapezoid).unwrap();
        let k = crate::kernels::Dispersal::laplace(1.0).unwrap().fredholm();
        hammerstein(&mu, k, "beverton_holt", &[2.0, 1.0])
    }

    #[test]
    fn iterates_stay_admissible() {
        let op = laplace_bh(201);
        // small tails: the full Newton step would leave u >= 0
        let u0 = GridFunction::from_scalar_fn(op.nemytskii().domain().clone(), |x| {
            if x.abs() < 2.0 {
                0.5 * (1.0 - 1.0 / (1.0 - x * x / 4.0)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let opts = NewtonOptions {
            pre_iterations: 3,
            ..Default::default()
        };
        let report = newton_fixed_point(&op, &u0, &opts).unwrap();
        assert!(report.u_star.values().iter().all(|&v| v >= 0.0));
        assert!(report.residual_history.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(report.converged, !report.line_search_failed);
    }

    #[test]
    fn positive_start_converges_quadratically() {
        let op = laplace_bh(201);
        let u0 = GridFunction::constant(op.nemytskii().domain().clone(), &[0.5]).unwrap();
        let opts = NewtonOptions {
            pre_iterations: 3,
            ..Default::default()
        };
        let report = newton_fixed_point(&op, &u0, &opts).unwrap();
        assert!(report.converged && !report.line_search_failed);
        let pairs = report.quadratic_pairs();
        assert!(pairs.len() >= 2 && pairs.iter().all(|p| p.2), "{pairs:?}");
    }
}
