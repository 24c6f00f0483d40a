use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use urysohn_core::domain::fmt_f64;
use urysohn_core::holder::pathology::PATHOLOGY_LEVELS;
use urysohn_core::holder::{leq, pathology_suite_with, ScalarMap};
use urysohn_core::ide::{iterate, newton_fixed_point, NewtonOptions};
use urysohn_core::kernels::{builtin_kernel, identity, BuiltinKernel, KernelSpec};
use urysohn_core::verification::generators::random_piecewise_linear;
use urysohn_core::verification::{
    builtin_bound_suite, default_params, nystrom_convergence, smoothing_suite, taylor_check, BoundSuiteConfig,
};
use urysohn_core::{
    calculus_rules_check, holder_seminorm, ConvolutiveOperator, DiscreteDomain, Error, GridFunction, Scheme,
};

use crate::config::{parse_scheme, ExperimentConfig, FunctionSpec, Operator, OperatorSpec};
use crate::CliError;

/// Resolved command-line settings shared by every subcommand.
pub struct Context {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub strict: bool,
}

/// Result of a subcommand: report lines and whether every hard assertion
/// held.
pub struct Outcome {
    pub lines: Vec<String>,
    pub passed: bool,
}

impl Outcome {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            passed: true,
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.passed &= ok;
        self.line(format!("{name}: {}", if ok { "PASS" } else { "FAIL" }));
    }
}

impl Context {
    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.out).map_err(Error::from)?;
        Ok(BufWriter::new(File::create(self.out.join(name)).map_err(Error::from)?))
    }

    fn save(&self, name: &str, u: &GridFunction) -> Result<(), CliError> {
        u.write_csv(self.create(name)?)?;
        Ok(())
    }

    /// Writes `summary.txt` with the report lines.
    pub fn finish(&self, outcome: &Outcome) -> Result<(), CliError> {
        let mut w = self.create("summary.txt")?;
        for l in &outcome.lines {
            writeln!(w, "{l}").map_err(Error::from)?;
        }
        writeln!(w, "status: {}", if outcome.passed { "PASS" } else { "FAIL" }).map_err(Error::from)?;
        w.flush().map_err(Error::from)?;
        Ok(())
    }
}

fn required<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Input(format!("missing [{name}] section")))
}

fn operator_setup(cfg: &ExperimentConfig) -> Result<(Operator, (f64, f64)), CliError> {
    let spec = required(&cfg.operator, "operator")?;
    let mu = cfg.measure()?;
    let interval = match &cfg.domain {
        Some(d) if d.a.is_some() || d.b.is_some() => cfg.interval()?,
        _ => mu.domain().bounds(),
    };
    Ok((spec.build(&mu, interval)?, interval))
}

pub fn holder_estimate(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let f = required(&cfg.function, "function")?;
    let domain = cfg.domain()?;
    let u = f.sample(&domain, domain.bounds(), ctx.seed)?;
    let alphas = cfg.alphas()?;
    let bound = cfg.tolerances.as_ref().and_then(|t| t.holder_bound);
    let mut out = Outcome::new();
    ctx.save("function.csv", &u)?;

    let mut w = csv::Writer::from_writer(ctx.create("holder.csv")?);
    w.write_record(["alpha", "sup_norm", "seminorm", "norm", "argmax_i", "argmax_j"])
        .map_err(Error::from)?;
    for &alpha in &alphas {
        let r = holder_seminorm(&u, alpha)?;
        let (i, j) = r
            .argmax_pair
            .map(|(i, j)| (i.to_string(), j.to_string()))
            .unwrap_or_default();
        w.write_record([fmt_f64(alpha), fmt_f64(r.sup_norm), fmt_f64(r.seminorm), fmt_f64(r.norm), i, j])
            .map_err(Error::from)?;
        out.line(format!(
            "alpha={} sup={} seminorm={} norm={}",
            fmt_f64(alpha),
            fmt_f64(r.sup_norm),
            fmt_f64(r.seminorm),
            fmt_f64(r.norm)
        ));
        if let Some(b) = bound {
            out.check(&format!("seminorm <= {} at alpha={}", fmt_f64(b), fmt_f64(alpha)), leq(r.seminorm, b));
        }
    }
    w.flush().map_err(Error::from)?;

    if let Some(levels) = cfg.holder.as_ref().and_then(|h| h.refinement.clone()) {
        if f.csv.is_some() {
            return Err(CliError::Input("refinement needs a generator, not a CSV".into()));
        }
        let (a, b) = cfg.interval()?;
        let mut table = vec![Vec::new(); alphas.len()];
        let mut w = csv::Writer::from_writer(ctx.create("refinement.csv")?);
        w.write_record(["cells", "alpha", "seminorm"]).map_err(Error::from)?;
        for &cells in &levels {
            let d = DiscreteDomain::cell_centers(a, b, cells)?;
            let uc = f.sample(&d, (a, b), ctx.seed)?;
            for (k, &alpha) in alphas.iter().enumerate() {
                let s = holder_seminorm(&uc, alpha)?.seminorm;
                table[k].push(s);
                w.write_record([cells.to_string(), fmt_f64(alpha), fmt_f64(s)])
                    .map_err(Error::from)?;
            }
        }
        w.flush().map_err(Error::from)?;
        for (alpha, row) in alphas.iter().zip(&table) {
            let increasing = row.windows(2).all(|p| p[1] > p[0]);
            out.line(format!("refinement alpha={} strictly_increasing={increasing}", fmt_f64(*alpha)));
        }
    }
    Ok(out)
}

pub fn apply(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let (op, interval) = operator_setup(cfg)?;
    let op = op.as_dyn();
    let u = required(&cfg.function, "function")?.sample(op.source(), interval, ctx.seed)?;
    let image = op.apply(&u)?;
    ctx.save("input.csv", &u)?;
    ctx.save("output.csv", &image)?;
    let mut out = Outcome::new();
    out.line(format!("operator: {}", op.name()));
    out.line(format!("input_sup={} output_sup={}", fmt_f64(u.sup_norm()), fmt_f64(image.sup_norm())));
    Ok(out)
}

pub fn derivative_check(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let (op, interval) = operator_setup(cfg)?;
    let op = op.as_dyn();
    let u = required(&cfg.function, "function")?.sample(op.source(), interval, ctx.seed)?;
    let v = required(&cfg.direction, "direction")?.sample(op.source(), interval, ctx.seed)?;
    let taylor = cfg.taylor.clone().unwrap_or_default();
    let epsilons = taylor.epsilons.unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]);
    let order = taylor.order.unwrap_or(1);
    let r = taylor_check(op, &u, &v, &epsilons, order)?;
    r.write_csv(ctx.create("taylor.csv")?)?;
    let mut out = Outcome::new();
    out.line(format!("operator: {}", op.name()));
    out.line(format!(
        "order={order} slope={} exact={} fallback={}",
        fmt_f64(r.fitted_slope),
        r.exact,
        r.used_fallback
    ));
    if let Some(s) = r.holder_slope {
        out.line(format!("holder_slope={}", fmt_f64(s)));
    }
    out.check("taylor remainder", r.pass);
    Ok(out)
}

impl OperatorSpec {
    /// The Urysohn kernel `f(x, y, z)` behind the configured operator.
    fn urysohn_kernel(&self) -> Result<KernelSpec, CliError> {
        let kernel = builtin_kernel(&self.kernel, &self.params)?;
        let growth = || -> Result<_, CliError> {
            let name = self
                .growth
                .as_deref()
                .ok_or_else(|| CliError::Input(format!("operator kind `{}` needs `growth`", self.kind)))?;
            Ok(builtin_kernel(name, &self.growth_params)?.into_growth()?)
        };
        Ok(match (self.kind.as_str(), kernel) {
            ("urysohn", BuiltinKernel::Urysohn(k)) => k,
            ("urysohn" | "hammerstein", BuiltinKernel::Dispersal(d)) => KernelSpec::hammerstein(&d.fredholm(), &growth()?)?,
            ("fredholm", BuiltinKernel::Dispersal(d)) => KernelSpec::hammerstein(&d.fredholm(), &identity(1))?,
            ("convolutive", BuiltinKernel::Dispersal(d)) => d.convolution().as_kernel_spec(),
            (kind, k) => {
                return Err(CliError::Input(format!(
                    "no integral kernel for operator kind `{kind}` with `{}`",
                    k.name()
                )))
            }
        })
    }
}

pub fn nystrom(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let spec = required(&cfg.nystrom, "nystrom")?;
    let kernel = required(&cfg.operator, "operator")?.urysohn_kernel()?;
    let f: &FunctionSpec = required(&cfg.function, "function")?;
    let (a, b) = cfg.interval()?;
    let target = DiscreteDomain::uniform_interval(a, b, spec.target_n.unwrap_or(41))?;
    // surface input errors before the study starts
    f.sample(&target, (a, b), ctx.seed)?;
    let seed = ctx.seed;
    let sampler = move |d: &Arc<DiscreteDomain>| {
        f.sample(d, (a, b), seed)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    };
    let scheme = match &spec.scheme {
        Some(s) => parse_scheme(s)?,
        None => Scheme::Trapezoid,
    };
    let beta = spec
        .beta
        .or(cfg.exponents.as_ref().and_then(|e| e.beta))
        .unwrap_or(0.5);
    let table = nystrom_convergence(&kernel, &sampler, (a, b), &target, scheme, &spec.ns, spec.reference_n, beta)?;
    table.write_csv(ctx.create("nystrom.csv")?)?;
    let mut out = Outcome::new();
    out.line(format!("kernel: {} scheme: {}", kernel.name(), scheme.name()));
    for r in &table.rows {
        out.line(format!(
            "N={} sup_error={} rate={}",
            r.n,
            fmt_f64(r.sup_error),
            r.rate.map(fmt_f64).unwrap_or_else(|| "-".into())
        ));
    }
    let tol = cfg.tolerances.clone().unwrap_or_default();
    let rates: Vec<f64> = table.rows.iter().filter_map(|r| r.rate).collect();
    if let Some(lo) = tol.rate_min {
        out.check(&format!("rates >= {}", fmt_f64(lo)), rates.iter().all(|r| *r >= lo));
    }
    if let Some(hi) = tol.rate_max {
        out.check(&format!("rates <= {}", fmt_f64(hi)), rates.iter().all(|r| *r <= hi));
    }
    if let Some(e) = tol.final_error {
        let last = table.rows.last().map(|r| r.sup_error).unwrap_or(f64::NAN);
        out.check(&format!("final sup_error <= {}", fmt_f64(e)), last <= e);
    }
    Ok(out)
}

pub fn ide(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let (op, interval) = operator_setup(cfg)?;
    let Operator::Hammerstein(op) = op else {
        return Err(CliError::Input("ide needs operator kind `hammerstein`".into()));
    };
    let spec = required(&cfg.ide, "ide")?;
    let u0 = required(&cfg.function, "function")?.sample(op.nemytskii().domain(), interval, ctx.seed)?;
    let record = iterate(&op, &u0, spec.steps, spec.alpha.unwrap_or(0.5))?;
    record.write_diagnostics_csv(ctx.create("orbit.csv")?)?;
    record.write_states_csv(ctx.create("orbit_states.csv")?)?;
    ctx.save("final.csv", record.last())?;
    let mut out = Outcome::new();
    out.line(format!("steps={} final_sup={}", record.steps(), fmt_f64(record.last().sup_norm())));
    if let Some(t) = record.overflow_at {
        out.line(format!("overflow at step {t}"));
    }
    Ok(out)
}

pub fn fixed_point(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let (op, interval) = operator_setup(cfg)?;
    let op = op.as_dyn();
    let u0 = required(&cfg.function, "function")?.sample(op.source(), interval, ctx.seed)?;
    let mut opts = NewtonOptions::default();
    if let Some(n) = &cfg.newton {
        opts.tol = n.tol.unwrap_or(opts.tol);
        opts.max_iter = n.max_iter.unwrap_or(opts.max_iter);
        opts.pre_iterations = n.pre_iterations.unwrap_or(opts.pre_iterations);
    }
    let report = newton_fixed_point(op, &u0, &opts)?;
    report.write_csv(ctx.create("newton.csv")?)?;
    ctx.save("fixed_point.csv", &report.u_star)?;
    let mut out = Outcome::new();
    out.line(format!("operator: {}", op.name()));
    out.line(format!(
        "iterations={} residual={} verified_residual={}",
        report.iterations,
        fmt_f64(*report.residual_history.last().expect("start residual")),
        fmt_f64(report.verified_residual)
    ));
    let pairs = report.quadratic_pairs();
    out.line(format!(
        "superlinear pairs: {}/{}",
        pairs.iter().filter(|p| p.2).count(),
        pairs.len()
    ));
    out.check(&format!("residual <= {}", fmt_f64(opts.tol)), report.converged);
    Ok(out)
}

pub fn verify_all(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let seed = ctx
        .seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::Input("verify-all needs a seed".into()))?;
    let v = cfg.verify.clone().unwrap_or_default();
    let defaults = BoundSuiteConfig::default();
    let (a, b) = (v.a.unwrap_or(defaults.interval.0), v.b.unwrap_or(defaults.interval.1));
    if !(a < b) {
        return Err(CliError::Input(format!("verify needs a < b, got [{a}, {b}]")));
    }
    let suite = BoundSuiteConfig {
        interval: (a, b),
        n: v.n.unwrap_or(defaults.n),
        tests: v.tests.unwrap_or(defaults.tests),
        pieces: v.pieces.unwrap_or(defaults.pieces),
        radius: v.radius.unwrap_or(defaults.radius),
        alpha: v.alpha.unwrap_or(defaults.alpha),
        seed,
    };
    let mut out = Outcome::new();

    let bounds = builtin_bound_suite(&suite)?;
    bounds.write_csv(ctx.create("bounds.csv")?)?;
    let failures = bounds.hard_failures(ctx.strict);
    for c in &failures {
        out.line(format!("bound failure: {} case {} lhs={} rhs={}", c.name, c.case, fmt_f64(c.lhs), fmt_f64(c.rhs)));
    }
    out.check(&format!("bound suite ({} checks)", bounds.checks.len()), failures.is_empty());

    let delta = v.smoothing_delta.unwrap_or((b - a) / 8.0);
    for name in ["gaussian_dispersal", "laplace_dispersal"] {
        let k = builtin_kernel(name, default_params(name))?.into_dispersal()?.convolution();
        let op = ConvolutiveOperator::new(k, a, b, v.smoothing_n.unwrap_or(201), Scheme::Trapezoid)?;
        let mut family: Vec<GridFunction> = (0..suite.tests as u64)
            .map(|i| random_piecewise_linear(op.measure().domain().clone(), seed.wrapping_add(i), suite.pieces, suite.radius))
            .collect();
        family.push(GridFunction::from_scalar_fn(op.measure().domain().clone(), |x| {
            suite.radius * (x - 0.5 * (a + b)).abs().sqrt() / (0.5 * (b - a)).sqrt()
        })?);
        let report = smoothing_suite(&op, &family, suite.alpha, delta)?;
        report.write_csv(ctx.create(&format!("smoothing_{name}.csv"))?)?;
        out.check(&format!("smoothing {name}"), report.passed(ctx.strict));
    }

    let levels = v.pathology_levels.clone().unwrap_or_else(|| PATHOLOGY_LEVELS.to_vec());
    let pathology = pathology_suite_with(&levels)?;
    pathology.write_csv(ctx.create("pathology.csv")?)?;
    out.check("pathology", pathology.passed());

    let domain = DiscreteDomain::uniform_interval(a, b, v.calculus_n.unwrap_or(201))?;
    let mut w = csv::Writer::from_writer(ctx.create("calculus.csv")?);
    w.write_record(["case", "alpha1", "alpha2", "rule", "lhs", "rhs", "holds"])
        .map_err(Error::from)?;
    let mut all = true;
    let sin = |z: f64| z.sin();
    for i in 0..suite.tests as u64 {
        let s = seed.wrapping_add(1000 + 2 * i);
        let u1 = random_piecewise_linear(domain.clone(), s, suite.pieces, suite.radius);
        let u2 = random_piecewise_linear(domain.clone(), s + 1, suite.pieces, suite.radius);
        for (a1, a2) in [(0.5, 0.5), (0.25, 0.75), (1.0, 0.5), (0.75, 1.0)] {
            // |sin s - sin t| <= min(2, |s - t|) <= 2^{1-a}|s - t|^a
            let outer = ScalarMap {
                map: &sin,
                holder_constant: 2f64.powf(1.0 - a2),
            };
            let r = calculus_rules_check(&u1, &u2, (a1, a2), (1.5, -0.5), &outer)?;
            all &= r.all_hold();
            let rows = [("sum", Some(&r.sum)), ("product", Some(&r.product)), ("chain", r.chain.as_ref())];
            for (rule, c) in rows {
                if let Some(c) = c {
                    w.write_record([
                        i.to_string(),
                        fmt_f64(a1),
                        fmt_f64(a2),
                        rule.to_string(),
                        fmt_f64(c.lhs),
                        fmt_f64(c.rhs),
                        c.holds.to_string(),
                    ])
                    .map_err(Error::from)?;
                }
            }
        }
    }
    w.flush().map_err(Error::from)?;
    out.check("calculus rules", all);
    Ok(out)
}
