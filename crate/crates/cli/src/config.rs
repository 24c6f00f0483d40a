//! Strict TOML experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use urysohn_core::kernels::{builtin_kernel, BuiltinKernel, GrowthSpec, KernelSpec};
use urysohn_core::verification::generators::{generate_on, is_random};
use urysohn_core::{
    ConvolutiveOperator, DiscreteDomain, FredholmOperator, GridFunction, HammersteinOperator, NemytskiiOperator,
    QuadratureMeasure, Scheme, UrysohnOperator,
};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub domain: Option<DomainSpec>,
    pub rule: Option<RuleSpec>,
    pub operator: Option<OperatorSpec>,
    pub function: Option<FunctionSpec>,
    pub direction: Option<FunctionSpec>,
    pub exponents: Option<ExponentSpec>,
    pub holder: Option<HolderSpec>,
    pub taylor: Option<TaylorSpec>,
    pub nystrom: Option<NystromSpec>,
    pub ide: Option<IdeSpec>,
    pub newton: Option<NewtonSpec>,
    pub verify: Option<VerifySpec>,
    pub tolerances: Option<Tolerances>,
    pub output: Option<OutputSpec>,
}

/// Either `a`, `b`, `n` (uniform grid) or a CSV point cloud.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<usize>,
    pub points: Option<PathBuf>,
}

/// A composite rule on the domain interval, or nodes and weights from CSV.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub scheme: Option<String>,
    pub n: Option<usize>,
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub kind: String,
    pub kernel: String,
    #[serde(default)]
    pub params: Vec<f64>,
    pub growth: Option<String>,
    #[serde(default)]
    pub growth_params: Vec<f64>,
    pub clamp_tolerance: Option<f64>,
    pub target_exponent: Option<f64>,
}

/// A builtin generator or a GridFunction CSV.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub generator: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    pub seed: Option<u64>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    /// Cell counts of successive cell-centred grids on `[a, b]`.
    pub refinement: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaylorSpec {
    pub epsilons: Option<Vec<f64>>,
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NystromSpec {
    pub ns: Vec<usize>,
    pub reference_n: usize,
    pub scheme: Option<String>,
    pub target_n: Option<usize>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdeSpec {
    pub steps: usize,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSpec {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub pre_iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<usize>,
    pub tests: Option<usize>,
    pub pieces: Option<usize>,
    pub radius: Option<f64>,
    pub alpha: Option<f64>,
    pub smoothing_n: Option<usize>,
    pub smoothing_delta: Option<f64>,
    pub pathology_levels: Option<Vec<usize>>,
    pub calculus_n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rate_min: Option<f64>,
    pub rate_max: Option<f64>,
    pub final_error: Option<f64>,
    pub holder_bound: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| input(format!("missing [{name}] section")))
}

impl ExperimentConfig {
    /// Reads and parses a config file; relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&q);
                }
            }
        };
        if let Some(d) = cfg.domain.as_mut() {
            fix(&mut d.points);
        }
        if let Some(r) = cfg.rule.as_mut() {
            fix(&mut r.weights);
        }
        for f in [cfg.function.as_mut(), cfg.direction.as_mut()].into_iter().flatten() {
            fix(&mut f.csv);
        }
        if let Some(o) = cfg.output.as_mut() {
            fix(&mut o.dir);
        }
        Ok(cfg)
    }

    pub fn interval(&self) -> Result<(f64, f64), CliError> {
        let d = require(&self.domain, "domain")?;
        match (d.a, d.b) {
            (Some(a), Some(b)) if a < b => Ok((a, b)),
            (Some(a), Some(b)) => Err(input(format!("domain needs a < b, got [{a}, {b}]"))),
            _ => Err(input("domain needs `a` and `b`")),
        }
    }

    /// Sampling domain for functions that are not operator arguments.
    pub fn domain(&self) -> Result<Arc<DiscreteDomain>, CliError> {
        let d = require(&self.domain, "domain")?;
        if let Some(path) = &d.points {
            if d.a.is_some() || d.b.is_some() || d.n.is_some() {
                return Err(input("domain takes either `points` or `a`, `b`, `n`"));
            }
            let u = GridFunction::load_csv(path)?;
            return Ok(u.domain().clone());
        }
        let (a, b) = self.interval()?;
        let n = d.n.ok_or_else(|| input("domain needs `n`"))?;
        Ok(DiscreteDomain::uniform_interval(a, b, n)?)
    }

    pub fn measure(&self) -> Result<QuadratureMeasure, CliError> {
        let r = require(&self.rule, "rule")?;
        if let Some(path) = &r.weights {
            if r.scheme.is_some() || r.n.is_some() {
                return Err(input("rule takes either `weights` or `scheme`, `n`"));
            }
            let file = fs::File::open(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            return Ok(QuadratureMeasure::read_csv(file)?);
        }
        let (a, b) = self.interval()?;
        let scheme = parse_scheme(r.scheme.as_deref().unwrap_or("trapezoid"))?;
        let n = r
            .n
            .or(self.domain.as_ref().and_then(|d| d.n))
            .ok_or_else(|| input("rule needs `n`"))?;
        Ok(QuadratureMeasure::lebesgue_rule(a, b, n, scheme)?)
    }

    pub fn alphas(&self) -> Result<Vec<f64>, CliError> {
        let alphas = self
            .exponents
            .as_ref()
            .and_then(|e| e.alpha.clone())
            .ok_or_else(|| input("missing `exponents.alpha`"))?;
        if alphas.is_empty() {
            return Err(input("`exponents.alpha` is empty"));
        }
        Ok(alphas)
    }
}

pub fn parse_scheme(name: &str) -> Result<Scheme, CliError> {
    name.parse().map_err(|e: urysohn_core::Error| input(e.to_string()))
}

impl FunctionSpec {
    /// Samples the function on `domain`. Random generators draw their
    /// breakpoints from `range` and need a seed.
    pub fn sample(
        &self,
        domain: &Arc<DiscreteDomain>,
        range: (f64, f64),
        seed: Option<u64>,
    ) -> Result<GridFunction, CliError> {
        match (&self.generator, &self.csv) {
            (Some(name), None) => {
                let seed = self.seed.or(seed);
                if is_random(name) && seed.is_none() {
                    return Err(input(format!("generator `{name}` needs a seed")));
                }
                Ok(generate_on(name, domain.clone(), range, seed.unwrap_or(0), &self.params)?)
            }
            (None, Some(path)) => {
                let u = GridFunction::load_csv(path)?;
                Ok(urysohn_core::restrict(&u, domain)?)
            }
            _ => Err(input("a function takes exactly one of `generator` and `csv`")),
        }
    }
}

/// An operator assembled from the config.
pub enum Operator {
    Urysohn(UrysohnOperator),
    Fredholm(FredholmOperator),
    Nemytskii(NemytskiiOperator),
    Hammerstein(HammersteinOperator),
    Convolutive(ConvolutiveOperator),
}

impl Operator {
    pub fn as_dyn(&self) -> &dyn urysohn_core::DifferentiableOperator {
        match self {
            Operator::Urysohn(o) => o,
            Operator::Fredholm(o) => o,
            Operator::Nemytskii(o) => o,
            Operator::Hammerstein(o) => o,
            Operator::Convolutive(o) => o,
        }
    }

}

impl OperatorSpec {
    fn growth(&self) -> Result<GrowthSpec, CliError> {
        let name = self
            .growth
            .as_deref()
            .ok_or_else(|| input(format!("operator kind `{}` needs `growth`", self.kind)))?;
        Ok(builtin_kernel(name, &self.growth_params)?.into_growth()?)
    }

    pub fn build(&self, mu: &QuadratureMeasure, interval: (f64, f64)) -> Result<Operator, CliError> {
        let kernel = builtin_kernel(&self.kernel, &self.params)?;
        let tol = self.clamp_tolerance;
        let op = match self.kind.as_str() {
            "urysohn" => {
                let spec = match (kernel, &self.growth) {
                    (BuiltinKernel::Urysohn(k), None) => k,
                    (BuiltinKernel::Dispersal(d), Some(_)) => KernelSpec::hammerstein(&d.fredholm(), &self.growth()?)?,
                    _ => {
                        return Err(input(
                            "urysohn operators take `separable_poly` or a dispersal kernel with `growth`",
                        ))
                    }
                };
                let mut op = UrysohnOperator::on_rule(spec, mu.clone());
                if let Some(t) = tol {
                    op = op.with_clamp_tolerance(t);
                }
                if let Some(b) = self.target_exponent {
                    op = op.with_target_exponent(b);
                }
                Operator::Urysohn(op)
            }
            "fredholm" => {
                let mut op = FredholmOperator::on_rule(kernel.into_dispersal()?.fredholm(), mu.clone())?;
                if let Some(b) = self.target_exponent {
                    op = op.with_target_exponent(b);
                }
                Operator::Fredholm(op)
            }
            "nemytskii" => {
                let mut op = NemytskiiOperator::new(kernel.into_growth()?, mu.domain().clone());
                if let Some(t) = tol {
                    op = op.with_clamp_tolerance(t);
                }
                if let Some(b) = self.target_exponent {
                    op = op.with_target_exponent(b);
                }
                Operator::Nemytskii(op)
            }
            "hammerstein" => {
                let f = FredholmOperator::on_rule(kernel.into_dispersal()?.fredholm(), mu.clone())?;
                let mut g = NemytskiiOperator::new(self.growth()?, mu.domain().clone());
                if let Some(t) = tol {
                    g = g.with_clamp_tolerance(t);
                }
                let mut op = HammersteinOperator::new(f, g)?;
                if let Some(b) = self.target_exponent {
                    op = op.with_target_exponent(b);
                }
                Operator::Hammerstein(op)
            }
            "convolutive" => {
                let k = kernel.into_dispersal()?.convolution();
                Operator::Convolutive(ConvolutiveOperator::with_measure(k, mu.clone(), interval.0, interval.1)?)
            }
            other => {
                return Err(input(format!(
                    "unknown operator kind `{other}` (urysohn, fredholm, nemytskii, hammerstein, convolutive)"
                )))
            }
        };
        Ok(op)
    }
}
