//! Discretized integral operators and their Fréchet derivatives.
//!
//! First derivatives are assembled as dense `(|Ω₁|·d) × (|Ω|·n)` matrices
//! (or per-point blocks for pointwise operators). Second derivatives are
//! only ever needed along coincident source points, so they are stored as
//! one `d × n × n` block per `(x, y)` pair and applied matrix-free.

mod convolutive;
mod fredholm;
mod hammerstein;
mod nemytskii;
mod urysohn;

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::{fmt_f64, DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::ZSet;
use crate::sum::CompensatedSum;

pub use convolutive::{ConvolutiveOperator, Sign};
pub use fredholm::FredholmOperator;
pub use hammerstein::HammersteinOperator;
pub use nemytskii::NemytskiiOperator;
pub use urysohn::UrysohnOperator;

/// Operator with Fréchet derivatives of order 1 and (possibly) 2.
pub trait DifferentiableOperator: Sync {
    fn name(&self) -> String;

    fn source(&self) -> &Arc<DiscreteDomain>;

    fn target(&self) -> &Arc<DiscreteDomain>;

    /// State dimension `n` of the arguments.
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    fn apply(&self, u: &GridFunction) -> Result<GridFunction>;

    fn derivative(&self, u: &GridFunction, order: usize) -> Result<DerivativeOperator>;

    /// Highest derivative order available without difference fallbacks.
    fn analytic_order(&self) -> usize;

    fn is_linear(&self) -> bool {
        false
    }

    /// Exponent `β` of the target Hölder space, if declared.
    fn target_exponent(&self) -> Option<f64> {
        None
    }

    /// Admissible set of argument values.
    fn z_set(&self) -> &ZSet;
}

/// Counts projections onto `Z` and rejects values farther away than a
/// tolerance.
#[derive(Debug)]
pub struct ClampAudit {
    tolerance: f64,
    count: AtomicUsize,
}

impl Clone for ClampAudit {
    fn clone(&self) -> Self {
        Self {
            tolerance: self.tolerance,
            count: AtomicUsize::new(self.count()),
        }
    }
}

impl Default for ClampAudit {
    fn default() -> Self {
        Self {
            tolerance: f64::INFINITY,
            count: AtomicUsize::new(0),
        }
    }
}

impl ClampAudit {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            count: AtomicUsize::new(0),
        }
    }

    /// Total number of clamped values since construction.
    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Values of `u` projected onto `z_set`, and the number of projections.
    pub fn admit(&self, z_set: &ZSet, u: &GridFunction) -> Result<(Vec<f64>, usize)> {
        let mut values = u.values().to_vec();
        if matches!(z_set, ZSet::All) {
            return Ok((values, 0));
        }
        let mut clamped = 0;
        for (index, z) in values.chunks_mut(u.dim()).enumerate() {
            let distance = z_set.distance(z);
            if distance > self.tolerance {
                return Err(Error::OutsideAdmissibleSet { index, distance });
            }
            if z_set.clamp(z) {
                clamped += 1;
            }
        }
        self.count.fetch_add(clamped, Ordering::Relaxed);
        Ok((values, clamped))
    }
}

pub(crate) fn check_argument(
    u: &GridFunction,
    domain: &Arc<DiscreteDomain>,
    n: usize,
) -> Result<()> {
    if !domain.same_as(u.domain()) {
        return Err(Error::DomainMismatch(
            "argument is not sampled on the source domain".into(),
        ));
    }
    if u.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "argument has {} components, operator expects {n}",
            u.dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Tensor {
    /// Row-major `(nt·d) × (ns·n)`.
    Dense(Vec<f64>),
    /// One `d × n` block per point (`nt == ns`).
    Blocks(Vec<f64>),
    /// One `d × n × n` block per `(x, y)`, weight included.
    Coincident(Vec<f64>),
    /// One `d × n × n` block per point.
    Blocks2(Vec<f64>),
    /// Dense `(nt·d) × (ns·p)` matrix after `p × n × n` point blocks.
    Composed2 {
        matrix: Vec<f64>,
        p: usize,
        blocks: Vec<f64>,
    },
    /// Identically zero multilinear map.
    Zero,
}

/// Assembled `k`-linear map representing the `k`-th derivative at a base
/// point.
#[derive(Debug, Clone)]
pub struct DerivativeOperator {
    order: usize,
    base_point: GridFunction,
    target: Arc<DiscreteDomain>,
    d: usize,
    n: usize,
    tensor: Tensor,
    fallback: bool,
}

impl DerivativeOperator {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_point(&self) -> &GridFunction {
        &self.base_point
    }

    /// True when a kernel derivative came from the difference fallback.
    pub fn used_fallback(&self) -> bool {
        self.fallback
    }

    pub fn rows(&self) -> usize {
        self.target.len() * self.d
    }

    pub fn cols(&self) -> usize {
        self.base_point.len() * self.n
    }

    /// Dense matrix of a first derivative, row-major.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let (rows, cols) = (self.rows(), self.cols());
        match &self.tensor {
            Tensor::Dense(m) => Ok(m.clone()),
            Tensor::Blocks(b) => {
                let (d, n) = (self.d, self.n);
                let mut m = vec![0.0; rows * cols];
                for x in 0..self.target.len() {
                    for i in 0..d {
                        for j in 0..n {
                            m[(x * d + i) * cols + x * n + j] = b[(x * d + i) * n + j];
                        }
                    }
                }
                Ok(m)
            }
            _ => Err(Error::InvalidArgument(
                "only first derivatives have a matrix form".into(),
            )),
        }
    }

    /// Per-point `d × n` blocks of a pointwise first derivative.
    pub fn blocks(&self) -> Option<&[f64]> {
        match &self.tensor {
            Tensor::Blocks(b) => Some(b),
            _ => None,
        }
    }

    /// Second-derivative block at `(x, y)`; only for integral operators.
    pub fn coincident_block(&self, x: usize, y: usize) -> Option<&[f64]> {
        match &self.tensor {
            Tensor::Coincident(t) => {
                let size = self.d * self.n * self.n;
                let start = (x * self.base_point.len() + y) * size;
                Some(&t[start..start + size])
            }
            _ => None,
        }
    }

    /// `D^k(u)[v₁, …, v_k]`.
    pub fn apply(&self, vs: &[&GridFunction]) -> Result<GridFunction> {
        if vs.len() != self.order {
            return Err(Error::InvalidArgument(format!(
                "derivative of order {} needs {} directions, got {}",
                self.order,
                self.order,
                vs.len()
            )));
        }
        for v in vs {
            check_argument(v, self.base_point.domain(), self.n)?;
        }
        let (d, n) = (self.d, self.n);
        let nt = self.target.len();
        let ns = self.base_point.len();
        let mut out = vec![0.0; nt * d];
        match &self.tensor {
            Tensor::Zero => {}
            Tensor::Dense(m) => {
                let v = vs[0].values();
                let cols = ns * n;
                out.par_iter_mut().enumerate().for_each(|(row, o)| {
                    let mut acc = CompensatedSum::new();
                    for (a, b) in m[row * cols..(row + 1) * cols].iter().zip(v) {
                        acc.add(a * b);
                    }
                    *o = acc.value();
                });
            }
            Tensor::Blocks(b) => {
                for x in 0..nt {
                    let v = vs[0].value(x);
                    for i in 0..d {
                        out[x * d + i] = (0..n).map(|j| b[(x * d + i) * n + j] * v[j]).sum();
                    }
                }
            }
            Tensor::Blocks2(t) => {
                for x in 0..nt {
                    let (v1, v2) = (vs[0].value(x), vs[1].value(x));
                    for i in 0..d {
                        out[x * d + i] = bilinear(&t[(x * d + i) * n * n..], v1, v2);
                    }
                }
            }
            Tensor::Coincident(t) => {
                let size = d * n * n;
                out.par_chunks_mut(d).enumerate().for_each(|(x, o)| {
                    for (i, oi) in o.iter_mut().enumerate() {
                        let mut acc = CompensatedSum::new();
                        for y in 0..ns {
                            let block = &t[(x * ns + y) * size + i * n * n..];
                            acc.add(bilinear(block, vs[0].value(y), vs[1].value(y)));
                        }
                        *oi = acc.value();
                    }
                });
            }
            Tensor::Composed2 { matrix, p, blocks } => {
                let p = *p;
                let mut inner = vec![0.0; ns * p];
                for y in 0..ns {
                    for l in 0..p {
                        inner[y * p + l] =
                            bilinear(&blocks[(y * p + l) * n * n..], vs[0].value(y), vs[1].value(y));
                    }
                }
                let cols = ns * p;
                out.par_iter_mut().enumerate().for_each(|(row, o)| {
                    let mut acc = CompensatedSum::new();
                    for (a, b) in matrix[row * cols..(row + 1) * cols].iter().zip(&inner) {
                        acc.add(a * b);
                    }
                    *o = acc.value();
                });
            }
        }
        GridFunction::new(self.target.clone(), d, out)
    }

    /// Dense CSV: a `rows,cols` header, the shape, then the matrix rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let m = self.to_dense()?;
        let (rows, cols) = (self.rows(), self.cols());
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        w.write_record(["rows", "cols"])?;
        w.write_record([rows.to_string(), cols.to_string()])?;
        for r in 0..rows {
            w.write_record(m[r * cols..(r + 1) * cols].iter().map(|v| fmt_f64(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Σ_{j,l} t[j·n + l]·a_j·b_l`.
#[inline]
fn bilinear(t: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for j in 0..n {
        for l in 0..n {
            s += t[j * n + l] * a[j] * b[l];
        }
    }
    s
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > 2 {
        return Err(Error::MissingDerivative(order));
    }
    Ok(())
}
