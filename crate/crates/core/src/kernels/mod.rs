//! Kernel functions for every operator class.
//!
//! Kernels are evaluation callbacks with optional analytic derivatives.
//! Missing first derivatives fall back to central differences with step
//! `1e-6·(1+|z_j|)`, missing second derivatives to central differences of
//! the first derivative with step `1e-4·(1+|z_j|)`; every fallback is
//! reported to the caller.
//!
//! Callbacks must be pure and evaluatable on a neighbourhood of the
//! admissible set `Z`, since difference probes may leave it.

mod builtin;
mod caratheodory;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use builtin::{
    affine, beverton_holt, builtin_kernel, identity, logistic, ricker, separable_poly, BuiltinKernel, Dispersal,
    DispersalKind, BUILTIN_NAMES,
};
pub use caratheodory::{estimate_caratheodory_bounds, halton, CaratheodoryBounds};

/// `(x, y, z, out)`.
pub type KernelFn = Arc<dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `(x, y, out)`.
pub type MatrixFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `(x, z, out)`.
pub type GrowthFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `(w, z, out)`.
pub type ConvFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

pub const FD_STEP_1: f64 = 1e-6;
pub const FD_STEP_2: f64 = 1e-4;

/// Admissible set for kernel arguments. Boxes are convex.
#[derive(Debug, Clone, PartialEq)]
pub enum ZSet {
    All,
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ZSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        ZSet::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn nonnegative(n: usize) -> Self {
        ZSet::Box {
            lo: vec![0.0; n],
            hi: vec![f64::INFINITY; n],
        }
    }

    pub fn is_convex(&self) -> bool {
        true
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        match self {
            ZSet::All => true,
            ZSet::Box { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h),
        }
    }

    /// Euclidean distance from `z` to the set.
    pub fn distance(&self, z: &[f64]) -> f64 {
        match self {
            ZSet::All => 0.0,
            ZSet::Box { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| {
                    let e = (l - v).max(v - h).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Projects `z` onto the set; returns whether anything moved.
    pub fn clamp(&self, z: &mut [f64]) -> bool {
        match self {
            ZSet::All => false,
            ZSet::Box { lo, hi } => {
                let mut moved = false;
                for (v, (l, h)) in z.iter_mut().zip(lo.iter().zip(hi)) {
                    let c = v.clamp(*l, *h);
                    if c != *v {
                        *v = c;
                        moved = true;
                    }
                }
                moved
            }
        }
    }

    /// Coordinate range of `Z ∩ [-r, r]^n` along axis `j`.
    pub fn axis_range(&self, j: usize, r: f64) -> (f64, f64) {
        match self {
            ZSet::All => (-r, r),
            ZSet::Box { lo, hi } => (lo[j].max(-r), hi[j].min(r)),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            ZSet::All => Ok(()),
            ZSet::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "admissible box has {} bounds for state dimension {n}",
                        lo.len()
                    )));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidArgument("admissible box has lo > hi".into()));
                }
                Ok(())
            }
        }
    }
}

/// `|f(x,y,z) - f(x,y,z̄)| ≤ l_r(x,y)·|z - z̄|^θ` on `Z ∩ B̄_r(0)`.
#[derive(Clone)]
pub struct LipschitzBound {
    pub theta: f64,
    /// `(r, x, y) ↦ l_r(x, y)`.
    pub l: Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>,
}

/// `|f(x,y,z) - f(x̄,y,z)| ≤ h̄_r(y)·d(x,x̄)^β` on `Z ∩ B̄_r(0)`.
#[derive(Clone)]
pub struct ImageHolderBound {
    pub beta: f64,
    /// `(r, y) ↦ h̄_r(y)`.
    pub hbar: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
}

/// Analytic bound data registered with a Urysohn kernel.
#[derive(Clone, Default)]
pub struct UrysohnBounds {
    /// `(r, x, y) ↦ b_r^0(x, y) ≥ |f(x, y, z)|`.
    pub sup: Option<Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>>,
    pub lipschitz: Option<LipschitzBound>,
    pub image_holder: Option<ImageHolderBound>,
}

/// Urysohn kernel `f: Ω₁ × Ω × Z → R^d` with `Z ⊆ R^n`.
#[derive(Clone)]
pub struct KernelSpec {
    name: String,
    n: usize,
    d: usize,
    eval: KernelFn,
    d3: Option<KernelFn>,
    d33: Option<KernelFn>,
    z_set: ZSet,
    bounds: UrysohnBounds,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("d3", &self.d3.is_some())
            .field("d33", &self.d33.is_some())
            .field("z_set", &self.z_set)
            .finish()
    }
}

impl KernelSpec {
    pub fn new(name: impl Into<String>, n: usize, d: usize, eval: KernelFn) -> Self {
        Self {
            name: name.into(),
            n,
            d,
            eval,
            d3: None,
            d33: None,
            z_set: ZSet::All,
            bounds: UrysohnBounds::default(),
        }
    }

    /// Scalar kernel `f(x, y, z)` of the first coordinates.
    pub fn scalar<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, 1, Arc::new(move |x, y, z, out| out[0] = f(x[0], y[0], z[0])))
    }

    pub fn with_d3(mut self, d3: KernelFn) -> Self {
        self.d3 = Some(d3);
        self
    }

    pub fn with_d33(mut self, d33: KernelFn) -> Self {
        self.d33 = Some(d33);
        self
    }

    pub fn with_scalar_d3<F>(self, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.with_d3(Arc::new(move |x, y, z, out| out[0] = f(x[0], y[0], z[0])))
    }

    pub fn with_scalar_d33<F>(self, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.with_d33(Arc::new(move |x, y, z, out| out[0] = f(x[0], y[0], z[0])))
    }

    pub fn with_z_set(mut self, z_set: ZSet) -> Result<Self> {
        z_set.check_dim(self.n)?;
        self.z_set = z_set;
        Ok(self)
    }

    pub fn with_bounds(mut self, bounds: UrysohnBounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Output dimension `d`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn z_set(&self) -> &ZSet {
        &self.z_set
    }

    pub fn bounds(&self) -> &UrysohnBounds {
        &self.bounds
    }

    pub fn has_d3(&self) -> bool {
        self.d3.is_some()
    }

    pub fn has_d33(&self) -> bool {
        self.d33.is_some()
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        (self.eval)(x, y, z, out)
    }

    /// `D₃f(x,y,z)` as a row-major `d × n` matrix. Returns `true` when the
    /// difference fallback was used.
    pub fn d3(&self, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) -> bool {
        match &self.d3 {
            Some(f) => {
                f(x, y, z, out);
                false
            }
            None => {
                let eval = |z: &[f64], o: &mut [f64]| (self.eval)(x, y, z, o);
                central_difference(eval, z, self.d, FD_STEP_1, out);
                true
            }
        }
    }

    /// `D₃²f(x,y,z)` as a `d × n × n` array; `true` when a fallback was used.
    pub fn d33(&self, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) -> bool {
        match &self.d33 {
            Some(f) => {
                f(x, y, z, out);
                false
            }
            None => {
                let d3 = |z: &[f64], o: &mut [f64]| {
                    self.d3(x, y, z, o);
                };
                central_difference(d3, z, self.d * self.n, FD_STEP_2, out);
                true
            }
        }
    }

    /// Derivative of order `k ∈ {0,1,2}` with its size `d·n^k`.
    pub fn derivative(&self, k: usize, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) -> bool {
        match k {
            0 => {
                self.eval(x, y, z, out);
                false
            }
            1 => self.d3(x, y, z, out),
            _ => self.d33(x, y, z, out),
        }
    }

    /// Kernel `f(x,y,z) = k(x,y)·g(y,z)` of a Hammerstein operator.
    pub fn hammerstein(k: &FredholmKernel, g: &GrowthSpec) -> Result<Self> {
        if k.cols() != g.p() {
            return Err(Error::DimensionMismatch(format!(
                "Fredholm kernel takes {} components, growth map yields {}",
                k.cols(),
                g.p()
            )));
        }
        let (d, p, n) = (k.rows(), g.p(), g.n());
        let (k0, g0) = (k.clone(), g.clone());
        let eval: KernelFn = Arc::new(move |x, y, z, out| {
            let mut km = vec![0.0; d * p];
            let mut gv = vec![0.0; p];
            k0.eval(x, y, &mut km);
            g0.eval(y, z, &mut gv);
            matmul(&km, &gv, d, p, 1, out);
        });
        let mut spec = Self::new(format!("{}*{}", k.name(), g.name()), n, d, eval);
        if g.has_d2() {
            let (k1, g1) = (k.clone(), g.clone());
            spec = spec.with_d3(Arc::new(move |x, y, z, out| {
                let mut km = vec![0.0; d * p];
                let mut gm = vec![0.0; p * n];
                k1.eval(x, y, &mut km);
                g1.d2(y, z, &mut gm);
                matmul(&km, &gm, d, p, n, out);
            }));
        }
        if g.has_d22() {
            let (k2, g2) = (k.clone(), g.clone());
            spec = spec.with_d33(Arc::new(move |x, y, z, out| {
                let mut km = vec![0.0; d * p];
                let mut gt = vec![0.0; p * n * n];
                k2.eval(x, y, &mut km);
                g2.d22(y, z, &mut gt);
                matmul(&km, &gt, d, p, n * n, out);
            }));
        }
        let mut bounds = UrysohnBounds::default();
        if let Some(lg) = g.lipschitz_bound() {
            let k3 = k.clone();
            let lg = lg.clone();
            bounds.lipschitz = Some(LipschitzBound {
                theta: 1.0,
                l: Arc::new(move |r, x, y| k3.norm_at(x, y) * lg(r)),
            });
        }
        if let Some(sg) = g.sup_bound() {
            let k4 = k.clone();
            let sg4 = sg.clone();
            bounds.sup = Some(Arc::new(move |r, x, y| k4.norm_at(x, y) * sg4(r)));
            if let Some(lx) = k.lipschitz_x() {
                let sg5 = sg.clone();
                bounds.image_holder = Some(ImageHolderBound {
                    beta: 1.0,
                    hbar: Arc::new(move |r, _y| lx * sg5(r)),
                });
            }
        }
        spec.z_set = g.z_set().clone();
        Ok(spec.with_bounds(bounds))
    }
}

/// Central differences of `f: R^n → R^m` at `z`, written as an `m × n`
/// row-major matrix.
pub(crate) fn central_difference<F>(f: F, z: &[f64], m: usize, step: f64, out: &mut [f64])
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = z.len();
    let mut zp = z.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for j in 0..n {
        let h = step * (1.0 + z[j].abs());
        zp[j] = z[j] + h;
        f(&zp, &mut fp);
        zp[j] = z[j] - h;
        f(&zp, &mut fm);
        zp[j] = z[j];
        for i in 0..m {
            out[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

/// `C = A·B` with `A: r×k`, `B: k×c`, all row-major.
pub(crate) fn matmul(a: &[f64], b: &[f64], r: usize, k: usize, c: usize, out: &mut [f64]) {
    for i in 0..r {
        for j in 0..c {
            let mut s = 0.0;
            for l in 0..k {
                s += a[i * k + l] * b[l * c + j];
            }
            out[i * c + j] = s;
        }
    }
}

/// Matrix-valued kernel `k: Ω₁ × Ω → R^{d×p}` of a Fredholm operator.
#[derive(Clone)]
pub struct FredholmKernel {
    name: String,
    rows: usize,
    cols: usize,
    eval: MatrixFn,
    lipschitz_x: Option<f64>,
}

impl fmt::Debug for FredholmKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FredholmKernel")
            .field("name", &self.name)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl FredholmKernel {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, eval: MatrixFn) -> Self {
        Self {
            name: name.into(),
            rows,
            cols,
            eval,
            lipschitz_x: None,
        }
    }

    pub fn scalar<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, 1, Arc::new(move |x, y, out| out[0] = f(x[0], y[0])))
    }

    /// Registers `L` with `|k(x,y) - k(x̄,y)| ≤ L·d(x,x̄)`.
    pub fn with_lipschitz_x(mut self, l: f64) -> Self {
        self.lipschitz_x = Some(l);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn lipschitz_x(&self) -> Option<f64> {
        self.lipschitz_x
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.eval)(x, y, out)
    }

    /// Induced Euclidean norm `|k(x, y)|`.
    pub fn norm_at(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut m = vec![0.0; self.rows * self.cols];
        self.eval(x, y, &mut m);
        crate::linalg::induced_norm(&m, self.rows, self.cols)
    }
}

/// Growth map `g: Ω × Z → R^p` generating a Nemytskii operator.
#[derive(Clone)]
pub struct GrowthSpec {
    name: String,
    n: usize,
    p: usize,
    eval: GrowthFn,
    d2: Option<GrowthFn>,
    d22: Option<GrowthFn>,
    z_set: ZSet,
    lipschitz: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    sup: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    autonomous: bool,
}

impl fmt::Debug for GrowthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("p", &self.p)
            .field("d2", &self.d2.is_some())
            .field("d22", &self.d22.is_some())
            .field("z_set", &self.z_set)
            .finish()
    }
}

impl GrowthSpec {
    pub fn new(name: impl Into<String>, n: usize, p: usize, eval: GrowthFn) -> Self {
        Self {
            name: name.into(),
            n,
            p,
            eval,
            d2: None,
            d22: None,
            z_set: ZSet::All,
            lipschitz: None,
            sup: None,
            autonomous: false,
        }
    }

    /// Scalar map `z ↦ g(z)` independent of the position.
    pub fn scalar<F>(name: impl Into<String>, g: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, 1, Arc::new(move |_, z, out| out[0] = g(z[0]))).autonomous()
    }

    /// Declares that `g` does not depend on the position `x`.
    pub fn autonomous(mut self) -> Self {
        self.autonomous = true;
        self
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn with_d2(mut self, d2: GrowthFn) -> Self {
        self.d2 = Some(d2);
        self
    }

    pub fn with_d22(mut self, d22: GrowthFn) -> Self {
        self.d22 = Some(d22);
        self
    }

    pub fn with_scalar_derivatives<F, G>(self, d: F, dd: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.with_d2(Arc::new(move |_, z, out| out[0] = d(z[0])))
            .with_d22(Arc::new(move |_, z, out| out[0] = dd(z[0])))
    }

    pub fn with_z_set(mut self, z_set: ZSet) -> Result<Self> {
        z_set.check_dim(self.n)?;
        self.z_set = z_set;
        Ok(self)
    }

    /// Registers `r ↦ l'_r` with `|g(x,z) - g(x,z̄)| ≤ l'_r·|z - z̄|` on
    /// `Z ∩ B̄_r(0)`.
    pub fn with_lipschitz<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, l: F) -> Self {
        self.lipschitz = Some(Arc::new(l));
        self
    }

    /// Registers `r ↦ sup{|g(x,z)| : z ∈ Z ∩ B̄_r(0)}` (or an upper bound).
    pub fn with_sup<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, s: F) -> Self {
        self.sup = Some(Arc::new(s));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn z_set(&self) -> &ZSet {
        &self.z_set
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    pub fn has_d22(&self) -> bool {
        self.d22.is_some()
    }

    pub fn lipschitz_bound(&self) -> Option<&Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
        self.lipschitz.as_ref()
    }

    pub fn sup_bound(&self) -> Option<&Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
        self.sup.as_ref()
    }

    #[inline]
    pub fn eval(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        (self.eval)(x, z, out)
    }

    /// `D₂g(x,z)` as `p × n`; `true` when the fallback was used.
    pub fn d2(&self, x: &[f64], z: &[f64], out: &mut [f64]) -> bool {
        match &self.d2 {
            Some(f) => {
                f(x, z, out);
                false
            }
            None => {
                central_difference(|z, o| (self.eval)(x, z, o), z, self.p, FD_STEP_1, out);
                true
            }
        }
    }

    /// `D₂²g(x,z)` as `p × n × n`; `true` when a fallback was used.
    pub fn d22(&self, x: &[f64], z: &[f64], out: &mut [f64]) -> bool {
        match &self.d22 {
            Some(f) => {
                f(x, z, out);
                false
            }
            None => {
                let d2 = |z: &[f64], o: &mut [f64]| {
                    self.d2(x, z, o);
                };
                central_difference(d2, z, self.p * self.n, FD_STEP_2, out);
                true
            }
        }
    }
}

/// Convolution kernel `f̃: [a-b, b-a] × Z → R^d`.
#[derive(Clone)]
pub struct ConvolutionKernel {
    name: String,
    n: usize,
    d: usize,
    eval: ConvFn,
    d1: Option<ConvFn>,
    d2: Option<ConvFn>,
    z_set: ZSet,
    ltilde: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
    smoothing: Option<Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for ConvolutionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvolutionKernel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("d1", &self.d1.is_some())
            .field("d2", &self.d2.is_some())
            .finish()
    }
}

impl ConvolutionKernel {
    pub fn new(name: impl Into<String>, n: usize, d: usize, eval: ConvFn) -> Self {
        Self {
            name: name.into(),
            n,
            d,
            eval,
            d1: None,
            d2: None,
            z_set: ZSet::All,
            ltilde: None,
            smoothing: None,
        }
    }

    pub fn scalar<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, 1, Arc::new(move |w, z, out| out[0] = f(w, z[0])))
    }

    /// `D₁f̃(w, z)`, a vector in `R^d`.
    pub fn with_d1(mut self, d1: ConvFn) -> Self {
        self.d1 = Some(d1);
        self
    }

    /// `D₂f̃(w, z)` as a `d × n` matrix.
    pub fn with_d2(mut self, d2: ConvFn) -> Self {
        self.d2 = Some(d2);
        self
    }

    pub fn with_scalar_d1<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(self, f: F) -> Self {
        self.with_d1(Arc::new(move |w, z, out| out[0] = f(w, z[0])))
    }

    pub fn with_scalar_d2<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(self, f: F) -> Self {
        self.with_d2(Arc::new(move |w, z, out| out[0] = f(w, z[0])))
    }

    pub fn with_z_set(mut self, z_set: ZSet) -> Result<Self> {
        z_set.check_dim(self.n)?;
        self.z_set = z_set;
        Ok(self)
    }

    /// Registers `(w, r) ↦ l̃_r(w)` with `|f̃(w,z) - f̃(w,z̄)| ≤ l̃_r(w)|z - z̄|`.
    pub fn with_ltilde<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(mut self, f: F) -> Self {
        self.ltilde = Some(Arc::new(f));
        self
    }

    /// Registers `(α, r, L) ↦ C` with `∫_x^{x̄} b̃_r^0 ≤ C(x̄-x)^α` for all
    /// `-L ≤ x ≤ x̄ ≤ L`.
    pub fn with_smoothing_constant<F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static>(
        mut self,
        f: F,
    ) -> Self {
        self.smoothing = Some(Arc::new(f));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn z_set(&self) -> &ZSet {
        &self.z_set
    }

    pub fn has_d1(&self) -> bool {
        self.d1.is_some()
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    pub fn ltilde(&self) -> Option<&Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>> {
        self.ltilde.as_ref()
    }

    pub fn smoothing_constant(&self) -> Option<&Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>> {
        self.smoothing.as_ref()
    }

    #[inline]
    pub fn eval(&self, w: f64, z: &[f64], out: &mut [f64]) {
        (self.eval)(w, z, out)
    }

    /// `D₁f̃`; `true` when the difference fallback was used.
    pub fn d1(&self, w: f64, z: &[f64], out: &mut [f64]) -> bool {
        match &self.d1 {
            Some(f) => {
                f(w, z, out);
                false
            }
            None => {
                let f = |wv: &[f64], o: &mut [f64]| (self.eval)(wv[0], z, o);
                central_difference(f, &[w], self.d, FD_STEP_1, out);
                true
            }
        }
    }

    /// `D₂f̃` as `d × n`; `true` when the difference fallback was used.
    pub fn d2(&self, w: f64, z: &[f64], out: &mut [f64]) -> bool {
        match &self.d2 {
            Some(f) => {
                f(w, z, out);
                false
            }
            None => {
                central_difference(|z, o| (self.eval)(w, z, o), z, self.d, FD_STEP_1, out);
                true
            }
        }
    }

    /// The equivalent Urysohn kernel `f(x, y, z) = f̃(x - y, z)`.
    pub fn as_kernel_spec(&self) -> KernelSpec {
        let me = self.clone();
        let eval: KernelFn = Arc::new(move |x, y, z, out| me.eval(x[0] - y[0], z, out));
        let mut spec = KernelSpec::new(self.name.clone(), self.n, self.d, eval);
        if self.d2.is_some() {
            let me = self.clone();
            spec = spec.with_d3(Arc::new(move |x, y, z, out| {
                me.d2(x[0] - y[0], z, out);
            }));
        }
        spec.z_set = self.z_set.clone();
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zset_clamp_and_distance() {
        let z = ZSet::interval(0.0, 1.0);
        let mut v = [1.5];
        assert!((z.distance(&v) - 0.5).abs() < 1e-15);
        assert!(z.clamp(&mut v));
        assert_eq!(v, [1.0]);
        assert!(!z.clamp(&mut v));
        assert!(z.contains(&v));
        assert!(ZSet::All.contains(&[f64::MAX]));
    }

    #[test]
    fn fallback_matches_analytic_derivative() {
        let analytic = KernelSpec::scalar("sinxz2", |x, _y, z| x.sin() * z * z)
            .with_scalar_d3(|x, _y, z| 2.0 * x.sin() * z)
            .with_scalar_d33(|x, _y, _z| 2.0 * x.sin());
        let coded = KernelSpec::scalar("sinxz2", |x, _y, z| x.sin() * z * z);
        let (x, y, z) = ([0.7], [0.1], [1.3]);
        let (mut a, mut b) = ([0.0], [0.0]);
        assert!(!analytic.d3(&x, &y, &z, &mut a));
        assert!(coded.d3(&x, &y, &z, &mut b));
        assert!((a[0] - b[0]).abs() <= 1e-8 * a[0].abs());
        assert!(!analytic.d33(&x, &y, &z, &mut a));
        assert!(coded.d33(&x, &y, &z, &mut b));
        assert!((a[0] - b[0]).abs() <= 1e-5 * a[0].abs());
    }

    #[test]
    fn vector_kernel_difference_shape() {
        // f(z) = (z0*z1, z0 + 2 z1), D f = [[z1, z0], [1, 2]]
        let f = KernelSpec::new(
            "vec",
            2,
            2,
            Arc::new(|_, _, z, out| {
                out[0] = z[0] * z[1];
                out[1] = z[0] + 2.0 * z[1];
            }),
        );
        let mut m = [0.0; 4];
        f.d3(&[0.0], &[0.0], &[3.0, 5.0], &mut m);
        let expect = [5.0, 3.0, 1.0, 2.0];
        for (a, b) in m.iter().zip(expect) {
            assert!((a - b).abs() < 1e-8);
        }
        let mut t = [0.0; 8];
        f.d33(&[0.0], &[0.0], &[3.0, 5.0], &mut t);
        // second derivative of z0*z1 is [[0,1],[1,0]]
        let expect = [0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hammerstein_kernel_factorizes() {
        let k = FredholmKernel::scalar("xy", |x, y| x * y);
        let g = GrowthSpec::scalar("sq", |z| z * z).with_scalar_derivatives(|z| 2.0 * z, |_| 2.0);
        let f = KernelSpec::hammerstein(&k, &g).unwrap();
        let mut o = [0.0];
        f.eval(&[2.0], &[3.0], &[0.5], &mut o);
        assert_eq!(o[0], 6.0 * 0.25);
        f.d3(&[2.0], &[3.0], &[0.5], &mut o);
        assert_eq!(o[0], 6.0);
        assert!(f.has_d33());
        let wide = GrowthSpec::new("two", 1, 2, Arc::new(|_, z, o| o.fill(z[0])));
        assert!(KernelSpec::hammerstein(&k, &wide).is_err());
    }

    #[test]
    fn box_dimension_is_checked() {
        let f = KernelSpec::scalar("z", |_, _, z| z);
        assert!(f.clone().with_z_set(ZSet::nonnegative(2)).is_err());
        assert!(f.with_z_set(ZSet::interval(1.0, 0.0)).is_err());
    }
}
