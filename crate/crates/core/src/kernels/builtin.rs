//! Built-in dispersal kernels, growth maps and Urysohn kernels.
//!
//! Growth maps and their derivatives:
//!
//! | name | `g(z)` | `g'(z)` | `g''(z)` | `Z` |
//! |---|---|---|---|---|
//! | `beverton_holt(r,K)` | `rz/(1+z/K)` | `r/(1+z/K)²` | `-2r/(K(1+z/K)³)` | `[0,∞)` |
//! | `ricker(r)` | `z e^{r(1-z)}` | `e^{r(1-z)}(1-rz)` | `-r e^{r(1-z)}(2-rz)` | `[0,∞)` |
//! | `logistic(r)` | `rz(1-z)` | `r(1-2z)` | `-2r` | `[0,1]` |
//! | `identity` | `z` | `1` | `0` | `R^n` |
//! | `affine(A,b)` | `Az+b` | `A` | `0` | `R^n` |

use std::f64::consts::PI;
use std::sync::Arc;

use super::{ConvolutionKernel, FredholmKernel, GrowthSpec, ImageHolderBound, KernelSpec};
use super::{LipschitzBound, UrysohnBounds, ZSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersalKind {
    Gaussian,
    Laplace,
}

/// Probability density `k(w)` used as `k(x, y) = k(x - y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersal {
    pub kind: DispersalKind,
    pub sigma: f64,
}

impl Dispersal {
    pub fn new(kind: DispersalKind, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidKernelParams {
                name: kind.name().into(),
                reason: format!("sigma must be positive, got {sigma}"),
            });
        }
        Ok(Self { kind, sigma })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(DispersalKind::Gaussian, sigma)
    }

    pub fn laplace(sigma: f64) -> Result<Self> {
        Self::new(DispersalKind::Laplace, sigma)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    #[inline]
    pub fn density(&self, w: f64) -> f64 {
        let s = self.sigma;
        match self.kind {
            DispersalKind::Gaussian => (-w * w / (2.0 * s * s)).exp() / (2.0 * PI * s * s).sqrt(),
            DispersalKind::Laplace => (-w.abs() / s).exp() / (2.0 * s),
        }
    }

    /// `k'(w)`; for the Laplace kernel the one-sided value away from `0`
    /// and `0` at the kink.
    pub fn derivative(&self, w: f64) -> f64 {
        let s = self.sigma;
        match self.kind {
            DispersalKind::Gaussian => -w / (s * s) * self.density(w),
            DispersalKind::Laplace if w == 0.0 => 0.0,
            DispersalKind::Laplace => -w.signum() / s * self.density(w),
        }
    }

    /// `max_w k(w)`.
    pub fn peak(&self) -> f64 {
        self.density(0.0)
    }

    /// Global Lipschitz constant of `k`.
    pub fn lipschitz(&self) -> f64 {
        let s = self.sigma;
        match self.kind {
            DispersalKind::Gaussian => (-0.5f64).exp() / ((2.0 * PI * s * s).sqrt() * s),
            DispersalKind::Laplace => 1.0 / (2.0 * s * s),
        }
    }

    pub fn fredholm(&self) -> FredholmKernel {
        let me = *self;
        FredholmKernel::scalar(self.name(), move |x, y| me.density(x - y))
            .with_lipschitz_x(self.lipschitz())
    }

    /// `f̃(w, z) = k(w)·z` with `l̃_r = k` and the smoothing constant
    /// `C = r·sup_{0<Δ≤L} min(mΔ, 1)/Δ^α`, `m = max k`.
    pub fn convolution(&self) -> ConvolutionKernel {
        let (a, b, c) = (*self, *self, *self);
        let m = self.peak();
        ConvolutionKernel::scalar(self.name(), move |w, z| a.density(w) * z)
            .with_scalar_d1(move |w, z| b.derivative(w) * z)
            .with_scalar_d2(move |w, _| c.density(w))
            .with_ltilde(move |w, _r| a.density(w))
            .with_smoothing_constant(move |alpha, r, l| {
                if 1.0 / m <= l {
                    r * m.powf(alpha)
                } else {
                    r * m * l.powf(1.0 - alpha)
                }
            })
    }
}

impl DispersalKind {
    pub fn name(self) -> &'static str {
        match self {
            DispersalKind::Gaussian => "gaussian_dispersal",
            DispersalKind::Laplace => "laplace_dispersal",
        }
    }
}

#[derive(Debug, Clone)]
pub enum BuiltinKernel {
    Dispersal(Dispersal),
    Growth(GrowthSpec),
    Urysohn(KernelSpec),
}

impl BuiltinKernel {
    pub fn into_dispersal(self) -> Result<Dispersal> {
        match self {
            BuiltinKernel::Dispersal(d) => Ok(d),
            other => Err(Error::InvalidArgument(format!(
                "`{}` is not a dispersal kernel",
                other.name()
            ))),
        }
    }

    pub fn into_growth(self) -> Result<GrowthSpec> {
        match self {
            BuiltinKernel::Growth(g) => Ok(g),
            other => Err(Error::InvalidArgument(format!(
                "`{}` is not a growth map",
                other.name()
            ))),
        }
    }

    pub fn into_urysohn(self) -> Result<KernelSpec> {
        match self {
            BuiltinKernel::Urysohn(k) => Ok(k),
            other => Err(Error::InvalidArgument(format!(
                "`{}` is not a Urysohn kernel",
                other.name()
            ))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            BuiltinKernel::Dispersal(d) => d.name(),
            BuiltinKernel::Growth(g) => g.name(),
            BuiltinKernel::Urysohn(k) => k.name(),
        }
    }
}

pub const BUILTIN_NAMES: [&str; 8] = [
    "gaussian_dispersal",
    "laplace_dispersal",
    "separable_poly",
    "beverton_holt",
    "ricker",
    "logistic",
    "identity",
    "affine",
];

fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidKernelParams {
        name: name.into(),
        reason: reason.into(),
    }
}

fn expect_len(name: &str, params: &[f64], len: usize) -> Result<()> {
    if params.len() != len {
        return Err(invalid(
            name,
            format!("expected {len} parameters, got {}", params.len()),
        ));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(invalid(name, "parameters must be finite"));
    }
    Ok(())
}

fn positive(name: &str, what: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, format!("{what} must be positive, got {v}")))
    }
}

/// Looks up a builtin kernel by name.
///
/// Parameters: `gaussian_dispersal(σ)`, `laplace_dispersal(σ)`,
/// `separable_poly(c₀, …, c_m)` for `f(x,y,z) = Σ c_k z^k`,
/// `beverton_holt(r, K)`, `ricker(r)`, `logistic(r)`, `identity()` or
/// `identity(n)`, and `affine(A, b)` with `A` row-major `n × n`.
pub fn builtin_kernel(name: &str, params: &[f64]) -> Result<BuiltinKernel> {
    match name {
        "gaussian_dispersal" | "laplace_dispersal" => {
            expect_len(name, params, 1)?;
            let kind = if name.starts_with("gaussian") {
                DispersalKind::Gaussian
            } else {
                DispersalKind::Laplace
            };
            Ok(BuiltinKernel::Dispersal(Dispersal::new(kind, params[0])?))
        }
        "separable_poly" => {
            if params.is_empty() || params.iter().any(|p| !p.is_finite()) {
                return Err(invalid(name, "need at least one finite coefficient"));
            }
            Ok(BuiltinKernel::Urysohn(separable_poly(params.to_vec())))
        }
        "beverton_holt" => {
            expect_len(name, params, 2)?;
            let r = positive(name, "r", params[0])?;
            let k = positive(name, "K", params[1])?;
            Ok(BuiltinKernel::Growth(beverton_holt(r, k)))
        }
        "ricker" => {
            expect_len(name, params, 1)?;
            Ok(BuiltinKernel::Growth(ricker(positive(name, "r", params[0])?)))
        }
        "logistic" => {
            expect_len(name, params, 1)?;
            Ok(BuiltinKernel::Growth(logistic(positive(name, "r", params[0])?)))
        }
        "identity" => {
            let n = match params {
                [] => 1,
                [n] if *n >= 1.0 && n.fract() == 0.0 => *n as usize,
                _ => return Err(invalid(name, "optional parameter is the dimension n >= 1")),
            };
            Ok(BuiltinKernel::Growth(identity(n)))
        }
        "affine" => {
            // n² + n parameters
            let len = params.len();
            let n = ((((1 + 4 * len) as f64).sqrt() - 1.0) / 2.0).round() as usize;
            if n == 0 || n * n + n != len {
                return Err(invalid(name, format!("{len} parameters is not n*n + n")));
            }
            expect_len(name, params, len)?;
            Ok(BuiltinKernel::Growth(affine(
                params[..n * n].to_vec(),
                params[n * n..].to_vec(),
            )))
        }
        other => Err(Error::UnknownKernel(other.to_string())),
    }
}

/// `f(x, y, z) = Σ c_k z^k`.
pub fn separable_poly(c: Vec<f64>) -> KernelSpec {
    let (c0, c1, c2, c3, c4) = (c.clone(), c.clone(), c.clone(), c.clone(), c);
    let poly = move |z: f64| c0.iter().rev().fold(0.0, |acc, ck| acc * z + ck);
    let dpoly = move |z: f64| {
        c1.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, ck)| acc * z + k as f64 * ck)
    };
    let ddpoly = move |z: f64| {
        c2.iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, ck)| acc * z + (k * (k - 1)) as f64 * ck)
    };
    let bounds = UrysohnBounds {
        sup: Some(Arc::new(move |r, _, _| {
            c3.iter().rev().fold(0.0, |acc, ck| acc * r + ck.abs())
        })),
        lipschitz: Some(LipschitzBound {
            theta: 1.0,
            l: Arc::new(move |r, _, _| {
                c4.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, ck)| acc * r + k as f64 * ck.abs())
            }),
        }),
        image_holder: Some(ImageHolderBound {
            beta: 1.0,
            hbar: Arc::new(|_, _| 0.0),
        }),
    };
    KernelSpec::scalar("separable_poly", move |_, _, z| poly(z))
        .with_scalar_d3(move |_, _, z| dpoly(z))
        .with_scalar_d33(move |_, _, z| ddpoly(z))
        .with_bounds(bounds)
}

pub fn beverton_holt(r: f64, k: f64) -> GrowthSpec {
    let g = move |z: f64| r * z / (1.0 + z / k);
    GrowthSpec::scalar("beverton_holt", g)
        .with_scalar_derivatives(
            move |z| r / (1.0 + z / k).powi(2),
            move |z| -2.0 * r / (k * (1.0 + z / k).powi(3)),
        )
        .with_z_set(ZSet::nonnegative(1))
        .expect("scalar box")
        .with_lipschitz(move |_| r)
        .with_sup(g)
}

pub fn ricker(r: f64) -> GrowthSpec {
    let g = move |z: f64| z * (r * (1.0 - z)).exp();
    GrowthSpec::scalar("ricker", g)
        .with_scalar_derivatives(
            move |z| (r * (1.0 - z)).exp() * (1.0 - r * z),
            move |z| -r * (r * (1.0 - z)).exp() * (2.0 - r * z),
        )
        .with_z_set(ZSet::nonnegative(1))
        .expect("scalar box")
        .with_lipschitz(move |_| r.exp())
        .with_sup(move |rad| if rad >= 1.0 / r { g(1.0 / r) } else { g(rad) })
}

pub fn logistic(r: f64) -> GrowthSpec {
    let g = move |z: f64| r * z * (1.0 - z);
    GrowthSpec::scalar("logistic", g)
        .with_scalar_derivatives(move |z| r * (1.0 - 2.0 * z), move |_| -2.0 * r)
        .with_z_set(ZSet::interval(0.0, 1.0))
        .expect("scalar box")
        .with_lipschitz(move |_| r)
        .with_sup(move |rad| if rad >= 0.5 { r / 4.0 } else { g(rad) })
}

pub fn identity(n: usize) -> GrowthSpec {
    GrowthSpec::new("identity", n, n, Arc::new(|_, z, out| out.copy_from_slice(z)))
        .with_d2(Arc::new(move |_, _, out| {
            out.fill(0.0);
            for i in 0..n {
                out[i * n + i] = 1.0;
            }
        }))
        .with_d22(Arc::new(|_, _, out| out.fill(0.0)))
        .autonomous()
        .with_lipschitz(|_| 1.0)
        .with_sup(|r| r)
}

/// `g(z) = A z + b` with `A` row-major.
pub fn affine(a: Vec<f64>, b: Vec<f64>) -> GrowthSpec {
    let n = b.len();
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a0, a1) = (a.clone(), a);
    GrowthSpec::new(
        "affine",
        n,
        n,
        Arc::new(move |_, z, out| {
            for i in 0..n {
                out[i] = b[i] + (0..n).map(|j| a0[i * n + j] * z[j]).sum::<f64>();
            }
        }),
    )
    .with_d2(Arc::new(move |_, _, out| out.copy_from_slice(&a1)))
    .with_d22(Arc::new(|_, _, out| out.fill(0.0)))
    .autonomous()
    .with_lipschitz(move |_| frob)
    .with_sup(move |r| frob * r + bnorm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn growth(name: &str, p: &[f64]) -> GrowthSpec {
        builtin_kernel(name, p).unwrap().into_growth().unwrap()
    }

    #[test]
    fn laplace_peak() {
        let d = builtin_kernel("laplace_dispersal", &[1.0])
            .unwrap()
            .into_dispersal()
            .unwrap();
        assert_eq!(d.density(0.0), 0.5);
        let k = d.fredholm();
        let mut o = [0.0];
        k.eval(&[0.3], &[0.3], &mut o);
        assert_eq!(o[0], 0.5);
    }

    #[test]
    fn gaussian_peak() {
        let d = Dispersal::gaussian(2.0).unwrap();
        assert!((d.density(0.0) - 1.0 / (8.0 * PI).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn beverton_holt_fixed_point() {
        let g = growth("beverton_holt", &[2.0, 1.0]);
        let mut o = [0.0];
        g.eval(&[0.0], &[1.0], &mut o);
        assert_eq!(o[0], 1.0);
    }

    #[test]
    fn identity_derivative_is_identity() {
        let g = growth("identity", &[2.0]);
        let mut o = [9.0; 4];
        assert!(!g.d2(&[0.0], &[0.3, -1.0], &mut o));
        assert_eq!(o, [1.0, 0.0, 0.0, 1.0]);
        let mut v = [0.0; 2];
        g.eval(&[0.0], &[0.3, -1.0], &mut v);
        assert_eq!(v, [0.3, -1.0]);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            builtin_kernel("gaussian_dispersal", &[0.0]),
            Err(Error::InvalidKernelParams { .. })
        ));
        assert!(matches!(
            builtin_kernel("ricker", &[-1.0]),
            Err(Error::InvalidKernelParams { .. })
        ));
        assert!(builtin_kernel("beverton_holt", &[2.0]).is_err());
        assert!(builtin_kernel("affine", &[1.0, 2.0, 3.0]).is_err());
        assert!(matches!(
            builtin_kernel("cauchy", &[]),
            Err(Error::UnknownKernel(_))
        ));
        for name in BUILTIN_NAMES {
            assert!(!matches!(
                builtin_kernel(name, &[]),
                Err(Error::UnknownKernel(_))
            ));
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        // ratio ≈ 4 on halving the step confirms second-order agreement
        let maps = [
            growth("beverton_holt", &[2.0, 1.0]),
            growth("ricker", &[1.5]),
            growth("logistic", &[3.2]),
            growth("affine", &[2.0, -1.0]),
        ];
        for g in &maps {
            for &z in &[0.2, 0.45, 0.9] {
                let mut d = [0.0];
                g.d2(&[0.0], &[z], &mut d);
                let fd = |h: f64| {
                    let (mut p, mut m) = ([0.0], [0.0]);
                    g.eval(&[0.0], &[z + h], &mut p);
                    g.eval(&[0.0], &[z - h], &mut m);
                    (p[0] - m[0]) / (2.0 * h)
                };
                let e1 = (fd(1e-3) - d[0]).abs();
                let e2 = (fd(5e-4) - d[0]).abs();
                assert!((fd(1e-5) - d[0]).abs() <= 1e-6 * d[0].abs().max(1.0));
                if e1 > 1e-11 {
                    assert!((e1 / e2 - 4.0).abs() < 0.1, "{} z={z}: {}", g.name(), e1 / e2);
                }
                let mut dd = [0.0];
                g.d22(&[0.0], &[z], &mut dd);
                let (mut p, mut m) = ([0.0], [0.0]);
                g.d2(&[0.0], &[z + 1e-5], &mut p);
                g.d2(&[0.0], &[z - 1e-5], &mut m);
                let fdd = (p[0] - m[0]) / 2e-5;
                assert!((fdd - dd[0]).abs() <= 1e-6 * dd[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn dispersal_derivative_and_lipschitz() {
        for d in [Dispersal::gaussian(0.7).unwrap(), Dispersal::laplace(0.7).unwrap()] {
            let mut max_slope = 0.0f64;
            for i in 1..4000 {
                let w = -3.0 + i as f64 * 1.5e-3;
                let h = 1e-6;
                let fd = (d.density(w + h) - d.density(w - h)) / (2.0 * h);
                if w.abs() > 1e-3 {
                    assert!((fd - d.derivative(w)).abs() < 1e-6, "{w}");
                }
                max_slope = max_slope.max(d.derivative(w).abs());
            }
            assert!(max_slope <= d.lipschitz() * (1.0 + 1e-12));
            assert!(max_slope >= 0.99 * d.lipschitz());
        }
    }

    #[test]
    fn growth_lipschitz_and_sup_bounds_hold() {
        let cases = [
            growth("beverton_holt", &[2.0, 1.0]),
            growth("ricker", &[1.8]),
            growth("logistic", &[3.5]),
            growth("identity", &[]),
        ];
        for g in &cases {
            for &rad in &[0.3, 1.0, 4.0] {
                let l = g.lipschitz_bound().unwrap()(rad);
                let s = g.sup_bound().unwrap()(rad);
                let (lo, hi) = g.z_set().axis_range(0, rad);
                let mut prev: Option<(f64, f64)> = None;
                for i in 0..=2000 {
                    let z = lo + (hi - lo) * i as f64 / 2000.0;
                    let mut v = [0.0];
                    g.eval(&[0.0], &[z], &mut v);
                    assert!(v[0].abs() <= s * (1.0 + 1e-12), "{} sup", g.name());
                    if let Some((pz, pv)) = prev {
                        assert!((v[0] - pv).abs() <= l * (z - pz) * (1.0 + 1e-12));
                    }
                    prev = Some((z, v[0]));
                }
            }
        }
    }

    #[test]
    fn separable_poly_values() {
        let f = builtin_kernel("separable_poly", &[1.0, 0.0, 2.0])
            .unwrap()
            .into_urysohn()
            .unwrap();
        let mut o = [0.0];
        f.eval(&[0.0], &[0.0], &[3.0], &mut o);
        assert_eq!(o[0], 19.0);
        f.d3(&[0.0], &[0.0], &[3.0], &mut o);
        assert_eq!(o[0], 12.0);
        f.d33(&[0.0], &[0.0], &[3.0], &mut o);
        assert_eq!(o[0], 4.0);
        let lip = f.bounds().lipschitz.as_ref().unwrap();
        assert_eq!((lip.l)(2.0, &[0.0], &[0.0]), 8.0);
    }
}
