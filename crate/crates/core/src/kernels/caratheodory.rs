//! Sampled estimates of the bound functions `b_r^k` and `h_r^k`.
//!
//! Suprema over `Z_r = Z ∩ B̄_r(0)` are replaced by maxima over a Halton
//! sequence mapped into the box `Z ∩ [-r, r]^n`; points outside the ball
//! are skipped. The first `m` accepted probes are always a prefix of the
//! first `2m`, so doubling the sample count never lowers an estimate.
//! Tensor magnitudes are Frobenius norms, which dominate the operator
//! norms.

use rayon::prelude::*;

use super::KernelSpec;
use crate::domain::{norm2, DiscreteDomain};
use crate::error::{Error, Result};

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in base `PRIMES[dim]`.
pub fn halton(index: u64, dim: usize) -> f64 {
    let base = PRIMES[dim % PRIMES.len()] as u64;
    let inv = 1.0 / base as f64;
    let (mut i, mut f, mut out) = (index, inv, 0.0);
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

#[derive(Debug, Clone)]
pub struct CaratheodoryBounds {
    pub r: f64,
    pub k: usize,
    /// Number of accepted probes in `Z_r`.
    pub z_samples: usize,
    /// Row-major `|Ω₁| × |Ω|` table of sampled `b_r^k(x, y)`.
    pub b: Vec<f64>,
    /// True when a difference fallback supplied the derivative.
    pub fallback: bool,
    probes: Vec<f64>,
    state_dim: usize,
    n_target: usize,
    n_source: usize,
}

impl CaratheodoryBounds {
    /// Always `"sampled lower estimate of the sup"`.
    pub fn label(&self) -> &'static str {
        "sampled lower estimate of the sup"
    }

    pub fn b_at(&self, xi: usize, yi: usize) -> f64 {
        self.b[xi * self.n_source + yi]
    }

    pub fn probes(&self) -> impl Iterator<Item = &[f64]> {
        self.probes.chunks(self.state_dim)
    }

    /// `h_r^k(x, x₀, y) = max_z |D₃ᵏf(x,y,z) - D₃ᵏf(x₀,y,z)|` over the probes.
    pub fn h(
        &self,
        kernel: &KernelSpec,
        target: &DiscreteDomain,
        source: &DiscreteDomain,
        xi: usize,
        x0i: usize,
        yi: usize,
    ) -> f64 {
        debug_assert!(xi < self.n_target && x0i < self.n_target && yi < self.n_source);
        let size = kernel.d() * kernel.n().pow(self.k as u32);
        let mut a = vec![0.0; size];
        let mut b = vec![0.0; size];
        let (x, x0, y) = (target.point(xi), target.point(x0i), source.point(yi));
        let mut best = 0.0f64;
        for z in self.probes.chunks(kernel.n()) {
            kernel.derivative(self.k, x, y, z, &mut a);
            kernel.derivative(self.k, x0, y, z, &mut b);
            let diff: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            best = best.max(norm2(&diff));
        }
        best
    }
}

/// Probe points in `Z ∩ B̄_r(0)`: accepted Halton points, `n` coordinates
/// each.
fn sample_zr(kernel: &KernelSpec, r: f64, count: usize) -> Vec<f64> {
    let n = kernel.n();
    let ranges: Vec<(f64, f64)> = (0..n).map(|j| kernel.z_set().axis_range(j, r)).collect();
    let mut out = Vec::with_capacity(count * n);
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return out;
    }
    let mut z = vec![0.0; n];
    let mut index = 1u64;
    let max_tries = 64 * count as u64 + 64;
    while out.len() < count * n && index <= max_tries {
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            z[j] = lo + (hi - lo) * halton(index, j);
        }
        index += 1;
        if n == 1 || norm2(&z) <= r {
            out.extend_from_slice(&z);
        }
    }
    out
}

/// Sampled `b_r^k(x, y) = max_{z ∈ Z_r} |D₃ᵏf(x, y, z)|` on
/// `target × source`; `h_r^k` is evaluated on demand through the result.
pub fn estimate_caratheodory_bounds(
    kernel: &KernelSpec,
    target: &DiscreteDomain,
    source: &DiscreteDomain,
    r: f64,
    k: usize,
    z_samples: usize,
) -> Result<CaratheodoryBounds> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if z_samples == 0 {
        return Err(Error::InvalidArgument("need at least one z sample".into()));
    }
    let fallback = match k {
        0 => false,
        1 => !kernel.has_d3(),
        2 => !kernel.has_d33(),
        _ => return Err(Error::MissingDerivative(k)),
    };
    let probes = sample_zr(kernel, r, z_samples);
    let accepted = probes.len() / kernel.n();
    if accepted == 0 {
        return Err(Error::InvalidArgument("no probe landed in Z ∩ B_r(0)".into()));
    }
    let size = kernel.d() * kernel.n().pow(k as u32);
    let (nt, ns) = (target.len(), source.len());
    let b: Vec<f64> = (0..nt * ns)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (target.point(idx / ns), source.point(idx % ns));
            let mut buf = vec![0.0; size];
            probes.chunks(kernel.n()).fold(0.0f64, |m, z| {
                kernel.derivative(k, x, y, z, &mut buf);
                m.max(norm2(&buf))
            })
        })
        .collect();
    Ok(CaratheodoryBounds {
        r,
        k,
        z_samples: accepted,
        b,
        fallback,
        probes,
        state_dim: kernel.n(),
        n_target: nt,
        n_source: ns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ZSet;
    use proptest::prelude::*;

    fn unit() -> std::sync::Arc<DiscreteDomain> {
        DiscreteDomain::uniform_interval(0.0, 1.0, 6).unwrap()
    }

    #[test]
    fn halton_prefix_values() {
        assert_eq!(halton(1, 0), 0.5);
        assert_eq!(halton(2, 0), 0.25);
        assert_eq!(halton(3, 0), 0.75);
        assert!((halton(1, 1) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn linear_kernel_derivative_is_one() {
        let f = KernelSpec::scalar("z", |_, _, z| z).with_scalar_d3(|_, _, _| 1.0);
        let b = estimate_caratheodory_bounds(&f, &unit(), &unit(), 3.0, 1, 17).unwrap();
        assert!(b.b.iter().all(|&v| v == 1.0));
        assert!(!b.fallback);
        assert_eq!(b.label(), "sampled lower estimate of the sup");
    }

    #[test]
    fn x_z_squared_sup() {
        let f = KernelSpec::scalar("xz2", |x, _, z| x * z * z);
        let d = unit();
        let r = 2.0;
        let b = estimate_caratheodory_bounds(&f, &d, &d, r, 0, 256).unwrap();
        for xi in 0..d.len() {
            let exact = d.x(xi) * r * r;
            for yi in 0..d.len() {
                let v = b.b_at(xi, yi);
                assert!(v <= exact * (1.0 + 1e-15) && v >= 0.97 * exact);
            }
        }
    }

    #[test]
    fn h_for_sin_x_z() {
        let f = KernelSpec::scalar("sinxz", |x, _, z| x.sin() * z);
        let d = unit();
        let r = 1.5;
        let b = estimate_caratheodory_bounds(&f, &d, &d, r, 0, 128).unwrap();
        let h = b.h(&f, &d, &d, 4, 1, 2);
        let exact = (d.x(4).sin() - d.x(1).sin()).abs() * r;
        assert!(h <= exact * (1.0 + 1e-14) && h >= 0.98 * exact);
    }

    #[test]
    fn respects_z_box_and_missing_order() {
        let f = KernelSpec::scalar("z", |_, _, z| z)
            .with_z_set(ZSet::interval(0.5, 0.75))
            .unwrap();
        let b = estimate_caratheodory_bounds(&f, &unit(), &unit(), 10.0, 0, 32).unwrap();
        assert!(b.probes().all(|z| (0.5..=0.75).contains(&z[0])));
        assert!(b.b.iter().all(|&v| v <= 0.75));
        assert!(matches!(
            estimate_caratheodory_bounds(&f, &unit(), &unit(), 1.0, 3, 8),
            Err(Error::MissingDerivative(3))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn doubling_samples_never_decreases(m in 1usize..64, r in 0.1f64..5.0) {
            let f = KernelSpec::scalar("mix", |x, y, z| (x * z).sin() + y * z * z);
            let d = unit();
            let a = estimate_caratheodory_bounds(&f, &d, &d, r, 0, m).unwrap();
            let b = estimate_caratheodory_bounds(&f, &d, &d, r, 0, 2 * m).unwrap();
            for (p, q) in a.b.iter().zip(&b.b) {
                prop_assert!(q >= p);
            }
        }

        #[test]
        fn nondecreasing_in_radius(r in 0.1f64..5.0, s in 0.0f64..5.0) {
            // |f| = x·|z|³ grows radially, so scaled probes dominate
            let f = KernelSpec::scalar("xz3", |x, _, z| x * z * z * z);
            let d = unit();
            let a = estimate_caratheodory_bounds(&f, &d, &d, r, 0, 16).unwrap();
            let b = estimate_caratheodory_bounds(&f, &d, &d, r + s, 0, 16).unwrap();
            for (p, q) in a.b.iter().zip(&b.b) {
                prop_assert!(q >= p);
            }
        }
    }
}
