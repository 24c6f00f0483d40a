//! Seeded test-function generators.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::holder::pathology::{log_pathology, weierstrass};

/// Names accepted by [`generate`].
pub const GENERATOR_NAMES: [&str; 9] = [
    "abs_pow",
    "log_pathology",
    "weierstrass",
    "sin",
    "bump",
    "constant",
    "piecewise_linear",
    "random_weierstrass",
    "random_trig",
];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Continuous piecewise-linear function of the first coordinate with
/// `pieces` random pieces over the domain's range and nodal values in
/// `[-amplitude, amplitude]`.
pub fn random_piecewise_linear(domain: Arc<DiscreteDomain>, seed: u64, pieces: usize, amplitude: f64) -> GridFunction {
    let range = domain.bounds();
    random_piecewise_linear_on(domain, range, seed, pieces, amplitude)
}

/// As [`random_piecewise_linear`] with breakpoints drawn from `(lo, hi)`,
/// so that different node sets sample the same function.
pub fn random_piecewise_linear_on(
    domain: Arc<DiscreteDomain>,
    (lo, hi): (f64, f64),
    seed: u64,
    pieces: usize,
    amplitude: f64,
) -> GridFunction {
    let mut rng = rng(seed);
    let pieces = pieces.max(1);
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.gen_range(lo..=hi)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.insert(0, lo);
    breaks.push(hi);
    let values: Vec<f64> = (0..=pieces).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
    let f = move |x: f64| {
        let k = breaks.partition_point(|&b| b <= x).clamp(1, pieces) - 1;
        let (b0, b1) = (breaks[k], breaks[k + 1]);
        if b1 > b0 {
            let t = ((x - b0) / (b1 - b0)).clamp(0.0, 1.0);
            values[k] + t * (values[k + 1] - values[k])
        } else {
            values[k]
        }
    };
    let values = (0..domain.len()).map(|i| f(domain.point(i)[0])).collect();
    GridFunction::new(domain, 1, values).expect("finite samples")
}

/// `Σ_{k<terms} a^k cos(b^k π x + φ_k)` with random `a ∈ [0.3, 0.7]`, odd
/// `b ∈ {3, 5, …, 15}` and phases, scaled to `amplitude`.
pub fn random_weierstrass(domain: Arc<DiscreteDomain>, seed: u64, terms: usize, amplitude: f64) -> GridFunction {
    let mut rng = rng(seed);
    let a: f64 = rng.gen_range(0.3..=0.7);
    let b = (2 * rng.gen_range(1..=7) + 1) as f64;
    let phases: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let scale = amplitude * (1.0 - a);
    let values = (0..domain.len())
        .map(|i| {
            let x = domain.point(i)[0];
            let mut s = 0.0;
            let (mut ak, mut bk) = (1.0, 1.0);
            for phase in &phases {
                s += ak * ((bk * x).rem_euclid(2.0) * PI + phase).cos();
                ak *= a;
                bk *= b;
            }
            scale * s
        })
        .collect();
    GridFunction::new(domain, 1, values).expect("finite samples")
}

/// Random trigonometric polynomial `Σ_{k≤modes} (a_k cos kπx + b_k sin kπx)/k²`
/// in each of `dim` components.
pub fn random_trig(domain: Arc<DiscreteDomain>, seed: u64, dim: usize, modes: usize, amplitude: f64) -> GridFunction {
    let mut rng = rng(seed);
    let coeffs: Vec<(f64, f64)> = (0..dim * modes)
        .map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect();
    GridFunction::from_fn(domain, dim, |x, out| {
        for (c, o) in out.iter_mut().enumerate() {
            *o = amplitude
                * (1..=modes)
                    .map(|k| {
                        let (a, b) = coeffs[c * modes + k - 1];
                        let t = k as f64 * PI * x[0];
                        (a * t.cos() + b * t.sin()) / (k * k) as f64
                    })
                    .sum::<f64>();
        }
    })
    .expect("finite samples")
}

fn param(params: &[f64], i: usize, default: f64) -> f64 {
    params.get(i).copied().unwrap_or(default)
}

/// Whether the named generator draws from a seeded random stream.
pub fn is_random(name: &str) -> bool {
    matches!(name, "piecewise_linear" | "random_weierstrass" | "random_trig")
}

/// Samples a named scalar function on `domain`.
///
/// | name | params |
/// |---|---|
/// | `abs_pow` | `α` (0.5) |
/// | `log_pathology` | none |
/// | `weierstrass` | `a` (0.5), `b` (13), terms (60) |
/// | `sin` | frequency (1), amplitude (1), offset (0) |
/// | `bump` | centre (0), width (1), height (1) |
/// | `constant` | value (0) |
/// | `piecewise_linear` | pieces (8), amplitude (1) |
/// | `random_weierstrass` | terms (20), amplitude (1) |
/// | `random_trig` | modes (4), amplitude (1) |
pub fn generate(name: &str, domain: Arc<DiscreteDomain>, seed: u64, params: &[f64]) -> Result<GridFunction> {
    let range = domain.bounds();
    generate_on(name, domain, range, seed, params)
}

/// As [`generate`], with random breakpoints drawn from `range`.
pub fn generate_on(
    name: &str,
    domain: Arc<DiscreteDomain>,
    range: (f64, f64),
    seed: u64,
    params: &[f64],
) -> Result<GridFunction> {
    let bad = |reason: &str| Error::InvalidArgument(format!("generator `{name}`: {reason}"));
    let count = |i: usize, default: f64| -> Result<usize> {
        let v = param(params, i, default);
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(bad("counts must be positive integers"))
        }
    };
    match name {
        "abs_pow" => {
            let alpha = param(params, 0, 0.5);
            GridFunction::from_scalar_fn(domain, |x| x.abs().powf(alpha))
        }
        "log_pathology" => GridFunction::from_scalar_fn(domain, log_pathology),
        "weierstrass" => {
            let (a, b) = (param(params, 0, 0.5), param(params, 1, 13.0));
            let terms = count(2, 60.0)?;
            GridFunction::from_scalar_fn(domain, |x| weierstrass(x, a, b, terms))
        }
        "sin" => {
            let (f, amp, c) = (param(params, 0, 1.0), param(params, 1, 1.0), param(params, 2, 0.0));
            GridFunction::from_scalar_fn(domain, |x| c + amp * (f * x).sin())
        }
        "bump" => {
            let (c, w, h) = (param(params, 0, 0.0), param(params, 1, 1.0), param(params, 2, 1.0));
            if w <= 0.0 {
                return Err(bad("width must be positive"));
            }
            GridFunction::from_scalar_fn(domain, |x| {
                let t = (x - c) / w;
                if t.abs() < 1.0 {
                    h * (1.0 - 1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            })
        }
        "constant" => GridFunction::constant(domain, &[param(params, 0, 0.0)]),
        "piecewise_linear" => Ok(random_piecewise_linear_on(
            domain,
            range,
            seed,
            count(0, 8.0)?,
            param(params, 1, 1.0),
        )),
        "random_weierstrass" => Ok(random_weierstrass(
            domain,
            seed,
            count(0, 20.0)?,
            param(params, 1, 1.0),
        )),
        "random_trig" => Ok(random_trig(domain, seed, 1, count(0, 4.0)?, param(params, 1, 1.0))),
        _ => Err(bad("unknown generator")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generators_reproduce() {
        let d = DiscreteDomain::uniform_interval(-1.0, 1.0, 101).unwrap();
        for seed in [0, 1, 99] {
            assert_eq!(
                random_piecewise_linear(d.clone(), seed, 5, 1.0),
                random_piecewise_linear(d.clone(), seed, 5, 1.0)
            );
            assert_eq!(
                random_weierstrass(d.clone(), seed, 10, 1.0),
                random_weierstrass(d.clone(), seed, 10, 1.0)
            );
        }
        assert_ne!(
            random_piecewise_linear(d.clone(), 1, 5, 1.0),
            random_piecewise_linear(d, 2, 5, 1.0)
        );
    }

    #[test]
    fn amplitudes_respected() {
        let d = DiscreteDomain::uniform_interval(0.0, 3.0, 301).unwrap();
        for seed in 0..20 {
            assert!(random_piecewise_linear(d.clone(), seed, 7, 2.0).sup_norm() <= 2.0);
            assert!(random_weierstrass(d.clone(), seed, 15, 1.5).sup_norm() <= 1.5 + 1e-12);
        }
    }

    #[test]
    fn named_generators() {
        let d = DiscreteDomain::uniform_interval(-1.0, 1.0, 5).unwrap();
        let u = generate("abs_pow", d.clone(), 0, &[1.0]).unwrap();
        assert_eq!(u.values(), &[1.0, 0.5, 0.0, 0.5, 1.0]);
        assert!(generate("nope", d.clone(), 0, &[]).is_err());
        assert!(generate("piecewise_linear", d, 0, &[0.5]).is_err());
    }
}
