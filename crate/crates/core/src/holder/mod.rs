//! Discrete Hölder seminorms and norms, embedding and calculus-rule checks,
//! and the ε-curve estimate of the measure of noncompactness.
//!
//! All seminorms are exact maxima over every unordered pair of grid points,
//! so each one is a lower bound for the continuum seminorm and the
//! pairwise inequalities of Hölder calculus can be tested exactly up to
//! [`ROUNDING_SLACK`](crate::ROUNDING_SLACK).

pub mod pathology;

use rayon::prelude::*;

use crate::domain::{dist2, norm2, GridFunction};
use crate::error::{Error, Result};
use crate::ROUNDING_SLACK;

pub use pathology::{pathology_suite, pathology_suite_with, PathologyReport};

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub alpha: f64,
    pub sup_norm: f64,
    /// `[u]_α`; zero (and not computed) when `alpha == 0`.
    pub seminorm: f64,
    pub norm: f64,
    /// Lowest-index pair attaining the seminorm.
    pub argmax_pair: Option<(usize, usize)>,
}

/// `|u(x_i) - u(x_j)| / d(x_i, x_j)^α`.
#[inline]
pub fn holder_quotient(u: &GridFunction, i: usize, j: usize, alpha: f64) -> f64 {
    let d = u.domain().dist(i, j);
    let num = dist2(u.value(i), u.value(j));
    if alpha == 1.0 {
        num / d
    } else {
        num / d.powf(alpha)
    }
}

#[derive(Debug, Clone, Copy)]
struct PairMax {
    q: f64,
    i: usize,
    j: usize,
}

impl PairMax {
    const NONE: PairMax = PairMax {
        q: f64::NEG_INFINITY,
        i: usize::MAX,
        j: usize::MAX,
    };

    // larger quotient wins, ties go to the lexicographically smaller pair
    fn better(self, other: PairMax) -> PairMax {
        if other.q > self.q || (other.q == self.q && (other.i, other.j) < (self.i, self.j)) {
            other
        } else {
            self
        }
    }
}

/// Maximum Hölder quotient over pairs with `d ≤ max_dist`.
fn pair_max(u: &GridFunction, alpha: f64, max_dist: f64) -> PairMax {
    let n = u.len();
    let domain = u.domain();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = PairMax::NONE;
            for j in (i + 1)..n {
                if domain.dist(i, j) > max_dist {
                    continue;
                }
                let q = holder_quotient(u, i, j, alpha);
                if q > best.q {
                    best = PairMax { q, i, j };
                }
            }
            best
        })
        .reduce(|| PairMax::NONE, PairMax::better)
}

fn check_open_exponent(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    Ok(())
}

/// Exact discrete `[u]_α` over all unordered pairs.
pub fn holder_seminorm(u: &GridFunction, alpha: f64) -> Result<HolderReport> {
    check_open_exponent(alpha)?;
    if u.len() < 2 {
        return Err(Error::TooFewPoints {
            got: u.len(),
            min: 2,
        });
    }
    let best = pair_max(u, alpha, f64::INFINITY);
    let sup_norm = u.sup_norm();
    Ok(HolderReport {
        alpha,
        sup_norm,
        seminorm: best.q,
        norm: sup_norm.max(best.q),
        argmax_pair: Some((best.i, best.j)),
    })
}

/// `‖u‖_α = max{‖u‖₀, [u]_α}`, or the sup-norm alone for `alpha == 0`.
pub fn holder_norm(u: &GridFunction, alpha: f64) -> Result<HolderReport> {
    if alpha == 0.0 {
        let sup_norm = u.sup_norm();
        return Ok(HolderReport {
            alpha,
            sup_norm,
            seminorm: 0.0,
            norm: sup_norm,
            argmax_pair: None,
        });
    }
    holder_seminorm(u, alpha)
}

/// `‖u‖'_α = max{|u(x₀)|, [u]_α}`.
pub fn equivalent_norm(u: &GridFunction, alpha: f64, base_index: usize) -> Result<f64> {
    if base_index >= u.len() {
        return Err(Error::IndexOutOfRange {
            index: base_index,
            len: u.len(),
        });
    }
    let report = holder_seminorm(u, alpha)?;
    Ok(norm2(u.value(base_index)).max(report.seminorm))
}

/// Constant `1 + max{diam^α, 1}` in `‖u‖_α ≤ c·‖u‖'_α`.
pub fn equivalent_norm_constant(diameter: f64, alpha: f64) -> f64 {
    1.0 + diameter.powf(alpha).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCheck {
    pub alpha: f64,
    pub beta: f64,
    /// `[u]_α`.
    pub seminorm_lhs: f64,
    /// `diam^{β-α}·[u]_β`.
    pub seminorm_rhs: f64,
    /// `‖u‖_α`.
    pub norm_lhs: f64,
    /// `max{1, diam^{β-α}}·‖u‖_β`.
    pub norm_rhs: f64,
    pub holds: bool,
}

/// `[u]_α ≤ diam^{β-α}[u]_β` and `‖u‖_α ≤ max{1, diam^{β-α}}‖u‖_β`.
pub fn embedding_check(u: &GridFunction, alpha: f64, beta: f64) -> Result<EmbeddingCheck> {
    check_open_exponent(alpha)?;
    check_open_exponent(beta)?;
    if alpha > beta {
        return Err(Error::InvalidArgument(format!(
            "embedding needs alpha <= beta, got {alpha} > {beta}"
        )));
    }
    let a = holder_seminorm(u, alpha)?;
    let b = holder_seminorm(u, beta)?;
    let factor = u.domain().diameter().powf(beta - alpha);
    let seminorm_rhs = factor * b.seminorm;
    let norm_rhs = factor.max(1.0) * b.norm;
    Ok(EmbeddingCheck {
        alpha,
        beta,
        seminorm_lhs: a.seminorm,
        seminorm_rhs,
        norm_lhs: a.norm,
        norm_rhs,
        holds: leq(a.seminorm, seminorm_rhs) && leq(a.norm, norm_rhs),
    })
}

/// `lhs ≤ rhs` up to relative [`ROUNDING_SLACK`].
#[inline]
pub fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + ROUNDING_SLACK * rhs.abs().max(lhs.abs())
}

/// Scalar map `z ↦ φ(z)` with a known Hölder constant at some exponent.
pub struct ScalarMap<'a> {
    pub map: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Analytic `[φ]_{α₂}`.
    pub holder_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Pair attaining the left-hand seminorm.
    pub witness: Option<(usize, usize)>,
}

impl RuleCheck {
    fn new(lhs: &HolderReport, rhs: f64) -> Self {
        Self {
            lhs: lhs.seminorm,
            rhs,
            holds: leq(lhs.seminorm, rhs),
            witness: lhs.argmax_pair,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalculusReport {
    pub sum: RuleCheck,
    pub product: RuleCheck,
    /// Present when `u1` is scalar-valued.
    pub chain: Option<RuleCheck>,
}

impl CalculusReport {
    pub fn all_hold(&self) -> bool {
        self.sum.holds && self.product.holds && self.chain.as_ref().is_none_or(|c| c.holds)
    }
}

/// Sum, product and chain rules at exponents `(α₁, α₂)`.
///
/// The sum and product rules are checked at `α₁`. The chain rule composes
/// `outer` with the scalar `u1` and checks
/// `[φ∘u₁]_{α₁α₂} ≤ [u₁]_{α₁}^{α₂}·[φ]_{α₂}`.
pub fn calculus_rules_check(
    u1: &GridFunction,
    u2: &GridFunction,
    alphas: (f64, f64),
    lambdas: (f64, f64),
    outer: &ScalarMap<'_>,
) -> Result<CalculusReport> {
    let (a1, a2) = alphas;
    check_open_exponent(a1)?;
    check_open_exponent(a2)?;
    u1.check_compatible(u2)?;
    let (l1, l2) = lambdas;
    let s1 = holder_seminorm(u1, a1)?;
    let s2 = holder_seminorm(u2, a1)?;

    let combo = u1.combine(l1, l2, u2)?;
    let sum = RuleCheck::new(
        &holder_seminorm(&combo, a1)?,
        l1.abs() * s1.seminorm + l2.abs() * s2.seminorm,
    );

    let prod_values = u1
        .values()
        .iter()
        .zip(u2.values())
        .map(|(a, b)| a * b)
        .collect();
    let prod = GridFunction::new(u1.domain().clone(), u1.dim(), prod_values)?;
    let product = RuleCheck::new(
        &holder_seminorm(&prod, a1)?,
        s2.sup_norm * s1.seminorm + s1.sup_norm * s2.seminorm,
    );

    let chain = if u1.dim() == 1 {
        let composed = GridFunction::new(
            u1.domain().clone(),
            1,
            u1.values().iter().map(|&z| (outer.map)(z)).collect(),
        )?;
        Some(RuleCheck::new(
            &holder_seminorm(&composed, a1 * a2)?,
            s1.seminorm.powf(a2) * outer.holder_constant,
        ))
    } else {
        None
    };

    Ok(CalculusReport {
        sum,
        product,
        chain,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiEntry {
    pub epsilon: f64,
    /// `None` when no pair lies within `epsilon`.
    pub chi: Option<f64>,
}

/// `χ_ε = sup_u max_{0 < d ≤ ε} |u(x)-u(x̄)|/d^α` for each `ε` (strictly
/// decreasing). The last defined entry is the reported estimate of `χ`.
pub fn noncompactness_chi(
    functions: &[GridFunction],
    alpha: f64,
    epsilons: &[f64],
) -> Result<Vec<ChiEntry>> {
    check_open_exponent(alpha)?;
    if functions.is_empty() {
        return Err(Error::InvalidArgument("empty function family".into()));
    }
    if epsilons.is_empty()
        || epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite())
        || epsilons.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidArgument(
            "epsilons must be positive and strictly decreasing".into(),
        ));
    }
    Ok(epsilons
        .iter()
        .map(|&epsilon| {
            let chi = functions
                .iter()
                .map(|u| pair_max(u, alpha, epsilon).q)
                .fold(f64::NEG_INFINITY, f64::max);
            ChiEntry {
                epsilon,
                chi: (chi > f64::NEG_INFINITY).then_some(chi),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DiscreteDomain;
    use crate::verification::generators::random_piecewise_linear;
    use proptest::prelude::*;

    fn grid(a: f64, b: f64, n: usize) -> std::sync::Arc<DiscreteDomain> {
        DiscreteDomain::uniform_interval(a, b, n).unwrap()
    }

    #[test]
    fn abs_power_bounded_by_one() {
        for &n in &[11, 101, 1001] {
            for &alpha in &[0.25, 0.5, 1.0] {
                let u = GridFunction::from_scalar_fn(grid(-1.0, 1.0, n), |x: f64| {
                    x.abs().powf(alpha)
                })
                .unwrap();
                let r = holder_seminorm(&u, alpha).unwrap();
                assert!(r.seminorm <= 1.0 + 1e-12, "n={n} a={alpha}: {}", r.seminorm);
            }
        }
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let u = GridFunction::constant(grid(0.0, 1.0, 21), &[3.5]).unwrap();
        let r = holder_seminorm(&u, 0.5).unwrap();
        assert_eq!(r.seminorm, 0.0);
        assert_eq!(r.norm, 3.5);
    }

    #[test]
    fn identity_lipschitz_adjacent_pair() {
        let u = GridFunction::from_scalar_fn(grid(0.0, 1.0, 11), |x| x).unwrap();
        let r = holder_seminorm(&u, 1.0).unwrap();
        assert!((r.seminorm - 1.0).abs() < 1e-14);
        assert_eq!(holder_norm(&u, 1.0).unwrap().norm, r.seminorm.max(1.0));
        let (i, j) = r.argmax_pair.unwrap();
        assert!(i < j);
    }

    #[test]
    fn norm_examples() {
        let z = GridFunction::zeros(grid(0.0, 1.0, 11), 1);
        assert_eq!(holder_norm(&z, 0.5).unwrap().norm, 0.0);
        let u = GridFunction::from_scalar_fn(grid(0.0, 1.0, 11), |x| 2.0 * x).unwrap();
        assert!((holder_norm(&u, 1.0).unwrap().norm - 2.0).abs() < 1e-14);
        let r0 = holder_norm(&u, 0.0).unwrap();
        assert_eq!(r0.norm, 2.0);
        assert_eq!(r0.argmax_pair, None);
    }

    #[test]
    fn rejects_bad_exponent_and_singleton() {
        let u = GridFunction::from_scalar_fn(grid(0.0, 1.0, 5), |x| x).unwrap();
        assert!(holder_seminorm(&u, 0.0).is_err());
        assert!(holder_seminorm(&u, 1.5).is_err());
        let single = DiscreteDomain::from_points(vec![0.0], 1).unwrap();
        let s = GridFunction::constant(single, &[1.0]).unwrap();
        assert!(matches!(
            holder_seminorm(&s, 0.5),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn equivalent_norm_examples() {
        let c = GridFunction::constant(grid(0.0, 1.0, 9), &[-2.0]).unwrap();
        assert_eq!(equivalent_norm(&c, 0.5, 4).unwrap(), 2.0);
        let u = GridFunction::from_scalar_fn(grid(0.0, 1.0, 11), |x| x).unwrap();
        assert!((equivalent_norm(&u, 1.0, 0).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            equivalent_norm(&u, 1.0, 11),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn embedding_examples() {
        let u = GridFunction::from_scalar_fn(grid(-1.0, 1.0, 401), |x: f64| x.abs().sqrt())
            .unwrap();
        let same = embedding_check(&u, 0.5, 0.5).unwrap();
        assert!(same.holds);
        assert_eq!(same.seminorm_lhs, same.seminorm_rhs);
        let e = embedding_check(&u, 0.25, 0.5).unwrap();
        assert!(e.holds);
        assert!(
            (e.seminorm_rhs - 2f64.powf(0.25) * holder_seminorm(&u, 0.5).unwrap().seminorm)
                .abs()
                < 1e-15
        );
        assert!(embedding_check(&u, 0.6, 0.5).is_err());
    }

    #[test]
    fn calculus_examples() {
        let d = grid(0.0, 1.0, 101);
        let x = GridFunction::from_scalar_fn(d.clone(), |x| x).unwrap();
        let sqrt_abs = |z: f64| z.abs().sqrt();
        let outer = ScalarMap {
            map: &sqrt_abs,
            holder_constant: 1.0,
        };
        let r = calculus_rules_check(&x, &x, (1.0, 0.5), (1.0, -1.0), &outer).unwrap();
        assert_eq!(r.sum.lhs, 0.0);
        assert!(r.product.holds);
        assert!(r.product.lhs <= 2.0 && r.product.lhs > 1.9);
        assert!((r.product.rhs - 2.0).abs() < 1e-14);
        let chain = r.chain.clone().unwrap();
        assert!(chain.holds);
        assert!(chain.lhs <= 1.0 + 1e-12);
        assert!(r.all_hold());
    }

    #[test]
    fn chi_for_constants_and_powers() {
        let d = grid(-1.0, 1.0, 401);
        let eps = [0.5, 0.1, 0.02];
        let constants: Vec<_> = (0..3)
            .map(|k| GridFunction::constant(d.clone(), &[k as f64]).unwrap())
            .collect();
        for e in noncompactness_chi(&constants, 0.5, &eps).unwrap() {
            assert_eq!(e.chi, Some(0.0));
        }
        let beta = 0.8;
        let pow = vec![GridFunction::from_scalar_fn(d.clone(), |x: f64| x.abs().powf(beta)).unwrap()];
        let curve = noncompactness_chi(&pow, 0.4, &eps).unwrap();
        let chis: Vec<f64> = curve.iter().map(|e| e.chi.unwrap()).collect();
        assert!(chis.windows(2).all(|w| w[1] <= w[0]));
        assert!(chis[2] < 0.5 * chis[0]);
        let same = noncompactness_chi(&pow, beta, &eps).unwrap();
        for e in same {
            assert!(e.chi.unwrap() >= 1.0 - 1e-12);
        }
        let tiny = noncompactness_chi(&pow, 0.5, &[1e-4]).unwrap();
        assert_eq!(tiny[0].chi, None);
        assert!(noncompactness_chi(&pow, 0.5, &[0.1, 0.2]).is_err());
    }

    fn random_u(seed: u64, n: usize, a: f64, b: f64) -> GridFunction {
        random_piecewise_linear(grid(a, b, n), seed, 8, 1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn argmax_reproduces_bitwise(seed in any::<u64>(), alpha in 0.05f64..=1.0) {
            let u = random_u(seed, 60, -1.0, 1.0);
            let r = holder_seminorm(&u, alpha).unwrap();
            let (i, j) = r.argmax_pair.unwrap();
            prop_assert_eq!(holder_quotient(&u, i, j, alpha).to_bits(), r.seminorm.to_bits());
        }

        #[test]
        fn positive_homogeneity(seed in any::<u64>(), lambda in -5.0f64..5.0) {
            let u = random_u(seed, 50, 0.0, 1.0);
            let s = holder_seminorm(&u, 0.5).unwrap().seminorm;
            let ls = holder_seminorm(&u.scaled(lambda).unwrap(), 0.5).unwrap().seminorm;
            prop_assert!((ls - lambda.abs() * s).abs() <= 1e-12 * (1.0 + ls));
        }

        #[test]
        fn exponent_monotone_on_unit_diameter(seed in any::<u64>(), a in 0.05f64..1.0, b in 0.05f64..1.0) {
            let u = random_u(seed, 50, 0.0, 1.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(leq(
                holder_seminorm(&u, lo).unwrap().seminorm,
                holder_seminorm(&u, hi).unwrap().seminorm
            ));
        }

        #[test]
        fn restriction_does_not_increase(seed in any::<u64>(), alpha in 0.05f64..=1.0) {
            let u = random_u(seed, 81, 0.0, 2.0);
            let sub = grid(0.0, 2.0, 11);
            let r = crate::domain::restrict(&u, &sub).unwrap();
            let ru = holder_norm(&r, alpha).unwrap();
            let uu = holder_norm(&u, alpha).unwrap();
            prop_assert!(ru.seminorm <= uu.seminorm);
            prop_assert!(ru.norm <= uu.norm);
        }

        #[test]
        fn equivalent_norm_two_sided(seed in any::<u64>(), base in 0usize..40, alpha in 0.05f64..=1.0) {
            let u = random_u(seed, 40, 0.0, 3.0);
            let eq = equivalent_norm(&u, alpha, base).unwrap();
            let full = holder_norm(&u, alpha).unwrap().norm;
            prop_assert!(leq(eq, full));
            prop_assert!(leq(full, equivalent_norm_constant(3.0, alpha) * eq));
        }

        #[test]
        fn embedding_never_violated(seed in any::<u64>(), a in 0.05f64..=1.0, b in 0.05f64..=1.0) {
            let u = random_u(seed, 40, 0.0, 2.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(embedding_check(&u, lo, hi).unwrap().holds);
        }

        #[test]
        fn calculus_rules_hold(s1 in any::<u64>(), s2 in any::<u64>(), l1 in -3.0f64..3.0, l2 in -3.0f64..3.0) {
            let u1 = random_u(s1, 40, -1.0, 1.0);
            let u2 = random_u(s2, 40, -1.0, 1.0);
            let sin = |z: f64| z.sin();
            let outer = ScalarMap { map: &sin, holder_constant: 1.0 };
            let r = calculus_rules_check(&u1, &u2, (0.7, 1.0), (l1, l2), &outer).unwrap();
            prop_assert!(r.all_hold(), "{:?}", r);
        }
    }
}
