//! Finite measures given by nodes and nonnegative weights.
//!
//! Composite Lebesgue rules and arbitrary Nyström measures share one type,
//! [`QuadratureMeasure`]; integration is the weighted sum `Σ w_η u(η)`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use crate::domain::{fmt_f64, DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::sum::{compensated_sum, VecSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Trapezoid,
    Midpoint,
    GaussLegendre,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Trapezoid => "trapezoid",
            Scheme::Midpoint => "midpoint",
            Scheme::GaussLegendre => "gauss_legendre",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(Scheme::Trapezoid),
            "midpoint" => Ok(Scheme::Midpoint),
            "gauss_legendre" => Ok(Scheme::GaussLegendre),
            other => Err(Error::UnknownScheme(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMeasure {
    domain: Arc<DiscreteDomain>,
    weights: Vec<f64>,
    total_mass: f64,
    scheme: Option<Scheme>,
}

impl QuadratureMeasure {
    /// Composite rule on `[a, b]`. For the midpoint rule `n` is the number of
    /// cells; for Gauss–Legendre it is the number of nodes of one rule.
    pub fn lebesgue_rule(a: f64, b: f64, n: usize, scheme: Scheme) -> Result<Self> {
        let (domain, weights) = match scheme {
            Scheme::Trapezoid => {
                let domain = DiscreteDomain::uniform_interval(a, b, n)?;
                let h = (b - a) / (n - 1) as f64;
                let mut w = vec![h; n];
                w[0] = 0.5 * h;
                w[n - 1] = 0.5 * h;
                (domain, w)
            }
            Scheme::Midpoint => {
                let domain = DiscreteDomain::cell_centers(a, b, n)?;
                (domain, vec![(b - a) / n as f64; n])
            }
            Scheme::GaussLegendre => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidInterval { a, b });
                }
                if n < 1 {
                    return Err(Error::TooFewPoints { got: n, min: 1 });
                }
                let (t, w) = gauss_legendre(n);
                let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
                let nodes = t.iter().map(|t| c + r * t).collect();
                let domain = DiscreteDomain::from_points(nodes, 1)?;
                (domain, w.iter().map(|w| r * w).collect())
            }
        };
        let mut mu = Self::nystrom(domain, weights)?;
        mu.scheme = Some(scheme);
        Ok(mu)
    }

    /// `μ = Σ w_η δ_η` on the points of `domain`.
    pub fn nystrom(domain: Arc<DiscreteDomain>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} nodes",
                weights.len(),
                domain.len()
            )));
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if weight < 0.0 {
                return Err(Error::UnstableRule { index, weight });
            }
        }
        let total_mass = compensated_sum(weights.iter().copied());
        if !total_mass.is_finite() {
            return Err(Error::InvalidArgument("total mass is not finite".into()));
        }
        Ok(Self {
            domain,
            weights,
            total_mass,
            scheme: None,
        })
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Rule family, if built by [`lebesgue_rule`](Self::lebesgue_rule).
    pub fn scheme(&self) -> Option<Scheme> {
        self.scheme
    }

    /// `∫ u dμ = Σ w_η u(η)`, componentwise.
    pub fn integrate(&self, u: &GridFunction) -> Result<Vec<f64>> {
        if !self.domain.same_as(u.domain()) {
            return Err(Error::DomainMismatch(
                "function is not sampled on the nodes of the measure".into(),
            ));
        }
        let mut acc = VecSum::new(u.dim());
        for (i, &w) in self.weights.iter().enumerate() {
            acc.add_scaled(w, u.value(i));
        }
        Ok(acc.into_vec())
    }

    /// Two-column `x,w` table for one-dimensional nodes.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        if self.domain.dim() != 1 {
            return Err(Error::DimensionMismatch(
                "node/weight CSV needs one-dimensional nodes".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "w"])?;
        for (i, &wt) in self.weights.iter().enumerate() {
            w.write_record([fmt_f64(self.domain.x(i)), fmt_f64(wt)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() != 2 {
            return Err(Error::Csv {
                line: 1,
                reason: "expected the two columns x,w".into(),
            });
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for record in r.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let parse = |k: usize| -> Result<f64> {
                let field = record.get(k).unwrap_or("");
                field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Csv {
                        line,
                        reason: format!("`{field}` is not a finite number"),
                    })
            };
            nodes.push(parse(0)?);
            weights.push(parse(1)?);
        }
        Self::nystrom(DiscreteDomain::from_points(nodes, 1)?, weights)
    }
}

/// Nodes (ascending) and weights of the `n`-point Gauss–Legendre rule on
/// `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn integral_of<F: Fn(f64) -> f64>(mu: &QuadratureMeasure, f: F) -> f64 {
        let u = GridFunction::from_scalar_fn(mu.domain().clone(), f).unwrap();
        mu.integrate(&u).unwrap()[0]
    }

    #[test]
    fn trapezoid_constant() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 17, Scheme::Trapezoid).unwrap();
        assert!((integral_of(&mu, |_| 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_degree_nine() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 5, Scheme::GaussLegendre).unwrap();
        assert!((integral_of(&mu, |x| x.powi(9)) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn midpoint_hand_value() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 4, Scheme::Midpoint).unwrap();
        assert!((integral_of(&mu, |x| x * x) - 0.328125).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_sine() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, std::f64::consts::PI, 101, Scheme::Trapezoid)
            .unwrap();
        assert!((integral_of(&mu, f64::sin) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn total_mass_of_every_scheme() {
        for scheme in [Scheme::Trapezoid, Scheme::Midpoint, Scheme::GaussLegendre] {
            for &n in &[2, 7, 64, 800] {
                let mu = QuadratureMeasure::lebesgue_rule(-3.0, 2.0, n, scheme).unwrap();
                assert!((mu.total_mass() - 5.0).abs() <= 5e-13 * 5.0, "{scheme} {n}");
            }
        }
    }

    #[test]
    fn gauss_legendre_rules_are_symmetric_and_positive() {
        for n in 1..40 {
            let (x, w) = gauss_legendre(n);
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
                assert!(w[i] > 0.0);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn unknown_scheme_and_negative_weight() {
        assert!(matches!(
            "simpson".parse::<Scheme>(),
            Err(Error::UnknownScheme(_))
        ));
        let d = DiscreteDomain::uniform_interval(0.0, 1.0, 3).unwrap();
        let err = QuadratureMeasure::nystrom(d, vec![0.5, -0.1, 0.5]).unwrap_err();
        assert!(err.to_string().contains("unstable rule"));
    }

    #[test]
    fn evaluation_map_and_null_measure() {
        let single = DiscreteDomain::from_points(vec![0.3], 1).unwrap();
        let mu = QuadratureMeasure::nystrom(single, vec![2.5]).unwrap();
        assert_eq!(integral_of(&mu, |x| x * 10.0), 2.5 * 3.0);
        let d = DiscreteDomain::uniform_interval(0.0, 1.0, 5).unwrap();
        let null = QuadratureMeasure::nystrom(d, vec![0.0; 5]).unwrap();
        assert_eq!(integral_of(&null, f64::exp), 0.0);
    }

    #[test]
    fn nystrom_with_trapezoid_weights_is_identical() {
        let rule = QuadratureMeasure::lebesgue_rule(0.0, 2.0, 33, Scheme::Trapezoid).unwrap();
        let mu =
            QuadratureMeasure::nystrom(rule.domain().clone(), rule.weights().to_vec()).unwrap();
        assert_eq!(
            integral_of(&rule, f64::cos).to_bits(),
            integral_of(&mu, f64::cos).to_bits()
        );
    }

    #[test]
    fn trapezoid_refinement_ratio_is_four() {
        let err = |n| {
            let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, n, Scheme::Trapezoid).unwrap();
            (integral_of(&mu, f64::exp) - (1f64.exp() - 1.0)).abs()
        };
        for n in [11usize, 21, 41, 81] {
            let ratio = err(n) / err(2 * n - 1);
            assert!((ratio - 4.0).abs() < 0.6, "{ratio}");
        }
    }

    #[test]
    fn gauss_legendre_spectral() {
        let exact = 1f64.exp() - (-1f64).exp();
        let mu = QuadratureMeasure::lebesgue_rule(-1.0, 1.0, 12, Scheme::GaussLegendre).unwrap();
        assert!((integral_of(&mu, f64::exp) - exact).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 9, Scheme::GaussLegendre).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        let back = QuadratureMeasure::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.weights(), mu.weights());
        assert_eq!(back.domain().coords(), mu.domain().coords());
    }

    #[test]
    fn domain_mismatch() {
        let mu = QuadratureMeasure::lebesgue_rule(0.0, 1.0, 9, Scheme::Trapezoid).unwrap();
        let other = DiscreteDomain::uniform_interval(0.0, 1.0, 10).unwrap();
        let u = GridFunction::constant(other, &[1.0]).unwrap();
        assert!(matches!(mu.integrate(&u), Err(Error::DomainMismatch(_))));
    }

    proptest! {
        #[test]
        fn linear_and_bounded(
            vals in prop::collection::vec(-10.0f64..10.0, 2 * 21),
            c in -3.0f64..3.0,
        ) {
            let mu = QuadratureMeasure::lebesgue_rule(0.0, 2.0, 21, Scheme::Trapezoid).unwrap();
            let d = mu.domain().clone();
            let u = GridFunction::new(d.clone(), 1, vals[..21].to_vec()).unwrap();
            let v = GridFunction::new(d.clone(), 1, vals[21..].to_vec()).unwrap();
            let lhs = mu.integrate(&u.combine(c, 1.0, &v).unwrap()).unwrap()[0];
            let rhs = c * mu.integrate(&u).unwrap()[0] + mu.integrate(&v).unwrap()[0];
            prop_assert!((lhs - rhs).abs() <= 1e-13 * 100.0);
            prop_assert!(mu.integrate(&u).unwrap()[0].abs() <= mu.total_mass() * u.sup_norm() * (1.0 + 1e-15));
            let k = GridFunction::constant(d, &[c]).unwrap();
            prop_assert!((mu.integrate(&k).unwrap()[0] - c * mu.total_mass()).abs() <= 1e-14);
        }
    }
}
