//! Functions whose discrete Hölder seminorms separate under refinement.
//!
//! All refinement studies use cell-centred dyadic grids on `[-1/2, 1/2]`.
//! Such grids never contain `0`, so the singular point of `-1/ln|x|` is
//! approached ever more closely as the grid is refined.

use std::f64::consts::PI;
use std::io::Write;

use crate::domain::{fmt_f64, DiscreteDomain, GridFunction};
use crate::error::Result;
use crate::holder::{holder_seminorm, leq};

/// Cell counts of the default refinement levels.
pub const PATHOLOGY_LEVELS: [usize; 4] = [64, 128, 256, 512];

/// Exponents tested for the logarithmic pathology.
pub const LOG_ALPHAS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Largest admitted relative change of the Weierstrass seminorm between
/// consecutive levels.
pub const WEIERSTRASS_TOLERANCE: f64 = 0.05;

pub const WEIERSTRASS_A: f64 = 0.5;
pub const WEIERSTRASS_B: f64 = 13.0;
pub const WEIERSTRASS_TERMS: usize = 60;

/// `-1/ln|x|`, continuous at `0` with value `0`.
pub fn log_pathology(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -1.0 / x.abs().ln()
    }
}

/// `Σ_{k<terms} a^k cos(b^k π x)`.
///
/// While `b^k` is an exact integer in double precision the phase is
/// reduced modulo `2` before scaling by `π`.
pub fn weierstrass(x: f64, a: f64, b: f64, terms: usize) -> f64 {
    let mut sum = 0.0;
    let mut ak = 1.0;
    let mut bk = 1.0;
    for _ in 0..terms {
        let phase = if bk < 9.0e15 {
            (bk * x).rem_euclid(2.0) * PI
        } else {
            bk * PI * x
        };
        sum += ak * phase.cos();
        ak *= a;
        bk *= b;
    }
    sum
}

/// Exponent `-log_b a` at which the Weierstrass sum is Hölder.
pub fn weierstrass_exponent() -> f64 {
    -WEIERSTRASS_A.ln() / WEIERSTRASS_B.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathologyReport {
    pub levels: Vec<usize>,
    /// One row per entry of [`LOG_ALPHAS`], one column per level.
    pub log_seminorms: Vec<Vec<f64>>,
    pub log_strictly_increasing: Vec<bool>,
    pub weierstrass_alpha: f64,
    pub weierstrass_seminorms: Vec<f64>,
    /// Ratios of consecutive levels.
    pub weierstrass_ratios: Vec<f64>,
    pub weierstrass_bounded: bool,
    /// `[W]_1` per level; grows without bound.
    pub weierstrass_lipschitz: Vec<f64>,
    pub weierstrass_lipschitz_grows: bool,
    /// `(α, [sin]_α, diam^{1-α}·sup|cos|)` on `[0, 2]`.
    pub smooth: Vec<(f64, f64, f64)>,
    pub smooth_holds: bool,
}

impl PathologyReport {
    pub fn passed(&self) -> bool {
        self.log_strictly_increasing.iter().all(|&b| b)
            && self.weierstrass_bounded
            && self.weierstrass_lipschitz_grows
            && self.smooth_holds
    }

    /// Long format `function,alpha,cells,seminorm`; the smooth rows carry
    /// the bound in place of a cell count.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["function", "alpha", "cells", "seminorm"])?;
        for (alpha, row) in LOG_ALPHAS.iter().zip(&self.log_seminorms) {
            for (cells, s) in self.levels.iter().zip(row) {
                w.write_record(["log", &fmt_f64(*alpha), &cells.to_string(), &fmt_f64(*s)])?;
            }
        }
        for (cells, s) in self.levels.iter().zip(&self.weierstrass_seminorms) {
            w.write_record(["weierstrass", &fmt_f64(self.weierstrass_alpha), &cells.to_string(), &fmt_f64(*s)])?;
        }
        for (cells, s) in self.levels.iter().zip(&self.weierstrass_lipschitz) {
            w.write_record(["weierstrass", "1", &cells.to_string(), &fmt_f64(*s)])?;
        }
        for (alpha, s, bound) in &self.smooth {
            w.write_record(["sin", &fmt_f64(*alpha), "", &fmt_f64(*s)])?;
            w.write_record(["sin_bound", &fmt_f64(*alpha), "", &fmt_f64(*bound)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn pathology_suite() -> Result<PathologyReport> {
    pathology_suite_with(&PATHOLOGY_LEVELS)
}

/// Runs the suite on cell-centred grids with the given cell counts.
pub fn pathology_suite_with(levels: &[usize]) -> Result<PathologyReport> {
    let domains = levels
        .iter()
        .map(|&c| DiscreteDomain::cell_centers(-0.5, 0.5, c))
        .collect::<Result<Vec<_>>>()?;

    let mut log_seminorms = Vec::new();
    let logs = domains
        .iter()
        .map(|d| GridFunction::from_scalar_fn(d.clone(), log_pathology))
        .collect::<Result<Vec<_>>>()?;
    for &alpha in &LOG_ALPHAS {
        let row = logs
            .iter()
            .map(|u| holder_seminorm(u, alpha).map(|r| r.seminorm))
            .collect::<Result<Vec<_>>>()?;
        log_seminorms.push(row);
    }
    let log_strictly_increasing = log_seminorms
        .iter()
        .map(|row| row.windows(2).all(|w| w[1] > w[0]))
        .collect();

    let wa = weierstrass_exponent();
    let ws = domains
        .iter()
        .map(|d| {
            GridFunction::from_scalar_fn(d.clone(), |x| {
                weierstrass(x, WEIERSTRASS_A, WEIERSTRASS_B, WEIERSTRASS_TERMS)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let weierstrass_seminorms = ws
        .iter()
        .map(|u| holder_seminorm(u, wa).map(|r| r.seminorm))
        .collect::<Result<Vec<_>>>()?;
    let weierstrass_ratios: Vec<f64> = weierstrass_seminorms
        .windows(2)
        .map(|w| w[1] / w[0])
        .collect();
    let weierstrass_bounded = weierstrass_ratios
        .iter()
        .all(|r| (r - 1.0).abs() < WEIERSTRASS_TOLERANCE);
    let weierstrass_lipschitz = ws
        .iter()
        .map(|u| holder_seminorm(u, 1.0).map(|r| r.seminorm))
        .collect::<Result<Vec<_>>>()?;
    let weierstrass_lipschitz_grows = weierstrass_lipschitz.windows(2).all(|w| w[1] > w[0]);

    let sin_domain = DiscreteDomain::uniform_interval(0.0, 2.0, 1001)?;
    let sin = GridFunction::from_scalar_fn(sin_domain.clone(), f64::sin)?;
    let mut smooth = Vec::new();
    for &alpha in &[0.25, 0.5, 0.75, 1.0] {
        let s = holder_seminorm(&sin, alpha)?.seminorm;
        // sup|cos| on [0, 2] is attained at 0
        let bound = sin_domain.diameter().powf(1.0 - alpha) * 1.0;
        smooth.push((alpha, s, bound));
    }
    let smooth_holds = smooth.iter().all(|&(_, s, b)| leq(s, b));

    Ok(PathologyReport {
        levels: levels.to_vec(),
        log_seminorms,
        log_strictly_increasing,
        weierstrass_alpha: wa,
        weierstrass_seminorms,
        weierstrass_ratios,
        weierstrass_bounded,
        weierstrass_lipschitz,
        weierstrass_lipschitz_grows,
        smooth,
        smooth_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_value() {
        assert!((weierstrass_exponent() - 0.270_238_154_427_319_5).abs() < 1e-12);
    }

    #[test]
    fn weierstrass_at_zero_sums_geometric_series() {
        let w = weierstrass(0.0, 0.5, 13.0, 60);
        assert!((w - 2.0).abs() < 1e-15);
    }

    #[test]
    fn log_pathology_values() {
        assert_eq!(log_pathology(0.0), 0.0);
        assert!((log_pathology(0.5) - 1.0 / 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_pathology(-0.25), log_pathology(0.25));
    }

    #[test]
    fn default_suite_passes() {
        let r = pathology_suite().unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.log_seminorms.len(), LOG_ALPHAS.len());
        let half = &r.log_seminorms[4];
        assert!(half.windows(2).all(|w| w[1] > w[0]));
        let (alpha, s, b) = r.smooth[1];
        assert_eq!(alpha, 0.5);
        assert!(s <= 2f64.sqrt() && (b - 2f64.sqrt()).abs() < 1e-15);
    }
}
