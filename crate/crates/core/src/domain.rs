//! Finite metric spaces and functions sampled on them.
//!
//! A [`DiscreteDomain`] is an ordered set of points with a metric. Points
//! carry coordinates (used for Euclidean distances, CSV I/O and point
//! matching); explicit point clouds may instead supply their own distance
//! matrix. A [`GridFunction`] stores one vector in `R^n` per point.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Absolute coordinate tolerance used when matching points in [`restrict`].
pub const POINT_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Metric {
    Euclidean,
    /// Row-major `len x len` distance matrix.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDomain {
    dim: usize,
    coords: Vec<f64>,
    metric: Metric,
    diameter: f64,
}

impl DiscreteDomain {
    /// `n` equally spaced points on `[a, b]`, both endpoints included.
    pub fn uniform_interval(a: f64, b: f64, n: usize) -> Result<Arc<Self>> {
        check_interval(a, b)?;
        if n < 2 {
            return Err(Error::TooFewPoints { got: n, min: 2 });
        }
        let h = (b - a) / (n - 1) as f64;
        let mut coords: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        coords[n - 1] = b;
        Ok(Arc::new(Self {
            dim: 1,
            coords,
            metric: Metric::Euclidean,
            diameter: b - a,
        }))
    }

    /// Midpoints of `cells` equal subintervals of `[a, b]`.
    pub fn cell_centers(a: f64, b: f64, cells: usize) -> Result<Arc<Self>> {
        check_interval(a, b)?;
        if cells < 1 {
            return Err(Error::TooFewPoints { got: cells, min: 1 });
        }
        let h = (b - a) / cells as f64;
        let coords: Vec<f64> = (0..cells).map(|i| a + (i as f64 + 0.5) * h).collect();
        Self::from_points(coords, 1)
    }

    /// Point cloud in `R^dim` with the Euclidean metric. `coords` is
    /// point-major: point `i` occupies `coords[i*dim..(i+1)*dim]`.
    pub fn from_points(coords: Vec<f64>, dim: usize) -> Result<Arc<Self>> {
        let len = check_coords(&coords, dim)?;
        let mut domain = Self {
            dim,
            coords,
            metric: Metric::Euclidean,
            diameter: 0.0,
        };
        domain.diameter = if dim == 1 {
            let (lo, hi) = domain
                .coords
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                });
            hi - lo
        } else {
            domain.scan_diameter()
        };
        for i in 1..len {
            // duplicates would make the Hölder quotient undefined
            if dim == 1 && domain.coords[..i].contains(&domain.coords[i]) {
                return Err(Error::InvalidDomain(format!("duplicate point {i}")));
            }
        }
        if dim > 1 {
            domain.check_distinct()?;
        }
        Ok(Arc::new(domain))
    }

    /// Point cloud with a user-supplied distance matrix (row-major,
    /// `len x len`). The matrix must be a metric: zero diagonal, symmetric,
    /// positive off the diagonal and satisfying the triangle inequality.
    pub fn with_distances(coords: Vec<f64>, dim: usize, dist: Vec<f64>) -> Result<Arc<Self>> {
        let len = check_coords(&coords, dim)?;
        if dist.len() != len * len {
            return Err(Error::InvalidDomain(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                len * len
            )));
        }
        for i in 0..len {
            if dist[i * len + i] != 0.0 {
                return Err(Error::InvalidDomain(format!("dist({i},{i}) != 0")));
            }
            for j in (i + 1)..len {
                let dij = dist[i * len + j];
                if !(dij.is_finite() && dij > 0.0) || dij != dist[j * len + i] {
                    return Err(Error::InvalidDomain(format!(
                        "dist({i},{j}) must be positive, finite and symmetric"
                    )));
                }
            }
        }
        // exhaustive triangle check; explicit clouds are small
        let violation = (0..len).into_par_iter().find_any(|&i| {
            (0..len).any(|j| {
                (0..len).any(|k| {
                    let lhs = dist[i * len + k];
                    let rhs = dist[i * len + j] + dist[j * len + k];
                    lhs > rhs * (1.0 + 4.0 * f64::EPSILON)
                })
            })
        });
        if let Some(i) = violation {
            return Err(Error::InvalidDomain(format!(
                "triangle inequality violated at point {i}"
            )));
        }
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        Ok(Arc::new(Self {
            dim,
            coords,
            metric: Metric::Explicit(dist),
            diameter,
        }))
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinate dimension of the points.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// First coordinate of point `i`; the position for 1-D domains.
    pub fn x(&self, i: usize) -> f64 {
        self.coords[i * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Euclidean if self.dim == 1 => (self.coords[i] - self.coords[j]).abs(),
            Metric::Euclidean => euclidean(self.point(i), self.point(j)),
            Metric::Explicit(m) => m[i * self.len() + j],
        }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn has_explicit_metric(&self) -> bool {
        matches!(self.metric, Metric::Explicit(_))
    }

    /// Smallest and largest first coordinate.
    pub fn bounds(&self) -> (f64, f64) {
        (0..self.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            (lo.min(self.x(i)), hi.max(self.x(i)))
        })
    }

    /// Same points in the same order with the same metric.
    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }

    /// Index of the point matching `p` within [`POINT_MATCH_TOL`].
    pub fn find_point(&self, p: &[f64]) -> Option<usize> {
        (0..self.len()).find(|&i| {
            self.point(i)
                .iter()
                .zip(p)
                .all(|(a, b)| (a - b).abs() <= POINT_MATCH_TOL)
        })
    }

    fn scan_diameter(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| self.dist(i, j)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    fn check_distinct(&self) -> Result<()> {
        let n = self.len();
        let dup = (0..n)
            .into_par_iter()
            .find_any(|&i| ((i + 1)..n).any(|j| self.point(i) == self.point(j)));
        match dup {
            Some(i) => Err(Error::InvalidDomain(format!("duplicate point {i}"))),
            None => Ok(()),
        }
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    Ok(())
}

fn check_coords(coords: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || coords.len() % dim != 0 {
        return Err(Error::InvalidDomain(format!(
            "{} coordinates do not split into points of dimension {dim}",
            coords.len()
        )));
    }
    if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite { index: i / dim });
    }
    let len = coords.len() / dim;
    if len == 0 {
        return Err(Error::TooFewPoints { got: 0, min: 1 });
    }
    Ok(len)
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean norm of a vector; the absolute value in one dimension.
#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Euclidean norm of `a - b`.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        (a[0] - b[0]).abs()
    } else {
        euclidean(a, b)
    }
}

/// Samples of a function `Ω -> R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Arc<DiscreteDomain>,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<DiscreteDomain>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("codomain dimension is zero".into()));
        }
        if values.len() != domain.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} points of dimension {dim}",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i / dim });
        }
        Ok(Self {
            domain,
            dim,
            values,
        })
    }

    pub fn from_fn<F>(domain: Arc<DiscreteDomain>, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let mut values = vec![0.0; domain.len() * dim];
        for (i, out) in values.chunks_mut(dim).enumerate() {
            f(domain.point(i), out);
        }
        Self::new(domain, dim, values)
    }

    /// Scalar function of the first coordinate.
    pub fn from_scalar_fn<F: Fn(f64) -> f64>(domain: Arc<DiscreteDomain>, f: F) -> Result<Self> {
        let values = (0..domain.len()).map(|i| f(domain.x(i))).collect();
        Self::new(domain, 1, values)
    }

    pub fn constant(domain: Arc<DiscreteDomain>, value: &[f64]) -> Result<Self> {
        let values = value.repeat(domain.len());
        Self::new(domain, value.len(), values)
    }

    pub fn zeros(domain: Arc<DiscreteDomain>, dim: usize) -> Self {
        let values = vec![0.0; domain.len() * dim];
        Self {
            domain,
            dim,
            values,
        }
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    /// Codomain dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// First component at point `i`.
    #[inline]
    pub fn scalar(&self, i: usize) -> f64 {
        self.values[i * self.dim]
    }

    /// `‖u‖₀ = max_x |u(x)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.dim)
            .map(norm2)
            .fold(0.0, f64::max)
    }

    pub fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if !self.domain.same_as(&other.domain) {
            return Err(Error::DomainMismatch(
                "functions live on different domains".into(),
            ));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "codomain dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, b: f64, other: &GridFunction) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Self::new(self.domain.clone(), self.dim, values)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.combine(1.0, -1.0, other)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.combine(1.0, 1.0, other)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.domain.clone(),
            self.dim,
            self.values.iter().map(|v| lambda * v).collect(),
        )
    }

    /// Same values on another domain with identical points (e.g. a target
    /// grid that is a distinct but equal allocation).
    pub fn with_domain(&self, domain: Arc<DiscreteDomain>) -> Result<Self> {
        if domain.len() != self.len() {
            return Err(Error::DomainMismatch("point counts differ".into()));
        }
        Self::new(domain, self.dim, self.values.clone())
    }

    /// Writes `x…, u…` columns with a mandatory header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = Vec::new();
        header.extend(column_names("x", self.domain.dim()));
        header.extend(column_names("u", self.dim));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let row: Vec<String> = self
                .domain
                .point(i)
                .iter()
                .chain(self.value(i))
                .map(|v| fmt_f64(*v))
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv). Header columns
    /// starting with `x` are coordinates, columns starting with `u` values;
    /// coordinates must come first. The domain gets the Euclidean metric.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        let n_coords = header.iter().take_while(|h| h.trim().starts_with('x')).count();
        let n_values = header.len() - n_coords;
        if n_coords == 0 || n_values == 0 {
            return Err(Error::Csv {
                line: 1,
                reason: "header must name x… coordinate columns followed by u… value columns"
                    .into(),
            });
        }
        if let Some(bad) = header.iter().skip(n_coords).find(|h| !h.trim().starts_with('u')) {
            return Err(Error::Csv {
                line: 1,
                reason: format!("unexpected column `{bad}` after the coordinates"),
            });
        }
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != header.len() {
                return Err(Error::Csv {
                    line,
                    reason: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Csv {
                    line,
                    reason: format!("`{field}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        line,
                        reason: format!("non-finite entry `{field}`"),
                    });
                }
                if k < n_coords {
                    coords.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        let domain = DiscreteDomain::from_points(coords, n_coords)?;
        Self::new(domain, n_values, values)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

fn column_names(prefix: &str, count: usize) -> Vec<String> {
    if count == 1 {
        vec![prefix.to_string()]
    } else {
        (0..count).map(|k| format!("{prefix}{k}")).collect()
    }
}

/// Shortest round-trip decimal representation, switching to scientific
/// notation for very small or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `E_l u = u|_sub`: copies the values of `u` at the points of `sub`.
pub fn restrict(u: &GridFunction, sub: &Arc<DiscreteDomain>) -> Result<GridFunction> {
    let parent = u.domain();
    if parent.same_as(sub) {
        return Ok(u.clone());
    }
    if sub.dim() != parent.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subdomain points have dimension {}, parent {}",
            sub.dim(),
            parent.dim()
        )));
    }
    // sort parent by first coordinate, then binary search a tolerance window
    let mut order: Vec<usize> = (0..parent.len()).collect();
    order.sort_by(|&i, &j| parent.x(i).total_cmp(&parent.x(j)));
    let firsts: Vec<f64> = order.iter().map(|&i| parent.x(i)).collect();
    let mut values = Vec::with_capacity(sub.len() * u.dim());
    for k in 0..sub.len() {
        let p = sub.point(k);
        let start = firsts.partition_point(|&x| x < p[0] - POINT_MATCH_TOL);
        let hit = order[start..]
            .iter()
            .take_while(|&&i| parent.x(i) <= p[0] + POINT_MATCH_TOL)
            .copied()
            .find(|&i| {
                parent
                    .point(i)
                    .iter()
                    .zip(p)
                    .all(|(a, b)| (a - b).abs() <= POINT_MATCH_TOL)
            });
        match hit {
            Some(i) => values.extend_from_slice(u.value(i)),
            None => return Err(Error::UnmatchedPoint { coords: p.to_vec() }),
        }
    }
    GridFunction::new(sub.clone(), u.dim(), values)
}
