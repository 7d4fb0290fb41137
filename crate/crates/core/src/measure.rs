//! Atomic quadrature measures, balls, and functions sampled on atoms.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::metric::{euclidean_distance, Location, MetricSpace};

/// Exact pairwise diameters are computed up to this many atoms; larger
/// Euclidean measures in `d ≥ 2` use the bounding-box diagonal.
const EXACT_DIAMETER_LIMIT: usize = 4096;

/// Finite weighted point set approximating an `n`-dimensional measure.
///
/// Immutable after construction. `h` is the resolution below which the
/// quadrature is not faithful; radius-dependent operations never go below it.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    space: MetricSpace,
    coords: Vec<f64>,
    weights: Vec<f64>,
    dimension: f64,
    resolution: f64,
    growth_hint: Option<f64>,
    diameter: f64,
    metadata: Map<String, Value>,
}

/// Borrowed view of a point handed to kernel evaluators.
#[derive(Debug, Clone, Copy)]
pub struct Site<'a> {
    pub index: Option<usize>,
    pub coords: Option<&'a [f64]>,
}

impl AtomicMeasure {
    /// `points` holds one coordinate vector per atom for Euclidean spaces and
    /// must be empty for explicit tables.
    pub fn new(
        space: MetricSpace,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        dimension: f64,
        resolution: f64,
    ) -> Result<Self> {
        if !(dimension > 0.0 && dimension.is_finite()) {
            return Err(Error::param("n", format!("dimension must be positive, got {dimension}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::param("h", format!("resolution must be positive, got {resolution}")));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::schema(format!("weights[{i}]"), format!("weight {w} is not positive")));
            }
        }
        let mut coords = Vec::new();
        match &space {
            MetricSpace::Euclidean { ambient_dim } => {
                if *ambient_dim == 0 {
                    return Err(Error::param("ambient_dim", "must be at least 1"));
                }
                if points.len() != weights.len() {
                    return Err(Error::schema(
                        "points",
                        format!("{} points but {} weights", points.len(), weights.len()),
                    ));
                }
                coords.reserve(points.len() * ambient_dim);
                for (i, p) in points.iter().enumerate() {
                    if p.len() != *ambient_dim {
                        return Err(Error::schema(
                            format!("points[{i}]"),
                            format!("point has {} coordinates, ambient_dim is {ambient_dim}", p.len()),
                        ));
                    }
                    if let Some(k) = p.iter().position(|c| !c.is_finite()) {
                        return Err(Error::schema(format!("points[{i}][{k}]"), "coordinate is not finite"));
                    }
                    coords.extend_from_slice(p);
                }
            }
            MetricSpace::Explicit { table } => {
                if !points.is_empty() {
                    return Err(Error::schema("points", "explicit metric spaces take no coordinates"));
                }
                if table.len() != weights.len() {
                    return Err(Error::schema(
                        "distance_table",
                        format!("table has {} rows but there are {} weights", table.len(), weights.len()),
                    ));
                }
            }
        }
        let mut measure = AtomicMeasure {
            space,
            coords,
            weights,
            dimension,
            resolution,
            growth_hint: None,
            diameter: 0.0,
            metadata: Map::new(),
        };
        measure.diameter = measure.compute_diameter();
        Ok(measure)
    }

    pub fn with_growth_hint(mut self, constant: Option<f64>) -> Self {
        self.growth_hint = constant;
        self
    }

    pub fn with_metadata(mut self, metadata: Map<String, Value>) -> Self {
        self.metadata = metadata;
        self
    }

    /// Same atoms, reinterpreted with another dimension parameter `n`.
    pub fn with_dimension(mut self, dimension: f64) -> Result<Self> {
        if !(dimension > 0.0 && dimension.is_finite()) {
            return Err(Error::param("n", format!("dimension must be positive, got {dimension}")));
        }
        self.dimension = dimension;
        Ok(self)
    }

    fn compute_diameter(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        match &self.space {
            MetricSpace::Explicit { table } => table
                .rows()
                .flat_map(|r| r.iter().copied())
                .fold(0.0, f64::max),
            MetricSpace::Euclidean { ambient_dim: 1 } => {
                let (lo, hi) = self
                    .coords
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                hi - lo
            }
            MetricSpace::Euclidean { ambient_dim } if n <= EXACT_DIAMETER_LIMIT => {
                let d = *ambient_dim;
                let mut best = 0.0f64;
                for i in 0..n {
                    let a = &self.coords[i * d..(i + 1) * d];
                    for j in i + 1..n {
                        best = best.max(euclidean_distance(a, &self.coords[j * d..(j + 1) * d]));
                    }
                }
                best
            }
            MetricSpace::Euclidean { ambient_dim } => {
                let d = *ambient_dim;
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in self.coords.chunks(d) {
                    for k in 0..d {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                euclidean_distance(&lo, &hi)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Dimension parameter `n` of the growth condition.
    pub fn n(&self) -> f64 {
        self.dimension
    }

    /// Resolution `h`.
    pub fn h(&self) -> f64 {
        self.resolution
    }

    pub fn growth_hint(&self) -> Option<f64> {
        self.growth_hint
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn metadata(&self) -> &Map<String, Value> {
        &self.metadata
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Coordinates of atom `i` (Euclidean spaces only).
    #[inline]
    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match self.space {
            MetricSpace::Euclidean { ambient_dim } => Some(&self.coords[i * ambient_dim..(i + 1) * ambient_dim]),
            MetricSpace::Explicit { .. } => None,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        match self.space {
            MetricSpace::Euclidean { ambient_dim } => self.coords.chunks(ambient_dim).map(<[f64]>::to_vec).collect(),
            MetricSpace::Explicit { .. } => Vec::new(),
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.space {
            MetricSpace::Euclidean { ambient_dim } => {
                let d = *ambient_dim;
                euclidean_distance(&self.coords[i * d..(i + 1) * d], &self.coords[j * d..(j + 1) * d])
            }
            MetricSpace::Explicit { table } => table.get(i, j),
        }
    }

    /// Distance from a location to atom `j`.
    #[inline]
    pub fn dist_to(&self, loc: &Location, j: usize) -> f64 {
        match loc {
            Location::Atom(i) => self.dist(*i, j),
            Location::Point(p) => {
                let d = self.space.ambient_dim();
                euclidean_distance(p, &self.coords[j * d..(j + 1) * d])
            }
        }
    }

    /// Distance between two locations.
    pub fn dist_between(&self, a: &Location, b: &Location) -> f64 {
        match (a, b) {
            (Location::Atom(i), _) => self.dist_to(b, *i),
            (_, Location::Atom(j)) => self.dist_to(a, *j),
            (Location::Point(p), Location::Point(q)) => euclidean_distance(p, q),
        }
    }

    /// Fills `out[j] = d(loc, atom j)`.
    pub fn distances_into(&self, loc: &Location, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        match (&self.space, loc) {
            (MetricSpace::Explicit { table }, Location::Atom(i)) => {
                out.copy_from_slice(table.row(*i));
            }
            (MetricSpace::Euclidean { ambient_dim: 1 }, _) => {
                let x = match loc {
                    Location::Atom(i) => self.coords[*i],
                    Location::Point(p) => p[0],
                };
                for (o, &c) in out.iter_mut().zip(&self.coords) {
                    *o = (x - c).abs();
                }
            }
            _ => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = self.dist_to(loc, j);
                }
            }
        }
    }

    pub fn distances_from(&self, loc: &Location) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.distances_into(loc, &mut out);
        out
    }

    /// Validates that a location refers to this measure's space.
    pub fn check_location(&self, loc: &Location) -> Result<()> {
        match loc {
            Location::Atom(i) if *i < self.len() => Ok(()),
            Location::Atom(i) => Err(Error::param("point", format!("atom index {i} out of range"))),
            Location::Point(p) => match self.space {
                MetricSpace::Euclidean { ambient_dim } if p.len() == ambient_dim && p.iter().all(|c| c.is_finite()) => {
                    Ok(())
                }
                MetricSpace::Euclidean { ambient_dim } => Err(Error::param(
                    "point",
                    format!("expected {ambient_dim} finite coordinates, got {:?}", p),
                )),
                MetricSpace::Explicit { .. } => {
                    Err(Error::param("point", "explicit metric spaces only support atom locations"))
                }
            },
        }
    }

    pub fn site<'a>(&'a self, loc: &'a Location) -> Site<'a> {
        match loc {
            Location::Atom(i) => Site {
                index: Some(*i),
                coords: self.coords(*i),
            },
            Location::Point(p) => Site {
                index: None,
                coords: Some(p),
            },
        }
    }

    pub fn atom_site(&self, i: usize) -> Site<'_> {
        Site {
            index: Some(i),
            coords: self.coords(i),
        }
    }

    /// Indices of atoms with `d(center, atom) < radius`, ascending.
    pub fn atoms_in(&self, ball: &Ball) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.dist_to(&ball.center, j) < ball.radius)
            .collect()
    }
}

/// Open ball `B(x, r) = {y : d(x, y) < r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Location,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: impl Into<Location>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param("radius", format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball {
            center: center.into(),
            radius,
        })
    }

    /// `kB`: same center, radius multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Ball {
        Ball {
            center: self.center.clone(),
            radius: self.radius * k,
        }
    }

    pub fn contains(&self, measure: &AtomicMeasure, atom: usize) -> bool {
        measure.dist_to(&self.center, atom) < self.radius
    }
}

/// `μ(B)`: sum of the weights of atoms strictly inside the ball, in atom-index order.
pub fn ball_mass(measure: &AtomicMeasure, ball: &Ball) -> f64 {
    let mut mass = 0.0;
    for j in 0..measure.len() {
        if measure.dist_to(&ball.center, j) < ball.radius {
            mass += measure.weight(j);
        }
    }
    mass
}

/// Atoms sorted by distance from a center with prefix masses, answering
/// `μ(B(center, r))` in `O(log N)` per radius.
#[derive(Debug, Clone)]
pub struct MassProfile {
    dists: Vec<f64>,
    order: Vec<usize>,
    prefix: Vec<f64>,
}

impl MassProfile {
    pub fn new(measure: &AtomicMeasure, center: &Location) -> Self {
        let raw = measure.distances_from(center);
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
        let dists: Vec<f64> = order.iter().map(|&j| raw[j]).collect();
        let mut prefix = Vec::with_capacity(order.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &j in &order {
            acc += measure.weight(j);
            prefix.push(acc);
        }
        MassProfile { dists, order, prefix }
    }

    /// Number of atoms strictly within `radius`.
    pub fn count_within(&self, radius: f64) -> usize {
        self.dists.partition_point(|&d| d < radius)
    }

    pub fn mass_within(&self, radius: f64) -> f64 {
        self.prefix[self.count_within(radius)]
    }

    /// Sorted distances.
    pub fn distances(&self) -> &[f64] {
        &self.dists
    }

    /// Atom indices in the sorted order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// Real values aligned one-to-one with the atoms of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(SampledFunction { values })
    }

    pub fn zeros(len: usize) -> Self {
        SampledFunction { values: vec![0.0; len] }
    }

    pub fn constant(len: usize, c: f64) -> Self {
        SampledFunction { values: vec![c; len] }
    }

    pub fn from_fn(measure: &AtomicMeasure, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((0..measure.len()).map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_aligned(&self, measure: &AtomicMeasure) -> Result<()> {
        if self.values.len() != measure.len() {
            return Err(Error::Misaligned {
                expected: measure.len(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        SampledFunction {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        SampledFunction {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SampledFunction, b: f64) -> Self {
        SampledFunction {
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    /// Zero outside the ball.
    pub fn truncated(&self, measure: &AtomicMeasure, ball: &Ball) -> Self {
        SampledFunction {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(j, &v)| if ball.contains(measure, j) { v } else { 0.0 })
                .collect(),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64], weights: &[f64]) -> AtomicMeasure {
        AtomicMeasure::new(
            MetricSpace::euclidean(1),
            points.iter().map(|&p| vec![p]).collect(),
            weights.to_vec(),
            1.0,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn strict_ball_membership() {
        let m = line(&[0.5], &[1.0]);
        let inside = Ball::new(Location::Point(vec![0.0]), 1.0).unwrap();
        assert_eq!(ball_mass(&m, &inside), 1.0);
        let m = line(&[1.0], &[1.0]);
        assert_eq!(ball_mass(&m, &inside), 0.0);
    }

    #[test]
    fn rejects_bad_weights_and_dimensions() {
        let err = AtomicMeasure::new(MetricSpace::euclidean(1), vec![vec![0.0], vec![1.0]], vec![1.0, 0.0], 1.0, 0.1)
            .unwrap_err();
        assert!(err.to_string().contains("weights[1]"), "{err}");
        let err = AtomicMeasure::new(MetricSpace::euclidean(3), vec![vec![0.0, 1.0]], vec![1.0], 1.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("points[0]"), "{err}");
        assert!(Ball::new(0, 0.0).is_err());
    }

    #[test]
    fn profile_agrees_with_direct_mass() {
        let m = line(&[0.0, 0.1, 0.3, 0.7, 0.75], &[0.1, 0.2, 0.3, 0.25, 0.15]);
        let p = MassProfile::new(&m, &Location::Atom(2));
        for r in [0.05, 0.2, 0.3, 0.4, 0.45, 1.0] {
            let direct = ball_mass(&m, &Ball::new(2, r).unwrap());
            assert!((p.mass_within(r) - direct).abs() < 1e-15, "r = {r}");
        }
    }

    #[test]
    fn sampled_function_rejects_non_finite() {
        assert!(matches!(
            SampledFunction::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteValue { index: 1 })
        ));
    }
}
