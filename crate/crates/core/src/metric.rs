//! Metric spaces housing the atoms of a quadrature measure.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Row-major table of pairwise distances over a finite point index.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    size: usize,
    data: Vec<f64>,
}

impl DistanceTable {
    /// Validates symmetry, a zero diagonal and strictly positive off-diagonal
    /// entries. The triangle inequality is not checked here; see
    /// [`MetricSpace::triangle_violations`].
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::schema(
                    format!("distance_table[{i}]"),
                    format!("row has {} entries, expected {size}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        let table = DistanceTable { size, data };
        for i in 0..size {
            for j in 0..size {
                let d = table.get(i, j);
                let loc = || format!("distance_table[{i}][{j}]");
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::schema(loc(), format!("distance {d} is not a finite nonnegative number")));
                }
                if i == j && d != 0.0 {
                    return Err(Error::schema(loc(), "diagonal entry must be 0"));
                }
                if i != j && d == 0.0 {
                    return Err(Error::schema(loc(), "distinct points at distance 0"));
                }
                if d != table.get(j, i) {
                    return Err(Error::schema(loc(), "table is not symmetric"));
                }
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.size.max(1)).take(self.size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpace {
    /// `ℝ^d` with the Euclidean distance; points are coordinate vectors.
    Euclidean { ambient_dim: usize },
    /// A finite metric given by its distance table; points are indices.
    Explicit { table: Arc<DistanceTable> },
}

impl MetricSpace {
    pub fn euclidean(ambient_dim: usize) -> Self {
        MetricSpace::Euclidean { ambient_dim }
    }

    pub fn explicit(table: DistanceTable) -> Self {
        MetricSpace::Explicit {
            table: Arc::new(table),
        }
    }

    /// Coordinate dimension, 0 for explicit tables.
    pub fn ambient_dim(&self) -> usize {
        match self {
            MetricSpace::Euclidean { ambient_dim } => *ambient_dim,
            MetricSpace::Explicit { .. } => 0,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, MetricSpace::Euclidean { .. })
    }

    /// Counts sampled triples `(x, y, z)` with `d(x,z) > d(x,y) + d(y,z)`,
    /// using the supplied distance oracle over `points` indices.
    pub fn triangle_violations(
        points: usize,
        trials: usize,
        seed: u64,
        dist: impl Fn(usize, usize) -> f64,
    ) -> usize {
        use rand::Rng;
        if points == 0 {
            return 0;
        }
        let mut violations = 0;
        for t in 0..trials as u64 {
            let mut rng = crate::seed::rng_for(seed, 0x7121, t);
            let (x, y, z) = (
                rng.gen_range(0..points),
                rng.gen_range(0..points),
                rng.gen_range(0..points),
            );
            if dist(x, z) > dist(x, y) + dist(y, z) {
                violations += 1;
            }
        }
        violations
    }
}

/// Euclidean distance. The one-dimensional case is an absolute difference, so
/// distances on the line are exactly what subtraction produces.
#[inline]
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    match a.len() {
        1 => (a[0] - b[0]).abs(),
        2 => (a[0] - b[0]).hypot(a[1] - b[1]),
        _ => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

/// A point at which balls are centered or operators are evaluated: either an
/// atom of the measure (by index) or a free coordinate point (Euclidean only).
#[derive(Debug, Clone, PartialEq)]
pub enum Location {
    Atom(usize),
    Point(Vec<f64>),
}

impl Location {
    pub fn atom_index(&self) -> Option<usize> {
        match self {
            Location::Atom(i) => Some(*i),
            Location::Point(_) => None,
        }
    }
}

impl From<usize> for Location {
    fn from(i: usize) -> Self {
        Location::Atom(i)
    }
}
