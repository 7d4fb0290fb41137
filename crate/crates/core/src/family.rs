//! Finite ball families: atom-centered balls on a geometric radius grid,
//! with containment pairs certified on support atoms.

use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::growth::RadiusGrid;
use crate::io::{parse_f64, ser_f64, write_atomic};
use crate::measure::{AtomicMeasure, Ball};
use crate::metric::Location;
use crate::seed::{rng_for, streams};

pub const FAMILY_SCHEMA: &str = "fracmeasure/family/v1";

/// Atom membership of a ball as a bit set over atom indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Members {
    words: Vec<u64>,
}

impl Members {
    pub fn of(measure: &AtomicMeasure, center: &Location, radius: f64) -> Self {
        let mut words = vec![0u64; measure.len().div_ceil(64)];
        let dists = measure.distances_from(center);
        for (j, &d) in dists.iter().enumerate() {
            if d < radius {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        Members { words }
    }

    pub fn contains(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn is_subset(&self, other: &Members) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Member atom indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }
}

/// How to build a family from a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    /// Centers: every atom when the measure has at most this many, otherwise
    /// a seeded subset of this size.
    pub max_centers: usize,
    pub grid: RadiusGrid,
    pub rho: f64,
    pub seed: u64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec {
            max_centers: 128,
            grid: RadiusGrid::default(),
            rho: 2.0,
            seed: 0,
        }
    }
}

impl FamilySpec {
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_centers(mut self, max_centers: usize) -> Self {
        self.max_centers = max_centers;
        self
    }
}

/// Atom-centered balls and their certified containment pairs `(i, j)`:
/// every atom of ball `i` lies in ball `j`, and `radius(i) ≤ radius(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily {
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub rho: f64,
}

impl BallFamily {
    pub fn build(measure: &AtomicMeasure, spec: &FamilySpec) -> Result<Self> {
        if measure.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        check_rho(spec.rho)?;
        let n = measure.len();
        let centers: Vec<usize> = if n <= spec.max_centers {
            (0..n).collect()
        } else {
            let mut rng = rng_for(spec.seed, streams::FAMILY, 0);
            let mut picked = index::sample(&mut rng, n, spec.max_centers).into_vec();
            picked.sort_unstable();
            picked
        };
        let grid = spec.grid.radii(measure);
        let mut ball_centers = Vec::with_capacity(centers.len() * grid.len());
        let mut radii = Vec::with_capacity(centers.len() * grid.len());
        for &c in &centers {
            for &r in &grid {
                ball_centers.push(c);
                radii.push(r);
            }
        }
        let mut family = BallFamily {
            centers: ball_centers,
            radii,
            pairs: Vec::new(),
            rho: spec.rho,
        };
        family.pairs = family.certify_pairs(measure);
        Ok(family)
    }

    /// A family built from explicit balls, with pairs certified on `measure`.
    pub fn from_balls(measure: &AtomicMeasure, balls: &[(usize, f64)], rho: f64) -> Result<Self> {
        check_rho(rho)?;
        for (k, &(c, r)) in balls.iter().enumerate() {
            if c >= measure.len() || !(r > 0.0) {
                return Err(Error::schema(format!("balls[{k}]"), "center must be an atom and radius positive"));
            }
        }
        let mut family = BallFamily {
            centers: balls.iter().map(|b| b.0).collect(),
            radii: balls.iter().map(|b| b.1).collect(),
            pairs: Vec::new(),
            rho,
        };
        family.pairs = family.certify_pairs(measure);
        Ok(family)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn ball(&self, i: usize) -> Ball {
        Ball {
            center: Location::Atom(self.centers[i]),
            radius: self.radii[i],
        }
    }

    pub fn members(&self, measure: &AtomicMeasure) -> Vec<Members> {
        (0..self.len())
            .into_par_iter()
            .map(|i| Members::of(measure, &Location::Atom(self.centers[i]), self.radii[i]))
            .collect()
    }

    /// All ordered pairs of distinct balls `(i, j)` with `radius(i) ≤ radius(j)`
    /// and `atoms(i) ⊆ atoms(j)`, in lexicographic order.
    fn certify_pairs(&self, measure: &AtomicMeasure) -> Vec<(usize, usize)> {
        let members = self.members(measure);
        (0..self.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let members = &members;
                (0..self.len()).filter_map(move |j| {
                    let ok = i != j
                        && self.radii[i] <= self.radii[j]
                        && members[j].contains(self.centers[i])
                        && members[i].is_subset(&members[j]);
                    ok.then_some((i, j))
                })
            })
            .collect()
    }

    /// Keeps at most `limit` pairs, a seeded uniform subset in lexicographic order.
    pub fn thin_pairs(&mut self, limit: usize, seed: u64) {
        if self.pairs.len() > limit {
            let mut rng = rng_for(seed, streams::FAMILY, 1);
            let mut keep = index::sample(&mut rng, self.pairs.len(), limit).into_vec();
            keep.sort_unstable();
            self.pairs = keep.into_iter().map(|k| self.pairs[k]).collect();
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let radii: Vec<Value> = self
            .radii
            .iter()
            .map(|r| serde_json::to_value(Wrapped(*r)))
            .collect::<std::result::Result<_, _>>()?;
        let v = json!({
            "schema": FAMILY_SCHEMA,
            "rho": serde_json::to_value(Wrapped(self.rho))?,
            "centers": self.centers,
            "radii": radii,
            "pairs": self.pairs.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)?;
        if root.get("schema").and_then(Value::as_str) != Some(FAMILY_SCHEMA) {
            return Err(Error::schema("schema", format!("expected {FAMILY_SCHEMA:?}")));
        }
        let rho = root
            .get("rho")
            .and_then(parse_f64)
            .ok_or_else(|| Error::schema("rho", "missing or not a number"))?;
        check_rho(rho)?;
        let arr = |k: &'static str| {
            root.get(k)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::schema(k, "missing or not an array"))
        };
        let centers = arr("centers")?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_u64()
                    .map(|c| c as usize)
                    .ok_or_else(|| Error::schema(format!("centers[{i}]"), "not an atom index"))
            })
            .collect::<Result<Vec<_>>>()?;
        let radii = arr("radii")?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                parse_f64(v)
                    .filter(|r| *r > 0.0)
                    .ok_or_else(|| Error::schema(format!("radii[{i}]"), "not a positive number"))
            })
            .collect::<Result<Vec<_>>>()?;
        if radii.len() != centers.len() {
            return Err(Error::schema("radii", "length differs from centers"));
        }
        let pairs = arr("pairs")?
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let p = v.as_array().filter(|a| a.len() == 2);
                let idx = |a: &Value| a.as_u64().map(|x| x as usize).filter(|&x| x < centers.len());
                p.and_then(|a| Some((idx(&a[0])?, idx(&a[1])?)))
                    .ok_or_else(|| Error::schema(format!("pairs[{k}]"), "expected [i, j] with valid ball indices"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BallFamily {
            centers,
            radii,
            pairs,
            rho,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

struct Wrapped(f64);

impl serde::Serialize for Wrapped {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_f64(&self.0, s)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(Error::param("rho", format!("must exceed 1, got {rho}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_measure, MeasureKind};

    #[test]
    fn pairs_are_certified() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 64 }).unwrap();
        let fam = BallFamily::build(&m, &FamilySpec::default().with_max_centers(16)).unwrap();
        assert_eq!(fam.centers.len(), 16 * RadiusGrid::default().radii(&m).len());
        assert!(!fam.pairs.is_empty());
        let members = fam.members(&m);
        for &(i, j) in &fam.pairs {
            assert!(fam.radii[i] <= fam.radii[j]);
            for a in members[i].iter() {
                assert!(fam.ball(j).contains(&m, a));
            }
        }
    }

    #[test]
    fn members_iterate_in_index_order() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 200 }).unwrap();
        let mem = Members::of(&m, &Location::Atom(100), 0.2);
        let list: Vec<usize> = mem.iter().collect();
        assert_eq!(list, m.atoms_in(&Ball::new(100, 0.2).unwrap()));
        assert_eq!(mem.count(), list.len());
    }

    #[test]
    fn json_round_trip() {
        let m = generate_measure(&MeasureKind::Cantor { depth: 4 }).unwrap();
        let fam = BallFamily::build(&m, &FamilySpec::default().with_rho(10.0)).unwrap();
        let back = BallFamily::from_json(&fam.to_json().unwrap()).unwrap();
        assert_eq!(back, fam);
        assert!(BallFamily::build(&m, &FamilySpec::default().with_rho(1.0)).is_err());
    }
}
