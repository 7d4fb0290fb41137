//! Estimation of the growth constant `C` in `μ(B(x, r)) ≤ C rⁿ`.

use rand::seq::index;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, MassProfile};
use crate::metric::Location;
use crate::report::{CheckReport, Tolerance};
use crate::seed::{rng_for, streams};

/// Geometric radii `r_j = offset · h · ratio^j` up to the measure diameter.
///
/// The offset keeps radii away from the lattice distances `k·h` of grid-like
/// quadratures, where strict ball membership would hinge on the last bit of
/// a floating-point distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusGrid {
    pub offset: f64,
    pub ratio: f64,
}

impl Default for RadiusGrid {
    fn default() -> Self {
        RadiusGrid {
            offset: 1.49,
            ratio: 2.0,
        }
    }
}

impl RadiusGrid {
    pub fn radii(&self, measure: &AtomicMeasure) -> Vec<f64> {
        self.radii_between(measure.h(), measure.diameter())
    }

    /// Grid radii in `[offset·h, max]`; always at least the smallest radius.
    pub fn radii_between(&self, h: f64, max: f64) -> Vec<f64> {
        let mut out = vec![self.offset * h];
        loop {
            let next = out.last().unwrap() * self.ratio;
            if next > max || out.len() >= 200 {
                break;
            }
            out.push(next);
        }
        out
    }
}

/// How balls are sampled: atom centers (all, or a seeded subset) and a
/// radius grid. Radii below `h` never occur.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSampler {
    pub max_centers: usize,
    pub grid: RadiusGrid,
    /// Number of radius-floor levels; each successive level admits one more
    /// (smaller) grid radius.
    pub levels: usize,
    pub slack: f64,
    /// Smallest radius floor (the finest level); defaults to the smallest
    /// grid radius. Raising it keeps the levels clear of the few-atom
    /// discreteness just above `h`.
    pub min_radius: Option<f64>,
    pub seed: u64,
}

impl Default for BallSampler {
    fn default() -> Self {
        BallSampler {
            max_centers: 1024,
            grid: RadiusGrid::default(),
            levels: 3,
            slack: 0.1,
            min_radius: None,
            seed: 0,
        }
    }
}

impl BallSampler {
    /// Center atom indices, ascending.
    pub fn centers(&self, measure: &AtomicMeasure) -> Vec<usize> {
        let n = measure.len();
        if n <= self.max_centers {
            return (0..n).collect();
        }
        let mut rng = rng_for(self.seed, streams::CENTERS, 0);
        let mut picked = index::sample(&mut rng, n, self.max_centers).into_vec();
        picked.sort_unstable();
        picked
    }
}

/// Sup over sampled atom-centered balls of `μ(B)/rⁿ`, reported per radius
/// floor: level `k` covers radii `r ≥ r_{L−1−k}`, so successive levels halve
/// the minimum radius. A finite, stable sequence indicates growth of order
/// `n`; a sequence that keeps growing from level to level indicates failure.
pub fn growth_constant(measure: &AtomicMeasure, n: f64, sampler: &BallSampler) -> Result<CheckReport> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::param("n", format!("dimension must be positive, got {n}")));
    }
    let report = sup_over_balls(measure, sampler, "growth", |mass, r| mass / r.powf(n))?.param("n", n);
    Ok(report.finish(Tolerance::stability(sampler.slack)))
}

/// Per-radius-floor sups of `score(μ(B), r)` over sampled atom-centered
/// balls; the returned report is not yet finished.
pub(crate) fn sup_over_balls(
    measure: &AtomicMeasure,
    sampler: &BallSampler,
    check: &str,
    score: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<CheckReport> {
    if measure.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if sampler.levels == 0 {
        return Err(Error::param("levels", "need at least one level"));
    }
    let radii = sampler.grid.radii(measure);
    let centers = sampler.centers(measure);
    // best[j] = (score, center, mass) maximized over centers at radius index j.
    let best = centers
        .par_iter()
        .map(|&c| {
            let profile = MassProfile::new(measure, &Location::Atom(c));
            radii
                .iter()
                .map(|&r| {
                    let mass = profile.mass_within(r);
                    (score(mass, r), c, mass)
                })
                .collect::<Vec<_>>()
        })
        .reduce(
            || vec![(f64::NEG_INFINITY, usize::MAX, 0.0); radii.len()],
            |a, b| a.into_iter().zip(b).map(|(x, y)| pick(x, y)).collect(),
        );

    let base = sampler.min_radius.unwrap_or(radii[0]).max(radii[0]);
    let first = radii.partition_point(|&r| r < base * (1.0 - 1e-9));
    let levels = sampler.levels.min(radii.len() - first.min(radii.len()));
    if levels == 0 {
        return Err(Error::param("min_radius", format!("no grid radius is at least {base}")));
    }
    let mut report = CheckReport::new(check, sampler.seed)
        .param("h", measure.h())
        .param("centers", centers.len())
        .param("radii", radii.len())
        .param("levels", levels);
    for k in 0..levels {
        let floor = first + levels - 1 - k;
        let (ratio, center, mass, radius) = (floor..radii.len())
            .map(|j| (best[j].0, best[j].1, best[j].2, radii[j]))
            .fold((f64::NEG_INFINITY, usize::MAX, 0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        report.push_level(
            measure.len(),
            ratio,
            json!({"center": center, "radius": radius, "mass": mass, "min_radius": radii[floor]}),
        );
    }
    if levels < sampler.levels {
        report.note(format!("only {levels} radius floors available"));
    }
    Ok(report)
}

/// Larger ratio wins; ties go to the smaller center index.
fn pick(a: (f64, usize, f64), b: (f64, usize, f64)) -> (f64, usize, f64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Growth constant for use as `C_μ`: the measure's hint when present,
/// otherwise the full-grid estimate.
pub fn growth_constant_or_hint(measure: &AtomicMeasure, sampler: &BallSampler) -> Result<f64> {
    if let Some(c) = measure.growth_hint() {
        return Ok(c);
    }
    let sampler = BallSampler {
        levels: 1,
        ..sampler.clone()
    };
    Ok(growth_constant(measure, measure.n(), &sampler)?.last_sup())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_measure, MeasureKind};

    #[test]
    fn uniform_interval_constant_near_two() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 1000 }).unwrap();
        let r = growth_constant(&m, 1.0, &BallSampler::default()).unwrap();
        let c = r.last_sup();
        assert!((c - 2.0).abs() <= 0.2, "{c}");
        assert!(r.pass);
    }

    #[test]
    fn power_density_growth_is_detected() {
        let m = generate_measure(&MeasureKind::PowerDensity { exponent: 0.5, atoms: 4096 }).unwrap();
        let sampler = BallSampler {
            max_centers: 4096,
            min_radius: Some(40.0 * m.h()),
            ..Default::default()
        };
        let r = growth_constant(&m, 1.0, &sampler).unwrap();
        assert_eq!(r.levels.len(), 3);
        for t in &r.trend {
            assert!(*t >= 2f64.sqrt() * 0.99, "{:?}", r.trend);
        }
        assert!(!r.pass);
    }

    #[test]
    fn radii_never_below_resolution() {
        let m = generate_measure(&MeasureKind::Cantor { depth: 6 }).unwrap();
        let radii = RadiusGrid::default().radii(&m);
        assert!(radii.iter().all(|&r| r >= m.h()));
        assert!(growth_constant(&m, 0.0, &BallSampler::default()).is_err());
    }
}
