//! Seeded test-function generators.
//!
//! Geometric generators are parameterized in the ambient coordinates (ball
//! centers uniform in the bounding box, radii log-uniform in a fixed fraction
//! of the diameter), so function `k` of a generator describes the same continuum
//! function at every refinement level. Every generated function is bounded
//! and nonzero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, SampledFunction};
use crate::metric::Location;
use crate::seed::{rng_for, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunctionKind {
    /// `χ_B` for a random ball.
    BallIndicator,
    /// `Σ ± a_k χ_{B_k}` over `count` random balls, `a_k ∈ [1/2, 1]`.
    SignedBallCombo(usize),
    /// `(1 − (d(x,c)/r)²)₊²` for a random ball `B(c, r)`.
    SmoothBump,
    /// Independent values uniform in `[−1, 1]` on every atom.
    RandomAtomwise,
    /// Cycles through indicator, three-ball combination and bump.
    Mixed,
}

impl TestFunctionKind {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            ["ball_indicator"] => Ok(Self::BallIndicator),
            ["smooth_bump"] => Ok(Self::SmoothBump),
            ["random_atomwise"] => Ok(Self::RandomAtomwise),
            ["mixed"] => Ok(Self::Mixed),
            ["signed_ball_combo"] => Ok(Self::SignedBallCombo(3)),
            ["signed_ball_combo", k] => k
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .map(Self::SignedBallCombo)
                .ok_or_else(|| Error::param("functions", format!("bad count in {text:?}"))),
            _ => Err(Error::param(
                "functions",
                format!(
                    "unknown generator {text:?}; expected ball_indicator, signed_ball_combo[:k], smooth_bump, random_atomwise or mixed"
                ),
            )),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::BallIndicator => "ball_indicator".into(),
            Self::SignedBallCombo(k) => format!("signed_ball_combo:{k}"),
            Self::SmoothBump => "smooth_bump".into(),
            Self::RandomAtomwise => "random_atomwise".into(),
            Self::Mixed => "mixed".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunctionSpec {
    pub kind: TestFunctionKind,
    pub seed: u64,
    /// Ball radii are drawn log-uniformly from `[min, max] · diameter`.
    pub radius_range: (f64, f64),
}

impl TestFunctionSpec {
    pub fn new(kind: TestFunctionKind, seed: u64) -> Self {
        TestFunctionSpec {
            kind,
            seed,
            radius_range: (0.02, 0.5),
        }
    }

    /// Function number `index`, deterministic in `(seed, index)`.
    pub fn generate(&self, measure: &AtomicMeasure, index: usize) -> Result<SampledFunction> {
        if measure.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let mut rng = rng_for(self.seed, streams::TEST_FUNCTION, index as u64);
        let kind = match self.kind {
            TestFunctionKind::Mixed => match index % 3 {
                0 => TestFunctionKind::BallIndicator,
                1 => TestFunctionKind::SignedBallCombo(3),
                _ => TestFunctionKind::SmoothBump,
            },
            k => k,
        };
        let values = match kind {
            TestFunctionKind::BallIndicator => {
                let (c, r) = self.random_ball(measure, &mut rng);
                bump(measure, &c, r, |_| 1.0)
            }
            TestFunctionKind::SignedBallCombo(count) => {
                let mut acc = vec![0.0; measure.len()];
                for _ in 0..count.max(1) {
                    let (c, r) = self.random_ball(measure, &mut rng);
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let a = sign * rng.gen_range(0.5..=1.0);
                    for (v, b) in acc.iter_mut().zip(bump(measure, &c, r, |_| 1.0)) {
                        *v += a * b;
                    }
                }
                if acc.iter().all(|&v| v == 0.0) {
                    acc[rng.gen_range(0..measure.len())] = 1.0;
                }
                acc
            }
            TestFunctionKind::SmoothBump => {
                let (c, r) = self.random_ball(measure, &mut rng);
                bump(measure, &c, r, |t| (1.0 - t * t).powi(2))
            }
            TestFunctionKind::RandomAtomwise => {
                let mut v: Vec<f64> = (0..measure.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                if v.iter().all(|&x| x == 0.0) {
                    v[0] = 1.0;
                }
                v
            }
            TestFunctionKind::Mixed => unreachable!(),
        };
        SampledFunction::new(values)
    }

    pub fn generate_many(&self, measure: &AtomicMeasure, count: usize) -> Result<Vec<SampledFunction>> {
        (0..count).map(|k| self.generate(measure, k)).collect()
    }

    /// A ball `B(c, r)` containing at least one atom.
    fn random_ball(&self, measure: &AtomicMeasure, rng: &mut ChaCha8Rng) -> (Location, f64) {
        let (lo, hi) = self.radius_range;
        let diam = if measure.diameter() > 0.0 { measure.diameter() } else { 1.0 };
        let r = diam * (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp();
        let center = match bounding_box(measure) {
            Some(bbox) => {
                let p: Vec<f64> = bbox.iter().map(|&(a, b)| a + rng.gen::<f64>() * (b - a)).collect();
                let loc = Location::Point(p);
                let nearest = (0..measure.len())
                    .map(|j| (measure.dist_to(&loc, j), j))
                    .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
                if nearest.0 < r {
                    loc
                } else {
                    Location::Atom(nearest.1)
                }
            }
            None => Location::Atom(rng.gen_range(0..measure.len())),
        };
        (center, r)
    }
}

fn bounding_box(measure: &AtomicMeasure) -> Option<Vec<(f64, f64)>> {
    let d = measure.space().ambient_dim();
    if d == 0 {
        return None;
    }
    let mut bbox = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for j in 0..measure.len() {
        for (b, &c) in bbox.iter_mut().zip(measure.coords(j)?) {
            b.0 = b.0.min(c);
            b.1 = b.1.max(c);
        }
    }
    Some(bbox)
}

/// `profile(d(x,c)/r)` inside the ball, zero outside.
fn bump(measure: &AtomicMeasure, c: &Location, r: f64, profile: impl Fn(f64) -> f64) -> Vec<f64> {
    measure
        .distances_from(c)
        .into_iter()
        .map(|d| if d < r { profile(d / r) } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_measure, MeasureKind};

    #[test]
    fn generators_are_nonzero_bounded_and_deterministic() {
        let m = generate_measure(&MeasureKind::Cantor { depth: 7 }).unwrap();
        for kind in [
            TestFunctionKind::BallIndicator,
            TestFunctionKind::SignedBallCombo(4),
            TestFunctionKind::SmoothBump,
            TestFunctionKind::RandomAtomwise,
            TestFunctionKind::Mixed,
        ] {
            let spec = TestFunctionSpec::new(kind, 11);
            for k in 0..20 {
                let f = spec.generate(&m, k).unwrap();
                assert!(f.values().iter().any(|&v| v != 0.0), "{kind:?} {k}");
                assert!(f.values().iter().all(|v| v.abs() <= 4.0));
                assert_eq!(f, spec.generate(&m, k).unwrap());
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        for text in ["ball_indicator", "signed_ball_combo:5", "smooth_bump", "random_atomwise", "mixed"] {
            assert_eq!(TestFunctionKind::parse(text).unwrap().label(), text);
        }
        assert!(TestFunctionKind::parse("gaussian").is_err());
    }
}
