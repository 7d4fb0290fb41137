//! The inequality-checking harness: one check per mapping theorem.
//!
//! Empirical operator norms are lower bounds of the true suprema, so most
//! checks pass when the sampled sup is finite and stable across refinement
//! levels (a slice of measures, coarse to fine) rather than by comparison
//! with an unknown constant. Geometric checks are exact.

mod geometry;
mod hls;
mod lipschitz;
mod potentials;
mod rbmo_maps;

pub use geometry::check_dilation_geometry;
pub use hls::{check_hls, check_local_potential, check_necessity};
pub use lipschitz::{check_lip_image, check_lip_preservation};
pub use potentials::{check_growth_lemmas, inner_potential, outer_potential, Side};
pub use rbmo_maps::{check_rbmo_image, check_rbmo_to_lip, RBMO_IMAGE_RHO, RBMO_SLACK};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::FractionalKernel;
use crate::measure::{AtomicMeasure, SampledFunction};
use crate::metric::Location;
use crate::report::CheckReport;
use crate::testfn::{TestFunctionKind, TestFunctionSpec};

/// Settings shared by the sampled checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Test functions per level, or sampled `(f, x, y)` triples for the
    /// pointwise checks.
    pub trials: usize,
    pub seed: u64,
    /// Allowed relative change of the sup between consecutive levels.
    pub slack: f64,
    pub functions: TestFunctionKind,
    /// Size of the function pool the pointwise checks cycle through.
    pub function_pool: usize,
    /// Every generated function is replaced by `scale·f + shift`.
    pub scale: f64,
    pub shift: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            trials: 50,
            seed: 0,
            slack: 0.25,
            functions: TestFunctionKind::Mixed,
            function_pool: 20,
            scale: 1.0,
            shift: 0.0,
        }
    }
}

impl CheckOptions {
    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn with_functions(mut self, functions: TestFunctionKind) -> Self {
        self.functions = functions;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return Err(Error::param("slack", format!("must be a nonnegative number, got {}", self.slack)));
        }
        if !(self.scale.is_finite() && self.scale != 0.0 && self.shift.is_finite()) {
            return Err(Error::param("scale", "scale must be finite and nonzero, shift finite"));
        }
        Ok(())
    }

    fn spec(&self) -> TestFunctionSpec {
        TestFunctionSpec::new(self.functions, self.seed)
    }

    fn function(&self, measure: &AtomicMeasure, index: usize) -> Result<SampledFunction> {
        let f = self.spec().generate(measure, index)?;
        Ok(if self.scale == 1.0 && self.shift == 0.0 {
            f
        } else {
            f.scaled(self.scale).shifted(self.shift)
        })
    }

    fn functions(&self, measure: &AtomicMeasure, count: usize) -> Result<Vec<SampledFunction>> {
        (0..count).map(|k| self.function(measure, k)).collect()
    }

    fn stamp(&self, report: CheckReport) -> CheckReport {
        report
            .param("trials", self.trials)
            .param("functions", self.functions.label())
            .param("slack", self.slack)
            .param("scale", self.scale)
            .param("shift", self.shift)
    }
}

/// `num / den`, with an exactly zero numerator giving `0` even when `den = 0`.
pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub(crate) fn check_levels(levels: &[AtomicMeasure]) -> Result<f64> {
    let first = levels.first().ok_or_else(|| Error::param("levels", "need at least one measure"))?;
    for (k, m) in levels.iter().enumerate() {
        if m.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if m.n() != first.n() {
            return Err(Error::param(
                "n",
                format!("level {k} has dimension {} but level 0 has {}", m.n(), first.n()),
            ));
        }
    }
    Ok(first.n())
}

pub(crate) fn check_kernel(kernel: &FractionalKernel, n: f64) -> Result<()> {
    if kernel.n != n {
        return Err(Error::param(
            "n",
            format!("kernel is built for dimension {} but the measure has {n}", kernel.n),
        ));
    }
    Ok(())
}

/// Basepoint `x₀` used by the renormalized operators: the middle atom.
pub fn default_basepoint(measure: &AtomicMeasure) -> usize {
    measure.len() / 2
}

/// Atom nearest to a uniform random point of the bounding box (a uniform
/// random atom on spaces without coordinates). Drawing points in ambient
/// coordinates keeps samples comparable across refinement levels.
pub(crate) fn random_atom(measure: &AtomicMeasure, rng: &mut ChaCha8Rng) -> usize {
    let d = measure.space().ambient_dim();
    if d == 0 {
        return rng.gen_range(0..measure.len());
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for j in 0..measure.len() {
        for (k, &c) in measure.coords(j).unwrap().iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    let p: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + rng.gen::<f64>() * (b - a)).collect();
    let loc = Location::Point(p);
    (0..measure.len())
        .map(|j| (measure.dist_to(&loc, j), j))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
        .1
}

/// Two distinct atoms drawn with [`random_atom`].
pub(crate) fn random_pair(measure: &AtomicMeasure, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
    for _ in 0..64 {
        let x = random_atom(measure, rng);
        let y = random_atom(measure, rng);
        if measure.dist(x, y) > 0.0 {
            return Some((x, y));
        }
    }
    None
}
