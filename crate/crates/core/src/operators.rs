//! Quadrature evaluation of fractional integral operators.
//!
//! Every operator is a sum over atoms in index order of
//! `w_j · K(x, y_j) · f(y_j)`, where the effective kernel `K` is formed
//! pointwise before summation:
//!
//! | operator | `K(x, y)` |
//! |---|---|
//! | `I_α` | `d(x,y)^(α−n)` |
//! | `K_α` | `k(x,y)` |
//! | `K̃_α` | `k(x,y) − k(x₀,y)` |
//! | `K̄_α` | `k(x,y) − 1{d(x₀,y) ≥ 1} k(x₀,y)` |
//!
//! A kernel term whose two arguments coincide is dropped, and only that
//! term: for `K̃_α` at `y = x₀` the value `k(x, x₀)` is kept, and at `y = x`
//! the value `−k(x₀, x)` is kept.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::FractionalKernel;
use crate::measure::{AtomicMeasure, SampledFunction};
use crate::metric::Location;

/// Radius of the ball around `x₀` whose complement carries the `x₀` term of `K̄_α`.
pub const UNIT_BALL_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    IAlpha,
    KAlpha,
    KTilde,
    KBar,
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::IAlpha => "I_alpha",
            Operator::KAlpha => "K_alpha",
            Operator::KTilde => "K_tilde",
            Operator::KBar => "K_bar",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorConfig {
    pub kernel: FractionalKernel,
    /// Atom index of the basepoint `x₀`.
    pub basepoint: usize,
    /// Integrability exponent the caller declares for `f`; when present,
    /// `K̃_α` checks `p > n/α` and `α − n/p < ε`.
    pub declared_p: Option<f64>,
}

impl OperatorConfig {
    pub fn new(kernel: FractionalKernel, basepoint: usize) -> Self {
        OperatorConfig {
            kernel,
            basepoint,
            declared_p: None,
        }
    }

    pub fn with_declared_p(mut self, p: f64) -> Self {
        self.declared_p = Some(p);
        self
    }
}

/// Values at the requested points plus, per point, the number of atoms whose
/// singular term was dropped because they coincide with the point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub values: Vec<f64>,
    pub excluded: Vec<usize>,
}

/// Every atom of `measure` as an evaluation point.
pub fn atom_locations(measure: &AtomicMeasure) -> Vec<Location> {
    (0..measure.len()).map(Location::Atom).collect()
}

/// Effective kernel rows for one operator on one measure.
pub(crate) struct Engine<'a> {
    measure: &'a AtomicMeasure,
    kernel: FractionalKernel,
    /// `k(x₀, y_j)` (times the indicator for `K̄_α`), zero at `y_j = x₀`.
    base_row: Option<Vec<f64>>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(op: Operator, config: &OperatorConfig, measure: &'a AtomicMeasure) -> Result<Self> {
        if measure.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let kernel = match op {
            Operator::IAlpha => FractionalKernel::riesz(config.kernel.alpha, measure.n())?,
            _ => config.kernel.clone(),
        };
        let base_row = match op {
            Operator::IAlpha | Operator::KAlpha => None,
            Operator::KTilde | Operator::KBar => {
                let x0 = config.basepoint;
                if x0 >= measure.len() {
                    return Err(Error::param(
                        "basepoint",
                        format!("x0 = {x0} is not an atom of a {}-atom measure", measure.len()),
                    ));
                }
                if op == Operator::KTilde {
                    if let Some(p) = config.declared_p {
                        check_tilde_hypotheses(&kernel, p)?;
                    }
                } else if !(kernel.alpha < kernel.epsilon && kernel.epsilon <= 1.0) {
                    return Err(Error::Hypothesis(format!(
                        "K_bar requires 0 < alpha < epsilon <= 1, got alpha = {}, epsilon = {}",
                        kernel.alpha, kernel.epsilon
                    )));
                }
                let loc = Location::Atom(x0);
                let dists = measure.distances_from(&loc);
                let mut row = vec![0.0; measure.len()];
                kernel.row_into(measure, &loc, &dists, &mut row);
                if op == Operator::KBar {
                    for (r, &d) in row.iter_mut().zip(&dists) {
                        if d < UNIT_BALL_RADIUS {
                            *r = 0.0;
                        }
                    }
                }
                Some(row)
            }
        };
        Ok(Engine {
            measure,
            kernel,
            base_row,
        })
    }

    /// Writes `w_j · K(x, y_j)` into `out`; returns the number of atoms at `x`.
    pub(crate) fn weighted_row(&self, x: &Location, dists: &mut [f64], out: &mut [f64]) -> usize {
        self.measure.distances_into(x, dists);
        self.kernel.row_into(self.measure, x, dists, out);
        if let Some(base) = &self.base_row {
            for (o, b) in out.iter_mut().zip(base) {
                *o -= b;
            }
        }
        for (o, w) in out.iter_mut().zip(self.measure.weights()) {
            *o *= w;
        }
        dists.iter().filter(|&&d| d == 0.0).count()
    }

    /// Values for many functions at many points: `result[f][point]`.
    pub(crate) fn apply_many(&self, fs: &[&[f64]], points: &[Location]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let n = self.measure.len();
        for f in fs {
            if f.len() != n {
                return Err(Error::Misaligned {
                    expected: n,
                    got: f.len(),
                });
            }
        }
        for p in points {
            self.measure.check_location(p)?;
        }
        let nf = fs.len();
        // Atom-major layout so each point's sums over j run for all functions at once.
        let mut matrix = vec![0.0; n * nf];
        for (k, f) in fs.iter().enumerate() {
            for (j, &v) in f.iter().enumerate() {
                matrix[j * nf + k] = v;
            }
        }
        let per_point: Vec<(Vec<f64>, usize)> = points
            .par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; n]),
                |(dists, row), x| {
                    let excluded = self.weighted_row(x, dists, row);
                    let mut acc = vec![0.0; nf];
                    for (j, &c) in row.iter().enumerate() {
                        let fj = &matrix[j * nf..(j + 1) * nf];
                        for (a, &v) in acc.iter_mut().zip(fj) {
                            *a += c * v;
                        }
                    }
                    (acc, excluded)
                },
            )
            .collect();
        let mut out = vec![Vec::with_capacity(points.len()); nf];
        let mut excluded = Vec::with_capacity(points.len());
        for (acc, ex) in per_point {
            for (k, v) in acc.into_iter().enumerate() {
                out[k].push(v);
            }
            excluded.push(ex);
        }
        for vals in &out {
            if let Some(index) = vals.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { index });
            }
        }
        Ok((out, excluded))
    }
}

fn check_tilde_hypotheses(kernel: &FractionalKernel, p: f64) -> Result<()> {
    let (alpha, n, eps) = (kernel.alpha, kernel.n, kernel.epsilon);
    if !(p > n / alpha) {
        return Err(Error::Hypothesis(format!("K_tilde requires p > n/alpha = {}, got p = {p}", n / alpha)));
    }
    let beta = if p.is_infinite() { alpha } else { alpha - n / p };
    if !(beta < eps) {
        return Err(Error::Hypothesis(format!(
            "K_tilde requires alpha - n/p < epsilon, got {beta} >= {eps}"
        )));
    }
    Ok(())
}

impl Operator {
    pub fn apply(
        &self,
        config: &OperatorConfig,
        measure: &AtomicMeasure,
        f: &SampledFunction,
        points: &[Location],
    ) -> Result<EvaluationResult> {
        let (mut values, excluded) = self.apply_many(config, measure, &[f], points)?;
        Ok(EvaluationResult {
            values: values.pop().unwrap(),
            excluded,
        })
    }

    /// Evaluates several functions at once; `result[k]` belongs to `fs[k]`.
    /// The values are bit-identical to separate [`Operator::apply`] calls.
    pub fn apply_many(
        &self,
        config: &OperatorConfig,
        measure: &AtomicMeasure,
        fs: &[&SampledFunction],
        points: &[Location],
    ) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let engine = Engine::new(*self, config, measure)?;
        let slices: Vec<&[f64]> = fs.iter().map(|f| f.values()).collect();
        engine.apply_many(&slices, points)
    }
}

/// `I_α f(x) = Σ_{y_j ≠ x} w_j f(y_j) d(x, y_j)^(α−n)`.
pub fn apply_i_alpha(
    measure: &AtomicMeasure,
    alpha: f64,
    f: &SampledFunction,
    points: &[Location],
) -> Result<EvaluationResult> {
    let kernel = FractionalKernel::riesz(alpha, measure.n())?;
    Operator::IAlpha.apply(&OperatorConfig::new(kernel, 0), measure, f, points)
}

pub fn apply_k_alpha(
    config: &OperatorConfig,
    measure: &AtomicMeasure,
    f: &SampledFunction,
    points: &[Location],
) -> Result<EvaluationResult> {
    Operator::KAlpha.apply(config, measure, f, points)
}

pub fn apply_k_tilde(
    config: &OperatorConfig,
    measure: &AtomicMeasure,
    f: &SampledFunction,
    points: &[Location],
) -> Result<EvaluationResult> {
    Operator::KTilde.apply(config, measure, f, points)
}

pub fn apply_k_bar(
    config: &OperatorConfig,
    measure: &AtomicMeasure,
    f: &SampledFunction,
    points: &[Location],
) -> Result<EvaluationResult> {
    Operator::KBar.apply(config, measure, f, points)
}

/// Kernel rows `k(x, ·)` and `k(y, ·)` for a pair of distinct points, shared
/// by the subtracted form and the cancellation defect.
pub struct PairRows {
    kx: Vec<f64>,
    ky: Vec<f64>,
}

impl PairRows {
    pub fn new(kernel: &FractionalKernel, measure: &AtomicMeasure, x: &Location, y: &Location) -> Result<Self> {
        measure.check_location(x)?;
        measure.check_location(y)?;
        if measure.dist_between(x, y) == 0.0 {
            return Err(Error::Domain("x and y must be distinct points".into()));
        }
        let n = measure.len();
        let (mut kx, mut ky) = (vec![0.0; n], vec![0.0; n]);
        let dx = measure.distances_from(x);
        let dy = measure.distances_from(y);
        kernel.row_into(measure, x, &dx, &mut kx);
        kernel.row_into(measure, y, &dy, &mut ky);
        Ok(PairRows { kx, ky })
    }

    /// `Σ_z w_z (k(x,z) − k(y,z)) (f(z) − c)`, singular terms dropped.
    pub fn subtracted(&self, measure: &AtomicMeasure, f: &[f64], center_value: f64) -> f64 {
        let mut acc = 0.0;
        for (j, v) in f.iter().enumerate() {
            acc += measure.weight(j) * (self.kx[j] - self.ky[j]) * (v - center_value);
        }
        acc
    }

    /// `Σ_z w_z (k(x,z) − k(y,z))`, singular terms dropped.
    pub fn defect(&self, measure: &AtomicMeasure) -> f64 {
        let mut acc = 0.0;
        for j in 0..measure.len() {
            acc += measure.weight(j) * (self.kx[j] - self.ky[j]);
        }
        acc
    }
}

/// Subtracted oscillation `∫ {k(x,z) − k(y,z)} (f(z) − c) dμ(z)`.
///
/// For every constant `c`,
/// `K̃f(x) − K̃f(y) = oscillation_subtracted(c) + c · cancellation_defect`.
pub fn oscillation_subtracted(
    config: &OperatorConfig,
    measure: &AtomicMeasure,
    f: &SampledFunction,
    x: &Location,
    y: &Location,
    center_value: f64,
) -> Result<f64> {
    f.check_aligned(measure)?;
    let rows = PairRows::new(&config.kernel, measure, x, y)?;
    Ok(rows.subtracted(measure, f.values(), center_value))
}

/// Cancellation defect `∫ {k(x,z) − k(y,z)} dμ(z)`.
pub fn cancellation_defect(config: &OperatorConfig, measure: &AtomicMeasure, x: &Location, y: &Location) -> Result<f64> {
    let rows = PairRows::new(&config.kernel, measure, x, y)?;
    Ok(rows.defect(measure))
}
