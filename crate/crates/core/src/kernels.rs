//! Fractional kernels of order `α` and regularity `ε`, and empirical
//! validators for their size and regularity conditions.
//!
//! A kernel declares constants for
//!
//! - size: `|k(x,y)| ≤ C_size / d(x,y)^(n−α)` for `x ≠ y`;
//! - regularity: `|k(x,y) − k(x',y)| ≤ C_reg d(x,x')^ε / d(x,y)^(n−α+ε)`
//!   whenever `d(x,y) ≥ 2 d(x,x')`.
//!
//! The constants are never trusted: [`check_size`] and [`check_regularity`]
//! measure the corresponding suprema on sampled atoms.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, Site};
use crate::metric::Location;
use crate::report::{CheckReport, Tolerance};
use crate::seed::{rng_for, streams};

/// Pointwise evaluator `(x, y, d(x,y)) ↦ k(x,y)`.
pub type KernelFn = dyn Fn(Site<'_>, Site<'_>, f64) -> f64 + Send + Sync;

/// Bounded, Lipschitz multiplier `b(x)` of a modulated kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    /// `b ≡ c`.
    Constant(f64),
    /// `b(x) = scale · (1 + sin(2π·frequency·x₁)/2)`, with `x₁` the first
    /// coordinate (or the constant `scale` on spaces without coordinates).
    Wave { scale: f64, frequency: f64 },
}

impl Modulation {
    #[inline]
    pub fn value(&self, x: Site<'_>) -> f64 {
        match *self {
            Modulation::Constant(c) => c,
            Modulation::Wave { scale, frequency } => match x.coords {
                Some(c) => scale * (1.0 + 0.5 * (std::f64::consts::TAU * frequency * c[0]).sin()),
                None => scale,
            },
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Modulation::Constant(c) => c.abs(),
            Modulation::Wave { scale, .. } => 1.5 * scale.abs(),
        }
    }

    /// Lipschitz constant of `b`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Modulation::Constant(_) => 0.0,
            Modulation::Wave { scale, frequency } => 0.5 * scale.abs() * std::f64::consts::TAU * frequency.abs(),
        }
    }
}

#[derive(Clone)]
pub enum KernelForm {
    /// `d(x,y)^(α−n)`.
    Riesz,
    /// `b(x) · d(x,y)^(α−n)`.
    Modulated(Modulation),
    /// `k ≡ 0`.
    Zero,
    Custom(Arc<KernelFn>),
}

impl fmt::Debug for KernelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelForm::Riesz => write!(f, "Riesz"),
            KernelForm::Modulated(m) => write!(f, "Modulated({m:?})"),
            KernelForm::Zero => write!(f, "Zero"),
            KernelForm::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A fractional kernel of order `alpha` and regularity `epsilon` on an
/// `n`-dimensional measure, with declared size and regularity constants.
#[derive(Debug, Clone)]
pub struct FractionalKernel {
    pub alpha: f64,
    pub epsilon: f64,
    pub n: f64,
    pub size_constant: f64,
    pub reg_constant: f64,
    pub form: KernelForm,
    pub label: String,
}

/// Regularity constant of the Riesz kernel from the mean value theorem:
/// `(n−α) · 2^(n−α+1)`.
pub fn riesz_reg_constant(alpha: f64, n: f64) -> f64 {
    (n - alpha) * 2f64.powf(n - alpha + 1.0)
}

fn check_order(alpha: f64, n: f64) -> Result<()> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::param("n", format!("dimension must be positive, got {n}")));
    }
    if !(alpha > 0.0 && alpha < n) {
        return Err(Error::param("alpha", format!("order must lie in (0, {n}), got {alpha}")));
    }
    Ok(())
}

impl FractionalKernel {
    pub fn riesz(alpha: f64, n: f64) -> Result<Self> {
        check_order(alpha, n)?;
        Ok(FractionalKernel {
            alpha,
            epsilon: 1.0,
            n,
            size_constant: 1.0,
            reg_constant: riesz_reg_constant(alpha, n),
            form: KernelForm::Riesz,
            label: "riesz".into(),
        })
    }

    /// `b(x)·d(x,y)^(α−n)` with regularity 1. The declared regularity
    /// constant `sup|b|·C_riesz + Lip(b)` is valid on supports of diameter ≤ 1.
    pub fn modulated(alpha: f64, n: f64, modulation: Modulation) -> Result<Self> {
        check_order(alpha, n)?;
        let label = match modulation {
            Modulation::Constant(c) => format!("modulated:{c}"),
            Modulation::Wave { scale, frequency } => format!("modulated:{scale}:{frequency}"),
        };
        Ok(FractionalKernel {
            alpha,
            epsilon: 1.0,
            n,
            size_constant: modulation.sup(),
            reg_constant: modulation.sup() * riesz_reg_constant(alpha, n) + modulation.lipschitz(),
            form: KernelForm::Modulated(modulation),
            label,
        })
    }

    pub fn zero(alpha: f64, n: f64) -> Result<Self> {
        check_order(alpha, n)?;
        Ok(FractionalKernel {
            alpha,
            epsilon: 1.0,
            n,
            size_constant: 0.0,
            reg_constant: 0.0,
            form: KernelForm::Zero,
            label: "zero".into(),
        })
    }

    pub fn custom(alpha: f64, epsilon: f64, n: f64, label: impl Into<String>, f: Arc<KernelFn>) -> Result<Self> {
        check_order(alpha, n)?;
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::param("epsilon", format!("regularity must lie in (0, 1], got {epsilon}")));
        }
        Ok(FractionalKernel {
            alpha,
            epsilon,
            n,
            size_constant: f64::INFINITY,
            reg_constant: f64::INFINITY,
            form: KernelForm::Custom(f),
            label: label.into(),
        })
    }

    /// Parses `riesz`, `modulated:<scale>` or `modulated:<scale>:<frequency>`.
    pub fn from_label(label: &str, alpha: f64, n: f64) -> Result<Self> {
        let parts: Vec<&str> = label.split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::param("kernel", format!("bad number {s:?} in kernel label {label:?}")))
        };
        match parts.as_slice() {
            ["riesz"] => Self::riesz(alpha, n),
            ["zero"] => Self::zero(alpha, n),
            ["modulated", scale] => Self::modulated(alpha, n, Modulation::Constant(num(scale)?)),
            ["modulated", scale, freq] => Self::modulated(
                alpha,
                n,
                Modulation::Wave {
                    scale: num(scale)?,
                    frequency: num(freq)?,
                },
            ),
            _ => Err(Error::param(
                "kernel",
                format!("unknown kernel {label:?}; expected riesz, modulated:<scale>[:<frequency>]"),
            )),
        }
    }

    pub fn with_constants(mut self, size_constant: f64, reg_constant: f64) -> Self {
        self.size_constant = size_constant;
        self.reg_constant = reg_constant;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn is_riesz(&self) -> bool {
        matches!(self.form, KernelForm::Riesz)
    }

    /// `d^(α−n)`.
    #[inline]
    pub fn riesz_value(&self, d: f64) -> f64 {
        d.powf(self.alpha - self.n)
    }

    /// `k(x, y)` given `d = d(x, y) > 0`.
    #[inline]
    pub fn eval_at(&self, x: Site<'_>, y: Site<'_>, d: f64) -> f64 {
        match &self.form {
            KernelForm::Riesz => self.riesz_value(d),
            KernelForm::Modulated(m) => m.value(x) * self.riesz_value(d),
            KernelForm::Zero => 0.0,
            KernelForm::Custom(f) => f(x, y, d),
        }
    }

    /// Fills `out[j] = k(x, atom j)`, with `0` where `d(x, atom j) = 0`.
    pub fn row_into(&self, measure: &AtomicMeasure, x: &Location, dists: &[f64], out: &mut [f64]) {
        let xs = measure.site(x);
        match &self.form {
            KernelForm::Riesz => {
                let e = self.alpha - self.n;
                for (o, &d) in out.iter_mut().zip(dists) {
                    *o = if d > 0.0 { d.powf(e) } else { 0.0 };
                }
            }
            KernelForm::Modulated(m) => {
                let b = m.value(xs);
                let e = self.alpha - self.n;
                for (o, &d) in out.iter_mut().zip(dists) {
                    *o = if d > 0.0 { b * d.powf(e) } else { 0.0 };
                }
            }
            KernelForm::Zero => out.fill(0.0),
            KernelForm::Custom(f) => {
                for (j, (o, &d)) in out.iter_mut().zip(dists).enumerate() {
                    *o = if d > 0.0 { f(xs, measure.atom_site(j), d) } else { 0.0 };
                }
            }
        }
    }
}

/// `k(x, y)` for two locations of `measure`; the diagonal is a domain error.
pub fn eval_kernel(kernel: &FractionalKernel, measure: &AtomicMeasure, x: &Location, y: &Location) -> Result<f64> {
    measure.check_location(x)?;
    measure.check_location(y)?;
    let d = measure.dist_between(x, y);
    if d == 0.0 {
        return Err(Error::Domain("kernel is singular on the diagonal x = y".into()));
    }
    Ok(kernel.eval_at(measure.site(x), measure.site(y), d))
}

/// Sup over sampled atom pairs of `|k(x,y)| / d(x,y)^(α−n)`; passes iff the
/// sup does not exceed the declared size constant.
pub fn check_size(kernel: &FractionalKernel, measure: &AtomicMeasure, trials: usize, seed: u64) -> Result<CheckReport> {
    let n_atoms = measure.len();
    if n_atoms < 2 {
        return Err(Error::TooFewAtoms {
            atoms: n_atoms,
            required: 2,
        });
    }
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let best = (0..trials as u64)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = rng_for(seed, streams::KERNEL_PAIRS, t);
            for _ in 0..64 {
                let x = rng.gen_range(0..n_atoms);
                let y = rng.gen_range(0..n_atoms);
                let d = measure.dist(x, y);
                if d > 0.0 {
                    let k = kernel.eval_at(measure.atom_site(x), measure.atom_site(y), d);
                    return Some((k.abs() / kernel.riesz_value(d), x, y));
                }
            }
            None
        })
        .reduce_with(max_pair);
    let (ratio, x, y) = best.ok_or_else(|| Error::NoSamples("no pairs of distinct atoms found".into()))?;
    let mut report = CheckReport::new("kernel-size", seed)
        .param("kernel", kernel.label.clone())
        .param("alpha", kernel.alpha)
        .param("n", kernel.n)
        .param("trials", trials)
        .param("size_constant", kernel.size_constant);
    report.push_level(n_atoms, ratio, json!({"x": x, "y": y}));
    Ok(report.finish(Tolerance::upper(kernel.size_constant)))
}

fn max_pair(a: (f64, usize, usize), b: (f64, usize, usize)) -> (f64, usize, usize) {
    if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
        b
    } else {
        a
    }
}

/// One admissible regularity triple `(x, x', y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub x: usize,
    pub x_prime: usize,
    pub y: usize,
}

/// Whether triples are drawn uniformly (with rejection) or with `x'` the
/// nearest neighbor of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleSampling {
    Uniform,
    NearestNeighbor,
}

const PILOT_DRAWS: u64 = 400;
const ATTEMPTS_PER_TRIPLE: usize = 200;

fn admissible(measure: &AtomicMeasure, t: Triple) -> bool {
    let dxx = measure.dist(t.x, t.x_prime);
    dxx > 0.0 && measure.dist(t.x, t.y) >= 2.0 * dxx
}

fn nearest_neighbor(measure: &AtomicMeasure, x: usize) -> usize {
    let mut best = (f64::INFINITY, x);
    for j in 0..measure.len() {
        let d = measure.dist(x, j);
        if d > 0.0 && d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// Samples `trials` admissible triples deterministically from `seed`.
/// Uniform rejection sampling is used unless a pilot run finds fewer than 1%
/// of uniform triples admissible.
pub fn sample_triples(measure: &AtomicMeasure, trials: usize, seed: u64) -> (Vec<Triple>, TripleSampling) {
    let n = measure.len();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| Triple {
        x: rng.gen_range(0..n),
        x_prime: rng.gen_range(0..n),
        y: rng.gen_range(0..n),
    };
    let mut pilot = rng_for(seed, streams::KERNEL_TRIPLES, u64::MAX);
    let hits = (0..PILOT_DRAWS).filter(|_| admissible(measure, draw(&mut pilot))).count();
    let mode = if hits as f64 >= 0.01 * PILOT_DRAWS as f64 {
        TripleSampling::Uniform
    } else {
        TripleSampling::NearestNeighbor
    };
    let triples = (0..trials as u64)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = rng_for(seed, streams::KERNEL_TRIPLES, t);
            for _ in 0..ATTEMPTS_PER_TRIPLE {
                let mut cand = draw(&mut rng);
                if mode == TripleSampling::NearestNeighbor {
                    cand.x_prime = nearest_neighbor(measure, cand.x);
                }
                if admissible(measure, cand) {
                    return Some(cand);
                }
            }
            None
        })
        .collect();
    (triples, mode)
}

/// Sup over admissible sampled triples of
/// `|k(x,y) − k(x',y)| · d(x,y)^(n−α+ε) / d(x,x')^ε`; passes iff the sup does
/// not exceed the declared regularity constant. The witness records how many
/// triples exceeded the declared constant.
pub fn check_regularity(
    kernel: &FractionalKernel,
    measure: &AtomicMeasure,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    if measure.len() < 3 {
        return Err(Error::TooFewAtoms {
            atoms: measure.len(),
            required: 3,
        });
    }
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let (triples, mode) = sample_triples(measure, trials, seed);
    if triples.is_empty() {
        return Err(Error::NoSamples("no admissible triples with d(x,y) ≥ 2 d(x,x')".into()));
    }
    let ratios: Vec<f64> = triples
        .par_iter()
        .map(|t| regularity_ratio(kernel, measure, *t))
        .collect();
    let (k, ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let violations = ratios.iter().filter(|&&r| !(r <= kernel.reg_constant)).count();
    let t = triples[k];
    let mut report = CheckReport::new("kernel-reg", seed)
        .param("kernel", kernel.label.clone())
        .param("alpha", kernel.alpha)
        .param("epsilon", kernel.epsilon)
        .param("n", kernel.n)
        .param("trials", trials)
        .param("reg_constant", kernel.reg_constant);
    report.push_level(
        measure.len(),
        ratio,
        json!({
            "x": t.x, "x_prime": t.x_prime, "y": t.y,
            "admissible": triples.len(),
            "violations": violations,
            "sampling": match mode { TripleSampling::Uniform => "uniform", TripleSampling::NearestNeighbor => "nearest_neighbor" },
        }),
    );
    if triples.len() < trials {
        report.note(format!("only {} of {trials} triples were admissible", triples.len()));
    }
    Ok(report.finish(Tolerance::upper(kernel.reg_constant)))
}

/// `|k(x,y) − k(x',y)| · d(x,y)^(n−α+ε) / d(x,x')^ε` for one triple.
pub fn regularity_ratio(kernel: &FractionalKernel, measure: &AtomicMeasure, t: Triple) -> f64 {
    let dxy = measure.dist(t.x, t.y);
    let dpy = measure.dist(t.x_prime, t.y);
    let dxx = measure.dist(t.x, t.x_prime);
    let y = measure.atom_site(t.y);
    let diff = kernel.eval_at(measure.atom_site(t.x), y, dxy) - kernel.eval_at(measure.atom_site(t.x_prime), y, dpy);
    let eps = kernel.epsilon;
    diff.abs() * dxy.powf(kernel.n - kernel.alpha + eps) / dxx.powf(eps)
}
