//! RBMO norms relative to a ball family.
//!
//! For a family with parameter `ρ`:
//!
//! - oscillation part: `sup_B (1/μ(ρB)) Σ_{y∈B} w |f(y) − m_B(f)|`;
//! - two-ball part: `sup_{B⊂V} |m_B(f) − m_V(f)| / (K_{B,V} (μ(ρB)/μ(B) + μ(ρV)/μ(V)))`;
//!
//! and the norm is the larger of the two. Means `m_B` are index-ordered sums.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::family::{BallFamily, Members};
use crate::measure::{AtomicMeasure, MassProfile, SampledFunction};
use crate::metric::Location;
use crate::norms::k_coeff_with;

#[derive(Debug, Clone, PartialEq)]
pub struct RbmoReport {
    pub oscillation_norm: f64,
    pub two_ball_norm: f64,
    pub norm: f64,
    /// Ball attaining the oscillation part.
    pub oscillation_witness: Option<usize>,
    /// Pair attaining the two-ball part.
    pub pair_witness: Option<(usize, usize)>,
    /// Massless balls skipped.
    pub dropped: usize,
}

impl RbmoReport {
    pub fn witness_json(&self) -> Value {
        json!({
            "oscillation_norm": self.oscillation_norm,
            "two_ball_norm": self.two_ball_norm,
            "oscillation_ball": self.oscillation_witness,
            "pair": self.pair_witness.map(|(i, j)| [i, j]),
        })
    }
}

/// Diagnostic sups with `f_U = m_U(f)`: `(1/μ(ρU)) ∫_U |f − f_U|` and
/// `|f_U − f_W| / K_{U,W}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmoAltReport {
    pub oscillation_sup: f64,
    pub coefficient_sup: f64,
}

/// Function-independent data for evaluating RBMO norms of many functions
/// over one family.
#[derive(Debug, Clone)]
pub struct RbmoPlan {
    len: usize,
    members: Vec<Members>,
    mass: Vec<f64>,
    rho_mass: Vec<f64>,
    /// `(i, j, K_{B,V}, full two-ball denominator)` for pairs with massive balls.
    pairs: Vec<(usize, usize, f64, f64)>,
    dropped: usize,
}

impl RbmoPlan {
    pub fn new(measure: &AtomicMeasure, family: &BallFamily) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::param("family", "ball family is empty"));
        }
        for (k, &c) in family.centers.iter().enumerate() {
            if c >= measure.len() {
                return Err(Error::schema(format!("centers[{k}]"), format!("atom {c} out of range")));
            }
        }
        let n = measure.n();
        let members = family.members(measure);
        let mass: Vec<f64> = members
            .iter()
            .map(|m| m.iter().map(|j| measure.weight(j)).sum())
            .collect();
        let mut unique: Vec<usize> = family.centers.clone();
        unique.sort_unstable();
        unique.dedup();
        let profiles: Vec<MassProfile> = unique
            .par_iter()
            .map(|&c| MassProfile::new(measure, &Location::Atom(c)))
            .collect();
        let profile = |c: usize| &profiles[unique.binary_search(&c).unwrap()];
        let rho_mass: Vec<f64> = (0..family.len())
            .map(|i| profile(family.centers[i]).mass_within(family.rho * family.radii[i]))
            .collect();
        let pairs = family
            .pairs
            .par_iter()
            .filter(|&&(i, j)| mass[i] > 0.0 && mass[j] > 0.0)
            .map(|&(i, j)| {
                let prof = profile(family.centers[i]);
                let k = k_coeff_with(family.radii[i], family.radii[j], n, |rad| prof.mass_within(rad))?;
                let denom = k * (rho_mass[i] / mass[i] + rho_mass[j] / mass[j]);
                Ok((i, j, k, denom))
            })
            .collect::<Result<Vec<_>>>()?;
        let dropped = mass.iter().filter(|&&m| m == 0.0).count();
        if dropped == family.len() {
            return Err(Error::param("family", "every ball in the family is massless"));
        }
        Ok(RbmoPlan {
            len: measure.len(),
            members,
            mass,
            rho_mass,
            pairs,
            dropped,
        })
    }

    /// `K_{B,V}` for every retained pair, in family order.
    pub fn k_coefficients(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.pairs.iter().map(|&(i, j, k, _)| (i, j, k))
    }

    /// `m_B(f)` for every ball (`NaN` for massless balls), accumulated
    /// relative to the first member's value so constants average exactly.
    pub fn means(&self, measure: &AtomicMeasure, f: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .zip(&self.mass)
            .map(|(m, &mass)| {
                if mass == 0.0 {
                    return f64::NAN;
                }
                let anchor = m.iter().next().map_or(0.0, |j| f[j]);
                let mut acc = 0.0;
                for j in m.iter() {
                    acc += measure.weight(j) * (f[j] - anchor);
                }
                anchor + acc / mass
            })
            .collect()
    }

    /// Per-ball oscillation ratios `(1/μ(ρB)) Σ_B w|f − m_B|`.
    fn oscillations(&self, measure: &AtomicMeasure, f: &[f64], means: &[f64]) -> Vec<f64> {
        (0..self.members.len())
            .into_par_iter()
            .map(|i| {
                if self.mass[i] == 0.0 {
                    return f64::NAN;
                }
                let mut acc = 0.0;
                for j in self.members[i].iter() {
                    acc += measure.weight(j) * (f[j] - means[i]).abs();
                }
                acc / self.rho_mass[i]
            })
            .collect()
    }

    pub fn evaluate(&self, measure: &AtomicMeasure, f: &SampledFunction) -> Result<RbmoReport> {
        if f.len() != self.len {
            return Err(Error::Misaligned {
                expected: self.len,
                got: f.len(),
            });
        }
        let values = f.values();
        let means = self.means(measure, values);
        let osc = self.oscillations(measure, values, &means);
        let (oscillation_witness, oscillation_norm) = argmax(osc.iter().copied().enumerate());
        let (pw, two_ball_norm) = argmax(
            self.pairs
                .iter()
                .enumerate()
                .map(|(k, &(i, j, _, denom))| (k, (means[i] - means[j]).abs() / denom)),
        );
        Ok(RbmoReport {
            oscillation_norm,
            two_ball_norm,
            norm: oscillation_norm.max(two_ball_norm),
            oscillation_witness,
            pair_witness: pw.map(|k| (self.pairs[k].0, self.pairs[k].1)),
            dropped: self.dropped,
        })
    }

    pub fn alt_diagnostic(&self, measure: &AtomicMeasure, f: &SampledFunction) -> Result<RbmoAltReport> {
        if f.len() != self.len {
            return Err(Error::Misaligned {
                expected: self.len,
                got: f.len(),
            });
        }
        let means = self.means(measure, f.values());
        let osc = self.oscillations(measure, f.values(), &means);
        let (_, oscillation_sup) = argmax(osc.iter().copied().enumerate());
        let (_, coefficient_sup) = argmax(
            self.pairs
                .iter()
                .enumerate()
                .map(|(k, &(i, j, kk, _))| (k, (means[i] - means[j]).abs() / kk)),
        );
        Ok(RbmoAltReport {
            oscillation_sup,
            coefficient_sup,
        })
    }
}

/// Largest non-NaN value and its first index; `(None, 0)` when empty.
fn argmax(items: impl Iterator<Item = (usize, f64)>) -> (Option<usize>, f64) {
    let mut best = (None, 0.0);
    for (k, v) in items {
        if v > best.1 || (best.0.is_none() && v >= 0.0) {
            best = (Some(k), v);
        }
    }
    best
}

pub fn rbmo_norm(f: &SampledFunction, measure: &AtomicMeasure, family: &BallFamily) -> Result<RbmoReport> {
    RbmoPlan::new(measure, family)?.evaluate(measure, f)
}

pub fn rbmo_alt_diagnostic(f: &SampledFunction, measure: &AtomicMeasure, family: &BallFamily) -> Result<RbmoAltReport> {
    RbmoPlan::new(measure, family)?.alt_diagnostic(measure, f)
}
