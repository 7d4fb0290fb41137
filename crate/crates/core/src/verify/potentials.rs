//! Local and tail potentials of the growth condition:
//! `∫_{B(x,r)} d(x,y)^(γ−n) dμ(y) ≤ C r^γ` and
//! `∫_{X∖B(x,r)} d(x,y)^(−n−γ) dμ(y) ≤ C r^(−γ)`.

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::growth::{growth_constant_or_hint, BallSampler};
use crate::measure::{AtomicMeasure, MassProfile};
use crate::metric::Location;
use crate::report::{CheckReport, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `∫_{B(x,r)} d^(γ−n) dμ`, bounded by `C r^γ`.
    Inner,
    /// `∫_{X∖B(x,r)} d^(−n−γ) dμ`, bounded by `C r^(−γ)`.
    Outer,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Inner => "inner",
            Side::Outer => "outer",
        }
    }

    /// Constant read off the dyadic-annulus argument:
    /// `C_μ·2^(n−γ)/(1−2^(−γ))` (inner, `γ < n`), `C_μ` (inner, `γ ≥ n`),
    /// `C_μ·2ⁿ/(1−2^(−γ))` (outer).
    pub fn theory_constant(&self, c_mu: f64, n: f64, gamma: f64) -> f64 {
        match self {
            Side::Inner if gamma >= n => c_mu,
            Side::Inner => c_mu * 2f64.powf(n - gamma) / (1.0 - 2f64.powf(-gamma)),
            Side::Outer => c_mu * 2f64.powf(n) / (1.0 - 2f64.powf(-gamma)),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("must be positive, got {gamma}")));
    }
    Ok(())
}

/// `Σ_{0 < d(x,y_j) < r} w_j d(x,y_j)^(γ−n)`.
pub fn inner_potential(measure: &AtomicMeasure, x: &Location, r: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    measure.check_location(x)?;
    let e = gamma - measure.n();
    let mut acc = 0.0;
    for j in 0..measure.len() {
        let d = measure.dist_to(x, j);
        if d > 0.0 && d < r {
            acc += measure.weight(j) * d.powf(e);
        }
    }
    Ok(acc)
}

/// `Σ_{d(x,y_j) ≥ r} w_j d(x,y_j)^(−n−γ)`.
pub fn outer_potential(measure: &AtomicMeasure, x: &Location, r: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    measure.check_location(x)?;
    let e = -measure.n() - gamma;
    let mut acc = 0.0;
    for j in 0..measure.len() {
        let d = measure.dist_to(x, j);
        if d >= r && d > 0.0 {
            acc += measure.weight(j) * d.powf(e);
        }
    }
    Ok(acc)
}

/// Sup over sampled atom-centered `(x, r)`, `r` on the radius grid, of the
/// potential divided by its bound (`r^γ` inner, `r^(−γ)` outer). Passes iff
/// the sup is at most `multiplier` times the theory constant computed from
/// the measure's growth constant `C_μ`.
pub fn check_growth_lemmas(
    measure: &AtomicMeasure,
    gamma: f64,
    side: Side,
    sampler: &BallSampler,
    multiplier: f64,
) -> Result<CheckReport> {
    check_gamma(gamma)?;
    if measure.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let n = measure.n();
    let c_mu = growth_constant_or_hint(measure, sampler)?;
    let c_theory = side.theory_constant(c_mu, n, gamma);
    let radii = sampler.grid.radii(measure);
    let centers = sampler.centers(measure);
    let per_center: Vec<(f64, usize, f64)> = centers
        .par_iter()
        .map(|&c| {
            let profile = MassProfile::new(measure, &Location::Atom(c));
            let order = profile.order();
            let dists = profile.distances();
            // Singular terms at distance zero are dropped.
            let terms: Vec<f64> = order
                .iter()
                .zip(dists)
                .map(|(&j, &d)| {
                    if d == 0.0 {
                        0.0
                    } else {
                        let e = match side {
                            Side::Inner => gamma - n,
                            Side::Outer => -n - gamma,
                        };
                        measure.weight(j) * d.powf(e)
                    }
                })
                .collect();
            let mut prefix = Vec::with_capacity(terms.len() + 1);
            let mut acc = 0.0;
            prefix.push(0.0);
            for t in &terms {
                acc += t;
                prefix.push(acc);
            }
            let total = acc;
            radii
                .iter()
                .map(|&r| {
                    let k = profile.count_within(r);
                    match side {
                        Side::Inner => (prefix[k] / r.powf(gamma), c, r),
                        Side::Outer => (suffix_sum(&terms, k, total, &prefix) * r.powf(gamma), c, r),
                    }
                })
                .fold((f64::NEG_INFINITY, usize::MAX, 0.0), |a, b| if b.0 > a.0 { b } else { a })
        })
        .collect();
    let (sup, center, radius) = per_center
        .into_iter()
        .fold((f64::NEG_INFINITY, usize::MAX, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let check = match side {
        Side::Inner => "inner-potential",
        Side::Outer => "outer-potential",
    };
    let mut report = CheckReport::new(check, sampler.seed)
        .param("gamma", gamma)
        .param("side", side.name())
        .param("n", n)
        .param("c_mu", c_mu)
        .param("c_theory", c_theory)
        .param("multiplier", multiplier)
        .param("centers", centers.len())
        .param("radii", radii.len());
    report.push_level(
        measure.len(),
        sup,
        json!({"center": center, "radius": radius, "ratio_to_theory": sup / c_theory}),
    );
    Ok(report.finish(Tolerance::upper(multiplier * c_theory)))
}

/// Sum of `terms[k..]`, accumulated directly when the tail is short relative
/// to the total so that cancellation in `total − prefix[k]` cannot dominate.
fn suffix_sum(terms: &[f64], k: usize, total: f64, prefix: &[f64]) -> f64 {
    let tail = total - prefix[k];
    if tail > 1e-6 * total {
        tail
    } else {
        terms[k..].iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_measure, MeasureKind};

    #[test]
    fn closed_form_spot_values() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 4096 }).unwrap();
        let x = Location::Point(vec![0.5]);
        let inner = inner_potential(&m, &x, 0.25, 0.5).unwrap();
        assert!((inner - 2.0).abs() <= 0.02 * 2.0, "{inner}");
        let outer = outer_potential(&m, &x, 0.25, 0.5).unwrap();
        let exact = 4.0 * (2.0 - 2f64.sqrt());
        assert!((outer - exact).abs() <= 0.01 * exact, "{outer}");
    }

    #[test]
    fn large_gamma_inner_is_bounded_by_growth_constant() {
        let m = generate_measure(&MeasureKind::Cantor { depth: 8 }).unwrap();
        let r = check_growth_lemmas(&m, 1.5, Side::Inner, &BallSampler::default(), 1.0 + 1e-12).unwrap();
        assert!(r.pass, "{}", r.last_sup());
        assert!(check_growth_lemmas(&m, 0.0, Side::Inner, &BallSampler::default(), 2.0).is_err());
    }
}
