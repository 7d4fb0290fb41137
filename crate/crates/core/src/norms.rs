//! `Lᵖ`, weak `L^q`, `Lip(β)` functionals and the two-ball coefficient `K_{B,V}`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{ball_mass, AtomicMeasure, Ball, SampledFunction};
use crate::seed::{rng_for, streams};

/// Up to this many atoms the Lipschitz seminorm is exact over all pairs.
pub const LIP_EXHAUSTIVE_LIMIT: usize = 2000;
/// Number of uniformly sampled pairs above [`LIP_EXHAUSTIVE_LIMIT`].
pub const LIP_SAMPLED_PAIRS: usize = 1_000_000;

/// `(Σ w_j |f_j|^p)^(1/p)`, or `max |f_j|` for `p = ∞`.
pub fn lp_norm(f: &SampledFunction, measure: &AtomicMeasure, p: f64) -> Result<f64> {
    f.check_aligned(measure)?;
    lp_norm_values(f.values(), measure.weights(), p)
}

pub(crate) fn lp_norm_values(values: &[f64], weights: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::param("p", format!("exponent must be at least 1, got {p}")));
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || max == 0.0 {
        return Ok(max);
    }
    let mut acc = 0.0;
    if p == 1.0 {
        for (v, w) in values.iter().zip(weights) {
            acc += w * v.abs();
        }
        return Ok(acc);
    }
    // Scaled by the maximum so large exponents cannot overflow.
    for (v, w) in values.iter().zip(weights) {
        let t = v.abs() / max;
        acc += w * if p == 2.0 { t * t } else { t.powf(p) };
    }
    Ok(max * if p == 2.0 { acc.sqrt() } else { acc.powf(1.0 / p) })
}

/// `sup_λ λ · μ({|f| > λ})^(1/q)`, computed exactly from the sorted values:
/// the sup over `λ` just below each distinct `|f| = v` is `v · μ({|f| ≥ v})^(1/q)`.
pub fn weak_norm(f: &SampledFunction, measure: &AtomicMeasure, q: f64) -> Result<f64> {
    f.check_aligned(measure)?;
    weak_norm_values(f.values(), measure.weights(), q)
}

pub(crate) fn weak_norm_values(values: &[f64], weights: &[f64], q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::param("q", format!("exponent must be at least 1, got {q}")));
    }
    let mut order: Vec<usize> = (0..values.len()).filter(|&j| values[j] != 0.0).collect();
    if q.is_infinite() || order.is_empty() {
        return Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut k = 0;
    while k < order.len() {
        let v = values[order[k]].abs();
        while k < order.len() && values[order[k]].abs() == v {
            mass += weights[order[k]];
            k += 1;
        }
        best = best.max(v * mass.powf(1.0 / q));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipMethod {
    /// All distinct pairs: the value is the exact seminorm.
    Exhaustive,
    /// Sampled pairs plus nearest-neighbor pairs: the value is a lower bound.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipEstimate {
    pub value: f64,
    pub method: LipMethod,
    pub pairs: usize,
    pub witness: (usize, usize),
}

/// Precomputed pairs and `d^(−β)` factors, reusable across many functions on
/// the same measure.
#[derive(Debug, Clone)]
pub struct LipPlan {
    beta: f64,
    len: usize,
    pairs: Vec<(u32, u32, f64)>,
    method: LipMethod,
}

impl LipPlan {
    pub fn new(measure: &AtomicMeasure, beta: f64, seed: u64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::param("beta", format!("order must lie in (0, 1], got {beta}")));
        }
        let n = measure.len();
        if n < 2 {
            return Err(Error::TooFewAtoms { atoms: n, required: 2 });
        }
        let factor = |i: usize, j: usize| {
            let d = measure.dist(i, j);
            (d > 0.0).then(|| (i as u32, j as u32, d.powf(-beta)))
        };
        let (pairs, method) = if n <= LIP_EXHAUSTIVE_LIMIT {
            let pairs: Vec<_> = (0..n)
                .into_par_iter()
                .flat_map_iter(|i| (i + 1..n).filter_map(move |j| factor(i, j)))
                .collect();
            (pairs, LipMethod::Exhaustive)
        } else {
            let mut pairs: Vec<_> = (0..n)
                .into_par_iter()
                .filter_map(|i| {
                    let mut best = (f64::INFINITY, i);
                    for j in 0..n {
                        let d = measure.dist(i, j);
                        if d > 0.0 && d < best.0 {
                            best = (d, j);
                        }
                    }
                    factor(i, best.1)
                })
                .collect();
            let chunk = 4096;
            let sampled: Vec<_> = (0..LIP_SAMPLED_PAIRS.div_ceil(chunk))
                .into_par_iter()
                .flat_map_iter(|c| {
                    let mut rng = rng_for(seed, streams::LIP_PAIRS, c as u64);
                    (0..chunk)
                        .filter_map(|_| factor(rng.gen_range(0..n), rng.gen_range(0..n)))
                        .collect::<Vec<_>>()
                })
                .collect();
            pairs.extend(sampled);
            (pairs, LipMethod::Sampled)
        };
        Ok(LipPlan {
            beta,
            len: n,
            pairs,
            method,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn method(&self) -> LipMethod {
        self.method
    }

    pub fn seminorm(&self, values: &[f64]) -> Result<LipEstimate> {
        if values.len() != self.len {
            return Err(Error::Misaligned {
                expected: self.len,
                got: values.len(),
            });
        }
        let mut best = (0.0f64, (0usize, 0usize));
        for &(i, j, inv) in &self.pairs {
            let r = (values[i as usize] - values[j as usize]).abs() * inv;
            if r > best.0 {
                best = (r, (i as usize, j as usize));
            }
        }
        Ok(LipEstimate {
            value: best.0,
            method: self.method,
            pairs: self.pairs.len(),
            witness: best.1,
        })
    }
}

/// `sup_{x≠y} |f(x) − f(y)| / d(x,y)^β` over atoms: exact up to
/// [`LIP_EXHAUSTIVE_LIMIT`] atoms, a flagged sampled lower bound above.
pub fn lip_seminorm(f: &SampledFunction, measure: &AtomicMeasure, beta: f64) -> Result<LipEstimate> {
    f.check_aligned(measure)?;
    LipPlan::new(measure, beta, 0)?.seminorm(f.values())
}

/// `N_{B,V} = min{k ≥ 0 : 2^k r ≥ s}`.
pub fn n_bv(r: f64, s: f64) -> usize {
    let mut k = 0;
    let mut rad = r;
    while rad < s {
        k += 1;
        rad = r * 2f64.powi(k as i32);
    }
    k
}

/// `1 + Σ_{k=1}^{N} μ(2^k B)/(2^k r)ⁿ` with `N = N_{B,V}`, where
/// `mass_at(radius)` returns `μ` of the concentric ball of that radius.
pub fn k_coeff_with(r: f64, s: f64, n: f64, mut mass_at: impl FnMut(f64) -> f64) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) {
        return Err(Error::param("radius", "ball radii must be positive"));
    }
    if r > s {
        return Err(Error::param("radius", format!("need r ≤ s, got r = {r}, s = {s}")));
    }
    let mut k_coeff = 1.0;
    for k in 1..=n_bv(r, s) {
        let rad = r * 2f64.powi(k as i32);
        k_coeff += mass_at(rad) / rad.powf(n);
    }
    Ok(k_coeff)
}

/// `K_{B,V}` for balls `B ⊂ V` of radii `r ≤ s`.
pub fn k_coeff(b: &Ball, v: &Ball, measure: &AtomicMeasure, n: f64) -> Result<f64> {
    k_coeff_with(b.radius, v.radius, n, |rad| ball_mass(measure, &Ball::new(b.center.clone(), rad).unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_measure, MeasureKind};
    use crate::metric::{Location, MetricSpace};

    fn two_atoms() -> AtomicMeasure {
        AtomicMeasure::new(
            MetricSpace::euclidean(1),
            vec![vec![0.0], vec![1.0]],
            vec![0.25, 0.75],
            1.0,
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn lp_examples() {
        let m = two_atoms();
        let f = SampledFunction::new(vec![3.0, 0.0]).unwrap();
        assert_eq!(lp_norm(&SampledFunction::zeros(2), &m, 2.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&f, &m, 2.0).unwrap(), 1.5);
        assert_eq!(lp_norm(&f, &m, f64::INFINITY).unwrap(), 3.0);
        assert!(lp_norm(&f, &m, 0.5).is_err());
    }

    #[test]
    fn weak_examples() {
        let m = two_atoms();
        let f = SampledFunction::new(vec![3.0, 0.0]).unwrap();
        assert_eq!(weak_norm(&SampledFunction::zeros(2), &m, 2.0).unwrap(), 0.0);
        assert_eq!(weak_norm(&f, &m, 2.0).unwrap(), 1.5);
        let u = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 8 }).unwrap();
        let ind = SampledFunction::from_fn(&u, |j| if j < 3 { 1.0 } else { 0.0 }).unwrap();
        for q in [1.0, 1.5, 3.0] {
            let w = weak_norm(&ind, &u, q).unwrap();
            assert!((w - 0.375f64.powf(1.0 / q)).abs() < 1e-15);
        }
        assert!(weak_norm(&f, &m, 0.9).is_err());
    }

    #[test]
    fn lip_examples() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 1000 }).unwrap();
        let c = SampledFunction::constant(1000, 4.0);
        assert_eq!(lip_seminorm(&c, &m, 0.5).unwrap().value, 0.0);
        let id = SampledFunction::from_fn(&m, |j| m.coords(j).unwrap()[0]).unwrap();
        let half = lip_seminorm(&id, &m, 0.5).unwrap();
        assert_eq!(half.method, LipMethod::Exhaustive);
        assert_eq!(half.witness, (0, 999));
        assert!((half.value - 0.999f64.sqrt()).abs() < 1e-12);
        let one = lip_seminorm(&id, &m, 1.0).unwrap();
        assert!((one.value - 1.0).abs() < 1e-9);
        assert!(lip_seminorm(&id, &m, 0.0).is_err());
    }

    #[test]
    fn sampled_lip_is_a_lower_bound() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 2500 }).unwrap();
        let f = SampledFunction::from_fn(&m, |j| (7.0 * m.coords(j).unwrap()[0]).sin()).unwrap();
        let est = lip_seminorm(&f, &m, 1.0).unwrap();
        assert_eq!(est.method, LipMethod::Sampled);
        assert!(est.value <= 7.0 && est.value > 6.9);
    }

    #[test]
    fn k_coeff_examples() {
        assert_eq!(n_bv(1.0, 1.0), 0);
        assert_eq!(n_bv(1.0, 8.0), 3);
        assert_eq!(n_bv(1.0, 8.5), 4);
        assert_eq!(k_coeff_with(0.3, 0.3, 1.0, |_| 5.0).unwrap(), 1.0);
        let k = k_coeff_with(1.0, 8.0, 1.0, |rad| rad).unwrap();
        assert_eq!(k, 4.0);
        assert_eq!(k_coeff_with(1.0, 8.0, 1.0, |_| 0.0).unwrap(), 1.0);
        assert!(k_coeff_with(2.0, 1.0, 1.0, |_| 0.0).is_err());

        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 64 }).unwrap();
        let b = Ball::new(Location::Atom(10), 0.05).unwrap();
        let v = Ball::new(Location::Atom(10), 0.4).unwrap();
        assert!(k_coeff(&b, &v, &m, 1.0).unwrap() >= 1.0);
    }
}
