//! Lipschitz-space mapping properties of the renormalized operator `K̃_α`.

use rayon::prelude::*;
use serde_json::json;

use super::{check_kernel, check_levels, default_basepoint, random_pair, ratio, CheckOptions};
use crate::error::{Error, Result};
use crate::kernels::FractionalKernel;
use crate::measure::AtomicMeasure;
use crate::metric::Location;
use crate::norms::{lp_norm_values, LipMethod, LipPlan};
use crate::operators::{atom_locations, Engine, Operator, OperatorConfig, PairRows};
use crate::report::{CheckReport, Tolerance};
use crate::seed::{rng_for, streams};

/// `β = α − n/p` after checking `n/α < p ≤ ∞` and `α − n/p < ε`.
pub(crate) fn lip_image_order(kernel: &FractionalKernel, p: f64) -> Result<f64> {
    let (alpha, n, eps) = (kernel.alpha, kernel.n, kernel.epsilon);
    if !(p >= 1.0) {
        return Err(Error::param("p", format!("must be at least 1, got {p}")));
    }
    if !(p > n / alpha) {
        return Err(Error::Hypothesis(format!("need n/alpha < p, got n/alpha = {} and p = {p}", n / alpha)));
    }
    let beta = if p.is_infinite() { alpha } else { alpha - n / p };
    if !(beta < eps) {
        return Err(Error::Hypothesis(format!("need alpha - n/p < epsilon, got {beta} >= {eps}")));
    }
    Ok(beta)
}

/// Sup over generated `f` of `‖K̃_α f‖_{Lip(β)} / ‖f‖_p` with `β = α − n/p`.
/// Above the exhaustive-pair limit the seminorm is a sampled lower bound,
/// flagged in the level witness. Passes iff bounded and stable.
pub fn check_lip_image(
    levels: &[AtomicMeasure],
    kernel: &FractionalKernel,
    p: f64,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    opts.validate()?;
    let n = check_levels(levels)?;
    check_kernel(kernel, n)?;
    let beta = lip_image_order(kernel, p)?;
    let mut report = opts.stamp(
        CheckReport::new("lip-image", opts.seed)
            .param("kernel", kernel.label.clone())
            .param("alpha", kernel.alpha)
            .param("epsilon", kernel.epsilon)
            .param("p", p)
            .param("beta", beta)
            .param("n", n),
    );
    for m in levels {
        let x0 = default_basepoint(m);
        let config = OperatorConfig::new(kernel.clone(), x0).with_declared_p(p);
        let fs = opts.functions(m, opts.trials)?;
        let refs: Vec<&_> = fs.iter().collect();
        let (images, _) = Operator::KTilde.apply_many(&config, m, &refs, &atom_locations(m))?;
        let plan = LipPlan::new(m, beta, opts.seed)?;
        let ratios: Vec<f64> = fs
            .par_iter()
            .zip(&images)
            .map(|(f, g)| Ok(ratio(plan.seminorm(g)?.value, lp_norm_values(f.values(), m.weights(), p)?)))
            .collect::<Result<_>>()?;
        let (k, sup) = ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        report.push_level(
            m.len(),
            sup,
            json!({
                "function": k,
                "basepoint": x0,
                "lip_lower_bound": plan.method() == LipMethod::Sampled,
            }),
        );
    }
    Ok(report.finish(Tolerance::stability(opts.slack)))
}

/// One sampled `(f, x, y)` evaluation of the subtracted form.
#[derive(Debug, Clone, Copy)]
pub(super) struct PairSample {
    pub(super) function: usize,
    pub(super) x: usize,
    pub(super) y: usize,
    pub(super) ratio: f64,
    pub(super) defect: f64,
    pub(super) identity_error: f64,
}

/// Relative discrepancy of `K̃f(x) − K̃f(y) = S(c) + c·D`.
pub(super) fn identity_error(lhs: f64, subtracted: f64, c: f64, defect: f64) -> f64 {
    let rhs = subtracted + c * defect;
    let scale = lhs.abs().max(subtracted.abs()).max((c * defect).abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// `K̃f(x)` from a precomputed weighted row.
pub(super) fn weighted_dot(row: &[f64], f: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (r, v) in row.iter().zip(f) {
        acc += r * v;
    }
    acc
}

/// Sufficiency mechanism for `Lip(β) → Lip(α+β)`: sup over sampled
/// `(f, x, y)` of `|S| / (‖f‖_{Lip(β)} d(x,y)^(α+β))` with
/// `S = ∫ {k(x,z) − k(y,z)} (f(z) − f(x)) dμ(z)`. Passes iff bounded and
/// stable. The level witness also reports the sup of the cancellation defect
/// `|∫ {k(x,z) − k(y,z)} dμ(z)|` (the bound on `K̃f` itself needs it to
/// vanish) and the largest relative error of
/// `K̃f(x) − K̃f(y) = S + f(x)·defect`.
pub fn check_lip_preservation(
    levels: &[AtomicMeasure],
    kernel: &FractionalKernel,
    beta: f64,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    opts.validate()?;
    let n = check_levels(levels)?;
    check_kernel(kernel, n)?;
    let alpha = kernel.alpha;
    if !(beta > 0.0) {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    if !(alpha + beta < kernel.epsilon) {
        return Err(Error::Hypothesis(format!(
            "need alpha + beta < epsilon, got {} >= {}",
            alpha + beta,
            kernel.epsilon
        )));
    }
    let mut report = opts.stamp(
        CheckReport::new("lip-preserve", opts.seed)
            .param("kernel", kernel.label.clone())
            .param("alpha", alpha)
            .param("beta", beta)
            .param("epsilon", kernel.epsilon)
            .param("n", n),
    );
    for m in levels {
        let pool = opts.function_pool.clamp(1, opts.trials);
        let fs = opts.functions(m, pool)?;
        let plan = LipPlan::new(m, beta, opts.seed)?;
        let lips: Vec<f64> = fs.iter().map(|f| Ok(plan.seminorm(f.values())?.value)).collect::<Result<_>>()?;
        let engine = Engine::new(Operator::KTilde, &OperatorConfig::new(kernel.clone(), default_basepoint(m)), m)?;
        let samples: Vec<PairSample> = (0..opts.trials)
            .into_par_iter()
            .map_init(
                || (vec![0.0; m.len()], vec![0.0; m.len()], vec![0.0; m.len()]),
                |(dists, rx, ry), t| {
                    let mut rng = rng_for(opts.seed, streams::PAIRS, t as u64);
                    let (x, y) = random_pair(m, &mut rng)
                        .ok_or_else(|| Error::NoSamples("no pair of distinct atoms".into()))?;
                    let k = t % pool;
                    let f = fs[k].values();
                    let (lx, ly) = (Location::Atom(x), Location::Atom(y));
                    let rows = PairRows::new(kernel, m, &lx, &ly)?;
                    let s = rows.subtracted(m, f, f[x]);
                    let defect = rows.defect(m);
                    engine.weighted_row(&lx, dists, rx);
                    engine.weighted_row(&ly, dists, ry);
                    let lhs = weighted_dot(rx, f) - weighted_dot(ry, f);
                    let d = m.dist(x, y);
                    Ok(PairSample {
                        function: k,
                        x,
                        y,
                        ratio: ratio(s.abs(), lips[k] * d.powf(alpha + beta)),
                        defect,
                        identity_error: identity_error(lhs, s, f[x], defect),
                    })
                },
            )
            .collect::<Result<_>>()?;
        push_pair_level(&mut report, m.len(), &samples, plan.method() == LipMethod::Sampled);
    }
    Ok(report.finish(Tolerance::stability(opts.slack)))
}

pub(super) fn push_pair_level(report: &mut CheckReport, atoms: usize, samples: &[PairSample], lower_bound: bool) {
    let best = samples
        .iter()
        .fold(None::<&PairSample>, |a, s| match a {
            Some(b) if b.ratio >= s.ratio => Some(b),
            _ => Some(s),
        })
        .unwrap();
    let defect_sup = samples.iter().fold(0.0f64, |a, s| a.max(s.defect.abs()));
    let identity = samples.iter().fold(0.0f64, |a, s| a.max(s.identity_error));
    report.push_level(
        atoms,
        best.ratio,
        json!({
            "function": best.function,
            "x": best.x,
            "y": best.y,
            "defect_sup": defect_sup,
            "identity_error": identity,
            "seminorm_lower_bound": lower_bound,
        }),
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_measure, MeasureKind};

    fn line(n: usize) -> AtomicMeasure {
        generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: n }).unwrap()
    }

    #[test]
    fn lip_image_rejects_small_p() {
        let k = FractionalKernel::riesz(0.6, 1.0).unwrap();
        let err = check_lip_image(&[line(50)], &k, 1.5, &CheckOptions::default());
        assert!(matches!(err, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn subtracted_identity_holds() {
        let k = FractionalKernel::riesz(0.2, 1.0).unwrap();
        let opts = CheckOptions::default().with_trials(40);
        let r = check_lip_preservation(&[line(200)], &k, 0.3, &opts).unwrap();
        assert!(r.witness_series("identity_error")[0] < 1e-10);
        assert!(r.last_sup().is_finite());
    }
}
