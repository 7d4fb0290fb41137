//! RBMO mapping properties: `K̄_α : L^{n/α} → RBMO` and `RBMO → Lip(α)`.

use rayon::prelude::*;
use serde_json::json;

use super::lipschitz::{identity_error, weighted_dot, PairSample};
use super::{check_kernel, check_levels, default_basepoint, random_pair, ratio, CheckOptions};
use crate::error::{Error, Result};
use crate::family::{BallFamily, FamilySpec};
use crate::kernels::FractionalKernel;
use crate::measure::{AtomicMeasure, SampledFunction};
use crate::metric::Location;
use crate::norms::lp_norm_values;
use crate::operators::{atom_locations, Engine, Operator, OperatorConfig, PairRows};
use crate::rbmo::RbmoPlan;
use crate::report::{CheckReport, Tolerance};
use crate::seed::{rng_for, streams};

/// Dilation factor of the two-ball condition used for the `K̄_α` image.
pub const RBMO_IMAGE_RHO: f64 = 10.0;

/// Slack used by the RBMO checks unless the caller overrides it.
pub const RBMO_SLACK: f64 = 0.3;

/// Sup over generated `f` of `‖K̄_α f‖_* / ‖f‖_{n/α}`, with the RBMO norm
/// taken over the family built from `family` with `ρ = 10`. Passes iff
/// bounded and stable.
pub fn check_rbmo_image(
    levels: &[AtomicMeasure],
    kernel: &FractionalKernel,
    opts: &CheckOptions,
    family: &FamilySpec,
) -> Result<CheckReport> {
    opts.validate()?;
    let n = check_levels(levels)?;
    check_kernel(kernel, n)?;
    let (alpha, eps) = (kernel.alpha, kernel.epsilon);
    if !(alpha > 0.0 && alpha < eps && eps <= 1.0) {
        return Err(Error::Hypothesis(format!(
            "need 0 < alpha < epsilon <= 1, got alpha = {alpha}, epsilon = {eps}"
        )));
    }
    let p = n / alpha;
    let spec = family.clone().with_rho(RBMO_IMAGE_RHO);
    let mut report = opts.stamp(
        CheckReport::new("rbmo-image", opts.seed)
            .param("kernel", kernel.label.clone())
            .param("alpha", alpha)
            .param("epsilon", eps)
            .param("p", p)
            .param("rho", RBMO_IMAGE_RHO)
            .param("max_centers", spec.max_centers)
            .param("n", n),
    );
    for m in levels {
        let x0 = default_basepoint(m);
        let config = OperatorConfig::new(kernel.clone(), x0);
        let fs = opts.functions(m, opts.trials)?;
        let refs: Vec<&_> = fs.iter().collect();
        let (images, _) = Operator::KBar.apply_many(&config, m, &refs, &atom_locations(m))?;
        let balls = BallFamily::build(m, &spec)?;
        let plan = RbmoPlan::new(m, &balls)?;
        let ratios: Vec<(f64, f64, f64)> = fs
            .par_iter()
            .zip(&images)
            .map(|(f, g)| {
                let r = plan.evaluate(m, &SampledFunction::new(g.clone())?)?;
                let norm = lp_norm_values(f.values(), m.weights(), p)?;
                Ok((ratio(r.norm, norm), r.oscillation_norm, r.two_ball_norm))
            })
            .collect::<Result<_>>()?;
        let (k, best) = ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, (f64::NEG_INFINITY, 0.0, 0.0)), |a, b| if b.1 .0 > a.1 .0 { b } else { a });
        report.push_level(
            m.len(),
            best.0,
            json!({
                "function": k,
                "basepoint": x0,
                "balls": balls.len(),
                "pairs": balls.pairs.len(),
                "oscillation_part": best.1,
                "two_ball_part": best.2,
            }),
        );
    }
    Ok(report.finish(Tolerance::stability(opts.slack)))
}

/// `m_{2B}(f)` over `B(x, 2 d(x,y))`, accumulated relative to `f(x)`.
fn double_ball_mean(measure: &AtomicMeasure, dists: &[f64], radius: f64, f: &[f64], anchor: f64) -> f64 {
    let (mut mass, mut acc) = (0.0, 0.0);
    for (j, &d) in dists.iter().enumerate() {
        if d < radius {
            let w = measure.weight(j);
            mass += w;
            acc += w * (f[j] - anchor);
        }
    }
    if mass == 0.0 {
        anchor
    } else {
        anchor + acc / mass
    }
}

/// Sufficiency mechanism for `RBMO → Lip(α)`: sup over sampled `(f, x, y)`
/// of `|∫ {k(x,z) − k(y,z)} (f(z) − m_{2B} f) dμ(z)| / (‖f‖_* d(x,y)^α)`
/// with `B = B(x, d(x,y))` and `‖f‖_*` over the ball family. The cancellation
/// defect and the identity error are reported as in
/// [`check_lip_preservation`](super::check_lip_preservation).
pub fn check_rbmo_to_lip(
    levels: &[AtomicMeasure],
    kernel: &FractionalKernel,
    opts: &CheckOptions,
    family: &FamilySpec,
) -> Result<CheckReport> {
    opts.validate()?;
    let n = check_levels(levels)?;
    check_kernel(kernel, n)?;
    let alpha = kernel.alpha;
    if !(alpha > 0.0 && alpha < kernel.epsilon) {
        return Err(Error::Hypothesis(format!(
            "need 0 < alpha < epsilon, got alpha = {alpha}, epsilon = {}",
            kernel.epsilon
        )));
    }
    let mut report = opts.stamp(
        CheckReport::new("rbmo-lip", opts.seed)
            .param("kernel", kernel.label.clone())
            .param("alpha", alpha)
            .param("epsilon", kernel.epsilon)
            .param("rho", family.rho)
            .param("max_centers", family.max_centers)
            .param("n", n),
    );
    for m in levels {
        let pool = opts.function_pool.clamp(1, opts.trials);
        let fs = opts.functions(m, pool)?;
        let balls = BallFamily::build(m, family)?;
        let plan = RbmoPlan::new(m, &balls)?;
        let norms: Vec<f64> = fs.iter().map(|f| Ok(plan.evaluate(m, f)?.norm)).collect::<Result<_>>()?;
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
                    let d = m.dist(x, y);
                    engine.weighted_row(&ly, dists, ry);
                    engine.weighted_row(&lx, dists, rx);
                    let center = double_ball_mean(m, dists, 2.0 * d, f, f[x]);
                    let rows = PairRows::new(kernel, m, &lx, &ly)?;
                    let s = rows.subtracted(m, f, center);
                    let defect = rows.defect(m);
                    let lhs = weighted_dot(rx, f) - weighted_dot(ry, f);
                    Ok(PairSample {
                        function: k,
                        x,
                        y,
                        ratio: ratio(s.abs(), norms[k] * d.powf(alpha)),
                        defect,
                        identity_error: identity_error(lhs, s, center, defect),
                    })
                },
            )
            .collect::<Result<_>>()?;
        super::lipschitz::push_pair_level(&mut report, m.len(), &samples, false);
    }
    Ok(report.finish(Tolerance::stability(opts.slack)))
}
