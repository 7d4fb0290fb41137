//! Fractional integration between Lebesgue spaces: the strong and weak
//! type bounds, the necessity of the growth condition, and the local bound
//! for functions supported near a ball.

use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{check_levels, ratio, CheckOptions};
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::growth::{sup_over_balls, BallSampler};
use crate::kernels::FractionalKernel;
use crate::measure::{AtomicMeasure, Ball, MassProfile, SampledFunction};
use crate::norms::{lp_norm_values, weak_norm_values};
use crate::operators::{atom_locations, Engine, Operator, OperatorConfig};
use crate::ratio::sobolev_conjugate;
use crate::report::{CheckReport, Tolerance};
use crate::seed::{rng_for, streams};

fn check_alpha(alpha: f64, n: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < n) {
        return Err(Error::param("alpha", format!("must lie in (0, {n}), got {alpha}")));
    }
    Ok(())
}

/// Validates `1 ≤ p < n/α` and returns `(q, exact)` with `1/q = 1/p − α/n`.
pub(crate) fn hls_exponent(p: f64, alpha: f64, n: f64) -> Result<(f64, bool)> {
    check_alpha(alpha, n)?;
    if !(p >= 1.0) {
        return Err(Error::param("p", format!("must be at least 1, got {p}")));
    }
    if !(p < n / alpha) {
        return Err(Error::Hypothesis(format!("need p < n/alpha = {}, got p = {p}", n / alpha)));
    }
    sobolev_conjugate(p, alpha, n).ok_or_else(|| Error::Hypothesis("need 1/p - alpha/n > 0".into()))
}

/// `I_α` values of `fs` at every atom: `result[k][j] = I_α f_k(y_j)`.
pub(crate) fn i_alpha_all(measure: &AtomicMeasure, alpha: f64, fs: &[SampledFunction]) -> Result<Vec<Vec<f64>>> {
    let kernel = FractionalKernel::riesz(alpha, measure.n())?;
    let engine = Engine::new(Operator::IAlpha, &OperatorConfig::new(kernel, 0), measure)?;
    let slices: Vec<&[f64]> = fs.iter().map(|f| f.values()).collect();
    Ok(engine.apply_many(&slices, &atom_locations(measure))?.0)
}

/// Strong ratio `‖I_α f‖_q / ‖f‖_p` (for `p > 1`) and weak ratio
/// `‖I_α f‖_{q,∞} / ‖f‖_p` over generated test functions, per level.
/// Passes iff every sup is finite and consecutive levels agree within the
/// slack (the strong sup is the level's `sup_ratio`, the weak sup is also
/// monitored; for `p = 1` only the weak sup exists).
pub fn check_hls(levels: &[AtomicMeasure], alpha: f64, p: f64, opts: &CheckOptions) -> Result<CheckReport> {
    opts.validate()?;
    let n = check_levels(levels)?;
    let (q, exact) = hls_exponent(p, alpha, n)?;
    let strong = p > 1.0;
    let mut report = opts.stamp(
        CheckReport::new("hls", opts.seed)
            .param("alpha", alpha)
            .param("p", p)
            .param("q", q)
            .param("q_exact", exact)
            .param("n", n)
            .param("mode", if strong { "strong+weak" } else { "weak" }),
    );
    for m in levels {
        let fs = opts.functions(m, opts.trials)?;
        let images = i_alpha_all(m, alpha, &fs)?;
        let ratios: Vec<(f64, f64)> = fs
            .par_iter()
            .zip(&images)
            .map(|(f, g)| {
                let den = lp_norm_values(f.values(), m.weights(), p)?;
                let weak = ratio(weak_norm_values(g, m.weights(), q)?, den);
                let strong = if strong {
                    ratio(lp_norm_values(g, m.weights(), q)?, den)
                } else {
                    f64::NAN
                };
                Ok((strong, weak))
            })
            .collect::<Result<_>>()?;
        let (si, s_sup) = argmax(ratios.iter().map(|r| r.0));
        let (wi, w_sup) = argmax(ratios.iter().map(|r| r.1));
        let sup = if strong { s_sup } else { w_sup };
        report.push_level(
            m.len(),
            sup,
            json!({
                "strong_sup": if strong { json!(s_sup) } else { json!(null) },
                "strong_function": if strong { json!(si) } else { json!(null) },
                "weak_sup": w_sup,
                "weak_function": wi,
            }),
        );
    }
    let tol = if strong {
        Tolerance::stability(opts.slack).with_series(&["weak_sup"])
    } else {
        Tolerance::stability(opts.slack)
    };
    Ok(report.finish(tol))
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Sup over atom-centered balls (`r ≥ h`) of `μ(B)^(1−α/n) / r^(n−α)`, per
/// radius floor as in [`crate::growth_constant`]. The sup stays bounded
/// exactly when the measure grows like `rⁿ`; growth from level to level
/// shows that the Sobolev-type bound from `Lᵖ` to `L^q` must fail.
pub fn check_necessity(measure: &AtomicMeasure, alpha: f64, p: f64, sampler: &BallSampler) -> Result<CheckReport> {
    let n = measure.n();
    let (q, exact) = hls_exponent(p, alpha, n)?;
    let e = 1.0 - alpha / n;
    let report = if measure.is_empty() {
        let mut r = CheckReport::new("necessity", sampler.seed);
        r.push_level(0, 0.0, json!({}));
        r
    } else {
        sup_over_balls(measure, sampler, "necessity", |mass, r| mass.powf(e) / r.powf(n - alpha))?
    };
    let mut report = report
        .param("alpha", alpha)
        .param("p", p)
        .param("q", q)
        .param("q_exact", exact)
        .param("n", n)
        .param("exponent", e);
    let tol = Tolerance::stability(sampler.slack);
    let growing = report.levels.windows(2).all(|w| w[1].sup_ratio > (1.0 + sampler.slack) * w[0].sup_ratio)
        && report.levels.len() > 1;
    report.note(if growing {
        "sup grows as the minimum radius shrinks: the growth condition fails for this n"
    } else {
        "sup is stable under radius refinement"
    });
    Ok(report.finish(tol))
}

/// Sup over sampled `(B, f)` of `∫_B |I_α f| dμ / (‖f‖_{n/α} μ(ρB))`, where
/// `f` is a generated function truncated to `ρB` (the indicator of `ρB` when
/// the truncation vanishes) and `B` is an atom-centered ball with a grid
/// radius. Passes iff bounded and stable across levels.
pub fn check_local_potential(
    levels: &[AtomicMeasure],
    alpha: f64,
    rho: f64,
    opts: &CheckOptions,
    family: &FamilySpec,
) -> Result<CheckReport> {
    opts.validate()?;
    let n = check_levels(levels)?;
    check_alpha(alpha, n)?;
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(Error::param("rho", format!("must exceed 1, got {rho}")));
    }
    let p = n / alpha;
    let mut report = opts.stamp(
        CheckReport::new("localpot", opts.seed)
            .param("alpha", alpha)
            .param("rho", rho)
            .param("p", p)
            .param("n", n),
    );
    for m in levels {
        let radii = family.grid.radii(m);
        let diam = if m.diameter() > 0.0 { m.diameter() } else { 1.0 };
        let mut balls = Vec::with_capacity(opts.trials);
        let mut fs = Vec::with_capacity(opts.trials);
        for k in 0..opts.trials {
            let mut rng = rng_for(opts.seed, streams::BALLS, k as u64);
            let center = super::random_atom(m, &mut rng);
            let target = diam * (0.01f64.ln() + rng.gen::<f64>() * (0.5f64.ln() - 0.01f64.ln())).exp();
            let r = radii
                .iter()
                .copied()
                .min_by(|a, b| (a / target).ln().abs().total_cmp(&(b / target).ln().abs()))
                .unwrap();
            let ball = Ball::new(center, r)?;
            let wide = ball.scaled(rho);
            let mut f = opts.function(m, k)?.truncated(m, &wide);
            if f.values().iter().all(|&v| v == 0.0) {
                f = SampledFunction::from_fn(m, |j| if wide.contains(m, j) { opts.scale } else { 0.0 })?;
            }
            balls.push(ball);
            fs.push(f);
        }
        let images = i_alpha_all(m, alpha, &fs)?;
        let ratios: Vec<f64> = (0..opts.trials)
            .into_par_iter()
            .map(|k| {
                let ball = &balls[k];
                let profile = MassProfile::new(m, &ball.center);
                let rho_mass = profile.mass_within(rho * ball.radius);
                let mut local = 0.0;
                for j in m.atoms_in(ball) {
                    local += m.weight(j) * images[k][j].abs();
                }
                let norm = lp_norm_values(fs[k].values(), m.weights(), p)?;
                Ok(ratio(local, norm * rho_mass))
            })
            .collect::<Result<_>>()?;
        let (k, sup) = argmax(ratios.iter().copied());
        let b = &balls[k];
        report.push_level(
            m.len(),
            sup,
            json!({"trial": k, "center": b.center.atom_index(), "radius": b.radius}),
        );
    }
    Ok(report.finish(Tolerance::stability(opts.slack)))
}

