//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use fracmeasure::family::{BallFamily, FamilySpec};
use fracmeasure::growth::BallSampler;
use fracmeasure::kernels::{check_regularity, FractionalKernel};
use fracmeasure::measure::{AtomicMeasure, SampledFunction};
use fracmeasure::metric::{Location, MetricSpace};
use fracmeasure::norms::{k_coeff, k_coeff_with, lip_seminorm, lp_norm};
use fracmeasure::operators::{apply_k_tilde, atom_locations, Operator, OperatorConfig};
use fracmeasure::rbmo::{rbmo_norm, RbmoPlan};
use fracmeasure::report::CheckReport;
use fracmeasure::testfn::{TestFunctionKind, TestFunctionSpec};
use fracmeasure::verify::{self, CheckOptions, Side};
use fracmeasure::{generate_measure, Ball, MeasureKind};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: fracmeasure::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn uniform(n: usize) -> AtomicMeasure {
    generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: n }).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn sups(r: &CheckReport) -> Vec<f64> {
    r.levels.iter().map(|l| l.sup_ratio).collect()
}

fn require_pass(r: &CheckReport) -> Result<(), String> {
    ensure(r.pass, || format!("{} failed: sups {:?}, trends {:?}", r.check, sups(r), r.trend))
}

fn growth_potentials() -> Outcome {
    let start = Instant::now();
    let measures = [uniform(4096), generate_measure(&MeasureKind::Cantor { depth: 12 }).unwrap()];
    let sampler = BallSampler::default();
    let mut worst: f64 = 0.0;
    for m in &measures {
        for gamma in [0.25, 0.5, 1.5] {
            for side in [Side::Inner, Side::Outer] {
                let r = ok(verify::check_growth_lemmas(m, gamma, side, &sampler, 2.0))?;
                require_pass(&r)?;
                let bound = r.tolerance.upper_bound.unwrap();
                worst = worst.max(r.last_sup() / bound * 2.0);
            }
        }
    }
    // ∫_{B(0.5, 0.25)} d^(-1/2) dμ = 2 ∫_0^0.25 t^(-1/2) dt = 2.
    let spot = ok(verify::inner_potential(&measures[0], &Location::Point(vec![0.5]), 0.25, 0.5))?;
    ensure(rel(spot, 2.0) < 0.02, || format!("inner spot value {spot}, expected 2"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("max sup/theory {worst:.3} (limit 2), spot {spot:.5}"))
}

fn hls() -> Outcome {
    let start = Instant::now();
    let levels = [uniform(1000), uniform(4000)];
    let opts = CheckOptions::default().with_trials(200);
    let strong = ok(verify::check_hls(&levels, 1.0 / 3.0, 2.0, &opts))?;
    require_pass(&strong)?;
    ensure(strong.params["q"] == 6.0 && strong.params["q_exact"] == true, || {
        format!("q = {}", strong.params["q"])
    })?;
    let weak = ok(verify::check_hls(&levels, 1.0 / 3.0, 1.0, &opts))?;
    require_pass(&weak)?;
    ensure(weak.params["q"] == 1.5, || format!("endpoint q = {}", weak.params["q"]))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "strong trend {:.3}, weak trend {:.3}, endpoint trend {:.3}",
        strong.trend[0],
        rel_trend(&strong, "weak_sup"),
        weak.trend[0]
    ))
}

fn rel_trend(r: &CheckReport, key: &str) -> f64 {
    let s = r.witness_series(key);
    s[s.len() - 1] / s[0]
}

fn necessity() -> Outcome {
    let atoms = 4096;
    let power = generate_measure(&MeasureKind::PowerDensity { exponent: 0.5, atoms }).unwrap();
    let control = uniform(atoms);
    let sampler = |m: &AtomicMeasure| BallSampler {
        max_centers: atoms,
        min_radius: Some(40.0 * m.h()),
        ..BallSampler::default()
    };
    let p = ok(verify::check_necessity(&power, 1.0 / 3.0, 1.0, &sampler(&power)))?;
    let u = ok(verify::check_necessity(&control, 1.0 / 3.0, 1.0, &sampler(&control)))?;
    ensure(p.levels.len() == 3, || "expected three levels".into())?;
    ensure(p.trend.iter().all(|&t| t >= 1.2), || format!("power density trends {:?}", p.trend))?;
    ensure(u.trend.iter().all(|&t| (t - 1.0).abs() <= 0.1), || format!("uniform trends {:?}", u.trend))?;
    Ok(format!("power density trends {:?}, uniform trends {:?}", round(&p.trend), round(&u.trend)))
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}

fn kernel_regularity() -> Outcome {
    let trials = 10_000;
    let levels = [uniform(1000), uniform(4000)];
    let mut out = Vec::new();
    for alpha in [0.3, 0.6] {
        let k = FractionalKernel::riesz(alpha, 1.0).unwrap();
        let sharp = 2.0 * (2f64.powf(1.0 - alpha) - 1.0);
        let mut fitted = Vec::new();
        for m in &levels {
            let r = ok(check_regularity(&k, m, trials, 0))?;
            require_pass(&r)?;
            let w = &r.levels[0].witness;
            ensure(w["admissible"] == trials, || format!("admissible {}", w["admissible"]))?;
            ensure(w["violations"] == 0, || format!("violations {}", w["violations"]))?;
            let c = r.last_sup();
            ensure(c <= sharp * (1.0 + 1e-12), || format!("sup {c} above the sharp constant {sharp}"))?;
            let refit = k.clone().with_constants(k.size_constant, 1.01 * c);
            let again = ok(check_regularity(&refit, m, trials, 1))?;
            ensure(again.levels[0].witness["violations"] == 0, || {
                format!("re-run against 1.01 x {c}: {} violations", again.levels[0].witness["violations"])
            })?;
            fitted.push(c);
        }
        ensure(rel(fitted[0], fitted[1]) <= 0.1, || format!("fitted constants {fitted:?}"))?;
        out.push(format!("alpha {alpha}: {:.4} -> {:.4}", fitted[0], fitted[1]));
    }
    Ok(out.join("; "))
}

/// Direct-sum `K̃f(x)` for the Riesz kernel.
fn k_tilde_oracle(m: &AtomicMeasure, alpha: f64, x0: usize, f: &[f64], x: usize) -> f64 {
    let k = |a: usize, b: usize| m.dist(a, b).powf(alpha - 1.0);
    let mut acc = 0.0;
    for y in 0..m.len() {
        let term = match (y == x, y == x0) {
            (true, true) => 0.0,
            (true, false) => -k(x0, y),
            (false, true) => k(x, y),
            (false, false) => k(x, y) - k(x0, y),
        };
        acc += m.weight(y) * term * f[y];
    }
    acc
}

fn basepoint_invariance() -> Outcome {
    let m = uniform(1000);
    let alpha = 0.5;
    let kernel = FractionalKernel::riesz(alpha, 1.0).unwrap();
    let f = ok(TestFunctionSpec::new(TestFunctionKind::SignedBallCombo(3), 7).generate(&m, 0))?;
    let (a, b) = (137, 802);
    let points: Vec<Location> = (0..100).map(|i| Location::Atom((i * 37 + 5) % m.len())).collect();
    let ka = ok(apply_k_tilde(&OperatorConfig::new(kernel.clone(), a), &m, &f, &points))?.values;
    let kb = ok(apply_k_tilde(&OperatorConfig::new(kernel.clone(), b), &m, &f, &points))?.values;
    let scale = ka.iter().chain(&kb).fold(0.0f64, |s, v| s.max(v.abs()));
    let diffs: Vec<f64> = ka.iter().zip(&kb).map(|(u, v)| u - v).collect();
    let spread = diffs.iter().fold(0.0f64, |s, d| s.max((d - diffs[0]).abs())) / scale;
    ensure(spread <= 1e-10, || format!("difference varies by {spread:e} relative"))?;
    let at_base = ok(apply_k_tilde(&OperatorConfig::new(kernel, a), &m, &f, &[Location::Atom(a)]))?.values[0];
    ensure(at_base == 0.0, || format!("K_tilde f(x0) = {at_base:e}"))?;
    let mut oracle_err: f64 = 0.0;
    for (i, p) in points.iter().enumerate().take(20) {
        let x = p.atom_index().unwrap();
        oracle_err = oracle_err.max(rel(ka[i], k_tilde_oracle(&m, alpha, a, f.values(), x)));
    }
    ensure(oracle_err <= 1e-12, || format!("direct-sum oracle differs by {oracle_err:e}"))?;
    Ok(format!("difference spread {spread:.2e}, direct-sum error {oracle_err:.2e}"))
}

fn lip_image() -> Outcome {
    let levels = [uniform(1000), uniform(4000)];
    let kernel = FractionalKernel::riesz(0.6, 1.0).unwrap();
    let opts = CheckOptions::default().with_trials(100);
    let r = ok(verify::check_lip_image(&levels, &kernel, 4.0, &opts))?;
    require_pass(&r)?;
    ensure((r.params["beta"].as_f64().unwrap() - 0.35).abs() < 1e-12, || "beta".into())?;
    let m = &levels[0];
    let zero = SampledFunction::zeros(m.len());
    let image = ok(apply_k_tilde(&OperatorConfig::new(kernel, m.len() / 2), m, &zero, &atom_locations(m)))?;
    let lip = ok(lip_seminorm(&ok(SampledFunction::new(image.values))?, m, 0.35))?.value;
    ensure(lip == 0.0 && ok(lp_norm(&zero, m, 4.0))? == 0.0, || format!("zero function gives {lip}"))?;
    Ok(format!("sups {:?}, trend {:.3}; zero function ratio 0", round(&sups(&r)), r.trend[0]))
}

fn lip_preservation() -> Outcome {
    let levels = [uniform(1000), uniform(4000)];
    let kernel = FractionalKernel::riesz(0.2, 1.0).unwrap();
    let opts = CheckOptions::default()
        .with_trials(1000)
        .with_functions(TestFunctionKind::SmoothBump);
    let r = ok(verify::check_lip_preservation(&levels, &kernel, 0.3, &opts))?;
    require_pass(&r)?;
    let identity = r.witness_series("identity_error");
    ensure(identity.iter().all(|&e| e <= 1e-10), || format!("identity errors {identity:?}"))?;
    Ok(format!(
        "sups {:?}, trend {:.3}, identity error {:.1e}",
        round(&sups(&r)),
        r.trend[0],
        identity.iter().fold(0.0f64, |a, &b| a.max(b))
    ))
}

fn local_potential() -> Outcome {
    let levels = [uniform(1000), uniform(4000)];
    let opts = CheckOptions::default().with_trials(50);
    let family = FamilySpec::default();
    let r = ok(verify::check_local_potential(&levels, 0.5, 2.0, &opts, &family))?;
    require_pass(&r)?;
    let scaled = ok(verify::check_local_potential(&levels, 0.5, 2.0, &opts.clone().with_scale(-7.25), &family))?;
    let err = sups(&r).iter().zip(sups(&scaled)).fold(0.0f64, |a, (x, y)| a.max(rel(*x, y)));
    ensure(err <= 1e-12, || format!("scaling changes the ratio by {err:e}"))?;
    Ok(format!("sups {:?}, homogeneity error {err:.1e}", round(&sups(&r))))
}

fn dilation_geometry() -> Outcome {
    let measures = [
        generate_measure(&MeasureKind::UniformCube { dim: 2, per_axis: 32 }).unwrap(),
        generate_measure(&MeasureKind::Cantor { depth: 10 }).unwrap(),
    ];
    let mut out = Vec::new();
    for m in &measures {
        let family = ok(BallFamily::build(m, &FamilySpec::default()))?;
        ensure(family.pairs.len() >= 1000, || format!("only {} pairs", family.pairs.len()))?;
        let r = ok(verify::check_dilation_geometry(m, &family, usize::MAX, 0))?;
        ensure(r.pass && r.last_sup() == 0.0, || format!("{} violations", r.last_sup()))?;
        out.push(format!("{} pairs", family.pairs.len()));
    }
    Ok(format!("zero violations ({})", out.join(", ")))
}

fn k_coefficients() -> Outcome {
    for r in [0.01, 0.3, 1.0, 7.5] {
        let k = ok(k_coeff_with(r, r, 1.0, |_| 1e9))?;
        ensure(k == 1.0, || format!("K = {k} for r = s = {r}"))?;
    }
    // Atoms so that μ(2B) = 2, μ(4B) = 4, μ(8B) = 8 around B = B(0, 1).
    let m = ok(AtomicMeasure::new(
        MetricSpace::euclidean(1),
        vec![vec![0.0], vec![3.0], vec![5.0]],
        vec![2.0, 2.0, 4.0],
        1.0,
        1.0,
    ))?;
    let b = ok(Ball::new(Location::Atom(0), 1.0))?;
    let v = ok(Ball::new(Location::Atom(0), 8.0))?;
    let k = ok(k_coeff(&b, &v, &m, 1.0))?;
    ensure(k == 4.0, || format!("worked instance gives {k}"))?;
    let mut min = f64::INFINITY;
    let mut count = 0;
    for m in [uniform(1000), generate_measure(&MeasureKind::Cantor { depth: 9 }).unwrap()] {
        let family = ok(BallFamily::build(&m, &FamilySpec::default()))?;
        let plan = ok(RbmoPlan::new(&m, &family))?;
        for (_, _, k) in plan.k_coefficients() {
            min = min.min(k);
            count += 1;
        }
    }
    ensure(min >= 1.0, || format!("K = {min} below 1"))?;
    Ok(format!("worked instance 4, min K over {count} family pairs {min:.4}"))
}

/// Brute-force RBMO norms: every ball, mean and coefficient recomputed from
/// scratch by enumeration over all atoms.
fn rbmo_oracle(m: &AtomicMeasure, family: &BallFamily, fs: &[&[f64]]) -> Vec<f64> {
    let n = m.n();
    let inside = |c: usize, r: f64| (0..m.len()).filter(move |&j| m.dist(c, j) < r);
    let mass = |c: usize, r: f64| -> f64 { inside(c, r).map(|j| m.weight(j)).sum() };
    let denoms: Vec<f64> = family
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (cb, r) = (family.centers[i], family.radii[i]);
            let (cv, s) = (family.centers[j], family.radii[j]);
            let mut big_n = 0;
            while r * 2f64.powi(big_n) < s {
                big_n += 1;
            }
            let k = 1.0 + (1..=big_n).map(|e| mass(cb, r * 2f64.powi(e)) / (r * 2f64.powi(e)).powf(n)).sum::<f64>();
            k * (mass(cb, family.rho * r) / mass(cb, r) + mass(cv, family.rho * s) / mass(cv, s))
        })
        .collect();
    fs.iter()
        .map(|f| {
            let means: Vec<f64> = (0..family.len())
                .map(|i| {
                    let (c, r) = (family.centers[i], family.radii[i]);
                    inside(c, r).map(|j| m.weight(j) * f[j]).sum::<f64>() / mass(c, r)
                })
                .collect();
            let mut best: f64 = 0.0;
            for i in 0..family.len() {
                let (c, r) = (family.centers[i], family.radii[i]);
                let osc: f64 = inside(c, r).map(|j| m.weight(j) * (f[j] - means[i]).abs()).sum();
                best = best.max(osc / mass(c, family.rho * r));
            }
            for (&(i, j), d) in family.pairs.iter().zip(&denoms) {
                best = best.max((means[i] - means[j]).abs() / d);
            }
            best
        })
        .collect()
}

fn rbmo_image() -> Outcome {
    let levels = [uniform(1000), uniform(4000)];
    let kernel = FractionalKernel::riesz(0.5, 1.0).unwrap();
    let opts = CheckOptions::default().with_trials(50).with_slack(verify::RBMO_SLACK);
    let r = ok(verify::check_rbmo_image(&levels, &kernel, &opts, &FamilySpec::default()))?;
    require_pass(&r)?;

    let small = uniform(200);
    let family = ok(BallFamily::build(&small, &FamilySpec::default().with_rho(verify::RBMO_IMAGE_RHO)))?;
    let spec = TestFunctionSpec::new(TestFunctionKind::Mixed, 3);
    let config = OperatorConfig::new(kernel, small.len() / 2);
    let mut fs = Vec::new();
    for k in 0..6 {
        let f = ok(spec.generate(&small, k))?;
        let image = ok(Operator::KBar.apply(&config, &small, &f, &atom_locations(&small)))?.values;
        fs.push(ok(SampledFunction::new(image))?);
        fs.push(f);
    }
    let values: Vec<&[f64]> = fs.iter().map(|f| f.values()).collect();
    let expected = rbmo_oracle(&small, &family, &values);
    let mut worst: f64 = 0.0;
    for (f, e) in fs.iter().zip(expected) {
        worst = worst.max(rel(ok(rbmo_norm(f, &small, &family))?.norm, e));
    }
    ensure(worst <= 1e-12, || format!("brute-force oracle differs by {worst:e}"))?;
    Ok(format!("sups {:?}, trend {:.3}, oracle error {worst:.1e}", round(&sups(&r)), r.trend[0]))
}

fn rbmo_to_lip() -> Outcome {
    let levels = [uniform(1000), uniform(4000)];
    let kernel = FractionalKernel::riesz(0.5, 1.0).unwrap();
    let opts = CheckOptions::default().with_trials(200).with_slack(verify::RBMO_SLACK);
    let family = FamilySpec::default();
    let r = ok(verify::check_rbmo_to_lip(&levels, &kernel, &opts, &family))?;
    require_pass(&r)?;
    let shifted = ok(verify::check_rbmo_to_lip(&levels, &kernel, &opts.clone().with_shift(2.5), &family))?;
    let err = sups(&r).iter().zip(sups(&shifted)).fold(0.0f64, |a, (x, y)| a.max(rel(*x, y)));
    ensure(err <= 1e-12, || format!("shift changes the ratio by {err:e}"))?;
    Ok(format!("sups {:?}, trend {:.3}, shift error {err:.1e}", round(&sups(&r)), r.trend[0]))
}

fn determinism() -> Outcome {
    let levels = [uniform(300), uniform(600)];
    let kernel = FractionalKernel::riesz(0.5, 1.0).unwrap();
    let opts = CheckOptions::default().with_trials(20).with_seed(42);
    let run = |threads: usize| -> Result<Vec<String>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            Ok(vec![
                ok(ok(verify::check_hls(&levels, 1.0 / 3.0, 2.0, &opts))?.to_json())?,
                ok(ok(verify::check_rbmo_to_lip(&levels, &kernel, &opts, &FamilySpec::default()))?.to_json())?,
                ok(ok(verify::check_lip_preservation(&levels, &kernel.clone().with_epsilon(1.0), 0.3, &opts))?
                    .to_json())?,
            ])
        })
    };
    let (a, b, c) = (run(1)?, run(1)?, run(3)?);
    ensure(a == b, || "rerun differs".into())?;
    ensure(a == c, || "thread count changes the report".into())?;
    Ok(format!("{} reports byte-identical across reruns and thread counts", a.len()))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("growth potentials", growth_potentials),
        ("hls strong and weak", hls),
        ("necessity of growth", necessity),
        ("kernel regularity", kernel_regularity),
        ("basepoint invariance", basepoint_invariance),
        ("lp to lipschitz", lip_image),
        ("lipschitz preservation", lip_preservation),
        ("local potential", local_potential),
        ("dilation geometry", dilation_geometry),
        ("two-ball coefficients", k_coefficients),
        ("rbmo image", rbmo_image),
        ("rbmo to lipschitz", rbmo_to_lip),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} {name}: PASS ({detail}) [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} {name}: FAIL ({why}) [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
