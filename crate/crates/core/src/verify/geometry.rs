//! Exact dilation geometry of nested balls: for `B = B(x, r) ⊂ V = B(y, s)`
//! with `N = N_{B,V}`, the support atoms satisfy `V ⊂ 2^(N+1)B ⊂ 5V`.

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::family::BallFamily;
use crate::measure::AtomicMeasure;
use crate::metric::Location;
use crate::norms::n_bv;
use crate::report::{CheckReport, Tolerance};

/// Counts containment pairs of `family` (at most `max_pairs`, thinned with
/// `seed`) violating either inclusion on support atoms. The `sup_ratio` is
/// the violation count; passes iff it is zero.
pub fn check_dilation_geometry(
    measure: &AtomicMeasure,
    family: &BallFamily,
    max_pairs: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut family = family.clone();
    family.thin_pairs(max_pairs, seed);
    if family.pairs.is_empty() {
        return Err(Error::NoSamples("the family has no containment pairs".into()));
    }
    let mut centers = family.centers.clone();
    centers.sort_unstable();
    centers.dedup();
    let rows: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| measure.distances_from(&Location::Atom(c)))
        .collect();
    let row = |c: usize| &rows[centers.binary_search(&c).unwrap()];
    let violations: Vec<(usize, usize)> = family
        .pairs
        .par_iter()
        .filter(|&&(i, j)| {
            let (db, dv) = (row(family.centers[i]), row(family.centers[j]));
            let (r, s) = (family.radii[i], family.radii[j]);
            let big = r * 2f64.powi(n_bv(r, s) as i32 + 1);
            let v_in_big = (0..measure.len()).all(|z| !(dv[z] < s) || db[z] < big);
            let big_in_5v = (0..measure.len()).all(|z| !(db[z] < big) || dv[z] < 5.0 * s);
            !(v_in_big && big_in_5v)
        })
        .copied()
        .collect();
    let mut report = CheckReport::new("geometry", seed)
        .param("pairs", family.pairs.len())
        .param("balls", family.len())
        .param("max_pairs", max_pairs);
    report.push_level(
        measure.len(),
        violations.len() as f64,
        json!({
            "pairs_checked": family.pairs.len(),
            "first_violation": violations.first().map(|&(i, j)| [i, j]),
        }),
    );
    Ok(report.finish(Tolerance::upper(0.0)))
}
