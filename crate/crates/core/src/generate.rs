//! Generators for the standard test measures.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::metric::MetricSpace;

/// A rectifiable plane curve carrying its arc-length measure.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    Segment { from: [f64; 2], to: [f64; 2] },
    CircleArc { center: [f64; 2], radius: f64, start: f64, end: f64 },
    Polyline(Vec<[f64; 2]>),
}

impl CurveSpec {
    fn length(&self) -> f64 {
        match self {
            CurveSpec::Segment { from, to } => (to[0] - from[0]).hypot(to[1] - from[1]),
            CurveSpec::CircleArc { radius, start, end, .. } => radius * (end - start).abs(),
            CurveSpec::Polyline(v) => v.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum(),
        }
    }

    /// Point at arc length `s` from the start.
    fn point_at(&self, s: f64) -> [f64; 2] {
        match self {
            CurveSpec::Segment { from, to } => {
                let t = s / self.length();
                [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
            }
            CurveSpec::CircleArc { center, radius, start, end } => {
                let theta = start + (end - start).signum() * s / radius;
                [center[0] + radius * theta.cos(), center[1] + radius * theta.sin()]
            }
            CurveSpec::Polyline(v) => {
                let segments = v.len() - 1;
                let mut rem = s;
                for (k, w) in v.windows(2).enumerate() {
                    let seg = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
                    if rem <= seg || k + 1 == segments {
                        let t = if seg > 0.0 { (rem / seg).min(1.0) } else { 0.0 };
                        return [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
                    }
                    rem -= seg;
                }
                v[0]
            }
        }
    }

    fn from_description(v: &Value) -> Option<CurveSpec> {
        let pair = |v: &Value| -> Option<[f64; 2]> { Some([v.get(0)?.as_f64()?, v.get(1)?.as_f64()?]) };
        let num = |key: &str| v.get(key)?.as_f64();
        match v.get("curve")?.as_str()? {
            "segment" => Some(CurveSpec::Segment {
                from: pair(v.get("from")?)?,
                to: pair(v.get("to")?)?,
            }),
            "circle_arc" => Some(CurveSpec::CircleArc {
                center: pair(v.get("center")?)?,
                radius: num("radius")?,
                start: num("start")?,
                end: num("end")?,
            }),
            "polyline" => v.get("vertices")?.as_array()?.iter().map(pair).collect::<Option<_>>().map(CurveSpec::Polyline),
            _ => None,
        }
    }

    fn describe(&self) -> Value {
        match self {
            CurveSpec::Segment { from, to } => json!({"curve": "segment", "from": from, "to": to}),
            CurveSpec::CircleArc { center, radius, start, end } => {
                json!({"curve": "circle_arc", "center": center, "radius": radius, "start": start, "end": end})
            }
            CurveSpec::Polyline(v) => json!({"curve": "polyline", "vertices": v}),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            CurveSpec::Segment { from, to } => from != to,
            CurveSpec::CircleArc { radius, start, end, .. } => *radius > 0.0 && start != end,
            CurveSpec::Polyline(v) => v.len() >= 2,
        };
        if ok && self.length() > 0.0 && self.length().is_finite() {
            Ok(())
        } else {
            Err(Error::param("curve", "curve must have positive finite length"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    /// Lebesgue measure on `[0,1]^dim`: `per_axis^dim` cell-center atoms.
    UniformCube { dim: usize, per_axis: usize },
    /// Cantor measure: `2^depth` atoms at generation-`depth` interval midpoints.
    Cantor { depth: u32 },
    /// Arc-length measure on a plane curve.
    Curve { curve: CurveSpec, atoms: usize },
    /// `t^(s−1) dt` on `[0,1]`, claimed one-dimensional.
    PowerDensity { exponent: f64, atoms: usize },
}

impl MeasureKind {
    /// The same family one refinement step finer: counts multiply by
    /// `factor`, Cantor depth grows by `log2(factor)` generations.
    pub fn refined(&self, factor: usize) -> MeasureKind {
        let factor = factor.max(1);
        match self {
            MeasureKind::UniformCube { dim, per_axis } => MeasureKind::UniformCube {
                dim: *dim,
                per_axis: per_axis * factor,
            },
            MeasureKind::Cantor { depth } => MeasureKind::Cantor {
                depth: depth + (factor as f64).log2().round().max(1.0) as u32,
            },
            MeasureKind::Curve { curve, atoms } => MeasureKind::Curve {
                curve: curve.clone(),
                atoms: atoms * factor,
            },
            MeasureKind::PowerDensity { exponent, atoms } => MeasureKind::PowerDensity {
                exponent: *exponent,
                atoms: atoms * factor,
            },
        }
    }
}

impl MeasureKind {
    /// The generator recorded in a measure's metadata, if any.
    pub fn from_metadata(meta: &Map<String, Value>) -> Option<MeasureKind> {
        let uint = |key: &str| meta.get(key)?.as_u64().map(|v| v as usize);
        match meta.get("generator")?.as_str()? {
            "uniform_cube" => Some(MeasureKind::UniformCube {
                dim: uint("dim")?,
                per_axis: uint("per_axis")?,
            }),
            "cantor" => Some(MeasureKind::Cantor {
                depth: uint("depth")? as u32,
            }),
            "power_density" => Some(MeasureKind::PowerDensity {
                exponent: meta.get("exponent")?.as_f64()?,
                atoms: uint("atoms")?,
            }),
            "curve" => Some(MeasureKind::Curve {
                curve: CurveSpec::from_description(meta.get("spec")?)?,
                atoms: uint("atoms")?,
            }),
            _ => None,
        }
    }

    /// Inverse of [`MeasureKind::refined`], or `None` when the coarser
    /// family would be degenerate.
    pub fn coarsened(&self, factor: usize) -> Option<MeasureKind> {
        let factor = factor.max(1);
        let div = |v: usize| Some(v / factor).filter(|&c| c >= 2 && c * factor == v);
        match self {
            MeasureKind::UniformCube { dim, per_axis } => Some(MeasureKind::UniformCube {
                dim: *dim,
                per_axis: div(*per_axis)?,
            }),
            MeasureKind::Cantor { depth } => {
                let step = (factor as f64).log2().round().max(1.0) as u32;
                (*depth > step).then(|| MeasureKind::Cantor { depth: depth - step })
            }
            MeasureKind::Curve { curve, atoms } => Some(MeasureKind::Curve {
                curve: curve.clone(),
                atoms: div(*atoms)?,
            }),
            MeasureKind::PowerDensity { exponent, atoms } => Some(MeasureKind::PowerDensity {
                exponent: *exponent,
                atoms: div(*atoms)?,
            }),
        }
    }
}

/// `levels` measures of one family, coarse to fine, the finest being `kind`;
/// consecutive levels differ by one refinement step of `factor`.
pub fn refinement_levels(kind: &MeasureKind, levels: usize, factor: usize) -> Result<Vec<AtomicMeasure>> {
    if levels == 0 {
        return Err(Error::param("levels", "need at least one level"));
    }
    let mut kinds = vec![kind.clone()];
    for _ in 1..levels {
        let next = kinds.last().unwrap().coarsened(factor).ok_or_else(|| {
            Error::param("levels", format!("cannot coarsen {levels} times by a factor of {factor}"))
        })?;
        kinds.push(next);
    }
    kinds.iter().rev().map(generate_measure).collect()
}

pub fn generate_measure(kind: &MeasureKind) -> Result<AtomicMeasure> {
    let mut meta = Map::new();
    let measure = match kind {
        MeasureKind::UniformCube { dim, per_axis } => {
            if *dim == 0 {
                return Err(Error::param("dim", "cube dimension must be at least 1"));
            }
            if *per_axis < 2 {
                return Err(Error::param("N", format!("need at least 2 atoms per axis, got {per_axis}")));
            }
            let total = per_axis
                .checked_pow(*dim as u32)
                .filter(|&t| t <= 50_000_000)
                .ok_or_else(|| Error::param("N", "grid too large"))?;
            let np = *per_axis as f64;
            let weight = 1.0 / total as f64;
            let mut points = Vec::with_capacity(total);
            let mut idx = vec![0usize; *dim];
            for _ in 0..total {
                points.push(idx.iter().map(|&i| (i as f64 + 0.5) / np).collect());
                for k in (0..*dim).rev() {
                    idx[k] += 1;
                    if idx[k] < *per_axis {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            meta.insert("generator".into(), json!("uniform_cube"));
            meta.insert("dim".into(), json!(dim));
            meta.insert("per_axis".into(), json!(per_axis));
            AtomicMeasure::new(
                MetricSpace::euclidean(*dim),
                points,
                vec![weight; total],
                *dim as f64,
                1.0 / np,
            )?
        }
        MeasureKind::Cantor { depth } => {
            if *depth < 1 || *depth > 24 {
                return Err(Error::param("depth", format!("depth must be in 1..=24, got {depth}")));
            }
            let count = 1usize << depth;
            let scale = 3f64.powi(*depth as i32);
            let mut points = Vec::with_capacity(count);
            for code in 0..count {
                // Left endpoint in units of 3^-depth: digits 0/2 in base 3, most significant first.
                let mut left: u64 = 0;
                for k in (0..*depth).rev() {
                    left = left * 3 + 2 * ((code >> k) & 1) as u64;
                }
                points.push(vec![(2 * left + 1) as f64 / (2.0 * scale)]);
            }
            meta.insert("generator".into(), json!("cantor"));
            meta.insert("depth".into(), json!(depth));
            AtomicMeasure::new(
                MetricSpace::euclidean(1),
                points,
                vec![1.0 / count as f64; count],
                2f64.ln() / 3f64.ln(),
                1.0 / scale,
            )?
        }
        MeasureKind::Curve { curve, atoms } => {
            curve.validate()?;
            if *atoms < 2 {
                return Err(Error::param("N", format!("need at least 2 atoms, got {atoms}")));
            }
            let length = curve.length();
            let step = length / *atoms as f64;
            let points = (0..*atoms)
                .map(|i| curve.point_at((i as f64 + 0.5) * step).to_vec())
                .collect();
            meta.insert("generator".into(), json!("curve"));
            meta.insert("spec".into(), curve.describe());
            meta.insert("atoms".into(), json!(atoms));
            AtomicMeasure::new(MetricSpace::euclidean(2), points, vec![step; *atoms], 1.0, step)?
        }
        MeasureKind::PowerDensity { exponent, atoms } => {
            let s = *exponent;
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("exponent", format!("exponent s must be positive, got {s}")));
            }
            if *atoms < 2 {
                return Err(Error::param("N", format!("need at least 2 atoms, got {atoms}")));
            }
            let np = *atoms as f64;
            let mut points = Vec::with_capacity(*atoms);
            let mut weights = Vec::with_capacity(*atoms);
            for i in 0..*atoms {
                let (a, b) = (i as f64 / np, (i + 1) as f64 / np);
                points.push(vec![(i as f64 + 0.5) / np]);
                weights.push((b.powf(s) - a.powf(s)) / s);
            }
            meta.insert("generator".into(), json!("power_density"));
            meta.insert("exponent".into(), json!(s));
            meta.insert("atoms".into(), json!(atoms));
            AtomicMeasure::new(MetricSpace::euclidean(1), points, weights, 1.0, 1.0 / np)?
        }
    };
    Ok(measure.with_metadata(meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{ball_mass, Ball};
    use crate::metric::Location;

    #[test]
    fn first_cantor_generation() {
        let m = generate_measure(&MeasureKind::Cantor { depth: 1 }).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.coords(0).unwrap()[0] - 1.0 / 6.0).abs() < 1e-16);
        assert!((m.coords(1).unwrap()[0] - 5.0 / 6.0).abs() < 1e-16);
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!((m.n() - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn uniform_partition() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 4 }).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m.weights(), &[0.25; 4]);
        assert_eq!(m.h(), 0.25);
        let sq = generate_measure(&MeasureKind::UniformCube { dim: 2, per_axis: 3 }).unwrap();
        assert_eq!(sq.len(), 9);
        assert_eq!(sq.n(), 2.0);
    }

    #[test]
    fn uniform_interval_ball_mass() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 1000 }).unwrap();
        let mass = ball_mass(&m, &Ball::new(Location::Point(vec![0.5]), 0.25).unwrap());
        assert!((mass - 0.5).abs() <= 2.0 / 1000.0, "{mass}");
    }

    #[test]
    fn metadata_round_trip_and_levels() {
        let kinds = [
            MeasureKind::UniformCube { dim: 2, per_axis: 8 },
            MeasureKind::Cantor { depth: 6 },
            MeasureKind::PowerDensity { exponent: 0.5, atoms: 64 },
            MeasureKind::Curve {
                curve: CurveSpec::CircleArc { center: [0.0, 0.0], radius: 1.0, start: 0.0, end: 3.0 },
                atoms: 40,
            },
        ];
        for kind in &kinds {
            let m = generate_measure(kind).unwrap();
            assert_eq!(MeasureKind::from_metadata(m.metadata()).as_ref(), Some(kind));
            assert_eq!(kind.refined(2).coarsened(2).as_ref(), Some(kind));
        }
        let levels = refinement_levels(&MeasureKind::UniformCube { dim: 1, per_axis: 4000 }, 2, 4).unwrap();
        assert_eq!(levels.iter().map(|m| m.len()).collect::<Vec<_>>(), vec![1000, 4000]);
        assert!(refinement_levels(&MeasureKind::PowerDensity { exponent: 0.5, atoms: 10 }, 3, 4).is_err());
    }

    #[test]
    fn power_density_total_mass() {
        for n in [10usize, 100, 1000] {
            let m = generate_measure(&MeasureKind::PowerDensity { exponent: 0.5, atoms: n }).unwrap();
            assert!((m.total_mass() - 2.0).abs() <= 1.0 / (n as f64).sqrt());
        }
        assert!(generate_measure(&MeasureKind::PowerDensity { exponent: 0.0, atoms: 10 }).is_err());
    }

    #[test]
    fn curve_is_arc_length() {
        let kind = MeasureKind::Curve {
            curve: CurveSpec::CircleArc {
                center: [0.0, 0.0],
                radius: 1.0,
                start: 0.0,
                end: std::f64::consts::PI,
            },
            atoms: 100,
        };
        let m = generate_measure(&kind).unwrap();
        assert!((m.total_mass() - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(m.space().ambient_dim(), 2);
        for i in 0..m.len() {
            let p = m.coords(i).unwrap();
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_sizes() {
        assert!(generate_measure(&MeasureKind::Cantor { depth: 0 }).is_err());
        assert!(generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 1 }).is_err());
    }
}
