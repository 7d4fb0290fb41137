//! Measure files (`fracmeasure/measure/v1`) and shared JSON helpers.
//!
//! Floats are written with 17 significant digits so that save/load is the
//! identity on every atom, weight, `n` and `h`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::metric::{DistanceTable, MetricSpace};

pub const MEASURE_SCHEMA: &str = "fracmeasure/measure/v1";

/// Decimal text with 17 significant digits (round-trips every finite `f64`).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes an `f64` as a 17-significant-digit JSON number. Non-finite
/// values become the strings `"inf"`, `"-inf"` or `"nan"`.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        RawValue::from_string(fmt17(*x))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn ser_f64_slice<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    struct One(f64);
    impl Serialize for One {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            ser_f64(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&One(x))?;
    }
    seq.end()
}

fn ser_rows<S: Serializer>(rows: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    struct Row<'a>(&'a [f64]);
    impl Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            ser_f64_slice(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in rows {
        seq.serialize_element(&Row(r))?;
    }
    seq.end()
}

fn ser_opt_rows<S: Serializer>(rows: &Option<Vec<Vec<f64>>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match rows {
        Some(r) => ser_rows(r, s),
        None => s.serialize_none(),
    }
}

/// Parses a float written by [`ser_f64`], accepting the non-finite spellings.
pub fn parse_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

/// Writes to a temporary sibling file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::param("out", format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[derive(Serialize)]
struct MeasureFile<'a> {
    schema: &'static str,
    metric: &'static str,
    ambient_dim: usize,
    #[serde(serialize_with = "ser_f64")]
    n: f64,
    #[serde(serialize_with = "ser_f64")]
    h: f64,
    #[serde(serialize_with = "ser_rows")]
    points: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_f64_slice")]
    weights: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_rows")]
    distance_table: Option<Vec<Vec<f64>>>,
    metadata: Map<String, Value>,
}

pub fn measure_to_json(measure: &AtomicMeasure) -> Result<String> {
    let (metric, table) = match measure.space() {
        MetricSpace::Euclidean { .. } => ("euclidean", None),
        MetricSpace::Explicit { table } => ("explicit", Some(table.rows().map(<[f64]>::to_vec).collect())),
    };
    let mut metadata = measure.metadata().clone();
    if let Some(c) = measure.growth_hint() {
        metadata.insert("growth_constant_hint".into(), Value::from(c));
    }
    let file = MeasureFile {
        schema: MEASURE_SCHEMA,
        metric,
        ambient_dim: measure.space().ambient_dim(),
        n: measure.n(),
        h: measure.h(),
        points: measure.points(),
        weights: measure.weights(),
        distance_table: table,
        metadata,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}

pub fn save_measure(measure: &AtomicMeasure, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), measure_to_json(measure)?.as_bytes())
}

pub fn load_measure(path: impl AsRef<Path>) -> Result<AtomicMeasure> {
    let text = fs::read_to_string(path.as_ref())?;
    measure_from_json(&text)
}

fn float_field(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    obj.get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::schema(key, "missing or not a number"))
}

fn float_rows(v: &Value, key: &str) -> Result<Vec<Vec<f64>>> {
    let rows = v.as_array().ok_or_else(|| Error::schema(key, "expected an array of arrays"))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let row = row
                .as_array()
                .ok_or_else(|| Error::schema(format!("{key}[{i}]"), "expected an array of numbers"))?;
            row.iter()
                .enumerate()
                .map(|(j, x)| {
                    x.as_f64()
                        .ok_or_else(|| Error::schema(format!("{key}[{i}][{j}]"), "expected a number"))
                })
                .collect()
        })
        .collect()
}

pub fn measure_from_json(text: &str) -> Result<AtomicMeasure> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root.as_object().ok_or_else(|| Error::schema("$", "expected a JSON object"))?;
    match obj.get("schema").and_then(Value::as_str) {
        Some(MEASURE_SCHEMA) => {}
        other => {
            return Err(Error::schema(
                "schema",
                format!("expected \"{MEASURE_SCHEMA}\", found {other:?}"),
            ))
        }
    }
    let n = float_field(obj, "n")?;
    let h = float_field(obj, "h")?;
    let weights: Vec<f64> = obj
        .get("weights")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::schema("weights", "missing or not an array"))?
        .iter()
        .enumerate()
        .map(|(i, w)| w.as_f64().ok_or_else(|| Error::schema(format!("weights[{i}]"), "expected a number")))
        .collect::<Result<_>>()?;
    let points = match obj.get("points") {
        Some(v) => float_rows(v, "points")?,
        None => Vec::new(),
    };
    let space = match obj.get("metric").and_then(Value::as_str) {
        Some("euclidean") => {
            let dim = obj
                .get("ambient_dim")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::schema("ambient_dim", "missing or not a nonnegative integer"))?;
            MetricSpace::euclidean(dim as usize)
        }
        Some("explicit") => {
            let table = obj
                .get("distance_table")
                .ok_or_else(|| Error::schema("distance_table", "required for explicit metrics"))?;
            MetricSpace::explicit(DistanceTable::new(float_rows(table, "distance_table")?)?)
        }
        other => return Err(Error::schema("metric", format!("expected \"euclidean\" or \"explicit\", found {other:?}"))),
    };
    let mut metadata = match obj.get("metadata") {
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(Error::schema("metadata", "expected an object")),
        None => Map::new(),
    };
    let hint = metadata.remove("growth_constant_hint").and_then(|v| v.as_f64());
    Ok(AtomicMeasure::new(space, points, weights, n, h)?
        .with_growth_hint(hint)
        .with_metadata(metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_measure, MeasureKind};

    #[test]
    fn round_trip_uniform() {
        let m = generate_measure(&MeasureKind::UniformCube { dim: 1, per_axis: 4 }).unwrap();
        let back = measure_from_json(&measure_to_json(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn round_trip_awkward_floats() {
        let m = generate_measure(&MeasureKind::PowerDensity { exponent: 1.0 / 3.0, atoms: 37 }).unwrap();
        let text = measure_to_json(&m).unwrap();
        let back = measure_from_json(&text).unwrap();
        for (a, b) in m.weights().iter().zip(back.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(m.h().to_bits(), back.h().to_bits());
        assert!(text.contains("e-"), "17-digit exponent form expected");
    }

    #[test]
    fn zero_weight_names_atom() {
        let text = r#"{"schema":"fracmeasure/measure/v1","metric":"euclidean","ambient_dim":1,
            "n":1.0,"h":0.5,"points":[[0.0],[0.5]],"weights":[0.5,0.0],"metadata":{}}"#;
        let err = measure_from_json(text).unwrap_err();
        assert!(err.to_string().contains("weights[1]"), "{err}");
    }

    #[test]
    fn dimension_mismatch() {
        let text = r#"{"schema":"fracmeasure/measure/v1","metric":"euclidean","ambient_dim":3,
            "n":1.0,"h":0.5,"points":[[0.0,1.0]],"weights":[1.0],"metadata":{}}"#;
        let err = measure_from_json(text).unwrap_err();
        assert!(err.to_string().contains("points[0]"), "{err}");
    }

    #[test]
    fn explicit_table_round_trip() {
        let text = r#"{"schema":"fracmeasure/measure/v1","metric":"explicit","ambient_dim":0,
            "n":1.0,"h":1.0,"points":[],"weights":[0.5,0.5],
            "distance_table":[[0.0,2.0],[2.0,0.0]],"metadata":{"source":"test"}}"#;
        let m = measure_from_json(text).unwrap();
        assert_eq!(m.dist(0, 1), 2.0);
        let back = measure_from_json(&measure_to_json(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_wrong_schema() {
        let err = measure_from_json(r#"{"schema":"other"}"#).unwrap_err();
        assert!(err.to_string().starts_with("schema"), "{err}");
    }
}
