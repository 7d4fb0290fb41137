//! Check reports (`fracmeasure/report/v1`) and their pass/fail contracts.

use serde::ser::Serializer;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::io::{parse_f64, ser_f64, ser_f64_slice};

/// Acceptance contract for a report.
///
/// Each monitored series (the per-level `sup_ratio`, plus any witness keys
/// named in `series`) must be finite at every level, and every level-to-level
/// ratio must lie in `[trend_min, trend_max]`. `upper_bound` applies to
/// `sup_ratio` only.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tolerance {
    pub upper_bound: Option<f64>,
    pub trend_min: Option<f64>,
    pub trend_max: Option<f64>,
    pub series: Vec<String>,
}

impl Tolerance {
    pub fn bounded() -> Self {
        Tolerance::default()
    }

    pub fn upper(bound: f64) -> Self {
        Tolerance {
            upper_bound: Some(bound),
            ..Default::default()
        }
    }

    /// Refinement stability: every trend within `1 ± slack`.
    pub fn stability(slack: f64) -> Self {
        Tolerance {
            trend_min: Some(1.0 - slack),
            trend_max: Some(1.0 + slack),
            ..Default::default()
        }
    }

    pub fn with_upper(mut self, bound: f64) -> Self {
        self.upper_bound = Some(bound);
        self
    }

    pub fn with_series(mut self, names: &[&str]) -> Self {
        self.series = names.iter().map(|s| s.to_string()).collect();
        self
    }

    fn series_values(&self, levels: &[Level]) -> Vec<(bool, Vec<f64>)> {
        let mut out = vec![(true, levels.iter().map(|l| l.sup_ratio).collect())];
        for name in &self.series {
            out.push((
                false,
                levels
                    .iter()
                    .map(|l| l.witness.get(name).and_then(parse_f64).unwrap_or(f64::NAN))
                    .collect(),
            ));
        }
        out
    }

    fn trend_ok(&self, t: f64) -> bool {
        t.is_finite() && self.trend_min.map_or(true, |m| t >= m) && self.trend_max.map_or(true, |m| t <= m)
    }

    /// Whether level `k` satisfies the contract (its own bound, and the trend into it).
    pub fn level_passes(&self, levels: &[Level], k: usize) -> bool {
        self.series_values(levels).iter().all(|(primary, vals)| {
            let v = vals[k];
            let bound_ok = !*primary || self.upper_bound.map_or(true, |b| v <= b);
            v.is_finite() && bound_ok && (k == 0 || self.trend_ok(trend(vals[k - 1], v)))
        })
    }

    pub fn evaluate(&self, levels: &[Level]) -> bool {
        (0..levels.len()).all(|k| self.level_passes(levels, k))
    }

    fn to_value(&self) -> Value {
        let mut m = Map::new();
        let num = |x: f64| serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null);
        m.insert("upper_bound".into(), self.upper_bound.map_or(Value::Null, num));
        m.insert("trend_min".into(), self.trend_min.map_or(Value::Null, num));
        m.insert("trend_max".into(), self.trend_max.map_or(Value::Null, num));
        m.insert("series".into(), Value::from(self.series.clone()));
        Value::Object(m)
    }

    fn from_value(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::schema("tolerance", "expected an object"))?;
        let opt = |k: &str| obj.get(k).and_then(Value::as_f64);
        Ok(Tolerance {
            upper_bound: opt("upper_bound"),
            trend_min: opt("trend_min"),
            trend_max: opt("trend_max"),
            series: obj
                .get("series")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(|s| s.as_str().map(String::from)).collect())
                .unwrap_or_default(),
        })
    }
}

/// `next / prev`, with `0 → 0` counted as perfectly stable.
pub fn trend(prev: f64, next: f64) -> f64 {
    if prev == 0.0 && next == 0.0 {
        1.0
    } else {
        next / prev
    }
}

/// One refinement level of a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub atoms: usize,
    #[serde(serialize_with = "ser_f64")]
    pub sup_ratio: f64,
    pub witness: Value,
}

/// A single sampled ratio with its witness (not serialized).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub level: usize,
    pub ratio: f64,
    pub witness: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub params: Map<String, Value>,
    pub seed: u64,
    pub levels: Vec<Level>,
    pub trend: Vec<f64>,
    pub pass: bool,
    pub tolerance: Tolerance,
    pub notes: Vec<String>,
    pub samples: Vec<Sample>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    check: &'a str,
    params: &'a Map<String, Value>,
    seed: u64,
    levels: &'a [Level],
    #[serde(serialize_with = "ser_f64_slice")]
    trend: &'a [f64],
    pass: bool,
    tolerance: Value,
    notes: &'a [String],
}

impl Serialize for CheckReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportFile {
            check: &self.check,
            params: &self.params,
            seed: self.seed,
            levels: &self.levels,
            trend: &self.trend,
            pass: self.pass,
            tolerance: self.tolerance.to_value(),
            notes: &self.notes,
        }
        .serialize(s)
    }
}

impl CheckReport {
    pub fn new(check: impl Into<String>, seed: u64) -> Self {
        CheckReport {
            check: check.into(),
            params: Map::new(),
            seed,
            levels: Vec::new(),
            trend: Vec::new(),
            pass: false,
            tolerance: Tolerance::bounded(),
            notes: Vec::new(),
            samples: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn push_level(&mut self, atoms: usize, sup_ratio: f64, witness: Value) {
        self.levels.push(Level {
            atoms,
            sup_ratio,
            witness,
        });
    }

    /// Computes the trend of `sup_ratio` and the pass flag from the tolerance.
    pub fn finish(mut self, tolerance: Tolerance) -> Self {
        self.trend = self
            .levels
            .windows(2)
            .map(|w| trend(w[0].sup_ratio, w[1].sup_ratio))
            .collect();
        self.pass = tolerance.evaluate(&self.levels);
        self.tolerance = tolerance;
        self
    }

    /// Final `sup_ratio`, or NaN when there are no levels.
    pub fn last_sup(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.sup_ratio)
    }

    /// Per-level values of a witness key.
    pub fn witness_series(&self, key: &str) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| l.witness.get(key).and_then(parse_f64).unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)?;
        let obj = root.as_object().ok_or_else(|| Error::schema("$", "expected a JSON object"))?;
        let check = obj
            .get("check")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::schema("check", "missing or not a string"))?;
        let seed = obj
            .get("seed")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::schema("seed", "missing or not an integer"))?;
        let params = match obj.get("params") {
            Some(Value::Object(m)) => m.clone(),
            _ => return Err(Error::schema("params", "missing or not an object")),
        };
        let levels = obj
            .get("levels")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::schema("levels", "missing or not an array"))?
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let loc = |k: &str| format!("levels[{i}].{k}");
                Ok(Level {
                    atoms: l
                        .get("atoms")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| Error::schema(loc("atoms"), "missing or not an integer"))?
                        as usize,
                    sup_ratio: l
                        .get("sup_ratio")
                        .and_then(parse_f64)
                        .ok_or_else(|| Error::schema(loc("sup_ratio"), "missing or not a number"))?,
                    witness: l.get("witness").cloned().unwrap_or(Value::Null),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let trend = obj
            .get("trend")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::schema("trend", "missing or not an array"))?
            .iter()
            .enumerate()
            .map(|(i, t)| parse_f64(t).ok_or_else(|| Error::schema(format!("trend[{i}]"), "not a number")))
            .collect::<Result<Vec<_>>>()?;
        let pass = obj
            .get("pass")
            .and_then(Value::as_bool)
            .ok_or_else(|| Error::schema("pass", "missing or not a boolean"))?;
        let tolerance = Tolerance::from_value(obj.get("tolerance").unwrap_or(&Value::Null))?;
        let notes = obj
            .get("notes")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|s| s.as_str().map(String::from)).collect())
            .unwrap_or_default();
        Ok(CheckReport {
            check: check.to_string(),
            params,
            seed,
            levels,
            trend,
            pass,
            tolerance,
            notes,
            samples: Vec::new(),
        })
    }
}
