//! Verification reports and their JSON / CSV encodings.
//!
//! Non-finite numbers are written as the strings `"inf"`, `"-inf"` and
//! `"nan"` so that both encodings round-trip losslessly.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::domain::Ball;
use crate::error::{Error, Result};

pub const EMPIRICAL_C_LABEL: &str = "empirical C (lower bound)";

/// Entry flags.
pub mod flags {
    /// Both sides vanish; the ratio carries no information.
    pub const DEGENERATE: &str = "degenerate";
    /// The inequality failed for this entry.
    pub const VIOLATION: &str = "violation";
    /// A Luxemburg norm did not converge below the bisection limit.
    pub const INFINITE: &str = "infinite";
    /// The entry satisfies the weak reverse Hölder inequality on every ball.
    pub const WRH_VERIFIED: &str = "wrh_verified";
    /// A precondition on the entry does not hold.
    pub const PRECONDITION: &str = "precondition";
}

pub(crate) mod float {
    use super::*;

    pub fn encode(v: f64) -> String {
        if v.is_nan() {
            "nan".into()
        } else if v == f64::INFINITY {
            "inf".into()
        } else if v == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            format!("{v:?}")
        }
    }

    pub fn decode(s: &str) -> Option<f64> {
        match s {
            "nan" => Some(f64::NAN),
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            _ => s.parse().ok(),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&encode(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => decode(&t).ok_or_else(|| serde::de::Error::custom(format!("`{t}` is not a number"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every admitted entry satisfied the inequality with a finite constant.
    Pass,
    /// The configuration fails the inequality's hypotheses.
    Rejected,
    /// Hard failure: a violation, an infinite constant or instability.
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryResult {
    pub id: String,
    #[serde(with = "float")]
    pub lhs: f64,
    #[serde(with = "float")]
    pub rhs: f64,
    #[serde(with = "float")]
    pub ratio: f64,
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Ball>,
}

impl EntryResult {
    pub fn new(id: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        EntryResult { id: id.into(), lhs, rhs, ratio: lhs / rhs, flags: Vec::new(), argmax: None }
    }

    pub fn with_flag(mut self, flag: &str) -> Self {
        self.flag(flag);
        self
    }

    pub fn flag(&mut self, flag: &str) {
        if !self.has(flag) {
            self.flags.push(flag.to_string());
        }
    }

    pub fn has(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// Entries that contribute to the empirical constant.
    pub fn counts(&self) -> bool {
        !self.has(flags::DEGENERATE) && !self.has(flags::PRECONDITION)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub inequality_id: String,
    pub title: String,
    pub status: Status,
    /// Parameters the verifier ran with.
    pub config: BTreeMap<String, serde_json::Value>,
    /// Gate and class checks, in evaluation order.
    #[serde(default)]
    pub checks: Vec<Check>,
    pub entries: Vec<EntryResult>,
    #[serde(rename = "empirical_C", with = "float")]
    pub empirical_c: f64,
    pub empirical_c_label: String,
    /// Entry attaining the empirical constant.
    pub argmax: Option<String>,
    #[serde(default)]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl VerificationReport {
    pub fn new(inequality_id: &str, title: &str) -> Self {
        VerificationReport {
            inequality_id: inequality_id.to_string(),
            title: title.to_string(),
            status: Status::Pass,
            config: BTreeMap::new(),
            checks: Vec::new(),
            entries: Vec::new(),
            empirical_c: f64::NAN,
            empirical_c_label: EMPIRICAL_C_LABEL.to_string(),
            argmax: None,
            failures: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.config.insert(key.to_string(), v);
    }

    /// Record a hypothesis check; a failed check rejects the configuration.
    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
        if !passed && self.status == Status::Pass {
            self.status = Status::Rejected;
        }
        passed
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.status = Status::Fail;
        self.failures.push(message.into());
    }

    pub fn admitted(&self) -> bool {
        self.status != Status::Rejected
    }

    /// Set the empirical constant from the entries and fail on
    /// violations or infinite contributions.
    pub fn finish(&mut self) {
        let mut best: Option<(f64, &str)> = None;
        for e in &self.entries {
            if !e.counts() {
                continue;
            }
            if best.is_none_or(|(b, _)| e.ratio > b || e.ratio.is_nan()) {
                best = Some((e.ratio, &e.id));
            }
        }
        let mut failures = Vec::new();
        for e in &self.entries {
            if e.has(flags::VIOLATION) {
                failures.push(format!("entry {} violates the inequality (lhs {}, rhs {})", e.id, e.lhs, e.rhs));
            } else if e.counts() && !e.ratio.is_finite() {
                failures.push(format!("entry {} has a non-finite ratio {}", e.id, e.ratio));
            }
        }
        match best {
            Some((c, id)) => {
                self.empirical_c = c;
                self.argmax = Some(id.to_string());
            }
            None => {
                self.empirical_c = f64::NAN;
                self.argmax = None;
            }
        }
        for f in failures {
            self.fail(f);
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Output of a full suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub status: Status,
    pub config: serde_json::Value,
    /// Corpus entries excluded before verification, with reasons.
    pub excluded: Vec<Exclusion>,
    pub reports: Vec<VerificationReport>,
    /// Empirical constants at doubled resolution, keyed by inequality id.
    pub stability: Vec<Stability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub inequality_id: String,
    #[serde(with = "float")]
    pub base: f64,
    #[serde(with = "float")]
    pub refined: f64,
    #[serde(with = "float")]
    pub relative_change: f64,
    pub stable: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse { offset: e.column(), message: e.to_string() })
    }

    /// One CSV row per entry of every report.
    pub fn to_csv(&self) -> Result<String> {
        to_csv(&self.reports)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    inequality_id: String,
    entry_id: String,
    lhs: String,
    rhs: String,
    ratio: String,
    flags: String,
}

pub fn to_csv(reports: &[VerificationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        for e in &r.entries {
            w.serialize(CsvRow {
                inequality_id: r.inequality_id.clone(),
                entry_id: e.id.clone(),
                lhs: float::encode(e.lhs),
                rhs: float::encode(e.rhs),
                ratio: float::encode(e.ratio),
                flags: e.flags.join("|"),
            })
            .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Parse CSV rows back into `(inequality_id, entry)` pairs.
pub fn from_csv(s: &str) -> Result<Vec<(String, EntryResult)>> {
    let mut r = csv::Reader::from_reader(s.as_bytes());
    let mut out = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(|e| Error::Parse {
            offset: e.position().map_or(0, |p| p.byte() as usize),
            message: e.to_string(),
        })?;
        let num = |v: &str| {
            float::decode(v).ok_or_else(|| Error::Parse { offset: 0, message: format!("`{v}` is not a number") })
        };
        let flags = if row.flags.is_empty() { Vec::new() } else { row.flags.split('|').map(String::from).collect() };
        out.push((
            row.inequality_id,
            EntryResult {
                id: row.entry_id,
                lhs: num(&row.lhs)?,
                rhs: num(&row.rhs)?,
                ratio: num(&row.ratio)?,
                flags,
                argmax: None,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VerificationReport {
        let mut r = VerificationReport::new("t_boundedness", "T is bounded");
        r.param("t", 2.0);
        r.entries.push(EntryResult::new("a", 1.0, 4.0));
        r.entries.push(EntryResult::new("b", 0.0, 0.0).with_flag(flags::DEGENERATE));
        let mut c = EntryResult::new("c", 3.0, 4.0);
        c.argmax = Some(Ball::new(vec![0.5, 0.5], 0.25).unwrap());
        r.entries.push(c);
        r.entries.push(EntryResult::new("d", f64::INFINITY, 1.0).with_flag(flags::PRECONDITION));
        r.finish();
        r
    }

    #[test]
    fn empirical_constant_skips_flagged_entries() {
        let r = sample();
        assert_eq!(r.empirical_c, 0.75);
        assert_eq!(r.argmax.as_deref(), Some("c"));
        assert!(r.passed());
        assert_eq!(r.empirical_c_label, "empirical C (lower bound)");
    }

    #[test]
    fn violations_and_infinite_ratios_fail() {
        let mut r = VerificationReport::new("x", "x");
        r.entries.push(EntryResult::new("a", 2.0, 1.0).with_flag(flags::VIOLATION));
        r.finish();
        assert_eq!(r.status, Status::Fail);
        let mut r = VerificationReport::new("x", "x");
        r.entries.push(EntryResult::new("a", 1.0, 0.0));
        r.finish();
        assert_eq!(r.status, Status::Fail);
        assert!(r.empirical_c.is_infinite());
    }

    #[test]
    fn failed_check_rejects() {
        let mut r = VerificationReport::new("x", "x");
        assert!(!r.check("gate", false, "q(n-p) < np"));
        assert_eq!(r.status, Status::Rejected);
        assert!(!r.admitted());
    }

    #[test]
    fn json_round_trip_with_non_finite_values() {
        let r = sample();
        let suite = SuiteReport {
            status: Status::Pass,
            config: serde_json::json!({"grid_resolution": 64}),
            excluded: vec![],
            reports: vec![r],
            stability: vec![Stability {
                inequality_id: "t_boundedness".into(),
                base: 1.0,
                refined: f64::NAN,
                relative_change: f64::NAN,
                stable: false,
            }],
        };
        let json = suite.to_json();
        assert!(json.contains("\"inf\"") && json.contains("\"nan\""));
        let back = SuiteReport::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        let e = &back.reports[0].entries;
        assert!(e[1].ratio.is_nan());
        assert_eq!(e[3].lhs, f64::INFINITY);
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        let text = to_csv(std::slice::from_ref(&r)).unwrap();
        assert!(text.starts_with("inequality_id,entry_id,lhs,rhs,ratio,flags"));
        let rows = from_csv(&text).unwrap();
        assert_eq!(rows.len(), 4);
        for ((id, back), orig) in rows.iter().zip(&r.entries) {
            assert_eq!(id, "t_boundedness");
            assert_eq!(back.id, orig.id);
            assert_eq!(back.flags, orig.flags);
            for (a, b) in [(back.lhs, orig.lhs), (back.rhs, orig.rhs), (back.ratio, orig.ratio)] {
                assert!(a == b || (a.is_nan() && b.is_nan()));
            }
        }
    }

    #[test]
    fn float_encoding_is_exact() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300] {
            assert_eq!(float::decode(&float::encode(v)), Some(v));
        }
    }
}
