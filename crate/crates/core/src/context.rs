//! Typed context attributes and the conditions that gate permissions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Value {
    Str(String),
    Int(i64),
    Date(NaiveDate),
    Time(NaiveTime),
    Set(Vec<Value>),
}

impl Value {
    /// Ordering between scalars of the same type; `None` across types or for sets.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Date(a), Value::Date(b)) => Some(a.cmp(b)),
            (Value::Time(a), Value::Time(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Parses the prefixed form `i:42`, `s:ward3`, `d:2024-01-05`, `t:10:30`.
    pub fn parse_typed(s: &str) -> Result<Value> {
        let (prefix, body) = s
            .split_once(':')
            .ok_or_else(|| Error::parse(0, format!("value `{s}` lacks a type prefix (i:, s:, d:, t:)")))?;
        match prefix {
            "s" => Ok(Value::Str(body.to_string())),
            "i" => body.parse().map(Value::Int).map_err(|e| Error::parse(0, format!("integer `{body}`: {e}"))),
            "d" => NaiveDate::parse_from_str(body, "%Y-%m-%d")
                .map(Value::Date)
                .map_err(|e| Error::parse(0, format!("date `{body}`: {e}"))),
            "t" => NaiveTime::parse_from_str(body, "%H:%M")
                .or_else(|_| NaiveTime::parse_from_str(body, "%H:%M:%S"))
                .map(Value::Time)
                .map_err(|e| Error::parse(0, format!("time `{body}`: {e}"))),
            other => Err(Error::parse(0, format!("unknown type prefix `{other}:`"))),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write!(f, "s:{s}"),
            Value::Int(i) => write!(f, "i:{i}"),
            Value::Date(d) => write!(f, "d:{}", d.format("%Y-%m-%d")),
            Value::Time(t) => write!(f, "t:{}", t.format("%H:%M:%S")),
            Value::Set(items) => {
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `expected` is a two-element set `[lo, hi]`, bounds inclusive.
    InRange,
    InSet,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::InRange => "in-range",
            Comparator::InSet => "in-set",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "=" | "==" => Comparator::Eq,
            "!=" => Comparator::Ne,
            "<" => Comparator::Lt,
            "<=" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" => Comparator::Ge,
            "in-range" => Comparator::InRange,
            "in-set" => Comparator::InSet,
            _ => return None,
        })
    }
}

/// A single runtime condition on a context attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextCondition {
    pub attribute: String,
    pub comparator: Comparator,
    pub expected: Value,
}

impl ContextCondition {
    pub fn new(attribute: impl Into<String>, comparator: Comparator, expected: Value) -> Self {
        ContextCondition { attribute: attribute.into(), comparator, expected }
    }

    /// A missing attribute or a type mismatch evaluates to false.
    pub fn holds(&self, ctx: &RequestContext) -> bool {
        let Some(actual) = ctx.attributes.get(&self.attribute) else {
            return false;
        };
        let expected = &self.expected;
        match self.comparator {
            Comparator::Eq => actual.compare(expected) == Some(Ordering::Equal),
            Comparator::Ne => matches!(actual.compare(expected), Some(o) if o != Ordering::Equal),
            Comparator::Lt => actual.compare(expected) == Some(Ordering::Less),
            Comparator::Le => matches!(actual.compare(expected), Some(Ordering::Less | Ordering::Equal)),
            Comparator::Gt => actual.compare(expected) == Some(Ordering::Greater),
            Comparator::Ge => matches!(actual.compare(expected), Some(Ordering::Greater | Ordering::Equal)),
            Comparator::InRange => match expected {
                Value::Set(bounds) if bounds.len() == 2 => {
                    matches!(actual.compare(&bounds[0]), Some(Ordering::Greater | Ordering::Equal))
                        && matches!(actual.compare(&bounds[1]), Some(Ordering::Less | Ordering::Equal))
                }
                _ => false,
            },
            Comparator::InSet => match expected {
                Value::Set(items) => items.iter().any(|v| actual.compare(v) == Some(Ordering::Equal)),
                _ => false,
            },
        }
    }

    /// Parses `<attribute> <op> <value>`, e.g. `weekday in-set s:Mon,s:Tue`
    /// or `time in-range t:09:00..t:17:00`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let (Some(attribute), Some(op), Some(raw), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::parse(0, format!("condition `{s}` is not `<attribute> <op> <value>`")));
        };
        let comparator =
            Comparator::from_symbol(op).ok_or_else(|| Error::parse(0, format!("unknown comparator `{op}`")))?;
        let expected = match comparator {
            Comparator::InRange => {
                let (lo, hi) =
                    raw.split_once("..").ok_or_else(|| Error::parse(0, format!("range `{raw}` is not `lo..hi`")))?;
                Value::Set(vec![Value::parse_typed(lo)?, Value::parse_typed(hi)?])
            }
            Comparator::InSet => Value::Set(raw.split(',').map(Value::parse_typed).collect::<Result<_>>()?),
            _ => Value::parse_typed(raw)?,
        };
        Ok(ContextCondition { attribute: attribute.to_string(), comparator, expected })
    }
}

impl fmt::Display for ContextCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.comparator, &self.expected) {
            (Comparator::InRange, Value::Set(b)) if b.len() == 2 => {
                write!(f, "{} in-range {}..{}", self.attribute, b[0], b[1])
            }
            (c, v) => write!(f, "{} {} {}", self.attribute, c.symbol(), v),
        }
    }
}

/// Environment of a single access request.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestContext {
    #[serde(default)]
    pub attributes: BTreeMap<String, Value>,
    /// Names of exception conditions currently in force (e.g. `emergency`).
    #[serde(default)]
    pub exceptions: BTreeSet<String>,
}

impl RequestContext {
    pub fn with(mut self, attribute: impl Into<String>, value: Value) -> Self {
        self.attributes.insert(attribute.into(), value);
        self
    }

    pub fn with_exception(mut self, name: impl Into<String>) -> Self {
        self.exceptions.insert(name.into());
        self
    }

    /// Parses a `key=typed-value` pair as given on the command line.
    pub fn parse_pair(s: &str) -> Result<(String, Value)> {
        let (k, v) = s.split_once('=').ok_or_else(|| Error::parse(0, format!("context `{s}` is not `key=value`")))?;
        if k.is_empty() {
            return Err(Error::parse(0, "empty context attribute name"));
        }
        Ok((k.to_string(), Value::parse_typed(v)?))
    }
}

/// Conjunction of all conditions; vacuously true for an empty list.
pub fn evaluate_context(conditions: &[ContextCondition], ctx: &RequestContext) -> bool {
    conditions.iter().all(|c| c.holds(ctx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &str) -> Value {
        Value::Str(v.into())
    }

    fn t(h: u32, m: u32) -> Value {
        Value::Time(NaiveTime::from_hms_opt(h, m, 0).unwrap())
    }

    fn weekdays() -> ContextCondition {
        ContextCondition::new(
            "weekday",
            Comparator::InSet,
            Value::Set(["Mon", "Tue", "Wed", "Thu", "Fri"].into_iter().map(s).collect()),
        )
    }

    #[test]
    fn weekday_set_membership() {
        let sat = RequestContext::default().with("weekday", s("Sat"));
        let wed = RequestContext::default().with("weekday", s("Wed"));
        assert!(!evaluate_context(&[weekdays()], &sat));
        assert!(evaluate_context(&[weekdays()], &wed));
    }

    #[test]
    fn empty_conditions_are_vacuous() {
        assert!(evaluate_context(&[], &RequestContext::default()));
        assert!(evaluate_context(&[], &RequestContext::default().with("x", Value::Int(1))));
    }

    #[test]
    fn two_condition_truth_table() {
        let conds = [
            ContextCondition::new("time", Comparator::InRange, Value::Set(vec![t(9, 0), t(17, 0)])),
            ContextCondition::new("location", Comparator::Eq, s("ward3")),
        ];
        let cases = [
            (t(10, 30), "ward3", true),
            (t(10, 30), "ward5", false),
            (t(18, 0), "ward3", false),
            (t(18, 0), "ward5", false),
            (t(9, 0), "ward3", true),
            (t(17, 0), "ward3", true),
        ];
        for (time, loc, want) in cases {
            let ctx = RequestContext::default().with("time", time.clone()).with("location", s(loc));
            assert_eq!(evaluate_context(&conds, &ctx), want, "{time} {loc}");
        }
    }

    #[test]
    fn missing_attribute_and_type_mismatch_are_false() {
        let c = ContextCondition::new("age", Comparator::Ge, Value::Int(18));
        assert!(!c.holds(&RequestContext::default()));
        assert!(!c.holds(&RequestContext::default().with("age", s("40"))));
        assert!(c.holds(&RequestContext::default().with("age", Value::Int(40))));
        let ne = ContextCondition::new("age", Comparator::Ne, Value::Int(18));
        assert!(!ne.holds(&RequestContext::default().with("age", s("18"))));
    }

    #[test]
    fn parse_conditions() {
        let c = ContextCondition::parse("weekday in-set s:Mon,s:Tue,s:Wed,s:Thu,s:Fri").unwrap();
        assert_eq!(c, weekdays());
        let r = ContextCondition::parse("time in-range t:09:00..t:17:00").unwrap();
        assert_eq!(r.expected, Value::Set(vec![t(9, 0), t(17, 0)]));
        assert_eq!(ContextCondition::parse(&r.to_string()).unwrap(), r);
        let d = ContextCondition::parse("date >= d:2024-01-05").unwrap();
        assert_eq!(d.comparator, Comparator::Ge);
        assert!(ContextCondition::parse("a ~ s:x").is_err());
        assert!(ContextCondition::parse("a = x").is_err());
        assert!(ContextCondition::parse("a = i:notnum").is_err());
        assert!(ContextCondition::parse("a =").is_err());
    }

    #[test]
    fn parse_pairs() {
        assert_eq!(RequestContext::parse_pair("weekday=s:Sat").unwrap(), ("weekday".into(), s("Sat")));
        assert_eq!(RequestContext::parse_pair("time=t:10:30").unwrap().1, t(10, 30));
        assert!(RequestContext::parse_pair("time").is_err());
        assert!(RequestContext::parse_pair("=s:x").is_err());
    }
}
