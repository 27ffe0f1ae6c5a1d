//! JSON documents with numbers at 17 significant digits.

use std::collections::BTreeMap;
use std::str::FromStr;

use oja_core::{Diagnostic, Matrix64};
use serde_json::{Map, Number, Value};

/// `v` with 17 significant digits; non-finite values become strings.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::String(v.to_string());
    }
    if v == 0.0 {
        return Value::Number(Number::from_str("0.0000000000000000").expect("zero literal"));
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let text = if (-5..17).contains(&exp) { format!("{v:.*}", (16 - exp) as usize) } else { sci };
    Value::Number(Number::from_str(&text).expect("formatted float is a JSON number"))
}

pub fn vector(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn rows(m: &[Vec<f64>]) -> Value {
    Value::Array(m.iter().map(|r| vector(r)).collect())
}

pub fn matrix(m: &Matrix64) -> Value {
    rows(&m.to_rows())
}

pub fn diagnostic(d: &Diagnostic) -> Value {
    match d {
        Diagnostic::Count(c) => Value::Number(Number::from(*c)),
        Diagnostic::Real(r) => num(*r),
        Diagnostic::Flag(b) => Value::Bool(*b),
        Diagnostic::Text(s) => Value::String(s.clone()),
        Diagnostic::Matrix(m) => rows(m),
    }
}

pub fn diagnostics(d: &BTreeMap<String, Diagnostic>) -> Map<String, Value> {
    d.iter().map(|(k, v)| (k.clone(), diagnostic(v))).collect()
}

/// Ordered object builder.
#[derive(Default)]
pub struct Doc(Map<String, Value>);

impl Doc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), v.into());
        self
    }

    pub fn render(self) -> String {
        let mut s = serde_json::to_string_pretty(&Value::Object(self.0)).expect("JSON value serializes");
        s.push('\n');
        s
    }
}
