//! Report emission and the exit-code taxonomy.

use clap::ValueEnum;
use serde::Deserialize;
use serde_json::{json, Value};

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            message: message.into(),
            exit: EXIT_VALIDATION,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind, "message": self.message, "exit_code": self.exit } })
    }
}

impl From<stoprule::Error> for CliError {
    fn from(e: stoprule::Error) -> Self {
        use stoprule::Error::*;
        let (kind, exit) = match &e {
            Validation(_) | InvalidInstance(_) => ("validation", EXIT_VALIDATION),
            Domain(_) => ("domain", EXIT_VALIDATION),
            Continuity { .. } => ("continuity", EXIT_VALIDATION),
            DegenerateSupport => ("degenerate_support", EXIT_VALIDATION),
            Capacity { .. } => ("capacity", EXIT_CAPACITY),
            Numerical(_) => ("numerical", EXIT_NUMERICAL),
        };
        Self {
            kind,
            message: e.to_string(),
            exit,
        }
    }
}

/// A tabular view for `--format csv`.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

pub struct Report {
    pub json: Value,
    pub table: Option<Table>,
    /// Nonzero when the report itself signals a problem (check failure, anomaly).
    pub exit: u8,
}

impl Report {
    pub fn json(json: Value) -> Self {
        Self { json, table: None, exit: 0 }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut v = self.json.clone();
                round_floats(&mut v);
                Ok(serde_json::to_string_pretty(&v).expect("values are serializable") + "\n")
            }
            Format::Csv => {
                let table = self
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::usage("csv output is only available for bounds and thresholds"))?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.header).expect("in-memory write");
                for row in &table.rows {
                    w.write_record(row.iter().map(cell)).expect("in-memory write");
                }
                Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8"))
            }
        }
    }
}

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().expect("f64 number"));
            *v = json!(x);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format!("{:?}", round12(n.as_f64().expect("f64 number"))),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(4.0 / 9.0), 0.444444444444);
        assert_eq!(round12(0.421875), 0.421875);
        assert_eq!(round12(-123456.7890123456), -123456.789012);
        assert_eq!(round12(0.0), 0.0);
    }

    #[test]
    fn nested_values_are_rounded_and_integers_kept() {
        let mut v = json!({"a": [1.0 / 3.0, 7], "b": {"c": 5.0f64.sqrt()}});
        round_floats(&mut v);
        assert_eq!(v, json!({"a": [0.333333333333, 7], "b": {"c": 2.2360679775}}));
    }
}
