//! Deterministic CSV and JSON emission.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`. Non-finite values become `nan`/`inf` in CSV and
//! `null` in JSON.

use std::fmt::Write as _;

/// CSV columns per mode. Columns are only ever appended.
pub mod schema {
    pub const MODULUS: &[&str] = &["t", "xi", "r_max", "bound_power", "closed_form", "r", "argmax_w", "argmax_s"];
    pub const PRODUCT: &[&str] = &[
        "T",
        "y_min",
        "lambda",
        "log_alpha",
        "sup_abs",
        "sup_rel",
        "ks_1d",
        "bound_surrogate",
        "bound_valid",
        "proof_bound",
        "grid_points",
        "max_spacing",
    ];
    pub const STAR: &[&str] = &["t", "log_alpha", "beta", "sup_abs", "sup_rel", "ks_1d", "grid_points", "max_spacing"];
    pub const CONDITIONAL: &[&str] = &[
        "T",
        "mode",
        "mean",
        "variance",
        "ks_normal",
        "delta",
        "samples",
        "draws",
        "acceptance_rate",
        "ks_mc",
    ];
    pub const CROSS_VALIDATE: &[&str] = &[
        "n",
        "T",
        "t",
        "product_sup_abs",
        "product_sup_rel",
        "star_sup_abs",
        "star_sup_rel",
        "mtm_defect",
    ];
    pub const SWEEP: &[&str] = &[
        "T",
        "r",
        "y_min",
        "sup_abs",
        "sup_rel",
        "bound_surrogate",
        "bound_valid",
        "proof_bound",
    ];
}

/// A JSON value with an insertion-ordered object representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn nums(values: &[f64]) -> Json {
        Json::Arr(values.iter().map(|&v| Json::Num(v)).collect())
    }

    pub fn opt(v: Option<f64>) -> Json {
        v.map_or(Json::Null, Json::Num)
    }

    /// Row-major matrix with explicit dimensions.
    pub fn matrix(rows: usize, cols: usize, data: &[f64]) -> Json {
        Json::obj([
            ("rows", Json::Int(rows as i64)),
            ("cols", Json::Int(cols as i64)),
            ("data", Json::nums(data)),
        ])
    }

    /// Pretty-printed with two-space indentation and a trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, depth: usize) {
        let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Json::Num(x) => {
                if x.is_finite() {
                    let _ = write!(out, "{x:.16e}");
                } else {
                    out.push_str("null");
                }
            }
            Json::Str(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
            Json::Arr(items) => {
                if items.iter().all(|i| matches!(i, Json::Num(_) | Json::Int(_) | Json::Null | Json::Bool(_))) {
                    out.push('[');
                    for (k, item) in items.iter().enumerate() {
                        if k > 0 {
                            out.push_str(", ");
                        }
                        item.write(out, depth);
                    }
                    out.push(']');
                    return;
                }
                out.push_str("[\n");
                for (k, item) in items.iter().enumerate() {
                    pad(out, depth + 1);
                    item.write(out, depth + 1);
                    out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(out, depth);
                out.push(']');
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (k, (key, value)) in fields.iter().enumerate() {
                    pad(out, depth + 1);
                    out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                    out.push_str(": ");
                    value.write(out, depth + 1);
                    out.push_str(if k + 1 < fields.len() { ",\n" } else { "\n" });
                }
                pad(out, depth);
                out.push('}');
            }
        }
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Missing,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Missing, Cell::Num)
    }

    pub fn opt_bool(v: Option<bool>) -> Cell {
        v.map_or(Cell::Missing, Cell::Bool)
    }

    fn to_json(&self) -> Json {
        match *self {
            Cell::Num(x) => Json::Num(x),
            Cell::Int(i) => Json::Int(i),
            Cell::Bool(b) => Json::Bool(b),
            Cell::Missing => Json::Null,
        }
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Rows under a fixed schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row does not match the schema");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match *c {
                    Cell::Num(x) => format_float(x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Missing => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Rows as objects keyed by column name.
    pub fn to_json_rows(&self) -> Json {
        Json::Arr(
            self.rows
                .iter()
                .map(|row| Json::Obj(self.columns.iter().zip(row).map(|(k, c)| (k.to_string(), c.to_json())).collect()))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 5000.0 - 0.5 * (2.0 * std::f64::consts::PI).ln(), 1e-300, -7.25e12] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let v: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(v, x);
        }
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn json_layout() {
        let j = Json::obj([("a", Json::nums(&[1.0, f64::NAN])), ("b", Json::Str("x\"y".into()))]);
        assert_eq!(j.render(), "{\n  \"a\": [1.0000000000000000e0, null],\n  \"b\": \"x\\\"y\"\n}\n");
        let parsed: serde_json::Value = serde_json::from_str(&j.render()).unwrap();
        assert!(parsed["a"][1].is_null());
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![Cell::Num(0.5), Cell::Missing, Cell::Bool(true)]);
        assert_eq!(t.to_csv(), "a,b,c\n5.0000000000000000e-1,,true\n");
    }
}
