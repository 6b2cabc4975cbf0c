//! Deterministic report rendering.

use std::fmt::Write;

use serde_json::Value;

/// Floats in scientific notation with 17 significant digits, which
/// round-trips every `f64`. Object keys come out sorted.
pub fn to_json(v: &Value) -> String {
    let mut out = String::new();
    write_json(v, 0, &mut out);
    out.push('\n');
    out
}

fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (None, Some(i)) => write!(out, "{i}").unwrap(),
            _ => out.push_str(&float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_json(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(x, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_json(&m[k.as_str()], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

/// `rows x cols` if `v` looks like a serialized complex matrix.
fn matrix_shape(v: &Value) -> Option<(usize, usize)> {
    let rows = v.as_array()?;
    let cols = rows.first()?.as_array()?.len();
    let entry_ok = |e: &Value| {
        e.as_array()
            .is_some_and(|p| p.len() == 2 && p.iter().all(Value::is_number))
    };
    rows.iter()
        .all(|r| {
            r.as_array()
                .is_some_and(|r| r.len() == cols && r.iter().all(entry_ok))
        })
        .then_some((rows.len(), cols))
}

/// One `path = value` line per leaf; matrices are summarized by shape.
pub fn to_text(v: &Value) -> String {
    let mut out = String::new();
    write_text(v, "", &mut out);
    out
}

fn write_text(v: &Value, path: &str, out: &mut String) {
    if let Some((r, c)) = matrix_shape(v) {
        writeln!(out, "{path} = <{r}x{c} matrix>").unwrap();
        return;
    }
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for k in keys {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                write_text(&m[k.as_str()], &p, out);
            }
        }
        Value::Array(items) if !items.is_empty() && items.iter().all(is_scalar) => {
            let parts: Vec<String> = items.iter().map(scalar_text).collect();
            writeln!(out, "{path} = [{}]", parts.join(", ")).unwrap();
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, x) in items.iter().enumerate() {
                write_text(x, &format!("{path}[{i}]"), out);
            }
        }
        other => writeln!(out, "{path} = {}", scalar_text(other)).unwrap(),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format!("{:.6e}", n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(float(f64::NAN), "null");
        assert_eq!(float(f64::INFINITY), "null");
    }

    #[test]
    fn keys_are_sorted_and_integers_stay_integers() {
        let s = to_json(&json!({"b": 1, "a": [0.5, -3]}));
        assert_eq!(
            s,
            "{\n  \"a\": [5.0000000000000000e-1, -3],\n  \"b\": 1\n}\n"
        );
    }

    #[test]
    fn text_summarizes_matrices() {
        let t = to_text(&json!({"k": [[[1.0, 0.0]]], "ok": true}));
        assert_eq!(t, "k = <1x1 matrix>\nok = true\n");
    }
}
