//! Hand-rolled JSON and CSV documents with a fixed layout, so identical
//! runs produce byte-identical output.

/// JSON value with insertion-ordered object keys.
pub enum Json {
    Num(f64),
    UInt(u64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Num(x) => {
                if x.is_finite() {
                    out.push_str(&fmt_float(*x));
                } else {
                    out.push_str("null");
                }
            }
            Json::UInt(u) => out.push_str(&u.to_string()),
            Json::Str(s) => {
                out.push('"');
                out.push_str(&json_escape(s));
                out.push('"');
            }
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    pad(out, indent + 2);
                    item.write(out, indent + 2);
                }
                out.push('\n');
                pad(out, indent);
                out.push(']');
            }
            Json::Obj(pairs) => {
                if pairs.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in pairs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    pad(out, indent + 2);
                    out.push('"');
                    out.push_str(key);
                    out.push_str("\": ");
                    value.write(out, indent + 2);
                }
                out.push('\n');
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

fn pad(out: &mut String, n: usize) {
    out.extend(std::iter::repeat_n(' ', n));
}

/// Result floats are printed with full precision in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Full JSON document: schema header, the command, the resolved
/// configuration (as strings, so a run can be reproduced exactly), and the
/// result object.
pub fn json_document(command: &str, config: &[(&'static str, String)], result: Json) -> String {
    let config_obj = Json::Obj(
        config
            .iter()
            .map(|(k, v)| (*k, Json::Str(v.clone())))
            .collect(),
    );
    let doc = Json::Obj(vec![
        ("schema_version", Json::UInt(1)),
        ("command", Json::Str(command.to_string())),
        ("version", Json::Str(env!("CARGO_PKG_VERSION").to_string())),
        ("config", config_obj),
        ("result", result),
    ]);
    let mut out = String::new();
    doc.write(&mut out, 0);
    out.push('\n');
    out
}

/// CSV document: a `# key = value` stanza mirroring the JSON header and
/// configuration, then the fixed column header and the rows.
pub fn csv_document(
    command: &str,
    config: &[(&'static str, String)],
    header: &str,
    rows: &[String],
) -> String {
    let mut out = String::new();
    out.push_str("# schema_version = 1\n");
    out.push_str(&format!("# command = {command}\n"));
    out.push_str(&format!("# version = {}\n", env!("CARGO_PKG_VERSION")));
    for (key, value) in config {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_have_fixed_layout() {
        let doc = json_document(
            "probe",
            &[("alpha", "1".to_string())],
            Json::Obj(vec![
                ("value", Json::Num(0.5)),
                ("count", Json::UInt(3)),
                ("nan_is_null", Json::Num(f64::NAN)),
            ]),
        );
        let expected = format!(
            r#"{{
  "schema_version": 1,
  "command": "probe",
  "version": "{v}",
  "config": {{
    "alpha": "1"
  }},
  "result": {{
    "value": 5.0000000000000000e-1,
    "count": 3,
    "nan_is_null": null
  }}
}}
"#,
            v = env!("CARGO_PKG_VERSION")
        );
        assert_eq!(doc, expected);

        let csv = csv_document(
            "probe",
            &[("alpha", "1".to_string())],
            "a,b",
            &["1,2".to_string()],
        );
        assert_eq!(
            csv,
            format!(
                "# schema_version = 1\n# command = probe\n# version = {}\n# alpha = 1\na,b\n1,2\n",
                env!("CARGO_PKG_VERSION")
            )
        );
    }

    #[test]
    fn strings_are_escaped() {
        assert_eq!(json_escape("a\"b\\c\nd"), "a\\\"b\\\\c\\nd");
    }
}
