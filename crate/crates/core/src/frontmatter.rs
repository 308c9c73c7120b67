//! `---` delimited frontmatter splitting and the scalar writer used for
//! canonical output.

use serde_yaml::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitError {
    /// The first line is not exactly `---`.
    NoOpening,
    /// No closing `---` line was found.
    NoClosing,
}

/// Splits `text` into the frontmatter source and the body that follows the
/// closing delimiter line. The body is returned verbatim.
pub fn split(text: &str) -> Result<(&str, &str), SplitError> {
    let first_end = text.find('\n').ok_or(SplitError::NoOpening)?;
    if text[..first_end].trim_end_matches('\r') != "---" {
        return Err(SplitError::NoOpening);
    }
    let yaml_start = first_end + 1;
    let mut pos = yaml_start;
    while pos <= text.len() {
        let end = text[pos..].find('\n').map(|i| pos + i);
        let line = &text[pos..end.unwrap_or(text.len())];
        if line.trim_end_matches('\r') == "---" {
            let body = match end {
                Some(e) => &text[e + 1..],
                None => "",
            };
            return Ok((&text[yaml_start..pos], body));
        }
        match end {
            Some(e) => pos = e + 1,
            None => break,
        }
    }
    Err(SplitError::NoClosing)
}

/// Renders a string so that YAML reads it back as exactly the same string
/// in block context. Plain style is used whenever that is unambiguous.
pub fn scalar(s: &str) -> String {
    if plain_is_exact(s, false) {
        s.to_string()
    } else {
        quoted(s)
    }
}

/// Like [`scalar`], for an item inside a flow sequence (`[a, b]`).
pub fn flow_item(s: &str) -> String {
    if plain_is_exact(s, true) {
        s.to_string()
    } else {
        quoted(s)
    }
}

pub fn flow_list(items: &[String]) -> String {
    let parts: Vec<String> = items.iter().map(|s| flow_item(s)).collect();
    format!("[{}]", parts.join(", "))
}

// JSON strings are valid YAML double-quoted scalars.
fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn plain_is_exact(s: &str, in_flow: bool) -> bool {
    if s.is_empty()
        || s.contains(['\n', '\r', '\t', '"', '\\'])
        || s.starts_with(|c: char| !c.is_alphanumeric())
    {
        return false;
    }
    // Let the YAML reader decide: keywords, numbers, comments and mapping
    // indicators all come back as something other than the same string.
    let probe = if in_flow {
        format!("k: [{s}]")
    } else {
        format!("k: {s}")
    };
    let Ok(Value::Mapping(map)) = serde_yaml::from_str::<Value>(&probe) else {
        return false;
    };
    let Some(value) = map.get("k") else {
        return false;
    };
    if in_flow {
        matches!(value, Value::Sequence(items) if items.len() == 1 && items[0].as_str() == Some(s))
    } else {
        value.as_str() == Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_basic() {
        let (fm, body) = split("---\na: 1\n---\n\n# T\n").unwrap();
        assert_eq!(fm, "a: 1\n");
        assert_eq!(body, "\n# T\n");
    }

    #[test]
    fn split_empty_body() {
        assert_eq!(split("---\na: 1\n---\n").unwrap(), ("a: 1\n", ""));
        assert_eq!(split("---\na: 1\n---").unwrap(), ("a: 1\n", ""));
        assert_eq!(split("---\n---\nbody").unwrap(), ("", "body"));
    }

    #[test]
    fn split_errors() {
        assert_eq!(split("a: 1\n---\n"), Err(SplitError::NoOpening));
        assert_eq!(split(""), Err(SplitError::NoOpening));
        assert_eq!(split("--- \na: 1\n---\n"), Err(SplitError::NoOpening));
        assert_eq!(split("---\na: 1\n"), Err(SplitError::NoClosing));
        assert_eq!(split("---\na: 1\n----\n"), Err(SplitError::NoClosing));
    }

    #[test]
    fn plain_when_unambiguous() {
        assert_eq!(scalar("Service Order Manager"), "Service Order Manager");
        assert_eq!(scalar("Orchestrates service order lifecycle"), "Orchestrates service order lifecycle");
        assert_eq!(scalar("a, b"), "a, b");
        assert_eq!(flow_item("a, b"), "\"a, b\"");
    }

    #[test]
    fn quoted_when_ambiguous() {
        for s in ["true", "null", "123", "1.5", "~", "a: b", "a #b", "- x", "", " lead", "x\ny", "[x]", "*ref"] {
            let out = scalar(s);
            assert!(out.starts_with('"'), "{s:?} -> {out}");
            let v: Value = serde_yaml::from_str(&format!("k: {out}")).unwrap();
            assert_eq!(v["k"].as_str(), Some(s));
        }
    }
}
