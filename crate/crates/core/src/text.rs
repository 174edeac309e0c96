//! Helpers for pulling structured payloads out of free-form model output.

/// Splits `text` into the prose preceding a JSON object and the object itself.
///
/// A fenced ```json block wins; otherwise the last balanced `{...}` span
/// that parses as a JSON object is used.
pub fn split_json_object(text: &str) -> Option<(&str, serde_json::Value)> {
    if let Some((before, body)) = fenced_block(text, "json") {
        if let Ok(value @ serde_json::Value::Object(_)) = serde_json::from_str(body.trim()) {
            return Some((before, value));
        }
    }
    let mut best = None;
    for (start, _) in text.match_indices('{') {
        if let Some(end) = balanced_end(&text[start..]) {
            let candidate = &text[start..start + end];
            if let Ok(value @ serde_json::Value::Object(_)) = serde_json::from_str(candidate) {
                best = Some((&text[..start], value));
            }
        }
    }
    best
}

/// The body of the first fenced block tagged `lang`, with the text before it.
pub fn fenced_block<'a>(text: &'a str, lang: &str) -> Option<(&'a str, &'a str)> {
    let opener = format!("```{lang}");
    let start = text.find(&opener)?;
    let after = &text[start + opener.len()..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    Some((&text[..start], &body[..end]))
}

/// Length of the balanced-brace prefix of `s` (which starts with `{`), honouring JSON strings.
fn balanced_end(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fenced_json_is_preferred() {
        let text = "Thought: go {not json}\n```json\n{\"decision\": \"rest\"}\n```\n{\"decision\": \"dine\"}";
        let (before, value) = split_json_object(text).unwrap();
        assert_eq!(value, json!({"decision": "rest"}));
        assert_eq!(before, "Thought: go {not json}\n");
    }

    #[test]
    fn last_object_in_prose() {
        let text = "I am tired {\"a\": 1} so {\"decision\": \"rest\", \"note\": \"}{\"}";
        let (before, value) = split_json_object(text).unwrap();
        assert_eq!(value["decision"], "rest");
        assert_eq!(value["note"], "}{");
        assert!(before.starts_with("I am tired"));
    }

    #[test]
    fn nothing_parseable() {
        assert!(split_json_object("no braces here").is_none());
        assert!(split_json_object("{broken").is_none());
        assert!(split_json_object("[1, 2]").is_none());
    }

    #[test]
    fn fenced_block_bounds() {
        let (before, body) = fenced_block("x\n```aspects\n1. A: b\n```", "aspects").unwrap();
        assert_eq!(before, "x\n");
        assert_eq!(body, "1. A: b\n");
        assert!(fenced_block("plain", "aspects").is_none());
    }
}
