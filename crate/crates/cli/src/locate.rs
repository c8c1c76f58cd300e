//! Maps a config key path such as `[2].scheme.rates[1]` to a line of the
//! JSON text, so diagnostics can point at the source.

enum Step<'a> {
    Key(&'a str),
    Index(usize),
}

fn steps(path: &str) -> Vec<Step<'_>> {
    let mut out = Vec::new();
    for part in path.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if !name.is_empty() {
            out.push(Step::Key(name));
        }
        while let Some(close) = rest.find(']') {
            if let Ok(i) = rest[1..close].parse() {
                out.push(Step::Index(i));
            }
            rest = &rest[close + 1..];
        }
    }
    out
}

/// Byte offset of element `index` of the array opening at or after `from`.
fn element(text: &[u8], from: usize, index: usize) -> Option<usize> {
    let open = from + text[from..].iter().position(|&b| b == b'[')?;
    let mut depth = 0usize;
    let mut seen = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in text.iter().enumerate().skip(open) {
        if in_string {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_string = false,
                _ => {}
            }
            continue;
        }
        if depth == 1 && seen == index && !b.is_ascii_whitespace() && b != b',' && b != b']' {
            return Some(i);
        }
        match b {
            b'"' => in_string = true,
            b'[' | b'{' => depth += 1,
            b']' | b'}' => {
                depth -= 1;
                if depth == 0 {
                    return None;
                }
            }
            b',' if depth == 1 => seen += 1,
            _ => {}
        }
    }
    None
}

/// 1-based line of `path` in `text`, as far as it can be followed.
pub fn line_of(text: &str, path: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let mut found = false;
    for step in steps(path) {
        let next = match step {
            Step::Key(k) => text[pos..].find(&format!("\"{k}\"")).map(|i| pos + i),
            Step::Index(i) => element(bytes, pos, i),
        };
        match next {
            Some(p) => {
                pos = p;
                found = true;
            }
            None => break,
        }
    }
    found.then(|| text[..pos].matches('\n').count() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
  "id": "x",
  "scheme": {
    "kind": "vector",
    "rates": [0.1,
              1.5, 0.2]
  }
}"#;

    #[test]
    fn finds_nested_keys() {
        assert_eq!(line_of(DOC, "id"), Some(2));
        assert_eq!(line_of(DOC, "scheme.rates"), Some(5));
        assert_eq!(line_of(DOC, "scheme.rates[1]"), Some(6));
        assert_eq!(line_of(DOC, "scheme.rates[0]"), Some(5));
    }

    #[test]
    fn array_documents() {
        let doc = "[\n {\"id\": \"a\"},\n {\"id\": \"b\",\n  \"trials\": 0}\n]";
        assert_eq!(line_of(doc, "[1].trials"), Some(4));
        assert_eq!(line_of(doc, "[0].id"), Some(2));
    }

    #[test]
    fn missing_keys() {
        assert_eq!(line_of(DOC, "nothing"), None);
    }
}
