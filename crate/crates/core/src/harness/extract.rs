//! Pulling the revised method out of a free-form model response.

use crate::java;
use crate::lexer::{tokenize, END_TAG, START_TAG};

/// Contents of the first fenced code block, or the whole text.
pub fn strip_fences(response: &str) -> &str {
    let Some(open) = response.find("```") else {
        return response;
    };
    let after = &response[open + 3..];
    // Skip the info string (`java`, `Java`, ...).
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

/// First method declaration in `response` that parses, tags removed.
pub fn extract_method(response: &str) -> Option<String> {
    let text = strip_fences(response).replace(START_TAG, "").replace(END_TAG, "");
    let toks = tokenize(&text).tokens;
    let mut line_starts = Vec::new();
    let mut last_line = usize::MAX;
    for (i, t) in toks.iter().enumerate() {
        let line = text[..t.start].matches('\n').count();
        if line != last_line {
            line_starts.push(i);
            last_line = line;
        }
    }
    for start in line_starts {
        let Some(open) = (start..toks.len()).find(|&k| toks[k].text == "{" || toks[k].text == ";") else {
            break;
        };
        if toks[open].text != "{" {
            continue;
        }
        let mut depth = 0usize;
        let mut close = None;
        for (k, t) in toks.iter().enumerate().skip(open) {
            match t.text.as_str() {
                "{" => depth += 1,
                "}" => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(k);
                        break;
                    }
                }
                _ => {}
            }
        }
        let Some(close) = close else { continue };
        let candidate = &text[toks[start].start..toks[close].end];
        if java::parse_untagged(candidate).is_ok() {
            return Some(candidate.to_string());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_and_prose_responses() {
        let r = "Here is the fix:\n```java\npublic int f(int a) {\n  return a + 1;\n}\n```\nDone.";
        assert_eq!(extract_method(r).unwrap(), "public int f(int a) {\n  return a + 1;\n}");
        let r = "The revised code is\nvoid g() { if (x) { y(); } }\nhope this helps";
        assert_eq!(extract_method(r).unwrap(), "void g() { if (x) { y(); } }");
        assert_eq!(extract_method("no code here."), None);
    }

    #[test]
    fn echoed_tags_are_dropped() {
        let r = "void g() { <START> a(); <END> }";
        assert_eq!(extract_method(r).unwrap(), "void g() {  a();  }");
    }
}
