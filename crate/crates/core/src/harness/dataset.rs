//! JSONL datasets of review instances and stores of perturbed variants.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::instance::ReviewInstance;
use crate::java;
use crate::spp::PerturbedVariant;

/// A line that could not be loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Loaded<T> {
    pub items: Vec<T>,
    pub rejected: Vec<Rejection>,
}

/// Check that an instance is usable: tagged code parses, the revision
/// parses without tags.
pub fn validate_instance(inst: &ReviewInstance) -> Result<(), String> {
    if inst.id.trim().is_empty() {
        return Err("empty id".into());
    }
    java::parse_method(&inst.code).map_err(|e| format!("code: {e}"))?;
    java::parse_untagged(&inst.revision).map_err(|e| format!("revision: {e}"))?;
    Ok(())
}

fn parse_lines<T: DeserializeOwned>(
    text: &str,
    mut check: impl FnMut(&T) -> Result<(), String>,
) -> Loaded<T> {
    let mut out = Loaded {
        items: Vec::new(),
        rejected: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let result = serde_json::from_str::<T>(line)
            .map_err(|e| e.to_string())
            .and_then(|item| check(&item).map(|_| item));
        match result {
            Ok(item) => out.items.push(item),
            Err(message) => out.rejected.push(Rejection { line: i + 1, message }),
        }
    }
    out
}

/// Parse a dataset. Bad lines are rejected individually with their line
/// number; duplicate ids keep the first occurrence.
pub fn parse_dataset(text: &str) -> Loaded<ReviewInstance> {
    let mut seen = HashSet::new();
    parse_lines(text, |inst: &ReviewInstance| {
        validate_instance(inst)?;
        if !seen.insert(inst.id.clone()) {
            return Err(format!("duplicate id `{}`", inst.id));
        }
        Ok(())
    })
}

pub fn load_dataset(path: &Path) -> Result<Loaded<ReviewInstance>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let loaded = parse_dataset(&text);
    log::info!(
        "{}: loaded {} instances, rejected {}",
        path.display(),
        loaded.items.len(),
        loaded.rejected.len()
    );
    for r in &loaded.rejected {
        log::warn!("{}:{}: {}", path.display(), r.line, r.message);
    }
    Ok(loaded)
}

pub fn load_variants(path: &Path) -> Result<Loaded<PerturbedVariant>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(parse_lines(&text, |_: &PerturbedVariant| Ok(())))
}

/// One JSON object per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).expect("serialisable"));
        s.push('\n');
    }
    s
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(to_jsonl(items).as_bytes())
        .map_err(|e| HarnessError::io(path, e))
}

/// Serialise rows as CSV with a header.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Format(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| HarnessError::Format(format!("{}: row {}: {e}", path.display(), i + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_lines_are_rejected_with_numbers() {
        let good = r#"{"id":"a","code":"void f() { <START> a(); <END> }","comment":"c","revision":"void f() { b(); }"}"#;
        let missing = r#"{"id":"b","code":"void f() { <START> a(); <END> }","comment":"c"}"#;
        let untagged = r#"{"id":"c","code":"void f() { a(); }","comment":"c","revision":"void f() { b(); }"}"#;
        let text = format!("{good}\n{missing}\n\n{untagged}\n{good}\n");
        let loaded = parse_dataset(&text);
        assert_eq!(loaded.items.len(), 1);
        let lines: Vec<usize> = loaded.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 4, 5]);
        assert!(loaded.rejected[0].message.contains("revision"));
    }
}
