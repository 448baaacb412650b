use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::models::LabeledExample;

/// One pre-tokenized example. Stored as a JSON object per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: usize,
    pub protected: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Vec<u8>>,
    /// Ground truth from the toy generator: the label was flipped toward a stereotype.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biased: Option<bool>,
}

impl TextRecord {
    pub fn to_example(&self) -> LabeledExample {
        LabeledExample::text(&self.tokens, self.label, Some(usize::from(self.protected)))
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("field `id` is empty".into());
        }
        if self.tokens.is_empty() {
            return Err("field `tokens` is empty".into());
        }
        if self.tokens.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err("field `tokens` holds an empty or whitespace-containing token".into());
        }
        if self.protected > 1 {
            return Err(format!("field `protected` must be 0 or 1, got {}", self.protected));
        }
        if let Some(a) = &self.annotations {
            if a.is_empty() || a.iter().any(|&v| v > 1) {
                return Err("field `annotations` must be a non-empty list of 0/1".into());
            }
        }
        Ok(())
    }
}

pub fn parse_records(text: &str) -> Result<Vec<TextRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let rec: TextRecord = serde_json::from_str(line)
            .map_err(|e| CorpusError::Parse { line: line_no, detail: e.to_string() })?;
        rec.validate().map_err(|detail| CorpusError::Parse { line: line_no, detail })?;
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::Parse { line: line_no, detail: format!("duplicate id {:?}", rec.id) });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<TextRecord>, CorpusError> {
    parse_records(&std::fs::read_to_string(path)?)
}

pub fn records_to_jsonl(records: &[TextRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_records(path: impl AsRef<Path>, records: &[TextRecord]) -> Result<(), CorpusError> {
    std::fs::write(path, records_to_jsonl(records))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_records("").unwrap().is_empty());
        assert!(parse_records("\n\n").unwrap().is_empty());
    }

    #[test]
    fn missing_label_names_line_and_field() {
        let text = concat!(
            r#"{"id":"a","tokens":["x"],"label":0,"protected":1}"#,
            "\n",
            r#"{"id":"b","tokens":["y"],"protected":0}"#,
            "\n"
        );
        match parse_records(text).unwrap_err() {
            CorpusError::Parse { line, detail } => {
                assert_eq!(line, 2);
                assert!(detail.contains("label"), "{detail}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_invalid_fields() {
        for bad in [
            r#"{"id":"a","tokens":[],"label":0,"protected":0}"#,
            r#"{"id":"a","tokens":["x"],"label":0,"protected":2}"#,
            r#"{"id":"","tokens":["x"],"label":0,"protected":0}"#,
            r#"{"id":"a","tokens":["x y"],"label":0,"protected":0}"#,
            r#"{"id":"a","tokens":["x"],"label":0,"protected":0,"annotations":[3]}"#,
            r#"{"id":"a","tokens":["x"],"label":0,"protected":0,"extra":1}"#,
        ] {
            assert!(matches!(parse_records(bad), Err(CorpusError::Parse { line: 1, .. })), "{bad}");
        }
        let dup = "{\"id\":\"a\",\"tokens\":[\"x\"],\"label\":0,\"protected\":0}\n".repeat(2);
        assert!(matches!(parse_records(&dup), Err(CorpusError::Parse { line: 2, .. })));
    }
}
