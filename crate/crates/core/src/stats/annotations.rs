use std::collections::BTreeMap;
use std::path::Path;

use super::StatsError;

/// Binary bias labels from `R` annotators per example.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationSet {
    ids: Vec<String>,
    labels: Vec<Vec<u8>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MajorityVote {
    pub biased: bool,
    /// True when the vote split evenly and was resolved as biased.
    pub tie: bool,
}

impl AnnotationSet {
    pub fn new(ids: Vec<String>, labels: Vec<Vec<u8>>) -> Result<Self, StatsError> {
        if ids.len() != labels.len() {
            return Err(StatsError::LengthMismatch(ids.len(), labels.len()));
        }
        let raters = labels.first().map_or(1, Vec::len);
        for (row, l) in labels.iter().enumerate() {
            if l.is_empty() || l.len() != raters {
                return Err(StatsError::Parse {
                    line: row + 1,
                    detail: format!("expected {raters} annotator labels, got {}", l.len()),
                });
            }
            if l.iter().any(|&v| v > 1) {
                return Err(StatsError::Parse { line: row + 1, detail: "labels must be 0 or 1".into() });
            }
        }
        Ok(Self { ids, labels })
    }

    /// `id<TAB>l1<TAB>...<TAB>lR` per line, labels 0 or 1.
    pub fn parse(text: &str) -> Result<Self, StatsError> {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().trim();
            if id.is_empty() {
                return Err(StatsError::Parse { line: i + 1, detail: "missing example id".into() });
            }
            let row = fields
                .map(|f| match f.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(StatsError::Parse { line: i + 1, detail: format!("label {other:?} is not 0 or 1") }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.is_empty() {
                return Err(StatsError::Parse { line: i + 1, detail: "no annotator labels".into() });
            }
            if let Some(first) = labels.first().map(Vec::len) {
                if first != row.len() {
                    return Err(StatsError::Parse {
                        line: i + 1,
                        detail: format!("expected {first} annotator labels, got {}", row.len()),
                    });
                }
            }
            ids.push(id.to_string());
            labels.push(row);
        }
        Self::new(ids, labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StatsError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, row) in self.ids.iter().zip(&self.labels) {
            out.push_str(id);
            for l in row {
                out.push('\t');
                out.push_str(if *l == 1 { "1" } else { "0" });
            }
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn raters(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[Vec<u8>] {
        &self.labels
    }

    /// Majority label per example; even splits count as biased.
    pub fn majority(&self) -> Vec<MajorityVote> {
        self.labels
            .iter()
            .map(|row| {
                let ones = row.iter().filter(|&&l| l == 1).count();
                let zeros = row.len() - ones;
                MajorityVote { biased: ones >= zeros, tie: ones == zeros }
            })
            .collect()
    }

    pub fn majority_by_id(&self) -> BTreeMap<&str, MajorityVote> {
        self.ids.iter().map(String::as_str).zip(self.majority()).collect()
    }

    /// `examples x 2` count matrix (unbiased, biased) for Fleiss' kappa.
    pub fn category_counts(&self) -> Vec<Vec<usize>> {
        self.labels
            .iter()
            .map(|row| {
                let ones = row.iter().filter(|&&l| l == 1).count();
                vec![row.len() - ones, ones]
            })
            .collect()
    }
}
