use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::SensitivityError;

const DEFAULT_LEXICON: &str = include_str!("../../data/gendered_lexicon.txt");
const DEFAULT_SUBSTITUTIONS: &str = include_str!("../../data/gendered_substitutions.tsv");

/// Set of protected-attribute tokens, stored lowercase.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    tokens: BTreeSet<String>,
}

impl Lexicon {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self { tokens: tokens.into_iter().map(|t| t.as_ref().trim().to_lowercase()).collect() }
    }

    /// One token per line; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, SensitivityError> {
        let mut tokens = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if t.split_whitespace().count() > 1 {
                return Err(SensitivityError::Parse { line: i + 1, detail: format!("{t:?} is not a single token") });
            }
            tokens.insert(t.to_lowercase());
        }
        Ok(Self { tokens })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SensitivityError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Small built-in list of definitional gendered English words.
    pub fn gendered_default() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

/// Symmetric token swaps (`she <-> he`). Each token maps to at most one partner,
/// so applying the map twice is the identity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SubstitutionMap {
    pairs: BTreeMap<String, String>,
}

impl SubstitutionMap {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, SensitivityError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut map = Self::default();
        for (i, (a, b)) in pairs.into_iter().enumerate() {
            map.insert(a.as_ref(), b.as_ref(), i + 1)?;
        }
        Ok(map)
    }

    fn insert(&mut self, a: &str, b: &str, line: usize) -> Result<(), SensitivityError> {
        let (a, b) = (a.trim().to_lowercase(), b.trim().to_lowercase());
        if a.is_empty() || b.is_empty() || a == b {
            return Err(SensitivityError::Parse { line, detail: format!("invalid pair {a:?} / {b:?}") });
        }
        for (from, to) in [(&a, &b), (&b, &a)] {
            match self.pairs.get(from) {
                Some(existing) if existing != to => {
                    return Err(SensitivityError::Parse {
                        line,
                        detail: format!("{from:?} already swaps with {existing:?}"),
                    })
                }
                _ => {}
            }
        }
        self.pairs.insert(a.clone(), b.clone());
        self.pairs.insert(b, a);
        Ok(())
    }

    /// `a<TAB>b` per line, read symmetrically.
    pub fn parse(text: &str) -> Result<Self, SensitivityError> {
        let mut map = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => map.insert(a, b, i + 1)?,
                _ => {
                    return Err(SensitivityError::Parse {
                        line: i + 1,
                        detail: "expected exactly two tab-separated tokens".into(),
                    })
                }
            }
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SensitivityError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn gendered_default() -> Self {
        Self::parse(DEFAULT_SUBSTITUTIONS).expect("bundled substitutions parse")
    }

    pub fn partner(&self, token: &str) -> Option<&str> {
        self.pairs.get(&token.to_lowercase()).map(String::as_str)
    }

    /// Swaps every mapped token; returns the new sequence and the swap count.
    pub fn apply<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<String>, usize) {
        let mut count = 0;
        let out = tokens
            .iter()
            .map(|t| match self.partner(t.as_ref()) {
                Some(p) => {
                    count += 1;
                    p.to_string()
                }
                None => t.as_ref().to_string(),
            })
            .collect();
        (out, count)
    }

    pub fn len(&self) -> usize {
        self.pairs.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
