//! Emotion label vocabulary and label unification.
//!
//! File format, one entry per line:
//!
//! ```text
//! # comments and blank lines are ignored
//! n = 9
//! unknown -> 0
//! sad -> 1
//! frustrated -> 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Token reserved for the `Unknown` label.
pub const UNKNOWN_TOKEN: u32 = 0;

const DEFAULT_GROUPS: &[(u32, &[&str])] = &[
    (0, &["Unknown"]),
    (1, &["Sad", "Frustrated", "Hurt"]),
    (2, &["Angry"]),
    (3, &["Confused", "Worried"]),
    (4, &["Disgust", "Contempt"]),
    (5, &["Fearful"]),
    (6, &["Sleepiness", "Bored"]),
    (7, &["Neutral", "Narration"]),
    (8, &["Surprise", "Excited"]),
    (9, &["Happy", "Amused", "Laughing"]),
];

/// Case-folds and trims a raw label.
pub fn normalize_label(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Maps raw emotion strings onto grouped label tokens `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    n: u32,
    entries: BTreeMap<String, u32>,
}

impl LabelVocabulary {
    /// An empty vocabulary over tokens `0..=n`.
    pub fn new(n: u32) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    /// The ten-group table with `n = 9`.
    pub fn default_table() -> Self {
        let mut vocab = Self::new(9);
        for (token, names) in DEFAULT_GROUPS {
            for name in *names {
                vocab.insert(name, *token).expect("default table is consistent");
            }
        }
        vocab
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds a synonym. Re-adding the same mapping is a no-op; remapping is an error.
    pub fn insert(&mut self, raw: &str, token: u32) -> Result<()> {
        let key = normalize_label(raw);
        if key.is_empty() {
            return Err(Error::Vocabulary("empty label string".into()));
        }
        if token > self.n {
            return Err(Error::Vocabulary(format!("token {token} for {key:?} exceeds n = {}", self.n)));
        }
        if key == "unknown" && token != UNKNOWN_TOKEN {
            return Err(Error::Vocabulary(format!("\"unknown\" must map to {UNKNOWN_TOKEN}")));
        }
        match self.entries.get(&key) {
            Some(&existing) if existing != token => Err(Error::Vocabulary(format!(
                "{key:?} already maps to {existing}, refusing {token}"
            ))),
            _ => {
                self.entries.insert(key, token);
                Ok(())
            }
        }
    }

    /// Raw strings grouped under `token`, sorted.
    pub fn synonyms(&self, token: u32) -> Vec<&str> {
        self.entries.iter().filter(|(_, &t)| t == token).map(|(k, _)| k.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.entries.iter().map(|(k, &t)| (k.as_str(), t))
    }

    /// Resolves a raw label to its group token.
    pub fn unify(&self, raw: &str) -> Result<u32> {
        let key = normalize_label(raw);
        self.entries.get(&key).copied().ok_or(Error::UnmappedLabel(raw.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut vocab: Option<Self> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| Error::Vocabulary(format!("line {}: {msg}", lineno + 1));
            if let Some((raw, token)) = line.split_once("->") {
                let vocab = vocab.as_mut().ok_or_else(|| at("entry before the `n = ...` header".into()))?;
                let token: u32 = token.trim().parse().map_err(|_| at(format!("bad token {:?}", token.trim())))?;
                vocab.insert(raw, token).map_err(|e| at(e.to_string()))?;
            } else if let Some((key, value)) = line.split_once('=') {
                if key.trim() != "n" || vocab.is_some() {
                    return Err(at(format!("unexpected header {line:?}")));
                }
                let n: u32 = value.trim().parse().map_err(|_| at(format!("bad n {:?}", value.trim())))?;
                vocab = Some(Self::new(n));
            } else {
                return Err(at(format!("cannot parse {line:?}")));
            }
        }
        vocab.ok_or_else(|| Error::Vocabulary("missing `n = ...` header".into()))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n = {}\n", self.n);
        let mut by_token: Vec<_> = self.entries.iter().collect();
        by_token.sort_by_key(|(k, &t)| (t, (*k).clone()));
        for (raw, token) in by_token {
            let _ = writeln!(out, "{raw} -> {token}");
        }
        out
    }
}

impl Default for LabelVocabulary {
    fn default() -> Self {
        Self::default_table()
    }
}

/// Free-function form of [`LabelVocabulary::unify`].
pub fn unify_label(raw: &str, vocab: &LabelVocabulary) -> Result<u32> {
    vocab.unify(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_groups() {
        let v = LabelVocabulary::default_table();
        assert_eq!(v.unify("Amused").unwrap(), 9);
        assert_eq!(v.unify("Unknown").unwrap(), 0);
        assert_eq!(v.unify("Contempt").unwrap(), 4);
        for s in ["Sad", "Frustrated", "Hurt"] {
            assert_eq!(v.unify(s).unwrap(), 1);
        }
        assert_eq!(v.len(), 19);
        assert_eq!(v.n(), 9);
    }

    #[test]
    fn case_and_whitespace_insensitive() {
        let v = LabelVocabulary::default_table();
        assert_eq!(v.unify("  hAPpy \t").unwrap(), 9);
        let once = normalize_label("  Bored ");
        assert_eq!(normalize_label(&once), once);
        assert_eq!(v.unify(&once).unwrap(), v.unify("  Bored ").unwrap());
    }

    #[test]
    fn unmapped_label_carries_string() {
        let v = LabelVocabulary::default_table();
        assert_eq!(v.unify("Elated"), Err(Error::UnmappedLabel("Elated".into())));
    }

    #[test]
    fn extensible_with_synonyms() {
        let mut v = LabelVocabulary::default_table();
        v.insert("Joyful", 9).unwrap();
        assert_eq!(v.unify("joyful").unwrap(), 9);
        assert!(v.insert("joyful", 2).is_err());
        assert!(v.insert("calm", 10).is_err());
        assert!(v.insert("Unknown", 3).is_err());
    }

    #[test]
    fn text_round_trip() {
        let v = LabelVocabulary::default_table();
        let parsed = LabelVocabulary::parse(&v.to_text()).unwrap();
        assert_eq!(parsed, v);
    }

    #[test]
    fn parse_errors() {
        assert!(LabelVocabulary::parse("sad -> 1\n").is_err());
        assert!(LabelVocabulary::parse("n = 2\nsad -> x\n").is_err());
        assert!(LabelVocabulary::parse("# nothing\n").is_err());
        let v = LabelVocabulary::parse("n = 2\n# c\n\nSad -> 1\nglad -> 2\n").unwrap();
        assert_eq!(v.unify("SAD").unwrap(), 1);
    }
}
