//! Tokenization and term normalization shared by indexing and querying.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

/// Stopwords used when no list is supplied.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "in",
    "into", "is", "it", "its", "of", "on", "or", "over", "than", "that", "the", "their", "this",
    "to", "under", "was", "were", "with",
];

pub const DEFAULT_MIN_TOKEN_LENGTH: usize = 2;
pub const DEFAULT_MAX_TOKEN_LENGTH: usize = 64;

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("invalid token length bounds: min {min}, max {max} (need 1 <= min <= max)")]
    InvalidBounds { min: usize, max: usize },
    #[error("cannot read stopword file {path}: {source}")]
    StopwordFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Analyzer settings. Immutable once built; the same value is stored in the
/// index so queries are analyzed exactly like documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzerConfig {
    lowercase: bool,
    stopwords: BTreeSet<String>,
    min_token_length: usize,
    max_token_length: usize,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self::new(
            true,
            DEFAULT_STOPWORDS.iter().copied(),
            DEFAULT_MIN_TOKEN_LENGTH,
            DEFAULT_MAX_TOKEN_LENGTH,
        )
        .expect("default analyzer bounds are valid")
    }
}

impl AnalyzerConfig {
    /// Stopwords are normalized on the way in, so callers may pass them in any case.
    pub fn new<I, S>(
        lowercase: bool,
        stopwords: I,
        min_token_length: usize,
        max_token_length: usize,
    ) -> Result<Self, AnalyzerError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if min_token_length == 0 || min_token_length > max_token_length {
            return Err(AnalyzerError::InvalidBounds {
                min: min_token_length,
                max: max_token_length,
            });
        }
        let stopwords = stopwords
            .into_iter()
            .map(|w| normalize(w.as_ref().trim(), lowercase))
            .filter(|w| !w.is_empty())
            .collect();
        Ok(Self {
            lowercase,
            stopwords,
            min_token_length,
            max_token_length,
        })
    }

    /// Replace the stopword list with the contents of a UTF-8 file, one term
    /// per line. Blank lines are ignored.
    pub fn with_stopword_file(self, path: &Path) -> Result<Self, AnalyzerError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnalyzerError::StopwordFile {
            path: path.display().to_string(),
            source,
        })?;
        Self::new(
            self.lowercase,
            text.lines(),
            self.min_token_length,
            self.max_token_length,
        )
    }

    pub fn with_stopwords<I, S>(self, stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::new(
            self.lowercase,
            stopwords,
            self.min_token_length,
            self.max_token_length,
        )
        .expect("bounds already validated")
    }

    pub fn with_length_bounds(self, min: usize, max: usize) -> Result<Self, AnalyzerError> {
        Self::new(self.lowercase, self.stopwords, min, max)
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn min_token_length(&self) -> usize {
        self.min_token_length
    }

    pub fn max_token_length(&self) -> usize {
        self.max_token_length
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }
}

/// A normalized index term and the position of the token it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub text: String,
    pub position: usize,
}

/// Split on every non-alphanumeric scalar value. Positions count tokens from 0.
pub fn tokenize(raw: &str) -> Vec<(&str, usize)> {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(pos, t)| (t, pos))
        .collect()
}

/// Tokenize, lowercase, then drop stopwords and tokens outside the length bounds.
pub fn analyze(raw: &str, config: &AnalyzerConfig) -> Vec<Term> {
    tokenize(raw)
        .into_iter()
        .filter_map(|(token, position)| {
            let text = normalize(token, config.lowercase);
            let len = text.chars().count();
            if len < config.min_token_length
                || len > config.max_token_length
                || config.is_stopword(&text)
            {
                return None;
            }
            Some(Term { text, position })
        })
        .collect()
}

// Some uppercase letters lowercase to a letter plus a combining mark (e.g.
// U+0130). Marks are not alphanumeric, so they are dropped to keep terms
// single tokens.
fn normalize(token: &str, lowercase: bool) -> String {
    if !lowercase {
        return token.to_owned();
    }
    token
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
        .collect()
}
