//! Query parsing and fuzzy expansion of query terms against the term dictionary.
//!
//! A term with fuzziness `θ` may differ from a dictionary term by at most
//! `k = floor((1 - θ) * |term|)` edits (see [`max_edit_distance`]), and a
//! candidate must share the first `p` characters with the query term.
//!
//! Expansion walks the prefix-restricted run of the sorted dictionary with one
//! incremental banded DP. Consecutive terms reuse the rows of their common
//! prefix, and once a row exceeds `k` every remaining term under that prefix
//! is skipped. When a row sits exactly at `k`, only characters from the
//! pattern's band can extend it, so the walk seeks straight to the next such
//! sibling.

use thiserror::Error;

use crate::edit_distance::{membership, BoundedDistance, Metric};
use crate::index::{InvertedIndex, TermEntry};
use crate::text_analysis::analyze;

pub const DEFAULT_FUZZINESS: f64 = 0.5;
pub const DEFAULT_PREFIX_LENGTH: usize = 0;
pub const DEFAULT_MAX_EXPANSIONS: usize = 50;

// Absorbs representation error in (1 - θ) * n, e.g. (1 - 0.7) * 10.
const FLOOR_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("empty query after analysis")]
    EmptyQuery,
    #[error("fuzziness must be in [0, 1), got {0}")]
    InvalidFuzziness(f64),
    #[error("prefix length {prefix} exceeds length {len} of term '{term}'")]
    PrefixTooLong { term: String, prefix: usize, len: usize },
    #[error("max_expansions must be at least 1")]
    ZeroExpansions,
    #[error("empty query term")]
    EmptyTerm,
}

/// Fuzzy parameters applied to every term of a parsed query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryDefaults {
    pub fuzziness: f64,
    pub prefix_length: usize,
    pub max_expansions: usize,
    pub metric: Metric,
}

impl Default for QueryDefaults {
    fn default() -> Self {
        Self {
            fuzziness: DEFAULT_FUZZINESS,
            prefix_length: DEFAULT_PREFIX_LENGTH,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            metric: Metric::Levenshtein,
        }
    }
}

impl QueryDefaults {
    pub fn validate(&self) -> Result<(), QueryError> {
        check_fuzziness(self.fuzziness)?;
        if self.max_expansions == 0 {
            return Err(QueryError::ZeroExpansions);
        }
        Ok(())
    }
}

fn check_fuzziness(theta: f64) -> Result<(), QueryError> {
    if (0.0..1.0).contains(&theta) {
        Ok(())
    } else {
        Err(QueryError::InvalidFuzziness(theta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyTermSpec {
    pub term: String,
    pub fuzziness: f64,
    pub prefix_length: usize,
    pub max_expansions: usize,
    pub metric: Metric,
}

impl FuzzyTermSpec {
    pub fn new(
        term: impl Into<String>,
        fuzziness: f64,
        prefix_length: usize,
        max_expansions: usize,
        metric: Metric,
    ) -> Result<Self, QueryError> {
        let term = term.into();
        if term.is_empty() {
            return Err(QueryError::EmptyTerm);
        }
        check_fuzziness(fuzziness)?;
        let len = term.chars().count();
        if prefix_length > len {
            return Err(QueryError::PrefixTooLong {
                term,
                prefix: prefix_length,
                len,
            });
        }
        if max_expansions == 0 {
            return Err(QueryError::ZeroExpansions);
        }
        Ok(Self {
            term,
            fuzziness,
            prefix_length,
            max_expansions,
            metric,
        })
    }

    /// The first `prefix_length` characters of the term.
    pub fn prefix(&self) -> &str {
        match self.term.char_indices().nth(self.prefix_length) {
            Some((at, _)) => &self.term[..at],
            None => &self.term,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyMatch {
    pub matched_term: String,
    pub distance: usize,
    /// `1 - distance / max(|query term|, |matched term|)`.
    pub membership: f64,
    pub document_frequency: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedQuery {
    pub qid: String,
    pub specs: Vec<FuzzyTermSpec>,
}

/// Analyze `raw` with the index's analyzer and attach the default fuzzy
/// parameters to every term. A prefix length longer than a term is clamped
/// to the term's length.
pub fn parse_query(
    qid: &str,
    raw: &str,
    defaults: &QueryDefaults,
    index: &InvertedIndex,
) -> Result<ParsedQuery, QueryError> {
    defaults.validate()?;
    let terms = analyze(raw, index.analyzer());
    if terms.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    let specs = terms
        .into_iter()
        .map(|t| {
            let p = defaults.prefix_length.min(t.text.chars().count());
            FuzzyTermSpec::new(t.text, defaults.fuzziness, p, defaults.max_expansions, defaults.metric)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParsedQuery {
        qid: qid.to_owned(),
        specs,
    })
}

/// Largest edit distance a match may have.
///
/// `floor((1 - θ) * n)` for a term of `n` characters, capped at `n - 1`, and
/// 0 whenever `θ >= 1 - 1/n`.
pub fn max_edit_distance(spec: &FuzzyTermSpec) -> usize {
    edit_budget(spec.term.chars().count(), spec.fuzziness)
}

pub fn edit_budget(term_len: usize, fuzziness: f64) -> usize {
    if term_len == 0 {
        return 0;
    }
    let n = term_len as f64;
    if fuzziness >= 1.0 - 1.0 / n {
        return 0;
    }
    let k = ((1.0 - fuzziness) * n + FLOOR_EPSILON).floor() as usize;
    k.min(term_len - 1)
}

/// Every dictionary term within the term's edit budget that shares the
/// required prefix, best membership first (ties by term), at most
/// `max_expansions` of them.
pub fn expand_term(index: &InvertedIndex, spec: &FuzzyTermSpec) -> Vec<FuzzyMatch> {
    let mut matches = expand_untruncated(index, spec);
    matches.truncate(spec.max_expansions);
    matches
}

/// [`expand_term`] without the `max_expansions` cut.
pub fn expand_untruncated(index: &InvertedIndex, spec: &FuzzyTermSpec) -> Vec<FuzzyMatch> {
    let k = max_edit_distance(spec);
    let query: Vec<char> = spec.term.chars().collect();
    let query_len = query.len();
    let candidates = index.prefix_range(spec.prefix());
    let mut dp = BoundedDistance::from_chars(query, k, spec.metric);
    let mut out = Vec::new();

    let mut target = String::new();
    let mut i = 0;
    while i < candidates.len() {
        let entry = &candidates[i];
        let term = entry.term();
        let common = dp
            .input()
            .iter()
            .zip(term.chars())
            .take_while(|(a, b)| **a == *b)
            .count();
        dp.truncate(common);

        let mut skip: Option<Skip> = None;
        let mut term_len = common;
        for (at, c) in term.char_indices().skip(common) {
            term_len += 1;
            match dp.next_viable(c) {
                Some(v) if v == c => {}
                Some(v) => {
                    skip = Some(Skip::Until(at, v));
                    break;
                }
                None => {
                    skip = Some(Skip::Stem(at));
                    break;
                }
            }
            if !dp.push(c) {
                skip = Some(Skip::Stem(at + c.len_utf8()));
                break;
            }
        }
        let rest = &candidates[i + 1..];
        match skip {
            // No extension of this stem can come back within the bound.
            Some(Skip::Stem(end)) => {
                let stem = &term.as_bytes()[..end];
                i += 1 + leading_run(rest, |e| has_prefix(e.term().as_bytes(), stem));
            }
            // Every sibling before `stem + v` is as hopeless as this one.
            Some(Skip::Until(at, v)) => {
                target.clear();
                target.push_str(&term[..at]);
                target.push(v);
                i += 1 + leading_run(rest, |e| bytes_lt(e.term().as_bytes(), target.as_bytes()));
            }
            None => {
                if let Some(d) = dp.distance() {
                    out.push(FuzzyMatch {
                        matched_term: term.to_owned(),
                        distance: d,
                        membership: membership(d, query_len.max(term_len)),
                        document_frequency: entry.df(),
                    });
                }
                i += 1;
            }
        }
    }

    out.sort_by(|a, b| {
        b.membership
            .total_cmp(&a.membership)
            .then_with(|| a.matched_term.cmp(&b.matched_term))
    });
    out
}

// Dictionary terms are short, where a plain loop beats a call into memcmp.
fn has_prefix(s: &[u8], prefix: &[u8]) -> bool {
    s.len() >= prefix.len() && s.iter().zip(prefix).all(|(a, b)| a == b)
}

fn bytes_lt(a: &[u8], b: &[u8]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    a.len() < b.len()
}

enum Skip {
    /// Skip every term starting with the first `n` bytes of the current one.
    Stem(usize),
    /// Skip up to the first term not below `current[..at] + char`.
    Until(usize, char),
}

// Length of the leading run of `entries` satisfying `pred`, which must hold
// for a prefix of the slice. Runs are usually short, so gallop from the front
// instead of bisecting the whole remaining range.
fn leading_run(entries: &[TermEntry], pred: impl Fn(&TermEntry) -> bool) -> usize {
    let mut hi = 1;
    while hi <= entries.len() && pred(&entries[hi - 1]) {
        hi *= 2;
    }
    let lo = hi / 2;
    lo + entries[lo..hi.min(entries.len())].partition_point(pred)
}
