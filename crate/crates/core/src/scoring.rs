//! Document ranking: fuzzy similarity scoring and a TF-IDF cosine baseline.
//!
//! Both scorers share the index's term weights `w(t, d) = tf_weight(tf) * idf(t)`
//! and divide by the same precomputed document norm `|d|`.
//!
//! * Cosine: `Σ_t q(t) w(t, d) / (|q| |d|)` over exact query terms, where
//!   `q(t) = tf_weight(query tf) * idf(t)`.
//! * Fuzzy: each query term is expanded to matches `(t', μ)`; every match adds
//!   `μ * tf_weight(query tf) * idf(t') * w(t', d)` to `d`, and the sum is divided
//!   by `|d|`. Matches of one query term are summed, not maxed.
//!
//! With exact-only expansion (`μ = 1`, single match per term) the fuzzy score is
//! the cosine score times the constant `|q|`, so both produce the same order.

use std::collections::{BTreeMap, HashMap};

use crate::fuzzy_query::{expand_term, ParsedQuery};
use crate::index::InvertedIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TfScheme {
    Raw,
    #[default]
    Log,
}

/// Term weighting, fixed when the index is built.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightingConfig {
    pub tf_scheme: TfScheme,
    /// Lower bound applied to every idf value. `ln(1 + N/df)` is already
    /// positive, so the default of 0 never binds.
    pub idf_floor: f64,
}

impl WeightingConfig {
    pub fn term_weight(&self, tf: u32, n_docs: usize, df: usize) -> f64 {
        tf_weight(tf as f64, self.tf_scheme) * idf(n_docs, df).max(self.idf_floor)
    }

    pub fn idf(&self, n_docs: usize, df: usize) -> f64 {
        idf(n_docs, df).max(self.idf_floor)
    }
}

/// `ln(1 + N/df)`.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    debug_assert!(df >= 1 && n_docs >= df);
    (1.0 + n_docs as f64 / df as f64).ln()
}

/// Raw: `tf`; log: `1 + ln(tf)`. Takes a real so tests can probe non-integer values.
pub fn tf_weight(tf: f64, scheme: TfScheme) -> f64 {
    match scheme {
        TfScheme::Raw => tf,
        TfScheme::Log => 1.0 + tf.ln(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredHit {
    pub docid: String,
    pub score: f64,
}

/// Hits in descending score order, ties broken by ascending docid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList(Vec<ScoredHit>);

impl RankedList {
    /// Wraps hits that are already ordered; panics in debug builds otherwise.
    pub fn from_sorted(hits: Vec<ScoredHit>) -> Self {
        debug_assert!(is_ranked(&hits));
        Self(hits)
    }

    /// Wraps hits whose order is given externally (e.g. a run file's rank column).
    pub fn from_rank_order(hits: Vec<ScoredHit>) -> Self {
        Self(hits)
    }

    pub fn hits(&self) -> &[ScoredHit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoredHit> {
        self.0.iter()
    }

    pub fn docids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|h| h.docid.as_str())
    }

    /// The first `n` hits.
    pub fn truncated(&self, n: usize) -> RankedList {
        RankedList(self.0.iter().take(n).cloned().collect())
    }

    pub fn into_hits(self) -> Vec<ScoredHit> {
        self.0
    }
}

impl<'a> IntoIterator for &'a RankedList {
    type Item = &'a ScoredHit;
    type IntoIter = std::slice::Iter<'a, ScoredHit>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn hit_order(a: &ScoredHit, b: &ScoredHit) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.docid.cmp(&b.docid))
}

pub fn is_ranked(hits: &[ScoredHit]) -> bool {
    hits.windows(2).all(|w| hit_order(&w[0], &w[1]).is_le())
}

/// Sort by score descending then docid ascending, keep the first `top_k`.
pub fn rank(mut hits: Vec<ScoredHit>, top_k: usize) -> RankedList {
    debug_assert!(top_k >= 1);
    hits.sort_by(hit_order);
    hits.truncate(top_k);
    RankedList(hits)
}

/// Distinct query terms with their in-query frequencies, first-occurrence order.
fn query_term_counts(query: &ParsedQuery) -> Vec<(usize, u32)> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<(usize, u32)> = Vec::new();
    for (i, spec) in query.specs.iter().enumerate() {
        match seen.get(spec.term.as_str()) {
            Some(&slot) => out[slot].1 += 1,
            None => {
                seen.insert(&spec.term, out.len());
                out.push((i, 1));
            }
        }
    }
    out
}

fn finish(index: &InvertedIndex, acc: BTreeMap<u32, f64>, divisor: f64, top_k: usize) -> RankedList {
    let hits = acc
        .into_iter()
        .filter_map(|(ordinal, dot)| {
            let doc = index.doc(ordinal);
            let score = dot / (divisor * doc.vector_norm);
            (score > 0.0 && score.is_finite()).then(|| ScoredHit {
                docid: doc.docid.clone(),
                score,
            })
        })
        .collect();
    rank(hits, top_k.max(1))
}

/// Vector-space cosine ranking over the exact query terms (no expansion).
pub fn cosine_score(query: &ParsedQuery, index: &InvertedIndex, top_k: usize) -> RankedList {
    let weighting = index.weighting();
    let n = index.doc_count();
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    let mut query_norm_sq = 0.0;
    for (spec_idx, qtf) in query_term_counts(query) {
        let term = &query.specs[spec_idx].term;
        let Some(entry) = index.lookup_exact(term) else {
            continue;
        };
        let idf = weighting.idf(n, entry.df());
        let q = tf_weight(qtf as f64, weighting.tf_scheme) * idf;
        query_norm_sq += q * q;
        for posting in entry.postings() {
            let w = tf_weight(posting.term_frequency as f64, weighting.tf_scheme) * idf;
            *acc.entry(posting.doc_ordinal).or_insert(0.0) += q * w;
        }
    }
    if acc.is_empty() {
        return RankedList::default();
    }
    finish(index, acc, query_norm_sq.sqrt(), top_k)
}

/// Fuzzy similarity ranking over edit-distance expansions of each query term.
pub fn fuzzy_score(query: &ParsedQuery, index: &InvertedIndex, top_k: usize) -> RankedList {
    let weighting = index.weighting();
    let n = index.doc_count();
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for (spec_idx, qtf) in query_term_counts(query) {
        let spec = &query.specs[spec_idx];
        let query_tf = tf_weight(qtf as f64, weighting.tf_scheme);
        for m in expand_term(index, spec) {
            let entry = index
                .lookup_exact(&m.matched_term)
                .expect("expansion yields dictionary terms");
            let idf = weighting.idf(n, entry.df());
            let q = m.membership * query_tf * idf;
            for posting in entry.postings() {
                let w = tf_weight(posting.term_frequency as f64, weighting.tf_scheme) * idf;
                *acc.entry(posting.doc_ordinal).or_insert(0.0) += q * w;
            }
        }
    }
    if acc.is_empty() {
        return RankedList::default();
    }
    finish(index, acc, 1.0, top_k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Fuzzy,
    Cosine,
}

impl Scorer {
    pub fn score(self, query: &ParsedQuery, index: &InvertedIndex, top_k: usize) -> RankedList {
        match self {
            Scorer::Fuzzy => fuzzy_score(query, index, top_k),
            Scorer::Cosine => cosine_score(query, index, top_k),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scorer::Fuzzy => "fuzzy",
            Scorer::Cosine => "cosine",
        }
    }
}

impl std::str::FromStr for Scorer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fuzzy" => Ok(Scorer::Fuzzy),
            "cosine" => Ok(Scorer::Cosine),
            other => Err(format!("unknown scorer '{other}' (expected fuzzy or cosine)")),
        }
    }
}
