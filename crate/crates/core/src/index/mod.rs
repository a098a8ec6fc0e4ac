//! Inverted index with a sorted term dictionary.
//!
//! The dictionary is a vector of entries sorted by the UTF-8 bytes of the
//! normalized term, so exact lookup is a binary search and all terms sharing a
//! prefix form one contiguous run.

mod persist;

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::scoring::WeightingConfig;
use crate::text_analysis::{analyze, AnalyzerConfig};

pub use persist::{from_bytes, load, save, to_bytes, FORMAT_VERSION, MAGIC};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate docid '{0}'")]
    DuplicateDocid(String),
    #[error("empty docid for document from {0}")]
    EmptyDocid(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not an index file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported index format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("index checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("analyzer config hash mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ConfigHashMismatch { stored: u32, computed: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("index invariant violated: {0}")]
    Invariant(String),
}

/// A document to be indexed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub docid: String,
    /// File path or record locator the document came from.
    pub source: String,
    pub body: String,
}

impl DocumentRecord {
    pub fn new(docid: impl Into<String>, source: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            docid: docid.into(),
            source: source.into(),
            body: body.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc_ordinal: u32,
    pub term_frequency: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermEntry {
    term: String,
    postings: Vec<Posting>,
}

impl TermEntry {
    pub fn term(&self) -> &str {
        &self.term
    }

    pub fn df(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self) -> &[Posting] {
        &self.postings
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocEntry {
    pub docid: String,
    pub source: String,
    pub token_count: u32,
    pub vector_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    dictionary: Vec<TermEntry>,
    docs: Vec<DocEntry>,
    analyzer: AnalyzerConfig,
    weighting: WeightingConfig,
}

impl InvertedIndex {
    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn term_count(&self) -> usize {
        self.dictionary.len()
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    pub fn weighting(&self) -> WeightingConfig {
        self.weighting
    }

    pub fn dictionary(&self) -> &[TermEntry] {
        &self.dictionary
    }

    pub fn docs(&self) -> &[DocEntry] {
        &self.docs
    }

    pub fn doc(&self, ordinal: u32) -> &DocEntry {
        &self.docs[ordinal as usize]
    }

    /// Binary search for an already-normalized term.
    pub fn lookup_exact(&self, term: &str) -> Option<&TermEntry> {
        self.dictionary
            .binary_search_by(|e| e.term.as_bytes().cmp(term.as_bytes()))
            .ok()
            .map(|i| &self.dictionary[i])
    }

    /// The contiguous run of entries whose term starts with `prefix`, in
    /// ascending order. An empty prefix yields the whole dictionary.
    pub fn prefix_range(&self, prefix: &str) -> &[TermEntry] {
        let p = prefix.as_bytes();
        let start = self.dictionary.partition_point(|e| e.term.as_bytes() < p);
        let len = self.dictionary[start..].partition_point(|e| e.term.as_bytes().starts_with(p));
        &self.dictionary[start..start + len]
    }

    /// `(term, document_frequency)` for every term starting with `prefix`.
    pub fn enumerate_terms<'a>(&'a self, prefix: &str) -> impl Iterator<Item = (&'a str, usize)> + 'a {
        self.prefix_range(prefix).iter().map(|e| (e.term.as_str(), e.df()))
    }

    /// Checks every structural invariant, including recomputing the document norms.
    pub fn validate(&self) -> Result<(), IndexError> {
        let bad = |msg: String| Err(IndexError::Invariant(msg));
        for pair in self.dictionary.windows(2) {
            if pair[0].term.as_bytes() >= pair[1].term.as_bytes() {
                return bad(format!(
                    "dictionary not strictly ascending at '{}' / '{}'",
                    pair[0].term, pair[1].term
                ));
            }
        }
        let n = self.docs.len();
        let mut token_sums = vec![0u64; n];
        for entry in &self.dictionary {
            if entry.term.is_empty() || entry.postings.is_empty() {
                return bad(format!("empty term or postings for '{}'", entry.term));
            }
            let mut last: Option<u32> = None;
            for p in &entry.postings {
                if p.doc_ordinal as usize >= n {
                    return bad(format!("posting for '{}' references doc {}", entry.term, p.doc_ordinal));
                }
                if last.is_some_and(|l| l >= p.doc_ordinal) {
                    return bad(format!("postings for '{}' not strictly increasing", entry.term));
                }
                if p.term_frequency == 0 {
                    return bad(format!("zero term frequency in postings of '{}'", entry.term));
                }
                last = Some(p.doc_ordinal);
                token_sums[p.doc_ordinal as usize] += u64::from(p.term_frequency);
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for (doc, &sum) in self.docs.iter().zip(&token_sums) {
            if !seen.insert(doc.docid.as_str()) {
                return bad(format!("duplicate docid '{}'", doc.docid));
            }
            if u64::from(doc.token_count) != sum {
                return bad(format!(
                    "token count of '{}' is {} but postings sum to {}",
                    doc.docid, doc.token_count, sum
                ));
            }
        }
        let norms = compute_norms(&self.dictionary, n, self.weighting);
        for (doc, norm) in self.docs.iter().zip(norms) {
            if doc.vector_norm.to_bits() != norm.to_bits() {
                return bad(format!(
                    "vector norm of '{}' is {} but recomputes to {}",
                    doc.docid, doc.vector_norm, norm
                ));
            }
        }
        Ok(())
    }
}

/// Norms accumulated in dictionary order so that the result is bit-reproducible.
fn compute_norms(dictionary: &[TermEntry], n_docs: usize, weighting: WeightingConfig) -> Vec<f64> {
    let mut sq = vec![0.0f64; n_docs];
    for entry in dictionary {
        for p in &entry.postings {
            let w = weighting.term_weight(p.term_frequency, n_docs, entry.postings.len());
            sq[p.doc_ordinal as usize] += w * w;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// Accumulates documents; [`finish`](IndexBuilder::finish) sorts the dictionary
/// and computes the norms.
#[derive(Debug)]
pub struct IndexBuilder {
    analyzer: AnalyzerConfig,
    weighting: WeightingConfig,
    terms: BTreeMap<String, Vec<Posting>>,
    docs: Vec<DocEntry>,
    docids: HashSet<String>,
}

impl IndexBuilder {
    pub fn new(analyzer: AnalyzerConfig) -> Self {
        Self {
            analyzer,
            weighting: WeightingConfig::default(),
            terms: BTreeMap::new(),
            docs: Vec::new(),
            docids: HashSet::new(),
        }
    }

    pub fn weighting(mut self, weighting: WeightingConfig) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn add(&mut self, doc: DocumentRecord) -> Result<(), IndexError> {
        if doc.docid.is_empty() {
            return Err(IndexError::EmptyDocid(doc.source));
        }
        if !self.docids.insert(doc.docid.clone()) {
            return Err(IndexError::DuplicateDocid(doc.docid));
        }
        let ordinal = u32::try_from(self.docs.len())
            .map_err(|_| IndexError::Invariant("more than u32::MAX documents".into()))?;
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        let mut token_count = 0u32;
        for term in analyze(&doc.body, &self.analyzer) {
            *counts.entry(term.text).or_insert(0) += 1;
            token_count += 1;
        }
        for (term, tf) in counts {
            self.terms.entry(term).or_default().push(Posting {
                doc_ordinal: ordinal,
                term_frequency: tf,
            });
        }
        self.docs.push(DocEntry {
            docid: doc.docid,
            source: doc.source,
            token_count,
            vector_norm: 0.0,
        });
        Ok(())
    }

    pub fn finish(self) -> InvertedIndex {
        // BTreeMap<String, _> iterates in byte order of the keys.
        let dictionary: Vec<TermEntry> = self
            .terms
            .into_iter()
            .map(|(term, postings)| TermEntry { term, postings })
            .collect();
        let norms = compute_norms(&dictionary, self.docs.len(), self.weighting);
        let mut docs = self.docs;
        for (doc, norm) in docs.iter_mut().zip(norms) {
            doc.vector_norm = norm;
        }
        InvertedIndex {
            dictionary,
            docs,
            analyzer: self.analyzer,
            weighting: self.weighting,
        }
    }
}

/// Index a corpus with the default weighting. Doc ordinals follow iteration order.
pub fn build_index<I>(corpus: I, analyzer: AnalyzerConfig) -> Result<InvertedIndex, IndexError>
where
    I: IntoIterator<Item = DocumentRecord>,
{
    let mut builder = IndexBuilder::new(analyzer);
    for doc in corpus {
        builder.add(doc)?;
    }
    Ok(builder.finish())
}
