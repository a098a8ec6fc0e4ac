//! Single-file index persistence.
//!
//! Layout (all integers little-endian, strings are `u32` byte length + UTF-8):
//!
//! ```text
//! header      magic "FZIRIDX\0" | version u32 | file_len u64 | config_hash u32
//! config      lowercase u8 | min_len u32 | max_len u32 | n_stop u32 | stopwords...
//!             | tf_scheme u8 | idf_floor f64
//! dictionary  n_terms u32 | per term: term str | df u32
//! postings    n_postings u64 | per posting: doc_ordinal u32 | tf u32   (term order)
//! doc table   n_docs u32 | per doc: docid str | source str | token_count u32 | norm f64
//! trailer     crc32 of every preceding byte, u32
//! ```
//!
//! `config_hash` is the crc32 of the config block. `file_len` counts the
//! whole file including the trailer.

use std::path::Path;

use super::{DocEntry, IndexError, InvertedIndex, Posting, TermEntry};
use crate::scoring::{TfScheme, WeightingConfig};
use crate::text_analysis::AnalyzerConfig;

pub const MAGIC: &[u8; 8] = b"FZIRIDX\0";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 8 + 4;
const TRAILER_LEN: usize = 4;

fn put_u8(buf: &mut Vec<u8>, v: u8) {
    buf.push(v);
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_bits().to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

fn encode_config(analyzer: &AnalyzerConfig, weighting: &WeightingConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    put_u8(&mut buf, u8::from(analyzer.lowercase()));
    put_u32(&mut buf, analyzer.min_token_length() as u32);
    put_u32(&mut buf, analyzer.max_token_length() as u32);
    put_u32(&mut buf, analyzer.stopwords().len() as u32);
    for w in analyzer.stopwords() {
        put_str(&mut buf, w);
    }
    put_u8(
        &mut buf,
        match weighting.tf_scheme {
            TfScheme::Raw => 0,
            TfScheme::Log => 1,
        },
    );
    put_f64(&mut buf, weighting.idf_floor);
    buf
}

/// Serialize an index to bytes. Deterministic: equal indexes give equal bytes.
pub fn to_bytes(index: &InvertedIndex) -> Vec<u8> {
    let config = encode_config(&index.analyzer, &index.weighting);
    let mut buf = Vec::with_capacity(1 << 16);
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, FORMAT_VERSION);
    put_u64(&mut buf, 0); // file_len, patched below
    put_u32(&mut buf, crc32fast::hash(&config));
    buf.extend_from_slice(&config);

    put_u32(&mut buf, index.dictionary.len() as u32);
    for entry in &index.dictionary {
        put_str(&mut buf, &entry.term);
        put_u32(&mut buf, entry.postings.len() as u32);
    }
    let total: usize = index.dictionary.iter().map(|e| e.postings.len()).sum();
    put_u64(&mut buf, total as u64);
    for entry in &index.dictionary {
        for p in &entry.postings {
            put_u32(&mut buf, p.doc_ordinal);
            put_u32(&mut buf, p.term_frequency);
        }
    }
    put_u32(&mut buf, index.docs.len() as u32);
    for doc in &index.docs {
        put_str(&mut buf, &doc.docid);
        put_str(&mut buf, &doc.source);
        put_u32(&mut buf, doc.token_count);
        put_f64(&mut buf, doc.vector_norm);
    }

    let file_len = (buf.len() + TRAILER_LEN) as u64;
    buf[12..20].copy_from_slice(&file_len.to_le_bytes());
    let crc = crc32fast::hash(&buf);
    put_u32(&mut buf, crc);
    buf
}

pub fn save(index: &InvertedIndex, path: &Path) -> Result<(), IndexError> {
    std::fs::write(path, to_bytes(index)).map_err(|source| IndexError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<InvertedIndex, IndexError> {
    let bytes = std::fs::read(path).map_err(|source| IndexError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.buf.len() - self.pos < n {
            return Err(IndexError::Corrupt(format!(
                "block overruns payload at offset {}",
                self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, IndexError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| IndexError::Corrupt(format!("invalid UTF-8 string at offset {}", self.pos - len)))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<InvertedIndex, IndexError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(IndexError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IndexError::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let file_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if file_len != bytes.len() as u64 {
        return Err(IndexError::Truncated {
            expected: file_len,
            found: bytes.len() as u64,
        });
    }
    if bytes.len() < HEADER_LEN + TRAILER_LEN {
        return Err(IndexError::Corrupt("file too short for header and trailer".into()));
    }
    let (payload, trailer) = bytes.split_at(bytes.len() - TRAILER_LEN);
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(IndexError::ChecksumMismatch { stored, computed });
    }

    let stored_hash = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
    let mut r = Reader { buf: payload, pos: HEADER_LEN };

    let config_start = r.pos;
    let lowercase = match r.u8()? {
        0 => false,
        1 => true,
        v => return Err(IndexError::Corrupt(format!("bad lowercase flag {v}"))),
    };
    let min_len = r.u32()? as usize;
    let max_len = r.u32()? as usize;
    let n_stop = r.u32()? as usize;
    let mut stopwords = Vec::with_capacity(n_stop.min(1 << 16));
    for _ in 0..n_stop {
        stopwords.push(r.string()?);
    }
    let tf_scheme = match r.u8()? {
        0 => TfScheme::Raw,
        1 => TfScheme::Log,
        v => return Err(IndexError::Corrupt(format!("bad tf scheme {v}"))),
    };
    let idf_floor = r.f64()?;
    let computed_hash = crc32fast::hash(&payload[config_start..r.pos]);
    if computed_hash != stored_hash {
        return Err(IndexError::ConfigHashMismatch {
            stored: stored_hash,
            computed: computed_hash,
        });
    }
    let analyzer = AnalyzerConfig::new(lowercase, &stopwords, min_len, max_len)
        .map_err(|e| IndexError::Corrupt(e.to_string()))?;
    if analyzer.stopwords().len() != stopwords.len() {
        return Err(IndexError::Corrupt("stopwords not stored in normalized form".into()));
    }
    let weighting = WeightingConfig { tf_scheme, idf_floor };

    let n_terms = r.u32()? as usize;
    let mut heads = Vec::with_capacity(n_terms.min(1 << 20));
    for _ in 0..n_terms {
        let term = r.string()?;
        let df = r.u32()? as usize;
        heads.push((term, df));
    }
    let total = r.u64()?;
    let expected: u64 = heads.iter().map(|(_, df)| *df as u64).sum();
    if total != expected {
        return Err(IndexError::Corrupt(format!(
            "postings block holds {total} entries but dictionary sums to {expected}"
        )));
    }
    let mut dictionary = Vec::with_capacity(heads.len());
    for (term, df) in heads {
        let mut postings = Vec::with_capacity(df);
        for _ in 0..df {
            postings.push(Posting {
                doc_ordinal: r.u32()?,
                term_frequency: r.u32()?,
            });
        }
        dictionary.push(TermEntry { term, postings });
    }
    let n_docs = r.u32()? as usize;
    let mut docs = Vec::with_capacity(n_docs.min(1 << 20));
    for _ in 0..n_docs {
        docs.push(DocEntry {
            docid: r.string()?,
            source: r.string()?,
            token_count: r.u32()?,
            vector_norm: r.f64()?,
        });
    }
    if r.pos != payload.len() {
        return Err(IndexError::Corrupt(format!(
            "{} trailing bytes after doc table",
            payload.len() - r.pos
        )));
    }

    let index = InvertedIndex {
        dictionary,
        docs,
        analyzer,
        weighting,
    };
    index.validate()?;
    Ok(index)
}
