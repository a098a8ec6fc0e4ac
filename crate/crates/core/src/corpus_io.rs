//! Corpus, query, qrels and run-file I/O.
//!
//! Supported inputs:
//! * MEDLINE-tagged files as distributed with Ohsumed: records start at
//!   `.I <seq>`, field tags (`.U` docid, `.T` title, `.W` abstract, and the
//!   skipped `.S .M .P .A`) sit alone on a line and their value follows on
//!   the next line(s).
//! * Directories of `.txt` files, one document per file.
//! * Query files with one `qid text...` per line.
//! * TREC qrels in 3- or 4-column form and TREC run files.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::index::DocumentRecord;
use crate::scoring::{RankedList, ScoredHit};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid UTF-8 at line {line}")]
    Encoding { path: String, line: usize },
    #[error("{path}: invalid UTF-8 in file")]
    FileEncoding { path: String },
    #[error("{path}:{line}: malformed tag line: {text}")]
    MalformedTag { path: String, line: usize, text: String },
    #[error("{path}: record .I {seq} has no .U docid")]
    MissingDocid { path: String, seq: u64 },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("{path}:{line}: duplicate {what} '{key}'")]
    Duplicate {
        path: String,
        line: usize,
        what: &'static str,
        key: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Lines of a UTF-8 file with 1-based numbers; invalid UTF-8 is an error.
struct Lines<R> {
    reader: R,
    path: String,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R, path: String) -> Self {
        Self {
            reader,
            path,
            line: 0,
            buf: Vec::new(),
        }
    }

    fn next_line(&mut self) -> Option<Result<(usize, String), CorpusError>> {
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line += 1;
                while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
                    self.buf.pop();
                }
                Some(match String::from_utf8(std::mem::take(&mut self.buf)) {
                    Ok(s) => Ok((self.line, s)),
                    Err(_) => Err(CorpusError::Encoding {
                        path: self.path.clone(),
                        line: self.line,
                    }),
                })
            }
            Err(source) => Some(Err(CorpusError::Io {
                path: self.path.clone(),
                source,
            })),
        }
    }
}

/// One Ohsumed/MEDLINE record with the fields we index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedlineRecord {
    pub seq: u64,
    pub docid: String,
    pub title: String,
    pub abstract_text: Option<String>,
}

impl MedlineRecord {
    /// Body is the title, followed by the abstract when present.
    pub fn into_document(self, path: &str) -> DocumentRecord {
        let source = format!("{path}#{}", self.seq);
        let body = match self.abstract_text {
            Some(abs) => format!("{} {}", self.title, abs),
            None => self.title,
        };
        DocumentRecord {
            docid: self.docid,
            source,
            body,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Docid,
    Title,
    Abstract,
    Skipped,
}

#[derive(Default)]
struct Partial {
    seq: u64,
    docid: Option<String>,
    title: Option<String>,
    abstract_text: Option<String>,
}

/// Streaming MEDLINE parser yielding one [`MedlineRecord`] per `.I` record.
pub struct MedlineReader<R> {
    lines: Lines<R>,
    current: Option<Partial>,
    field: Option<Field>,
    done: bool,
}

impl<R: BufRead> MedlineReader<R> {
    pub fn new(reader: R, path: impl Into<String>) -> Self {
        Self {
            lines: Lines::new(reader, path.into()),
            current: None,
            field: None,
            done: false,
        }
    }

    fn finish(&self, rec: Partial) -> Result<MedlineRecord, CorpusError> {
        let docid = rec.docid.filter(|d| !d.is_empty()).ok_or_else(|| CorpusError::MissingDocid {
            path: self.lines.path.clone(),
            seq: rec.seq,
        })?;
        Ok(MedlineRecord {
            seq: rec.seq,
            docid,
            title: rec.title.unwrap_or_default(),
            abstract_text: rec.abstract_text,
        })
    }

    fn malformed(&self, line: usize, text: &str) -> CorpusError {
        CorpusError::MalformedTag {
            path: self.lines.path.clone(),
            line,
            text: text.to_owned(),
        }
    }

    fn step(&mut self) -> Option<Result<MedlineRecord, CorpusError>> {
        loop {
            let (line_no, line) = match self.lines.next_line() {
                None => {
                    self.done = true;
                    return self.current.take().map(|rec| self.finish(rec));
                }
                Some(Err(e)) => return Some(Err(e)),
                Some(Ok(l)) => l,
            };
            match parse_tag(&line) {
                Some(('I', rest)) => {
                    let seq = match rest.trim().parse::<u64>() {
                        Ok(seq) => seq,
                        Err(_) => return Some(Err(self.malformed(line_no, &line))),
                    };
                    self.field = None;
                    let previous = self.current.replace(Partial {
                        seq,
                        ..Partial::default()
                    });
                    if let Some(rec) = previous {
                        return Some(self.finish(rec));
                    }
                }
                Some((tag, rest)) => {
                    if self.current.is_none() || !rest.trim().is_empty() {
                        return Some(Err(self.malformed(line_no, &line)));
                    }
                    self.field = Some(match tag {
                        'U' => Field::Docid,
                        'T' => Field::Title,
                        'W' => Field::Abstract,
                        'S' | 'M' | 'P' | 'A' => Field::Skipped,
                        _ => return Some(Err(self.malformed(line_no, &line))),
                    });
                }
                None => {
                    let Some(rec) = self.current.as_mut() else {
                        if line.trim().is_empty() {
                            continue;
                        }
                        return Some(Err(CorpusError::Format {
                            path: self.lines.path.clone(),
                            line: line_no,
                            message: "content before the first .I record".into(),
                        }));
                    };
                    let slot = match self.field {
                        Some(Field::Docid) => &mut rec.docid,
                        Some(Field::Title) => &mut rec.title,
                        Some(Field::Abstract) => &mut rec.abstract_text,
                        Some(Field::Skipped) => continue,
                        None if line.trim().is_empty() => continue,
                        None => {
                            return Some(Err(CorpusError::Format {
                                path: self.lines.path.clone(),
                                line: line_no,
                                message: "content outside any field".into(),
                            }))
                        }
                    };
                    let text = line.trim();
                    if text.is_empty() {
                        continue;
                    }
                    match slot {
                        Some(value) => {
                            value.push(' ');
                            value.push_str(text);
                        }
                        None => *slot = Some(text.to_owned()),
                    }
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for MedlineReader<R> {
    type Item = Result<MedlineRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.step();
        if matches!(item, Some(Err(_))) {
            self.done = true;
        }
        item
    }
}

/// A tag line is `.` + one ASCII uppercase letter, then end of line or a space.
fn parse_tag(line: &str) -> Option<(char, &str)> {
    let rest = line.strip_prefix('.')?;
    let mut chars = rest.chars();
    let tag = chars.next().filter(char::is_ascii_uppercase)?;
    let after = chars.as_str();
    if after.is_empty() || after.starts_with(' ') || after.starts_with('\t') {
        Some((tag, after))
    } else {
        None
    }
}

/// Serialize records in the layout [`MedlineReader`] accepts.
pub fn write_medline<W: Write>(out: &mut W, records: &[MedlineRecord]) -> std::io::Result<()> {
    for rec in records {
        writeln!(out, ".I {}", rec.seq)?;
        writeln!(out, ".U\n{}", rec.docid)?;
        writeln!(out, ".T\n{}", rec.title)?;
        if let Some(abs) = &rec.abstract_text {
            writeln!(out, ".W\n{abs}")?;
        }
    }
    Ok(())
}

pub fn read_medline_records(path: &Path) -> Result<MedlineReader<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(MedlineReader::new(BufReader::new(file), path.display().to_string()))
}

/// Documents from a MEDLINE file; body is title + " " + abstract.
pub fn read_corpus_medline(
    path: &Path,
) -> Result<impl Iterator<Item = Result<DocumentRecord, CorpusError>>, CorpusError> {
    let name = path.display().to_string();
    Ok(read_medline_records(path)?.map(move |r| r.map(|rec| rec.into_document(&name))))
}

/// Documents from the `.txt` files directly inside `dir`, in ascending file
/// name order. Subdirectories and other extensions are ignored.
pub fn read_corpus_textdir(
    dir: &Path,
) -> Result<impl Iterator<Item = Result<DocumentRecord, CorpusError>>, CorpusError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let is_file = entry.file_type().map_err(io_err(&path))?.is_file();
        if is_file && path.extension().is_some_and(|e| e == "txt") {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files.into_iter().map(|path| {
        let bytes = std::fs::read(&path).map_err(io_err(&path))?;
        let body = String::from_utf8(bytes).map_err(|_| CorpusError::FileEncoding {
            path: path.display().to_string(),
        })?;
        let docid = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(DocumentRecord {
            docid,
            source: path.display().to_string(),
            body,
        })
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRecord {
    pub qid: String,
    pub text: String,
}

/// Query file: one query per line, `qid` then whitespace then the query text.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_queries(path: &Path) -> Result<Vec<QueryRecord>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = Lines::new(BufReader::new(file), path.display().to_string());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while let Some(next) = lines.next_line() {
        let (line_no, line) = next?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (qid, text) = match trimmed.split_once(char::is_whitespace) {
            Some((q, t)) => (q, t.trim()),
            None => (trimmed, ""),
        };
        if text.is_empty() {
            return Err(CorpusError::Format {
                path: lines.path.clone(),
                line: line_no,
                message: format!("query '{qid}' has no text"),
            });
        }
        if !seen.insert(qid.to_owned()) {
            return Err(CorpusError::Duplicate {
                path: lines.path.clone(),
                line: line_no,
                what: "qid",
                key: qid.to_owned(),
            });
        }
        out.push(QueryRecord {
            qid: qid.to_owned(),
            text: text.to_owned(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrelRecord {
    pub qid: String,
    pub docid: String,
    pub relevance: i64,
}

pub fn read_qrels(path: &Path) -> Result<Vec<QrelRecord>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_qrels(BufReader::new(file), &path.display().to_string())
}

/// Accepts `qid iter docid rel` (iter ignored) and `qid docid rel`.
pub fn parse_qrels<R: BufRead>(reader: R, path: &str) -> Result<Vec<QrelRecord>, CorpusError> {
    let mut lines = Lines::new(reader, path.to_owned());
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut out = Vec::new();
    while let Some(next) = lines.next_line() {
        let (line_no, line) = next?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (qid, docid, rel) = match fields.as_slice() {
            [] => continue,
            [q, _iter, d, r] => (*q, *d, *r),
            [q, d, r] => (*q, *d, *r),
            other => {
                return Err(CorpusError::Format {
                    path: path.to_owned(),
                    line: line_no,
                    message: format!("expected 3 or 4 columns, found {}", other.len()),
                })
            }
        };
        let relevance: i64 = rel.parse().map_err(|_| CorpusError::Format {
            path: path.to_owned(),
            line: line_no,
            message: format!("relevance '{rel}' is not an integer"),
        })?;
        if relevance < 0 {
            return Err(CorpusError::Format {
                path: path.to_owned(),
                line: line_no,
                message: format!("negative relevance {relevance}"),
            });
        }
        if !seen.insert((qid.to_owned(), docid.to_owned())) {
            return Err(CorpusError::Duplicate {
                path: path.to_owned(),
                line: line_no,
                what: "judgment",
                key: format!("{qid} {docid}"),
            });
        }
        out.push(QrelRecord {
            qid: qid.to_owned(),
            docid: docid.to_owned(),
            relevance,
        });
    }
    Ok(out)
}

/// Relevant docids (grade > 0) per qid. Every judged qid gets an entry, even
/// if none of its documents is relevant.
pub fn relevant_sets(qrels: &[QrelRecord]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for q in qrels {
        let set = out.entry(q.qid.clone()).or_default();
        if q.relevance > 0 {
            set.insert(q.docid.clone());
        }
    }
    out
}

/// One line per hit: `qid Q0 docid rank score tag`, rank from 1, score with
/// six decimals.
pub fn format_run<W: Write>(out: &mut W, qid: &str, ranked: &RankedList, tag: &str) -> std::io::Result<()> {
    for (i, hit) in ranked.iter().enumerate() {
        writeln!(out, "{qid} Q0 {} {} {:.6} {tag}", hit.docid, i + 1, hit.score)?;
    }
    Ok(())
}

/// Append `ranked` to the run file at `path`.
pub fn write_run(path: &Path, qid: &str, ranked: &RankedList, tag: &str) -> Result<(), CorpusError> {
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    format_run(&mut out, qid, ranked, tag).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// A run file, grouped by qid, each list ordered by the rank column.
pub fn read_run(path: &Path) -> Result<BTreeMap<String, RankedList>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_run(BufReader::new(file), &path.display().to_string())
}

pub fn parse_run<R: BufRead>(reader: R, path: &str) -> Result<BTreeMap<String, RankedList>, CorpusError> {
    let mut lines = Lines::new(reader, path.to_owned());
    let mut grouped: BTreeMap<String, Vec<(u64, ScoredHit)>> = BTreeMap::new();
    while let Some(next) = lines.next_line() {
        let (line_no, line) = next?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let fmt = |message: String| CorpusError::Format {
            path: path.to_owned(),
            line: line_no,
            message,
        };
        let [qid, _q0, docid, rank, score, _tag] = fields.as_slice() else {
            return Err(fmt(format!("expected 6 columns, found {}", fields.len())));
        };
        let rank: u64 = rank.parse().map_err(|_| fmt(format!("bad rank '{rank}'")))?;
        let score: f64 = score.parse().map_err(|_| fmt(format!("bad score '{score}'")))?;
        grouped.entry((*qid).to_owned()).or_default().push((
            rank,
            ScoredHit {
                docid: (*docid).to_owned(),
                score,
            },
        ));
    }
    let mut out = BTreeMap::new();
    for (qid, mut hits) in grouped {
        hits.sort_by_key(|(rank, _)| *rank);
        let mut docs = HashSet::new();
        for (_, h) in &hits {
            if !docs.insert(h.docid.clone()) {
                return Err(CorpusError::Duplicate {
                    path: path.to_owned(),
                    line: 0,
                    what: "run entry",
                    key: format!("{qid} {}", h.docid),
                });
            }
        }
        // Six-decimal rounding may tie scores that were distinct; the rank
        // column is authoritative, so no re-sorting by score here.
        out.insert(qid, RankedList::from_rank_order(hits.into_iter().map(|(_, h)| h).collect()));
    }
    Ok(out)
}
