//! Precision, recall, 11-point interpolated curves and average precision,
//! plus the side-by-side comparison of two runs.
//!
//! Relevance is binary: a qrels grade above zero is relevant. Aggregates are
//! macro averages over the queries that have at least one relevant document;
//! queries without any are reported separately and excluded.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use thiserror::Error;

use crate::scoring::RankedList;

/// Recall levels 0.0, 0.1, ..., 1.0.
pub const RECALL_LEVELS: usize = 11;

pub type Curve = [f64; RECALL_LEVELS];

/// Ranked results per qid.
pub type Run = BTreeMap<String, RankedList>;

/// Relevant docids per qid.
pub type Judgments = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("query has no relevant documents")]
    NoRelevant,
    #[error("runs cover different queries: only in A {only_a:?}, only in B {only_b:?}")]
    QidMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV parse error: {0}")]
    CsvFormat(String),
}

pub fn level(i: usize) -> f64 {
    i as f64 / 10.0
}

fn relevant_retrieved(ranked: &RankedList, relevant: &BTreeSet<String>) -> usize {
    ranked.docids().filter(|d| relevant.contains(*d)).count()
}

/// `|Ra| / |A|`, and 0 for an empty retrieval.
pub fn precision(ranked: &RankedList, relevant: &BTreeSet<String>) -> f64 {
    if ranked.is_empty() {
        return 0.0;
    }
    relevant_retrieved(ranked, relevant) as f64 / ranked.len() as f64
}

/// `|Ra| / |R|`.
pub fn recall(ranked: &RankedList, relevant: &BTreeSet<String>) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    Ok(relevant_retrieved(ranked, relevant) as f64 / relevant.len() as f64)
}

/// Interpolated precision at each recall level: the best precision at any
/// rank whose recall reaches the level, or 0 when no rank does.
pub fn eleven_point_curve(ranked: &RankedList, relevant: &BTreeSet<String>) -> Result<Curve, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    let total = relevant.len();
    // (hits, precision) at each rank holding a relevant document; precision
    // can only peak at such ranks.
    let mut points: Vec<(usize, f64)> = Vec::new();
    let mut hits = 0usize;
    for (i, docid) in ranked.docids().enumerate() {
        if relevant.contains(docid) {
            hits += 1;
            points.push((hits, hits as f64 / (i + 1) as f64));
        }
    }
    let mut curve = [0.0; RECALL_LEVELS];
    // Walk levels from the top down, extending a suffix maximum over points.
    let mut best = 0.0f64;
    let mut next = points.len();
    for l in (0..RECALL_LEVELS).rev() {
        // recall >= l/10  <=>  10 * hits >= l * total
        while next > 0 && 10 * points[next - 1].0 >= l * total {
            next -= 1;
            best = best.max(points[next].1);
        }
        curve[l] = best;
    }
    Ok(curve)
}

/// Uninterpolated average precision: the sum of precision at each relevant
/// retrieved rank, divided by `|R|`.
pub fn average_precision(ranked: &RankedList, relevant: &BTreeSet<String>) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, docid) in ranked.docids().enumerate() {
        if relevant.contains(docid) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub qid: String,
    pub retrieved: usize,
    pub relevant_retrieved: usize,
    pub total_relevant: usize,
    pub precision: f64,
    pub recall: f64,
    pub curve: Curve,
    pub average_precision: f64,
}

impl EvalResult {
    pub fn compute(qid: &str, ranked: &RankedList, relevant: &BTreeSet<String>) -> Result<Self, EvalError> {
        Ok(Self {
            qid: qid.to_owned(),
            retrieved: ranked.len(),
            relevant_retrieved: relevant_retrieved(ranked, relevant),
            total_relevant: relevant.len(),
            precision: precision(ranked, relevant),
            recall: recall(ranked, relevant)?,
            curve: eleven_point_curve(ranked, relevant)?,
            average_precision: average_precision(ranked, relevant)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroAverages {
    pub precision: f64,
    pub recall: f64,
    pub average_precision: f64,
    pub curve: Curve,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn mean_curve<'a>(curves: impl Iterator<Item = &'a Curve> + Clone) -> Curve {
    let mut out = [0.0; RECALL_LEVELS];
    for (l, slot) in out.iter_mut().enumerate() {
        *slot = mean(curves.clone().map(|c| c[l]));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub per_query: Vec<EvalResult>,
    /// Qids without any relevant document.
    pub skipped: Vec<String>,
    pub macro_avg: MacroAverages,
}

/// Evaluate every judged or retrieved query. A judged query missing from the
/// run counts as an empty retrieval.
pub fn evaluate_run(run: &Run, judgments: &Judgments) -> EvalSummary {
    let empty_list = RankedList::default();
    let empty_set = BTreeSet::new();
    let qids: BTreeSet<&String> = run.keys().chain(judgments.keys()).collect();
    let mut per_query = Vec::new();
    let mut skipped = Vec::new();
    for qid in qids {
        let ranked = run.get(qid).unwrap_or(&empty_list);
        let relevant = judgments.get(qid).unwrap_or(&empty_set);
        match EvalResult::compute(qid, ranked, relevant) {
            Ok(r) => per_query.push(r),
            Err(_) => skipped.push(qid.clone()),
        }
    }
    let macro_avg = MacroAverages {
        precision: mean(per_query.iter().map(|r| r.precision)),
        recall: mean(per_query.iter().map(|r| r.recall)),
        average_precision: mean(per_query.iter().map(|r| r.average_precision)),
        curve: mean_curve(per_query.iter().map(|r| &r.curve)),
    };
    EvalSummary {
        per_query,
        skipped,
        macro_avg,
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

const CURVE_HEADERS: [&str; RECALL_LEVELS] = [
    "ip_0.0", "ip_0.1", "ip_0.2", "ip_0.3", "ip_0.4", "ip_0.5", "ip_0.6", "ip_0.7", "ip_0.8", "ip_0.9",
    "ip_1.0",
];

impl EvalSummary {
    /// One row per evaluated query plus a final `MACRO` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "qid",
            "retrieved",
            "relevant_retrieved",
            "total_relevant",
            "precision",
            "recall",
            "average_precision",
        ];
        header.extend(CURVE_HEADERS);
        w.write_record(&header)?;
        for r in &self.per_query {
            let mut row = vec![
                r.qid.clone(),
                r.retrieved.to_string(),
                r.relevant_retrieved.to_string(),
                r.total_relevant.to_string(),
                fmt6(r.precision),
                fmt6(r.recall),
                fmt6(r.average_precision),
            ];
            row.extend(r.curve.iter().map(|v| fmt6(*v)));
            w.write_record(&row)?;
        }
        let m = &self.macro_avg;
        let mut row = vec![
            "MACRO".to_owned(),
            String::new(),
            String::new(),
            String::new(),
            fmt6(m.precision),
            fmt6(m.recall),
            fmt6(m.average_precision),
        ];
        row.extend(m.curve.iter().map(|v| fmt6(*v)));
        w.write_record(&row)?;
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Cutoff metrics of one run on one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Precision of the top `cutoff` hits.
    pub precision: f64,
    /// Recall of the top `cutoff` hits.
    pub recall: f64,
    /// Average precision over the whole list.
    pub average_precision: f64,
}

impl RunMetrics {
    fn compute(ranked: &RankedList, relevant: &BTreeSet<String>, cutoff: usize) -> Result<Self, EvalError> {
        let top = ranked.truncated(cutoff);
        Ok(Self {
            precision: precision(&top, relevant),
            recall: recall(&top, relevant)?,
            average_precision: average_precision(ranked, relevant)?,
        })
    }

    pub fn delta(&self, base: &RunMetrics) -> RunMetrics {
        RunMetrics {
            precision: self.precision - base.precision,
            recall: self.recall - base.recall,
            average_precision: self.average_precision - base.average_precision,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryComparison {
    pub qid: String,
    pub a: RunMetrics,
    pub b: RunMetrics,
}

impl QueryComparison {
    /// A minus B.
    pub fn delta(&self) -> RunMetrics {
        self.a.delta(&self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub cutoff: usize,
    pub rows: Vec<QueryComparison>,
    pub skipped: Vec<String>,
    pub macro_a: RunMetrics,
    pub macro_b: RunMetrics,
    /// Mean 11-point curve of each run over the evaluated queries.
    pub curve_a: Curve,
    pub curve_b: Curve,
}

/// Compare two runs query by query at `cutoff`. Both runs must contain the
/// same qids (an empty result list still counts as present).
pub fn compare_runs(run_a: &Run, run_b: &Run, judgments: &Judgments, cutoff: usize) -> Result<Comparison, EvalError> {
    if cutoff == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let only_a: Vec<String> = run_a.keys().filter(|q| !run_b.contains_key(*q)).cloned().collect();
    let only_b: Vec<String> = run_b.keys().filter(|q| !run_a.contains_key(*q)).cloned().collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(EvalError::QidMismatch { only_a, only_b });
    }
    let empty = BTreeSet::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut curves_a = Vec::new();
    let mut curves_b = Vec::new();
    for (qid, ranked_a) in run_a {
        let ranked_b = &run_b[qid];
        let relevant = judgments.get(qid).unwrap_or(&empty);
        if relevant.is_empty() {
            skipped.push(qid.clone());
            continue;
        }
        rows.push(QueryComparison {
            qid: qid.clone(),
            a: RunMetrics::compute(ranked_a, relevant, cutoff)?,
            b: RunMetrics::compute(ranked_b, relevant, cutoff)?,
        });
        curves_a.push(eleven_point_curve(ranked_a, relevant)?);
        curves_b.push(eleven_point_curve(ranked_b, relevant)?);
    }
    let macro_of = |pick: fn(&QueryComparison) -> &RunMetrics| RunMetrics {
        precision: mean(rows.iter().map(|r| pick(r).precision)),
        recall: mean(rows.iter().map(|r| pick(r).recall)),
        average_precision: mean(rows.iter().map(|r| pick(r).average_precision)),
    };
    Ok(Comparison {
        cutoff,
        macro_a: macro_of(|r| &r.a),
        macro_b: macro_of(|r| &r.b),
        rows,
        skipped,
        curve_a: mean_curve(curves_a.iter()),
        curve_b: mean_curve(curves_b.iter()),
    })
}

const COMPARE_HEADER: [&str; 11] = [
    "section",
    "key",
    "a_precision",
    "a_recall",
    "a_ap",
    "b_precision",
    "b_recall",
    "b_ap",
    "delta_precision",
    "delta_recall",
    "delta_ap",
];

fn metrics_cells(a: &RunMetrics, b: &RunMetrics) -> Vec<String> {
    let d = a.delta(b);
    [a, b, &d]
        .iter()
        .flat_map(|m| [fmt6(m.precision), fmt6(m.recall), fmt6(m.average_precision)])
        .collect()
}

impl Comparison {
    /// CSV layout, all rows under one 11-column header:
    ///
    /// * `cutoff,<n>` then empty cells;
    /// * `query,<qid>` with precision/recall at the cutoff and AP for A, B and A - B;
    /// * `macro,mean` with the same columns averaged over queries;
    /// * `skipped,<qid>` for queries without relevant documents;
    /// * `curve_a,<level>` / `curve_b,<level>`: the run's mean interpolated
    ///   precision at that recall level in its `*_precision` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COMPARE_HEADER)?;
        let blank = |n: usize| vec![String::new(); n];
        let mut row = vec!["cutoff".to_owned(), self.cutoff.to_string()];
        row.extend(blank(9));
        w.write_record(&row)?;
        for r in &self.rows {
            let mut row = vec!["query".to_owned(), r.qid.clone()];
            row.extend(metrics_cells(&r.a, &r.b));
            w.write_record(&row)?;
        }
        let mut row = vec!["macro".to_owned(), "mean".to_owned()];
        row.extend(metrics_cells(&self.macro_a, &self.macro_b));
        w.write_record(&row)?;
        for qid in &self.skipped {
            let mut row = vec!["skipped".to_owned(), qid.clone()];
            row.extend(blank(9));
            w.write_record(&row)?;
        }
        for (section, curve, column) in [("curve_a", &self.curve_a, 2), ("curve_b", &self.curve_b, 5)] {
            for (l, v) in curve.iter().enumerate() {
                let mut row = vec![section.to_owned(), format!("{:.1}", level(l))];
                row.extend(blank(9));
                row[column] = fmt6(*v);
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Parse the layout written by [`write_csv`](Self::write_csv). Values
    /// carry the six-decimal rounding of the file.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, EvalError> {
        let bad = |m: String| EvalError::CsvFormat(m);
        let mut reader = csv::Reader::from_reader(input);
        let header = reader.headers()?.clone();
        if header.iter().ne(COMPARE_HEADER) {
            return Err(bad("unexpected header".into()));
        }
        let num = |s: &str| -> Result<f64, EvalError> {
            s.parse::<f64>().map_err(|_| bad(format!("bad number '{s}'")))
        };
        let metrics = |rec: &csv::StringRecord, at: usize| -> Result<RunMetrics, EvalError> {
            Ok(RunMetrics {
                precision: num(&rec[at])?,
                recall: num(&rec[at + 1])?,
                average_precision: num(&rec[at + 2])?,
            })
        };
        let mut cutoff = None;
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        let mut macros = None;
        let mut curve_a = [0.0; RECALL_LEVELS];
        let mut curve_b = [0.0; RECALL_LEVELS];
        let mut seen_a = 0;
        let mut seen_b = 0;
        for rec in reader.records() {
            let rec = rec?;
            match &rec[0] {
                "cutoff" => {
                    cutoff = Some(rec[1].parse::<usize>().map_err(|_| bad(format!("bad cutoff '{}'", &rec[1])))?)
                }
                "query" => rows.push(QueryComparison {
                    qid: rec[1].to_owned(),
                    a: metrics(&rec, 2)?,
                    b: metrics(&rec, 5)?,
                }),
                "macro" => macros = Some((metrics(&rec, 2)?, metrics(&rec, 5)?)),
                "skipped" => skipped.push(rec[1].to_owned()),
                section @ ("curve_a" | "curve_b") => {
                    let l = (num(&rec[1])? * 10.0).round() as usize;
                    if l >= RECALL_LEVELS {
                        return Err(bad(format!("bad recall level '{}'", &rec[1])));
                    }
                    if section == "curve_a" {
                        curve_a[l] = num(&rec[2])?;
                        seen_a += 1;
                    } else {
                        curve_b[l] = num(&rec[5])?;
                        seen_b += 1;
                    }
                }
                other => return Err(bad(format!("unknown section '{other}'"))),
            }
        }
        let (macro_a, macro_b) = macros.ok_or_else(|| bad("missing macro row".into()))?;
        if seen_a != RECALL_LEVELS || seen_b != RECALL_LEVELS {
            return Err(bad("incomplete curve block".into()));
        }
        Ok(Self {
            cutoff: cutoff.ok_or_else(|| bad("missing cutoff row".into()))?,
            rows,
            skipped,
            macro_a,
            macro_b,
            curve_a,
            curve_b,
        })
    }
}
