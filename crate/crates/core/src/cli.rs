//! `fuzzir` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 internal
//! invariant failure. Diagnostics go to stderr; results go to stdout or files.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus_io::{
    format_run, read_corpus_medline, read_corpus_textdir, read_qrels, read_queries, read_run,
    relevant_sets, CorpusError, QueryRecord,
};
use crate::edit_distance::Metric;
use crate::evaluation::{compare_runs, evaluate_run, level, Comparison, EvalError, Run};
use crate::fuzzy_query::{parse_query, QueryDefaults, QueryError};
use crate::index::{load, save, IndexBuilder, IndexError, InvertedIndex};
use crate::scoring::{RankedList, Scorer};
use crate::text_analysis::AnalyzerConfig;

#[derive(Debug, Parser)]
#[command(name = "fuzzir", version, about = "Fuzzy full-text retrieval and TREC-style evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index from a corpus and save it.
    Index(IndexArgs),
    /// Run one query, or read queries from stdin, and print ranked hits.
    Search(SearchArgs),
    /// Evaluate a run (file, or index + queries) against qrels.
    Eval(EvalArgs),
    /// Run fuzzy and cosine scorers over all queries and compare them.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorpusFormat {
    Medline,
    Textdir,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Levenshtein,
    Damerau,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Levenshtein => Metric::Levenshtein,
            MetricArg::Damerau => Metric::Damerau,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerArg {
    Fuzzy,
    Cosine,
}

impl From<ScorerArg> for Scorer {
    fn from(s: ScorerArg) -> Self {
        match s {
            ScorerArg::Fuzzy => Scorer::Fuzzy,
            ScorerArg::Cosine => Scorer::Cosine,
        }
    }
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    format: CorpusFormat,
    #[arg(long)]
    index: PathBuf,
    /// Replace the default stopword list (one term per line).
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FuzzyArgs {
    #[arg(long, default_value_t = crate::fuzzy_query::DEFAULT_FUZZINESS)]
    fuzziness: f64,
    #[arg(long, default_value_t = crate::fuzzy_query::DEFAULT_PREFIX_LENGTH)]
    prefix_length: usize,
    #[arg(long, default_value_t = crate::fuzzy_query::DEFAULT_MAX_EXPANSIONS)]
    max_expansions: usize,
    #[arg(long, value_enum, default_value = "levenshtein")]
    metric: MetricArg,
}

impl FuzzyArgs {
    fn defaults(&self) -> Result<QueryDefaults, CliError> {
        let d = QueryDefaults {
            fuzziness: self.fuzziness,
            prefix_length: self.prefix_length,
            max_expansions: self.max_expansions,
            metric: self.metric.into(),
        };
        d.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(d)
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    /// Query text; without it, queries are read from stdin one per line.
    #[arg(long)]
    query: Option<String>,
    #[command(flatten)]
    fuzzy: FuzzyArgs,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, value_enum, default_value = "fuzzy")]
    scorer: ScorerArg,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    qrels: PathBuf,
    /// Existing TREC run file to evaluate.
    #[arg(long, conflicts_with_all = ["index", "queries"])]
    run: Option<PathBuf>,
    #[arg(long, requires = "queries")]
    index: Option<PathBuf>,
    #[arg(long, requires = "index")]
    queries: Option<PathBuf>,
    #[command(flatten)]
    fuzzy: FuzzyArgs,
    #[arg(long, default_value_t = 1000)]
    top_k: usize,
    #[arg(long, value_enum, default_value = "fuzzy")]
    scorer: ScorerArg,
    #[arg(long)]
    tag: Option<String>,
    /// Where to write the run produced from --index/--queries.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-query and macro metrics.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[command(flatten)]
    fuzzy: FuzzyArgs,
    #[arg(long, default_value_t = 1000)]
    top_k: usize,
    /// Rank cutoff for precision and recall.
    #[arg(long, default_value_t = 10)]
    cutoff: usize,
    /// Prefix for the run tags (`<tag>-fuzzy`, `<tag>-cosine`).
    #[arg(long)]
    tag: Option<String>,
    /// Directory receiving fuzzy.run, cosine.run and (by default) compare.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Invariant(_) => CliError::Internal(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::QidMismatch { .. } => CliError::Internal(e.to_string()),
            EvalError::ZeroCutoff => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn require_exists(path: &Path, flag: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} {} does not exist", path.display())))
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Index(a) => cmd_index(&a, stdout),
        Command::Search(a) => cmd_search(&a, stdin, stdout, stderr),
        Command::Eval(a) => cmd_eval(&a, stdout, stderr),
        Command::Compare(a) => cmd_compare(&a, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn cmd_index(args: &IndexArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    require_exists(&args.corpus, "--corpus")?;
    let start = Instant::now();
    let mut analyzer = AnalyzerConfig::default();
    if let Some(path) = &args.stopwords {
        analyzer = analyzer
            .with_stopword_file(path)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let mut builder = IndexBuilder::new(analyzer);
    match args.format {
        CorpusFormat::Medline => {
            for doc in read_corpus_medline(&args.corpus)? {
                builder.add(doc?)?;
            }
        }
        CorpusFormat::Textdir => {
            if !args.corpus.is_dir() {
                return Err(CliError::Usage(format!("--corpus {} is not a directory", args.corpus.display())));
            }
            for doc in read_corpus_textdir(&args.corpus)? {
                builder.add(doc?)?;
            }
        }
    }
    let index = builder.finish();
    index.validate()?;
    save(&index, &args.index)?;
    writeln!(
        stdout,
        "Indexed {} document(s), {} term(s). Time taken: {}ms",
        index.doc_count(),
        index.term_count(),
        start.elapsed().as_millis()
    )
    .map_err(io_error(Path::new("<stdout>")))?;
    Ok(())
}

fn load_index(path: &Path) -> Result<InvertedIndex, CliError> {
    require_exists(path, "--index")?;
    Ok(load(path)?)
}

fn print_hits(
    out: &mut dyn Write,
    ranked: &RankedList,
    top_k: usize,
    millis: u128,
) -> std::io::Result<()> {
    writeln!(out, "{} document(s) found. Time taken: {millis}ms", ranked.len())?;
    for hit in ranked.iter().take(top_k) {
        writeln!(out, "Score: {:.6}  Doc: {}", hit.score, hit.docid)?;
    }
    Ok(())
}

fn cmd_search(
    args: &SearchArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if args.top_k == 0 {
        return Err(CliError::Usage("--top-k must be at least 1".into()));
    }
    let defaults = args.fuzzy.defaults()?;
    let index = load_index(&args.index)?;
    let scorer: Scorer = args.scorer.into();
    let out_err = io_error(Path::new("<stdout>"));

    let one = |text: &str, stdout: &mut dyn Write, stderr: &mut dyn Write| -> std::io::Result<()> {
        let start = Instant::now();
        match parse_query("q", text, &defaults, &index) {
            Ok(q) => {
                let ranked = scorer.score(&q, &index, usize::MAX);
                print_hits(stdout, &ranked, args.top_k, start.elapsed().as_millis())
            }
            Err(QueryError::EmptyQuery) => writeln!(stderr, "{}", QueryError::EmptyQuery),
            Err(e) => writeln!(stderr, "{e}"),
        }
    };

    if let Some(text) = &args.query {
        return one(text, stdout, stderr).map_err(out_err);
    }
    let mut line = String::new();
    loop {
        let _ = writeln!(stderr, "Enter your query:");
        line.clear();
        let n = stdin
            .read_line(&mut line)
            .map_err(|e| CliError::Io(format!("<stdin>: {e}")))?;
        if n == 0 {
            return Ok(());
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        one(text, stdout, stderr).map_err(io_error(Path::new("<stdout>")))?;
    }
}

/// Score every query; queries that analyze to nothing get an empty list.
fn score_queries(
    index: &InvertedIndex,
    queries: &[QueryRecord],
    defaults: &QueryDefaults,
    scorer: Scorer,
    top_k: usize,
    stderr: &mut dyn Write,
) -> Run {
    let mut run = Run::new();
    for q in queries {
        let ranked = match parse_query(&q.qid, &q.text, defaults, index) {
            Ok(parsed) => scorer.score(&parsed, index, top_k),
            Err(e) => {
                let _ = writeln!(stderr, "query {}: {e}", q.qid);
                RankedList::default()
            }
        };
        run.insert(q.qid.clone(), ranked);
    }
    run
}

fn write_run_file(path: &Path, run: &Run, tag: &str) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_error(path))?;
    let mut out = std::io::BufWriter::new(file);
    for (qid, ranked) in run {
        format_run(&mut out, qid, ranked, tag).map_err(io_error(path))?;
    }
    out.flush().map_err(io_error(path))
}

fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    require_exists(&args.qrels, "--qrels")?;
    let judgments = relevant_sets(&read_qrels(&args.qrels)?);
    let run = match (&args.run, &args.index, &args.queries) {
        (Some(path), _, _) => {
            require_exists(path, "--run")?;
            read_run(path)?
        }
        (None, Some(index), Some(queries)) => {
            if args.top_k == 0 {
                return Err(CliError::Usage("--top-k must be at least 1".into()));
            }
            let defaults = args.fuzzy.defaults()?;
            let index = load_index(index)?;
            require_exists(queries, "--queries")?;
            let queries = read_queries(queries)?;
            let scorer: Scorer = args.scorer.into();
            let run = score_queries(&index, &queries, &defaults, scorer, args.top_k, stderr);
            if let Some(out) = &args.out {
                let tag = args.tag.clone().unwrap_or_else(|| scorer.name().to_owned());
                write_run_file(out, &run, &tag)?;
            }
            run
        }
        _ => {
            return Err(CliError::Usage(
                "eval needs either --run or both --index and --queries".into(),
            ))
        }
    };
    let summary = evaluate_run(&run, &judgments);
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).map_err(io_error(path))?;
        summary.write_csv(file)?;
    }
    let out_err = || io_error(Path::new("<stdout>"));
    let m = &summary.macro_avg;
    writeln!(
        stdout,
        "queries evaluated: {}  skipped (no relevant): {}",
        summary.per_query.len(),
        summary.skipped.len()
    )
    .map_err(out_err())?;
    writeln!(
        stdout,
        "macro precision {:.6}  recall {:.6}  AP {:.6}",
        m.precision, m.recall, m.average_precision
    )
    .map_err(out_err())?;
    let curve: Vec<String> = m
        .curve
        .iter()
        .enumerate()
        .map(|(l, v)| format!("{:.1}:{v:.6}", level(l)))
        .collect();
    writeln!(stdout, "11-point curve {}", curve.join(" ")).map_err(out_err())?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    if args.top_k == 0 {
        return Err(CliError::Usage("--top-k must be at least 1".into()));
    }
    if args.cutoff == 0 {
        return Err(CliError::Usage("--cutoff must be at least 1".into()));
    }
    let defaults = args.fuzzy.defaults()?;
    require_exists(&args.qrels, "--qrels")?;
    require_exists(&args.queries, "--queries")?;
    let index = load_index(&args.index)?;
    let queries = read_queries(&args.queries)?;
    let judgments = relevant_sets(&read_qrels(&args.qrels)?);

    let (fuzzy, cosine) = std::thread::scope(|s| {
        let fuzzy = s.spawn(|| {
            let mut sink = Vec::new();
            let run = score_queries(&index, &queries, &defaults, Scorer::Fuzzy, args.top_k, &mut sink);
            (run, sink)
        });
        let mut sink = Vec::new();
        let cosine = score_queries(&index, &queries, &defaults, Scorer::Cosine, args.top_k, &mut sink);
        let fuzzy = fuzzy.join().expect("fuzzy scoring thread panicked");
        (fuzzy, (cosine, sink))
    });
    // Both scorers report the same empty-query diagnostics; print them once.
    let _ = stderr.write_all(&fuzzy.1);
    let (fuzzy, cosine) = (fuzzy.0, cosine.0);

    std::fs::create_dir_all(&args.out).map_err(io_error(&args.out))?;
    let tag = |name: &str| match &args.tag {
        Some(t) => format!("{t}-{name}"),
        None => name.to_owned(),
    };
    write_run_file(&args.out.join("fuzzy.run"), &fuzzy, &tag("fuzzy"))?;
    write_run_file(&args.out.join("cosine.run"), &cosine, &tag("cosine"))?;

    let cmp = compare_runs(&fuzzy, &cosine, &judgments, args.cutoff)?;
    let csv_path = args.csv.clone().unwrap_or_else(|| args.out.join("compare.csv"));
    let file = std::fs::File::create(&csv_path).map_err(io_error(&csv_path))?;
    cmp.write_csv(file)?;
    print_comparison(stdout, &cmp).map_err(io_error(Path::new("<stdout>")))
}

fn print_comparison(out: &mut dyn Write, cmp: &Comparison) -> std::io::Result<()> {
    let d = cmp.macro_a.delta(&cmp.macro_b);
    writeln!(out, "queries compared: {}  skipped: {}", cmp.rows.len(), cmp.skipped.len())?;
    writeln!(out, "{:<8} {:>12} {:>12} {:>12}", "", "P@cutoff", "R@cutoff", "AP")?;
    for (name, m) in [("fuzzy", &cmp.macro_a), ("cosine", &cmp.macro_b), ("delta", &d)] {
        writeln!(
            out,
            "{name:<8} {:>12.6} {:>12.6} {:>12.6}",
            m.precision, m.recall, m.average_precision
        )?;
    }
    Ok(())
}
