//! Acceptance suite. Runs every criterion in sequence (so the timing checks
//! do not compete for CPU) and prints one PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use fuzzir::edit_distance::{damerau_levenshtein, levenshtein, membership, Metric};
use fuzzir::evaluation::{average_precision, compare_runs, eleven_point_curve, precision, recall, Comparison, Run};
use fuzzir::fuzzy_query::{expand_untruncated, max_edit_distance};
use fuzzir::index::{from_bytes, to_bytes};
use fuzzir::scoring::{cosine_score, fuzzy_score, RankedList, ScoredHit};
use fuzzir::text_analysis::AnalyzerConfig;
use fuzzir::{build_index, expand_term, parse_query, DocumentRecord, FuzzyTermSpec, InvertedIndex, QueryDefaults};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1 worked examples", 1, ac1_worked_examples),
        ("AC2 oracle equivalence", 60, ac2_oracle_equivalence),
        ("AC3 metric properties", 30, ac3_metric_properties),
        ("AC4 expansion equals brute force", 60, ac4_expansion_brute_force),
        ("AC5 index integrity", 120, ac5_index_integrity),
        ("AC6 evaluation oracle", 10, ac6_evaluation_oracle),
        ("AC7 fuzzy beats cosine on typos", 60, ac7_typo_reproduction),
        ("AC8 k=0 degeneration", 30, ac8_degeneration),
        ("AC9 expansion performance", 60, ac9_performance),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => {
                Err(format!("{detail}; took {elapsed:.2?}, limit {limit}s"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}  [{elapsed:.2?}]  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}  [{elapsed:.2?}]  {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

fn index_of_terms(terms: &[String]) -> InvertedIndex {
    let docs = terms
        .chunks(50)
        .enumerate()
        .map(|(i, c)| DocumentRecord::new(format!("v{i}"), "vocab", c.join(" ")));
    build_index(docs, AnalyzerConfig::default()).expect("vocabulary index")
}

fn ac1_worked_examples() -> Outcome {
    ensure!(levenshtein("ax", "axe") == 1, "levenshtein(ax, axe) != 1");
    let d = levenshtein("RELEVANT", "ELEPHANT");
    ensure!(d == 3, "levenshtein(RELEVANT, ELEPHANT) = {d}");

    let vocab: Vec<String> = ["marine", "lachine", "martine", "medicine", "engine", "routine", "mankind", "zebra"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let index = index_of_terms(&vocab);
    let spec = FuzzyTermSpec::new("machine", 0.7, 0, 50, Metric::Levenshtein).unwrap();
    ensure!(max_edit_distance(&spec) == 2, "theta 0.7 on 7 chars should give k=2");
    let got: BTreeSet<String> = expand_term(&index, &spec).into_iter().map(|m| m.matched_term).collect();
    let want: BTreeSet<String> = ["lachine", "marine", "martine"].iter().map(|s| s.to_string()).collect();
    ensure!(got == want, "expansion of machine = {got:?}");
    Ok("ax/axe=1, RELEVANT/ELEPHANT=3, machine -> {lachine, marine, martine}".into())
}

fn ac2_oracle_equivalence() -> Outcome {
    let strings = all_strings(&['a', 'b', 'c'], 6);
    let mut r = rng(2);
    let pairs = 100_000;
    for _ in 0..pairs {
        let a = strings.choose(&mut r).unwrap();
        let b = strings.choose(&mut r).unwrap();
        let (sa, sb): (String, String) = (a.iter().collect(), b.iter().collect());
        let lev = levenshtein(&sa, &sb);
        let lev_ref = naive_levenshtein(a, b);
        ensure!(lev == lev_ref, "levenshtein({sa}, {sb}) = {lev}, recursion says {lev_ref}");
        let osa = damerau_levenshtein(&sa, &sb);
        let osa_ref = naive_osa(a, b);
        ensure!(osa == osa_ref, "damerau({sa}, {sb}) = {osa}, recursion says {osa_ref}");
    }
    Ok(format!("{pairs} random pairs from {} strings of length <= 6", strings.len()))
}

fn ac3_metric_properties() -> Outcome {
    let mut r = rng(3);
    let alpha = ['a', 'b', 'c', 'd'];
    for _ in 0..10_000 {
        let a = random_string(&mut r, &alpha, 0, 12);
        let b = random_string(&mut r, &alpha, 0, 12);
        let (la, lb) = (a.chars().count(), b.chars().count());
        for metric in [Metric::Levenshtein, Metric::Damerau] {
            let d = metric.distance(&a, &b);
            ensure!(d == metric.distance(&b, &a), "{metric:?} not symmetric on {a}/{b}");
            ensure!(metric.distance(&a, &a) == 0, "{metric:?} d(a,a) != 0 for {a}");
            ensure!((d == 0) == (a == b), "{metric:?} identity fails on {a}/{b}");
            ensure!(d >= la.abs_diff(lb) && d <= la.max(lb), "{metric:?} length bounds fail on {a}/{b}: {d}");
        }
        ensure!(
            damerau_levenshtein(&a, &b) <= levenshtein(&a, &b),
            "damerau > levenshtein on {a}/{b}"
        );
    }
    for _ in 0..10_000 {
        let a = random_string(&mut r, &alpha, 0, 10);
        let b = random_string(&mut r, &alpha, 0, 10);
        let c = random_string(&mut r, &alpha, 0, 10);
        ensure!(
            levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c),
            "triangle inequality fails on {a}/{b}/{c}"
        );
    }
    Ok("10000 pairs, 10000 triples".into())
}

fn brute_force(index: &InvertedIndex, spec: &FuzzyTermSpec) -> Vec<(String, usize, f64)> {
    let k = max_edit_distance(spec);
    let prefix: String = spec.term.chars().take(spec.prefix_length).collect();
    let qlen = spec.term.chars().count();
    let mut out: Vec<(String, usize, f64)> = index
        .dictionary()
        .iter()
        .map(|e| e.term())
        .filter(|t| t.starts_with(&prefix))
        .filter_map(|t| {
            let d = spec.metric.distance(&spec.term, t);
            (d <= k).then(|| (t.to_owned(), d, membership(d, qlen.max(t.chars().count()))))
        })
        .collect();
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    out
}

fn ac4_expansion_brute_force() -> Outcome {
    let mut r = rng(4);
    let mut total_matches = 0usize;
    for instance in 0..200 {
        let alpha_len = r.gen_range(2..=6);
        let alphabet = &LOWER[..alpha_len];
        let max_len = if alpha_len <= 3 { 10 } else { 8 };
        let available: usize = (2..=max_len).map(|l| alpha_len.pow(l as u32)).sum();
        let size = r.gen_range(1..=5000.min(available / 2));
        let vocab = vocabulary(&mut r, size, alphabet, 2, max_len);
        let index = index_of_terms(&vocab);
        let term = if r.gen_bool(0.5) {
            let base = vocab.choose(&mut r).unwrap();
            one_edit(&mut r, base, &HashSet::new())
        } else {
            random_string(&mut r, &LOWER[..alpha_len.max(3)], 1, 9)
        };
        let len = term.chars().count();
        let metric = if r.gen_bool(0.5) { Metric::Levenshtein } else { Metric::Damerau };
        let spec = FuzzyTermSpec::new(
            term.clone(),
            r.gen_range(0.0..1.0),
            r.gen_range(0..=len.min(3)),
            r.gen_range(1..=100),
            metric,
        )
        .unwrap();
        let want = brute_force(&index, &spec);
        let got: Vec<(String, usize, f64)> = expand_untruncated(&index, &spec)
            .into_iter()
            .map(|m| (m.matched_term, m.distance, m.membership))
            .collect();
        let want_set: BTreeSet<(String, usize)> = want.iter().map(|(t, d, _)| (t.clone(), *d)).collect();
        let got_set: BTreeSet<(String, usize)> = got.iter().map(|(t, d, _)| (t.clone(), *d)).collect();
        ensure!(
            got_set == want_set,
            "instance {instance}: {spec:?} expanded to {} terms, brute force found {}",
            got_set.len(),
            want_set.len()
        );
        ensure!(got == want, "instance {instance}: order or membership differs for {spec:?}");
        let truncated: Vec<String> = expand_term(&index, &spec).into_iter().map(|m| m.matched_term).collect();
        let want_trunc: Vec<String> = want.iter().take(spec.max_expansions).map(|w| w.0.clone()).collect();
        ensure!(truncated == want_trunc, "instance {instance}: truncation differs");
        total_matches += want.len();
    }
    Ok(format!("200 instances, {total_matches} matches in total"))
}

fn ac5_index_integrity() -> Outcome {
    let mut r = rng(5);
    let vocab = vocabulary(&mut r, 30_000, &LOWER, 3, 12);
    let docs = synthetic_corpus(&mut r, &vocab, 10_000, 20, 120);
    let index = build_index(docs.clone(), AnalyzerConfig::default()).map_err(|e| e.to_string())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("corpus.idx");
    fuzzir::index::save(&index, &path).map_err(|e| e.to_string())?;
    let loaded = fuzzir::index::load(&path).map_err(|e| e.to_string())?;
    ensure!(loaded == index, "loaded index differs from the built one");
    let first = std::fs::read(&path).map_err(|e| e.to_string())?;
    ensure!(to_bytes(&loaded) == first, "re-save is not byte-identical");
    let rebuilt = build_index(docs, AnalyzerConfig::default()).map_err(|e| e.to_string())?;
    ensure!(to_bytes(&rebuilt) == first, "rebuilding the same corpus changed the bytes");
    ensure!(from_bytes(&first).is_ok(), "bytes do not decode");

    let dict = loaded.dictionary();
    for probe in 0..1000 {
        let term = if probe % 2 == 0 {
            dict.choose(&mut r).unwrap().term().to_owned()
        } else {
            random_string(&mut r, &LOWER, 1, 8)
        };
        let linear = dict.iter().find(|e| e.term() == term);
        let binary = loaded.lookup_exact(&term);
        ensure!(linear == binary, "lookup of '{term}' disagrees with linear scan");
        let prefix: String = term.chars().take(2).collect();
        let scan: Vec<&str> = dict.iter().map(|e| e.term()).filter(|t| t.starts_with(&prefix)).collect();
        let range: Vec<&str> = loaded.prefix_range(&prefix).iter().map(|e| e.term()).collect();
        ensure!(scan == range, "prefix range of '{prefix}' disagrees with linear scan");
    }
    Ok(format!(
        "{} docs, {} terms, {} bytes; 1000 probes",
        loaded.doc_count(),
        loaded.term_count(),
        first.len()
    ))
}

fn ranked(ids: &[&str]) -> RankedList {
    let n = ids.len();
    RankedList::from_rank_order(
        ids.iter()
            .enumerate()
            .map(|(i, d)| ScoredHit {
                docid: d.to_string(),
                score: (n - i) as f64,
            })
            .collect(),
    )
}

fn set(ids: &[&str]) -> BTreeSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn ac6_evaluation_oracle() -> Outcome {
    // Hand-derived fixtures.
    let run = ranked(&["d1", "d2", "d3"]);
    let rel = set(&["d1", "d3"]);
    ensure!(close(precision(&run, &rel), 2.0 / 3.0), "precision of [rel,non,rel]");
    ensure!(close(recall(&run, &rel).unwrap(), 1.0), "recall of [rel,non,rel]");
    let ap = average_precision(&run, &rel).unwrap();
    ensure!(close(ap, 5.0 / 6.0), "AP of [rel,non,rel] = {ap}");
    let curve = eleven_point_curve(&run, &rel).unwrap();
    for (l, v) in curve.iter().enumerate() {
        let want = if l <= 5 { 1.0 } else { 2.0 / 3.0 };
        ensure!(close(*v, want), "curve[{l}] = {v}, want {want}");
    }
    let run = ranked(&["n1", "r1"]);
    let rel = set(&["r1", "r2", "r3", "r4"]);
    ensure!(close(average_precision(&run, &rel).unwrap(), 0.125), "AP of [non,rel] with |R|=4");
    let curve = eleven_point_curve(&run, &rel).unwrap();
    ensure!(curve[..3].iter().all(|v| close(*v, 0.5)), "curve head of [non,rel] with |R|=4");
    ensure!(curve[3..].iter().all(|v| *v == 0.0), "curve tail of [non,rel] with |R|=4");
    let empty = ranked(&[]);
    ensure!(precision(&empty, &rel) == 0.0, "precision of empty run");
    ensure!(eleven_point_curve(&empty, &rel).unwrap() == [0.0; 11], "curve of empty run");
    ensure!(average_precision(&run, &BTreeSet::new()).is_err(), "empty relevant set must be rejected");

    // Random instances against the exact-arithmetic reference.
    let mut r = rng(6);
    let pool: Vec<String> = (0..40).map(|i| format!("d{i}")).collect();
    for instance in 0..100 {
        let len = r.gen_range(0..=25);
        let ranking: Vec<&str> = pool.choose_multiple(&mut r, len).map(|s| s.as_str()).collect();
        let n_rel = r.gen_range(1..=12);
        let relevant: BTreeSet<String> = pool.choose_multiple(&mut r, n_rel).cloned().collect();
        let list = ranked(&ranking);
        let curve = eleven_point_curve(&list, &relevant).unwrap();
        let reference = reference_curve(&ranking, &relevant);
        for l in 0..11 {
            ensure!(
                close(curve[l], reference[l].to_f64()),
                "instance {instance} level {l}: {} vs reference {}",
                curve[l],
                reference[l].to_f64()
            );
        }
        let ap = average_precision(&list, &relevant).unwrap();
        ensure!(close(ap, reference_ap(&ranking, &relevant)), "instance {instance}: AP {ap}");
        let hits = ranking.iter().filter(|d| relevant.contains(**d)).count() as f64;
        let p = if ranking.is_empty() { 0.0 } else { hits / ranking.len() as f64 };
        ensure!(close(precision(&list, &relevant), p), "instance {instance}: precision");
        ensure!(
            close(recall(&list, &relevant).unwrap(), hits / relevant.len() as f64),
            "instance {instance}: recall"
        );
    }
    Ok("hand fixtures plus 100 random instances within 1e-12".into())
}

struct BenchRuns {
    fuzzy: Run,
    cosine: Run,
    judgments: BTreeMap<String, BTreeSet<String>>,
    typo_qids: BTreeSet<String>,
}

fn run_bench(defaults: &QueryDefaults) -> Result<BenchRuns, String> {
    let bench = typo_bench(7);
    let index = build_index(bench.docs, AnalyzerConfig::default()).map_err(|e| e.to_string())?;
    let mut fuzzy = Run::new();
    let mut cosine = Run::new();
    let mut judgments = BTreeMap::new();
    let mut typo_qids = BTreeSet::new();
    for (qid, text, source, typo) in &bench.queries {
        let parsed = parse_query(qid, text, defaults, &index).map_err(|e| e.to_string())?;
        fuzzy.insert(qid.clone(), fuzzy_score(&parsed, &index, 1000));
        cosine.insert(qid.clone(), cosine_score(&parsed, &index, 1000));
        judgments.insert(qid.clone(), BTreeSet::from([source.clone()]));
        if *typo {
            typo_qids.insert(qid.clone());
        }
    }
    Ok(BenchRuns {
        fuzzy,
        cosine,
        judgments,
        typo_qids,
    })
}

fn ac7_typo_reproduction() -> Outcome {
    let runs = run_bench(&QueryDefaults::default())?;
    let cmp = compare_runs(&runs.fuzzy, &runs.cosine, &runs.judgments, 10).map_err(|e| e.to_string())?;
    ensure!(cmp.skipped.is_empty(), "queries skipped: {:?}", cmp.skipped);
    let (fuzzy_r, cosine_r) = (cmp.macro_a.recall, cmp.macro_b.recall);
    ensure!(fuzzy_r >= cosine_r, "macro recall@10 fuzzy {fuzzy_r} < cosine {cosine_r}");

    let typo_rows: Vec<_> = cmp.rows.iter().filter(|r| runs.typo_qids.contains(&r.qid)).collect();
    ensure!(typo_rows.len() == 10, "expected 10 typo queries, got {}", typo_rows.len());
    let mean = |f: &dyn Fn(&fuzzir::evaluation::QueryComparison) -> f64| {
        typo_rows.iter().map(|r| f(r)).sum::<f64>() / typo_rows.len() as f64
    };
    let (typo_fuzzy, typo_cosine) = (mean(&|r| r.a.recall), mean(&|r| r.b.recall));
    ensure!(
        typo_fuzzy > typo_cosine,
        "typo subset recall@10 fuzzy {typo_fuzzy} not above cosine {typo_cosine}"
    );

    let mut csv = Vec::new();
    cmp.write_csv(&mut csv).map_err(|e| e.to_string())?;
    let parsed = Comparison::read_csv(csv.as_slice()).map_err(|e| e.to_string())?;
    for l in 0..11 {
        ensure!(
            parsed.curve_a[l] >= parsed.curve_b[l],
            "CSV curve level {l}: fuzzy {} < cosine {}",
            parsed.curve_a[l],
            parsed.curve_b[l]
        );
    }
    Ok(format!(
        "recall@10 fuzzy {fuzzy_r:.3} vs cosine {cosine_r:.3}; typo subset {typo_fuzzy:.3} vs {typo_cosine:.3}; \
         curve at 0.0: {:.3} vs {:.3}",
        parsed.curve_a[0], parsed.curve_b[0]
    ))
}

fn ac8_degeneration() -> Outcome {
    let defaults = QueryDefaults {
        fuzziness: 0.99,
        ..QueryDefaults::default()
    };
    let runs = run_bench(&defaults)?;
    let mut compared = 0usize;
    for (qid, fuzzy) in &runs.fuzzy {
        let cosine = &runs.cosine[qid];
        let cos_ids: HashSet<&str> = cosine.docids().collect();
        let fz_ids: HashSet<&str> = fuzzy.docids().collect();
        let a: Vec<&str> = fuzzy.docids().filter(|d| cos_ids.contains(d)).collect();
        let b: Vec<&str> = cosine.docids().filter(|d| fz_ids.contains(d)).collect();
        ensure!(a == b, "query {qid}: fuzzy order {a:?} differs from cosine {b:?}");
        ensure!(fz_ids == cos_ids, "query {qid}: k=0 retrieved different documents");
        compared += a.len();
    }
    Ok(format!("{} queries, {compared} co-retrieved documents in identical order", runs.fuzzy.len()))
}

fn median_time(reps: usize, mut f: impl FnMut() -> usize) -> (Duration, usize) {
    let mut times = Vec::with_capacity(reps);
    let mut found = 0;
    for _ in 0..reps {
        let start = Instant::now();
        found = std::hint::black_box(f());
        times.push(start.elapsed());
    }
    times.sort();
    (times[reps / 2], found)
}

fn ac9_performance() -> Outcome {
    let mut r = rng(9);
    let vocab = vocabulary(&mut r, 50_000, &LOWER, 3, 12);
    let big = index_of_terms(&vocab);
    let small = index_of_terms(&vocab[..5_000]);
    ensure!(big.term_count() == 50_000, "dictionary has {} terms", big.term_count());
    let spec = FuzzyTermSpec::new("machine", 0.7, 0, usize::MAX, Metric::Levenshtein).unwrap();
    ensure!(max_edit_distance(&spec) == 2, "budget for machine at 0.7 is not 2");

    let (banded, found) = median_time(21, || expand_untruncated(&big, &spec).len());
    let (scan, scan_found) = median_time(21, || {
        big.dictionary()
            .iter()
            .filter(|e| levenshtein(&spec.term, e.term()) <= 2)
            .count()
    });
    let (small_t, _) = median_time(21, || expand_untruncated(&small, &spec).len());
    ensure!(found == scan_found, "banded found {found} terms, full scan {scan_found}");
    ensure!(banded < Duration::from_millis(250), "banded expansion took {banded:?}");
    ensure!(banded * 10 < scan, "banded {banded:?} is not under 1/10 of full scan {scan:?}");
    ensure!(small_t < banded, "5k dictionary ({small_t:?}) not faster than 50k ({banded:?})");
    Ok(format!(
        "50k terms: banded {banded:.2?} vs full scan {scan:.2?} ({:.1}x); 5k terms: {small_t:.2?}",
        scan.as_secs_f64() / banded.as_secs_f64()
    ))
}
