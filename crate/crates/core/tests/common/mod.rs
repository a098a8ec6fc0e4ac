//! Independent oracles and synthetic data shared by the integration tests.
//!
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use fuzzir::index::DocumentRecord;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Direct exponential recursion of the Wagner-Fischer recurrence.
pub fn naive_levenshtein(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize) -> usize {
        if i.min(j) == 0 {
            return i.max(j);
        }
        let sub = go(a, b, i - 1, j - 1) + usize::from(a[i - 1] != b[j - 1]);
        sub.min(go(a, b, i - 1, j) + 1).min(go(a, b, i, j - 1) + 1)
    }
    go(a, b, a.len(), b.len())
}

/// Direct exponential recursion of the restricted (OSA) Damerau recurrence.
pub fn naive_osa(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize) -> usize {
        if i.min(j) == 0 {
            return i.max(j);
        }
        let mut v = (go(a, b, i - 1, j) + 1)
            .min(go(a, b, i, j - 1) + 1)
            .min(go(a, b, i - 1, j - 1) + usize::from(a[i - 1] != b[j - 1]));
        if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
            v = v.min(go(a, b, i - 2, j - 2) + 1);
        }
        v
    }
    go(a, b, a.len(), b.len())
}

/// Every string over `alphabet` of length `0..=max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t: Vec<char> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn random_string(rng: &mut StdRng, alphabet: &[char], min_len: usize, max_len: usize) -> String {
    let len = rng.gen_range(min_len..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

pub const LOWER: [char; 26] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't',
    'u', 'v', 'w', 'x', 'y', 'z',
];

/// `n` distinct lowercase pseudo-words with lengths in `min..=max`, in
/// generation order. Excludes the default stopwords.
pub fn vocabulary(rng: &mut StdRng, n: usize, alphabet: &[char], min: usize, max: usize) -> Vec<String> {
    let stop: HashSet<&str> = fuzzir::text_analysis::DEFAULT_STOPWORDS.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = random_string(rng, alphabet, min, max);
        if stop.contains(w.as_str()) {
            continue;
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Documents whose bodies are random draws from `vocab`.
pub fn synthetic_corpus(rng: &mut StdRng, vocab: &[String], n_docs: usize, min_len: usize, max_len: usize) -> Vec<DocumentRecord> {
    (0..n_docs)
        .map(|i| {
            let len = rng.gen_range(min_len..=max_len);
            let body: Vec<&str> = (0..len).map(|_| vocab.choose(rng).unwrap().as_str()).collect();
            DocumentRecord::new(format!("doc{i:05}"), format!("synthetic#{i}"), body.join(" "))
        })
        .collect()
}

/// Apply exactly one random edit (substitute, insert, delete or swap
/// neighbours) to `word`, never returning `word` itself or a word in `avoid`.
pub fn one_edit(rng: &mut StdRng, word: &str, avoid: &HashSet<String>) -> String {
    let chars: Vec<char> = word.chars().collect();
    loop {
        let mut c = chars.clone();
        match rng.gen_range(0..3) {
            0 => {
                let i = rng.gen_range(0..c.len());
                c[i] = *LOWER.choose(rng).unwrap();
            }
            1 => {
                let i = rng.gen_range(0..=c.len());
                c.insert(i, *LOWER.choose(rng).unwrap());
            }
            _ => {
                if c.len() <= 3 {
                    continue;
                }
                let i = rng.gen_range(0..c.len());
                c.remove(i);
            }
        }
        let out: String = c.into_iter().collect();
        if out != word && !avoid.contains(&out) && naive_free_levenshtein(word, &out) == 1 {
            return out;
        }
    }
}

/// Plain full-matrix Levenshtein used only by the fixture generators.
pub fn naive_free_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in m[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            m[i][j] = (m[i - 1][j] + 1)
                .min(m[i][j - 1] + 1)
                .min(m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]));
        }
    }
    m[a.len()][b.len()]
}

/// Exact rational `num/den`, compared by cross multiplication.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn zero() -> Self {
        Ratio { num: 0, den: 1 }
    }

    pub fn gt(self, other: Ratio) -> bool {
        (self.num as u128) * (other.den as u128) > (other.num as u128) * (self.den as u128)
    }

    pub fn ge(self, other: Ratio) -> bool {
        (self.num as u128) * (other.den as u128) >= (other.num as u128) * (self.den as u128)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Reference 11-point interpolation: for each level, scan every rank prefix
/// with exact arithmetic and keep the best precision among prefixes whose
/// recall reaches the level.
pub fn reference_curve(ranking: &[&str], relevant: &BTreeSet<String>) -> [Ratio; 11] {
    let total = relevant.len() as u64;
    let mut out = [Ratio::zero(); 11];
    for (l, slot) in out.iter_mut().enumerate() {
        let level = Ratio { num: l as u64, den: 10 };
        let mut hits = 0u64;
        for (i, d) in ranking.iter().enumerate() {
            if relevant.contains(*d) {
                hits += 1;
            }
            let recall = Ratio { num: hits, den: total };
            let precision = Ratio { num: hits, den: i as u64 + 1 };
            if recall.ge(level) && precision.gt(*slot) {
                *slot = precision;
            }
        }
    }
    out
}

/// Reference uninterpolated AP as an exact sum of ratios, returned as f64.
pub fn reference_ap(ranking: &[&str], relevant: &BTreeSet<String>) -> f64 {
    let mut hits = 0u64;
    let mut sum = 0.0f64;
    let mut terms = Vec::new();
    for (i, d) in ranking.iter().enumerate() {
        if relevant.contains(*d) {
            hits += 1;
            terms.push(Ratio { num: hits, den: i as u64 + 1 });
        }
    }
    for t in terms {
        sum += t.to_f64();
    }
    sum / relevant.len() as f64
}

/// Hand-rolled TF-IDF cosine over whitespace-separated, already-normalized
/// bodies: `w = (1 + ln tf) * ln(1 + N/df)`, scores scaled by `idf_scale`.
pub fn oracle_cosine(docs: &[(&str, &str)], query: &[&str], idf_scale: f64) -> BTreeMap<String, f64> {
    let n = docs.len() as f64;
    let tfs: Vec<BTreeMap<&str, u32>> = docs
        .iter()
        .map(|(_, body)| {
            let mut m = BTreeMap::new();
            for w in body.split_whitespace() {
                *m.entry(w).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for tf in &tfs {
        for w in tf.keys() {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    let idf = |w: &str| idf_scale * (1.0 + n / df[w] as f64).ln();
    let mut qtf: BTreeMap<&str, u32> = BTreeMap::new();
    for w in query {
        if df.contains_key(w) {
            *qtf.entry(w).or_insert(0) += 1;
        }
    }
    let qvec: BTreeMap<&str, f64> = qtf.iter().map(|(w, c)| (*w, (1.0 + (*c as f64).ln()) * idf(w))).collect();
    let qnorm = qvec.values().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = BTreeMap::new();
    for ((id, _), tf) in docs.iter().zip(&tfs) {
        let dvec: BTreeMap<&str, f64> = tf.iter().map(|(w, c)| (*w, (1.0 + (*c as f64).ln()) * idf(w))).collect();
        let dnorm = dvec.values().map(|v| v * v).sum::<f64>().sqrt();
        let dot: f64 = qvec.iter().filter_map(|(w, q)| dvec.get(w).map(|d| q * d)).sum();
        if dot > 0.0 {
            out.insert((*id).to_owned(), dot / (qnorm * dnorm));
        }
    }
    out
}

/// Docids ordered by descending score, ties by docid.
pub fn order_of(scores: &BTreeMap<String, f64>) -> Vec<String> {
    let mut v: Vec<(&String, &f64)> = scores.iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().map(|(d, _)| d.clone()).collect()
}

/// Synthetic retrieval benchmark: documents, queries derived from them, and
/// qrels marking each query's source document relevant.
pub struct TypoBench {
    pub docs: Vec<DocumentRecord>,
    /// (qid, query text, source docid, typo injected)
    pub queries: Vec<(String, String, String, bool)>,
}

/// 200 documents; 20 queries of 4 distinct terms sampled from one source
/// document each. Queries 10..20 carry exactly one character edit in every
/// term, so half of all query terms are misspelled.
pub fn typo_bench(seed: u64) -> TypoBench {
    let mut r = rng(seed);
    let vocab = vocabulary(&mut r, 3000, &LOWER, 5, 10);
    let vocab_set: HashSet<String> = vocab.iter().cloned().collect();
    let docs = synthetic_corpus(&mut r, &vocab, 200, 30, 60);
    let mut sources: Vec<usize> = (0..docs.len()).collect();
    sources.shuffle(&mut r);
    let mut queries = Vec::new();
    for (q, &src) in sources.iter().take(20).enumerate() {
        let distinct: BTreeSet<&str> = docs[src].body.split_whitespace().collect();
        let distinct: Vec<&str> = distinct.into_iter().collect();
        let picked: Vec<&str> = distinct.choose_multiple(&mut r, 4).copied().collect();
        let typo = q >= 10;
        let terms: Vec<String> = picked
            .iter()
            .map(|w| if typo { one_edit(&mut r, w, &vocab_set) } else { (*w).to_owned() })
            .collect();
        queries.push((format!("{}", q + 1), terms.join(" "), docs[src].docid.clone(), typo));
    }
    TypoBench { docs, queries }
}
