//! String distance metrics over Unicode scalar values.
//!
//! Lengths and positions are counted in `char`s, never bytes, so `"résumé"`
//! has length 6. All edit operations have unit cost.
//!
//! The bounded variants share one incremental engine, [`BoundedDistance`],
//! which evaluates only the diagonal band `|i - j| <= k` of the DP matrix and
//! reports as soon as every cell of the newest row exceeds `k`. Dictionary
//! traversal in [`crate::fuzzy_query`] drives the same engine one character at
//! a time so that rows for a shared term prefix are computed once.

use thiserror::Error;

/// Which edit metric to use for fuzzy matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    /// Insertions, deletions and substitutions.
    #[default]
    Levenshtein,
    /// Restricted Damerau-Levenshtein (optimal string alignment): adds
    /// transposition of two adjacent characters as a single operation.
    Damerau,
}

impl Metric {
    pub fn distance(self, a: &str, b: &str) -> usize {
        match self {
            Metric::Levenshtein => levenshtein(a, b),
            Metric::Damerau => damerau_levenshtein(a, b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Levenshtein => "levenshtein",
            Metric::Damerau => "damerau",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "levenshtein" => Ok(Metric::Levenshtein),
            "damerau" => Ok(Metric::Damerau),
            other => Err(format!("unknown metric '{other}' (expected levenshtein or damerau)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    #[error("hamming requires equal lengths (got {left} and {right})")]
    UnequalLengths { left: usize, right: usize },
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Levenshtein distance by the Wagner-Fischer recurrence, keeping two rows.
pub fn levenshtein(a: &str, b: &str) -> usize {
    levenshtein_chars(&chars(a), &chars(b))
}

pub(crate) fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    // Iterate over the longer string so the rows are as short as possible.
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance if it is at most `k`, otherwise `None`.
///
/// Only cells inside the band of half-width `k` around the main diagonal are
/// evaluated, and evaluation stops at the first row whose minimum exceeds `k`.
pub fn levenshtein_bounded(a: &str, b: &str, k: usize) -> Option<usize> {
    bounded(a, b, k, Metric::Levenshtein)
}

/// Bounded distance under either metric; see [`levenshtein_bounded`].
pub fn bounded(a: &str, b: &str, k: usize, metric: Metric) -> Option<usize> {
    let la = a.chars().count();
    let lb = b.chars().count();
    if la.abs_diff(lb) > k {
        return None;
    }
    let mut dp = BoundedDistance::new(a, k, metric);
    for c in b.chars() {
        if !dp.push(c) {
            return None;
        }
    }
    dp.distance()
}

/// Restricted Damerau-Levenshtein (OSA) distance, keeping three rows.
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    damerau_chars(&chars(a), &chars(b))
}

pub(crate) fn damerau_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let width = b.len() + 1;
    let mut before: Vec<usize> = vec![0; width];
    let mut prev: Vec<usize> = (0..width).collect();
    let mut cur: Vec<usize> = vec![0; width];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..width {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(before[j - 2] + 1);
            }
            cur[j] = v;
        }
        // Rotate: before <- prev <- cur <- (recycled) before.
        std::mem::swap(&mut before, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Number of positions at which two equal-length strings differ.
pub fn hamming(a: &str, b: &str) -> Result<usize, DistanceError> {
    let left = a.chars().count();
    let right = b.chars().count();
    if left != right {
        return Err(DistanceError::UnequalLengths { left, right });
    }
    Ok(a.chars().zip(b.chars()).filter(|(x, y)| x != y).count())
}

/// Smallest Levenshtein distance from `pattern` to any prefix of `s`
/// (including the empty prefix and `s` itself).
///
/// This is the last column of the Wagner-Fischer matrix with `s` along the
/// rows: cell `(j, |pattern|)` is the distance from `pattern` to `s[..j]`.
pub fn prefix_distance(pattern: &str, s: &str) -> usize {
    let p = chars(pattern);
    let mut row: Vec<usize> = (0..=p.len()).collect();
    let mut best = row[p.len()];
    for (i, c) in s.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for j in 1..=p.len() {
            let up = row[j];
            row[j] = (diag + usize::from(p[j - 1] != c)).min(up + 1).min(row[j - 1] + 1);
            diag = up;
        }
        best = best.min(row[p.len()]);
    }
    best
}

/// `1 - d(a, b) / max(|a|, |b|)`; two empty strings are identical (1.0).
pub fn normalized_similarity(a: &str, b: &str, metric: Metric) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    membership(metric.distance(a, b), longest)
}

/// Membership degree for an edit distance `d` between strings whose longer
/// member has `longest` scalar values.
pub fn membership(d: usize, longest: usize) -> f64 {
    if longest == 0 {
        return 1.0;
    }
    1.0 - d as f64 / longest as f64
}

/// Incremental banded edit-distance DP against a fixed pattern.
///
/// Characters of the candidate are pushed one at a time; each push computes
/// one row of the matrix (pattern along the columns). [`truncate`] pops rows
/// so that a caller walking a sorted dictionary can reuse the rows of the
/// common prefix between consecutive terms.
///
/// Cell values above the bound are clamped to `k + 1`.
///
/// [`truncate`]: BoundedDistance::truncate
#[derive(Debug, Clone)]
pub struct BoundedDistance {
    pattern: Vec<char>,
    bound: u32,
    transpositions: bool,
    /// Row-major, `depth + 1` rows of `pattern.len() + 1` cells.
    rows: Vec<u32>,
    /// Minimum of each row.
    mins: Vec<u32>,
    input: Vec<char>,
}

impl BoundedDistance {
    pub fn new(pattern: &str, k: usize, metric: Metric) -> Self {
        Self::from_chars(chars(pattern), k, metric)
    }

    pub fn from_chars(pattern: Vec<char>, k: usize, metric: Metric) -> Self {
        let bound = k.min(1 << 30) as u32;
        let inf = bound + 1;
        let width = pattern.len() + 1;
        let first: Vec<u32> = (0..width)
            .map(|j| if j <= bound as usize { j as u32 } else { inf })
            .collect();
        let mut rows = Vec::with_capacity(width * 16);
        rows.extend_from_slice(&first);
        Self {
            pattern,
            bound,
            transpositions: metric == Metric::Damerau,
            rows,
            mins: vec![0],
            input: Vec::with_capacity(16),
        }
    }

    pub fn pattern_len(&self) -> usize {
        self.pattern.len()
    }

    /// Candidate characters pushed so far.
    pub fn input(&self) -> &[char] {
        &self.input
    }

    /// Number of candidate characters pushed so far.
    pub fn depth(&self) -> usize {
        self.input.len()
    }

    /// Whether some cell of the newest row is still within the bound.
    pub fn is_alive(&self) -> bool {
        self.mins[self.input.len()] <= self.bound
    }

    /// Smallest character not below `c` that could keep the next row within
    /// the bound, or `None` if there is none.
    ///
    /// While the newest row has slack every character qualifies and `c` comes
    /// straight back. Once its minimum reaches the bound, a character that
    /// matches no pattern character inside the next row's band (one column
    /// wider with transpositions) pushes every cell past the bound.
    pub fn next_viable(&self, c: char) -> Option<char> {
        let depth = self.input.len();
        let row_min = self.mins[depth];
        if row_min < self.bound {
            return Some(c);
        }
        if row_min > self.bound {
            return None;
        }
        let i = depth + 1;
        let k = self.bound as usize;
        let lo = i.saturating_sub(k).max(1);
        let hi = (i + k).min(self.pattern.len());
        if lo > hi {
            return None;
        }
        let from = if self.transpositions { lo.saturating_sub(2) } else { lo - 1 };
        self.pattern[from..hi].iter().copied().filter(|&p| p >= c).min()
    }

    /// Drop rows until only `depth` candidate characters remain.
    pub fn truncate(&mut self, depth: usize) {
        if depth >= self.input.len() {
            return;
        }
        self.input.truncate(depth);
        self.mins.truncate(depth + 1);
        self.rows.truncate((depth + 1) * (self.pattern.len() + 1));
    }

    /// Append one candidate character; returns [`is_alive`](Self::is_alive).
    pub fn push(&mut self, c: char) -> bool {
        let width = self.pattern.len() + 1;
        let bound = self.bound;
        let inf = bound + 1;
        let i = self.input.len() + 1;
        let k = bound as usize;

        let start = self.rows.len();
        self.rows.resize(start + width, inf);
        let (done, cur) = self.rows.split_at_mut(start);
        let prev = &done[start - width..];

        cur[0] = if i <= k { i as u32 } else { inf };
        let lo = i.saturating_sub(k).max(1);
        let hi = (i + k).min(width - 1);
        let mut row_min = cur[0];
        if lo <= hi {
            // Windows over columns lo-1..=hi so the loop runs without bounds checks.
            let pat = &self.pattern[lo - 1..hi];
            let diag = &prev[lo - 1..hi];
            let up = &prev[lo..=hi];
            let mut left = cur[lo - 1];
            let out = &mut cur[lo..=hi];
            for (((slot, &p), &d), &u) in out.iter_mut().zip(pat).zip(diag).zip(up) {
                let v = (u + 1).min(left + 1).min(d + u32::from(p != c)).min(inf);
                *slot = v;
                left = v;
                row_min = row_min.min(v);
            }
            if self.transpositions && i >= 2 {
                row_min = self.apply_transpositions(c, lo, hi, row_min);
            }
        }
        self.input.push(c);
        self.mins.push(row_min);
        row_min <= bound
    }

    // Second pass over the newest row for the OSA transposition case. A cell
    // lowered here can lower its right neighbours, so those are recomputed.
    fn apply_transpositions(&mut self, c: char, lo: usize, hi: usize, mut row_min: u32) -> u32 {
        let width = self.pattern.len() + 1;
        let inf = self.bound + 1;
        let i = self.input.len() + 1;
        let prev_c = self.input[i - 2];
        let start = self.rows.len() - width;
        let (done, cur) = self.rows.split_at_mut(start);
        let before = &done[start - 2 * width..start - width];
        let mut changed = false;
        for j in lo.max(2)..=hi {
            let via_left = if changed { cur[j - 1] + 1 } else { inf };
            let mut v = cur[j].min(via_left);
            if c == self.pattern[j - 2] && prev_c == self.pattern[j - 1] {
                v = v.min(before[j - 2] + 1);
            }
            if v < cur[j] {
                cur[j] = v;
                changed = true;
            } else {
                changed = false;
            }
            row_min = row_min.min(v);
        }
        row_min
    }

    /// Distance between the pattern and the pushed characters, if within the bound.
    pub fn distance(&self) -> Option<usize> {
        let width = self.pattern.len() + 1;
        let last = self.rows[self.rows.len() - 1];
        debug_assert_eq!(self.rows.len() % width, 0);
        (last <= self.bound).then_some(last as usize)
    }
}
