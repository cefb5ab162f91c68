//! The Bernoulli(p) influence matrix θ, bit-packed in both row- and
//! column-major order.
//!
//! θ_{ij} = 1 means process j excites process i. Row i therefore lists the
//! processes influencing i and column j lists the processes j influences.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
    row_sums: Vec<u32>,
    col_sums: Vec<u32>,
    seed: Option<u64>,
}

impl Adjacency {
    /// Samples θ with i.i.d. Bernoulli(p) entries. Entry (i, j) depends only on
    /// `(seed, i, j)`.
    pub fn sample(n: usize, p: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph dimension must be >= 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("p must lie in [0, 1], got {p}")));
        }
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        if p > 0.0 {
            for i in 0..n {
                let key = rng::row_key(seed, i);
                let row = &mut rows[i * words..(i + 1) * words];
                for j in 0..n {
                    if rng::keyed_uniform(key, j) < p {
                        row[j / 64] |= 1 << (j % 64);
                    }
                }
            }
        }
        Ok(Self::from_row_words(n, rows, Some(seed)))
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if f(i, j) {
                    rows[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self::from_row_words(n, rows, None)
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| false)
    }

    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| true)
    }

    fn from_row_words(n: usize, rows: Vec<u64>, seed: Option<u64>) -> Self {
        let words = n.div_ceil(64);
        let mut cols = vec![0u64; n * words];
        let mut row_sums = vec![0u32; n];
        let mut col_sums = vec![0u32; n];
        for i in 0..n {
            let row = &rows[i * words..(i + 1) * words];
            row_sums[i] = row.iter().map(|w| w.count_ones()).sum();
            for_each_bit(row, |j| {
                cols[j * words + i / 64] |= 1 << (i % 64);
                col_sums[j] += 1;
            });
        }
        Adjacency { n, words, rows, cols, row_sums, col_sums, seed }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Σ_j θ_{ij}: the number of processes influencing i.
    pub fn row_sums(&self) -> &[u32] {
        &self.row_sums
    }

    /// Σ_i θ_{ij}: the number of processes j influences.
    pub fn col_sums(&self) -> &[u32] {
        &self.col_sums
    }

    pub fn row_bits(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn col_bits(&self, j: usize) -> &[u64] {
        &self.cols[j * self.words..(j + 1) * self.words]
    }

    pub fn max_row_sum(&self) -> u32 {
        self.row_sums.iter().copied().max().unwrap_or(0)
    }

    pub fn max_col_sum(&self) -> u32 {
        self.col_sums.iter().copied().max().unwrap_or(0)
    }

    /// Calls `f(i)` for every process i influenced by j.
    #[inline]
    pub fn for_each_influenced(&self, j: usize, f: impl FnMut(usize)) {
        for_each_bit(self.col_bits(j), f);
    }

    /// The `r`-th (0-based, increasing order) process influenced by j.
    pub fn nth_influenced(&self, j: usize, mut r: u32) -> Option<usize> {
        for (w, &word) in self.col_bits(j).iter().enumerate() {
            let c = word.count_ones();
            if r < c {
                let mut b = word;
                for _ in 0..r {
                    b &= b - 1;
                }
                return Some(w * 64 + b.trailing_zeros() as usize);
            }
            r -= c;
        }
        None
    }

    /// out_i = Σ_j θ_{ij} x_j.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        gather_product(&self.rows, self.words, x, out);
    }

    /// out_j = Σ_i θ_{ij} x_i.
    pub fn mul_vec_transposed(&self, x: &[f64], out: &mut [f64]) {
        gather_product(&self.cols, self.words, x, out);
    }

    /// The leading k × k block of θ.
    pub fn leading_block(&self, k: usize) -> Adjacency {
        assert!(k >= 1 && k <= self.n);
        let mut block = Adjacency::from_fn(k, |i, j| self.get(i, j));
        block.seed = self.seed;
        block
    }

    /// True when no process outside the first k influences one inside, so the
    /// first k processes form an autonomous subsystem.
    pub fn leading_block_is_closed(&self, k: usize) -> bool {
        (0..k.min(self.n)).all(|i| {
            let row = self.row_bits(i);
            row.iter().enumerate().all(|(w, &word)| {
                let lo = w * 64;
                if lo + 64 <= k {
                    true
                } else if lo >= k {
                    word == 0
                } else {
                    word >> (k - lo) == 0
                }
            })
        })
    }

    /// Writes the text form: a line with N, then N lines of N '0'/'1' characters.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.n)?;
        let mut line = String::with_capacity(self.n);
        for i in 0..self.n {
            line.clear();
            line.extend((0..self.n).map(|j| if self.get(i, j) { '1' } else { '0' }));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "missing dimension line".into() })??;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|e| Error::Parse { line: 1, msg: format!("bad dimension: {e}") })?;
        if n == 0 {
            return Err(Error::Parse { line: 1, msg: "dimension must be >= 1".into() });
        }
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for i in 0..n {
            let lineno = i + 2;
            let line = lines
                .next()
                .ok_or(Error::Parse { line: lineno, msg: "missing row".into() })??;
            let line = line.trim_end();
            if line.len() != n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {n} characters, found {}", line.len()),
                });
            }
            for (j, c) in line.bytes().enumerate() {
                match c {
                    b'1' => rows[i * words + j / 64] |= 1 << (j % 64),
                    b'0' => {}
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("unexpected character {:?}", c as char),
                        })
                    }
                }
            }
        }
        Ok(Self::from_row_words(n, rows, None))
    }
}

#[inline]
fn for_each_bit(words: &[u64], mut f: impl FnMut(usize)) {
    for (w, &word) in words.iter().enumerate() {
        let mut b = word;
        while b != 0 {
            f(w * 64 + b.trailing_zeros() as usize);
            b &= b - 1;
        }
    }
}

fn gather_product(bits: &[u64], words: usize, x: &[f64], out: &mut [f64]) {
    let n = out.len();
    debug_assert_eq!(x.len(), n);
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut s = 0.0;
        for_each_bit(&bits[i * words..(i + 1) * words], |j| s += x[j]);
        *o = s;
    }
}

/// Norm certificates for Ω_{N,K} and the row/column deviation event 𝒜_N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventFlags {
    pub omega_nk: bool,
    pub a_n: bool,
    pub a: f64,
    /// Λ |||A_N|||₁
    pub norm_1: f64,
    /// Λ |||A_N|||_∞
    pub norm_inf: f64,
    /// Λ (N/K) |||I_K A_N|||₁
    pub observed_rows_norm_1: f64,
    /// Λ (N/K) |||A_N I_K|||_∞
    pub observed_cols_norm_inf: f64,
    /// ‖L_N − p1‖₂ + ‖C_N − p1‖₂
    pub deviation: f64,
    /// N^{1/4}
    pub deviation_bound: f64,
}

/// Checks Ω_{N,K} through the r ∈ {1, ∞} norms (intermediate r follow by
/// interpolation) and the deviation event 𝒜_N.
pub fn check_events(adj: &Adjacency, lambda: f64, p: f64, k: usize) -> Result<EventFlags> {
    let n = adj.n();
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= K <= N, got K = {k}, N = {n}")));
    }
    let branching = lambda * p;
    if !(branching < 1.0) {
        return Err(Error::SupercriticalModel { branching });
    }
    let a = (1.0 + branching) / 2.0;
    let nf = n as f64;
    let kf = k as f64;

    let norm_1 = lambda * adj.max_col_sum() as f64 / nf;
    let norm_inf = lambda * adj.max_row_sum() as f64 / nf;

    let mut partial_cols = vec![0u32; n];
    for i in 0..k {
        for_each_bit(adj.row_bits(i), |j| partial_cols[j] += 1);
    }
    let observed_rows_norm_1 =
        lambda * partial_cols.iter().copied().max().unwrap_or(0) as f64 / kf;

    let mut max_partial_row = 0u32;
    for i in 0..n {
        let c: u32 = adj
            .row_bits(i)
            .iter()
            .enumerate()
            .map(|(w, &word)| {
                let lo = w * 64;
                if lo + 64 <= k {
                    word.count_ones()
                } else if lo >= k {
                    0
                } else {
                    (word & ((1u64 << (k - lo)) - 1)).count_ones()
                }
            })
            .sum();
        max_partial_row = max_partial_row.max(c);
    }
    let observed_cols_norm_inf = lambda * max_partial_row as f64 / kf;

    let l2 = |sums: &[u32]| -> f64 {
        sums.iter().map(|&s| (s as f64 / nf - p).powi(2)).sum::<f64>().sqrt()
    };
    let deviation = l2(adj.row_sums()) + l2(adj.col_sums());
    let deviation_bound = nf.powf(0.25);

    Ok(EventFlags {
        omega_nk: norm_1 <= a
            && norm_inf <= a
            && observed_rows_norm_1 <= a
            && observed_cols_norm_inf <= a,
        a_n: deviation <= deviation_bound,
        a,
        norm_1,
        norm_inf,
        observed_rows_norm_1,
        observed_cols_norm_inf,
        deviation,
        deviation_bound,
    })
}
