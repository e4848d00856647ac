//! Binary code matrices and their Hamming geometry.
//!
//! A code matrix has one row (codeword) per class and one column per worker.
//! Column `j` is the binary question put to worker `j`: a worker who believes
//! the class is `l` answers `a[l][j]`. Columns are serialized as integers
//! `r_j = sum_l a[l][j] * 2^l`, so row 0 is the least significant bit.

use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest supported number of classes (columns are stored as `u64`).
pub const MAX_CLASSES: usize = 64;

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// An `M x N` binary code matrix. Immutable once built.
#[derive(Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    m: usize,
    n: usize,
    columns: Vec<u64>,
    /// Packed rows, `words_for(n)` words each.
    rows: Vec<Vec<u64>>,
}

impl CodeMatrix {
    /// Builds a matrix from column integers; bit `l` of `cols[j]` is `a[l][j]`.
    pub fn from_column_ints(cols: &[u64], m: usize) -> Result<Self> {
        if !(2..=MAX_CLASSES).contains(&m) {
            return Err(Error::param(format!(
                "number of classes must be in 2..={MAX_CLASSES}, got {m}"
            )));
        }
        if cols.is_empty() {
            return Err(Error::param("a code matrix needs at least one column"));
        }
        if m < 64 {
            if let Some((index, &value)) = cols.iter().enumerate().find(|(_, &c)| c >> m != 0) {
                return Err(Error::InvalidColumn { index, value, m });
            }
        }
        let n = cols.len();
        let mut rows = vec![vec![0u64; words_for(n)]; m];
        for (j, &c) in cols.iter().enumerate() {
            for (l, row) in rows.iter_mut().enumerate() {
                if (c >> l) & 1 == 1 {
                    row[j / WORD] |= 1 << (j % WORD);
                }
            }
        }
        Ok(Self {
            m,
            n,
            columns: cols.to_vec(),
            rows,
        })
    }

    /// Builds a matrix from explicit rows of 0/1 entries.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut cols = vec![0u64; n];
        for (l, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => cols[j] |= 1 << l,
                    _ => return Err(Error::param(format!("entry ({l}, {j}) is {b}, not 0 or 1"))),
                }
            }
        }
        Self::from_column_ints(&cols, m)
    }

    pub fn to_column_ints(&self) -> Vec<u64> {
        self.columns.clone()
    }

    pub fn columns(&self) -> &[u64] {
        &self.columns
    }

    pub fn num_classes(&self) -> usize {
        self.m
    }

    pub fn num_workers(&self) -> usize {
        self.n
    }

    /// Entry `a[l][j]`.
    #[inline]
    pub fn bit(&self, l: usize, j: usize) -> u8 {
        ((self.columns[j] >> l) & 1) as u8
    }

    pub fn row(&self, l: usize) -> Vec<u8> {
        (0..self.n).map(|j| self.bit(l, j)).collect()
    }

    /// Number of ones in column `j`.
    pub fn column_weight(&self, j: usize) -> u32 {
        self.columns[j].count_ones()
    }

    /// A copy with column `j` replaced.
    pub fn with_column(&self, j: usize, value: u64) -> Result<Self> {
        let mut cols = self.columns.clone();
        cols[j] = value;
        Self::from_column_ints(&cols, self.m)
    }

    /// Columns repeated blockwise `times` times.
    pub fn concatenate(&self, times: usize) -> Result<Self> {
        if times == 0 {
            return Err(Error::param("concatenation count must be positive"));
        }
        let cols: Vec<u64> = std::iter::repeat_n(self.columns.iter().copied(), times)
            .flatten()
            .collect();
        Self::from_column_ints(&cols, self.m)
    }

    /// Pairs of identical rows. Decoding stays well defined (they tie), but
    /// such a matrix can never separate the two classes.
    pub fn duplicate_rows(&self) -> Vec<(usize, usize)> {
        let mut dups = Vec::new();
        for a in 0..self.m {
            for b in a + 1..self.m {
                if self.rows[a] == self.rows[b] {
                    dups.push((a, b));
                }
            }
        }
        dups
    }

    pub fn has_distinct_rows(&self) -> bool {
        self.duplicate_rows().is_empty()
    }

    /// Minimum pairwise Hamming distance between codewords.
    pub fn min_row_distance(&self) -> usize {
        let mut best = usize::MAX;
        for a in 0..self.m {
            for b in a + 1..self.m {
                let d: u32 = self.rows[a]
                    .iter()
                    .zip(&self.rows[b])
                    .map(|(x, y)| (x ^ y).count_ones())
                    .sum();
                best = best.min(d as usize);
            }
        }
        best
    }

    /// Short stable identifier of the matrix contents.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.m as u64).to_le_bytes());
        for c in &self.columns {
            hasher.update(c.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Hamming distance from answer vector `u` to row `l`, skipping missing
    /// answers.
    #[inline]
    pub fn row_distance(&self, l: usize, u: &AnswerVector) -> usize {
        self.rows[l]
            .iter()
            .zip(u.bits.iter().zip(&u.present))
            .map(|(r, (b, p))| ((r ^ b) & p).count_ones() as usize)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CodeMatrixFile::from(self)).expect("serializing plain integers")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CodeMatrixFile = serde_json::from_str(text)?;
        Self::from_column_ints(&file.columns, file.m)
    }
}

impl fmt::Debug for CodeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CodeMatrix")
            .field("m", &self.m)
            .field("columns", &self.columns)
            .finish()
    }
}

impl fmt::Display for CodeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in 0..self.m {
            let line: String = (0..self.n)
                .map(|j| if self.bit(l, j) == 1 { '1' } else { '0' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// On-disk form of a code matrix: `{"m": M, "columns": [..]}`, with an
/// optional free-form metadata block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeMatrixFile {
    pub m: usize,
    pub columns: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl From<&CodeMatrix> for CodeMatrixFile {
    fn from(a: &CodeMatrix) -> Self {
        Self {
            m: a.m,
            columns: a.columns.clone(),
            metadata: None,
        }
    }
}

impl TryFrom<CodeMatrixFile> for CodeMatrix {
    type Error = Error;

    fn try_from(file: CodeMatrixFile) -> Result<Self> {
        CodeMatrix::from_column_ints(&file.columns, file.m)
    }
}

impl Serialize for CodeMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CodeMatrixFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CodeMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = CodeMatrixFile::deserialize(d)?;
        CodeMatrix::try_from(file).map_err(serde::de::Error::custom)
    }
}

/// One worker answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    Zero,
    One,
    Missing,
}

impl Answer {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Answer::Zero
        } else {
            Answer::One
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Answer::Zero => '0',
            Answer::One => '1',
            Answer::Missing => '-',
        }
    }
}

/// Answers from `N` workers, each 0, 1 or missing, packed into words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AnswerVector {
    len: usize,
    bits: Vec<u64>,
    present: Vec<u64>,
}

impl AnswerVector {
    /// All answers missing.
    pub fn missing(len: usize) -> Self {
        Self {
            len,
            bits: vec![0; words_for(len)],
            present: vec![0; words_for(len)],
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut u = Self::missing(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            u.set(j, Answer::from_bit(b));
        }
        u
    }

    pub fn from_answers(answers: &[Answer]) -> Self {
        let mut u = Self::missing(answers.len());
        for (j, &a) in answers.iter().enumerate() {
            u.set(j, a);
        }
        u
    }

    /// The `N` low bits of `mask` as a fully present vector (bit `j` is
    /// worker `j`).
    pub fn from_mask(mask: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mut u = Self::missing(len);
        if len > 0 {
            let full = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            u.bits[0] = mask & full;
            u.present[0] = full;
        }
        u
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, j: usize) -> Answer {
        let (w, b) = (j / WORD, 1u64 << (j % WORD));
        if self.present[w] & b == 0 {
            Answer::Missing
        } else if self.bits[w] & b == 0 {
            Answer::Zero
        } else {
            Answer::One
        }
    }

    pub fn set(&mut self, j: usize, a: Answer) {
        assert!(j < self.len, "answer index {j} out of range {}", self.len);
        let (w, b) = (j / WORD, 1u64 << (j % WORD));
        match a {
            Answer::Missing => {
                self.present[w] &= !b;
                self.bits[w] &= !b;
            }
            Answer::Zero => {
                self.present[w] |= b;
                self.bits[w] &= !b;
            }
            Answer::One => {
                self.present[w] |= b;
                self.bits[w] |= b;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Answer> + '_ {
        (0..self.len).map(|j| self.get(j))
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().map(|p| p.count_ones() as usize).sum()
    }

    /// Every present answer flipped; missing answers stay missing.
    pub fn complement(&self) -> Self {
        Self {
            len: self.len,
            bits: self.bits.iter().zip(&self.present).map(|(b, p)| !b & p).collect(),
            present: self.present.clone(),
        }
    }
}

impl fmt::Debug for AnswerVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AnswerVector({self})")
    }
}

impl fmt::Display for AnswerVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.iter() {
            write!(f, "{}", a.symbol())?;
        }
        Ok(())
    }
}

impl std::str::FromStr for AnswerVector {
    type Err = Error;

    /// Parses `0`, `1` and `-` (missing), e.g. `"10-1"`.
    fn from_str(s: &str) -> Result<Self> {
        let answers = s
            .chars()
            .map(|c| match c {
                '0' => Ok(Answer::Zero),
                '1' => Ok(Answer::One),
                '-' => Ok(Answer::Missing),
                other => Err(Error::param(format!("invalid answer symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_answers(&answers))
    }
}

/// Hamming distance between `u` and a binary `row`, counting only positions
/// where `u` is present.
pub fn hamming_distance(u: &AnswerVector, row: &[u8]) -> Result<usize> {
    if u.len() != row.len() {
        return Err(Error::LengthMismatch {
            expected: row.len(),
            found: u.len(),
        });
    }
    Ok(row
        .iter()
        .enumerate()
        .filter(|&(j, &r)| match u.get(j) {
            Answer::Missing => false,
            Answer::Zero => r != 0,
            Answer::One => r == 0,
        })
        .count())
}

/// Rows attaining the minimum Hamming distance to a received vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionProfile {
    pub min_distance: usize,
    /// Sorted, never empty.
    pub argmin_rows: Vec<usize>,
}

impl DecisionProfile {
    /// Number of decision regions the received vector belongs to.
    pub fn tie_count(&self) -> usize {
        self.argmin_rows.len()
    }

    pub fn contains(&self, l: usize) -> bool {
        self.argmin_rows.binary_search(&l).is_ok()
    }
}

pub fn decision_profile(a: &CodeMatrix, u: &AnswerVector) -> Result<DecisionProfile> {
    if u.len() != a.num_workers() {
        return Err(Error::LengthMismatch {
            expected: a.num_workers(),
            found: u.len(),
        });
    }
    let mut min_distance = usize::MAX;
    let mut argmin_rows = Vec::new();
    for l in 0..a.num_classes() {
        let d = a.row_distance(l, u);
        if d < min_distance {
            min_distance = d;
            argmin_rows.clear();
        }
        if d == min_distance {
            argmin_rows.push(l);
        }
    }
    Ok(DecisionProfile {
        min_distance,
        argmin_rows,
    })
}

/// `log2(m)` when `m` is a power of two.
pub fn log2_exact(m: usize) -> Option<usize> {
    (m.is_power_of_two() && m >= 2).then(|| m.trailing_zeros() as usize)
}

/// The code whose Hamming decoding is bitwise majority voting: the workers
/// are split into `log2 M` equal groups and group `i` answers the `i`-th most
/// significant bit of the class index.
pub fn majority_equivalent_matrix(m: usize, n: usize) -> Result<CodeMatrix> {
    let bits = log2_exact(m).ok_or(Error::NotPowerOfTwo {
        what: "majority-equivalent matrix",
        m,
    })?;
    if n == 0 || n % bits != 0 {
        return Err(Error::Divisibility {
            what: "majority-equivalent matrix",
            n,
            divisor: bits,
        });
    }
    let per_group = n / bits;
    let cols: Vec<u64> = (0..n)
        .map(|j| {
            let shift = bits - 1 - j / per_group;
            (0..m)
                .filter(|l| (l >> shift) & 1 == 1)
                .fold(0u64, |acc, l| acc | 1 << l)
        })
        .collect();
    CodeMatrix::from_column_ints(&cols, m)
}

/// Number of ones in a balanced column of height `m`.
pub fn balanced_weight(m: usize) -> usize {
    m.div_ceil(2)
}

/// All columns of height `m` with exactly `balanced_weight(m)` ones, in
/// increasing order.
pub fn balanced_columns(m: usize) -> Vec<u64> {
    let w = balanced_weight(m) as u32;
    let limit = if m >= 64 { u64::MAX } else { (1u64 << m) - 1 };
    assert!(m <= 24, "enumerating balanced columns for M = {m} is impractical");
    (0..=limit).filter(|c| c.count_ones() == w).collect()
}

/// Draws one balanced column uniformly at random.
pub fn random_balanced_column<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> u64 {
    index::sample(rng, m, balanced_weight(m))
        .iter()
        .fold(0u64, |acc, l| acc | 1 << l)
}

/// Each column an independent uniformly random placement of `ceil(M/2)` ones.
pub fn random_balanced_matrix(m: usize, n: usize, seed: u64) -> Result<CodeMatrix> {
    if !(2..=MAX_CLASSES).contains(&m) || n == 0 {
        return Err(Error::param(format!("invalid matrix shape {m} x {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<u64> = (0..n).map(|_| random_balanced_column(m, &mut rng)).collect();
    CodeMatrix::from_column_ints(&cols, m)
}

/// Well-known matrices from the original study.
pub mod known {
    /// `M = 4`, `N = 10`, found by simulated annealing.
    pub const M4_N10: [u64; 10] = [5, 12, 3, 10, 12, 9, 9, 10, 9, 12];
    /// `M = 8`, `N = 15`, found by cyclic column replacement.
    pub const M8_N15: [u64; 15] = [
        150, 150, 90, 240, 240, 153, 102, 204, 204, 204, 170, 170, 170, 170, 170,
    ];
}
